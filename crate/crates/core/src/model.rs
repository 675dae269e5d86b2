//! Three-variable decomposition of a parity-check matrix and the implicit
//! constraint operator `A v <= b` it induces.
//!
//! Every check of degree `d` becomes a chain of `d - 2` three-variable checks
//! linked by `d - 3` auxiliary bits. Each three-variable check contributes a
//! 4-row block `T x <= w` to `A`, where `T` is [`STENCIL`] and `w` is
//! [`BLOCK_RHS`]. `A` is never stored: products go through the triple list
//! and the per-variable occurrence lists.

use thiserror::Error;

use crate::matrix::ParityCheckMatrix;

/// Rows of the 4x3 block stencil `T`.
pub const STENCIL: [[f64; 3]; 4] = [
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
];

/// Right-hand side `w` of one block.
pub const BLOCK_RHS: [f64; 4] = [0.0, 0.0, 0.0, 2.0];

/// Default cap on `n + gamma_a` for [`DecomposedModel::materialize_dense`].
pub const DENSE_CAP: usize = 2000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("dense materialization needs {needed} columns, cap is {cap}")]
    DenseCap { needed: usize, cap: usize },
    #[error("word has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("not a codeword: three-variable check {triple} has odd weight")]
    NotACodeword { triple: usize },
}

/// One three-variable parity check over extended-variable indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple(pub [usize; 3]);

/// Membership of an extended variable in a triple, at position `0..3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub triple: u32,
    pub pos: u8,
}

/// `i`-th row of `T` applied to the triple values `x`, summed in position order.
#[inline(always)]
pub(crate) fn stencil_row(row: usize, x: [f64; 3]) -> f64 {
    match row {
        0 => x[0] - x[1] - x[2],
        1 => -x[0] + x[1] - x[2],
        2 => -x[0] - x[1] + x[2],
        _ => x[0] + x[1] + x[2],
    }
}

/// Column `pos` of `T` dotted with a 4-entry block, summed in row order.
#[inline(always)]
pub(crate) fn stencil_col(pos: u8, s: &[f64]) -> f64 {
    // Multiplying by +/-1 is exact, so this matches the signed sum bit for bit
    // without branching on `pos`.
    let sg = &COL_SIGNS[pos as usize];
    sg[0] * s[0] + sg[1] * s[1] + sg[2] * s[2] + s[3]
}

const COL_SIGNS: [[f64; 3]; 3] = [[1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

/// Decomposed constraint system for one code. Immutable once built and safe
/// to share between decoders.
#[derive(Debug, Clone)]
pub struct DecomposedModel {
    h: ParityCheckMatrix,
    n_orig: usize,
    gamma_a: usize,
    triples: Vec<Triple>,
    occ_start: Vec<usize>,
    occ: Vec<Occurrence>,
    e: Vec<f64>,
    ab_offset: Vec<f64>,
}

impl DecomposedModel {
    /// Chains each check in ascending variable order. Auxiliary indices are
    /// allocated from `n` upward, check by check.
    pub fn decompose(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let mut triples = Vec::new();
        let mut next_aux = n;
        for row in h.rows() {
            let d = row.len();
            debug_assert!(d >= 3);
            if d == 3 {
                triples.push(Triple([row[0], row[1], row[2]]));
                continue;
            }
            let mut prev = next_aux;
            triples.push(Triple([row[0], row[1], prev]));
            next_aux += 1;
            for &x in &row[2..=d - 3] {
                let cur = next_aux;
                next_aux += 1;
                triples.push(Triple([prev, x, cur]));
                prev = cur;
            }
            triples.push(Triple([prev, row[d - 2], row[d - 1]]));
        }
        let n_ext = next_aux;

        let mut counts = vec![0usize; n_ext];
        for t in &triples {
            for &i in &t.0 {
                counts[i] += 1;
            }
        }
        let mut occ_start = Vec::with_capacity(n_ext + 1);
        occ_start.push(0);
        for c in &counts {
            occ_start.push(occ_start.last().unwrap() + c);
        }
        let mut fill = occ_start.clone();
        let mut occ = vec![Occurrence { triple: 0, pos: 0 }; occ_start[n_ext]];
        for (tau, t) in triples.iter().enumerate() {
            for (pos, &i) in t.0.iter().enumerate() {
                occ[fill[i]] = Occurrence {
                    triple: tau as u32,
                    pos: pos as u8,
                };
                fill[i] += 1;
            }
        }
        let e = counts.iter().map(|&c| 4.0 * c as f64).collect();
        let ab_offset = counts.iter().map(|&c| 2.0 * c as f64).collect();

        Self {
            h: h.clone(),
            n_orig: n,
            gamma_a: n_ext - n,
            triples,
            occ_start,
            occ,
            e,
            ab_offset,
        }
    }

    pub fn parity_matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    /// Code length `n`.
    pub fn n_orig(&self) -> usize {
        self.n_orig
    }

    /// Number of auxiliary variables.
    pub fn gamma_a(&self) -> usize {
        self.gamma_a
    }

    /// Number of three-variable checks.
    pub fn gamma_c(&self) -> usize {
        self.triples.len()
    }

    /// `n + gamma_a`.
    pub fn n_ext(&self) -> usize {
        self.n_orig + self.gamma_a
    }

    /// Number of rows of `A`, `4 * gamma_c`.
    pub fn n_rows(&self) -> usize {
        4 * self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn occurrences(&self, i: usize) -> &[Occurrence] {
        &self.occ[self.occ_start[i]..self.occ_start[i + 1]]
    }

    /// Column norms `diag(A^T A)`.
    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn e_min(&self) -> f64 {
        self.e.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `a_i^T b` for every extended variable.
    pub fn ab_offset(&self) -> &[f64] {
        &self.ab_offset
    }

    /// `b = 1 (x) w`.
    pub fn rhs(&self) -> Vec<f64> {
        BLOCK_RHS.repeat(self.triples.len())
    }

    /// Cost vector `q = [llr; 0]`.
    pub fn cost_vector(&self, llr: &[f64]) -> Vec<f64> {
        assert_eq!(llr.len(), self.n_orig, "llr length must equal n");
        let mut q = llr.to_vec();
        q.resize(self.n_ext(), 0.0);
        q
    }

    /// `a_j^T v` for global row `j = 4 * tau + row`.
    pub fn row_dot(&self, tau: usize, row: usize, v: &[f64]) -> f64 {
        let [i0, i1, i2] = self.triples[tau].0;
        stencil_row(row, [v[i0], v[i1], v[i2]])
    }

    /// `A v` for the whole system.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_ext());
        let mut out = Vec::with_capacity(self.n_rows());
        for t in &self.triples {
            let x = [v[t.0[0]], v[t.0[1]], v[t.0[2]]];
            out.extend((0..4).map(|row| stencil_row(row, x)));
        }
        out
    }

    /// `a_i^T s` for a length `4 * gamma_c` vector `s`, summed over the
    /// occurrence list in order.
    pub fn col_dot(&self, i: usize, s: &[f64]) -> f64 {
        let mut acc = 0.0;
        for o in self.occurrences(i) {
            let base = 4 * o.triple as usize;
            acc += stencil_col(o.pos, &s[base..base + 4]);
        }
        acc
    }

    /// `A^T s`.
    pub fn apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.n_rows());
        (0..self.n_ext()).map(|i| self.col_dot(i, s)).collect()
    }

    /// Explicit `A` (row-major, entries in {-1, 0, 1}) and `b`. Test oracle only.
    pub fn materialize_dense(&self, cap: usize) -> Result<DenseSystem, ModelError> {
        let cols = self.n_ext();
        if cols > cap {
            return Err(ModelError::DenseCap { needed: cols, cap });
        }
        let rows = self.n_rows();
        let mut a = vec![0i8; rows * cols];
        for (tau, t) in self.triples.iter().enumerate() {
            for (row, coeffs) in STENCIL.iter().enumerate() {
                for (pos, &i) in t.0.iter().enumerate() {
                    a[(4 * tau + row) * cols + i] = coeffs[pos] as i8;
                }
            }
        }
        Ok(DenseSystem {
            rows,
            cols,
            a,
            b: self.rhs(),
        })
    }

    /// Extends a codeword with the auxiliary bits of the chain, so that every
    /// triple of the result has even weight.
    pub fn aux_extend(&self, c: &[u8]) -> Result<Vec<u8>, ModelError> {
        if c.len() != self.n_orig {
            return Err(ModelError::Length {
                got: c.len(),
                expected: self.n_orig,
            });
        }
        let mut v = c.to_vec();
        v.resize(self.n_ext(), 0);
        // The chain defines each auxiliary at position 2 of the triple that
        // introduces it, before any later triple reads it.
        for t in &self.triples {
            let [a, b, u] = t.0;
            if u >= self.n_orig && a < u && b < u {
                v[u] = v[a] ^ v[b];
            }
        }
        match self.first_odd_triple(&v) {
            Some(triple) => Err(ModelError::NotACodeword { triple }),
            None => Ok(v),
        }
    }

    /// Index of the first triple with odd weight under the binary vector `v`.
    pub fn first_odd_triple(&self, v: &[u8]) -> Option<usize> {
        self.triples
            .iter()
            .position(|t| (v[t.0[0]] ^ v[t.0[1]] ^ v[t.0[2]]) & 1 == 1)
    }
}

/// Explicit constraint system produced by [`DecomposedModel::materialize_dense`].
#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<i8>,
    pub b: Vec<f64>,
}

impl DenseSystem {
    pub fn entry(&self, r: usize, c: usize) -> i8 {
        self.a[r * self.cols + c]
    }

    /// `A v`, accumulated in ascending column order.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = &self.a[r * self.cols..(r + 1) * self.cols];
                row.iter()
                    .zip(v)
                    .fold(0.0, |acc, (&a, &x)| acc + f64::from(a) * x)
            })
            .collect()
    }

    /// `A^T s`, accumulated in ascending row order.
    pub fn mul_transpose(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &sr) in s.iter().enumerate().take(self.rows) {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += f64::from(a) * sr;
            }
        }
        out
    }

    /// `A^T A`, row-major `cols x cols`.
    pub fn gram(&self) -> Vec<i64> {
        let mut g = vec![0i64; self.cols * self.cols];
        for r in 0..self.rows {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            let nz: Vec<usize> = (0..self.cols).filter(|&c| row[c] != 0).collect();
            for &i in &nz {
                for &j in &nz {
                    g[i * self.cols + j] += i64::from(row[i]) * i64::from(row[j]);
                }
            }
        }
        g
    }
}
