//! Sparse binary parity-check matrices and the alist interchange format.

use std::fmt::Write as _;

use thiserror::Error;

/// Smallest check degree the three-variable decomposition accepts.
pub const MIN_ROW_DEGREE: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlistError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: index {index} out of range 1..={max}")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        max: usize,
    },
    #[error("line {line}: column lists disagree with row lists")]
    Inconsistent { line: usize },
    #[error("line {line}: row degree < 3 unsupported (got {degree})")]
    RowDegree { line: usize, degree: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("check {check}: variable index {index} out of range (n = {n})")]
    IndexOutOfRange {
        check: usize,
        index: usize,
        n: usize,
    },
    #[error("check {check}: variable {index} listed twice")]
    Duplicate { check: usize, index: usize },
    #[error("check {check}: row degree < 3 unsupported (got {degree})")]
    RowDegree { check: usize, degree: usize },
}

/// Sparse `m x n` binary parity-check matrix stored both row-wise and column-wise.
///
/// Index lists are 0-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-check variable lists. Lists are sorted; every
    /// check must have degree at least 3.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, MatrixError> {
        let mut rows = rows;
        for (check, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(MatrixError::Duplicate { check, index: w[0] });
                }
            }
            if let Some(&last) = row.last() {
                if last >= n {
                    return Err(MatrixError::IndexOutOfRange {
                        check,
                        index: last,
                        n,
                    });
                }
            }
            if row.len() < MIN_ROW_DEGREE {
                return Err(MatrixError::RowDegree {
                    check,
                    degree: row.len(),
                });
            }
        }
        let cols = transpose(n, &rows);
        Ok(Self { n, rows, cols })
    }

    /// Builds a matrix from a dense 0/1 description, one string per check.
    /// Whitespace is ignored, so `"1101 100"` is accepted.
    pub fn from_dense_rows(dense: &[&str]) -> Result<Self, MatrixError> {
        let parsed: Vec<Vec<u8>> = dense
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| u8::from(c == '1'))
                    .collect()
            })
            .collect();
        let n = parsed.iter().map(Vec::len).max().unwrap_or(0);
        let rows = parsed
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Self::from_rows(n, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn row(&self, check: usize) -> &[usize] {
        &self.rows[check]
    }

    pub fn col(&self, var: usize) -> &[usize] {
        &self.cols[var]
    }

    pub fn max_row_degree(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_col_degree(&self) -> usize {
        self.cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Design rate `(n - m) / n`, which equals the true rate for full-rank `H`.
    pub fn design_rate(&self) -> f64 {
        (self.n as f64 - self.m() as f64) / self.n as f64
    }

    /// True iff every check of `x` has even weight.
    pub fn check_parity(&self, x: &[u8]) -> bool {
        assert_eq!(x.len(), self.n, "word length must equal n");
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &i| acc ^ (x[i] & 1)) == 0)
    }

    /// Number of unsatisfied checks.
    pub fn syndrome_weight(&self, x: &[u8]) -> usize {
        self.rows
            .iter()
            .filter(|row| row.iter().fold(0u8, |acc, &i| acc ^ (x[i] & 1)) != 0)
            .count()
    }

    /// Parses the MacKay alist format. Indices are converted to 0-based and
    /// zero padding entries are dropped.
    pub fn from_alist(text: &str) -> Result<Self, AlistError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut next_numbers = |what: &str| -> Result<(usize, Vec<usize>), AlistError> {
            let (line, content) = lines.next().ok_or_else(|| AlistError::Malformed {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            })?;
            let nums = content
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AlistError::Malformed {
                    line,
                    msg: format!("{what}: {e}"),
                })?;
            Ok((line, nums))
        };

        let (line, header) = next_numbers("header \"n m\"")?;
        let [n, m] = header[..] else {
            return Err(AlistError::Malformed {
                line,
                msg: "header must be \"n m\"".into(),
            });
        };
        if n == 0 || m == 0 {
            return Err(AlistError::Malformed {
                line,
                msg: "n and m must be positive".into(),
            });
        }
        let (line, maxes) = next_numbers("max degrees")?;
        let [max_col, max_row] = maxes[..] else {
            return Err(AlistError::Malformed {
                line,
                msg: "expected \"max_col_deg max_row_deg\"".into(),
            });
        };
        let (col_deg_line, col_degs) = next_numbers("column degrees")?;
        if col_degs.len() != n {
            return Err(AlistError::Malformed {
                line: col_deg_line,
                msg: format!("expected {n} column degrees, found {}", col_degs.len()),
            });
        }
        let (row_deg_line, row_degs) = next_numbers("row degrees")?;
        if row_degs.len() != m {
            return Err(AlistError::Malformed {
                line: row_deg_line,
                msg: format!("expected {m} row degrees, found {}", row_degs.len()),
            });
        }

        let mut read_lists = |count: usize,
                              degs: &[usize],
                              max_deg: usize,
                              bound: usize,
                              what: &str|
         -> Result<Vec<(usize, Vec<usize>)>, AlistError> {
            let mut out = Vec::with_capacity(count);
            for (k, &deg) in degs.iter().enumerate().take(count) {
                let (line, nums) = next_numbers(what)?;
                if nums.len() > max_deg.max(deg) {
                    return Err(AlistError::Malformed {
                        line,
                        msg: format!("{what} {}: more than {max_deg} entries", k + 1),
                    });
                }
                let mut list = Vec::with_capacity(deg);
                for &idx in nums.iter().filter(|&&x| x != 0) {
                    if idx > bound {
                        return Err(AlistError::IndexOutOfRange {
                            line,
                            index: idx,
                            max: bound,
                        });
                    }
                    list.push(idx - 1);
                }
                if list.len() != deg {
                    return Err(AlistError::Malformed {
                        line,
                        msg: format!(
                            "{what} {}: declared degree {} but {} entries",
                            k + 1,
                            deg,
                            list.len()
                        ),
                    });
                }
                list.sort_unstable();
                if list.windows(2).any(|w| w[0] == w[1]) {
                    return Err(AlistError::Malformed {
                        line,
                        msg: format!("{what} {}: repeated index", k + 1),
                    });
                }
                out.push((line, list));
            }
            Ok(out)
        };

        let cols = read_lists(n, &col_degs, max_col, m, "column")?;
        let rows = read_lists(m, &row_degs, max_row, n, "row")?;

        for (line, row) in &rows {
            if row.len() < MIN_ROW_DEGREE {
                return Err(AlistError::RowDegree {
                    line: *line,
                    degree: row.len(),
                });
            }
        }
        let row_lists: Vec<Vec<usize>> = rows.iter().map(|(_, r)| r.clone()).collect();
        let derived = transpose(n, &row_lists);
        for ((line, col), want) in cols.iter().zip(&derived) {
            if col != want {
                return Err(AlistError::Inconsistent { line: *line });
            }
        }
        Ok(Self {
            n,
            rows: row_lists,
            cols: derived,
        })
    }

    /// Writes the matrix in alist format with zero padding.
    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let max_col = self.max_col_degree();
        let max_row = self.max_row_degree();
        let join = |v: &mut dyn Iterator<Item = usize>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{} {}", self.n, self.m());
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for (lists, width) in [(&self.cols, max_col), (&self.rows, max_row)] {
            for list in lists {
                let padded = list.iter().map(|&i| i + 1).chain(std::iter::repeat(0));
                let _ = writeln!(s, "{}", join(&mut padded.take(width)));
            }
        }
        s
    }
}

fn transpose(n: usize, rows: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut cols = vec![Vec::new(); n];
    for (j, row) in rows.iter().enumerate() {
        for &i in row {
            cols[i].push(j);
        }
    }
    cols
}

/// Systematic encoder over GF(2) derived from `H` by Gaussian elimination.
///
/// Codewords are produced by choosing the free (non-pivot) coordinates and
/// solving for the pivot coordinates. Works for rank-deficient `H`.
#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    words: usize,
    /// Reduced rows restricted to free columns, bit-packed over `0..n`.
    reduced: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    free: Vec<usize>,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let words = n.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|r| {
                let mut bits = vec![0u64; words];
                for &i in r {
                    bits[i / 64] |= 1 << (i % 64);
                }
                bits
            })
            .collect();

        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, p)| *a ^= p);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rows.truncate(rank);
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free = (0..n).filter(|&i| !is_pivot[i]).collect();
        for (row, &p) in rows.iter_mut().zip(&pivots) {
            row[p / 64] &= !(1u64 << (p % 64));
        }
        Self {
            n,
            words,
            reduced: rows,
            pivots,
            free,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Code dimension `k = n - rank(H)`.
    pub fn k(&self) -> usize {
        self.free.len()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Encodes `k` message bits placed on the free coordinates.
    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        assert_eq!(message.len(), self.k(), "message length must equal k");
        let mut x = vec![0u8; self.n];
        let mut packed = vec![0u64; self.words];
        for (&bit, &col) in message.iter().zip(&self.free) {
            x[col] = bit & 1;
            if bit & 1 == 1 {
                packed[col / 64] |= 1 << (col % 64);
            }
        }
        for (row, &p) in self.reduced.iter().zip(&self.pivots) {
            let parity = row
                .iter()
                .zip(&packed)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            x[p] = parity as u8;
        }
        x
    }

    /// Codeword basis: one generator row per free coordinate.
    pub fn basis(&self) -> Vec<Vec<u8>> {
        (0..self.k())
            .map(|j| {
                let mut msg = vec![0u8; self.k()];
                msg[j] = 1;
                self.encode(&msg)
            })
            .collect()
    }

    /// Uniformly random codeword.
    pub fn random_codeword<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let msg: Vec<u8> = (0..self.k()).map(|_| rng.random::<bool>() as u8).collect();
        self.encode(&msg)
    }
}
