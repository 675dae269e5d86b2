//! ML certificate for integral outputs, an exhaustive ML oracle for small
//! codes, and the codeword-relative mappings that couple a decode of any
//! codeword to a decode of the all-zeros word.

use thiserror::Error;

use crate::admm::{AdmmState, DecodeError, DecodeResult, DecoderParams, QpAdmmDecoder};
use crate::matrix::{Encoder, ParityCheckMatrix};
use crate::model::{DecomposedModel, ModelError, BLOCK_RHS};

/// Largest code dimension [`brute_force_ml`] will enumerate.
pub const MAX_ENUM_DIMENSION: usize = 20;

/// Fixed-point tolerance of the certificate iteration.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Cost gaps below this are treated as ML ties.
pub const TIE_GAP: f64 = 1e-9;

/// Per-iteration tolerance of [`symmetry_replay`].
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CertifyError {
    #[error("certificate needs an integral codeword output")]
    NotIntegral,
    #[error("code dimension {0} exceeds enumeration cap {MAX_ENUM_DIMENSION}")]
    TooLarge(usize),
    #[error("reference triple {triple} has odd pattern {pattern:?}")]
    InvalidPattern { triple: usize, pattern: [u8; 3] },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Both readings of the one-extra-iteration test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateVerdict {
    /// The extra iteration returned the input unchanged.
    pub fixed_point: bool,
    /// The LP objective `q^T v` did not decrease.
    pub objective_non_decreasing: bool,
}

/// Runs one sweep with `alpha = 0` from `v` (rounded), `z = max(0, b - A v)`,
/// `y = 0`, and reports whether `v` is reproduced.
pub fn certificate_verdict(
    model: &DecomposedModel,
    result: &DecodeResult,
    llr: &[f64],
    params: &DecoderParams,
) -> Result<CertificateVerdict, CertifyError> {
    if !result.integral || !result.parity_ok {
        return Err(CertifyError::NotIntegral);
    }
    let v: Vec<f64> = result.v_final.iter().map(|x| x.round()).collect();
    let lp = DecoderParams {
        alpha: 0.0,
        ..*params
    };
    let dec = QpAdmmDecoder::new(model, llr, lp)?;
    let av = model.apply(&v);
    let z = model
        .rhs()
        .iter()
        .zip(&av)
        .map(|(b, a)| (b - a).max(0.0))
        .collect();
    let mut st = AdmmState {
        v: v.clone(),
        z,
        y_scaled: vec![0.0; model.n_rows()],
        residual: f64::INFINITY,
        iter: 0,
    };
    dec.step(&mut st)?;
    let fixed_point =
        st.v.iter()
            .zip(&v)
            .all(|(a, b)| (a - b).abs() <= CERTIFICATE_TOL);
    let objective_non_decreasing = dec.objective(&st.v) >= dec.objective(&v) - CERTIFICATE_TOL;
    Ok(CertificateVerdict {
        fixed_point,
        objective_non_decreasing,
    })
}

/// ML certificate of an integral output: true iff one extra LP iteration
/// leaves it unchanged.
pub fn ml_certificate(
    model: &DecomposedModel,
    result: &DecodeResult,
    llr: &[f64],
    params: &DecoderParams,
) -> Result<bool, CertifyError> {
    certificate_verdict(model, result, llr, params).map(|v| v.fixed_point)
}

/// Exhaustive ML decision.
#[derive(Debug, Clone, PartialEq)]
pub struct MlSolution {
    pub codeword: Vec<u8>,
    pub cost: f64,
    /// Cost of the runner-up minus `cost`; infinite for a one-word code.
    pub gap: f64,
}

impl MlSolution {
    pub fn is_tie(&self) -> bool {
        self.gap < TIE_GAP
    }
}

/// Precomputed codebook for repeated exhaustive ML decisions.
#[derive(Debug, Clone)]
pub struct Codebook {
    words: Vec<Vec<u8>>,
}

impl Codebook {
    pub fn new(h: &ParityCheckMatrix) -> Result<Self, CertifyError> {
        let enc = Encoder::new(h);
        if enc.k() > MAX_ENUM_DIMENSION {
            return Err(CertifyError::TooLarge(enc.k()));
        }
        let basis = enc.basis();
        let mut words = Vec::with_capacity(1 << enc.k());
        let mut cur = vec![0u8; h.n()];
        words.push(cur.clone());
        // Gray-code walk over the span of the basis.
        for step in 1u64..(1u64 << enc.k()) {
            let flip = step.trailing_zeros() as usize;
            cur.iter_mut().zip(&basis[flip]).for_each(|(a, b)| *a ^= b);
            words.push(cur.clone());
        }
        words.sort();
        Ok(Self { words })
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    /// `argmin gamma^T x`; exact ties go to the lexicographically smallest word.
    pub fn ml(&self, llr: &[f64]) -> MlSolution {
        let mut best: Option<(f64, usize)> = None;
        let mut runner_up = f64::INFINITY;
        for (k, w) in self.words.iter().enumerate() {
            let cost: f64 = w
                .iter()
                .zip(llr)
                .filter(|(&b, _)| b == 1)
                .map(|(_, g)| g)
                .sum();
            match best {
                None => best = Some((cost, k)),
                Some((bc, _)) if cost < bc => {
                    runner_up = bc;
                    best = Some((cost, k));
                }
                Some(_) => runner_up = runner_up.min(cost),
            }
        }
        let (cost, k) = best.expect("codebook is never empty");
        MlSolution {
            codeword: self.words[k].clone(),
            cost,
            gap: runner_up - cost,
        }
    }
}

/// Exhaustive ML decoding over all codewords of `h`.
pub fn brute_force_ml(h: &ParityCheckMatrix, llr: &[f64]) -> Result<Vec<u8>, CertifyError> {
    Ok(Codebook::new(h)?.ml(llr).codeword)
}

/// Per-triple 4-entry permutations indexed by reference pattern
/// `[000, 110, 101, 011]`. Entry `k` of the output block is entry `perm[k]`
/// of the input block.
pub type SwapTable = [[usize; 4]; 4];

pub const SWAP_TABLE: SwapTable = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];

fn pattern_slot(p: [u8; 3]) -> Option<usize> {
    match p {
        [0, 0, 0] => Some(0),
        [1, 1, 0] => Some(1),
        [1, 0, 1] => Some(2),
        [0, 1, 1] => Some(3),
        _ => None,
    }
}

/// Relative-vector and block-permutation maps defined by a binary reference
/// vector `[c; u]` whose triples all have even weight.
#[derive(Debug, Clone)]
pub struct RelativeMap {
    v_ref: Vec<u8>,
    slots: Vec<usize>,
    table: SwapTable,
}

impl RelativeMap {
    pub fn new(model: &DecomposedModel, v_ref: Vec<u8>) -> Result<Self, CertifyError> {
        Self::with_table(model, v_ref, SWAP_TABLE)
    }

    /// Same as [`RelativeMap::new`] with a caller-supplied permutation table.
    pub fn with_table(
        model: &DecomposedModel,
        v_ref: Vec<u8>,
        table: SwapTable,
    ) -> Result<Self, CertifyError> {
        assert_eq!(
            v_ref.len(),
            model.n_ext(),
            "reference must be an extended vector"
        );
        let slots = model
            .triples()
            .iter()
            .enumerate()
            .map(|(tau, t)| {
                let pattern = [v_ref[t.0[0]], v_ref[t.0[1]], v_ref[t.0[2]]];
                pattern_slot(pattern).ok_or(CertifyError::InvalidPattern {
                    triple: tau,
                    pattern,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            v_ref,
            slots,
            table,
        })
    }

    /// Map for the codeword `c`, extended with its auxiliary bits.
    pub fn for_codeword(model: &DecomposedModel, c: &[u8]) -> Result<Self, CertifyError> {
        Self::new(model, model.aux_extend(c)?)
    }

    pub fn reference(&self) -> &[u8] {
        &self.v_ref
    }

    /// `v_i` where the reference bit is 0, `1 - v_i` where it is 1.
    pub fn relative_vector(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.v_ref)
            .map(|(&x, &bit)| if bit == 1 { 1.0 - x } else { x })
            .collect()
    }

    /// Permutes every 4-block of `s` according to its triple's pattern.
    pub fn map_constraint_vector(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), 4 * self.slots.len());
        let mut out = Vec::with_capacity(s.len());
        for (tau, &slot) in self.slots.iter().enumerate() {
            let block = &s[4 * tau..4 * tau + 4];
            out.extend(self.table[slot].iter().map(|&k| block[k]));
        }
        out
    }
}

/// First iteration at which the coupled decodes disagreed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMismatch {
    pub iter: usize,
    pub variable: &'static str,
    pub index: usize,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub iterations: usize,
    /// Largest one-sweep deviation over all iterations and all variables.
    pub max_deviation: f64,
    pub mismatch: Option<ReplayMismatch>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Runs the decode of codeword `c` (LLRs `llr`) alongside the decode of the
/// all-zeros word under the coupled LLRs `llr_i (1 - 2 c_i)`, checking after
/// every sweep that `v0 = R(v)`, `z0 = T(z)`, `y0 = T(y)` and that both
/// residuals agree.
///
/// After each comparison the all-zeros run is reset to the mapped state, so
/// every iteration tests one step of the induction from mapped iterates and
/// rounding differences are not amplified over many sweeps.
pub fn symmetry_replay(
    model: &DecomposedModel,
    c: &[u8],
    llr: &[f64],
    params: &DecoderParams,
) -> Result<ReplayReport, CertifyError> {
    let map = RelativeMap::for_codeword(model, c)?;
    replay_with_map(model, &map, c, llr, params)
}

/// [`symmetry_replay`] with an explicit map, e.g. one built from a corrupted
/// table for negative controls.
pub fn replay_with_map(
    model: &DecomposedModel,
    map: &RelativeMap,
    c: &[u8],
    llr: &[f64],
    params: &DecoderParams,
) -> Result<ReplayReport, CertifyError> {
    let llr0: Vec<f64> = llr
        .iter()
        .zip(c)
        .map(|(&g, &b)| if b == 1 { -g } else { g })
        .collect();
    let dec = QpAdmmDecoder::new(model, llr, *params)?;
    let dec0 = QpAdmmDecoder::new(model, &llr0, *params)?;
    let mut st = AdmmState::zeros(model);
    let mut st0 = AdmmState::zeros(model);
    let mut max_deviation: f64 = 0.0;

    let check = |iter: usize,
                 name: &'static str,
                 mapped: &[f64],
                 actual: &[f64],
                 max_dev: &mut f64|
     -> Option<ReplayMismatch> {
        let mut first = None;
        for (index, (a, b)) in mapped.iter().zip(actual).enumerate() {
            let d = (a - b).abs();
            *max_dev = max_dev.max(d);
            if first.is_none() && (d.is_nan() || d > REPLAY_TOL) {
                first = Some(ReplayMismatch {
                    iter,
                    variable: name,
                    index,
                    difference: d,
                });
            }
        }
        first
    };

    while st.iter < params.max_iters {
        let r = dec.step(&mut st)?;
        let r0 = dec0.step(&mut st0)?;
        let it = st.iter;
        let mismatch = check(
            it,
            "v",
            &map.relative_vector(&st.v),
            &st0.v,
            &mut max_deviation,
        )
        .or_else(|| {
            check(
                it,
                "z",
                &map.map_constraint_vector(&st.z),
                &st0.z,
                &mut max_deviation,
            )
        })
        .or_else(|| {
            check(
                it,
                "y",
                &map.map_constraint_vector(&st.y_scaled),
                &st0.y_scaled,
                &mut max_deviation,
            )
        })
        .or_else(|| check(it, "residual", &[r], &[r0], &mut max_deviation));
        if mismatch.is_some() {
            return Ok(ReplayReport {
                iterations: it,
                max_deviation,
                mismatch,
            });
        }
        st0.v = map.relative_vector(&st.v);
        st0.z = map.map_constraint_vector(&st.z);
        st0.y_scaled = map.map_constraint_vector(&st.y_scaled);
        if r < params.epsilon || r0 < params.epsilon {
            // Residuals agree within tolerance, so both stop here.
            break;
        }
    }
    Ok(ReplayReport {
        iterations: st.iter,
        max_deviation,
        mismatch: None,
    })
}

/// Minimizes `q^T v` over every binary `v` with `A v <= b` by enumerating
/// `{0,1}^(n + gamma_a)`. Returns the `x` part. Test oracle for tiny codes.
pub fn integer_program_ml(model: &DecomposedModel, llr: &[f64]) -> Option<Vec<u8>> {
    let n_ext = model.n_ext();
    assert!(n_ext <= 24, "enumeration over 2^{n_ext} points refused");
    let q = model.cost_vector(llr);
    let mut best: Option<(f64, Vec<u8>)> = None;
    for mask in 0u32..(1u32 << n_ext) {
        let v: Vec<f64> = (0..n_ext).map(|i| f64::from((mask >> i) & 1)).collect();
        let feasible = model
            .apply(&v)
            .iter()
            .enumerate()
            .all(|(j, &a)| a <= BLOCK_RHS[j % 4]);
        if !feasible {
            continue;
        }
        let cost: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
        let x: Vec<u8> = v[..model.n_orig()].iter().map(|&b| b as u8).collect();
        let better = match &best {
            None => true,
            Some((bc, bx)) => cost < *bc || (cost == *bc && x < *bx),
        };
        if better {
            best = Some((cost, x));
        }
    }
    best.map(|(_, x)| x)
}
