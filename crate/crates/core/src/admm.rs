//! QP-ADMM decoder.
//!
//! Solves the box-relaxed, quadratically penalized decoding program
//!
//! ```text
//! min  q^T v - alpha/2 ||v - 0.5||^2   s.t.  A v + z = b,  v in [0,1],  z >= 0
//! ```
//!
//! by ADMM. Because `A^T A` is diagonal, each sweep is three element-wise
//! closed-form updates: a clipped scalar step for every `v_i`, a projection
//! onto the nonnegative half-line for every `z_j`, and a case split for the
//! scaled multiplier `y_j / mu`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{stencil_col, stencil_row, DecomposedModel, BLOCK_RHS};

/// `|v_i - round(v_i)|` at or below this counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("mu must be positive and finite, got {0}")]
    Mu(f64),
    #[error("alpha must be nonnegative and finite, got {0}")]
    Alpha(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("max_iters must be at least 1")]
    MaxIters,
    #[error("mu * e_min = {curvature} does not exceed alpha = {alpha}")]
    Curvature { curvature: f64, alpha: f64 },
    #[error("llr has length {got}, expected {expected}")]
    LlrLength { got: usize, expected: usize },
    #[error("llr[{0}] is not finite")]
    NonFiniteLlr(usize),
    #[error("iterate became non-finite at iteration {iter} (mu = {mu}, alpha = {alpha})")]
    NonFinite { iter: usize, mu: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub mu: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop as soon as the hard decision is a codeword and `v` is integral.
    pub early_exit: bool,
}

impl Default for DecoderParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            alpha: 0.9,
            epsilon: 1e-5,
            max_iters: 1000,
            early_exit: false,
        }
    }
}

impl DecoderParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    /// Checks the parameter ranges and the strong-convexity condition
    /// `mu * e_min > alpha` of the per-variable subproblems.
    pub fn validate(&self, model: &DecomposedModel) -> Result<(), DecodeError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(DecodeError::Mu(self.mu));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(DecodeError::Alpha(self.alpha));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(DecodeError::Epsilon(self.epsilon));
        }
        if self.max_iters == 0 {
            return Err(DecodeError::MaxIters);
        }
        let curvature = self.mu * model.e_min();
        if curvature <= self.alpha {
            return Err(DecodeError::Curvature {
                curvature,
                alpha: self.alpha,
            });
        }
        Ok(())
    }
}

/// ADMM iterate. `y_scaled` holds `y / mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub y_scaled: Vec<f64>,
    /// `||A v + z - b||^2` of the current iterate.
    pub residual: f64,
    pub iter: usize,
}

impl AdmmState {
    /// `v = 0`, `z = 0`, `y = 0`.
    pub fn zeros(model: &DecomposedModel) -> Self {
        let rows = model.n_rows();
        Self {
            v: vec![0.0; model.n_ext()],
            z: vec![0.0; rows],
            y_scaled: vec![0.0; rows],
            residual: f64::INFINITY,
            iter: 0,
        }
    }

    /// Unscaled multipliers `y = mu * (y / mu)`.
    pub fn multipliers(&self, mu: f64) -> Vec<f64> {
        self.y_scaled.iter().map(|&y| mu * y).collect()
    }
}

/// Outcome of one decode, shared by every decoder in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: Vec<u8>,
    pub v_final: Vec<f64>,
    pub converged: bool,
    pub iters: usize,
    pub parity_ok: bool,
    pub integral: bool,
    pub ml_certified: Option<bool>,
}

/// One row of the optional iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub objective: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Hard decision `v_i > 0.5`; exactly 0.5 maps to 0.
pub fn hard_decision(v: &[f64]) -> Vec<u8> {
    v.iter().map(|&x| u8::from(x > 0.5)).collect()
}

pub fn is_integral(v: &[f64]) -> bool {
    v.iter().all(|&x| (x - x.round()).abs() <= INTEGRALITY_TOL)
}

/// Decoder bound to one model and one received frame. Precomputes
/// `phi_i = (2 q_i + alpha) / (2 mu)` and `1 / theta_i = 1 / (e_i - alpha / mu)`.
#[derive(Debug, Clone)]
pub struct QpAdmmDecoder<'a> {
    model: &'a DecomposedModel,
    params: DecoderParams,
    q: Vec<f64>,
    phi: Vec<f64>,
    inv_theta: Vec<f64>,
}

impl<'a> QpAdmmDecoder<'a> {
    pub fn new(
        model: &'a DecomposedModel,
        llr: &[f64],
        params: DecoderParams,
    ) -> Result<Self, DecodeError> {
        params.validate(model)?;
        if llr.len() != model.n_orig() {
            return Err(DecodeError::LlrLength {
                got: llr.len(),
                expected: model.n_orig(),
            });
        }
        if let Some(i) = llr.iter().position(|x| !x.is_finite()) {
            return Err(DecodeError::NonFiniteLlr(i));
        }
        let q = model.cost_vector(llr);
        let phi = q
            .iter()
            .map(|&qi| (2.0 * qi + params.alpha) / (2.0 * params.mu))
            .collect();
        let inv_theta = model
            .e()
            .iter()
            .map(|&e| 1.0 / (e - params.alpha / params.mu))
            .collect();
        Ok(Self {
            model,
            params,
            q,
            phi,
            inv_theta,
        })
    }

    pub fn params(&self) -> &DecoderParams {
        &self.params
    }

    pub fn model(&self) -> &DecomposedModel {
        self.model
    }

    /// `q^T v - alpha/2 ||v - 0.5||^2`.
    pub fn objective(&self, v: &[f64]) -> f64 {
        let lin: f64 = self.q.iter().zip(v).map(|(q, x)| q * x).sum();
        let pen: f64 = v.iter().map(|x| (x - 0.5) * (x - 0.5)).sum();
        lin - 0.5 * self.params.alpha * pen
    }

    /// v-update for the listed variables. Each `v_i` reads only `z` and
    /// `y / mu`, so the order of `indices` does not matter.
    pub fn update_v<I: IntoIterator<Item = usize>>(&self, st: &mut AdmmState, indices: I) {
        for i in indices {
            let mut acc = 0.0;
            for o in self.model.occurrences(i) {
                let base = 4 * o.triple as usize;
                let block = [
                    st.z[base] + st.y_scaled[base],
                    st.z[base + 1] + st.y_scaled[base + 1],
                    st.z[base + 2] + st.y_scaled[base + 2],
                    st.z[base + 3] + st.y_scaled[base + 3],
                ];
                acc += stencil_col(o.pos, &block);
            }
            let target = (self.model.ab_offset()[i] - acc - self.phi[i]) * self.inv_theta[i];
            st.v[i] = target.clamp(0.0, 1.0);
        }
    }

    /// v-update for every variable. Streams the constraint blocks in triple
    /// order; each variable accumulates its terms in occurrence order, so
    /// the result equals [`Self::update_v`] bit for bit.
    pub fn update_v_all(&self, st: &mut AdmmState) {
        let mut acc = vec![0.0; self.model.n_ext()];
        for (tau, t) in self.model.triples().iter().enumerate() {
            let base = 4 * tau;
            let block = [
                st.z[base] + st.y_scaled[base],
                st.z[base + 1] + st.y_scaled[base + 1],
                st.z[base + 2] + st.y_scaled[base + 2],
                st.z[base + 3] + st.y_scaled[base + 3],
            ];
            for (pos, &i) in t.0.iter().enumerate() {
                acc[i] += stencil_col(pos as u8, &block);
            }
        }
        let offset = self.model.ab_offset();
        for (i, v) in st.v.iter_mut().enumerate() {
            *v = ((offset[i] - acc[i] - self.phi[i]) * self.inv_theta[i]).clamp(0.0, 1.0);
        }
    }

    /// z- and scaled y-updates for all rows, returning `||A v + z - b||^2`
    /// of the updated iterate.
    pub fn update_z_y(&self, st: &mut AdmmState) -> f64 {
        // One partial sum per stencil row, combined at the end.
        let mut lanes = [0.0; 4];
        let blocks =
            st.z.chunks_exact_mut(4)
                .zip(st.y_scaled.chunks_exact_mut(4));
        for (t, (z, y)) in self.model.triples().iter().zip(blocks) {
            let x = [st.v[t.0[0]], st.v[t.0[1]], st.v[t.0[2]]];
            let av = [
                stencil_row(0, x),
                stencil_row(1, x),
                stencil_row(2, x),
                stencil_row(3, x),
            ];
            for row in 0..4 {
                let b = BLOCK_RHS[row];
                let y_old = y[row];
                let z_hat = b - av[row] - y_old;
                let z_new = z_hat.max(0.0);
                let y_new = (-z_hat).max(0.0);
                let r = av[row] + z_new - b;
                debug_assert!(
                    (y_new - (y_old + r)).abs() <= 1e-9 * (1.0 + y_old.abs() + av[row].abs()),
                    "scaled multiplier update disagrees with y + mu (Av + z - b)"
                );
                z[row] = z_new;
                y[row] = y_new;
                lanes[row] += r * r;
            }
        }
        (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
    }

    /// One full sweep: all `v`, then all `z`, then all `y / mu`.
    pub fn step(&self, st: &mut AdmmState) -> Result<f64, DecodeError> {
        self.update_v_all(st);
        let residual = self.update_z_y(st);
        st.iter += 1;
        st.residual = residual;
        if !residual.is_finite() {
            return Err(DecodeError::NonFinite {
                iter: st.iter,
                mu: self.params.mu,
                alpha: self.params.alpha,
            });
        }
        Ok(residual)
    }

    /// Iterates from `st` until the residual drops below `epsilon` or
    /// `max_iters` sweeps have run.
    pub fn run(
        &self,
        st: &mut AdmmState,
        mut trace: Option<&mut Vec<TraceRow>>,
    ) -> Result<DecodeResult, DecodeError> {
        let mut converged = false;
        while st.iter < self.params.max_iters {
            let residual = self.step(st)?;
            if let Some(rows) = trace.as_deref_mut() {
                rows.push(TraceRow {
                    iter: st.iter,
                    residual,
                    objective: self.objective(&st.v),
                });
            }
            if residual < self.params.epsilon {
                converged = true;
                break;
            }
            if self.params.early_exit
                && is_integral(&st.v)
                && self.model.first_odd_triple(&hard_decision(&st.v)).is_none()
            {
                break;
            }
        }
        Ok(self.result(st, converged))
    }

    fn result(&self, st: &AdmmState, converged: bool) -> DecodeResult {
        let n = self.model.n_orig();
        let x_hat = hard_decision(&st.v[..n]);
        let parity_ok = self.model.parity_matrix().check_parity(&x_hat);
        DecodeResult {
            x_hat,
            v_final: st.v.clone(),
            converged,
            iters: st.iter,
            parity_ok,
            integral: is_integral(&st.v),
            ml_certified: None,
        }
    }
}

/// Runs the decoder from the all-zeros `z`, `y` start.
pub fn decode(
    model: &DecomposedModel,
    llr: &[f64],
    params: &DecoderParams,
) -> Result<DecodeResult, DecodeError> {
    decode_with_state(model, llr, params).map(|(r, _)| r)
}

/// Like [`decode`], also returning the final iterate.
pub fn decode_with_state(
    model: &DecomposedModel,
    llr: &[f64],
    params: &DecoderParams,
) -> Result<(DecodeResult, AdmmState), DecodeError> {
    let dec = QpAdmmDecoder::new(model, llr, *params)?;
    let mut st = AdmmState::zeros(model);
    let res = dec.run(&mut st, None)?;
    Ok((res, st))
}

/// Like [`decode`], recording `(iter, residual, objective)` after each sweep.
pub fn decode_traced(
    model: &DecomposedModel,
    llr: &[f64],
    params: &DecoderParams,
) -> Result<(DecodeResult, Vec<TraceRow>), DecodeError> {
    let dec = QpAdmmDecoder::new(model, llr, *params)?;
    let mut st = AdmmState::zeros(model);
    let mut rows = Vec::new();
    let res = dec.run(&mut st, Some(&mut rows))?;
    Ok((res, rows))
}

/// `||A v + z - b||^2` recomputed from scratch.
pub fn residual(model: &DecomposedModel, st: &AdmmState) -> f64 {
    let mut acc = 0.0;
    for tau in 0..model.gamma_c() {
        for (row, &b) in BLOCK_RHS.iter().enumerate() {
            let r = model.row_dot(tau, row, &st.v) + st.z[4 * tau + row] - b;
            acc += r * r;
        }
    }
    acc
}

/// Checkable consequences of stationarity at a limit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityReport {
    /// `max_j max(0, -y_j)`.
    pub multiplier_violation: f64,
    /// `|y^T z|`.
    pub complementary_slackness: f64,
    /// `||A v + z - b||^2`.
    pub residual: f64,
    /// Smallest multiplier `min_j y_j`.
    pub min_multiplier: f64,
}

impl StationarityReport {
    pub fn within(&self, tol: f64) -> bool {
        self.multiplier_violation <= tol
            && self.complementary_slackness <= tol
            && self.residual <= tol
    }
}

pub fn stationarity_report(
    model: &DecomposedModel,
    st: &AdmmState,
    params: &DecoderParams,
) -> StationarityReport {
    let y = st.multipliers(params.mu);
    let min_multiplier = y.iter().copied().fold(f64::INFINITY, f64::min);
    let multiplier_violation = y.iter().map(|&yj| (-yj).max(0.0)).fold(0.0, f64::max);
    let complementary_slackness = y.iter().zip(&st.z).map(|(a, b)| a * b).sum::<f64>().abs();
    StationarityReport {
        multiplier_violation,
        complementary_slackness,
        residual: residual(model, st),
        min_multiplier,
    }
}
