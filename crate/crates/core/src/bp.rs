//! Flooding sum-product belief propagation in the LLR domain.

use serde::{Deserialize, Serialize};

use crate::admm::DecodeResult;
use crate::matrix::ParityCheckMatrix;

/// Message magnitudes are clamped here before `tanh`.
pub const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpParams {
    pub max_iters: usize,
    pub early_stop: bool,
}

impl Default for BpParams {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            early_stop: true,
        }
    }
}

/// Reusable sum-product decoder for one parity-check matrix.
#[derive(Debug, Clone)]
pub struct BpDecoder<'a> {
    h: &'a ParityCheckMatrix,
    /// Start of each check's edges in the edge arrays.
    row_start: Vec<usize>,
    /// Variable of each edge.
    edge_var: Vec<usize>,
    /// Edges of each variable.
    var_edges: Vec<Vec<usize>>,
}

impl<'a> BpDecoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix) -> Self {
        let mut row_start = Vec::with_capacity(h.m() + 1);
        let mut edge_var = Vec::with_capacity(h.num_edges());
        let mut var_edges = vec![Vec::new(); h.n()];
        row_start.push(0);
        for row in h.rows() {
            for &i in row {
                var_edges[i].push(edge_var.len());
                edge_var.push(i);
            }
            row_start.push(edge_var.len());
        }
        Self {
            h,
            row_start,
            edge_var,
            var_edges,
        }
    }

    pub fn decode(&self, llr: &[f64], params: &BpParams) -> DecodeResult {
        assert_eq!(llr.len(), self.h.n(), "llr length must equal n");
        let edges = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&i| llr[i]).collect();
        let mut c2v = vec![0.0; edges];
        let mut posterior = llr.to_vec();
        let mut x_hat = hard_from_llr(&posterior);
        let mut scratch = Vec::new();
        let mut iters = 0;
        let mut parity_ok = false;

        while iters < params.max_iters.max(1) {
            iters += 1;
            for j in 0..self.h.m() {
                let (lo, hi) = (self.row_start[j], self.row_start[j + 1]);
                check_update(&v2c[lo..hi], &mut c2v[lo..hi], &mut scratch);
            }
            for (i, es) in self.var_edges.iter().enumerate() {
                let total = llr[i] + es.iter().map(|&e| c2v[e]).sum::<f64>();
                posterior[i] = total;
                for &e in es {
                    v2c[e] = total - c2v[e];
                }
            }
            x_hat = hard_from_llr(&posterior);
            parity_ok = self.h.check_parity(&x_hat);
            if params.early_stop && parity_ok {
                break;
            }
        }

        DecodeResult {
            v_final: x_hat.iter().map(|&b| f64::from(b)).collect(),
            x_hat,
            converged: parity_ok,
            iters,
            parity_ok,
            integral: true,
            ml_certified: None,
        }
    }
}

/// Extrinsic `2 atanh(prod tanh(m/2))` over the other edges of a check,
/// using prefix/suffix products. Both maps are evaluated on magnitudes with
/// the sign reattached, so they are exactly odd.
fn check_update(incoming: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
    let d = incoming.len();
    scratch.clear();
    scratch.extend(incoming.iter().map(|&m| {
        let t = (-m.abs().min(LLR_CLAMP)).exp();
        ((1.0 - t) / (1.0 + t)).copysign(m)
    }));
    let mut prefix = 1.0;
    for k in 0..d {
        out[k] = prefix;
        prefix *= scratch[k];
    }
    let mut suffix = 1.0;
    for k in (0..d).rev() {
        let p = out[k] * suffix;
        let a = p.abs();
        out[k] = if a == 0.0 {
            0.0
        } else {
            ((1.0 + a) / (1.0 - a)).ln().copysign(p)
        };
        suffix *= scratch[k];
    }
}

/// Bit 1 iff the LLR is negative; zero maps to 0.
fn hard_from_llr(l: &[f64]) -> Vec<u8> {
    l.iter().map(|&x| u8::from(x < 0.0)).collect()
}

pub fn bp_decode(h: &ParityCheckMatrix, llr: &[f64], params: &BpParams) -> DecodeResult {
    BpDecoder::new(h).decode(llr, params)
}
