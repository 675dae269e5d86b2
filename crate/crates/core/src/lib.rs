//! Binary LDPC decoding by ADMM on a quadratically penalized relaxation of
//! the three-variable parity-check decomposition, with a sum-product
//! reference decoder and a Monte-Carlo simulation harness.

pub mod admm;
pub mod bp;
pub mod certify;
pub mod channel;
pub mod codes;
pub mod matrix;
pub mod model;
pub mod sim;

pub use admm::{decode, AdmmState, DecodeError, DecodeResult, DecoderParams, QpAdmmDecoder};
pub use bp::{bp_decode, BpDecoder, BpParams};
pub use certify::{brute_force_ml, ml_certificate, symmetry_replay, Codebook, RelativeMap};
pub use channel::ChannelConfig;
pub use matrix::{AlistError, Encoder, ParityCheckMatrix};
pub use model::{DecomposedModel, Triple};
pub use sim::{run_sim, scaling_bench, sweep, SimConfig, SimReport};
