//! BPSK over AWGN: modulation, noise and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier recorded in run manifests for the per-frame generator.
pub const RNG_ALGORITHM: &str = "chacha12/seed_from_u64+stream/v1";

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("code rate {0} outside (0, 1)")]
    Rate(f64),
    #[error("Eb/N0 {0} dB is not finite")]
    Snr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub ebno_db: f64,
    pub rate: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(ebno_db: f64, rate: f64, seed: u64) -> Result<Self, ChannelError> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(ChannelError::Rate(rate));
        }
        if !ebno_db.is_finite() {
            return Err(ChannelError::Snr(ebno_db));
        }
        Ok(Self {
            ebno_db,
            rate,
            seed,
        })
    }

    /// Noise variance `1 / (2 R 10^(EbN0/10))`.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebno_db / 10.0))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2().sqrt()
    }
}

/// Independent generator for frame `frame` of stream `stream` under `seed`.
///
/// Substreams depend only on their indices, so results do not depend on how
/// frames are distributed over workers.
pub fn frame_rng(seed: u64, stream: u64, frame: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(frame);
    rng
}

/// Draws `n` standard normal samples.
pub fn standard_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `r_i = (1 - 2 c_i) + sigma * noise_i`.
pub fn modulate_with_noise(c: &[u8], sigma: f64, noise: &[f64]) -> Vec<f64> {
    c.iter()
        .zip(noise)
        .map(|(&bit, &w)| (1.0 - 2.0 * f64::from(bit & 1)) + sigma * w)
        .collect()
}

/// BPSK (0 -> +1, 1 -> -1) plus white Gaussian noise of variance `sigma2`.
pub fn transmit<R: Rng + ?Sized>(c: &[u8], cfg: &ChannelConfig, rng: &mut R) -> Vec<f64> {
    let noise = standard_noise(c.len(), rng);
    modulate_with_noise(c, cfg.sigma(), &noise)
}

/// Channel LLRs `2 r_i / sigma^2`.
pub fn llr(r: &[f64], cfg: &ChannelConfig) -> Vec<f64> {
    let scale = 2.0 / cfg.sigma2();
    r.iter().map(|&x| scale * x).collect()
}
