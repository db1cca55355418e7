//! Splittable seeding.
//!
//! Every random stream is addressed by a top-level seed plus a path of
//! indices (kernel entry, sample number, ...). Keys are mixed with SplitMix64
//! so streams depend only on their address, never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default top-level seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 0x5151_6b65_7200_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { key: splitmix(seed) }
    }

    /// Independent child stream for `index`.
    pub fn child(self, index: u64) -> Self {
        SeedStream {
            key: splitmix(self.key ^ splitmix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic pairwise sum; fixed association regardless of thread count.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Mean and standard error of the mean.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
