//! Small numerical helpers shared by the Monte Carlo code: compensated
//! summation, seeded per-sample RNG streams and sample statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for sample `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Independent RNG stream for sample `index`; draws never depend on the
/// order in which samples are evaluated.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean, unbiased standard deviation and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, std: f64::NAN, stderr: f64::NAN };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let std = if n > 1 {
            let ss = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, std, stderr: std / (n as f64).sqrt() }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    // Normal::new(0, 1) cannot fail.
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// One-sample Kolmogorov–Smirnov distance between the empirical CDF of
/// `values` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties: the empirical CDF jumps once over the whole run
        let x = sorted[i];
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == x {
            j += 1;
        }
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (j + 1) as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
        i = j + 1;
    }
    d
}
