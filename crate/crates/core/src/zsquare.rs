//! Exact analysis of `Z^2` counted in dilated squares centred on the
//! diagonal point `(x, x)`.
//!
//! The count in `[x - t, x + t]^2` is `c^2` with
//! `c = floor(t + x) - ceil(-t + x) + 1`, so the normalised error
//! `(c^2 - 4t^2) / t` is within `1/t` of the sawtooth
//! `Delta(t, x) = 4 (c - 2t)`. Under a random dilation `Delta` has the limit
//! law `beta`: with `y` the gap between the two phase offsets it is the
//! mixture of `U[-4y, 4y]` (weight `y`) and `U[-4(1-y), 4(1-y)]`
//! (weight `1 - y`), whose moments are
//! `a_k = 4^k (1 + (-1)^k) (y^{k+1} + (1-y)^{k+1}) / (2(k+1))`.

use rayon::prelude::*;

use crate::experiments::{sample_t, DensitySpec};
use crate::error::{LatlabError, Result};
use crate::numeric::{compensated_sum, ks_distance, SampleStats};

/// Phase offsets of the diagonal translation `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSquarePhase {
    pub x: f64,
    /// First `t >= 0` with `t + x` an integer.
    pub t10: f64,
    /// First `t >= 0` with `-t + x` an integer.
    pub t20: f64,
    /// `|t20 - t10|`, in `[0, 1)`.
    pub y: f64,
}

pub fn phase_offsets(x: f64) -> ZSquarePhase {
    let t10 = (-x).rem_euclid(1.0);
    let t20 = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    let wrap = |v: f64| if v >= 1.0 { 0.0 } else { v };
    let (t10, t20) = (wrap(t10), wrap(t20));
    ZSquarePhase { x, t10, t20, y: (t20 - t10).abs() }
}

fn side_count(t: f64, x: f64) -> f64 {
    (t + x).floor() - (-t + x).ceil() + 1.0
}

/// `4 (floor(t + x) - ceil(-t + x) + 1 - 2t)`, always in `[-4, 4]`.
pub fn delta_sawtooth(t: f64, x: f64) -> f64 {
    4.0 * (side_count(t, x) - 2.0 * t)
}

/// `(c^2 - 4t^2) / t`, the normalised counting error of `Z^2` in
/// `[x - t, x + t]^2`. Written as `(c - 2t)^2 / t + Delta` so that the gap to
/// [`delta_sawtooth`] is never negative in floating point.
pub fn r_over_t_exact(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LatlabError::Domain(format!("t must be positive, got {t}")));
    }
    let g = side_count(t, x) - 2.0 * t;
    Ok(g * g / t + 4.0 * g)
}

/// The closed-form moment `a_k(y)`.
pub fn limit_moment(k: u32, y: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let k1 = (k + 1) as i32;
    4f64.powi(k as i32) * (y.powi(k1) + (1.0 - y).powi(k1)) / (k + 1) as f64
}

/// The limit law as a two-component uniform mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMixture {
    y: f64,
}

impl BetaMixture {
    pub fn new(y: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&y) {
            return Err(LatlabError::Domain(format!("phase gap must lie in [0, 1), got {y}")));
        }
        Ok(Self { y })
    }

    pub fn for_x(x: f64) -> Self {
        Self { y: phase_offsets(x).y }
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// `(weight, half-width)` of the two uniform components.
    pub fn components(&self) -> [(f64, f64); 2] {
        [(self.y, 4.0 * self.y), (1.0 - self.y, 4.0 * (1.0 - self.y))]
    }

    /// `E Z^k`, integrating each uniform component directly.
    pub fn moment(&self, k: u32) -> f64 {
        self.components()
            .iter()
            .filter(|(w, h)| *w > 0.0 && *h > 0.0)
            .map(|&(w, h)| {
                let k1 = (k + 1) as i32;
                w * (h.powi(k1) - (-h).powi(k1)) / ((k + 1) as f64 * 2.0 * h)
            })
            .sum()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.components()
            .iter()
            .filter(|(w, h)| *w > 0.0 && *h > 0.0)
            .map(|&(w, h)| w * ((z + h) / (2.0 * h)).clamp(0.0, 1.0))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

/// CDF of `beta` for phase gap `y`.
pub fn beta_cdf(z: f64, y: f64) -> f64 {
    BetaMixture { y: y.clamp(0.0, 1.0 - f64::EPSILON) }.cdf(z)
}

/// One empirical moment against its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentComparison {
    pub k: u32,
    pub limit: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub abs_err: f64,
}

/// Empirical sawtooth statistics under a random dilation.
#[derive(Debug, Clone, PartialEq)]
pub struct SawtoothReport {
    pub x: f64,
    pub y: f64,
    pub big_t: f64,
    pub n: usize,
    pub ks: f64,
    pub moments: Vec<MomentComparison>,
}

impl SawtoothReport {
    pub fn moment(&self, k: u32) -> Option<&MomentComparison> {
        self.moments.iter().find(|m| m.k == k)
    }
}

/// Draw `n` dilations `t` from `rho` scaled to `[0, big_t]` and compare
/// `Delta(t, x)` with `beta`.
pub fn empirical_vs_beta(
    x: f64,
    big_t: f64,
    n: usize,
    rho: &DensitySpec,
    seed: u64,
    ks: &[u32],
) -> Result<SawtoothReport> {
    if n < 100 {
        return Err(LatlabError::Domain(format!("need at least 100 samples, got {n}")));
    }
    let ts = sample_t(rho, big_t, n, seed)?;
    let values: Vec<f64> = ts.par_iter().map(|&t| delta_sawtooth(t, x)).collect();
    let mixture = BetaMixture::for_x(x);
    let ks_dist = ks_distance(&values, |z| mixture.cdf(z));
    let moments = ks
        .iter()
        .map(|&k| {
            let powers: Vec<f64> = values.iter().map(|v| v.powi(k as i32)).collect();
            let stats = SampleStats::of(&powers);
            let limit = limit_moment(k, mixture.y());
            MomentComparison { k, limit, empirical: stats.mean, stderr: stats.stderr, abs_err: (stats.mean - limit).abs() }
        })
        .collect();
    Ok(SawtoothReport { x, y: mixture.y(), big_t, n, ks: ks_dist, moments })
}

/// Mean of `Delta(t, x)^k` over a sample of dilations.
pub fn sawtooth_moment(ts: &[f64], x: f64, k: u32) -> f64 {
    compensated_sum(ts.iter().map(|&t| delta_sawtooth(t, x).powi(k as i32))) / ts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{count_error, count_points, RectWindow, TorusPoint};
    use crate::lattice::LatticeBasis;
    use crate::numeric::stream_rng;
    use rand::Rng;

    #[test]
    fn phase_examples() {
        let p = phase_offsets(0.0);
        assert_eq!((p.t10, p.t20, p.y), (0.0, 0.0, 0.0));
        let p = phase_offsets(0.25);
        assert_eq!((p.t10, p.t20, p.y), (0.75, 0.25, 0.5));
        let p = phase_offsets(3.7);
        assert!((p.t10 - 0.3).abs() < 1e-12 && (p.t20 - 0.7).abs() < 1e-12 && (p.y - 0.4).abs() < 1e-12);
        assert!((phase_offsets(0.4).y - 0.2).abs() < 1e-12);
        // definitions: t10 + x and -t20 + x are integers
        for x in [-2.3, 0.1, 5.55] {
            let p = phase_offsets(x);
            assert!(((p.t10 + x).round() - (p.t10 + x)).abs() < 1e-12);
            assert!(((x - p.t20).round() - (x - p.t20)).abs() < 1e-12);
            assert!((0.0..1.0).contains(&p.y));
        }
    }

    #[test]
    fn sawtooth_examples() {
        assert_eq!(delta_sawtooth(0.25, 0.0), 2.0);
        assert_eq!(delta_sawtooth(1.0, 0.0), 4.0);
        assert_eq!(delta_sawtooth(0.75, 0.25), 2.0);
        assert_eq!(r_over_t_exact(2.5, 0.0).unwrap(), 0.0);
        assert_eq!(r_over_t_exact(2.0, 0.0).unwrap(), 4.5);
        assert!(r_over_t_exact(0.0, 0.0).is_err());
        let e = count_error(&LatticeBasis::zsquare(), RectWindow::square(), 2.0, &TorusPoint::raw(&LatticeBasis::zsquare(), [0.0, 0.0])).unwrap();
        assert_eq!(e / 2.0, 4.5);
    }

    #[test]
    fn envelope_holds_exactly() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..100_000 {
            let t = rng.gen_range(1.0..1e4);
            let x = rng.gen::<f64>();
            let d = delta_sawtooth(t, x);
            let gap = r_over_t_exact(t, x).unwrap() - d;
            assert!((-4.0..=4.0).contains(&d));
            assert!(gap >= 0.0 && gap <= 1.0 / t, "t={t} x={x} gap={gap}");
        }
    }

    #[test]
    fn agrees_with_counting() {
        let z = LatticeBasis::zsquare();
        let mut rng = stream_rng(2, 0);
        for _ in 0..1000 {
            let t = rng.gen_range(0.5..300.0);
            let x = rng.gen_range(-3.0..3.0);
            let e = count_error(&z, RectWindow::square(), t, &TorusPoint::raw(&z, [x, x])).unwrap();
            let r = r_over_t_exact(t, x).unwrap() * t;
            assert!((r - e).abs() <= 1e-12 * (4.0 * t * t), "t={t} x={x}: {r} vs {e}");
        }
    }

    #[test]
    fn rescaling_reduces_to_unit_square() {
        let z = LatticeBasis::zsquare();
        let mut rng = stream_rng(3, 0);
        for a in [0.5, 2.0, 3.7] {
            let w = RectWindow::new(a, a).unwrap();
            for _ in 0..200 {
                let t = rng.gen_range(0.5..100.0);
                let x = rng.gen::<f64>();
                let p = TorusPoint::raw(&z, [x, x]);
                assert_eq!(count_points(&z, w, t, &p).unwrap(), count_points(&z, RectWindow::square(), t * a, &p).unwrap());
                let scaled = count_error(&z, w, t, &p).unwrap();
                let unit = count_error(&z, RectWindow::square(), t * a, &p).unwrap();
                assert!((scaled - unit).abs() <= 1e-12 * (t * a).powi(2), "{scaled} {unit}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        for y in [0.0, 0.3, 0.5] {
            assert_eq!(limit_moment(0, y), 1.0);
            assert_eq!(limit_moment(1, y), 0.0);
        }
        assert!((limit_moment(2, 0.5) - 4.0 / 3.0).abs() < 1e-15);
        assert!((limit_moment(2, 0.0) - 16.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_moments_match_closed_form() {
        for i in 0..=5 {
            let y = i as f64 / 10.0;
            let m = BetaMixture::new(y).unwrap();
            let w: f64 = m.components().iter().map(|c| c.0).sum();
            assert!((w - 1.0).abs() < 1e-15);
            for k in 0..=12 {
                assert!((m.moment(k) - limit_moment(k, y)).abs() <= 1e-10 * limit_moment(k, y).max(1.0), "y={y} k={k}");
            }
        }
    }

    #[test]
    fn mixture_is_the_law_of_the_sawtooth() {
        // with t uniform over whole periods, Delta(t, x) is the mixture:
        // compare CDFs on a fine t grid
        for x in [0.0, 0.1, 0.25, 0.4, 0.77] {
            let n = 200_000;
            let ts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let vals: Vec<f64> = ts.iter().map(|&t| delta_sawtooth(t, x)).collect();
            let m = BetaMixture::for_x(x);
            let d = ks_distance(&vals, |z| m.cdf(z));
            assert!(d < 1e-4, "x={x}: {d}");
        }
    }

    #[test]
    fn cdf_examples() {
        for y in [0.0, 0.2, 0.5, 0.9] {
            assert!((beta_cdf(0.0, y) - 0.5).abs() < 1e-15);
            assert_eq!(beta_cdf(4.0, y), 1.0);
            assert_eq!(beta_cdf(-4.0, y), 0.0);
        }
        for z in [-5.0, -3.0, 0.7, 2.0, 6.0] {
            assert!((beta_cdf(z, 0.0) - ((z + 4.0) / 8.0).clamp(0.0, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_examples() {
        let u = DensitySpec::Uniform;
        let r = empirical_vs_beta(0.0, 1e4, 100_000, &u, 4, &[2]).unwrap();
        assert!(r.ks <= 0.01, "{}", r.ks);
        let r = empirical_vs_beta(0.25, 1e4, 100_000, &u, 4, &[2]).unwrap();
        assert!(r.moment(2).unwrap().abs_err <= 0.02);
        assert_eq!(r, empirical_vs_beta(0.25, 1e4, 100_000, &u, 4, &[2]).unwrap());
        assert!(empirical_vs_beta(0.25, 1e4, 50, &u, 4, &[2]).is_err());
    }
}
