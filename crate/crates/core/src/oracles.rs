//! Quadrature for the hyperbolic-region integrals that bound `V`.
//!
//! The planar integrals reduce to one dimension in polar coordinates and are
//! integrated in `u = log r` with double-exponential quadrature on unit
//! pieces. Log-coordinate Monte Carlo versions are provided as independent
//! cross-checks.

use quadrature::double_exponential;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{LatlabError, Result};
use crate::numeric::{compensated_sum, stream_rng};

/// Default relative accuracy target.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Region `{A <= |l| <= t, |l1 l2| >= C / log(|l|)^(1 + alpha)}`; `alpha = 0`
/// with [`IntegralRegionSpec::admissible`] drops the log factor entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralRegionSpec {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub t: f64,
    log_floor: bool,
}

impl IntegralRegionSpec {
    fn checked(a: f64, c: f64, alpha: f64, t: f64, log_floor: bool) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && alpha >= 0.0 && t.is_finite()) {
            return Err(LatlabError::Domain(format!("need A > 0, C > 0, alpha >= 0 (A={a}, C={c}, alpha={alpha})")));
        }
        if t < a {
            return Err(LatlabError::Domain(format!("need t >= A (t={t}, A={a})")));
        }
        if log_floor && a <= 1.0 {
            return Err(LatlabError::Domain(format!("log floor needs A > 1, got {a}")));
        }
        Ok(Self { a, c, alpha, t, log_floor })
    }

    /// Floor `|l1 l2| >= C`.
    pub fn admissible(a: f64, c: f64, t: f64) -> Result<Self> {
        Self::checked(a, c, 0.0, t, false)
    }

    /// Floor `|l1 l2| >= C log(|l|)^(-1 - alpha)`.
    pub fn log_weighted(a: f64, c: f64, alpha: f64, t: f64) -> Result<Self> {
        Self::checked(a, c, alpha, t, true)
    }

    pub fn has_log_floor(&self) -> bool {
        self.log_floor
    }

    /// The `Num` floor at radius `r`.
    pub fn floor_at(&self, r: f64) -> f64 {
        if self.log_floor {
            self.c / r.ln().powf(1.0 + self.alpha)
        } else {
            self.c
        }
    }
}

/// A quadrature value with its accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Integrate `f` on `[lo, hi]` split at `breaks` and into pieces of width at
/// most `max_width`, aiming at `rel_tol * scale` per piece.
fn integrate_pieces<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], max_width: f64, abs_tol: f64) -> OracleValue {
    let mut knots = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.push(hi);
    for b in inner {
        let last = *knots.last().expect("nonempty");
        let n = ((b - last) / max_width).ceil().max(1.0) as usize;
        for i in 1..=n {
            knots.push(if i == n { b } else { last + (b - last) * i as f64 / n as f64 });
        }
    }
    let pieces = knots.len() - 1;
    let per = abs_tol / pieces as f64;
    let outs: Vec<_> = knots.windows(2).map(|w| double_exponential::integrate(&f, w[0], w[1], per)).collect();
    OracleValue {
        value: compensated_sum(outs.iter().map(|o| o.integral)),
        error: outs.iter().map(|o| o.error_estimate).sum(),
        evaluations: outs.iter().map(|o| o.num_function_evaluations as usize).sum(),
    }
}

/// Rough magnitude used to turn a relative target into an absolute one.
fn tail_scale(spec: &IntegralRegionSpec) -> f64 {
    let l = (spec.t / spec.a).ln().max(1e-300);
    8.0 / spec.floor_at(spec.t.max(spec.a * 1.5)) * l
}

/// `16 r^-3 (r^2 / 2F) sqrt(1 - (2F / r^2)^2)` in `u = log r`, with `F` the
/// floor at `r`.
fn polar_integrand(spec: &IntegralRegionSpec, u: f64) -> f64 {
    let r = u.exp();
    let f = spec.floor_at(r);
    let s = 2.0 * f / (r * r);
    if s >= 1.0 {
        return 0.0;
    }
    8.0 / f * ((1.0 - s) * (1.0 + s)).sqrt()
}

fn polar_tail(spec: &IntegralRegionSpec, rel_tol: f64) -> Result<OracleValue> {
    if 2.0 * spec.floor_at(spec.a) / (spec.a * spec.a) > 1.0 {
        return Err(LatlabError::Domain(format!(
            "2C/A^2 = {} exceeds 1",
            2.0 * spec.floor_at(spec.a) / (spec.a * spec.a)
        )));
    }
    if spec.t == spec.a {
        return Ok(OracleValue { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let tol = rel_tol * tail_scale(spec);
    Ok(integrate_pieces(|u| polar_integrand(spec, u), spec.a.ln(), spec.t.ln(), &[], 1.0, tol))
}

/// `16 int_A^t r^-3 (r^2/2C) sqrt(1 - (2C/r^2)^2) dr`, the integral of
/// `(l1 l2)^-2` over `{A <= |l| <= t, |l1 l2| >= C}`.
pub fn admissible_tail_integral(spec: &IntegralRegionSpec) -> Result<OracleValue> {
    admissible_tail_integral_tol(spec, DEFAULT_REL_TOL)
}

pub fn admissible_tail_integral_tol(spec: &IntegralRegionSpec, rel_tol: f64) -> Result<OracleValue> {
    if spec.log_floor {
        return Err(LatlabError::Domain("admissible integral takes a constant floor".into()));
    }
    polar_tail(spec, rel_tol)
}

/// Same integrand over the region with floor `C log(|l|)^(-1-alpha)`.
pub fn log_weighted_tail_integral(spec: &IntegralRegionSpec) -> Result<OracleValue> {
    log_weighted_tail_integral_tol(spec, DEFAULT_REL_TOL)
}

pub fn log_weighted_tail_integral_tol(spec: &IntegralRegionSpec, rel_tol: f64) -> Result<OracleValue> {
    if !spec.log_floor {
        return Err(LatlabError::Domain("log-weighted integral needs a log floor".into()));
    }
    polar_tail(spec, rel_tol)
}

/// Monte Carlo estimate of the `(l1 l2)^-2` region integral in coordinates
/// `s = log|l1| + log|l2|`, `d = log|l1| - log|l2|`, with `s` drawn from a
/// shifted exponential and `d` uniform. Returns `(value, stderr)`.
pub fn monte_carlo_region_integral(spec: &IntegralRegionSpec, n: usize, seed: u64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(LatlabError::Domain("need at least two points".into()));
    }
    let lt = spec.t.ln();
    let s0 = spec.floor_at(spec.t).min(spec.floor_at(spec.a)).ln();
    let half = 2.0 * lt - s0;
    if half <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let weight = 4.0 * half * (-s0).exp();
    const BATCH: usize = 1 << 16;
    let batches = n.div_ceil(BATCH);
    let hits: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let m = BATCH.min(n - b * BATCH);
            let mut k = 0u64;
            for _ in 0..m {
                let s = s0 - (-rng.gen::<f64>()).ln_1p();
                let d = half * (2.0 * rng.gen::<f64>() - 1.0);
                let (u, v) = ((s + d) / 2.0, (s - d) / 2.0);
                let r = u.exp().hypot(v.exp());
                if r >= spec.a && r <= spec.t && s >= spec.floor_at(r).ln() {
                    k += 1;
                }
            }
            k as f64
        })
        .collect();
    let p = hits.iter().sum::<f64>() / n as f64;
    Ok((weight * p, weight * (p * (1.0 - p) / n as f64).sqrt()))
}

/// Bounds of the asymmetric region: `0 < l1 l2`, `l1 l2 >= C`,
/// `A <= |l| <= T` in the open first quadrant.
fn asymmetric_checks(a: f64, c: f64, big_t: f64) -> Result<()> {
    if !(a > 0.0 && c > 0.0 && big_t.is_finite()) || big_t < a {
        return Err(LatlabError::Domain(format!("need T >= A > 0 and C > 0 (A={a}, C={c}, T={big_t})")));
    }
    Ok(())
}

/// Where `C/x = sqrt(R^2 - x^2)`: `x^2 = (R^2 -+ sqrt(R^4 - 4C^2)) / 2`.
fn hyperbola_circle(c: f64, r: f64) -> Option<(f64, f64)> {
    let disc = r.powi(4) - 4.0 * c * c;
    if disc < 0.0 {
        return None;
    }
    let big = (r * r + disc.sqrt()) / 2.0;
    Some(((c * c / big).sqrt(), big.sqrt()))
}

/// Inner `l2` range `[lo, hi]` at a given `l1`.
fn inner_range(a: f64, c: f64, big_t: f64, l1: f64) -> Option<(f64, f64)> {
    let hi2 = big_t * big_t - l1 * l1;
    if hi2 <= 0.0 {
        return None;
    }
    let lo = (c / l1).max((a * a - l1 * l1).max(0.0).sqrt());
    let hi = hi2.sqrt();
    (lo < hi).then_some((lo, hi))
}

fn asymmetric_breaks(a: f64, c: f64, big_t: f64) -> Option<(f64, f64, Vec<f64>)> {
    let (l1_min, l1_max) = hyperbola_circle(c, big_t)?;
    let mut breaks = vec![a.ln()];
    if let Some((x, y)) = hyperbola_circle(c, a) {
        breaks.push(x.ln());
        breaks.push(y.ln());
    }
    Some((l1_min.ln(), l1_max.ln(), breaks))
}

/// `int l1^-3 l2^-2` over `{A <= |l| <= T, l1, l2 > 0, l1 l2 >= C}`, with the
/// `l2` integral done in closed form.
pub fn asymmetric_integral(a: f64, c: f64, big_t: f64) -> Result<OracleValue> {
    asymmetric_checks(a, c, big_t)?;
    let Some((u0, u1, breaks)) = asymmetric_breaks(a, c, big_t) else {
        return Ok(OracleValue { value: 0.0, error: 0.0, evaluations: 0 });
    };
    let f = |u: f64| {
        let l1 = u.exp();
        match inner_range(a, c, big_t, l1) {
            Some((lo, hi)) => (1.0 / lo - 1.0 / hi) * l1.powi(-2),
            None => 0.0,
        }
    };
    let tol = DEFAULT_REL_TOL * big_t / (c * c);
    Ok(integrate_pieces(f, u0, u1, &breaks, 1.0, tol))
}

/// The same region with exponents swapped, `int l1^-2 l2^-3`, integrating
/// `l2^-3` in closed form. Equal to [`asymmetric_integral`] by the symmetry
/// `l1 <-> l2`; computed along a different path as a check.
pub fn asymmetric_integral_swapped(a: f64, c: f64, big_t: f64) -> Result<OracleValue> {
    asymmetric_checks(a, c, big_t)?;
    let Some((u0, u1, breaks)) = asymmetric_breaks(a, c, big_t) else {
        return Ok(OracleValue { value: 0.0, error: 0.0, evaluations: 0 });
    };
    let f = |u: f64| {
        let l1 = u.exp();
        match inner_range(a, c, big_t, l1) {
            Some((lo, hi)) => 0.5 * (lo.powi(-2) - hi.powi(-2)) / l1,
            None => 0.0,
        }
    };
    let tol = DEFAULT_REL_TOL * big_t / (c * c);
    Ok(integrate_pieces(f, u0, u1, &breaks, 1.0, tol))
}

/// Which oracle the CLI evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Admissible,
    LogWeighted,
    Asymmetric,
}

impl std::str::FromStr for OracleKind {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admissible" => Ok(Self::Admissible),
            "logweighted" => Ok(Self::LogWeighted),
            "asymmetric" => Ok(Self::Asymmetric),
            other => Err(LatlabError::Parse(format!("unknown oracle {other:?}"))),
        }
    }
}

/// Evaluate one oracle; `alpha` is ignored except for `LogWeighted`.
pub fn evaluate_oracle(kind: OracleKind, a: f64, c: f64, alpha: f64, t: f64) -> Result<OracleValue> {
    match kind {
        OracleKind::Admissible => admissible_tail_integral(&IntegralRegionSpec::admissible(a, c, t)?),
        OracleKind::LogWeighted => log_weighted_tail_integral(&IntegralRegionSpec::log_weighted(a, c, alpha, t)?),
        OracleKind::Asymmetric => asymmetric_integral(a, c, t),
    }
}
