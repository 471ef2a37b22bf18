//! The Fourier side of the counting problem.
//!
//! For a frequency lattice `M` (the dual of the lattice being counted) the
//! counting error is approximated by a sine series over the prime vectors
//! `J2(M, t)`, the prime vectors with `|l| <= t` and `l1 > 0`. Its mean
//! square over translations is `G`, which splits as `G1 - G2 - G3 + G4`
//! through `sin^2 x = (1 - cos 2x) / 2`. `V(M, t)` is the normaliser
//! `sum 1 / Num(l)^2` over all nonzero `|l| <= t`.
//!
//! Harmonic sums can be truncated at `k_max` (with an analytic tail bound)
//! or summed exactly through the Bernoulli polynomial identities
//! `sum cos(k theta) / k^2 = pi^2 B2(x)` and
//! `sum cos(k theta) / k^4 = -(2 pi)^4 B4(x) / 48`, `x = theta / 2 pi mod 1`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::counting::{torus_samples, RectCounter, RectWindow, TorusPoint, XSampling};
use crate::error::{LatlabError, Result};
use crate::lattice::{for_each_vector, LatticeBasis, VectorFilter, DEFAULT_ENUMERATION_CAP};
use crate::numeric::{compensated_sum, CompensatedSum};

const ZETA4: f64 = PI * PI * PI * PI / 90.0;

/// Where the harmonic `k`-sums stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    k_max: Option<u32>,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { k_max: Some(100) }
    }
}

impl TruncationSpec {
    pub fn new(k_max: u32) -> Result<Self> {
        if k_max == 0 {
            return Err(LatlabError::Domain("k_max must be positive".into()));
        }
        Ok(Self { k_max: Some(k_max) })
    }

    /// All harmonics, summed in closed form.
    pub fn exact() -> Self {
        Self { k_max: None }
    }

    pub fn k_max(&self) -> Option<u32> {
        self.k_max
    }

    /// Bound on `sum_{k > k_max} k^-4`.
    pub fn tail_k4(&self) -> f64 {
        self.k_max.map_or(0.0, |k| 1.0 / (3.0 * (k as f64).powi(3)))
    }

    /// Bound on `sum_{k > k_max} k^-2`.
    pub fn tail_k2(&self) -> f64 {
        self.k_max.map_or(0.0, |k| 1.0 / k as f64)
    }
}

impl std::str::FromStr for TruncationSpec {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "exact" => Ok(Self::exact()),
            v => Self::new(v.parse().map_err(|_| LatlabError::Parse(format!("bad kmax {v:?}")))?),
        }
    }
}

impl std::fmt::Display for TruncationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.k_max {
            Some(k) => write!(f, "{k}"),
            None => write!(f, "inf"),
        }
    }
}

fn bernoulli_arg(theta: f64) -> f64 {
    (theta / TAU).rem_euclid(1.0)
}

/// `sum_{k >= 1} cos(k theta) / k^2`.
pub fn cos_series_k2(theta: f64) -> f64 {
    let x = bernoulli_arg(theta);
    PI * PI * (x * x - x + 1.0 / 6.0)
}

/// `sum_{k >= 1} cos(k theta) / k^4`.
pub fn cos_series_k4(theta: f64) -> f64 {
    let x = bernoulli_arg(theta);
    let b4 = x * x * (x * x - 2.0 * x + 1.0) - 1.0 / 30.0;
    -TAU.powi(4) / 48.0 * b4
}

/// Fourier transform of the indicator of `tP + X` at frequency `l`:
/// `(1/pi^2) s_a(l1) s_b(l2) e^{2 pi i <l, X>}` with `s_c(u) = sin(2 pi t u c) / u`
/// and its continuous extension `s_c(0) = 2 pi t c`.
pub fn indicator_ft(window: RectWindow, t: f64, x: [f64; 2], l: [f64; 2]) -> Complex64 {
    let sigma = |u: f64, c: f64| {
        if u == 0.0 {
            TAU * t * c
        } else {
            (TAU * t * u * c).sin() / u
        }
    };
    let amp = sigma(l[0], window.a()) * sigma(l[1], window.b()) / (PI * PI);
    Complex64::from_polar(1.0, TAU * (l[0] * x[0] + l[1] * x[1])) * amp
}

fn check_num(v: &crate::lattice::FreqVector) -> Result<()> {
    if v.num_is_zero() {
        return Err(LatlabError::NumZero { coords: v.coords });
    }
    Ok(())
}

/// `V(L, t) = sum_{0 < |l| <= t} 1 / Num(l)^2`, by direct enumeration.
pub fn big_v(lattice: &LatticeBasis, t: f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    let mut err = None;
    for_each_vector(lattice, t, VectorFilter::All, DEFAULT_ENUMERATION_CAP, |v| {
        if err.is_none() {
            if let Err(e) = check_num(v) {
                err = Some(e);
            }
            acc.add(1.0 / (v.num * v.num));
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(acc.value()),
    }
}

/// A prime vector of `J2` with what the sums need.
#[derive(Debug, Clone, Copy)]
struct PrimeVector {
    l: [f64; 2],
    norm: f64,
    inv_num2: f64,
}

/// `J2(M, t_max)` sorted by norm, for repeated evaluation at `t <= t_max`.
///
/// Every nonzero vector of an admissible lattice is `±k p` for a unique
/// `p` in `J2` and `k >= 1`, so `V(t) = 2 sum_p Num(p)^-2 H4(floor(t / |p|))`
/// is available from the same table.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    covol: f64,
    t_max: f64,
    primes: Vec<PrimeVector>,
}

impl SpectralProfile {
    pub fn new(lattice: &LatticeBasis, t_max: f64) -> Result<Self> {
        let mut primes = Vec::new();
        let mut err = None;
        for_each_vector(lattice, t_max, VectorFilter::All, DEFAULT_ENUMERATION_CAP, |v| {
            if err.is_some() {
                return;
            }
            if let Err(e) = check_num(v) {
                err = Some(e);
                return;
            }
            if v.is_prime && v.coords[0] > 0.0 {
                primes.push(PrimeVector { l: v.coords, norm: v.norm, inv_num2: 1.0 / (v.num * v.num) });
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        primes.sort_by(|a, b| a.norm.total_cmp(&b.norm));
        Ok(Self { covol: lattice.covol(), t_max, primes })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Covolume of the frequency lattice.
    pub fn covol(&self) -> f64 {
        self.covol
    }

    fn upto(&self, t: f64) -> &[PrimeVector] {
        assert!(t <= self.t_max * (1.0 + 1e-12), "t = {t} beyond profile radius {}", self.t_max);
        let n = self.primes.partition_point(|p| p.norm <= t);
        &self.primes[..n]
    }

    /// `|J2(M, t)|`.
    pub fn prime_count(&self, t: f64) -> usize {
        self.upto(t).len()
    }

    /// `V(M, t)` through the prime decomposition.
    pub fn v(&self, t: f64) -> f64 {
        let mut h4 = vec![0.0];
        compensated_sum(self.upto(t).iter().map(|p| {
            let kmax = (t / p.norm).floor() as usize;
            while h4.len() <= kmax {
                let k = h4.len() as f64;
                let last = *h4.last().unwrap();
                h4.push(last + 1.0 / (k * k * k * k));
            }
            2.0 * p.inv_num2 * h4[kmax]
        }))
    }

    /// `G`, `G1..G4` and `V` at dilation `t`.
    pub fn g_terms(&self, window: RectWindow, t: f64, trunc: TruncationSpec) -> SpectralSums {
        let primes = self.upto(t);
        let c2 = self.covol * self.covol;
        let pre_g = 2.0 * c2 / PI.powi(4);
        let pre_i = c2 / (2.0 * PI.powi(4));
        let (mut g, mut g1, mut g2, mut g3, mut g4) = (
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
        );
        let mut weight = CompensatedSum::new();
        let zeta = match trunc.k_max {
            Some(k) => (1..=k).rev().map(|k| (k as f64).powi(-4)).sum::<f64>(),
            None => ZETA4,
        };
        for p in primes {
            let a = TAU * t * p.l[0] * window.a();
            let b = TAU * t * p.l[1] * window.b();
            let [sg, s2, s3, s4] = match trunc.k_max {
                Some(k) => harmonic_sums_truncated(a, b, k),
                None => harmonic_sums_exact(a, b),
            };
            weight.add(p.inv_num2);
            g.add(p.inv_num2 * sg);
            g1.add(p.inv_num2 * zeta);
            g2.add(p.inv_num2 * s2);
            g3.add(p.inv_num2 * s3);
            g4.add(p.inv_num2 * s4);
        }
        SpectralSums {
            t,
            v: self.v(t),
            g: pre_g * g.value(),
            g1: pre_i * g1.value(),
            g2: pre_i * g2.value(),
            g3: pre_i * g3.value(),
            g4: pre_i * g4.value(),
            k_max: trunc.k_max,
            truncation_error: pre_g * weight.value() * trunc.tail_k4(),
        }
    }

    /// Evaluator of the sine series `S` at dilation `t`.
    pub fn series(&self, window: RectWindow, t: f64, trunc: TruncationSpec) -> SeriesEvaluator<'_> {
        let primes = self.upto(t);
        // the prefactor carries the covolume of the counted lattice, 1 / covol(M)
        let prefactor = 2.0 * self.covol / (PI * PI);
        let weight = compensated_sum(primes.iter().map(|p| 1.0 / (p.l[0] * p.l[1]).abs()));
        SeriesEvaluator {
            primes,
            window,
            t,
            trunc,
            prefactor,
            tail_bound: prefactor * weight * trunc.tail_k2(),
        }
    }
}

/// `[sum sin^2(kA) sin^2(kB), sum cos 2kA, sum cos 2kB, sum cos 2kA cos 2kB]`
/// each weighted by `k^-4`, for `k <= k_max`.
fn harmonic_sums_truncated(a: f64, b: f64, k_max: u32) -> [f64; 4] {
    // angle multiples by repeated rotation; the doubled angles rotate on
    // their own so the sin^2 identity is not built in
    let (ra, rb) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
    let (ra2, rb2) = (Complex64::from_polar(1.0, 2.0 * a), Complex64::from_polar(1.0, 2.0 * b));
    let (mut za, mut zb, mut za2, mut zb2) = (ra, rb, ra2, rb2);
    let mut out = [0.0; 4];
    for k in 1..=k_max {
        let k2 = (k as f64) * (k as f64);
        let w = 1.0 / (k2 * k2);
        let (sa, sb) = (za.im, zb.im);
        out[0] += w * sa * sa * sb * sb;
        out[1] += w * za2.re;
        out[2] += w * zb2.re;
        out[3] += w * za2.re * zb2.re;
        za *= ra;
        zb *= rb;
        za2 *= ra2;
        zb2 *= rb2;
        if k % 32 == 0 {
            // renormalise against drift
            let fix = |z: &mut Complex64, base: f64| *z = Complex64::from_polar(1.0, (k + 1) as f64 * base);
            fix(&mut za, a);
            fix(&mut zb, b);
            fix(&mut za2, 2.0 * a);
            fix(&mut zb2, 2.0 * b);
        }
    }
    out
}

fn harmonic_sums_exact(a: f64, b: f64) -> [f64; 4] {
    let s2 = cos_series_k4(2.0 * a);
    let s3 = cos_series_k4(2.0 * b);
    let s4 = 0.5 * (cos_series_k4(2.0 * a + 2.0 * b) + cos_series_k4(2.0 * a - 2.0 * b));
    // sin^2 sin^2 = (1 - cos 2A - cos 2B + cos 2A cos 2B) / 4
    let sg = 0.25 * (ZETA4 - s2 - s3 + s4);
    [sg, s2, s3, s4]
}

/// The spectral sums at one dilation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSums {
    pub t: f64,
    pub v: f64,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    /// `None` when the harmonic sums were evaluated in closed form.
    pub k_max: Option<u32>,
    /// Bound on the discarded harmonic tail of any of the G sums.
    pub truncation_error: f64,
}

impl SpectralSums {
    /// `|G - (G1 - G2 - G3 + G4)|`.
    pub fn decomposition_residual(&self) -> f64 {
        (self.g - (self.g1 - self.g2 - self.g3 + self.g4)).abs()
    }
}

/// `G`, `G1..G4` and `V` for the frequency lattice `M`.
pub fn g_terms(m: &LatticeBasis, window: RectWindow, t: f64, trunc: TruncationSpec) -> Result<SpectralSums> {
    Ok(SpectralProfile::new(m, t)?.g_terms(window, t, trunc))
}

/// The sine series `S` for one frequency lattice and dilation.
pub struct SeriesEvaluator<'a> {
    primes: &'a [PrimeVector],
    window: RectWindow,
    t: f64,
    trunc: TruncationSpec,
    prefactor: f64,
    tail_bound: f64,
}

/// A value of `S` with the bound on its discarded harmonic tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

const SERIES_CHUNK: usize = 256;

impl SeriesEvaluator<'_> {
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.eval_many(&[x])[0]
    }

    /// `S` at every translation; primes are processed in fixed chunks so the
    /// result does not depend on the thread count.
    pub fn eval_many(&self, xs: &[[f64; 2]]) -> Vec<f64> {
        let partials: Vec<Vec<f64>> = self
            .primes
            .par_chunks(SERIES_CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; xs.len()];
                let mut coef = Vec::new();
                for p in chunk {
                    let a = TAU * self.t * p.l[0] * self.window.a();
                    let b = TAU * self.t * p.l[1] * self.window.b();
                    let w = 1.0 / (p.l[0] * p.l[1]);
                    match self.trunc.k_max {
                        Some(k_max) => {
                            coef.clear();
                            let (ra, rb) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
                            let (mut za, mut zb) = (ra, rb);
                            for k in 1..=k_max {
                                let kf = k as f64;
                                coef.push(za.im * zb.im / (kf * kf));
                                za *= ra;
                                zb *= rb;
                                if k % 32 == 0 {
                                    za = Complex64::from_polar(1.0, (k + 1) as f64 * a);
                                    zb = Complex64::from_polar(1.0, (k + 1) as f64 * b);
                                }
                            }
                            for (out, x) in acc.iter_mut().zip(xs) {
                                let phi = TAU * (p.l[0] * x[0] + p.l[1] * x[1]);
                                *out += w * clenshaw_cos(&coef, phi);
                            }
                        }
                        None => {
                            let (u, v) = (a - b, a + b);
                            for (out, x) in acc.iter_mut().zip(xs) {
                                let c = TAU * (p.l[0] * x[0] + p.l[1] * x[1]);
                                let s = cos_series_k2(u + c) + cos_series_k2(u - c)
                                    - cos_series_k2(v + c)
                                    - cos_series_k2(v - c);
                                *out += w * 0.25 * s;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; xs.len()];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        total.iter().map(|s| self.prefactor * s).collect()
    }
}

/// `sum_{k=1}^{K} c_{k-1} cos(k phi)` by Clenshaw's recurrence.
fn clenshaw_cos(coef: &[f64], phi: f64) -> f64 {
    let (c, two_c) = (phi.cos(), 2.0 * phi.cos());
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in coef.iter().rev() {
        let b0 = a + two_c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * c - b2
}

/// `S(M, X, t)`, where `M` is the frequency lattice and `X` a translation of
/// the counted lattice `dual(M)`.
pub fn fourier_series_s(
    m: &LatticeBasis,
    window: RectWindow,
    t: f64,
    x: &TorusPoint,
    trunc: TruncationSpec,
) -> Result<SeriesValue> {
    let profile = SpectralProfile::new(m, t)?;
    let series = profile.series(window, t, trunc);
    Ok(SeriesValue { value: series.eval(x.x), tail_bound: series.tail_bound() })
}

/// Monte Carlo estimate of `E_X[((R - S) / sqrt(V(dual, t)))^2]` over `n_x`
/// random translations of the counted lattice.
pub fn residual_r_minus_s(
    counted: &LatticeBasis,
    window: RectWindow,
    t: f64,
    n_x: usize,
    trunc: TruncationSpec,
    seed: u64,
) -> Result<f64> {
    let m = counted.dual()?;
    let profile = SpectralProfile::new(&m, t)?;
    let v = profile.v(t);
    if v == 0.0 {
        return Err(LatlabError::EmptyBall(t));
    }
    let counter = RectCounter::new(counted, window, t)?;
    let points: Vec<[f64; 2]> = torus_samples(counted, n_x, seed, XSampling::Random)
        .iter()
        .map(|p| p.x)
        .collect();
    let s = profile.series(window, t, trunc).eval_many(&points);
    let sq = points.iter().zip(&s).map(|(x, s)| {
        let d = counter.error(*x) - s;
        d * d
    });
    Ok(compensated_sum(sq) / (n_x as f64 * v))
}
