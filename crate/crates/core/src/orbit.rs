//! Statistics along the diagonal orbit `{delta L : delta in Delta_r}`.
//!
//! `Delta_r` is the set of `Diag(e^{t_1}, ..., e^{t_d})` with integer
//! exponents summing to zero and `|(t_1, ..., t_d)| <= r` (Euclidean norm).
//! For each element the shortest-vector norm `|delta L|` is computed, giving
//! `V~ = sum |delta L|^{-2d}` and the randomly signed sums
//! `S~ = sum theta_delta |delta L|^{-d}`.
//!
//! The exponents grow like `r`, so a basis of `delta L` obtained by scaling
//! rows of an `f64` basis is useless beyond a few dozen steps: the rounding
//! of `L` itself is magnified by up to `e^{max t - min t}`. Norms are
//! therefore computed by walking the orbit one unit step at a time in
//! multiple-precision arithmetic, re-reducing the basis after every step.
//! Quadratic lattices built from a rational quadratic are rebuilt exactly;
//! any other basis is taken to be exactly its binary `f64` entries.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::LOG2_E;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{LatlabError, Result};
use crate::lattice::{reduce_small_dim, LatticeBasis, Provenance};
use crate::numeric::{compensated_sum, derive_seed, ks_distance, normal_cdf, stream_rng};

type Big = FBig<HalfEven, 2>;

/// One diagonal matrix of `Delta_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitElement {
    pub exponents: Vec<i64>,
    pub norm: f64,
}

/// All of `Delta_r` for `d` in {2, 3}, ordered lexicographically by exponents.
pub fn enumerate_orbit(d: usize, r: f64) -> Result<Vec<OrbitElement>> {
    if r < 0.0 || !r.is_finite() {
        return Err(LatlabError::Domain(format!("orbit radius must be finite and >= 0, got {r}")));
    }
    let bound = r.floor() as i64;
    let mut out = Vec::new();
    let mut push = |exponents: Vec<i64>| {
        let n2: i64 = exponents.iter().map(|t| t * t).sum();
        let norm = (n2 as f64).sqrt();
        if norm <= r {
            out.push(OrbitElement { exponents, norm });
        }
    };
    match d {
        2 => (-bound..=bound).for_each(|j| push(vec![j, -j])),
        3 => {
            for t1 in -bound..=bound {
                for t2 in -bound..=bound {
                    push(vec![t1, t2, -t1 - t2]);
                }
            }
        }
        _ => return Err(LatlabError::UnsupportedDim(d)),
    }
    Ok(out)
}

/// Per-element norms along the orbit.
#[derive(Debug, Clone)]
pub struct OrbitNorms {
    pub d: usize,
    pub r: f64,
    pub elements: Vec<OrbitElement>,
    /// `|delta L|` for each element, in the same order.
    pub norms: Vec<f64>,
    pub v_tilde: f64,
    /// `sum |delta L|^{-3d}`.
    pub t1_raw: f64,
}

impl OrbitNorms {
    pub fn count(&self) -> usize {
        self.elements.len()
    }

    /// `|delta L|^{-d}` for each element.
    pub fn weights(&self) -> Vec<f64> {
        self.norms.iter().map(|n| n.powi(-(self.d as i32))).collect()
    }

    pub fn stats(&self, model: SignModel) -> OrbitStats {
        let t1_sum = self.t1_raw * model.third_abs_moment();
        let v1 = self.v_tilde * model.second_moment();
        let be_bound = if self.count() == 0 { f64::INFINITY } else { 40.0 * t1_sum / v1.powf(1.5) };
        OrbitStats { r: self.r, count: self.count(), v_tilde: self.v_tilde, t1_sum, be_bound }
    }

    /// `S~ / sqrt(V~)` for `trials` independent sign draws; trial `i` uses its
    /// own stream so the output does not depend on scheduling.
    pub fn simulate(&self, model: SignModel, trials: usize, seed: u64) -> Result<Vec<f64>> {
        if trials == 0 {
            return Err(LatlabError::Domain("trials must be at least 1".into()));
        }
        let weights = self.weights();
        let scale = 1.0 / self.v_tilde.sqrt();
        Ok((0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                compensated_sum(weights.iter().map(|w| model.draw(&mut rng) * w)) * scale
            })
            .collect())
    }
}

/// Summary of one orbit for the Berry–Esseen comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitStats {
    pub r: f64,
    pub count: usize,
    pub v_tilde: f64,
    /// `sum |delta L|^{-3d} E|theta|^3`.
    pub t1_sum: f64,
    /// `40 T / V^{3/2}` with `V = V~ E theta^2`.
    pub be_bound: f64,
}

/// Distribution of the signs `theta_delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignModel {
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]` (unit variance).
    UniformSymmetric,
    /// Always `+1`. Not symmetric; only useful to check the weights.
    AllPlus,
}

impl SignModel {
    /// `E theta^2`.
    pub fn second_moment(&self) -> f64 {
        1.0
    }

    /// `E |theta|^3`.
    pub fn third_abs_moment(&self) -> f64 {
        match self {
            SignModel::Rademacher | SignModel::AllPlus => 1.0,
            SignModel::UniformSymmetric => 0.75 * 3f64.sqrt(),
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            SignModel::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SignModel::UniformSymmetric => {
                let h = 3f64.sqrt();
                rng.gen_range(-h..h)
            }
            SignModel::AllPlus => 1.0,
        }
    }
}

impl std::fmt::Display for SignModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SignModel::Rademacher => "rademacher",
            SignModel::UniformSymmetric => "uniform",
            SignModel::AllPlus => "allplus",
        })
    }
}

impl std::str::FromStr for SignModel {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rademacher" => Ok(SignModel::Rademacher),
            "uniform" | "uniform_symmetric" => Ok(SignModel::UniformSymmetric),
            other => Err(LatlabError::Parse(format!("unknown sign model {other:?}"))),
        }
    }
}

fn big(x: f64, prec: usize) -> Big {
    Big::try_from(x).expect("finite").with_precision(prec).value()
}

fn big_int(n: i64, prec: usize) -> Big {
    Big::from(n).with_precision(prec).value()
}

/// Column-major entries of a basis of `L` at `prec` bits.
fn precise_basis(lattice: &LatticeBasis, prec: usize) -> Vec<Big> {
    match (lattice.provenance(), lattice.dim()) {
        (Some(Provenance::Quadratic { surd, unimodular }), 2) => {
            let s = big_int(surd.sum.0, prec) / big_int(surd.sum.1, prec);
            let p = big_int(surd.product.0, prec) / big_int(surd.product.1, prec);
            let root = (&s * &s - big_int(4, prec) * p).sqrt();
            let signed = if surd.sign > 0 { root.clone() } else { -root.clone() };
            let two = big_int(2, prec);
            let alpha = (&s + &signed) / &two;
            let alpha_prime = (&s - &signed) / &two;
            let mut cols = vec![big_int(1, prec), big_int(1, prec), alpha, alpha_prime];
            if unimodular {
                // covolume is |alpha - alpha'| = sqrt(S^2 - 4P)
                let c = big_int(1, prec) / root.sqrt();
                cols.iter_mut().for_each(|x| *x = &*x * &c);
            }
            cols
        }
        (Some(Provenance::Haar(seed)), 2) => dithered_unimodular(lattice, derive_seed(seed, 0xD17E), prec),
        _ => lattice.basis().as_slice().iter().map(|&x| big(x, prec)).collect(),
    }
}

/// Bits of each Haar entry below its `f64` rounding that are drawn.
const DITHER_BITS: usize = 2048;

/// The `f64` basis with the bits below each entry's rounding filled from a
/// seeded stream, rescaled to covolume exactly 1. The drawn lattice does not
/// depend on `prec` as long as `prec <= DITHER_BITS`.
fn dithered_unimodular(lattice: &LatticeBasis, seed: u64, prec: usize) -> Vec<Big> {
    let mut rng = stream_rng(seed, 0);
    let full = DITHER_BITS + 64;
    let word = big_int(1 << 32, full) * big_int(1 << 32, full);
    let mut cols: Vec<Big> = lattice
        .basis()
        .as_slice()
        .iter()
        .map(|&x| {
            let ulp = f64::from_bits(x.abs().to_bits() + 1) - x.abs();
            let mut frac = big(0.0, full);
            let mut scale = big(1.0, full);
            for _ in 0..DITHER_BITS / 64 {
                scale = &scale / &word;
                frac += Big::from(rng.gen::<u64>()) * &scale;
            }
            let exact = big(x, full) + big(ulp, full) * (frac - big(0.5, full));
            exact.with_precision(prec).value()
        })
        .collect();
    let det = &cols[0] * &cols[3] - &cols[1] * &cols[2];
    let det = if det < Big::ZERO { -det } else { det };
    let c = big_int(1, prec) / det.sqrt();
    cols.iter_mut().for_each(|x| *x = &*x * &c);
    cols
}

fn to_f64_matrix(b: &[Big], d: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(d, d, b.iter().map(|x| x.to_f64().value()))
}

/// `b <- b U` for an integer matrix `U` (column-major `d x d`).
fn apply_unimodular(b: &mut Vec<Big>, u: &DMatrix<i64>, d: usize) {
    let mut out = Vec::with_capacity(d * d);
    for c in 0..d {
        for r in 0..d {
            let mut acc = Big::ZERO;
            for k in 0..d {
                let n = u[(k, c)];
                if n != 0 {
                    acc += &b[k * d + r] * Big::from(n);
                }
            }
            out.push(acc);
        }
    }
    *b = out;
}

/// Reduce `b` in place; returns the shortest-vector norm. Planar bases are
/// Gauss-reduced in full precision; in R^3 the unimodular change is found on
/// an `f64` copy and applied exactly.
fn reduce_precise(b: &mut Vec<Big>, d: usize) -> Result<f64> {
    if d == 2 {
        return Ok(gauss_reduce_precise(b));
    }
    let f = to_f64_matrix(b, d);
    let red = reduce_small_dim(&f);
    let inv = f
        .clone()
        .try_inverse()
        .ok_or_else(|| LatlabError::Domain("orbit basis lost rank".into()))?;
    let real = inv * red;
    let u = real.map(|x| x.round() as i64);
    if real.iter().zip(u.iter()).any(|(x, n)| (x - *n as f64).abs() > 1e-6) {
        return Err(LatlabError::Domain("orbit reduction is not unimodular".into()));
    }
    if u != DMatrix::identity(d, d) {
        apply_unimodular(b, &u, d);
    }
    let f = to_f64_matrix(b, d);
    Ok(f.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min))
}

fn gauss_reduce_precise(b: &mut [Big]) -> f64 {
    let dot = |b: &[Big], i: usize, j: usize| &b[2 * i] * &b[2 * j] + &b[2 * i + 1] * &b[2 * j + 1];
    loop {
        if dot(b, 0, 0) > dot(b, 1, 1) {
            b.swap(0, 2);
            b.swap(1, 3);
        }
        let mu = (dot(b, 0, 1) / dot(b, 0, 0)).round();
        if mu == Big::ZERO {
            break;
        }
        b[2] = &b[2] - &mu * &b[0];
        b[3] = &b[3] - &mu * &b[1];
    }
    dot(b, 0, 0).sqrt().to_f64().value()
}

/// Working precision for walking out to exponents `elements`.
fn walk_precision(elements: &[OrbitElement]) -> usize {
    let spread = elements
        .iter()
        .map(|e| e.exponents.iter().max().unwrap_or(&0) - e.exponents.iter().min().unwrap_or(&0))
        .max()
        .unwrap_or(0);
    128 + (spread as f64 * LOG2_E).ceil() as usize
}

fn check_unimodular(lattice: &LatticeBasis, d: usize) -> Result<()> {
    if lattice.dim() != d {
        return Err(LatlabError::UnsupportedDim(lattice.dim()));
    }
    if (lattice.covol() - 1.0).abs() > 1e-9 {
        return Err(LatlabError::NotUnimodular(lattice.covol()));
    }
    Ok(())
}

/// `|delta L|` for each element, by a breadth-first walk from the identity
/// over unit steps `e_a - e_b`.
fn walk_norms(lattice: &LatticeBasis, elements: &[OrbitElement], prec: usize) -> Result<Vec<f64>> {
    let d = lattice.dim();
    let index: HashMap<&[i64], usize> = elements.iter().enumerate().map(|(i, e)| (e.exponents.as_slice(), i)).collect();
    let mut norms = vec![f64::NAN; elements.len()];
    let Some(&start) = index.get(vec![0i64; d].as_slice()) else {
        return Ok(norms);
    };
    let e_up = big_int(1, prec).exp();
    let e_down = big_int(1, prec) / &e_up;
    let mut root = precise_basis(lattice, prec);
    norms[start] = reduce_precise(&mut root, d)?;
    let mut queue = VecDeque::from([(start, root)]);
    let mut seen = vec![false; elements.len()];
    seen[start] = true;
    while let Some((i, basis)) = queue.pop_front() {
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let mut next = elements[i].exponents.clone();
                next[a] += 1;
                next[b] -= 1;
                let Some(&j) = index.get(next.as_slice()) else { continue };
                if seen[j] {
                    continue;
                }
                seen[j] = true;
                let mut child = basis.clone();
                for c in 0..d {
                    child[c * d + a] = &child[c * d + a] * &e_up;
                    child[c * d + b] = &child[c * d + b] * &e_down;
                }
                norms[j] = reduce_precise(&mut child, d)?;
                queue.push_back((j, child));
            }
        }
    }
    if norms.iter().any(|n| n.is_nan()) {
        return Err(LatlabError::Domain("orbit set is not connected by unit steps".into()));
    }
    Ok(norms)
}

/// `|delta L|` for every `delta` in `Delta_r`, with `V~` and `sum |delta L|^{-3d}`.
pub fn orbit_v_and_norms(lattice: &LatticeBasis, d: usize, r: f64) -> Result<OrbitNorms> {
    check_unimodular(lattice, d)?;
    let elements = enumerate_orbit(d, r)?;
    let norms = walk_norms(lattice, &elements, walk_precision(&elements))?;
    Ok(assemble(d, r, elements, norms))
}

fn assemble(d: usize, r: f64, elements: Vec<OrbitElement>, norms: Vec<f64>) -> OrbitNorms {
    let di = d as i32;
    let v_tilde = compensated_sum(norms.iter().map(|n| n.powi(-2 * di)));
    let t1_raw = compensated_sum(norms.iter().map(|n| n.powi(-3 * di)));
    OrbitNorms { d, r, elements, norms, v_tilde, t1_raw }
}

/// Normalised orbit sums `S~ / sqrt(V~)`, one per trial.
pub fn simulate_s_tilde(
    lattice: &LatticeBasis,
    d: usize,
    r: f64,
    model: SignModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    orbit_v_and_norms(lattice, d, r)?.simulate(model, trials, seed)
}

/// Kolmogorov–Smirnov distance to the standard normal against the
/// Berry–Esseen envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryEsseenCheck {
    pub ks_distance: f64,
    pub be_bound: f64,
    /// `ks_distance <= be_bound + 1.36 / sqrt(trials)`.
    pub pass: bool,
}

pub fn berry_esseen_check(values: &[f64], stats: &OrbitStats) -> Result<BerryEsseenCheck> {
    if values.is_empty() {
        return Err(LatlabError::Domain("no values to test".into()));
    }
    let ks = ks_distance(values, normal_cdf);
    let slack = 1.36 / (values.len() as f64).sqrt();
    Ok(BerryEsseenCheck { ks_distance: ks, be_bound: stats.be_bound, pass: ks <= stats.be_bound + slack })
}

/// `d^{-d/2} min_{Delta_r} |delta L|^d`, an upper estimate of `Num(L)` that
/// can only decrease as `r` grows.
pub fn num_via_orbit(lattice: &LatticeBasis, d: usize, r: f64) -> Result<f64> {
    let orbit = orbit_v_and_norms(lattice, d, r)?;
    let min = orbit.norms.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((d as f64).powf(-(d as f64) / 2.0) * min.powi(d as i32))
}

/// `(1/|Delta_r|) sum min(m, |delta L|^{-d})`.
pub fn ergodic_average(lattice: &LatticeBasis, d: usize, r: f64, m: f64) -> Result<f64> {
    if m < 1.0 || m.is_nan() {
        return Err(LatlabError::Domain(format!("clipping level must be >= 1, got {m}")));
    }
    let orbit = orbit_v_and_norms(lattice, d, r)?;
    let n = orbit.count() as f64;
    Ok(compensated_sum(orbit.weights().into_iter().map(|w| w.min(m))) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{num_of_lattice, sample_haar_lattice_2d, QuadraticPair};
    use std::f64::consts::{E, SQRT_2};

    fn quad_unimodular() -> LatticeBasis {
        LatticeBasis::quadratic(QuadraticPair::new(SQRT_2, -SQRT_2).unwrap())
            .unwrap()
            .unimodular()
            .unwrap()
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(enumerate_orbit(2, 2.0).unwrap().len(), 3);
        assert_eq!(enumerate_orbit(2, 10.0).unwrap().len(), 15);
        let d3 = enumerate_orbit(3, 1.5).unwrap();
        assert_eq!(d3.len(), 7);
        // brute force over the cube
        let mut brute = 0;
        for t1 in -2i64..=2 {
            for t2 in -2i64..=2 {
                for t3 in -2i64..=2 {
                    if t1 + t2 + t3 == 0 && ((t1 * t1 + t2 * t2 + t3 * t3) as f64).sqrt() <= 1.5 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 7);
        assert!(d3.iter().all(|e| e.exponents.iter().sum::<i64>() == 0));
        assert!(matches!(enumerate_orbit(4, 1.0), Err(LatlabError::UnsupportedDim(4))));
    }

    #[test]
    fn orbit_growth_in_dim_three() {
        let ratios: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&r| enumerate_orbit(3, r).unwrap().len() as f64 / (r * r))
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo <= 1.5, "{ratios:?}");
    }

    #[test]
    fn zsquare_orbit() {
        let o = orbit_v_and_norms(&LatticeBasis::zsquare(), 2, 2.0).unwrap();
        assert!((o.v_tilde - (1.0 + 2.0 * E.powi(4))).abs() < 1e-10);
        assert!((o.v_tilde - 110.1963).abs() < 1e-4);
        let st = o.stats(SignModel::Rademacher);
        let be = 40.0 * (1.0 + 2.0 * E.powi(6)) / (1.0 + 2.0 * E.powi(4)).powf(1.5);
        assert!((st.be_bound - be).abs() < 1e-10 && (st.be_bound - 27.93).abs() < 0.01, "{}", st.be_bound);
        let vals = o.simulate(SignModel::Rademacher, 2000, 5).unwrap();
        let norm = (1.0 + 2.0 * E.powi(4)).sqrt();
        let support: Vec<f64> = (0..8)
            .map(|m| {
                let s = |b: usize| if m >> b & 1 == 1 { 1.0 } else { -1.0 };
                (s(0) + s(1) * E * E + s(2) * E * E) / norm
            })
            .collect();
        assert!(vals.iter().all(|v| support.iter().any(|s| (s - v).abs() < 1e-12)));
        assert!(berry_esseen_check(&vals, &st).unwrap().pass);
    }

    #[test]
    fn identity_only_orbit() {
        for l in [quad_unimodular(), sample_haar_lattice_2d(4)] {
            let o = orbit_v_and_norms(&l, 2, 0.0).unwrap();
            assert_eq!(o.count(), 1);
            assert!((o.v_tilde - l.shortest_norm().powi(-4)).abs() < 1e-12 * o.v_tilde);
        }
    }

    #[test]
    fn requires_unimodular() {
        let q = LatticeBasis::quadratic(QuadraticPair::new(SQRT_2, -SQRT_2).unwrap()).unwrap();
        assert!(matches!(orbit_v_and_norms(&q, 2, 3.0), Err(LatlabError::NotUnimodular(_))));
    }

    /// Gauss reduction carried out entirely in multiple precision on
    /// `Diag(e^j, e^-j) B`, formed directly rather than by walking.
    fn direct_norm(lattice: &LatticeBasis, j: i64, prec: usize) -> f64 {
        let b = precise_basis(lattice, prec);
        let ej = big_int(j, prec).exp();
        let ejn = big_int(1, prec) / &ej;
        let mut u = [&b[0] * &ej, &b[1] * &ejn];
        let mut v = [&b[2] * &ej, &b[3] * &ejn];
        let dot = |x: &[Big; 2], y: &[Big; 2]| &x[0] * &y[0] + &x[1] * &y[1];
        loop {
            if dot(&u, &u) > dot(&v, &v) {
                std::mem::swap(&mut u, &mut v);
            }
            let mu = (dot(&u, &v) / dot(&u, &u)).round();
            if mu == Big::ZERO {
                break;
            }
            v = [&v[0] - &mu * &u[0], &v[1] - &mu * &u[1]];
        }
        dot(&u, &u).sqrt().to_f64().value()
    }

    #[test]
    fn walk_matches_direct_reduction() {
        for l in [quad_unimodular(), sample_haar_lattice_2d(11), LatticeBasis::zsquare()] {
            let o = orbit_v_and_norms(&l, 2, 100.0).unwrap();
            for (e, n) in o.elements.iter().zip(&o.norms).step_by(7) {
                let j = e.exponents[0];
                let direct = direct_norm(&l, j, 1024);
                assert!((n - direct).abs() <= 1e-12 * direct, "j={j}: {n} vs {direct}");
            }
        }
    }

    #[test]
    fn walk_is_stable_under_more_precision() {
        let l = sample_haar_lattice_2d(2);
        let elements = enumerate_orbit(2, 150.0).unwrap();
        let p = walk_precision(&elements);
        let a = walk_norms(&l, &elements, p).unwrap();
        let b = walk_norms(&l, &elements, p + 256).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * y);
        }
    }

    #[test]
    fn walk_in_dim_three_matches_direct() {
        let b = DMatrix::from_column_slice(3, 3, &[1.0, 0.2, -0.3, 0.1, 1.1, 0.4, -0.5, 0.3, 0.9]);
        let l = LatticeBasis::new(b).unwrap().unimodular().unwrap();
        let o = orbit_v_and_norms(&l, 3, 4.0).unwrap();
        for (e, n) in o.elements.iter().zip(&o.norms) {
            let direct = l.diagonal_image(&e.exponents.iter().map(|&t| t as f64).collect::<Vec<_>>()).unwrap();
            assert!((n - direct.shortest_norm()).abs() < 1e-9 * n, "{:?}", e.exponents);
        }
    }

    #[test]
    fn sandwich_bounds() {
        let l = quad_unimodular();
        for r in [10.0, 20.0, 40.0] {
            let o = orbit_v_and_norms(&l, 2, r).unwrap();
            let (lo, hi) = o.norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            let n = o.count() as f64;
            assert!(o.v_tilde <= lo.powi(-4) * n && o.v_tilde >= hi.powi(-4) * n);
        }
    }

    #[test]
    fn admissible_orbit_stays_bounded() {
        // the Pell unit keeps every |delta L| away from zero
        let o = orbit_v_and_norms(&quad_unimodular(), 2, 200.0).unwrap();
        let min = o.norms.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > 0.5, "{min}");
    }

    #[test]
    fn simulated_values() {
        let l = quad_unimodular();
        let o = orbit_v_and_norms(&l, 2, 20.0).unwrap();
        let forced = o.simulate(SignModel::AllPlus, 3, 0).unwrap();
        let expect = compensated_sum(o.weights()) / o.v_tilde.sqrt();
        assert!(forced.iter().all(|&v| (v - expect).abs() < 1e-12));
        for model in [SignModel::Rademacher, SignModel::UniformSymmetric] {
            let vals = o.simulate(model, 10_000, 9).unwrap();
            assert_eq!(vals, o.simulate(model, 10_000, 9).unwrap());
            let s = crate::numeric::SampleStats::of(&vals);
            assert!(s.mean.abs() <= 3.0 / 100.0 * s.std, "{model:?}: {}", s.mean);
            assert!((s.std - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn berry_esseen_calibration() {
        use rand_distr_free_normal as normal;
        let vals: Vec<f64> = (0..10_000).map(|i| normal(&mut stream_rng(77, i))).collect();
        let stats = OrbitStats { r: 0.0, count: 1, v_tilde: 1.0, t1_sum: 0.0, be_bound: 0.0 };
        let check = berry_esseen_check(&vals, &stats).unwrap();
        assert!(check.pass && check.ks_distance <= 1.36 / 100.0, "{}", check.ks_distance);
        assert!(berry_esseen_check(&[], &stats).is_err());
    }

    /// Box–Muller, kept local to the test.
    fn rand_distr_free_normal<R: Rng>(rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let v: f64 = rng.gen();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    #[test]
    fn num_estimates() {
        let z = num_via_orbit(&LatticeBasis::zsquare(), 2, 10.0).unwrap();
        assert!((z - 0.5 * (-14.0f64).exp()).abs() < 1e-18);
        let q = quad_unimodular();
        let n0 = num_via_orbit(&q, 2, 0.0).unwrap();
        assert!((n0 - q.shortest_norm().powi(2) / 2.0).abs() < 1e-12);
        let enumerated = num_of_lattice(&q, 10.0).unwrap();
        assert!((enumerated - 1.0 / (2.0 * SQRT_2)).abs() < 1e-12);
        assert!((n0 - enumerated).abs() < 1e-12);
        let mut last = n0;
        for r in [10.0, 20.0, 40.0] {
            let n = num_via_orbit(&q, 2, r).unwrap();
            assert!(n <= last + 1e-15 && n >= enumerated - 1e-12);
            last = n;
        }
    }

    #[test]
    fn ergodic_examples() {
        let q = quad_unimodular();
        assert!(ergodic_average(&q, 2, 30.0, 1.0).unwrap() <= 1.0);
        let o = orbit_v_and_norms(&q, 2, 30.0).unwrap();
        let unclipped = compensated_sum(o.norms.iter().map(|n| n.powi(-2))) / o.count() as f64;
        assert_eq!(ergodic_average(&q, 2, 30.0, 1e6).unwrap(), unclipped);
        assert!(ergodic_average(&q, 2, 30.0, 0.5).is_err());
    }

    #[test]
    fn ergodic_average_stabilises_for_haar() {
        let avg = |r: f64| -> Vec<f64> {
            (0..20).map(|s| ergodic_average(&sample_haar_lattice_2d(s), 2, r, 4.0).unwrap()).collect()
        };
        let (a, b) = (avg(50.0), avg(200.0));
        let sa = crate::numeric::SampleStats::of(&a);
        let sb = crate::numeric::SampleStats::of(&b);
        assert!((sa.mean - sb.mean).abs() <= 3.0 * sa.std.max(sb.std), "{} vs {}", sa.mean, sb.mean);
    }
}
