//! Planar (and small-dimensional) lattices: construction, duality,
//! reduction, Haar sampling and enumeration of short vectors.
//!
//! Basis matrices store basis vectors as columns. All arithmetic is in
//! `f64`; integer coefficient vectors are carried alongside so that
//! primality (coprime coordinates) is decided exactly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LatlabError, Result};

/// Default cap on the number of coefficient vectors an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e8;

/// Relative threshold under which a determinant counts as zero.
const DEGENERATE_REL: f64 = 1e-12;

/// `|Num(l)|` below `NUM_ZERO_REL * max(1, |l|^2)` is treated as exactly zero.
pub const NUM_ZERO_REL: f64 = 1e-12;

/// A full-rank lattice in R^d given by a basis (columns).
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    basis: DMatrix<f64>,
    covol: f64,
    shortest: OnceLock<f64>,
    provenance: Option<Provenance>,
}

impl LatticeBasis {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let dim = basis.nrows();
        if dim == 0 || basis.ncols() != dim {
            return Err(LatlabError::UnsupportedDim(dim));
        }
        let det = basis.determinant();
        let scale = basis
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        let threshold = DEGENERATE_REL * scale.powi(dim as i32);
        if !det.is_finite() || det.abs() <= threshold || det.abs() < f64::MIN_POSITIVE {
            return Err(LatlabError::DegenerateBasis { det, threshold });
        }
        Ok(Self { basis, covol: det.abs(), shortest: OnceLock::new(), provenance: None })
    }

    /// Planar lattice with basis columns `b1`, `b2`.
    pub fn from_columns(b1: [f64; 2], b2: [f64; 2]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(2, 2, &[b1[0], b1[1], b2[0], b2[1]]))
    }

    pub fn zsquare() -> Self {
        Self::new(DMatrix::identity(2, 2)).expect("identity is nondegenerate")
    }

    /// The lattice {(n + m alpha, n + m alpha')}.
    pub fn quadratic(pair: QuadraticPair) -> Result<Self> {
        let mut l = Self::from_columns([1.0, 1.0], [pair.alpha(), pair.alpha_prime()])?;
        l.provenance = pair
            .conjugate_surd()
            .map(|surd| Provenance::Quadratic { surd, unimodular: false });
        Ok(l)
    }

    /// How the basis was produced, when that allows rebuilding it beyond
    /// `f64` precision. Dropped by every transformation except
    /// [`LatticeBasis::unimodular`].
    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn covol(&self) -> f64 {
        self.covol
    }

    /// Basis column `i` of a planar lattice.
    pub fn col2(&self, i: usize) -> [f64; 2] {
        debug_assert_eq!(self.dim(), 2);
        [self.basis[(0, i)], self.basis[(1, i)]]
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.basis
            .clone()
            .try_inverse()
            .expect("basis is nondegenerate by construction")
    }

    /// Dual lattice: basis is the inverse-transpose, so `D^T B = I`.
    pub fn dual(&self) -> Result<Self> {
        Self::new(self.inverse().transpose())
    }

    /// Rescale so that the covolume is 1.
    pub fn unimodular(&self) -> Result<Self> {
        let s = self.covol.powf(-1.0 / self.dim() as f64);
        let mut l = Self::new(&self.basis * s)?;
        l.provenance = self.provenance.map(|p| match p {
            Provenance::Quadratic { surd, .. } => Provenance::Quadratic { surd, unimodular: true },
            haar => haar,
        });
        Ok(l)
    }

    /// The lattice `Diag(e^{t_1}, ..., e^{t_d}) L`.
    pub fn diagonal_image(&self, exponents: &[f64]) -> Result<Self> {
        if exponents.len() != self.dim() {
            return Err(LatlabError::UnsupportedDim(exponents.len()));
        }
        let mut b = self.basis.clone();
        for (i, &e) in exponents.iter().enumerate() {
            let f = e.exp();
            b.row_mut(i).scale_mut(f);
        }
        Self::new(b)
    }

    /// The lattice point with integer coefficients `coeffs`.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(c, &n)| self.basis[(r, c)] * n as f64)
                    .sum()
            })
            .collect()
    }

    /// Integer coordinates of `p`, if `p` is a lattice point within
    /// `1e-9 (1 + |p|)`.
    pub fn coords_of(&self, p: &[f64]) -> Option<Vec<i64>> {
        let inv = self.inverse();
        let v = inv * nalgebra::DVector::from_column_slice(p);
        let coeffs: Vec<i64> = v.iter().map(|x| x.round() as i64).collect();
        let back = self.point(&coeffs);
        let err: f64 = back
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        (err <= 1e-9 * (1.0 + norm)).then_some(coeffs)
    }

    /// Whether both bases generate the same set of vectors.
    pub fn same_lattice(&self, other: &LatticeBasis) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let contains = |a: &LatticeBasis, b: &LatticeBasis| {
            b.basis
                .column_iter()
                .all(|c| a.coords_of(c.as_slice()).is_some())
        };
        contains(self, other) && contains(other, self)
    }

    /// Equivalent basis whose first column is a shortest nonzero vector.
    pub fn reduce(&self) -> Self {
        match self.dim() {
            2 => {
                let (r, _) = gauss_reduce(self.col2(0), self.col2(1));
                let out = Self::from_columns(r[0], r[1]).expect("unimodular change keeps rank");
                let _ = out.shortest.set(norm2(r[0]));
                let _ = self.shortest.set(norm2(r[0]));
                out
            }
            _ => {
                let out = reduce_small_dim(&self.basis);
                let out = Self::new(out).expect("unimodular change keeps rank");
                let s = out.basis.column(0).norm();
                let _ = out.shortest.set(s);
                let _ = self.shortest.set(s);
                out
            }
        }
    }

    /// Norm of a shortest nonzero vector (cached).
    pub fn shortest_norm(&self) -> f64 {
        if let Some(&s) = self.shortest.get() {
            return s;
        }
        self.reduce();
        *self.shortest.get().expect("set by reduce")
    }
}

impl PartialEq for LatticeBasis {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}

#[inline]
fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Lagrange–Gauss reduction. Returns the reduced columns and the integer
/// matrix `U` (column-major, `reduced = B U`).
pub(crate) fn gauss_reduce(b1: [f64; 2], b2: [f64; 2]) -> ([[f64; 2]; 2], [[i64; 2]; 2]) {
    let (mut u, mut v) = (b1, b2);
    // columns of U: coefficients of u and v in the input basis
    let (mut cu, mut cv) = ([1i64, 0], [0i64, 1]);
    if dot2(u, u) > dot2(v, v) {
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut cu, &mut cv);
    }
    for _ in 0..10_000 {
        let q = (dot2(u, v) / dot2(u, u)).round();
        if q != 0.0 {
            v = [v[0] - q * u[0], v[1] - q * u[1]];
            let qi = q as i64;
            cv = [cv[0] - qi * cu[0], cv[1] - qi * cu[1]];
        }
        if dot2(v, v) >= dot2(u, u) {
            break;
        }
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut cu, &mut cv);
    }
    ([u, v], [cu, cv])
}

/// LLL followed by an exhaustive search for a shortest vector, which is
/// then completed to a basis.
pub(crate) fn reduce_small_dim(b: &DMatrix<f64>) -> DMatrix<f64> {
    let d = b.nrows();
    let mut basis = lll(b.clone(), 0.99);
    let radius = basis
        .column_iter()
        .map(|c| c.norm())
        .fold(f64::INFINITY, f64::min);
    let inv = basis.clone().try_inverse().expect("nondegenerate");
    let bounds: Vec<i64> = (0..d)
        .map(|i| (radius * inv.row(i).norm()).floor() as i64)
        .collect();
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut coeffs = vec![0i64; d];
    visit_box(&bounds, &mut coeffs, 0, &mut |c| {
        if c.iter().all(|&x| x == 0) {
            return;
        }
        let v = &basis * nalgebra::DVector::from_iterator(d, c.iter().map(|&x| x as f64));
        let n = v.norm();
        if best.as_ref().map_or(true, |(bn, _)| n < *bn) {
            best = Some((n, c.to_vec()));
        }
    });
    let (best_norm, best_c) = best.expect("box contains the basis vectors");
    if best_norm < basis.column(0).norm() * (1.0 - 1e-14) {
        let u = unimodular_completion(&best_c);
        basis = &basis * u.map(|x| x as f64);
    }
    // first column is now the shortest; sort the rest by length
    let mut cols: Vec<_> = basis.column_iter().map(|c| c.into_owned()).collect();
    cols[1..].sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    DMatrix::from_columns(&cols)
}

fn visit_box(bounds: &[i64], coeffs: &mut [i64], depth: usize, f: &mut dyn FnMut(&[i64])) {
    if depth == bounds.len() {
        f(coeffs);
        return;
    }
    for n in -bounds[depth]..=bounds[depth] {
        coeffs[depth] = n;
        visit_box(bounds, coeffs, depth + 1, f);
    }
}

/// Textbook LLL on the columns of `b`.
fn lll(mut b: DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let d = b.ncols();
    let gso = |b: &DMatrix<f64>| {
        let mut bstar = b.clone();
        let mut mu = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..i {
                let bj = bstar.column(j).into_owned();
                mu[(i, j)] = b.column(i).dot(&bj) / bj.dot(&bj);
                let col = bstar.column(i) - bj * mu[(i, j)];
                bstar.set_column(i, &col);
            }
        }
        (bstar, mu)
    };
    let mut k = 1;
    let mut guard = 0;
    while k < d && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gso(&b);
            let q = mu[(k, j)].round();
            if q != 0.0 {
                let col = b.column(k) - b.column(j) * q;
                b.set_column(k, &col);
            }
        }
        let (bstar, mu) = gso(&b);
        let lhs = bstar.column(k).norm_squared();
        let rhs = (delta - mu[(k, k - 1)] * mu[(k, k - 1)]) * bstar.column(k - 1).norm_squared();
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    b
}

/// Integer matrix with determinant ±1 whose first column is the primitive
/// vector `c`.
fn unimodular_completion(c: &[i64]) -> DMatrix<i64> {
    let d = c.len();
    // Row-reduce c to ±e1 with unimodular row operations E; U = E^{-1}
    // accumulates the inverse operations on columns.
    let mut v = c.to_vec();
    let mut u = DMatrix::<i64>::identity(d, d);
    loop {
        let nonzero: Vec<usize> = (0..d).filter(|&i| v[i] != 0).collect();
        if nonzero.len() <= 1 {
            break;
        }
        let p = *nonzero.iter().min_by_key(|&&i| v[i].abs()).unwrap();
        for &i in &nonzero {
            if i != p {
                let q = v[i] / v[p];
                // row_i -= q row_p  <=>  col_p += q col_i
                v[i] -= q * v[p];
                let col = u.column(p) + u.column(i) * q;
                u.set_column(p, &col);
            }
        }
    }
    let p = (0..d).find(|&i| v[i] != 0).expect("c is nonzero");
    if p != 0 {
        v.swap(0, p);
        u.swap_columns(0, p);
    }
    if v[0] < 0 {
        let col = -u.column(0);
        u.set_column(0, &col);
    }
    debug_assert_eq!(v[0].abs(), 1, "c must be primitive");
    u
}

/// The pair (alpha, alpha') defining the admissible family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPair {
    alpha: f64,
    alpha_prime: f64,
}

impl QuadraticPair {
    pub fn new(alpha: f64, alpha_prime: f64) -> Result<Self> {
        if alpha == alpha_prime {
            return Err(LatlabError::EqualRoots(alpha));
        }
        Ok(Self { alpha, alpha_prime })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    /// The set (1/(alpha' - alpha)) {(n + m alpha, n + m alpha')}, as a basis.
    ///
    /// This is not the inverse-transpose dual of [`LatticeBasis::quadratic`];
    /// it maps onto it under `(u, v) -> (v, -u)`, see [`rotate_quarter`].
    pub fn scaled_family_basis(&self) -> Result<LatticeBasis> {
        let s = 1.0 / (self.alpha_prime - self.alpha);
        LatticeBasis::from_columns([s, s], [s * self.alpha, s * self.alpha_prime])
    }

    /// The vector (k + j + (k + j + 1) alpha, same with alpha') / (alpha' - alpha)
    /// for `j` in {0, 1, 2}, returned with its integer coefficients.
    pub fn consecutive_vector(&self, k: i64, j: i64) -> ([f64; 2], [i64; 2]) {
        let s = 1.0 / (self.alpha_prime - self.alpha);
        let (n, m) = (k + j, k + j + 1);
        (
            [
                s * (n as f64 + m as f64 * self.alpha),
                s * (n as f64 + m as f64 * self.alpha_prime),
            ],
            [n, m],
        )
    }
}

/// Rational number `num / den` with `den > 0`.
pub type Rational = (i64, i64);

/// Closest fraction with denominator at most `max_den`, if it matches `x`
/// to `1e-12` relative.
fn small_rational(x: f64, max_den: i64) -> Option<Rational> {
    // continued-fraction convergents
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-12 * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = y - a as f64;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

/// A pair of real roots `(S ± sign sqrt(S^2 - 4P)) / 2` of `x^2 - S x + P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSurd {
    pub sum: Rational,
    pub product: Rational,
    /// Sign of `alpha - alpha'`.
    pub sign: i8,
}

/// Origin of a basis, kept so that it can be rebuilt at higher precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// [`LatticeBasis::quadratic`] of a rational quadratic's roots, possibly
    /// rescaled to covolume 1.
    Quadratic { surd: QuadSurd, unimodular: bool },
    /// [`sample_haar_lattice_2d`] with this seed. The sample is a lattice
    /// with real entries; its `f64` basis is a rounding of it.
    Haar(u64),
}

impl QuadraticPair {
    /// Recognise the pair as the roots of a rational quadratic (denominators
    /// up to 10^4), as for conjugate quadratic irrationals.
    pub fn conjugate_surd(&self) -> Option<QuadSurd> {
        let sum = small_rational(self.alpha + self.alpha_prime, 10_000)?;
        let product = small_rational(self.alpha * self.alpha_prime, 10_000)?;
        let s = sum.0 as f64 / sum.1 as f64;
        let p = product.0 as f64 / product.1 as f64;
        let disc = s * s - 4.0 * p;
        if disc <= 0.0 {
            return None;
        }
        let sign: i8 = if self.alpha > self.alpha_prime { 1 } else { -1 };
        let alpha = (s + sign as f64 * disc.sqrt()) / 2.0;
        let alpha_prime = (s - sign as f64 * disc.sqrt()) / 2.0;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(1.0);
        (close(alpha, self.alpha) && close(alpha_prime, self.alpha_prime)).then_some(QuadSurd { sum, product, sign })
    }
}

/// The coordinate map `(u, v) -> (v, -u)`; preserves norms and `|Num|`.
pub fn rotate_quarter(p: [f64; 2]) -> [f64; 2] {
    [p[1], -p[0]]
}

/// Textual lattice description used by the CLI and experiment configs:
/// `zsquare | quad:<a>,<a'> | basis:<b11>,<b21>,<b12>,<b22> | haar:<seed>`,
/// optionally suffixed with `!unimodular`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub unimodular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeKind {
    ZSquare,
    Quad(QuadraticPair),
    /// Column-major basis entries; 4 values for a planar lattice, 9 for a
    /// lattice in R^3.
    Custom(Vec<f64>),
    Haar(u64),
}

impl LatticeSpec {
    pub fn zsquare() -> Self {
        Self { kind: LatticeKind::ZSquare, unimodular: false }
    }

    pub fn quad(alpha: f64, alpha_prime: f64) -> Result<Self> {
        Ok(Self { kind: LatticeKind::Quad(QuadraticPair::new(alpha, alpha_prime)?), unimodular: false })
    }

    pub fn haar(seed: u64) -> Self {
        Self { kind: LatticeKind::Haar(seed), unimodular: false }
    }

    pub fn custom(entries: Vec<f64>) -> Self {
        Self { kind: LatticeKind::Custom(entries), unimodular: false }
    }

    pub fn unimodular(mut self) -> Self {
        self.unimodular = true;
        self
    }

    pub fn build(&self) -> Result<LatticeBasis> {
        construct_lattice(self)
    }
}

/// Parse a real written in decimal or as `sqrt:<n>`, optionally signed.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let value = if let Some(arg) = body.strip_prefix("sqrt:") {
        let x: f64 = arg
            .parse()
            .map_err(|_| LatlabError::Parse(format!("bad sqrt argument {arg:?}")))?;
        if x < 0.0 {
            return Err(LatlabError::Parse(format!("sqrt of negative number {x}")));
        }
        x.sqrt()
    } else {
        body.parse::<f64>()
            .map_err(|_| LatlabError::Parse(format!("bad real {s:?}")))?
    };
    Ok(sign * value)
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_real).collect()
}

impl FromStr for LatticeSpec {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, unimodular) = match s.split_once('!') {
            Some((b, "unimodular")) => (b, true),
            Some((_, flag)) => return Err(LatlabError::Parse(format!("unknown flag !{flag}"))),
            None => (s, false),
        };
        let kind = if body == "zsquare" {
            LatticeKind::ZSquare
        } else if let Some(rest) = body.strip_prefix("quad:") {
            let v = parse_reals(rest)?;
            if v.len() != 2 {
                return Err(LatlabError::Parse(format!("quad needs 2 reals, got {}", v.len())));
            }
            LatticeKind::Quad(QuadraticPair::new(v[0], v[1])?)
        } else if let Some(rest) = body.strip_prefix("basis:") {
            let v = parse_reals(rest)?;
            if v.len() != 4 && v.len() != 9 {
                return Err(LatlabError::Parse(format!("basis needs 4 or 9 reals, got {}", v.len())));
            }
            LatticeKind::Custom(v)
        } else if let Some(rest) = body.strip_prefix("haar:") {
            let seed = rest
                .trim()
                .parse()
                .map_err(|_| LatlabError::Parse(format!("bad haar seed {rest:?}")))?;
            LatticeKind::Haar(seed)
        } else {
            return Err(LatlabError::Parse(format!("unknown lattice spec {s:?}")));
        };
        Ok(Self { kind, unimodular })
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LatticeKind::ZSquare => write!(f, "zsquare")?,
            LatticeKind::Quad(p) => write!(f, "quad:{},{}", p.alpha, p.alpha_prime)?,
            LatticeKind::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "basis:{}", parts.join(","))?
            }
            LatticeKind::Haar(seed) => write!(f, "haar:{seed}")?,
        }
        if self.unimodular {
            write!(f, "!unimodular")?;
        }
        Ok(())
    }
}

pub fn construct_lattice(spec: &LatticeSpec) -> Result<LatticeBasis> {
    let lattice = match &spec.kind {
        LatticeKind::ZSquare => LatticeBasis::zsquare(),
        LatticeKind::Quad(pair) => LatticeBasis::quadratic(*pair)?,
        LatticeKind::Custom(v) => {
            let d = if v.len() == 9 { 3 } else { 2 };
            LatticeBasis::new(DMatrix::from_column_slice(d, d, v))?
        }
        LatticeKind::Haar(seed) => sample_haar_lattice_2d(*seed),
    };
    if spec.unimodular {
        lattice.unimodular()
    } else {
        Ok(lattice)
    }
}

/// A unimodular planar lattice drawn from the Haar probability measure.
///
/// The point `x + iy` of the modular fundamental domain is drawn from the
/// hyperbolic measure `dx dy / y^2`: `x = sin(theta)` with theta uniform on
/// `[-pi/6, pi/6]` gives the marginal density `(1 - x^2)^{-1/2}`, and
/// `y = sqrt(1 - x^2) / u` the conditional density `∝ y^{-2}` above the unit
/// circle. The basis `(1/sqrt(y), 0), (x/sqrt(y), sqrt(y))` is then rotated by
/// a uniform angle.
pub fn sample_haar_lattice_2d(seed: u64) -> LatticeBasis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = rng.gen_range(-PI / 6.0..=PI / 6.0);
    let x = theta.sin();
    let u = 1.0 - rng.gen::<f64>(); // (0, 1]
    let y = (1.0 - x * x).sqrt() / u;
    let phi = rng.gen_range(0.0..2.0 * PI);
    let (s, c) = phi.sin_cos();
    let sy = y.sqrt();
    let b1 = [1.0 / sy, 0.0];
    let b2 = [x / sy, sy];
    let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
    let mut l = LatticeBasis::from_columns(rot(b1), rot(b2)).expect("covolume 1");
    l.provenance = Some(Provenance::Haar(seed));
    l
}

/// A nonzero planar lattice vector with its integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqVector {
    pub coords: [f64; 2],
    pub int_coords: [i64; 2],
    pub num: f64,
    pub norm: f64,
    pub is_prime: bool,
}

impl FreqVector {
    fn new(coords: [f64; 2], int_coords: [i64; 2]) -> Self {
        Self {
            coords,
            int_coords,
            num: coords[0] * coords[1],
            norm: norm2(coords),
            is_prime: gcd(int_coords[0].unsigned_abs(), int_coords[1].unsigned_abs()) == 1,
        }
    }

    /// `|Num(l)|` is numerically zero.
    pub fn num_is_zero(&self) -> bool {
        self.num.abs() < NUM_ZERO_REL * (self.norm * self.norm).max(1.0)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFilter {
    All,
    /// Prime vectors with strictly positive first coordinate.
    PrimePositive,
}

/// Visit every nonzero vector of a planar lattice with `|l| <= t`.
///
/// Coefficients are enumerated on a reduced basis, with the box
/// `|n_i| <= t |row_i(B^-1)|` bounding the work; along each row the exact
/// norm condition is solved as a quadratic and re-checked per vector.
pub fn for_each_vector<F: FnMut(&FreqVector)>(
    lattice: &LatticeBasis,
    t: f64,
    filter: VectorFilter,
    cap: f64,
    mut f: F,
) -> Result<()> {
    if lattice.dim() != 2 {
        return Err(LatlabError::UnsupportedDim(lattice.dim()));
    }
    if !(t > 0.0) {
        return Err(LatlabError::Domain(format!("radius must be positive, got {t}")));
    }
    let ([r1, r2], [u1, u2]) = gauss_reduce(lattice.col2(0), lattice.col2(1));
    let det = r1[0] * r2[1] - r2[0] * r1[1];
    // rows of the inverse of [r1 r2]
    let row1 = norm2([r2[1], -r2[0]]) / det.abs();
    let row2 = norm2([-r1[1], r1[0]]) / det.abs();
    let n1_max = (t * row1).floor();
    let n2_max = (t * row2).floor();
    let predicted = (2.0 * n1_max + 1.0) * (2.0 * n2_max + 1.0);
    if predicted > cap {
        return Err(LatlabError::BallTooLarge { predicted, cap });
    }
    let (n2_max, n1_max) = (n2_max as i64, n1_max as i64);
    let a = dot2(r1, r1);
    let t2 = t * t;
    for n2 in -n2_max..=n2_max {
        let base = [n2 as f64 * r2[0], n2 as f64 * r2[1]];
        // |n1 r1 + base|^2 <= t^2  <=>  a n1^2 + 2 b n1 + c <= 0
        let b = dot2(r1, base);
        let c = dot2(base, base) - t2;
        let disc = b * b - a * c;
        if disc < 0.0 && disc < -1e-9 * b * b {
            continue;
        }
        let root = disc.max(0.0).sqrt();
        let lo = (((-b - root) / a).floor() as i64 - 1).max(-n1_max);
        let hi = (((-b + root) / a).ceil() as i64 + 1).min(n1_max);
        for n1 in lo..=hi {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let p = [n1 as f64 * r1[0] + base[0], n1 as f64 * r1[1] + base[1]];
            if norm2(p) > t {
                continue;
            }
            if filter == VectorFilter::PrimePositive && !(p[0] > 0.0) {
                continue;
            }
            // coefficients in the caller's basis
            let ic = [n1 * u1[0] + n2 * u2[0], n1 * u1[1] + n2 * u2[1]];
            let v = FreqVector::new(p, ic);
            if filter == VectorFilter::PrimePositive && !v.is_prime {
                continue;
            }
            f(&v);
        }
    }
    Ok(())
}

/// All nonzero vectors with `|l| <= t` passing `filter`.
pub fn enumerate_vectors(lattice: &LatticeBasis, t: f64, filter: VectorFilter) -> Result<Vec<FreqVector>> {
    let mut out = Vec::new();
    for_each_vector(lattice, t, filter, DEFAULT_ENUMERATION_CAP, |v| out.push(*v))?;
    Ok(out)
}

/// `min |Num(l)|` over nonzero vectors with `|l| <= t`: an upper estimate
/// of `Num(L)` that is nonincreasing in `t`.
pub fn num_of_lattice(lattice: &LatticeBasis, t: f64) -> Result<f64> {
    let mut best: Option<f64> = None;
    for_each_vector(lattice, t, VectorFilter::All, DEFAULT_ENUMERATION_CAP, |v| {
        let n = if v.num_is_zero() { 0.0 } else { v.num.abs() };
        best = Some(best.map_or(n, |b: f64| b.min(n)));
    })?;
    best.ok_or(LatlabError::EmptyBall(t))
}
