//! Exact lattice point counts in closed, dilated, translated rectangles
//! and the error term `R = N - t^2 Area(P) / Covol(L)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{LatlabError, Result};
use crate::lattice::{LatticeBasis, DEFAULT_ENUMERATION_CAP};
use crate::numeric::{compensated_sum, stream_rng, SampleStats};

/// The rectangle `[-a, a] x [-b, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectWindow {
    a: f64,
    b: f64,
}

impl RectWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(LatlabError::Domain(format!("rectangle half-sides must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn square() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn area(&self) -> f64 {
        4.0 * self.a * self.b
    }

    /// Closed bounds `[x_lo, x_hi, y_lo, y_hi]` of `tP + X`.
    pub fn bounds(&self, t: f64, x: [f64; 2]) -> [f64; 4] {
        let (ha, hb) = (t * self.a, t * self.b);
        [x[0] - ha, x[0] + ha, x[1] - hb, x[1] + hb]
    }
}

/// A translation `X`, remembered together with its fractional coordinates
/// `u` in `[0, 1)^2` with respect to the counting lattice (`X = B u`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub x: [f64; 2],
    pub frac: [f64; 2],
}

impl TorusPoint {
    pub fn from_frac(lattice: &LatticeBasis, u: [f64; 2]) -> Self {
        let frac = [u[0].rem_euclid(1.0), u[1].rem_euclid(1.0)];
        let b = lattice.basis();
        let x = [
            b[(0, 0)] * frac[0] + b[(0, 1)] * frac[1],
            b[(1, 0)] * frac[0] + b[(1, 1)] * frac[1],
        ];
        Self { x, frac }
    }

    /// Canonical representative of `x` modulo the lattice.
    pub fn from_point(lattice: &LatticeBasis, x: [f64; 2]) -> Self {
        let inv = lattice.inverse();
        let u = [
            inv[(0, 0)] * x[0] + inv[(0, 1)] * x[1],
            inv[(1, 0)] * x[0] + inv[(1, 1)] * x[1],
        ];
        Self::from_frac(lattice, u)
    }

    /// Use `x` verbatim (no reduction modulo the lattice).
    pub fn raw(lattice: &LatticeBasis, x: [f64; 2]) -> Self {
        let mut p = Self::from_point(lattice, x);
        p.x = x;
        p
    }
}

/// Line-sweep counter for a fixed lattice, window and dilation.
///
/// Sweeps the coefficient whose (reduced) basis column has the larger
/// second coordinate; on each line the other coefficient ranges over the
/// intersection of two intervals.
#[derive(Debug, Clone)]
pub struct RectCounter {
    sweep: [f64; 2],
    other: [f64; 2],
    /// row of the inverse basis giving the sweep coefficient
    sweep_row: [f64; 2],
    window: RectWindow,
    t: f64,
    expected: f64,
}

impl RectCounter {
    pub fn new(lattice: &LatticeBasis, window: RectWindow, t: f64) -> Result<Self> {
        Self::with_cap(lattice, window, t, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(lattice: &LatticeBasis, window: RectWindow, t: f64, cap: f64) -> Result<Self> {
        if lattice.dim() != 2 {
            return Err(LatlabError::UnsupportedDim(lattice.dim()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(LatlabError::Domain(format!("dilation must be positive, got {t}")));
        }
        let red = lattice.reduce();
        let (c0, c1) = (red.col2(0), red.col2(1));
        let (sweep, other, idx) = if c0[1].abs() >= c1[1].abs() { (c0, c1, 0) } else { (c1, c0, 1) };
        let inv = red.inverse();
        let sweep_row = [inv[(idx, 0)], inv[(idx, 1)]];
        let lines = 2.0 * (sweep_row[0].abs() * t * window.a + sweep_row[1].abs() * t * window.b) + 3.0;
        if lines > cap {
            return Err(LatlabError::BallTooLarge { predicted: lines, cap });
        }
        Ok(Self {
            sweep,
            other,
            sweep_row,
            window,
            t,
            expected: t * t * window.area() / lattice.covol(),
        })
    }

    /// `t^2 Area(P) / Covol(L)`.
    pub fn expected(&self) -> f64 {
        self.expected
    }

    #[inline]
    fn inside(&self, bounds: &[f64; 4], ns: f64, no: f64) -> bool {
        let px = ns * self.sweep[0] + no * self.other[0];
        let py = ns * self.sweep[1] + no * self.other[1];
        px >= bounds[0] && px <= bounds[1] && py >= bounds[2] && py <= bounds[3]
    }

    pub fn count(&self, x: [f64; 2]) -> u64 {
        let bounds = self.window.bounds(self.t, x);
        let (ha, hb) = (self.t * self.window.a, self.t * self.window.b);
        let centre = self.sweep_row[0] * x[0] + self.sweep_row[1] * x[1];
        let spread = self.sweep_row[0].abs() * ha + self.sweep_row[1].abs() * hb;
        let s_lo = (centre - spread).floor() as i64 - 1;
        let s_hi = (centre + spread).ceil() as i64 + 1;
        let mut total: u64 = 0;
        for ns in s_lo..=s_hi {
            let nsf = ns as f64;
            let q = [nsf * self.sweep[0], nsf * self.sweep[1]];
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            let mut empty = false;
            for axis in 0..2 {
                let (blo, bhi) = (bounds[2 * axis], bounds[2 * axis + 1]);
                let o = self.other[axis];
                if o == 0.0 {
                    if q[axis] < blo || q[axis] > bhi {
                        empty = true;
                    }
                    continue;
                }
                let (e1, e2) = ((blo - q[axis]) / o, (bhi - q[axis]) / o);
                let (a, b) = if o > 0.0 { (e1, e2) } else { (e2, e1) };
                lo = lo.max(a);
                hi = hi.min(b);
            }
            if empty || lo > hi + 1.0 {
                continue;
            }
            let mut n_lo = lo.ceil();
            let mut n_hi = hi.floor();
            // settle endpoints by direct substitution
            for _ in 0..2 {
                if self.inside(&bounds, nsf, n_lo - 1.0) {
                    n_lo -= 1.0;
                }
            }
            for _ in 0..2 {
                if n_lo <= n_hi && !self.inside(&bounds, nsf, n_lo) {
                    n_lo += 1.0;
                }
            }
            for _ in 0..2 {
                if self.inside(&bounds, nsf, n_hi + 1.0) {
                    n_hi += 1.0;
                }
            }
            for _ in 0..2 {
                if n_hi >= n_lo && !self.inside(&bounds, nsf, n_hi) {
                    n_hi -= 1.0;
                }
            }
            if n_hi >= n_lo {
                total += (n_hi - n_lo) as u64 + 1;
            }
        }
        total
    }

    /// `N - t^2 Area / Covol`.
    pub fn error(&self, x: [f64; 2]) -> f64 {
        self.count(x) as f64 - self.expected
    }
}

/// `N(tP + X, L)`.
pub fn count_points(lattice: &LatticeBasis, window: RectWindow, t: f64, x: &TorusPoint) -> Result<u64> {
    Ok(RectCounter::new(lattice, window, t)?.count(x.x))
}

/// `R(tP + X, L)`.
pub fn count_error(lattice: &LatticeBasis, window: RectWindow, t: f64, x: &TorusPoint) -> Result<f64> {
    Ok(RectCounter::new(lattice, window, t)?.error(x.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XSampling {
    /// `n_x` iid uniform points of the torus.
    Random,
    /// The `n_x x n_x` grid of cell midpoints.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub m2: f64,
    pub stderr: f64,
}

/// Torus points used by [`second_moment_over_x`] and the spectral residual.
pub fn torus_samples(lattice: &LatticeBasis, n_x: usize, seed: u64, mode: XSampling) -> Vec<TorusPoint> {
    match mode {
        XSampling::Random => (0..n_x)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let u = [rng.gen::<f64>(), rng.gen::<f64>()];
                TorusPoint::from_frac(lattice, u)
            })
            .collect(),
        XSampling::Grid => {
            let n = n_x as f64;
            (0..n_x * n_x)
                .map(|k| {
                    let (i, j) = (k / n_x, k % n_x);
                    TorusPoint::from_frac(lattice, [(i as f64 + 0.5) / n, (j as f64 + 0.5) / n])
                })
                .collect()
        }
    }
}

/// `E_X[R(tP + X, L)^2]` over the torus `R^2 / L`.
pub fn second_moment_over_x(
    lattice: &LatticeBasis,
    window: RectWindow,
    t: f64,
    n_x: usize,
    seed: u64,
    mode: XSampling,
) -> Result<MomentEstimate> {
    if n_x < 2 {
        return Err(LatlabError::Domain(format!("need at least 2 translations, got {n_x}")));
    }
    let counter = RectCounter::new(lattice, window, t)?;
    let points = torus_samples(lattice, n_x, seed, mode);
    let squares: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let r = counter.error(p.x);
            r * r
        })
        .collect();
    Ok(match mode {
        XSampling::Random => {
            let s = SampleStats::of(&squares);
            MomentEstimate { m2: s.mean, stderr: s.stderr }
        }
        XSampling::Grid => MomentEstimate {
            m2: compensated_sum(squares.iter().copied()) / squares.len() as f64,
            stderr: 0.0,
        },
    })
}
