//! Seeded Monte Carlo experiments and their CSV reports.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]: random
//! draws come from per-sample streams keyed by `(seed, index)` and all
//! aggregates are accumulated in index order, so reruns produce identical
//! files whatever the thread count.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::counting::{second_moment_over_x, RectWindow, XSampling};
use crate::error::{LatlabError, Result};
use crate::lattice::LatticeSpec;
use crate::numeric::{derive_seed, stream_rng, SampleStats};
use crate::oracles::{admissible_tail_integral, IntegralRegionSpec};
use crate::orbit::{berry_esseen_check, orbit_v_and_norms, SignModel};
use crate::spectral::{big_v, SpectralProfile, TruncationSpec};
use crate::zsquare::empirical_vs_beta;

/// One piece of a step density: mass `weight` spread uniformly on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStep {
    pub weight: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Probability density `rho` on `[0, 1]` for the dilation parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Uniform,
    /// Uniform on `[alpha, 1]`.
    Window(f64),
    /// Finitely many uniform pieces on disjoint subintervals.
    Steps(Vec<DensityStep>),
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::Uniform => Ok(()),
            DensitySpec::Window(a) => {
                if *a > 0.0 && *a < 1.0 {
                    Ok(())
                } else {
                    Err(LatlabError::BadDensity(format!("window needs 0 < alpha < 1, got {a}")))
                }
            }
            DensitySpec::Steps(steps) => {
                if steps.is_empty() {
                    return Err(LatlabError::BadDensity("no steps".into()));
                }
                for s in steps {
                    if !(s.weight > 0.0) || !(0.0 <= s.lo && s.lo < s.hi && s.hi <= 1.0) {
                        return Err(LatlabError::BadDensity(format!("bad step {s:?}")));
                    }
                }
                let mut sorted = steps.clone();
                sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
                if sorted.windows(2).any(|w| w[1].lo < w[0].hi) {
                    return Err(LatlabError::BadDensity("steps overlap".into()));
                }
                let mass: f64 = steps.iter().map(|s| s.weight).sum();
                if (mass - 1.0).abs() > 1e-12 {
                    return Err(LatlabError::BadDensity(format!("total mass is {mass}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// One draw on `[0, 1]`.
    pub fn sample_unit<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DensitySpec::Uniform => rng.gen(),
            DensitySpec::Window(a) => a + (1.0 - a) * rng.gen::<f64>(),
            DensitySpec::Steps(steps) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let step = steps
                    .iter()
                    .find(|s| {
                        acc += s.weight;
                        u < acc
                    })
                    .unwrap_or_else(|| steps.last().expect("validated"));
                step.lo + (step.hi - step.lo) * rng.gen::<f64>()
            }
        }
    }
}

/// `uniform | window:<alpha> | steps:<w>:<lo>:<hi>,<w>:<lo>:<hi>,...`
impl FromStr for DensitySpec {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| LatlabError::Parse(format!("bad number {v:?} in density")));
        let spec = if s == "uniform" {
            DensitySpec::Uniform
        } else if let Some(a) = s.strip_prefix("window:") {
            DensitySpec::Window(num(a)?)
        } else if let Some(rest) = s.strip_prefix("steps:") {
            let steps = rest
                .split(',')
                .map(|part| {
                    let f: Vec<&str> = part.split(':').collect();
                    if f.len() != 3 {
                        return Err(LatlabError::Parse(format!("step {part:?} is not weight:lo:hi")));
                    }
                    Ok(DensityStep { weight: num(f[0])?, lo: num(f[1])?, hi: num(f[2])? })
                })
                .collect::<Result<Vec<_>>>()?;
            DensitySpec::Steps(steps)
        } else {
            return Err(LatlabError::Parse(format!("unknown density {s:?}")));
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Uniform => write!(f, "uniform"),
            DensitySpec::Window(a) => write!(f, "window:{a}"),
            DensitySpec::Steps(steps) => {
                let parts: Vec<String> = steps.iter().map(|s| format!("{}:{}:{}", s.weight, s.lo, s.hi)).collect();
                write!(f, "steps:{}", parts.join(","))
            }
        }
    }
}

/// `n` dilations with density `rho(t / big_t) / big_t` on `[0, big_t]`.
pub fn sample_t(rho: &DensitySpec, big_t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    rho.validate()?;
    if n == 0 {
        return Err(LatlabError::Domain("need at least one sample".into()));
    }
    if !(big_t > 0.0) {
        return Err(LatlabError::Domain(format!("bigT must be positive, got {big_t}")));
    }
    Ok((0..n as u64).map(|i| big_t * rho.sample_unit(&mut stream_rng(seed, i))).collect())
}

/// Which experiment a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SecondMoment,
    GDecay,
    OrbitClt,
    ZSquare,
    VOracle,
}

impl FromStr for ExperimentKind {
    type Err = LatlabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "secondmoment" => Self::SecondMoment,
            "gdecay" => Self::GDecay,
            "orbitclt" => Self::OrbitClt,
            "zsquare" => Self::ZSquare,
            "voracle" => Self::VOracle,
            other => return Err(LatlabError::BadConfig(format!("unknown experiment {other:?}"))),
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SecondMoment => "secondmoment",
            Self::GDecay => "gdecay",
            Self::OrbitClt => "orbitclt",
            Self::ZSquare => "zsquare",
            Self::VOracle => "voracle",
        })
    }
}

/// Upper bound on `samples_t * samples_x` for the counting experiments.
pub const MAX_COUNTS: usize = 10_000_000;

/// Parameters of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub lattice: LatticeSpec,
    pub window: RectWindow,
    pub big_t: f64,
    pub samples_t: usize,
    pub samples_x: usize,
    pub kmax: TruncationSpec,
    pub rho: DensitySpec,
    pub r: f64,
    pub dim: usize,
    pub trials: usize,
    pub theta: SignModel,
    pub x: f64,
    pub k_list: Vec<u32>,
    /// `Num` floor used by the V oracle.
    pub c: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for everything except the seed, which is always required.
    pub fn new(experiment: ExperimentKind, lattice: LatticeSpec, seed: u64) -> Self {
        Self {
            experiment,
            lattice,
            window: RectWindow::square(),
            big_t: 100.0,
            samples_t: 200,
            samples_x: 200,
            kmax: TruncationSpec::default(),
            rho: if experiment == ExperimentKind::ZSquare { DensitySpec::Uniform } else { DensitySpec::Window(0.5) },
            r: 50.0,
            dim: 2,
            trials: 10_000,
            theta: SignModel::Rademacher,
            x: 0.0,
            k_list: vec![0, 1, 2, 3, 4],
            c: 1.0,
            seed,
            out: None,
        }
    }

    /// Parse `key = value` lines (`#` starts a comment). Keys mirror the CLI
    /// flag names.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LatlabError::BadConfig(format!("line {}: expected key = value", no + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let experiment: ExperimentKind = get("experiment")
            .ok_or_else(|| LatlabError::BadConfig("missing key experiment".into()))?
            .parse()?;
        let seed = get("seed")
            .ok_or_else(|| LatlabError::BadConfig("missing key seed".into()))?
            .parse()
            .map_err(|_| LatlabError::BadConfig("seed must be a nonnegative integer".into()))?;
        let lattice = match get("lattice") {
            Some(s) => s.parse()?,
            None if experiment == ExperimentKind::ZSquare => LatticeSpec::zsquare(),
            None => return Err(LatlabError::BadConfig("missing key lattice".into())),
        };
        let mut cfg = Self::new(experiment, lattice, seed);
        let real = |key: &str, v: &str| v.parse::<f64>().map_err(|_| LatlabError::BadConfig(format!("{key}: bad number {v:?}")));
        let count = |key: &str, v: &str| match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(LatlabError::BadConfig(format!("{key}: expected a positive integer, got {v:?}"))),
        };
        let (mut a, mut b) = (1.0, 1.0);
        for (k, v) in &pairs {
            let v = v.as_str();
            match k.as_str() {
                "experiment" | "seed" | "lattice" => {}
                "a" => a = real(k, v)?,
                "b" => b = real(k, v)?,
                "bigT" => cfg.big_t = real(k, v)?,
                "samples-t" => cfg.samples_t = count(k, v)?,
                "samples-x" => cfg.samples_x = count(k, v)?,
                "kmax" => cfg.kmax = v.parse()?,
                "rho" => cfg.rho = v.parse()?,
                "r" => cfg.r = real(k, v)?,
                "dim" => cfg.dim = count(k, v)?,
                "trials" => cfg.trials = count(k, v)?,
                "theta" => cfg.theta = v.parse()?,
                "x" => cfg.x = real(k, v)?,
                "C" => cfg.c = real(k, v)?,
                "k-list" => {
                    cfg.k_list = v
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| LatlabError::BadConfig(format!("k-list: bad entry {s:?}"))))
                        .collect::<Result<_>>()?
                }
                "out" => cfg.out = Some(PathBuf::from(v)),
                other => return Err(LatlabError::BadConfig(format!("unknown key {other:?}"))),
            }
        }
        cfg.window = RectWindow::new(a, b)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.big_t > 0.0) {
            return Err(LatlabError::BadConfig(format!("bigT must be positive, got {}", self.big_t)));
        }
        if self.samples_t.saturating_mul(self.samples_x) > MAX_COUNTS
            && self.experiment == ExperimentKind::SecondMoment
        {
            return Err(LatlabError::BadConfig(format!(
                "samples-t * samples-x = {} exceeds the cap {MAX_COUNTS}",
                self.samples_t * self.samples_x
            )));
        }
        self.rho.validate()
    }
}

/// A value with its standard error (0 when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistic {
    pub value: f64,
    pub stderr: f64,
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Real(x) => write!(f, "{x:.16e}"),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Summary statistics, metadata and the per-sample table of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub stats: Vec<(String, Statistic)>,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Wall-clock time; reported by callers but never written to CSV so
    /// that reruns stay byte-identical.
    pub duration: Duration,
}

impl MomentReport {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            stats: Vec::new(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            duration: Duration::ZERO,
        }
    }

    pub fn stat(&self, name: &str) -> Option<Statistic> {
        self.stats.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    pub fn push_stat(&mut self, name: &str, value: f64, stderr: f64) {
        self.stats.push((name.to_string(), Statistic { value, stderr }));
    }

    pub fn push_meta(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    /// The whole file: `# key=value` lines, header, rows, LF endings.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}={v}\n"));
        }
        for (k, st) in &self.stats {
            s.push_str(&format!("# {k}={}\n", Cell::Real(st.value)));
            s.push_str(&format!("# {k}.stderr={}\n", Cell::Real(st.stderr)));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn emit_csv(report: &MomentReport, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(report.to_csv().as_bytes())?;
    Ok(())
}

fn base_metadata(report: &mut MomentReport, cfg: &ExperimentConfig) {
    report.push_meta("experiment", cfg.experiment);
    report.push_meta("lattice", &cfg.lattice);
    report.push_meta("seed", cfg.seed);
}

/// `1 / (4 pi^4 covol(L)^2)`, the limit of `E_X[R^2] / V(dual L, t)`.
pub fn second_moment_target(covol: f64) -> f64 {
    1.0 / (4.0 * PI.powi(4) * covol * covol)
}

/// `E_X[R^2] / V(dual L, t)` over random dilations; CSV `t,V,m2_over_V`.
pub fn run_second_moment_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let lattice = cfg.lattice.build()?;
    let ts = sample_t(&cfg.rho, cfg.big_t, cfg.samples_t, cfg.seed)?;
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let profile = SpectralProfile::new(&lattice.dual()?, t_max)?;
    let mut report = MomentReport::new(&["t", "V", "m2_over_V"]);
    base_metadata(&mut report, cfg);
    report.push_meta("a", cfg.window.a());
    report.push_meta("b", cfg.window.b());
    report.push_meta("bigT", cfg.big_t);
    report.push_meta("rho", &cfg.rho);
    report.push_meta("samples-t", cfg.samples_t);
    report.push_meta("samples-x", cfg.samples_x);
    let mut ratios = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        let v = profile.v(t);
        if v == 0.0 {
            return Err(LatlabError::EmptyBall(t));
        }
        let m2 = second_moment_over_x(&lattice, cfg.window, t, cfg.samples_x, derive_seed(cfg.seed, i as u64), XSampling::Random)?;
        ratios.push(m2.m2 / v);
        report.rows.push(vec![Cell::Real(t), Cell::Real(v), Cell::Real(m2.m2 / v)]);
    }
    let s = SampleStats::of(&ratios);
    report.push_stat("mean_m2_over_V", s.mean, s.stderr);
    report.push_stat("std_m2_over_V", s.std, 0.0);
    report.push_stat("target", second_moment_target(lattice.covol()), 0.0);
    report.duration = start.elapsed();
    Ok(report)
}

/// `G1/V` and `|G2|/V, |G3|/V, |G4|/V` over random dilations for the
/// frequency lattice `dual L`; CSV `t,V,G1_over_V,G2_over_V,G3_over_V,G4_over_V`
/// (the last three in absolute value).
pub fn run_g_decay_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let m = cfg.lattice.build()?.dual()?;
    let ts = sample_t(&cfg.rho, cfg.big_t, cfg.samples_t, cfg.seed)?;
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let profile = SpectralProfile::new(&m, t_max)?;
    let mut report = MomentReport::new(&["t", "V", "G1_over_V", "G2_over_V", "G3_over_V", "G4_over_V"]);
    base_metadata(&mut report, cfg);
    report.push_meta("bigT", cfg.big_t);
    report.push_meta("rho", &cfg.rho);
    report.push_meta("kmax", cfg.kmax);
    let mut cols: [Vec<f64>; 4] = Default::default();
    let mut worst_identity: f64 = 0.0;
    let mut max_tail: f64 = 0.0;
    for &t in &ts {
        let s = profile.g_terms(cfg.window, t, cfg.kmax);
        if s.v == 0.0 {
            return Err(LatlabError::EmptyBall(t));
        }
        worst_identity = worst_identity.max(s.decomposition_residual() / s.g1.abs().max(1.0));
        max_tail = max_tail.max(s.truncation_error);
        let vals = [s.g1 / s.v, s.g2.abs() / s.v, s.g3.abs() / s.v, s.g4.abs() / s.v];
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
        let mut row = vec![Cell::Real(t), Cell::Real(s.v)];
        row.extend(vals.iter().map(|&v| Cell::Real(v)));
        report.rows.push(row);
    }
    for (name, c) in ["G1_over_V", "absG2_over_V", "absG3_over_V", "absG4_over_V"].iter().zip(&cols) {
        let st = SampleStats::of(c);
        report.push_stat(&format!("mean_{name}"), st.mean, st.stderr);
    }
    report.push_stat("G1_target", m.covol().powi(2) / (4.0 * PI.powi(4)), 0.0);
    report.push_stat("max_identity_residual", worst_identity, 0.0);
    report.push_meta("max_truncation_error", Cell::Real(max_tail));
    report.duration = start.elapsed();
    Ok(report)
}

/// One orbit CLT measurement; CSV `r,count,v_tilde,ks,be_bound,trials,seed`.
pub fn run_orbit_clt_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let start = Instant::now();
    let lattice = cfg.lattice.build()?;
    let orbit = orbit_v_and_norms(&lattice, cfg.dim, cfg.r)?;
    let stats = orbit.stats(cfg.theta);
    let values = orbit.simulate(cfg.theta, cfg.trials, cfg.seed)?;
    let check = berry_esseen_check(&values, &stats)?;
    let mut report = MomentReport::new(&["r", "count", "v_tilde", "ks", "be_bound", "trials", "seed"]);
    base_metadata(&mut report, cfg);
    report.push_meta("dim", cfg.dim);
    report.push_meta("theta", cfg.theta);
    report.push_meta("pass", check.pass);
    report.rows.push(vec![
        Cell::Real(cfg.r),
        Cell::Int(stats.count as i64),
        Cell::Real(stats.v_tilde),
        Cell::Real(check.ks_distance),
        Cell::Real(stats.be_bound),
        Cell::Int(cfg.trials as i64),
        Cell::Int(cfg.seed as i64),
    ]);
    let s = SampleStats::of(&values);
    report.push_stat("mean", s.mean, s.stderr);
    report.push_stat("std", s.std, 0.0);
    report.duration = start.elapsed();
    Ok(report)
}

/// Sawtooth moments against `a_k`; CSV `k,a_k,empirical,abs_err` and a
/// final `ks,<value>` row.
pub fn run_zsquare_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let start = Instant::now();
    let r = empirical_vs_beta(cfg.x, cfg.big_t, cfg.samples_t, &cfg.rho, cfg.seed, &cfg.k_list)?;
    let mut report = MomentReport::new(&["k", "a_k", "empirical", "abs_err"]);
    report.push_meta("experiment", ExperimentKind::ZSquare);
    report.push_meta("x", cfg.x);
    report.push_meta("y", Cell::Real(r.y));
    report.push_meta("bigT", cfg.big_t);
    report.push_meta("samples-t", cfg.samples_t);
    report.push_meta("rho", &cfg.rho);
    report.push_meta("seed", cfg.seed);
    for m in &r.moments {
        report.rows.push(vec![Cell::Int(m.k as i64), Cell::Real(m.limit), Cell::Real(m.empirical), Cell::Real(m.abs_err)]);
        report.push_stat(&format!("m{}", m.k), m.empirical, m.stderr);
    }
    report.rows.push(vec![Cell::Text("ks".into()), Cell::Real(r.ks)]);
    report.push_stat("ks", r.ks, 0.0);
    report.duration = start.elapsed();
    Ok(report)
}

/// `V(L, t)` against the admissible region integral with `A = |L|` on a
/// log-spaced grid of `samples-t` radii up to `bigT`; CSV `t,V,integral,ratio`.
pub fn run_v_oracle_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let start = Instant::now();
    let lattice = cfg.lattice.build()?;
    let a = lattice.shortest_norm();
    let lo = (2.0 * a).max((2.0 * cfg.c).sqrt()).max(a * 1.0001);
    if cfg.big_t <= lo {
        return Err(LatlabError::BadConfig(format!("bigT must exceed {lo}")));
    }
    let profile = SpectralProfile::new(&lattice, cfg.big_t)?;
    let mut report = MomentReport::new(&["t", "V", "integral", "ratio"]);
    base_metadata(&mut report, cfg);
    report.push_meta("C", cfg.c);
    report.push_meta("A", Cell::Real(a));
    let n = cfg.samples_t.max(2);
    for i in 0..n {
        let t = lo * (cfg.big_t / lo).powf(i as f64 / (n - 1) as f64);
        let v = profile.v(t);
        let j = admissible_tail_integral(&IntegralRegionSpec::admissible(a, cfg.c, t)?)?;
        report.rows.push(vec![Cell::Real(t), Cell::Real(v), Cell::Real(j.value), Cell::Real(v / j.value)]);
    }
    report.duration = start.elapsed();
    Ok(report)
}

/// Run whichever experiment `cfg` names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MomentReport> {
    match cfg.experiment {
        ExperimentKind::SecondMoment => run_second_moment_experiment(cfg),
        ExperimentKind::GDecay => run_g_decay_experiment(cfg),
        ExperimentKind::OrbitClt => run_orbit_clt_experiment(cfg),
        ExperimentKind::ZSquare => run_zsquare_experiment(cfg),
        ExperimentKind::VOracle => run_v_oracle_experiment(cfg),
    }
}

/// `V(L, t)` for each radius, by direct enumeration.
pub fn v_series(lattice: &crate::lattice::LatticeBasis, ts: &[f64]) -> Result<Vec<f64>> {
    ts.iter().map(|&t| big_v(lattice, t)).collect()
}
