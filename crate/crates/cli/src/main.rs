//! `latlab` command line front end.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use latlab::counting::{count_points, second_moment_over_x, torus_samples, RectCounter, RectWindow, TorusPoint, XSampling};
use latlab::experiments::{
    emit_csv, run_experiment, run_orbit_clt_experiment, run_zsquare_experiment, Cell, DensitySpec, ExperimentConfig,
    ExperimentKind, MomentReport,
};
use latlab::numeric::SampleStats;
use latlab::oracles::{evaluate_oracle, OracleKind};
use latlab::orbit::SignModel;
use latlab::spectral::{SpectralProfile, TruncationSpec};
use latlab::{LatlabError, LatticeSpec};

#[derive(Parser)]
#[command(name = "latlab", version, about = "Lattice point counting errors in translated rectangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count lattice points in x + t[-a, a] x [-b, b].
    Count(CountArgs),
    /// Estimate E_X[R^2] over translations.
    Secondmoment(SecondMomentArgs),
    /// V, G and G1..G4 for a frequency lattice, optionally with S values.
    Spectral(SpectralArgs),
    /// Diagonal-orbit weights and the normalized sign sum.
    Orbit(OrbitArgs),
    /// Sawtooth moments of Z^2 against the limit law.
    Zsquare(ZSquareArgs),
    /// Region integrals by quadrature.
    Oracle(OracleArgs),
    /// Run an experiment described by a key = value file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct BoxArgs {
    /// zsquare | quad:<a>,<a'> | basis:<b11>,<b21>,<b12>,<b22> | haar:<seed>, optionally with !unimodular
    #[arg(long)]
    lattice: LatticeSpec,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    t: f64,
}

impl BoxArgs {
    fn window(&self) -> Result<RectWindow> {
        Ok(RectWindow::new(self.a, self.b)?)
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<&str> = s.split(',').collect();
    if v.len() != 2 {
        return Err(format!("expected x1,x2, got {s:?}"));
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(v[0])?, p(v[1])?])
}

#[derive(Clone)]
struct KList(Vec<u32>);

fn parse_k_list(s: &str) -> Result<KList, String> {
    s.split(',').map(|k| k.trim().parse::<u32>().map_err(|e| format!("{k:?}: {e}"))).collect::<Result<_, _>>().map(KList)
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    bx: BoxArgs,
    /// Translation, in the ambient coordinates.
    #[arg(long, value_parser = parse_pair, default_value = "0,0")]
    x: [f64; 2],
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Grid,
}

#[derive(Args)]
struct SecondMomentArgs {
    #[command(flatten)]
    bx: BoxArgs,
    #[arg(long = "samples-x")]
    samples_x: usize,
    #[arg(long, value_enum, default_value = "random")]
    mode: Mode,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectralArgs {
    /// The frequency lattice; translations live on its dual.
    #[command(flatten)]
    bx: BoxArgs,
    /// Harmonic cutoff, or `inf` for the closed forms.
    #[arg(long, default_value = "100")]
    kmax: TruncationSpec,
    #[arg(long, value_parser = parse_pair)]
    x: Option<[f64; 2]>,
    /// Average S^2 over the n x n midpoint grid of the torus.
    #[arg(long, conflicts_with_all = ["samples_x", "x"])]
    grid: Option<usize>,
    #[arg(long = "samples-x", requires = "seed", conflicts_with = "x")]
    samples_x: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    lattice: LatticeSpec,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value = "rademacher")]
    theta: SignModel,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ZSquareArgs {
    #[arg(long)]
    x: f64,
    #[arg(long = "bigT")]
    big_t: f64,
    #[arg(long = "samples-t")]
    samples_t: usize,
    #[arg(long, default_value = "uniform")]
    rho: DensitySpec,
    #[arg(long = "k-list", value_parser = parse_k_list, default_value = "0,1,2,3,4")]
    k_list: KList,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Admissible,
    Logweighted,
    Asymmetric,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long = "A")]
    big_a: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    big_c: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Outer radius (T for the asymmetric integral).
    #[arg(long)]
    t: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `out` key of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_report(report: &MomentReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            emit_csv(report, path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} ({} rows, {:.3} s)", path.display(), report.rows.len(), report.duration.as_secs_f64());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn count(args: CountArgs) -> Result<()> {
    let lattice = args.bx.lattice.build()?;
    let window = args.bx.window()?;
    let x = TorusPoint::raw(&lattice, args.x);
    let n = count_points(&lattice, window, args.bx.t, &x)?;
    let expected = RectCounter::new(&lattice, window, args.bx.t)?.expected();
    println!("count={n}");
    println!("expected={expected:.16e}");
    println!("error={:.16e}", n as f64 - expected);
    Ok(())
}

fn second_moment(args: SecondMomentArgs) -> Result<()> {
    let lattice = args.bx.lattice.build()?;
    let window = args.bx.window()?;
    let t = args.bx.t;
    let mode = match args.mode {
        Mode::Random => XSampling::Random,
        Mode::Grid => XSampling::Grid,
    };
    let m2 = second_moment_over_x(&lattice, window, t, args.samples_x, args.seed, mode)?;
    let mut report = MomentReport::new(&["t", "m2", "stderr", "V", "m2_over_V"]);
    report.push_meta("lattice", &args.bx.lattice);
    report.push_meta("a", window.a());
    report.push_meta("b", window.b());
    report.push_meta("samples-x", args.samples_x);
    report.push_meta("mode", if matches!(mode, XSampling::Grid) { "grid" } else { "random" });
    report.push_meta("seed", args.seed);
    let v = match latlab::spectral::big_v(&lattice.dual()?, t) {
        Ok(v) => Some(v),
        Err(LatlabError::NumZero { .. }) => {
            eprintln!("note: V is undefined for this lattice (axis vectors in the dual); use `latlab zsquare` for Z^2");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let ratio = v.filter(|&v| v > 0.0).map(|v| m2.m2 / v);
    let opt = |x: Option<f64>| x.map_or(Cell::Text("NA".into()), Cell::Real);
    report.rows.push(vec![Cell::Real(t), Cell::Real(m2.m2), Cell::Real(m2.stderr), opt(v), opt(ratio)]);
    write_report(&report, args.out.as_deref())
}

fn spectral(args: SpectralArgs) -> Result<()> {
    let m = args.bx.lattice.build()?;
    let window = args.bx.window()?;
    let t = args.bx.t;
    let profile = SpectralProfile::new(&m, t)?;
    let sums = profile.g_terms(window, t, args.kmax);
    let series = profile.series(window, t, args.kmax);
    let mut report = MomentReport::new(&["t", "V", "G", "G1", "G2", "G3", "G4", "kmax", "tail_bound"]);
    report.push_meta("lattice", &args.bx.lattice);
    report.push_meta("a", window.a());
    report.push_meta("b", window.b());
    report.push_meta("decomposition_residual", Cell::Real(sums.decomposition_residual()));
    let counted = m.dual()?;
    if let Some(x) = args.x {
        report.push_meta("x", format!("{},{}", x[0], x[1]));
        report.push_meta("S", Cell::Real(series.eval(x)));
        report.push_meta("S_tail_bound", Cell::Real(series.tail_bound()));
    }
    let xs = match (args.grid, args.samples_x) {
        (Some(n), _) => {
            report.push_meta("grid", n);
            Some(torus_samples(&counted, n, 0, XSampling::Grid))
        }
        (None, Some(n)) => {
            let seed = args.seed.context("--samples-x needs --seed")?;
            report.push_meta("samples-x", n);
            report.push_meta("seed", seed);
            Some(torus_samples(&counted, n, seed, XSampling::Random))
        }
        (None, None) => None,
    };
    if let Some(xs) = xs {
        let pts: Vec<[f64; 2]> = xs.iter().map(|p| p.x).collect();
        let sq: Vec<f64> = series.eval_many(&pts).iter().map(|s| s * s).collect();
        let st = SampleStats::of(&sq);
        report.push_stat("mean_S2", st.mean, st.stderr);
    }
    report.rows.push(vec![
        Cell::Real(t),
        Cell::Real(sums.v),
        Cell::Real(sums.g),
        Cell::Real(sums.g1),
        Cell::Real(sums.g2),
        Cell::Real(sums.g3),
        Cell::Real(sums.g4),
        Cell::Text(args.kmax.to_string()),
        Cell::Real(sums.truncation_error),
    ]);
    write_report(&report, args.out.as_deref())
}

fn orbit(args: OrbitArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::OrbitClt, args.lattice, args.seed);
    cfg.dim = args.dim;
    cfg.r = args.r;
    cfg.theta = args.theta;
    cfg.trials = args.trials;
    let report = run_orbit_clt_experiment(&cfg)?;
    write_report(&report, args.out.as_deref())
}

fn zsquare(args: ZSquareArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::ZSquare, LatticeSpec::zsquare(), args.seed);
    cfg.x = args.x;
    cfg.big_t = args.big_t;
    cfg.samples_t = args.samples_t;
    cfg.rho = args.rho;
    cfg.k_list = args.k_list.0;
    let report = run_zsquare_experiment(&cfg)?;
    write_report(&report, args.out.as_deref())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let kind = match args.which {
        Which::Admissible => OracleKind::Admissible,
        Which::Logweighted => OracleKind::LogWeighted,
        Which::Asymmetric => OracleKind::Asymmetric,
    };
    let v = evaluate_oracle(kind, args.big_a, args.big_c, args.alpha, args.t)?;
    let mut report = MomentReport::new(&["which", "A", "C", "alpha", "t", "value", "error"]);
    report.push_meta("evaluations", v.evaluations);
    let name = match kind {
        OracleKind::Admissible => "admissible",
        OracleKind::LogWeighted => "logweighted",
        OracleKind::Asymmetric => "asymmetric",
    };
    report.rows.push(vec![
        Cell::Text(name.into()),
        Cell::Real(args.big_a),
        Cell::Real(args.big_c),
        Cell::Real(args.alpha),
        Cell::Real(args.t),
        Cell::Real(v.value),
        Cell::Real(v.error),
    ]);
    write_report(&report, args.out.as_deref())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_file(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let report = run_experiment(&cfg)?;
    write_report(&report, args.out.as_deref().or(cfg.out.as_deref()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Count(a) => count(a),
        Command::Secondmoment(a) => second_moment(a),
        Command::Spectral(a) => spectral(a),
        Command::Orbit(a) => orbit(a),
        Command::Zsquare(a) => zsquare(a),
        Command::Oracle(a) => oracle(a),
        Command::Experiment(a) => experiment(a),
    }
}
