//! Acceptance suite. Every criterion runs at its stated tolerance and writes
//! one PASS/FAIL line straight to stderr so the summary shows even when the
//! test harness captures output.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;

use latlab::counting::{count_error, count_points, torus_samples, RectWindow, TorusPoint, XSampling};
use latlab::experiments::{run_g_decay_experiment, run_second_moment_experiment, DensitySpec, ExperimentConfig, ExperimentKind};
use latlab::lattice::{sample_haar_lattice_2d, LatticeBasis, LatticeSpec, QuadraticPair};
use latlab::numeric::stream_rng;
use latlab::oracles::{admissible_tail_integral, asymmetric_integral, IntegralRegionSpec};
use latlab::orbit::{berry_esseen_check, orbit_v_and_norms, SignModel};
use latlab::spectral::{SpectralProfile, TruncationSpec};
use latlab::zsquare::{delta_sawtooth, empirical_vs_beta, limit_moment, r_over_t_exact};

/// Master seed, fixed before any criterion was run.
const SEED: u64 = 20_240_601;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn announce(o: &Outcome) {
    let line = format!(
        "criterion {:>2} [{}] {}: {}\n",
        o.id,
        if o.pass { "PASS" } else { "FAIL" },
        o.name,
        o.detail
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn timed(id: u32, name: &'static str, limit: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let o = Outcome {
        id,
        name,
        pass: ok && in_time,
        detail: format!("{detail}; runtime {:.1}s (limit {}s){}", elapsed.as_secs_f64(), limit.as_secs(), if in_time { "" } else { " EXCEEDED" }),
    };
    announce(&o);
    o
}

fn quad() -> LatticeBasis {
    LatticeBasis::quadratic(QuadraticPair::new(SQRT_2, -SQRT_2).unwrap()).unwrap()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A random planar lattice from a mix of families.
fn random_lattice<R: Rng>(rng: &mut R, i: usize) -> LatticeBasis {
    match i % 4 {
        0 => {
            let a = rng.gen_range(0.3..3.0);
            let b = -rng.gen_range(0.3..3.0);
            LatticeBasis::quadratic(QuadraticPair::new(a, b).unwrap()).unwrap()
        }
        1 => sample_haar_lattice_2d(rng.gen()),
        2 => loop {
            let e: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if (e[0] * e[3] - e[1] * e[2]).abs() > 0.3 {
                break LatticeBasis::from_columns([e[0], e[1]], [e[2], e[3]]).unwrap();
            }
        },
        _ => LatticeBasis::zsquare(),
    }
}

/// Brute force over a coefficient box of the reduced basis.
fn naive_count(l: &LatticeBasis, w: RectWindow, t: f64, x: [f64; 2]) -> u64 {
    let r = l.reduce();
    let inv = r.inverse();
    let lo = [x[0] - t * w.a(), x[1] - t * w.b()];
    let hi = [x[0] + t * w.a(), x[1] + t * w.b()];
    let corners = [[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]];
    let mut range = [[i64::MAX, i64::MIN]; 2];
    for c in corners {
        for (k, rg) in range.iter_mut().enumerate() {
            let v = inv[(k, 0)] * c[0] + inv[(k, 1)] * c[1];
            rg[0] = rg[0].min(v.floor() as i64 - 1);
            rg[1] = rg[1].max(v.ceil() as i64 + 1);
        }
    }
    let (b1, b2) = (r.col2(0), r.col2(1));
    let mut n = 0;
    for i in range[0][0]..=range[0][1] {
        for j in range[1][0]..=range[1][1] {
            let p = [i as f64 * b1[0] + j as f64 * b2[0], i as f64 * b1[1] + j as f64 * b2[1]];
            if p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] {
                n += 1;
            }
        }
    }
    n
}

fn counting_oracle() -> Outcome {
    timed(1, "line-sweep count equals brute force on 200 cases", Duration::from_secs(10), || {
        let mut rng = stream_rng(SEED, 1);
        let mut mismatches = Vec::new();
        for i in 0..200 {
            let l = random_lattice(&mut rng, i);
            let w = RectWindow::new(rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)).unwrap();
            let t = rng.gen_range(0.1..50.0);
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let fast = count_points(&l, w, t, &TorusPoint::raw(&l, x)).unwrap();
            let slow = naive_count(&l, w, t, x);
            if fast != slow {
                mismatches.push((i, fast, slow));
            }
        }
        (mismatches.is_empty(), format!("{} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()))
    })
}

fn exact_identities() -> Outcome {
    timed(2, "G decomposition, dual involution, Z^2 envelope", Duration::from_secs(30), || {
        let mut rng = stream_rng(SEED, 2);
        let mut worst_g: f64 = 0.0;
        let mut g_ok = true;
        for i in 0..50 {
            let m = if i % 2 == 0 { random_lattice(&mut rng, 0) } else { sample_haar_lattice_2d(rng.gen()) };
            let w = RectWindow::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).unwrap();
            let t = rng.gen_range(1.0..40.0);
            let trunc = if i % 5 == 0 { TruncationSpec::exact() } else { TruncationSpec::new(rng.gen_range(1..300)).unwrap() };
            let s = SpectralProfile::new(&m, t).unwrap().g_terms(w, t, trunc);
            let rel = s.decomposition_residual() / s.g1.abs().max(1.0);
            worst_g = worst_g.max(rel);
            g_ok &= rel <= 1e-10;
        }
        let mut dual_ok = true;
        let mut worst_covol: f64 = 0.0;
        for i in 0..100 {
            let l = random_lattice(&mut rng, i % 3);
            let d = l.dual().unwrap();
            let err = (l.covol() * d.covol() - 1.0).abs();
            worst_covol = worst_covol.max(err);
            dual_ok &= err <= 1e-12 && d.dual().unwrap().same_lattice(&l);
        }
        let mut env_ok = true;
        let mut consistent = true;
        let z = LatticeBasis::zsquare();
        for i in 0..100_000 {
            let t = rng.gen_range(0.5..1000.0);
            let x = rng.gen_range(-1.0..1.0);
            let r = r_over_t_exact(t, x).unwrap();
            let gap = r - delta_sawtooth(t, x);
            env_ok &= (0.0..=1.0 / t).contains(&gap);
            if i % 50 == 0 {
                let e = count_error(&z, RectWindow::square(), t, &TorusPoint::raw(&z, [x, x])).unwrap() / t;
                consistent &= (e - r).abs() <= 1e-9 * t.max(1.0);
            }
        }
        (
            g_ok && dual_ok && env_ok && consistent,
            format!(
                "max G residual {worst_g:.2e}, max |covol product - 1| {worst_covol:.2e}, dual involution {dual_ok}, envelope {env_ok}, counting agrees {consistent}"
            ),
        )
    })
}

fn parseval() -> Outcome {
    timed(3, "grid mean of S^2 matches G (512^2, t=20, kmax=200)", Duration::from_secs(60), || {
        let m = quad();
        let t = 20.0;
        let trunc = TruncationSpec::new(200).unwrap();
        let profile = SpectralProfile::new(&m, t).unwrap();
        let g = profile.g_terms(RectWindow::square(), t, trunc).g;
        let xs: Vec<[f64; 2]> = torus_samples(&m.dual().unwrap(), 512, 0, XSampling::Grid).iter().map(|p| p.x).collect();
        let series = profile.series(RectWindow::square(), t, trunc);
        let s = series.eval_many(&xs);
        let mean = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        let rel = (mean / g - 1.0).abs();
        (rel <= 0.01, format!("mean S^2 {mean:.6e}, G {g:.6e}, relative gap {rel:.2e} (tol 1e-2)"))
    })
}

fn v_growth() -> Outcome {
    timed(4, "V(t)/log t bounded and bracketed by the region integral", Duration::from_secs(120), || {
        let l = quad();
        let profile = SpectralProfile::new(&l, 2000.0).unwrap();
        let ratios: Vec<f64> = (1..=40).map(|i| 50.0 * i as f64).map(|t| profile.v(t) / t.ln()).collect();
        let (lo, hi) = min_max(&ratios);
        let spread = hi / lo;
        let a = l.shortest_norm();
        let bracket: Vec<f64> = [100.0, 500.0, 2000.0]
            .iter()
            .map(|&t| profile.v(t) / admissible_tail_integral(&IntegralRegionSpec::admissible(a, 1.0, t).unwrap()).unwrap().value)
            .collect();
        let bracket_ok = bracket.iter().all(|r| (0.1..=10.0).contains(r));
        (
            spread <= 2.0 && bracket_ok,
            format!("max/min of V/log t = {spread:.3} (tol 2), V/integral at t=100,500,2000 = {bracket:.3?}"),
        )
    })
}

fn limit_constant() -> Outcome {
    timed(5, "mean E_X[R^2]/V near 1/(32 pi^4), dispersion shrinks", Duration::from_secs(600), || {
        let spec = LatticeSpec::quad(SQRT_2, -SQRT_2).unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::SecondMoment, spec, SEED + 5);
        cfg.rho = DensitySpec::Window(0.5);
        cfg.samples_t = 200;
        cfg.samples_x = 200;
        cfg.big_t = 1000.0;
        let big = run_second_moment_experiment(&cfg).unwrap();
        cfg.big_t = 100.0;
        let small = run_second_moment_experiment(&cfg).unwrap();
        let target = 1.0 / (32.0 * PI.powi(4));
        let mean = big.stat("mean_m2_over_V").unwrap().value;
        let rel = (mean / target - 1.0).abs();
        let (sd_big, sd_small) = (big.stat("std_m2_over_V").unwrap().value, small.stat("std_m2_over_V").unwrap().value);
        (
            rel <= 0.3 && sd_big < sd_small,
            format!(
                "mean {mean:.4e} vs target {target:.4e} (rel {rel:.3}, tol 0.3); std at T=1000 {sd_big:.3e} vs T=100 {sd_small:.3e}; mean at T=100 {:.4e}",
                small.stat("mean_m2_over_V").unwrap().value
            ),
        )
    })
}

fn oscillatory_decay() -> Outcome {
    timed(6, "|G2|,|G3|,|G4| over V decay; G1/V near covol^2/(4 pi^4)", Duration::from_secs(300), || {
        let spec = LatticeSpec::quad(SQRT_2, -SQRT_2).unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::GDecay, spec, SEED + 6);
        cfg.samples_t = 200;
        cfg.kmax = TruncationSpec::exact();
        cfg.big_t = 1000.0;
        let big = run_g_decay_experiment(&cfg).unwrap();
        cfg.big_t = 100.0;
        let small = run_g_decay_experiment(&cfg).unwrap();
        let names = ["mean_absG2_over_V", "mean_absG3_over_V", "mean_absG4_over_V"];
        let pairs: Vec<(f64, f64)> = names.iter().map(|n| (small.stat(n).unwrap().value, big.stat(n).unwrap().value)).collect();
        let decays = pairs.iter().all(|(s, b)| b < s);
        let m = quad();
        let s = SpectralProfile::new(&m, 2000.0).unwrap().g_terms(RectWindow::square(), 2000.0, TruncationSpec::default());
        let target = m.covol().powi(2) / (4.0 * PI.powi(4));
        let ratio = s.g1 / s.v / target;
        (
            decays && (0.7..=1.3).contains(&ratio),
            format!("(T=100, T=1000) means for G2,G3,G4: {}; G1/V at t=2000 is {ratio:.4} x target (tol [0.7, 1.3])",
                pairs.iter().map(|(s, b)| format!("({s:.3e}, {b:.3e})")).collect::<Vec<_>>().join(" ")
            ),
        )
    })
}

fn orbit_clt() -> Outcome {
    timed(7, "orbit sums approach the normal law", Duration::from_secs(120), || {
        let l = quad().unimodular().unwrap();
        let trials = 20_000;
        let ks: Vec<f64> = [50.0, 100.0, 150.0]
            .iter()
            .map(|&r| {
                let orbit = orbit_v_and_norms(&l, 2, r).unwrap();
                let stats = orbit.stats(SignModel::Rademacher);
                let values = orbit.simulate(SignModel::Rademacher, trials, SEED + 7).unwrap();
                berry_esseen_check(&values, &stats).unwrap().ks_distance
            })
            .collect();
        let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
        let growth: Vec<f64> =
            (1..=8).map(|i| 25.0 * i as f64).map(|r| orbit_v_and_norms(&l, 2, r).unwrap().v_tilde / r).collect();
        let (lo, hi) = min_max(&growth);
        (
            ks[2] <= 0.02 && decreasing && hi / lo <= 2.0,
            format!("KS at r=50,100,150: {ks:.4?} (need last <= 0.02 and decreasing); max/min of V~/r over r=25..200 = {:.3} (tol 2)", hi / lo),
        )
    })
}

fn typical_growth() -> Outcome {
    timed(8, "median V~/r over Haar lattices grows from r=50 to r=200", Duration::from_secs(120), || {
        let seeds: Vec<u64> = (0..20).map(|i| SEED + 800 + i).collect();
        let at = |r: f64| -> Vec<f64> {
            seeds.iter().map(|&s| orbit_v_and_norms(&sample_haar_lattice_2d(s), 2, r).unwrap().v_tilde / r).collect()
        };
        let (m50, m200) = (median(at(50.0)), median(at(200.0)));
        (m200 > m50, format!("median V~/r: r=50 {m50:.4e}, r=200 {m200:.4e}"))
    })
}

fn zsquare_law() -> Outcome {
    timed(9, "Z^2 sawtooth matches the mixture law and its moments", Duration::from_secs(60), || {
        let ks_list = [1, 2, 3, 4];
        let steps: DensitySpec = "steps:0.3:0:0.5,0.7:0.5:1".parse().unwrap();
        let mut ok = true;
        let mut notes = Vec::new();
        for (i, x) in [0.0, 0.25, 0.4].into_iter().enumerate() {
            let seed = SEED + 90 + i as u64;
            let r = empirical_vs_beta(x, 1e4, 100_000, &DensitySpec::Uniform, seed, &ks_list).unwrap();
            let s = empirical_vs_beta(x, 1e4, 100_000, &steps, seed + 10, &ks_list).unwrap();
            let mut bad = Vec::new();
            if r.ks > 0.01 {
                bad.push(format!("KS {:.4}", r.ks));
            }
            for m in &r.moments {
                let a = limit_moment(m.k, r.y);
                let tol = if m.k % 2 == 1 { 0.02 } else { 0.01 * a };
                if (m.empirical - a).abs() > tol {
                    bad.push(format!("k={} {:.4} vs {:.4} (tol {tol:.3}, stderr {:.4})", m.k, m.empirical, a, m.stderr));
                }
                let other = s.moment(m.k).unwrap();
                let se = (m.stderr.powi(2) + other.stderr.powi(2)).sqrt();
                if (m.empirical - other.empirical).abs() > 3.0 * se {
                    bad.push(format!("steps k={} {:.4} vs {:.4} (3 se {:.4})", m.k, other.empirical, m.empirical, 3.0 * se));
                }
            }
            ok &= bad.is_empty();
            notes.push(format!("x={x}: KS {:.4}{}{}", r.ks, if bad.is_empty() { "" } else { "; " }, bad.join("; ")));
        }
        (ok, notes.join(" | "))
    })
}

fn quadrature_oracles() -> Outcome {
    timed(10, "region integrals follow their growth laws", Duration::from_secs(60), || {
        let t = 1e6;
        let v = admissible_tail_integral(&IntegralRegionSpec::admissible(10.0, 1.0, t).unwrap()).unwrap().value;
        let ratio = v / (8.0 * t.ln());
        let asym: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&big_t| asymmetric_integral(5.0, 1.0, big_t).unwrap().value / big_t).collect();
        let (lo, hi) = min_max(&asym);
        (
            (0.95..=1.05).contains(&ratio) && hi / lo <= 3.0,
            format!("admissible (A=10, C=1) / (8 log t) at t=1e6 = {ratio:.4} (tol [0.95, 1.05]); asymmetric/T max/min = {:.3} (tol 3)", hi / lo),
        )
    })
}

#[test]
fn acceptance() {
    let outcomes = [
        counting_oracle(),
        exact_identities(),
        parseval(),
        v_growth(),
        limit_constant(),
        oscillatory_decay(),
        orbit_clt(),
        typical_growth(),
        zsquare_law(),
        quadrature_oracles(),
    ];
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let _ = std::io::stderr().write_all(format!("acceptance: {} of {} criteria pass\n", outcomes.len() - failed.len(), outcomes.len()).as_bytes());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
