//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the report is always printed. Set
//! `ACCEPTANCE_EXTENDED=1` to add the 10^7-sample random-measurement run.
//! `ACCEPTANCE_ONLY=3,7` restricts the run to the listed criteria.

use std::fs;
use std::time::Instant;

use qudit_bell::analysis::{fit_power_law, gaussian_summary};
use qudit_bell::bell::{evaluate, evaluate_id_projector, BellKind, SettingTables};
use qudit_bell::cli::{compute, Args, Experiment, ExperimentSpec};
use qudit_bell::experiments::{
    critical_epsilon, random_measurement_run, sample_distribution, spin_to_dim, violation_stats, EpsilonScan,
};
use qudit_bell::levy::{bound_main, empirical_concentration};
use qudit_bell::measurements::{haar_settings, optimal_settings};
use qudit_bell::optimizer::{optimize_settings, SimplexConfig};
use qudit_bell::perturbations::{HermitianEnsemble, PerturbationConfig, PerturbationKind};
use qudit_bell::rng::stream;
use qudit_bell::states::{bell_state, random_entangled_state, random_product_state};

const SEED: u64 = 1;

// criterion 1
const EXACT_TOL: f64 = 1e-9;
// criteria 3 and 4
const IDENTITY_TOL: f64 = 1e-10;
// criterion 5
const CEILING_TOL: f64 = 1e-9;
// criteria 7 and 11: multiples of the standard error
const SIGMAS: f64 = 3.0;
// criterion 8: log-log slope windows for ε*(l)
const SLOPE_I: (f64, f64) = (-1.13, 0.35);
const SLOPE_ID: (f64, f64) = (-0.96, 0.35);
// criterion 9: log-log slope windows for the mean and spread of I(l)
const SLOPE_MEAN: (f64, f64) = (-0.79, 0.20);
const SLOPE_SIGMA: (f64, f64) = (-1.13, 0.25);
// criterion 10
const OPT_I_D2: f64 = 3.414 - 1e-3;
const OPT_ID_D3: f64 = 2.872 - 1e-2;
// criterion 11
const BOUND_MAIN_3_2: f64 = 1.99866;
const BOUND_LITERAL_TOL: f64 = 1e-5;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn within(x: f64, (center, half): (f64, f64)) -> bool {
    (x - center).abs() <= half
}

fn c01_exact_optimum() -> Outcome {
    let r = SettingTables::new(&bell_state::<f64>(2).unwrap(), &optimal_settings(2).unwrap()).unwrap();
    let (i, id) = (r.value_i(), r.value_id());
    let ok = (i - (2.0 + 2f64.sqrt())).abs() < EXACT_TOL && (id - 2.0 * 2f64.sqrt()).abs() < EXACT_TOL;
    outcome(ok, format!("I = {i:.15}, I_d = {id:.15}"))
}

fn c02_unperturbed_curves() -> Outcome {
    let mut vals = Vec::new();
    for d in 2..=21 {
        let r = SettingTables::new(&bell_state::<f64>(d).unwrap(), &optimal_settings(d).unwrap()).unwrap();
        vals.push((d, r.value_i(), r.value_id()));
    }
    let above = vals.iter().all(|&(_, i, id)| i > 3.0 && id > 2.0);
    let decreasing = vals.windows(2).all(|w| w[1].1 < w[0].1);
    let (_, i21, id21) = vals[vals.len() - 1];
    outcome(above && decreasing, format!("I(2..21) from {:.4} to {i21:.4}, I_d(21) = {id21:.4}, strictly decreasing = {decreasing}", vals[0].1))
}

fn c03_projector_oracle() -> Outcome {
    let mut worst = 0f64;
    for d in 2..=7usize {
        for k in 0..100u64 {
            let mut rng = stream(SEED, 1000 * d as u64 + k);
            let psi = random_entangled_state::<f64, _>(d, &mut rng).unwrap();
            let s = haar_settings::<f64, _>(d, &mut rng).unwrap();
            let a = evaluate(BellKind::Id, &psi, &s).unwrap().value;
            let b = evaluate_id_projector(&psi, &s).unwrap().value;
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst < IDENTITY_TOL, format!("max |I_d − I_d(projector)| = {worst:.2e} over 600 pairs"))
}

fn c04_qubit_identity() -> Outcome {
    let mut worst = 0f64;
    for k in 0..1000u64 {
        let mut rng = stream(SEED, 10_000 + k);
        let psi = random_entangled_state::<f64, _>(2, &mut rng).unwrap();
        let s = haar_settings::<f64, _>(2, &mut rng).unwrap();
        let t = SettingTables::new(&psi, &s).unwrap();
        worst = worst.max((t.value_id() - (2.0 * t.value_i() - 4.0)).abs());
    }
    outcome(worst < IDENTITY_TOL, format!("max |I_d − (2I − 4)| = {worst:.2e} over 1000 pairs"))
}

fn c05_separable_ceiling() -> Outcome {
    let (mut max_i, mut max_id, mut exceptions) = (f64::MIN, f64::MIN, 0);
    for d in [2usize, 3, 5] {
        for k in 0..1000u64 {
            let mut rng = stream(SEED, 100_000 * d as u64 + k);
            let psi = random_product_state::<f64, _>(d, &mut rng).unwrap();
            let s = haar_settings::<f64, _>(d, &mut rng).unwrap();
            let t = SettingTables::new(&psi, &s).unwrap();
            max_i = max_i.max(t.value_i());
            max_id = max_id.max(t.value_id());
            exceptions += usize::from(t.value_i() > 3.0 + CEILING_TOL) + usize::from(t.value_id() > 2.0 + CEILING_TOL);
        }
    }
    outcome(exceptions == 0, format!("max I = {max_i:.6}, max I_d = {max_id:.6}, exceptions = {exceptions}"))
}

fn c06_negative_skew() -> Outcome {
    let cfg = PerturbationConfig::new(0.233, PerturbationKind::Bilocal, SEED).unwrap();
    let run = sample_distribution::<f64>(BellKind::I, 3, &cfg, 100_000).unwrap();
    let g = gaussian_summary(&run.values).unwrap();
    outcome(g.skewness < 0.0, format!("l = 1, ε = 0.233, N = 1e5: mean = {:.4}, σ = {:.4}, skewness = {:.4}", g.mu, g.sigma, g.skewness))
}

fn c07_ordering() -> Outcome {
    let n = 10_000;
    let epsilons = [0.12, 0.23];
    let mut ok = true;
    let mut notes = Vec::new();
    for l in [1.0, 1.5, 2.0] {
        let d = spin_to_dim(l).unwrap();
        let mut per_kind = Vec::new();
        for kind in BellKind::ALL {
            let stats: Vec<_> = epsilons
                .iter()
                .map(|&e| {
                    let cfg = PerturbationConfig::new(e, PerturbationKind::Bilocal, SEED).unwrap();
                    violation_stats(&sample_distribution::<f64>(kind, d, &cfg, n).unwrap()).unwrap()
                })
                .collect();
            let joint = (stats[0].std_error.powi(2) + stats[1].std_error.powi(2)).sqrt();
            if stats[1].p_violation > stats[0].p_violation + SIGMAS * joint {
                ok = false;
                notes.push(format!("{kind} rises with ε at l={l}"));
            }
            per_kind.push(stats);
        }
        for (k, &e) in epsilons.iter().enumerate() {
            let (pi, pid) = (&per_kind[0][k], &per_kind[1][k]);
            let joint = (pi.std_error.powi(2) + pid.std_error.powi(2)).sqrt();
            let pass = pid.p_violation >= pi.p_violation - SIGMAS * joint;
            ok &= pass;
            notes.push(format!("l={l} ε={e}: P_I={:.4} P_Id={:.4}", pi.p_violation, pid.p_violation));
        }
    }
    outcome(ok, notes.join("; "))
}

fn critical_slope(kind: BellKind, pk: PerturbationKind, notes: &mut Vec<String>) -> Option<f64> {
    let mut pts = Vec::new();
    let mut row = Vec::new();
    for k in 1..=8 {
        let l = 0.5 * k as f64;
        let c = critical_epsilon::<f64>(kind, spin_to_dim(l).unwrap(), 10_000, SEED, pk, HermitianEnsemble::default(), &EpsilonScan::default()).unwrap();
        row.push(format!("{c}").chars().take(6).collect::<String>());
        if let Some(e) = c.value() {
            pts.push((l, e));
        }
    }
    let slope = fit_power_law(&pts).ok().map(|f| f.slope());
    notes.push(format!("{pk} {kind}: slope {} ε*=[{}]", slope.map_or("n/a".into(), |s| format!("{s:.3}")), row.join(" ")));
    slope
}

fn c08_critical_power_law() -> Outcome {
    let mut notes = Vec::new();
    let bi = BellKind::ALL.map(|k| critical_slope(k, PerturbationKind::Bilocal, &mut notes));
    let gl = BellKind::ALL.map(|k| critical_slope(k, PerturbationKind::Global, &mut notes));
    let (Some(si), Some(sid), Some(gi), Some(gid)) = (bi[0], bi[1], gl[0], gl[1]) else {
        return outcome(false, format!("a fit had too few points; {}", notes.join("; ")));
    };
    let checks = [
        (within(si, SLOPE_I), "I window"),
        (within(sid, SLOPE_ID), "I_d window"),
        (gi < si, "global I steeper"),
        (gid < sid, "global I_d steeper"),
    ];
    let failed: Vec<_> = checks.iter().filter(|c| !c.0).map(|c| c.1).collect();
    let head = if failed.is_empty() { "all checks hold".to_string() } else { format!("failed: {}", failed.join(", ")) };
    outcome(failed.is_empty(), format!("{head}; {}", notes.join("; ")))
}

fn c09_random_measurements() -> Outcome {
    let mut means = Vec::new();
    let mut sigmas = Vec::new();
    for l in 1..=5 {
        let d = 2 * l + 1;
        let run = random_measurement_run::<f64>(d, 100_000, SEED).unwrap();
        let g = gaussian_summary(&run.values).unwrap();
        means.push((l as f64, g.mu));
        sigmas.push((l as f64, g.sigma));
    }
    let sm = fit_power_law(&means).unwrap().slope();
    let ss = fit_power_law(&sigmas).unwrap().slope();
    outcome(
        within(sm, SLOPE_MEAN) && within(ss, SLOPE_SIGMA),
        format!("mean slope = {sm:.3} (window {:?}), σ slope = {ss:.3} (window {:?})", SLOPE_MEAN, SLOPE_SIGMA),
    )
}

fn c09_extended() -> Outcome {
    let run = random_measurement_run::<f64>(3, 10_000_000, SEED).unwrap();
    let s = violation_stats(&run).unwrap();
    let ok = s.n_violations >= 1 && s.p_violation <= 1e-5;
    outcome(ok, format!("l = 1, N = 1e7: {} violations, P = {:.2e}", s.n_violations, s.p_violation))
}

fn c10_optimizer() -> Outcome {
    let cfg = SimplexConfig::default();
    let q = optimize_settings(&bell_state::<f64>(2).unwrap(), BellKind::I, 50, SEED, &cfg).unwrap().best_value;
    let t = optimize_settings(&bell_state::<f64>(3).unwrap(), BellKind::Id, 50, SEED, &cfg).unwrap().best_value;
    let mut ok = q >= OPT_I_D2 && t >= OPT_ID_D3;
    let mut notes = vec![format!("I(d=2) = {q:.6}, I_d(d=3) = {t:.6}")];
    for kind in BellKind::ALL {
        let mut row = Vec::new();
        for k in 1..=5 {
            let l = 0.5 * k as f64;
            let v = optimize_settings(&bell_state::<f64>(spin_to_dim(l).unwrap()).unwrap(), kind, 50, SEED, &cfg)
                .unwrap()
                .best_value;
            ok &= v > kind.classical_bound::<f64>();
            row.push(format!("{v:.4}"));
        }
        notes.push(format!("{kind}(l=0.5..2.5) = [{}]", row.join(" ")));
    }
    outcome(ok, notes.join("; "))
}

fn c11_concentration() -> Outcome {
    let b = bound_main(3, 2.0).unwrap();
    let formula = 2.0 * (-36.0 / (1728.0 * std::f64::consts::PI.powi(3))).exp();
    let mut ok = (b - formula).abs() < 1e-15 && (b - BOUND_MAIN_3_2).abs() < BOUND_LITERAL_TOL;
    let mut notes = vec![format!("bound_main(3, 2) = {b:.8}")];
    for d in [3usize, 5, 9] {
        for e in [0.25, 0.5, 1.0] {
            let r = empirical_concentration::<f64>(d, e, 100_000, SEED).unwrap();
            ok &= r.empirical_fraction <= r.bound_main + SIGMAS * r.fraction_std_error();
            if e == 0.25 {
                let mean_ok = r.mean.abs() <= SIGMAS * r.mean_std_error();
                ok &= mean_ok;
                notes.push(format!("d={d}: mean I_d = {:.2e} ± {:.1e}", r.mean, r.mean_std_error()));
            }
            notes.push(format!("d={d} ε={e}: frac {:.4} ≤ {:.4}", r.empirical_fraction, r.bound_main));
        }
    }
    outcome(ok, notes.join("; "))
}

fn data_bytes(experiment: Experiment, threads: usize, tweak: &dyn Fn(&mut Args)) -> Vec<u8> {
    let mut args = Args {
        experiment: Some(experiment),
        threads: Some(threads),
        seed: Some(SEED),
        output: Some(format!("unused-{}.csv", experiment.name()).into()),
        ..Default::default()
    };
    tweak(&mut args);
    let spec = ExperimentSpec::resolve(args).unwrap();
    let out = compute(&spec).unwrap();
    let mut bytes = out.data.to_csv().into_bytes();
    for (_, t) in &out.extras {
        bytes.extend(t.to_csv().into_bytes());
    }
    bytes
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    type Tweak = Box<dyn Fn(&mut Args)>;
    let cases: Vec<(Experiment, Tweak)> = vec![
        (Experiment::Fig1, Box::new(|a| a.l_max = Some(5.0))),
        (Experiment::Fig2, Box::new(|a| {
            a.samples = Some(2_000);
            a.l_max = Some(2.0);
            a.epsilon_grid = Some("0.1:0.3:1.7".parse().unwrap());
        })),
        (Experiment::Fig3, Box::new(|a| a.samples = Some(20_000))),
        (Experiment::Fig4, Box::new(|a| {
            a.samples = Some(2_000);
            a.l_max = Some(1.5);
            a.epsilon_grid = Some("0.1:0.4:2".parse().unwrap());
        })),
        (Experiment::Fig5, Box::new(|a| {
            a.samples = Some(1_000);
            a.l_max = Some(1.5);
            a.perturbation = Some(PerturbationKind::Global);
        })),
        (Experiment::Fig6, Box::new(|a| {
            a.samples = Some(5_000);
            a.l_max = Some(3.0);
        })),
        (Experiment::Fig7, Box::new(|a| {
            a.restarts = Some(8);
            a.max_evals = Some(2_000);
            a.l_max = Some(1.0);
        })),
        (Experiment::Fig8, Box::new(|a| {
            a.restarts = Some(3);
            a.max_evals = Some(1_000);
            a.l_max = Some(1.0);
        })),
        (Experiment::Appendix, Box::new(|a| a.samples = Some(5_000))),
    ];
    let mut differing = Vec::new();
    for (e, tweak) in &cases {
        let one = data_bytes(*e, 1, tweak.as_ref());
        let eight = data_bytes(*e, 8, tweak.as_ref());
        // also through the file writer
        let p1 = dir.path().join(format!("{}-1.csv", e.name()));
        let p8 = dir.path().join(format!("{}-8.csv", e.name()));
        for (p, t) in [(&p1, 1usize), (&p8, 8)] {
            let mut args = Args {
                experiment: Some(*e),
                threads: Some(t),
                seed: Some(SEED),
                output: Some(p.clone()),
                ..Default::default()
            };
            tweak(&mut args);
            qudit_bell::cli::run_experiment(&ExperimentSpec::resolve(args).unwrap()).unwrap();
        }
        if one != eight || fs::read(&p1).unwrap() != fs::read(&p8).unwrap() {
            differing.push(e.name());
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} experiments byte-identical at 1 and 8 workers", cases.len())
        } else {
            format!("differs: {}", differing.join(", "))
        },
    )
}

fn main() {
    // libtest-style flags from `cargo test` are ignored
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
    let mut criteria: Vec<(&str, &str, fn() -> Outcome)> = vec![
        ("1", "exact optimum at d=2", c01_exact_optimum),
        ("2", "unperturbed curves d=2..21", c02_unperturbed_curves),
        ("3", "projector oracle equivalence", c03_projector_oracle),
        ("4", "d=2 identity I_d = 2I - 4", c04_qubit_identity),
        ("5", "separable ceiling", c05_separable_ceiling),
        ("6", "negative skew at l=1", c06_negative_skew),
        ("7", "ordering of violation probabilities", c07_ordering),
        ("8", "critical-epsilon power law", c08_critical_power_law),
        ("9", "random-measurement scaling", c09_random_measurements),
        ("10", "optimizer recovery", c10_optimizer),
        ("11", "concentration bounds", c11_concentration),
        ("12", "determinism across worker counts", c12_determinism),
    ];
    if std::env::var("ACCEPTANCE_EXTENDED").is_ok_and(|v| v == "1") {
        criteria.push(("9x", "extended random-measurement run", c09_extended));
    }
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let tag = if r.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id:>2} {name} ({:.1}s): {}", t.elapsed().as_secs_f64(), r.detail);
        if !r.ok {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
