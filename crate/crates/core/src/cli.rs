//! Command-line experiment runner: one subcommand per figure plus the
//! concentration-bound check. Every experiment writes a data file, optional
//! companion tables, and a `<output>.meta.json` sidecar.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{build_histogram, fit_erf_profile, fit_power_law, gaussian_summary, l_star, DEFAULT_BINS};
use crate::bell::{classical_bound, BellKind, SettingTables};
use crate::error::{Error, Result};
use crate::experiments::{
    critical_epsilon, random_measurement_run_with, sample_distribution, spin_to_dim, violation_stats,
    CriticalEpsilon, EpsilonScan, RandomBasisMode, DEFAULT_SAMPLES,
};
use crate::levy::{empirical_concentration, lipschitz_bound};
use crate::measurements::optimal_settings;
use crate::optimizer::{optimize_settings, SimplexConfig};
use crate::perturbations::{HermitianEnsemble, PerturbationConfig, PerturbationKind};
use crate::rng::stream;
use crate::states::{bell_state, random_entangled_state, random_product_state, PureState};

/// Version of the column layouts below; bump on any change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Unperturbed Bell values against l.
    Fig1,
    /// Violation probability against l, with erf fits.
    Fig2,
    /// Histogram of perturbed Bell values.
    Fig3,
    /// Largest sampled value against ε.
    Fig4,
    /// Critical ε against l, with power-law fits.
    Fig5,
    /// Histograms for random measurement bases.
    Fig6,
    /// Optimized settings for the maximally entangled state.
    Fig7,
    /// Optimized settings for random entangled and product states.
    Fig8,
    /// Concentration bounds against sampled uniform states.
    Appendix,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
            Experiment::Fig7 => "fig7",
            Experiment::Fig8 => "fig8",
            Experiment::Appendix => "appendix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `lo:hi:factor`, expanded to `lo, lo·factor, …` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    pub lo: f64,
    pub hi: f64,
    pub factor: f64,
}

impl EpsilonGrid {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.lo;
        while e <= self.hi * (1.0 + 1e-12) {
            out.push(e);
            e *= self.factor;
        }
        out
    }
}

impl FromStr for EpsilonGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("--epsilon-grid '{s}' must be lo:hi:factor with 0 < lo <= hi and factor > 1"));
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [lo, hi, factor] = parts[..] else { return Err(bad()) };
        let g = EpsilonGrid { lo, hi, factor };
        if !(lo > 0.0 && hi >= lo && factor > 1.0 && hi.is_finite()) {
            return Err(bad());
        }
        Ok(g)
    }
}

impl fmt::Display for EpsilonGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.factor)
    }
}

/// Flags. Each one, when given, overrides the same field of `--config`.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "qudit-bell", version, about = "Robustness of Bell-inequality violations for pairs of qudits")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// Single spin quantum number (d = 2l + 1).
    #[arg(long)]
    pub l: Option<f64>,
    /// Upper end of the l range.
    #[arg(long)]
    pub l_max: Option<f64>,
    /// Single perturbation strength
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Geometric grid lo:hi:factor.
    #[arg(long)]
    pub epsilon_grid: Option<EpsilonGrid>,
    /// Monte Carlo samples per point
    #[arg(long)]
    pub samples: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// bilocal or global.
    #[arg(long)]
    pub perturbation: Option<PerturbationKind>,
    /// I or Id.
    #[arg(long)]
    pub kind: Option<BellKind>,
    /// Optimizer restarts
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Data file; defaults to <experiment>.<format>
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Target probability for the l* column of fig2.
    #[arg(long)]
    pub p_star: Option<f64>,
    /// magnitude-phase, uniform-parts or real-symmetric.
    #[arg(long)]
    pub ensemble: Option<HermitianEnsemble>,
    /// Random bases for fig6: haar or exp-hermitian.
    #[arg(long)]
    pub basis_mode: Option<RandomBasisMode>,
    /// Evaluation budget per optimizer restart.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// JSON file with any of the fields above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// The `--config` document; field names follow the long flags with `_`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    pub experiment: Option<Experiment>,
    pub l: Option<f64>,
    pub l_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_grid: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub perturbation: Option<PerturbationKind>,
    pub kind: Option<BellKind>,
    pub restarts: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub bins: Option<usize>,
    pub p_star: Option<f64>,
    pub ensemble: Option<HermitianEnsemble>,
    pub basis_mode: Option<RandomBasisMode>,
    pub max_evals: Option<usize>,
}

/// Fully resolved run description, recorded in the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub l: Option<f64>,
    pub l_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_grid: Option<EpsilonGrid>,
    pub samples: usize,
    pub seed: u64,
    pub perturbation: Option<PerturbationKind>,
    pub kind: Option<BellKind>,
    pub restarts: usize,
    pub threads: usize,
    pub output: PathBuf,
    pub format: Format,
    pub bins: usize,
    pub p_star: f64,
    pub ensemble: HermitianEnsemble,
    pub basis_mode: RandomBasisMode,
    pub max_evals: usize,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RESTARTS: usize = 50;
pub const DEFAULT_P_STAR: f64 = 0.1;

fn invalid(field: &str, msg: impl fmt::Display) -> Error {
    Error::InvalidInput(format!("{field}: {msg}"))
}

fn wrap(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => invalid(field, m),
        other => invalid(field, other),
    }
}

impl ExperimentSpec {
    pub fn resolve(args: Args) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
                serde_json::from_str::<FileSpec>(&text).map_err(|e| invalid("--config", e))?
            }
            None => FileSpec::default(),
        };
        let file_grid = file
            .epsilon_grid
            .as_deref()
            .map(EpsilonGrid::from_str)
            .transpose()?;
        let experiment = args
            .experiment
            .or(file.experiment)
            .ok_or_else(|| invalid("experiment", "no experiment given"))?;
        let format = args.format.or(file.format).unwrap_or_default();
        let output = args
            .output
            .or(file.output)
            .unwrap_or_else(|| PathBuf::from(format!("{}.{}", experiment.name(), extension(format))));
        let threads = args
            .threads
            .or(file.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let spec = Self {
            experiment,
            l: args.l.or(file.l),
            l_max: args.l_max.or(file.l_max),
            epsilon: args.epsilon.or(file.epsilon),
            epsilon_grid: args.epsilon_grid.or(file_grid),
            samples: args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            perturbation: args.perturbation.or(file.perturbation),
            kind: args.kind.or(file.kind),
            restarts: args.restarts.or(file.restarts).unwrap_or(DEFAULT_RESTARTS),
            threads,
            output,
            format,
            bins: args.bins.or(file.bins).unwrap_or(DEFAULT_BINS),
            p_star: args.p_star.or(file.p_star).unwrap_or(DEFAULT_P_STAR),
            ensemble: args.ensemble.or(file.ensemble).unwrap_or_default(),
            basis_mode: args.basis_mode.or(file.basis_mode).unwrap_or_default(),
            max_evals: args.max_evals.or(file.max_evals).unwrap_or(SimplexConfig::default().max_evals),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.l {
            spin_to_dim(l).map_err(|e| wrap("--l", e))?;
        }
        if let Some(l) = self.l_max {
            spin_to_dim(l).map_err(|e| wrap("--l-max", e))?;
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return Err(invalid("--epsilon", format!("{e} must be finite and non-negative")));
            }
        }
        if self.samples == 0 {
            return Err(invalid("--samples", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(invalid("--restarts", "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(invalid("--threads", "must be at least 1"));
        }
        if self.bins == 0 {
            return Err(invalid("--bins", "must be at least 1"));
        }
        if self.max_evals == 0 {
            return Err(invalid("--max-evals", "must be at least 1"));
        }
        if !(self.p_star > 0.0 && self.p_star < 1.0) {
            return Err(invalid("--p-star", format!("{} must lie in (0, 1)", self.p_star)));
        }
        Ok(())
    }

    /// `--l` alone, else half-integer steps from `lo` to `--l-max` (or `hi`).
    fn l_values(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.l_values_step(lo, hi, 0.5)
    }

    fn l_values_step(&self, lo: f64, hi: f64, step: f64) -> Vec<f64> {
        if let Some(l) = self.l {
            return vec![l];
        }
        let hi = self.l_max.unwrap_or(hi);
        let n = ((hi - lo) / step + 1e-9).floor();
        if n < 0.0 {
            return Vec::new();
        }
        (0..=n as usize).map(|k| lo + step * k as f64).collect()
    }

    fn single_l(&self, default: f64) -> f64 {
        self.l.unwrap_or(default)
    }

    fn epsilons(&self, default: &[f64]) -> Vec<f64> {
        match (self.epsilon, self.epsilon_grid) {
            (Some(e), _) => vec![e],
            (None, Some(g)) => g.values(),
            (None, None) => default.to_vec(),
        }
    }

    fn kinds(&self) -> Vec<BellKind> {
        self.kind.map_or_else(|| BellKind::ALL.to_vec(), |k| vec![k])
    }

    fn perturbations(&self) -> Vec<PerturbationKind> {
        self.perturbation
            .map_or_else(|| vec![PerturbationKind::Bilocal, PerturbationKind::Global], |p| vec![p])
    }

    fn simplex(&self) -> SimplexConfig {
        SimplexConfig {
            max_evals: self.max_evals,
            ..SimplexConfig::default()
        }
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "NaN".to_string(),
            Cell::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.to_string(),
            // 17 significant digits round-trip every f64
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Cell::from($x)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "columns": self.columns, "rows": Value::Array(rows) })
    }
}

/// Main table plus named companion tables (`<output>.<name>.csv`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub data: Table,
    pub extras: Vec<(&'static str, Table)>,
}

/// Column layout of every table an experiment can emit.
pub fn schema(experiment: Experiment) -> Vec<(&'static str, &'static [&'static str])> {
    match experiment {
        Experiment::Fig1 => vec![("data", &["l", "I", "I_d"])],
        Experiment::Fig2 => vec![
            ("data", &["kind", "epsilon", "l", "p_violation", "std_error"]),
            ("fits", &["kind", "epsilon", "status", "l_bar", "delta", "residual", "p_star", "l_star"]),
        ],
        Experiment::Fig3 => vec![
            ("data", &["bin_lo", "bin_hi", "count"]),
            ("fits", &["mu", "sigma", "skewness", "p_violation", "max_value"]),
        ],
        Experiment::Fig4 => vec![("data", &["kind", "l", "epsilon", "max_value", "p_violation", "std_error"])],
        Experiment::Fig5 => vec![
            ("data", &["perturbation", "kind", "l", "status", "epsilon_star"]),
            ("fits", &["perturbation", "kind", "n_points", "a", "b", "residual"]),
        ],
        Experiment::Fig6 => vec![
            ("data", &["l", "bin_lo", "bin_hi", "count"]),
            ("fits", &["l", "mu", "sigma", "skewness", "p_violation", "max_value"]),
            ("powerlaw", &["quantity", "n_points", "a", "b", "residual"]),
        ],
        Experiment::Fig7 => vec![(
            "data",
            &["kind", "l", "best_value", "classical_bound", "violates", "n_evals", "converged"],
        )],
        Experiment::Fig8 => vec![(
            "data",
            &["l", "state", "index", "kind", "best_value", "classical_bound", "violates"],
        )],
        Experiment::Appendix => vec![(
            "data",
            &[
                "d",
                "epsilon",
                "bound_main",
                "bound_median",
                "lipschitz",
                "empirical_fraction",
                "fraction_std_error",
                "mean",
                "median",
                "std_dev",
                "violation_fraction",
            ],
        )],
    }
}

fn table(experiment: Experiment, name: &str) -> Table {
    let cols = schema(experiment)
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .expect("table declared in schema");
    Table::new(cols)
}

fn dims(ls: &[f64], field: &str) -> Result<Vec<usize>> {
    ls.iter().map(|&l| spin_to_dim(l).map_err(|e| wrap(field, e))).collect()
}

fn perturbation_config(spec: &ExperimentSpec, eps: f64, kind: PerturbationKind) -> Result<PerturbationConfig> {
    Ok(PerturbationConfig::new(eps, kind, spec.seed)?.with_ensemble(spec.ensemble))
}

fn fig1(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 10.0);
    let mut t = table(Experiment::Fig1, "data");
    for (l, d) in ls.iter().zip(dims(&ls, "--l-max")?) {
        let tables = SettingTables::new(&bell_state::<f64>(d)?, &optimal_settings(d)?)?;
        t.push(row![*l, tables.value_i(), tables.value_id()]);
    }
    Ok(ExperimentOutput { data: t, extras: vec![] })
}

fn fig2(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 4.0);
    let ds = dims(&ls, "--l-max")?;
    let pk = spec.perturbation.unwrap_or_default();
    let mut data = table(Experiment::Fig2, "data");
    let mut fits = table(Experiment::Fig2, "fits");
    for kind in spec.kinds() {
        for eps in spec.epsilons(&[0.05, 0.1, 0.15, 0.2, 0.25, 0.3]) {
            let cfg = perturbation_config(spec, eps, pk)?;
            let mut points = Vec::new();
            for (&l, &d) in ls.iter().zip(&ds) {
                let s = violation_stats(&sample_distribution::<f64>(kind, d, &cfg, spec.samples)?)?;
                data.push(row![kind.to_string(), eps, l, s.p_violation, s.std_error]);
                points.push((l, s.p_violation));
            }
            let (status, l_bar, delta, residual) = match fit_erf_profile(&points) {
                Ok(f) => ("ok", f.l_bar, f.delta, f.residual),
                Err(Error::NotConverged { best, value, .. }) => ("not-converged", best[0], best[1], value),
                Err(_) => ("failed", f64::NAN, f64::NAN, f64::NAN),
            };
            let ls_val = if delta.is_finite() {
                l_star(&crate::analysis::ErfFit { l_bar, delta, residual }, spec.p_star)?
            } else {
                f64::NAN
            };
            fits.push(row![kind.to_string(), eps, status, l_bar, delta, residual, spec.p_star, ls_val]);
        }
    }
    Ok(ExperimentOutput {
        data,
        extras: vec![("fits", fits)],
    })
}

fn fig3(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let l = spec.single_l(1.0);
    let d = spin_to_dim(l).map_err(|e| wrap("--l", e))?;
    let eps = spec.epsilon.unwrap_or(0.233);
    let kind = spec.kind.unwrap_or(BellKind::I);
    let cfg = perturbation_config(spec, eps, spec.perturbation.unwrap_or_default())?;
    let run = sample_distribution::<f64>(kind, d, &cfg, spec.samples)?;
    let h = build_histogram(&run.values, spec.bins)?;
    let mut data = table(Experiment::Fig3, "data");
    for k in 0..h.n_bins() {
        data.push(row![h.bin_edges[k], h.bin_edges[k + 1], h.counts[k]]);
    }
    let mut fits = table(Experiment::Fig3, "fits");
    let s = violation_stats(&run)?;
    match gaussian_summary(&run.values) {
        Ok(g) => fits.push(row![g.mu, g.sigma, g.skewness, s.p_violation, s.max_value]),
        Err(_) => fits.push(row![run.values[0], 0.0, f64::NAN, s.p_violation, s.max_value]),
    }
    Ok(ExperimentOutput {
        data,
        extras: vec![("fits", fits)],
    })
}

fn fig4(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 4.0);
    let ds = dims(&ls, "--l-max")?;
    let pk = spec.perturbation.unwrap_or_default();
    let default_eps: Vec<f64> = (1..=20).map(|k| 0.025 * k as f64).collect();
    let mut data = table(Experiment::Fig4, "data");
    for kind in spec.kinds() {
        for (&l, &d) in ls.iter().zip(&ds) {
            for eps in spec.epsilons(&default_eps) {
                let cfg = perturbation_config(spec, eps, pk)?;
                let s = violation_stats(&sample_distribution::<f64>(kind, d, &cfg, spec.samples)?)?;
                data.push(row![kind.to_string(), l, eps, s.max_value, s.p_violation, s.std_error]);
            }
        }
    }
    Ok(ExperimentOutput { data, extras: vec![] })
}

fn fig5(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 4.0);
    let ds = dims(&ls, "--l-max")?;
    let scan = match spec.epsilon_grid {
        Some(g) => EpsilonScan {
            start: g.lo,
            stop: g.hi,
            factor: g.factor,
            ..EpsilonScan::default()
        },
        None => EpsilonScan::default(),
    };
    let mut data = table(Experiment::Fig5, "data");
    let mut fits = table(Experiment::Fig5, "fits");
    for pk in spec.perturbations() {
        for kind in spec.kinds() {
            let mut points = Vec::new();
            for (&l, &d) in ls.iter().zip(&ds) {
                let c = critical_epsilon::<f64>(kind, d, spec.samples, spec.seed, pk, spec.ensemble, &scan)?;
                let status = match c {
                    CriticalEpsilon::BelowRange => "below-range",
                    CriticalEpsilon::Within(_) => "ok",
                    CriticalEpsilon::AboveRange => "above-range",
                };
                let e = c.value().unwrap_or(f64::NAN);
                data.push(row![pk.to_string(), kind.to_string(), l, status, e]);
                if let Some(e) = c.value() {
                    points.push((l, e));
                }
            }
            match fit_power_law(&points) {
                Ok(f) => fits.push(row![pk.to_string(), kind.to_string(), points.len(), f.a, f.b, f.residual]),
                Err(_) => fits.push(row![pk.to_string(), kind.to_string(), points.len(), f64::NAN, f64::NAN, f64::NAN]),
            }
        }
    }
    Ok(ExperimentOutput {
        data,
        extras: vec![("fits", fits)],
    })
}

fn fig6(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values_step(1.0, 5.0, 1.0);
    let ds = dims(&ls, "--l-max")?;
    let mut data = table(Experiment::Fig6, "data");
    let mut fits = table(Experiment::Fig6, "fits");
    let mut means = Vec::new();
    let mut sigmas = Vec::new();
    for (&l, &d) in ls.iter().zip(&ds) {
        let run = random_measurement_run_with::<f64>(d, spec.samples, spec.seed, spec.basis_mode)?;
        let h = build_histogram(&run.values, spec.bins)?;
        for k in 0..h.n_bins() {
            data.push(row![l, h.bin_edges[k], h.bin_edges[k + 1], h.counts[k]]);
        }
        let s = violation_stats(&run)?;
        let g = gaussian_summary(&run.values)?;
        fits.push(row![l, g.mu, g.sigma, g.skewness, s.p_violation, s.max_value]);
        means.push((l, g.mu));
        sigmas.push((l, g.sigma));
    }
    let mut pl = table(Experiment::Fig6, "powerlaw");
    for (name, pts) in [("mean", &means), ("sigma", &sigmas)] {
        match fit_power_law(pts) {
            Ok(f) => pl.push(row![name, pts.len(), f.a, f.b, f.residual]),
            Err(_) => pl.push(row![name, pts.len(), f64::NAN, f64::NAN, f64::NAN]),
        }
    }
    Ok(ExperimentOutput {
        data,
        extras: vec![("fits", fits), ("powerlaw", pl)],
    })
}

fn fig7(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 2.5);
    let ds = dims(&ls, "--l-max")?;
    let mut data = table(Experiment::Fig7, "data");
    for kind in spec.kinds() {
        for (&l, &d) in ls.iter().zip(&ds) {
            let r = optimize_settings(&bell_state::<f64>(d)?, kind, spec.restarts, spec.seed, &spec.simplex())?;
            let bound: f64 = classical_bound(kind);
            data.push(row![kind.to_string(), l, r.best_value, bound, r.best_value > bound, r.n_evals, r.converged]);
        }
    }
    Ok(ExperimentOutput { data, extras: vec![] })
}

pub const FIG8_ENTANGLED: usize = 5;
pub const FIG8_PRODUCT: usize = 2;

/// Stream index for random state `j` of dimension `d`; far above any
/// restart index so state draws and optimizer starts never share a stream.
fn state_stream(d: usize, j: usize) -> u64 {
    u64::MAX - (d as u64) * 64 - j as u64
}

fn fig8(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = spec.l_values(0.5, 2.5);
    let ds = dims(&ls, "--l-max")?;
    let mut data = table(Experiment::Fig8, "data");
    for (&l, &d) in ls.iter().zip(&ds) {
        let mut states: Vec<(&str, usize, PureState<f64>)> = Vec::new();
        for j in 0..FIG8_ENTANGLED {
            let mut rng = stream(spec.seed, state_stream(d, j));
            states.push(("entangled", j, random_entangled_state(d, &mut rng)?));
        }
        for j in 0..FIG8_PRODUCT {
            let mut rng = stream(spec.seed, state_stream(d, FIG8_ENTANGLED + j));
            states.push(("product", j, random_product_state(d, &mut rng)?));
        }
        for (label, j, state) in &states {
            for kind in spec.kinds() {
                let r = optimize_settings(state, kind, spec.restarts, spec.seed, &spec.simplex())?;
                let bound: f64 = classical_bound(kind);
                data.push(row![l, *label, *j, kind.to_string(), r.best_value, bound, r.best_value > bound]);
            }
        }
    }
    Ok(ExperimentOutput { data, extras: vec![] })
}

fn appendix(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let ls = match (spec.l, spec.l_max) {
        (None, None) => vec![1.0, 2.0, 4.0],
        _ => spec.l_values_step(1.0, 4.0, 1.0),
    };
    let ds = dims(&ls, "--l-max")?;
    let mut data = table(Experiment::Appendix, "data");
    for &d in &ds {
        for eps in spec.epsilons(&[0.25, 0.5, 1.0, 2.0]) {
            if eps <= 0.0 {
                return Err(invalid("--epsilon", "must be positive for the concentration bounds"));
            }
            let r = empirical_concentration::<f64>(d, eps, spec.samples, spec.seed)?;
            data.push(row![
                d,
                eps,
                r.bound_main,
                r.bound_median,
                lipschitz_bound(d)?,
                r.empirical_fraction,
                r.fraction_std_error(),
                r.mean,
                r.median,
                r.std_dev,
                r.violation_fraction,
            ]);
        }
    }
    Ok(ExperimentOutput { data, extras: vec![] })
}

/// Computes the tables of an experiment on a pool of `spec.threads` workers.
pub fn compute(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| invalid("--threads", e))?;
    pool.install(|| match spec.experiment {
        Experiment::Fig1 => fig1(spec),
        Experiment::Fig2 => fig2(spec),
        Experiment::Fig3 => fig3(spec),
        Experiment::Fig4 => fig4(spec),
        Experiment::Fig5 => fig5(spec),
        Experiment::Fig6 => fig6(spec),
        Experiment::Fig7 => fig7(spec),
        Experiment::Fig8 => fig8(spec),
        Experiment::Appendix => appendix(spec),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn meta_path(output: &Path) -> PathBuf {
    sibling(output, ".meta.json")
}

pub fn extra_path(output: &Path, name: &str) -> PathBuf {
    sibling(output, &format!(".{name}.csv"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| invalid("--output", format!("{}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| invalid("--output", format!("{}: {e}", path.display())))
}

/// Writes the data file(s) and the sidecar; returns every path written.
pub fn write_output(spec: &ExperimentSpec, out: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match spec.format {
        Format::Csv => {
            write_file(&spec.output, &out.data.to_csv())?;
            written.push(spec.output.clone());
            for (name, t) in &out.extras {
                let p = extra_path(&spec.output, name);
                write_file(&p, &t.to_csv())?;
                written.push(p);
            }
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("experiment".into(), json!(spec.experiment.name()));
            doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
            doc.insert("data".into(), out.data.to_json());
            for (name, t) in &out.extras {
                doc.insert((*name).into(), t.to_json());
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| Error::Io(e.to_string()))?;
            text.push('\n');
            write_file(&spec.output, &text)?;
            written.push(spec.output.clone());
        }
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let tables: Map<String, Value> = schema(spec.experiment)
        .into_iter()
        .map(|(n, c)| (n.to_string(), json!(c)))
        .collect();
    let meta = json!({
        "experiment": spec.experiment.name(),
        "parameters": spec,
        "seed": spec.seed,
        "timestamp": timestamp,
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "tables": tables,
    });
    let p = meta_path(&spec.output);
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_file(&p, &text)?;
    written.push(p);
    Ok(written)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let out = compute(spec)?;
    write_output(spec, &out)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args(args: Args) -> i32 {
    match ExperimentSpec::resolve(args).and_then(|spec| run_experiment(&spec)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            2
        }
    }
}
