//! Monte Carlo engines.
//!
//! Sample `i` of every run draws its randomness from `rng::stream(seed, i)`,
//! so runs are reproducible bit for bit at any thread count, and runs that
//! differ only in ε reuse the same generators (common random numbers).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{classical_bound, BellKind, SettingTables};
use crate::error::{Error, Result};
use crate::measurements::{haar_settings, optimal_settings, MeasurementBasis, MeasurementSettings};
use crate::numerics::expm_i_hermitian;
use crate::perturbations::{perturb, random_hermitian, HermitianEnsemble, PerturbationConfig, PerturbationKind};
use crate::rng::{stream, StreamRng};
use crate::scalar::Real;
use crate::states::{bell_state, PureState};

/// Sample count used when none is given.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Local dimension `d = 2l + 1` of a spin-`l` system.
pub fn spin_to_dim(l: f64) -> Result<usize> {
    let d = 2.0 * l + 1.0;
    if !d.is_finite() || d.fract() != 0.0 || d < 2.0 {
        return Err(Error::invalid(format!(
            "spin l = {l} does not give an integer dimension d = 2l + 1 >= 2"
        )));
    }
    Ok(d as usize)
}

pub fn dim_to_spin(d: usize) -> f64 {
    (d as f64 - 1.0) / 2.0
}

/// Bell values recorded by one Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun<T> {
    pub kind: BellKind,
    pub local_dim: usize,
    /// Perturbation strength; 0 for the random-measurement experiment.
    pub epsilon: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub p_violation: f64,
    pub std_error: f64,
    pub max_value: f64,
    pub n_violations: usize,
    pub n_samples: usize,
}

/// Fraction of values strictly above the classical bound, its binomial
/// standard error, and the largest value.
pub fn violation_stats<T: Real>(run: &SampleRun<T>) -> Result<ViolationStats> {
    if run.values.is_empty() {
        return Err(Error::invalid("violation statistics need a non-empty run"));
    }
    let bound: T = classical_bound(run.kind);
    let n = run.values.len();
    let n_violations = run.values.iter().filter(|&&v| v > bound).count();
    let max_value = run.values.iter().copied().fold(T::neg_infinity(), T::max).as_f64();
    let p = n_violations as f64 / n as f64;
    Ok(ViolationStats {
        p_violation: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        max_value,
        n_violations,
        n_samples: n,
    })
}

/// Ideal state and settings shared by every sample of a perturbation run.
struct Reference<T> {
    state: PureState<T>,
    settings: MeasurementSettings<T>,
}

impl<T: Real> Reference<T> {
    fn new(d: usize) -> Result<Self> {
        Ok(Self {
            state: bell_state(d)?,
            settings: optimal_settings(d)?,
        })
    }

    fn perturbed_value(&self, kind: BellKind, cfg: &PerturbationConfig, index: u64) -> Result<T> {
        let mut rng = stream(cfg.seed, index);
        let s = perturb(&self.state, cfg.kind, T::lit(cfg.epsilon), cfg.ensemble, &mut rng)?;
        Ok(SettingTables::new(&s, &self.settings)?.value(kind))
    }
}

/// Bell values of `n` perturbed copies of the `d`-dimensional Bell state,
/// measured with the optimal settings.
pub fn sample_distribution<T: Real>(
    kind: BellKind,
    d: usize,
    cfg: &PerturbationConfig,
    n: usize,
) -> Result<SampleRun<T>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    cfg.validate()?;
    let reference = Reference::<T>::new(d)?;
    let values = (0..n as u64)
        .into_par_iter()
        .map(|i| reference.perturbed_value(kind, cfg, i))
        .collect::<Result<Vec<T>>>()?;
    Ok(SampleRun {
        kind,
        local_dim: d,
        epsilon: cfg.epsilon,
        n_samples: n,
        seed: cfg.seed,
        values,
    })
}

/// Whether any of the `n` samples of [`sample_distribution`] violates the
/// classical bound. Stops at the first violation found.
pub fn any_violation<T: Real>(kind: BellKind, d: usize, cfg: &PerturbationConfig, n: usize) -> Result<bool> {
    cfg.validate()?;
    let reference = Reference::<T>::new(d)?;
    let bound: T = classical_bound(kind);
    let hit = (0..n as u64)
        .into_par_iter()
        .map(|i| reference.perturbed_value(kind, cfg, i))
        .find_any(|r| r.as_ref().map_or(true, |&v| v > bound));
    match hit {
        Some(Err(e)) => Err(e),
        Some(Ok(_)) => Ok(true),
        None => Ok(false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub l: f64,
    pub local_dim: usize,
    pub stats: ViolationStats,
}

/// Violation probability as a function of spin `l` at fixed ε.
pub fn violation_profile<T: Real>(
    kind: BellKind,
    cfg: &PerturbationConfig,
    l_values: &[f64],
    n: usize,
) -> Result<Vec<ProfilePoint>> {
    let dims = l_values.iter().map(|&l| spin_to_dim(l)).collect::<Result<Vec<_>>>()?;
    l_values
        .iter()
        .zip(dims)
        .map(|(&l, d)| {
            let run = sample_distribution::<T>(kind, d, cfg, n)?;
            Ok(ProfilePoint {
                l,
                local_dim: d,
                stats: violation_stats(&run)?,
            })
        })
        .collect()
}

/// Geometric ε grid followed by bisection, for [`critical_epsilon`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub start: f64,
    pub stop: f64,
    pub factor: f64,
    /// Bisection ends once `(hi − lo) ≤ rel_width·lo`.
    pub rel_width: f64,
}

impl Default for EpsilonScan {
    fn default() -> Self {
        Self {
            start: 1e-3,
            stop: 2.0,
            factor: 1.2,
            rel_width: 1e-2,
        }
    }
}

impl EpsilonScan {
    /// `start·factor^k` below `stop`, then `stop` itself.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.start;
        while e < self.stop * (1.0 - 1e-12) {
            out.push(e);
            e *= self.factor;
        }
        out.push(self.stop);
        out
    }

    fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > self.start && self.factor > 1.0 && self.rel_width > 0.0) {
            return Err(Error::invalid(format!("invalid epsilon scan {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "epsilon", rename_all = "kebab-case")]
pub enum CriticalEpsilon {
    /// No violation even at the smallest grid point.
    BelowRange,
    Within(f64),
    /// Still violating at the largest grid point.
    AboveRange,
}

impl CriticalEpsilon {
    pub fn value(self) -> Option<f64> {
        match self {
            CriticalEpsilon::Within(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for CriticalEpsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalEpsilon::BelowRange => f.write_str("below-range"),
            CriticalEpsilon::Within(e) => write!(f, "{e}"),
            CriticalEpsilon::AboveRange => f.write_str("above-range"),
        }
    }
}

/// Largest ε at which at least one of `n` samples still violates the bound.
///
/// The grid is walked upwards until the first ε without a violation; the
/// bracket it closes is then bisected. The predicate is assumed to switch
/// once, which holds up to sampling noise near the threshold.
pub fn critical_epsilon<T: Real>(
    kind: BellKind,
    d: usize,
    n: usize,
    seed: u64,
    perturbation: PerturbationKind,
    ensemble: HermitianEnsemble,
    scan: &EpsilonScan,
) -> Result<CriticalEpsilon> {
    scan.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let base = PerturbationConfig::new(0.0, perturbation, seed)?.with_ensemble(ensemble);
    let violates = |eps: f64| any_violation::<T>(kind, d, &base.with_epsilon(eps), n);

    let grid = scan.grid();
    let mut lo = None;
    let mut hi = None;
    for &e in &grid {
        if violates(e)? {
            lo = Some(e);
        } else {
            hi = Some(e);
            break;
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (None, _) => return Ok(CriticalEpsilon::BelowRange),
        (Some(_), None) => return Ok(CriticalEpsilon::AboveRange),
        (Some(l), Some(h)) => (l, h),
    };
    while hi - lo > scan.rel_width * lo {
        let mid = 0.5 * (lo + hi);
        if violates(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalEpsilon::Within(lo))
}

/// How the "random direction" bases of [`random_measurement_run_with`] are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomBasisMode {
    /// Haar-random unitary per basis.
    #[default]
    Haar,
    /// Columns of `exp(iG)` with `G` from the default random-Hermitian ensemble.
    ExpHermitian,
}

impl FromStr for RandomBasisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(Self::Haar),
            "exp-hermitian" => Ok(Self::ExpHermitian),
            other => Err(Error::invalid(format!("unknown random basis mode '{other}'"))),
        }
    }
}

pub fn random_settings<T: Real>(d: usize, mode: RandomBasisMode, rng: &mut StreamRng) -> Result<MeasurementSettings<T>> {
    match mode {
        RandomBasisMode::Haar => haar_settings(d, rng),
        RandomBasisMode::ExpHermitian => {
            let mut basis = || -> Result<MeasurementBasis<T>> {
                let g = random_hermitian::<T, _>(d, rng);
                Ok(MeasurementBasis::from_unitary(&expm_i_hermitian(&g, T::one())?))
            };
            let (a1, a2, b1, b2) = (basis()?, basis()?, basis()?, basis()?);
            MeasurementSettings::new(a1, a2, b1, b2)
        }
    }
}

/// `I` of the Bell state measured in four independent random bases per sample.
pub fn random_measurement_run<T: Real>(d: usize, n: usize, seed: u64) -> Result<SampleRun<T>> {
    random_measurement_run_with(d, n, seed, RandomBasisMode::Haar)
}

pub fn random_measurement_run_with<T: Real>(
    d: usize,
    n: usize,
    seed: u64,
    mode: RandomBasisMode,
) -> Result<SampleRun<T>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let state = bell_state::<T>(d)?;
    let values = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let settings = random_settings(d, mode, &mut rng)?;
            Ok(SettingTables::new(&state, &settings)?.value_i())
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(SampleRun {
        kind: BellKind::I,
        local_dim: d,
        epsilon: 0.0,
        n_samples: n,
        seed,
        values,
    })
}
