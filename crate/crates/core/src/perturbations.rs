//! Random unitary perturbations `exp(iεH)` of a bipartite state, either one
//! generator per subsystem (bilocal) or one on the joint space (global).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{expm_i_hermitian, HermitianMatrix, UnitaryMatrix};
use crate::scalar::Real;
use crate::states::PureState;

/// Distribution of the entries of a random generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HermitianEnsemble {
    /// Diagonal uniform on `[−1, 1]`; off-diagonal modulus uniform on
    /// `[0, 1]` with a uniform phase, so every `|H_ij| ≤ 1`.
    #[default]
    MagnitudePhase,
    /// Off-diagonal real and imaginary parts each uniform on `[−1, 1]`.
    UniformParts,
    /// Real symmetric, every entry uniform on `[−1, 1]`.
    RealSymmetric,
}

impl FromStr for HermitianEnsemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude-phase" => Ok(Self::MagnitudePhase),
            "uniform-parts" => Ok(Self::UniformParts),
            "real-symmetric" => Ok(Self::RealSymmetric),
            other => Err(Error::invalid(format!("unknown Hermitian ensemble '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    /// `exp(iεH_A) ⊗ exp(iεH_B)`; leaves the Schmidt coefficients intact.
    #[default]
    Bilocal,
    /// `exp(iεH)` with `H` acting on `C^d ⊗ C^d`.
    Global,
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationKind::Bilocal => "bilocal",
            PerturbationKind::Global => "global",
        })
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilocal" => Ok(Self::Bilocal),
            "global" => Ok(Self::Global),
            other => Err(Error::invalid(format!(
                "unknown perturbation '{other}' (expected bilocal or global)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub epsilon: f64,
    pub kind: PerturbationKind,
    pub seed: u64,
    #[serde(default)]
    pub ensemble: HermitianEnsemble,
}

impl PerturbationConfig {
    pub fn new(epsilon: f64, kind: PerturbationKind, seed: u64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            kind,
            seed,
            ensemble: HermitianEnsemble::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_ensemble(mut self, ensemble: HermitianEnsemble) -> Self {
        self.ensemble = ensemble;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Random generator from the default ensemble.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix<T> {
    random_hermitian_from(n, HermitianEnsemble::default(), rng)
}

pub fn random_hermitian_from<T: Real, R: Rng + ?Sized>(
    n: usize,
    ensemble: HermitianEnsemble,
    rng: &mut R,
) -> HermitianMatrix<T> {
    HermitianMatrix::from_upper(n, |i, j| {
        let z = if i == j {
            Complex::new(rng.random_range(-1.0..=1.0), 0.0)
        } else {
            match ensemble {
                HermitianEnsemble::MagnitudePhase => {
                    let r: f64 = rng.random_range(0.0..=1.0);
                    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    Complex::from_polar(r, phi)
                }
                HermitianEnsemble::UniformParts => {
                    Complex::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
                }
                HermitianEnsemble::RealSymmetric => Complex::new(rng.random_range(-1.0..=1.0), 0.0),
            }
        };
        Complex::new(T::lit(z.re), T::lit(z.im))
    })
}

/// `(exp(iεH_A), exp(iεH_B))` with `H_A` drawn before `H_B`.
pub fn bilocal_unitaries<T: Real, R: Rng + ?Sized>(
    d: usize,
    epsilon: T,
    ensemble: HermitianEnsemble,
    rng: &mut R,
) -> Result<(UnitaryMatrix<T>, UnitaryMatrix<T>)> {
    let ha = random_hermitian_from::<T, R>(d, ensemble, rng);
    let hb = random_hermitian_from::<T, R>(d, ensemble, rng);
    Ok((expm_i_hermitian(&ha, epsilon)?, expm_i_hermitian(&hb, epsilon)?))
}

pub fn apply_bilocal<T: Real, R: Rng + ?Sized>(state: &PureState<T>, epsilon: T, rng: &mut R) -> Result<PureState<T>> {
    apply_bilocal_with(state, epsilon, HermitianEnsemble::default(), rng)
}

pub fn apply_bilocal_with<T: Real, R: Rng + ?Sized>(
    state: &PureState<T>,
    epsilon: T,
    ensemble: HermitianEnsemble,
    rng: &mut R,
) -> Result<PureState<T>> {
    check_epsilon(epsilon)?;
    let (ua, ub) = bilocal_unitaries(state.local_dim(), epsilon, ensemble, rng)?;
    if epsilon == T::zero() {
        return Ok(state.clone());
    }
    state.apply_local(&ua, &ub)
}

pub fn apply_global<T: Real, R: Rng + ?Sized>(state: &PureState<T>, epsilon: T, rng: &mut R) -> Result<PureState<T>> {
    apply_global_with(state, epsilon, HermitianEnsemble::default(), rng)
}

pub fn apply_global_with<T: Real, R: Rng + ?Sized>(
    state: &PureState<T>,
    epsilon: T,
    ensemble: HermitianEnsemble,
    rng: &mut R,
) -> Result<PureState<T>> {
    check_epsilon(epsilon)?;
    let d = state.local_dim();
    let h = random_hermitian_from::<T, R>(d * d, ensemble, rng);
    if epsilon == T::zero() {
        return Ok(state.clone());
    }
    state.apply_global(&expm_i_hermitian(&h, epsilon)?)
}

/// Dispatches on `kind`.
pub fn perturb<T: Real, R: Rng + ?Sized>(
    state: &PureState<T>,
    kind: PerturbationKind,
    epsilon: T,
    ensemble: HermitianEnsemble,
    rng: &mut R,
) -> Result<PureState<T>> {
    match kind {
        PerturbationKind::Bilocal => apply_bilocal_with(state, epsilon, ensemble, rng),
        PerturbationKind::Global => apply_global_with(state, epsilon, ensemble, rng),
    }
}

fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must be finite, got {epsilon}")))
    }
}
