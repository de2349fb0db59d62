//! Bipartite pure states of two `d`-level systems.
//!
//! Amplitudes are stored in the product basis with index `i_A·d + i_B`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{norm, ComplexMatrix, UnitaryMatrix};
use crate::scalar::Real;

/// Range of the real and imaginary parts of unnormalized random amplitudes.
pub const RANDOM_AMPLITUDE_RANGE: f64 = 10.0;

/// Normalized state vector in `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    local_dim: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// Normalizes `amps` (length `d²`) into a state.
    pub fn new(local_dim: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        if local_dim == 0 {
            return Err(Error::invalid("local dimension must be positive"));
        }
        if amps.len() != local_dim * local_dim {
            return Err(Error::invalid(format!(
                "state of local dimension {local_dim} needs {} amplitudes, got {}",
                local_dim * local_dim,
                amps.len()
            )));
        }
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("state has non-finite amplitudes"));
        }
        let n = norm(&amps);
        if n == T::zero() {
            return Err(Error::invalid("zero vector is not a state"));
        }
        let amps = amps.into_iter().map(|z| z / n).collect();
        Ok(Self { local_dim, amps })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitude(&self, i_a: usize, i_b: usize) -> Complex<T> {
        self.amps[i_a * self.local_dim + i_b]
    }

    pub fn norm(&self) -> T {
        norm(&self.amps)
    }

    /// Coefficient matrix `Ψ` with `ψ = Σ Ψ[a, b] |a⟩⊗|b⟩`.
    pub fn coefficient_matrix(&self) -> ComplexMatrix<T> {
        let d = self.local_dim;
        ComplexMatrix::from_fn(d, d, |a, b| self.amps[a * d + b])
    }

    /// `(U_A ⊗ U_B)·ψ`, evaluated as `U_A·Ψ·U_Bᵀ`.
    pub fn apply_local(&self, u_a: &UnitaryMatrix<T>, u_b: &UnitaryMatrix<T>) -> Result<Self> {
        let d = self.local_dim;
        if u_a.dim() != d || u_b.dim() != d {
            return Err(Error::invalid(format!(
                "local unitaries of dimension {} and {} do not act on local dimension {d}",
                u_a.dim(),
                u_b.dim()
            )));
        }
        let psi = u_a
            .as_matrix()
            .matmul(&self.coefficient_matrix())
            .matmul(&u_b.as_matrix().transpose());
        Ok(Self {
            local_dim: d,
            amps: psi.into_vec(),
        })
    }

    /// `U·ψ` for a unitary on the joint space.
    pub fn apply_global(&self, u: &UnitaryMatrix<T>) -> Result<Self> {
        if u.dim() != self.amps.len() {
            return Err(Error::invalid(format!(
                "unitary of dimension {} does not act on a {}-dimensional state",
                u.dim(),
                self.amps.len()
            )));
        }
        Ok(Self {
            local_dim: self.local_dim,
            amps: u.as_matrix().mul_vec(&self.amps),
        })
    }
}

/// `(1/√d)·Σ_j |j⟩⊗|j⟩`.
pub fn bell_state<T: Real>(d: usize) -> Result<PureState<T>> {
    if d < 2 {
        return Err(Error::invalid(format!("Bell state needs d >= 2, got {d}")));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut amps = vec![zero; d * d];
    let a = T::one() / T::lit(d as f64).sqrt();
    for j in 0..d {
        amps[j * d + j] = Complex::new(a, T::zero());
    }
    Ok(PureState { local_dim: d, amps })
}

fn random_amplitudes<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex<T>> {
    let r = RANDOM_AMPLITUDE_RANGE;
    (0..n)
        .map(|_| {
            let re: f64 = rng.random_range(-r..=r);
            let im: f64 = rng.random_range(-r..=r);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect()
}

fn normalized_random<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex<T>> {
    loop {
        let v = random_amplitudes::<T, R>(n, rng);
        let nrm = norm(&v);
        if nrm > T::zero() {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

/// State whose `d²` amplitudes have independent real and imaginary parts,
/// uniform on `[−10, 10]`, then normalized.
pub fn random_entangled_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState<T>> {
    if d < 2 {
        return Err(Error::invalid(format!("random state needs d >= 2, got {d}")));
    }
    Ok(PureState {
        local_dim: d,
        amps: normalized_random(d * d, rng),
    })
}

/// `φ_A ⊗ φ_B` with both factors drawn like [`random_entangled_state`].
pub fn random_product_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState<T>> {
    if d < 2 {
        return Err(Error::invalid(format!("random state needs d >= 2, got {d}")));
    }
    let a: Vec<Complex<T>> = normalized_random(d, rng);
    let b: Vec<Complex<T>> = normalized_random(d, rng);
    let amps = a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect();
    Ok(PureState { local_dim: d, amps })
}

/// Product of computational basis states `|i⟩⊗|j⟩`.
pub fn basis_product_state<T: Real>(d: usize, i: usize, j: usize) -> Result<PureState<T>> {
    if i >= d || j >= d {
        return Err(Error::invalid(format!("basis labels ({i}, {j}) out of range for d = {d}")));
    }
    let mut amps = vec![Complex::new(T::zero(), T::zero()); d * d];
    amps[i * d + j] = Complex::new(T::one(), T::zero());
    PureState::new(d, amps)
}
