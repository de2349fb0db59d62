//! Local measurement bases, Born-rule outcome tables and correlated
//! probabilities `P(A − B ≡ shift mod d)`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{haar_unitary, ComplexMatrix, UnitaryMatrix};
use crate::scalar::Real;
use crate::states::PureState;

/// Orthonormal basis of `C^d`; vector `k` belongs to outcome label `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis<T> {
    // column k is the vector for outcome k
    columns: ComplexMatrix<T>,
}

impl<T: Real> MeasurementBasis<T> {
    pub fn from_vectors(vectors: &[Vec<Complex<T>>]) -> Result<Self> {
        let d = vectors.len();
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::invalid("a basis of C^d needs d vectors of length d"));
        }
        let m = ComplexMatrix::from_columns(vectors)?;
        if !m.is_finite() {
            return Err(Error::invalid("basis vectors have non-finite entries"));
        }
        let defect = m.unitarity_defect();
        if defect > UnitaryMatrix::<T>::tolerance() {
            return Err(Error::invalid(format!(
                "basis vectors are not orthonormal (defect {defect})"
            )));
        }
        Ok(Self { columns: m })
    }

    /// Basis formed by the columns of `u`.
    pub fn from_unitary(u: &UnitaryMatrix<T>) -> Self {
        Self {
            columns: u.as_matrix().clone(),
        }
    }

    pub fn computational(d: usize) -> Self {
        Self {
            columns: ComplexMatrix::identity(d),
        }
    }

    pub fn local_dim(&self) -> usize {
        self.columns.rows()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        self.columns.column(k)
    }

    /// Matrix whose columns are the basis vectors.
    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.columns
    }

    /// Maps every basis vector `v` to `U·v`.
    pub fn rotated(&self, u: &UnitaryMatrix<T>) -> Self {
        Self {
            columns: u.as_matrix().matmul(&self.columns),
        }
    }
}

/// Two bases per party: `a1, a2` for Alice, `b1, b2` for Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings<T> {
    pub a1: MeasurementBasis<T>,
    pub a2: MeasurementBasis<T>,
    pub b1: MeasurementBasis<T>,
    pub b2: MeasurementBasis<T>,
}

impl<T: Real> MeasurementSettings<T> {
    pub fn new(
        a1: MeasurementBasis<T>,
        a2: MeasurementBasis<T>,
        b1: MeasurementBasis<T>,
        b2: MeasurementBasis<T>,
    ) -> Result<Self> {
        let d = a1.local_dim();
        if [&a2, &b1, &b2].iter().any(|b| b.local_dim() != d) {
            return Err(Error::invalid("all four bases must share one local dimension"));
        }
        Ok(Self { a1, a2, b1, b2 })
    }

    pub fn local_dim(&self) -> usize {
        self.a1.local_dim()
    }

    /// Alice's basis for observable `i ∈ {1, 2}`.
    pub fn alice(&self, i: usize) -> &MeasurementBasis<T> {
        match i {
            1 => &self.a1,
            2 => &self.a2,
            _ => panic!("observable index must be 1 or 2, got {i}"),
        }
    }

    /// Bob's basis for observable `j ∈ {1, 2}`.
    pub fn bob(&self, j: usize) -> &MeasurementBasis<T> {
        match j {
            1 => &self.b1,
            2 => &self.b2,
            _ => panic!("observable index must be 1 or 2, got {j}"),
        }
    }

    /// Alice's bases rotated by `u_a`, Bob's by `u_b`.
    pub fn rotated(&self, u_a: &UnitaryMatrix<T>, u_b: &UnitaryMatrix<T>) -> Self {
        Self {
            a1: self.a1.rotated(u_a),
            a2: self.a2.rotated(u_a),
            b1: self.b1.rotated(u_b),
            b2: self.b2.rotated(u_b),
        }
    }
}

/// Fourier-type bases maximizing both expressions on the Bell state:
/// Alice `(1/√d)·exp[2πi·j(k + α_a)/d]` with `α = (0, 1/2)`, Bob
/// `(1/√d)·exp[2πi·j(−l + β_b)/d]` with `β = (1/4, −1/4)`.
pub fn optimal_settings<T: Real>(d: usize) -> Result<MeasurementSettings<T>> {
    if d < 2 {
        return Err(Error::invalid(format!("optimal settings need d >= 2, got {d}")));
    }
    let scale = T::one() / T::lit(d as f64).sqrt();
    let two_pi_over_d = T::TAU() / T::lit(d as f64);
    let fourier = |sign: f64, offset: f64| {
        let m = ComplexMatrix::from_fn(d, d, |j, k| {
            let phase = two_pi_over_d * T::lit(j as f64) * T::lit(sign * k as f64 + offset);
            Complex::from_polar(scale, phase)
        });
        MeasurementBasis { columns: m }
    };
    Ok(MeasurementSettings {
        a1: fourier(1.0, 0.0),
        a2: fourier(1.0, 0.5),
        b1: fourier(-1.0, 0.25),
        b2: fourier(-1.0, -0.25),
    })
}

/// Four independent Haar-random bases.
pub fn haar_settings<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<MeasurementSettings<T>> {
    let mut basis = || haar_unitary::<T, R>(d, rng).map(|u| MeasurementBasis::from_unitary(&u));
    Ok(MeasurementSettings {
        a1: basis()?,
        a2: basis()?,
        b1: basis()?,
        b2: basis()?,
    })
}

/// Joint outcome distribution; entry `(k, l)` is `P(A = k, B = l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable<T> {
    local_dim: usize,
    probs: Vec<T>,
}

impl<T: Real> OutcomeTable<T> {
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn get(&self, k: usize, l: usize) -> T {
        self.probs[k * self.local_dim + l]
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    pub fn row_sum(&self, k: usize) -> T {
        (0..self.local_dim).map(|l| self.get(k, l)).sum()
    }

    pub fn col_sum(&self, l: usize) -> T {
        (0..self.local_dim).map(|k| self.get(k, l)).sum()
    }
}

/// Born rule: `(k, l) ↦ |(⟨k|_A ⊗ ⟨l|_B)ψ|²`.
///
/// The amplitudes form the matrix `A†·Ψ·B̄`, where `A` and `B` hold the basis
/// vectors as columns and `Ψ` is the coefficient matrix of the state.
pub fn outcome_table<T: Real>(
    state: &PureState<T>,
    alice: &MeasurementBasis<T>,
    bob: &MeasurementBasis<T>,
) -> Result<OutcomeTable<T>> {
    let d = state.local_dim();
    if alice.local_dim() != d || bob.local_dim() != d {
        return Err(Error::invalid(format!(
            "bases of dimension {} and {} cannot measure a state of local dimension {d}",
            alice.local_dim(),
            bob.local_dim()
        )));
    }
    let amp = alice
        .columns
        .adjoint()
        .matmul(&state.coefficient_matrix())
        .matmul(&bob.columns.conj());
    Ok(OutcomeTable {
        local_dim: d,
        probs: amp.as_slice().iter().map(|z| z.norm_sqr()).collect(),
    })
}

/// `P(A − B ≡ shift mod d) = Σ_ℓ table(ℓ + shift, ℓ)`.
pub fn correlated_probability<T: Real>(table: &OutcomeTable<T>, shift: i64) -> T {
    let d = table.local_dim;
    let s = shift.rem_euclid(d as i64) as usize;
    (0..d).map(|l| table.get((l + s) % d, l)).sum()
}
