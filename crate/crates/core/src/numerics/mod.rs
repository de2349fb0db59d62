//! Dense complex linear algebra: Hermitian eigendecomposition, unitary
//! exponentials, Kronecker products and random unitaries/states.

mod eigen;
mod matrix;
mod random;

pub use eigen::{eigh, HermitianEigen};
pub use matrix::{inner, norm, tensor_product, ComplexMatrix, ComplexVector, HermitianMatrix, UnitaryMatrix};
pub use random::{haar_unitary, standard_complex_normal, uniform_sphere_state};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `exp(iθH)` computed as `V·diag(e^{iθλ})·V†` from the eigendecomposition of `H`.
pub fn expm_i_hermitian<T: Real>(h: &HermitianMatrix<T>, theta: T) -> Result<UnitaryMatrix<T>> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("exponent scale must be finite, got {theta}")));
    }
    let eig = eigh(h)?;
    Ok(expm_from_eigen(&eig, theta))
}

/// Same as [`expm_i_hermitian`] for a generator whose eigendecomposition is
/// already known.
pub fn expm_from_eigen<T: Real>(eig: &HermitianEigen<T>, theta: T) -> UnitaryMatrix<T> {
    let m = eig.reconstruct_with(|l| Complex::from_polar(T::one(), theta * l));
    UnitaryMatrix::new_unchecked(m)
}
