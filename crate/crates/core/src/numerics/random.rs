use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, ComplexVector, UnitaryMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex normal variate with `E|z|² = 1`.
pub fn standard_complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re * std::f64::consts::FRAC_1_SQRT_2), T::lit(im * std::f64::consts::FRAC_1_SQRT_2))
}

/// Haar-distributed `d×d` unitary.
///
/// A Ginibre matrix is factored by Householder QR and the columns of `Q`
/// are multiplied by the phases of `diag(R)`; without that correction the
/// distribution of `Q` depends on the QR sign convention and is not Haar.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitaryMatrix<T>> {
    if d == 0 {
        return Err(Error::invalid("unitary dimension must be at least 1"));
    }
    let mut a = ComplexMatrix::<T>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = standard_complex_normal(rng);
        }
    }
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let mut q = ComplexMatrix::<T>::identity(d);
    let mut r_diag = vec![one; d];
    let mut v = vec![zero; d];

    for k in 0..d {
        let x0 = a[(k, k)];
        let norm_sq: T = (k..d).map(|i| a[(i, k)].norm_sqr()).sum();
        let xnorm = norm_sq.sqrt();
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { one };
        let alpha = -phase * xnorm;
        r_diag[k] = alpha;
        if k + 1 == d {
            break;
        }
        v.iter_mut().for_each(|z| *z = zero);
        v[k] = x0 - alpha;
        for i in k + 1..d {
            v[i] = a[(i, k)];
        }
        let vnorm = v[k..].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in &mut v[k..] {
            *z = *z / vnorm;
        }
        // A ← (I − 2vv†)A on the trailing columns
        for j in k..d {
            let s: Complex<T> = (k..d).map(|i| v[i].conj() * a[(i, j)]).sum();
            for i in k..d {
                let upd = v[i] * s * two;
                a[(i, j)] -= upd;
            }
        }
        // Q ← Q(I − 2vv†)
        for i in 0..d {
            let s: Complex<T> = (k..d).map(|j| q[(i, j)] * v[j]).sum();
            for j in k..d {
                let upd = s * v[j].conj() * two;
                q[(i, j)] -= upd;
            }
        }
    }
    // The last reflector is the identity, so diag(R)[d−1] is the remaining
    // entry itself rather than −phase·|x|.
    r_diag[d - 1] = a[(d - 1, d - 1)];
    for (j, r) in r_diag.iter().enumerate() {
        let m = r.norm();
        let ph = if m > T::zero() { r / m } else { one };
        for i in 0..d {
            q[(i, j)] = q[(i, j)] * ph;
        }
    }
    Ok(UnitaryMatrix::new_unchecked(q))
}

/// Uniformly distributed unit vector in `C^n` (the real sphere `S^{2n−1}`).
pub fn uniform_sphere_state<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexVector<T>> {
    if n == 0 {
        return Err(Error::invalid("state dimension must be at least 1"));
    }
    loop {
        let v: Vec<Complex<T>> = (0..n).map(|_| standard_complex_normal(rng)).collect();
        let nrm = super::matrix::norm(&v);
        if nrm > T::zero() {
            return ComplexVector::new(v.into_iter().map(|z| z / nrm).collect());
        }
    }
}
