//! Hermitian eigendecomposition: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL iterations (the EISPACK `tql2`
//! scheme), with the eigenvectors accumulated in complex arithmetic.

use num_complex::Complex;

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues in ascending order and the unitary whose `k`-th column is
/// the eigenvector of the `k`-th eigenvalue.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V·diag(f(λ))·V†`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(T) -> Complex<T>) -> ComplexMatrix<T> {
        let n = self.values.len();
        let fv: Vec<Complex<T>> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += v[(i, k)] * fv[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eigh<T: Real>(h: &HermitianMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = h.dim();
    if !h.as_matrix().is_finite() {
        return Err(Error::invalid("Hermitian matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let (diag, sub, z) = tridiagonalize(h.as_matrix());
    let (values, vectors) = tql2(diag, sub, z)?;
    Ok(HermitianEigen { values, vectors })
}

/// Returns `(d, e, Z)` with `H = Z·T·Z†`, where `T` is real symmetric
/// tridiagonal with diagonal `d` and sub-diagonal `e[0..n-1]`.
fn tridiagonalize<T: Real>(h: &ComplexMatrix<T>) -> (Vec<T>, Vec<T>, ComplexMatrix<T>) {
    let n = h.rows();
    let zero = Complex::new(T::zero(), T::zero());
    let two = T::lit(2.0);
    let mut a = h.clone();
    let mut q = ComplexMatrix::<T>::identity(n);
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];

    for k in 0..n.saturating_sub(2) {
        let tail: T = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if tail == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let xnorm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() > T::zero() {
            x0 / x0.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        let alpha = -phase * xnorm;

        v.iter_mut().for_each(|z| *z = zero);
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm = v[k + 1..].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in &mut v[k + 1..] {
            *z = *z / vnorm;
        }

        // P·A·P = A − 2·v·w† − 2·w·v†, with p = A·v, K = v†·A·v, w = p − K·v.
        for i in 0..n {
            let mut acc = zero;
            for j in k + 1..n {
                acc += a[(i, j)] * v[j];
            }
            p[i] = acc;
        }
        let kk: T = (k + 1..n).map(|j| (v[j].conj() * p[j]).re).sum();
        let w: Vec<Complex<T>> = (0..n).map(|i| p[i] - v[i] * kk).collect();
        for i in k..n {
            for j in k..n {
                let upd = (v[i] * w[j].conj() + w[i] * v[j].conj()) * two;
                a[(i, j)] -= upd;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[(i, k)] = zero;
            a[(k, i)] = zero;
        }
        for i in k..n {
            a[(i, i)] = Complex::new(a[(i, i)].re, T::zero());
        }

        // Q ← Q·P
        for i in 0..n {
            let mut qv = zero;
            for j in k + 1..n {
                qv += q[(i, j)] * v[j];
            }
            let qv2 = qv * two;
            for j in k + 1..n {
                let upd = qv2 * v[j].conj();
                q[(i, j)] -= upd;
            }
        }
    }

    let d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phase = vec![Complex::new(T::one(), T::zero()); n];
    for i in 0..n - 1 {
        let s = a[(i + 1, i)];
        let m = s.norm();
        e[i] = m;
        phase[i + 1] = if m > T::zero() { phase[i] * (s / m) } else { phase[i] };
    }
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = q[(i, j)] * phase[j];
        }
    }
    (d, e, q)
}

/// Implicit QL on a symmetric tridiagonal matrix; `e[i]` couples `i` and
/// `i+1` and `e[n-1]` is ignored. Rotations are applied to the columns of `z`.
fn tql2<T: Real>(
    mut d: Vec<T>,
    mut e: Vec<T>,
    mut z: ComplexMatrix<T>,
) -> Result<(Vec<T>, ComplexMatrix<T>)> {
    let n = d.len();
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let max_iter = 30 * n.max(4);
    let mut f = T::zero();
    let mut tst1 = T::zero();

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::Numerical(format!(
                        "tridiagonal QL did not converge for eigenvalue {l}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zh = z[(k, i + 1)];
                        let zi = z[(k, i)];
                        z[(k, i + 1)] = zi * s + zh * c;
                        z[(k, i)] = zi * c - zh * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| z[(i, order[j])]);
    Ok((values, vectors))
}
