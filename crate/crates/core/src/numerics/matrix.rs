use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Matrix whose `k`-th column is `columns[k]`.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::invalid("columns have unequal lengths"));
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * alpha).collect(),
        }
    }

    /// # Panics
    /// On incompatible shapes.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in row.iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// # Panics
    /// If `v.len() != self.cols()`.
    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_defect(&self) -> T {
        self.adjoint().matmul(self).sub(&Self::identity(self.cols)).frobenius_norm()
    }

    /// Kronecker product; row index of the result is `i_self * rhs.rows + i_rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        Self::from_fn(rows, cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product `m ⊗ n` with the bipartite index convention `i_A·d_B + i_B`.
pub fn tensor_product<T: Real>(m: &ComplexMatrix<T>, n: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    m.kron(n)
}

/// Dense complex vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector<T> {
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Result<Self> {
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("vector has non-finite entries"));
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn norm(&self) -> T {
        norm(&self.data)
    }
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Hermitian matrix. The lower triangle is always the conjugate mirror of
/// the upper one and the diagonal is real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: ComplexMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Builds from the entries on and above the diagonal; `upper(i, j)` is
    /// only called with `i <= j` and the imaginary part of diagonal entries
    /// is dropped.
    pub fn from_upper(dim: usize, mut upper: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            let d = upper(i, i);
            m[(i, i)] = Complex::new(d.re, T::zero());
            for j in i + 1..dim {
                let z = upper(i, j);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Self { inner: m }
    }

    /// Takes the upper triangle of a square matrix.
    pub fn from_matrix_upper(m: &ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("Hermitian matrix must be square"));
        }
        if !m.is_finite() {
            return Err(Error::invalid("Hermitian matrix has non-finite entries"));
        }
        Ok(Self::from_upper(m.rows(), |i, j| m[(i, j)]))
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self::from_upper(values.len(), |i, j| {
            if i == j {
                Complex::new(values[i], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.inner
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            inner: self.inner.scale(Complex::new(alpha, T::zero())),
        }
    }
}

impl<T> Index<(usize, usize)> for HermitianMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, idx: (usize, usize)) -> &Complex<T> {
        &self.inner[idx]
    }
}

/// Square matrix with orthonormal columns (to within construction accuracy).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix<T> {
    inner: ComplexMatrix<T>,
}

impl<T: Real> UnitaryMatrix<T> {
    /// Tolerance on `‖U†U − I‖_F` accepted by [`UnitaryMatrix::new`].
    pub fn tolerance() -> T {
        // f32 cannot resolve 1e-10; scale the tolerance to the type.
        (T::epsilon() * T::lit(1e6)).max(T::lit(1e-10))
    }

    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("unitary matrix must be square"));
        }
        if !m.is_finite() {
            return Err(Error::invalid("unitary matrix has non-finite entries"));
        }
        let defect = m.unitarity_defect();
        if defect > Self::tolerance() * T::lit(m.rows().max(1) as f64) {
            return Err(Error::Numerical(format!(
                "matrix is not unitary: ||U^H U - I||_F = {defect}"
            )));
        }
        Ok(Self { inner: m })
    }

    pub(crate) fn new_unchecked(m: ComplexMatrix<T>) -> Self {
        Self { inner: m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.inner
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            inner: self.inner.conj(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self {
            inner: self.inner.matmul(&rhs.inner),
        }
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self {
            inner: self.inner.kron(&rhs.inner),
        }
    }
}

impl<T> Index<(usize, usize)> for UnitaryMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, idx: (usize, usize)) -> &Complex<T> {
        &self.inner[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_kron_identity() {
        let k = tensor_product(&ComplexMatrix::<f64>::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn kron_shape() {
        let a = ComplexMatrix::<f64>::from_fn(2, 2, |i, j| c(i as f64, j as f64));
        let b = ComplexMatrix::<f64>::from_fn(3, 3, |i, j| c(j as f64, i as f64));
        let k = tensor_product(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        assert_eq!(k[(4, 2)], a[(1, 0)] * b[(1, 2)]);
    }

    #[test]
    fn kron_basis_vectors_follow_index_convention() {
        let e0 = ComplexMatrix::<f64>::from_row_major(2, 1, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e1 = ComplexMatrix::<f64>::from_row_major(2, 1, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let v = tensor_product(&e0, &e1);
        let expected: Vec<_> = [0.0, 1.0, 0.0, 0.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(v.as_slice(), &expected[..]);
    }

    #[test]
    fn from_row_major_validates() {
        assert!(ComplexMatrix::<f64>::from_row_major(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::<f64>::from_row_major(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexVector::<f64>::new(vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn hermitian_from_upper_mirrors() {
        let h = HermitianMatrix::<f64>::from_upper(3, |i, j| c((i + j) as f64, (j as f64) - (i as f64) + 0.5));
        for i in 0..3 {
            assert_eq!(h[(i, i)].im, 0.0);
            for j in 0..3 {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
    }

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = ComplexMatrix::<f64>::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert!(UnitaryMatrix::new(m).is_err());
        assert!(UnitaryMatrix::new(ComplexMatrix::<f64>::identity(3)).is_ok());
    }

    #[test]
    fn matmul_matches_naive() {
        let a = ComplexMatrix::<f64>::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64));
        let b = ComplexMatrix::<f64>::from_fn(3, 2, |i, j| c(j as f64, -(i as f64)));
        let p = a.matmul(&b);
        for i in 0..2 {
            for j in 0..2 {
                let want: Complex64 = (0..3).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert_eq!(p[(i, j)], want);
            }
        }
        let v = vec![c(1.0, 1.0), c(0.0, -2.0), c(3.0, 0.5)];
        let av = a.mul_vec(&v);
        for i in 0..2 {
            let want: Complex64 = (0..3).map(|k| a[(i, k)] * v[k]).sum();
            assert_eq!(av[i], want);
        }
    }
}
