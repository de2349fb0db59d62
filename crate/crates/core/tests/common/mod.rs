#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use qudit_bell::states::PureState;

/// Schmidt coefficients in descending order, from nalgebra's SVD of the
/// coefficient matrix.
pub fn schmidt(state: &PureState<f64>) -> Vec<f64> {
    let d = state.local_dim();
    let m = DMatrix::<Complex<f64>>::from_fn(d, d, |i, j| state.amplitude(i, j));
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Rejection threshold of [`ks_statistic`] at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}
