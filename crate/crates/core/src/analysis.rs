//! Histograms, erf-profile and power-law fits, Gaussian summaries.
//!
//! Statistics are computed in `f64` regardless of the scalar used to produce
//! the samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

use crate::error::{Error, Result};
use crate::optimizer::{nelder_mead, SimplexConfig};

pub const DEFAULT_BINS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_total: u64,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.bin_edges[k] + self.bin_edges[k + 1])
    }
}

/// Equal-width bins over `[min, max]`; every bin is half-open except the last.
pub fn build_histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::invalid("histogram of an empty sample"));
    }
    if n_bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("histogram input contains non-finite values"));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        lo -= 0.5e-9;
        hi += 0.5e-9;
    }
    let width = (hi - lo) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins)
        .map(|k| if k == n_bins { hi } else { lo + width * k as f64 })
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let mut k = (((v - lo) / width) as usize).min(n_bins - 1);
        // floating-point division can land one bin off near an edge
        while k > 0 && v < bin_edges[k] {
            k -= 1;
        }
        while k + 1 < n_bins && v >= bin_edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_edges,
        counts,
        n_total: values.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErfFit {
    pub l_bar: f64,
    pub delta: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

/// `½[1 − erf((l − l̄)/Δ)]`.
pub fn erf_profile(l: f64, l_bar: f64, delta: f64) -> f64 {
    0.5 * (1.0 - erf((l - l_bar) / delta))
}

/// Least-squares fit of [`erf_profile`] to `(l, p)` points.
///
/// Δ is optimized through its logarithm so it stays positive.
pub fn fit_erf_profile(points: &[(f64, f64)]) -> Result<ErfFit> {
    if points.len() < 3 {
        return Err(Error::invalid("erf fit needs at least 3 points"));
    }
    if let Some(&(l, p)) = points.iter().find(|(l, p)| !l.is_finite() || !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!("erf fit point ({l}, {p}) has p outside [0, 1]")));
    }
    let l_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let l_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (l_max - l_min).max(1e-3);

    // start at the half crossing if the data has one, else mid-range
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let l0 = sorted
        .windows(2)
        .find(|w| (w[0].1 - 0.5) * (w[1].1 - 0.5) <= 0.0 && w[0].1 != w[1].1)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * (w[0].1 - 0.5) / (w[0].1 - w[1].1))
        .unwrap_or(0.5 * (l_min + l_max));

    let sse = |x: &[f64]| -> f64 {
        let delta = x[1].exp();
        points.iter().map(|&(l, p)| (p - erf_profile(l, x[0], delta)).powi(2)).sum()
    };
    let cfg = SimplexConfig {
        spread_tol: 1e-26,
        x_tol: 1e-10,
        max_evals: 20_000,
        initial_step: 0.25 * span,
        inner_restarts: 3,
        ..SimplexConfig::default()
    };
    let r = nelder_mead(sse, &[l0, (0.25 * span).ln()], &cfg)?;
    if !r.converged {
        return Err(Error::NotConverged {
            best: vec![r.x_best[0], r.x_best[1].exp()],
            value: r.f_best,
            evaluations: r.n_evals,
        });
    }
    Ok(ErfFit {
        l_bar: r.x_best[0],
        delta: r.x_best[1].exp(),
        residual: r.f_best,
    })
}

/// `l̄ + Δ·erf⁻¹(1 − 2p*)`: the `l` at which the fitted profile equals `p*`.
pub fn l_star(fit: &ErfFit, p_star: f64) -> Result<f64> {
    if !(p_star > 0.0 && p_star < 1.0) {
        return Err(Error::invalid(format!("p_star = {p_star} must lie in (0, 1)")));
    }
    Ok(fit.l_bar + fit.delta * erf_inv(1.0 - 2.0 * p_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    /// `y ≈ a / x^b`, so the log-log slope is `−b`.
    pub b: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn slope(&self) -> f64 {
        -self.b
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a / x.powf(self.b)
    }
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::invalid("power-law fit needs at least 2 points"));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::invalid(format!("power-law fit point ({x}, {y}) is not positive")));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("power-law fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerLawFit {
        a: intercept.exp(),
        b: -slope,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    /// Sample standard deviation, `n − 1` denominator.
    pub sigma: f64,
    /// `m3 / m2^{3/2}` with central moments over `n`.
    pub skewness: f64,
}

pub fn gaussian_summary(values: &[f64]) -> Result<GaussianFit> {
    if values.len() < 3 {
        return Err(Error::invalid("Gaussian summary needs at least 3 values"));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mu).powi(3)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::invalid("Gaussian summary of a sample with zero variance"));
    }
    Ok(GaussianFit {
        mu,
        sigma: (m2 * n / (n - 1.0)).sqrt(),
        skewness: m3 / m2.powf(1.5),
    })
}
