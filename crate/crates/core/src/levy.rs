//! Concentration-of-measure bounds for `I_d` over uniformly random states,
//! and a sampler that checks them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::SettingTables;
use crate::error::{Error, Result};
use crate::measurements::optimal_settings;
use crate::numerics::uniform_sphere_state;
use crate::rng::stream;
use crate::scalar::Real;
use crate::states::PureState;

fn check_args(d: usize, epsilon: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension d = {d} must be at least 2")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be positive")));
    }
    Ok(())
}

/// `2·exp(−d²ε² / (192(6+d)π³))`.
pub fn bound_main(d: usize, epsilon: f64) -> Result<f64> {
    check_args(d, epsilon)?;
    let d = d as f64;
    Ok(2.0 * (-(d * d * epsilon * epsilon) / (192.0 * (6.0 + d) * PI.powi(3))).exp())
}

/// `8√2·(1 + s/3)^{1/2}`, `s = ⌊d/2⌋`.
pub fn lipschitz_bound(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension d = {d} must be at least 2")));
    }
    let s = (d / 2) as f64;
    Ok(8.0 * 2f64.sqrt() * (1.0 + s / 3.0).sqrt())
}

/// `exp(−3d²ε² / (128(6+d)))`, the bound around a zero median.
pub fn bound_median(d: usize, epsilon: f64) -> Result<f64> {
    check_args(d, epsilon)?;
    let d = d as f64;
    Ok((-3.0 * d * d * epsilon * epsilon / (128.0 * (6.0 + d))).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub epsilon: f64,
    pub bound_main: f64,
    pub bound_median: f64,
    /// Fraction of samples with `|I_d| ≥ ε`.
    pub empirical_fraction: f64,
    pub n_samples: usize,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// Fraction of samples with `I_d` above its classical bound.
    pub violation_fraction: f64,
}

impl ConcentrationReport {
    pub fn fraction_std_error(&self) -> f64 {
        let p = self.empirical_fraction;
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }

    pub fn mean_std_error(&self) -> f64 {
        self.std_dev / (self.n_samples as f64).sqrt()
    }

    /// Large-sample standard error of the median of a near-normal sample.
    pub fn median_std_error(&self) -> f64 {
        1.2533 * self.mean_std_error()
    }
}

/// `I_d` with the optimal settings of `n` uniformly random pure states.
pub fn sample_uniform_id<T: Real>(d: usize, n: usize, seed: u64) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let settings = optimal_settings::<T>(d)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let state = PureState::new(d, uniform_sphere_state(d * d, &mut rng)?.into_vec())?;
            Ok(SettingTables::new(&state, &settings)?.value_id())
        })
        .collect()
}

pub fn empirical_concentration<T: Real>(d: usize, epsilon: f64, n: usize, seed: u64) -> Result<ConcentrationReport> {
    let bm = bound_main(d, epsilon)?;
    let bmed = bound_median(d, epsilon)?;
    let values: Vec<f64> = sample_uniform_id::<T>(d, n, seed)?.into_iter().map(Real::as_f64).collect();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(ConcentrationReport {
        d,
        epsilon,
        bound_main: bm,
        bound_median: bmed,
        empirical_fraction: values.iter().filter(|v| v.abs() >= epsilon).count() as f64 / nf,
        n_samples: n,
        mean,
        median,
        std_dev: var.sqrt(),
        violation_fraction: values.iter().filter(|&&v| v > 2.0).count() as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        // independent numpy evaluations of the closed forms
        assert!((bound_main(3, 2.0).unwrap() - 1.9986566374231602).abs() < 1e-12);
        assert!((bound_median(10, 0.5).unwrap() - 0.9640413474459166).abs() < 1e-12);
        assert!((lipschitz_bound(2).unwrap() - 13.063945294843617).abs() < 1e-12);
        assert_eq!(lipschitz_bound(3).unwrap(), lipschitz_bound(2).unwrap());
    }

    #[test]
    fn invalid_arguments() {
        assert!(bound_main(1, 0.5).is_err());
        assert!(bound_main(3, 0.0).is_err());
        assert!(bound_median(3, -1.0).is_err());
        assert!(bound_median(3, f64::NAN).is_err());
        assert!(lipschitz_bound(1).is_err());
        assert!(empirical_concentration::<f64>(3, 0.5, 0, 1).is_err());
    }

    #[test]
    fn small_sample_report() {
        let r = empirical_concentration::<f64>(3, 0.5, 2_000, 1).unwrap();
        assert!((0.0..=1.0).contains(&r.empirical_fraction));
        assert!(r.empirical_fraction <= r.bound_main + 3.0 * r.fraction_std_error());
        assert!(r.mean.abs() < 3.0 * r.mean_std_error(), "{r:?}");
        assert!(r.bound_main > 0.0 && r.bound_median > 0.0);
        let again = empirical_concentration::<f64>(3, 0.5, 2_000, 1).unwrap();
        assert_eq!(r, again);
    }

    proptest! {
        #[test]
        fn bounds_in_range_and_monotone(d in 2usize..200, e in 0.01f64..10.0) {
            let m = bound_main(d, e).unwrap();
            let med = bound_median(d, e).unwrap();
            prop_assert!(m > 0.0 && m <= 2.0);
            prop_assert!(med > 0.0 && med <= 1.0);
            prop_assert!(bound_main(d + 1, e).unwrap() <= m);
            prop_assert!(bound_median(d + 1, e).unwrap() <= med);
            prop_assert!(bound_main(d, e * 1.1).unwrap() <= m);
            prop_assert!(bound_median(d, e * 1.1).unwrap() <= med);
            prop_assert!(lipschitz_bound(d + 1).unwrap() >= lipschitz_bound(d).unwrap());
        }
    }
}
