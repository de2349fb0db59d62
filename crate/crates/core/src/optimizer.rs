//! Nelder–Mead simplex search and the exponential-map parameterization of
//! measurement settings.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{BellKind, SettingTables};
use crate::error::{Error, Result};
use crate::measurements::{MeasurementBasis, MeasurementSettings};
use crate::numerics::{expm_i_hermitian, HermitianMatrix};
use crate::perturbations::random_hermitian;
use crate::rng::stream;
use crate::scalar::Real;
use crate::states::PureState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_evals: usize,
    /// Stop once `f_worst − f_best < spread_tol`.
    pub spread_tol: f64,
    /// Also stop once every vertex lies within `x_tol` (max-norm) of the
    /// best one; 0 disables the test.
    pub x_tol: f64,
    /// Offset of the initial vertices from `x0` along each axis.
    pub initial_step: f64,
    /// Fresh simplices built around the best vertex after convergence, while
    /// the evaluation budget lasts.
    pub inner_restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_evals: 100_000,
            spread_tol: 1e-8,
            x_tol: 0.0,
            initial_step: 0.5,
            inner_restarts: 0,
        }
    }
}

impl SimplexConfig {
    /// Dimension-dependent coefficients of Gao and Han, which hold up better
    /// than the fixed ones once `n` reaches the tens.
    pub fn adaptive(n: usize) -> Self {
        let n = n.max(2) as f64;
        Self {
            expansion: 1.0 + 2.0 / n,
            contraction: 0.75 - 0.5 / n,
            shrink: 1.0 - 1.0 / n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_evals > 0
            && self.spread_tol >= 0.0
            && self.x_tol >= 0.0
            && self.initial_step != 0.0
            && self.initial_step.is_finite();
        if !ok {
            return Err(Error::invalid(format!("invalid simplex configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub n_evals: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { point: x.to_vec() });
        }
        Ok(v)
    }
}

/// Minimizes `f` from `x0`.
///
/// Stops when the spread of function values over the simplex drops below
/// `spread_tol` (converged) or the budget is spent (not converged). Either
/// way the best vertex is returned.
pub fn nelder_mead<F>(f: F, x0: &[f64], cfg: &SimplexConfig) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("nelder_mead needs at least one variable"));
    }
    let mut obj = Counted { f, evals: 0 };
    let mut start = x0.to_vec();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut converged = false;
    for _ in 0..=cfg.inner_restarts {
        let (x, fx, conv) = simplex_pass(&mut obj, &start, cfg)?;
        let improved = best.as_ref().map_or(true, |(_, fb)| fx < *fb);
        if improved {
            best = Some((x.clone(), fx));
        }
        converged = conv;
        if !conv || !improved {
            break;
        }
        start = x;
    }
    let (x_best, f_best) = best.expect("at least one pass");
    Ok(SimplexResult {
        x_best,
        f_best,
        n_evals: obj.evals,
        converged,
    })
}

fn simplex_pass<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x0: &[f64],
    cfg: &SimplexConfig,
) -> Result<(Vec<f64>, f64, bool)> {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += cfg.initial_step;
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        vals.push(obj.eval(p)?);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let affine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(&a, &b)| a + t * (b - a)).collect() };

    loop {
        // stable sort keeps the older vertex first on ties
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (ib, iw, isw) = (order[0], order[n], order[n - 1]);
        let collapsed = cfg.x_tol > 0.0
            && order[1..].iter().all(|&k| pts[k].iter().zip(&pts[ib]).all(|(a, b)| (a - b).abs() <= cfg.x_tol));
        if vals[iw] - vals[ib] < cfg.spread_tol || collapsed {
            return Ok((pts[ib].clone(), vals[ib], true));
        }
        if obj.evals >= cfg.max_evals {
            return Ok((pts[ib].clone(), vals[ib], false));
        }

        let mut c = vec![0.0; n];
        for &k in &order[..n] {
            for (ci, &pi) in c.iter_mut().zip(&pts[k]) {
                *ci += pi;
            }
        }
        c.iter_mut().for_each(|ci| *ci /= n as f64);

        let xr = affine(&c, &pts[iw], -cfg.reflection);
        let fr = obj.eval(&xr)?;
        if fr < vals[ib] {
            let xe = affine(&c, &xr, cfg.expansion);
            let fe = obj.eval(&xe)?;
            if fe < fr {
                pts[iw] = xe;
                vals[iw] = fe;
            } else {
                pts[iw] = xr;
                vals[iw] = fr;
            }
            continue;
        }
        if fr < vals[isw] {
            pts[iw] = xr;
            vals[iw] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[iw] {
            let xc = affine(&c, &xr, cfg.contraction);
            let fc = obj.eval(&xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = affine(&c, &pts[iw], cfg.contraction);
            let fc = obj.eval(&xc)?;
            let ok = fc < vals[iw];
            (xc, fc, ok)
        };
        if accept {
            pts[iw] = xc;
            vals[iw] = fc;
            continue;
        }
        let xb = pts[ib].clone();
        for &k in &order[1..] {
            pts[k] = affine(&xb, &pts[k], cfg.shrink);
            vals[k] = obj.eval(&pts[k])?;
        }
    }
}

/// Four Hermitian generators; basis `k` is the column set of `exp(iG_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableParams<T> {
    local_dim: usize,
    generators: [HermitianMatrix<T>; 4],
}

impl<T: Real> ObservableParams<T> {
    /// Order: A1, A2, B1, B2.
    pub fn new(generators: [HermitianMatrix<T>; 4]) -> Result<Self> {
        let d = generators[0].dim();
        if d == 0 || generators.iter().any(|g| g.dim() != d) {
            return Err(Error::invalid("generators must share a positive dimension"));
        }
        Ok(Self { local_dim: d, generators })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            local_dim: d,
            generators: std::array::from_fn(|_| HermitianMatrix::zeros(d)),
        }
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn generators(&self) -> &[HermitianMatrix<T>; 4] {
        &self.generators
    }

    /// Number of real parameters, `4d²`.
    pub fn n_params(d: usize) -> usize {
        4 * d * d
    }

    /// Per generator: the diagonal, then `(re, im)` of each upper entry in
    /// row-major order.
    pub fn to_vec(&self) -> Vec<f64> {
        let d = self.local_dim;
        let mut out = Vec::with_capacity(Self::n_params(d));
        for g in &self.generators {
            out.extend((0..d).map(|i| g[(i, i)].re.as_f64()));
            for i in 0..d {
                for j in i + 1..d {
                    out.push(g[(i, j)].re.as_f64());
                    out.push(g[(i, j)].im.as_f64());
                }
            }
        }
        out
    }

    pub fn from_slice(d: usize, x: &[f64]) -> Result<Self> {
        if d == 0 || x.len() != Self::n_params(d) {
            return Err(Error::invalid(format!(
                "expected {} parameters for d = {d}, got {}",
                Self::n_params(d),
                x.len()
            )));
        }
        let generators = std::array::from_fn(|k| {
            let block = &x[k * d * d..(k + 1) * d * d];
            let (diag, off) = block.split_at(d);
            let mut it = off.chunks_exact(2);
            // from_upper visits (i, j) with i ≤ j in row-major order
            HermitianMatrix::from_upper(d, |i, j| {
                if i == j {
                    Complex::new(T::lit(diag[i]), T::zero())
                } else {
                    let c = it.next().expect("parameter count checked above");
                    Complex::new(T::lit(c[0]), T::lit(c[1]))
                }
            })
        });
        Ok(Self { local_dim: d, generators })
    }

    pub fn random<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            local_dim: d,
            generators: std::array::from_fn(|_| random_hermitian(d, rng)),
        }
    }
}

pub fn params_to_settings<T: Real>(params: &ObservableParams<T>) -> Result<MeasurementSettings<T>> {
    let b = |k: usize| -> Result<MeasurementBasis<T>> {
        Ok(MeasurementBasis::from_unitary(&expm_i_hermitian(&params.generators[k], T::one())?))
    };
    MeasurementSettings::new(b(0)?, b(1)?, b(2)?, b(3)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<T> {
    pub best_value: T,
    pub best_params: ObservableParams<T>,
    pub n_evals: usize,
    pub converged: bool,
    /// Restarts that ended in an error.
    pub failed_restarts: usize,
}

fn settings_value<T: Real>(state: &PureState<T>, kind: BellKind, x: &[f64]) -> Result<T> {
    let params = ObservableParams::<T>::from_slice(state.local_dim(), x)?;
    Ok(SettingTables::new(state, &params_to_settings(&params)?)?.value(kind))
}

/// Maximizes the Bell expression over measurement settings from `restarts`
/// random starting generators. Restart `r` uses `rng::stream(seed, r)`.
pub fn optimize_settings<T: Real>(
    state: &PureState<T>,
    kind: BellKind,
    restarts: usize,
    seed: u64,
    cfg: &SimplexConfig,
) -> Result<OptimizationResult<T>> {
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    cfg.validate()?;
    let d = state.local_dim();
    let runs: Vec<Result<SimplexResult>> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r);
            let x0 = ObservableParams::<T>::random(d, &mut rng).to_vec();
            let objective = |x: &[f64]| settings_value(state, kind, x).map_or(f64::NAN, |v| -v.as_f64());
            nelder_mead(objective, &x0, cfg)
        })
        .collect();

    let failed_restarts = runs.iter().filter(|r| r.is_err()).count();
    let total_evals = runs.iter().flatten().map(|r| r.n_evals).sum();
    let mut best: Option<&SimplexResult> = None;
    let mut first_err = None;
    for run in &runs {
        match run {
            Ok(r) => {
                if best.map_or(true, |b| r.f_best < b.f_best) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.cloned().expect("every restart failed"));
    };
    let best_params = ObservableParams::from_slice(d, &best.x_best)?;
    let best_value = SettingTables::new(state, &params_to_settings(&best_params)?)?.value(kind);
    Ok(OptimizationResult {
        best_value,
        best_params,
        n_evals: total_evals,
        converged: best.converged,
        failed_restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::evaluate;
    use crate::numerics::{eigh, HermitianEigen};
    use crate::measurements::optimal_settings;
    use crate::states::{bell_state, random_product_state};

    #[test]
    fn quadratic() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &SimplexConfig { spread_tol: 1e-14, ..Default::default() }).unwrap();
        assert!((r.x_best[0] - 3.0).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let cfg = SimplexConfig { spread_tol: 1e-14, ..Default::default() };
        let r = nelder_mead(f, &[-1.2, 1.0], &cfg).unwrap();
        assert!((r.x_best[0] - 1.0).abs() < 1e-3 && (r.x_best[1] - 1.0).abs() < 1e-3, "{:?}", r.x_best);
    }

    #[test]
    fn constant_objective_stops_after_init() {
        let dim = 5;
        let r = nelder_mead(|_| 1.0, &vec![0.0; dim], &SimplexConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.n_evals <= (dim + 1) + dim + 2);
    }

    #[test]
    fn non_finite_objective_reports_point() {
        let err = nelder_mead(|x| if x[0] > 0.2 { f64::NAN } else { x[0] }, &[0.0], &SimplexConfig::default()).unwrap_err();
        match err {
            Error::NonFiniteObjective { point } => assert!(point[0] > 0.2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_not_convergence() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &SimplexConfig { max_evals: 20, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert!(r.n_evals <= 20 + 3);
    }

    #[test]
    fn config_validation() {
        assert!(SimplexConfig { expansion: 1.0, ..Default::default() }.validate().is_err());
        assert!(SimplexConfig { contraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(SimplexConfig { shrink: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimplexConfig::adaptive(144).validate().is_ok());
    }

    #[test]
    fn param_round_trip() {
        let mut rng = stream(5, 0);
        let p = ObservableParams::<f64>::random(4, &mut rng);
        let back = ObservableParams::<f64>::from_slice(4, &p.to_vec()).unwrap();
        assert_eq!(p, back);
        assert!(ObservableParams::<f64>::from_slice(4, &[0.0; 3]).is_err());
    }

    #[test]
    fn zero_generators_give_computational_bases() {
        let s = params_to_settings(&ObservableParams::<f64>::zeros(3)).unwrap();
        for i in 1..=2 {
            for b in [s.alice(i), s.bob(i)] {
                assert!(b.as_matrix().sub(&crate::numerics::ComplexMatrix::identity(3)).frobenius_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn settings_are_orthonormal() {
        let mut rng = stream(8, 1);
        let s = params_to_settings(&ObservableParams::<f64>::random(5, &mut rng)).unwrap();
        for i in 1..=2 {
            assert!(s.alice(i).as_matrix().unitarity_defect() < 1e-10);
            assert!(s.bob(i).as_matrix().unitarity_defect() < 1e-10);
        }
    }

    /// Hermitian `G` with `exp(iG) = U`, via the eigenbasis of a generic
    /// Hermitian combination of `U` and `U†` (they commute with `U`).
    fn unitary_log(u: &crate::numerics::ComplexMatrix<f64>) -> HermitianMatrix<f64> {
        let d = u.rows();
        let ud = u.adjoint();
        let herm = u.add(&ud).scale(Complex::new(0.5, 0.0)).add(&u.sub(&ud).scale(Complex::new(0.0, -0.5 * 0.7310)));
        let HermitianEigen { vectors: v, .. } = eigh(&HermitianMatrix::from_matrix_upper(&herm).unwrap()).unwrap();
        let diag = v.adjoint().matmul(u).matmul(&v);
        let mut g = crate::numerics::ComplexMatrix::zeros(d, d);
        for k in 0..d {
            g[(k, k)] = Complex::new(diag[(k, k)].arg(), 0.0);
        }
        HermitianMatrix::from_matrix_upper(&v.matmul(&g).matmul(&v.adjoint())).unwrap()
    }

    #[test]
    fn log_exp_round_trip_matches_optimal_value() {
        for d in [2usize, 3, 4] {
            let opt = optimal_settings::<f64>(d).unwrap();
            let gens = [1, 2].map(|i| unitary_log(opt.alice(i).as_matrix()));
            let gens_b = [1, 2].map(|j| unitary_log(opt.bob(j).as_matrix()));
            let params = ObservableParams::new([gens[0].clone(), gens[1].clone(), gens_b[0].clone(), gens_b[1].clone()]).unwrap();
            let s = params_to_settings(&params).unwrap();
            let state = bell_state::<f64>(d).unwrap();
            for kind in BellKind::ALL {
                let a = evaluate(kind, &state, &opt).unwrap().value;
                let b = evaluate(kind, &state, &s).unwrap().value;
                assert!((a - b).abs() < 1e-9, "d={d} {kind}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn qubit_optimum_recovered() {
        let cfg = SimplexConfig::default();
        let r = optimize_settings(&bell_state::<f64>(2).unwrap(), BellKind::I, 8, 1, &cfg).unwrap();
        assert!(r.best_value >= 3.414 - 1e-3, "{}", r.best_value);
        let again = SettingTables::new(&bell_state(2).unwrap(), &params_to_settings(&r.best_params).unwrap()).unwrap().value_i();
        assert!((r.best_value - again).abs() <= 1e-12);
    }

    #[test]
    fn product_state_stays_classical() {
        let mut rng = stream(2, 0);
        let s = random_product_state::<f64, _>(3, &mut rng).unwrap();
        let r = optimize_settings(&s, BellKind::I, 3, 4, &SimplexConfig { max_evals: 5_000, ..Default::default() }).unwrap();
        assert!(r.best_value <= 3.0 + 1e-9);
    }

    #[test]
    fn more_restarts_never_worse() {
        let s = bell_state::<f64>(3).unwrap();
        let cfg = SimplexConfig { max_evals: 2_000, ..Default::default() };
        let a = optimize_settings(&s, BellKind::Id, 2, 6, &cfg).unwrap().best_value;
        let b = optimize_settings(&s, BellKind::Id, 4, 6, &cfg).unwrap().best_value;
        assert!(b >= a);
    }
}
