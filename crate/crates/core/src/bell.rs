//! The two Bell expressions for a pair of `d`-level systems.
//!
//! `I` sums four correlated probabilities and is bounded by 3 for local
//! hidden variable models. `I_d` is the CGLMP-type expression with `⌊d/2⌋`
//! weighted groups, bounded by 2. A correlated probability `P(A_i = B_j + k)`
//! is read as `P(A_i − B_j ≡ k mod d)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{correlated_probability, outcome_table, MeasurementSettings, OutcomeTable};
use crate::numerics::{tensor_product, ComplexMatrix};
use crate::scalar::Real;
use crate::states::PureState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    I,
    Id,
}

impl BellKind {
    pub const ALL: [BellKind; 2] = [BellKind::I, BellKind::Id];

    /// Largest value reachable by local hidden variable models.
    pub fn classical_bound<T: Real>(self) -> T {
        classical_bound(self)
    }

    /// Values every quantum state and setting respects.
    pub fn range<T: Real>(self) -> (T, T) {
        match self {
            BellKind::I => (T::zero(), T::lit(4.0)),
            BellKind::Id => (T::lit(-4.0), T::lit(4.0)),
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::I => "I",
            BellKind::Id => "Id",
        })
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(BellKind::I),
            "Id" | "I_d" | "id" => Ok(BellKind::Id),
            other => Err(Error::invalid(format!("unknown Bell expression '{other}' (expected I or Id)"))),
        }
    }
}

/// 3 for `I`, 2 for `I_d`.
pub fn classical_bound<T: Real>(kind: BellKind) -> T {
    match kind {
        BellKind::I => T::lit(3.0),
        BellKind::Id => T::lit(2.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellResult<T> {
    pub kind: BellKind,
    pub local_dim: usize,
    pub value: T,
}

impl<T: Real> BellResult<T> {
    pub fn violates(&self) -> bool {
        self.value > classical_bound(self.kind)
    }
}

/// The four outcome tables `(A_i, B_j)` of one state and setting.
#[derive(Debug, Clone)]
pub struct SettingTables<T> {
    tables: [[OutcomeTable<T>; 2]; 2],
}

impl<T: Real> SettingTables<T> {
    pub fn new(state: &PureState<T>, settings: &MeasurementSettings<T>) -> Result<Self> {
        let t = |i, j| outcome_table(state, settings.alice(i), settings.bob(j));
        Ok(Self {
            tables: [[t(1, 1)?, t(1, 2)?], [t(2, 1)?, t(2, 2)?]],
        })
    }

    pub fn local_dim(&self) -> usize {
        self.tables[0][0].local_dim()
    }

    /// `P(A_i − B_j ≡ shift mod d)` for `i, j ∈ {1, 2}`.
    pub fn prob(&self, i: usize, j: usize, shift: i64) -> T {
        correlated_probability(&self.tables[i - 1][j - 1], shift)
    }

    /// `P(A1 = B1) + P(B1 = A2 + 1) + P(A2 = B2) + P(B2 = A1)`.
    pub fn value_i(&self) -> T {
        self.prob(1, 1, 0) + self.prob(2, 1, -1) + self.prob(2, 2, 0) + self.prob(1, 2, 0)
    }

    pub fn value_id(&self) -> T {
        let d = self.local_dim() as i64;
        let mut total = T::zero();
        for k in 0..d / 2 {
            let c = id_weight::<T>(d as usize, k as usize);
            let plus = self.prob(1, 1, k) + self.prob(2, 1, -k - 1) + self.prob(2, 2, k) + self.prob(1, 2, -k);
            let minus =
                self.prob(1, 1, -k - 1) + self.prob(2, 1, k) + self.prob(2, 2, -k - 1) + self.prob(1, 2, k + 1);
            total += c * (plus - minus);
        }
        total
    }

    pub fn value(&self, kind: BellKind) -> T {
        match kind {
            BellKind::I => self.value_i(),
            BellKind::Id => self.value_id(),
        }
    }
}

/// Group weight `c(k) = 1 − 2k/(d − 1)`.
pub fn id_weight<T: Real>(d: usize, k: usize) -> T {
    T::one() - T::lit(2.0 * k as f64) / T::lit(d as f64 - 1.0)
}

pub fn evaluate_i<T: Real>(state: &PureState<T>, settings: &MeasurementSettings<T>) -> Result<BellResult<T>> {
    evaluate(BellKind::I, state, settings)
}

pub fn evaluate_id<T: Real>(state: &PureState<T>, settings: &MeasurementSettings<T>) -> Result<BellResult<T>> {
    evaluate(BellKind::Id, state, settings)
}

pub fn evaluate<T: Real>(
    kind: BellKind,
    state: &PureState<T>,
    settings: &MeasurementSettings<T>,
) -> Result<BellResult<T>> {
    let tables = SettingTables::new(state, settings)?;
    Ok(BellResult {
        kind,
        local_dim: state.local_dim(),
        value: tables.value(kind),
    })
}

/// Difference `A_i − B_j` selected by the projector `P^{(i,j)}_k`.
pub fn projector_shift(i: usize, j: usize, k: i64) -> i64 {
    match (i, j) {
        (1, 1) | (2, 2) => k,
        (1, 2) => -k,
        (2, 1) => -k - 1,
        _ => panic!("observable indices must be 1 or 2, got ({i}, {j})"),
    }
}

/// Dense projector onto the span of `|a^i_{ℓ+n}⟩⊗|b^j_ℓ⟩`, `ℓ = 0..d−1`,
/// i.e. the subspace where `A_i − B_j ≡ n`.
pub fn shift_projector<T: Real>(settings: &MeasurementSettings<T>, i: usize, j: usize, n: i64) -> ComplexMatrix<T> {
    let d = settings.local_dim();
    let col = |v: Vec<Complex<T>>| ComplexMatrix::from_row_major(d, 1, v).expect("basis vectors are finite");
    let mut p = ComplexMatrix::zeros(d * d, d * d);
    for l in 0..d {
        let k = (l as i64 + n).rem_euclid(d as i64) as usize;
        let v = tensor_product(&col(settings.alice(i).vector(k)), &col(settings.bob(j).vector(l)));
        p = p.add(&v.matmul(&v.adjoint()));
    }
    p
}

/// `‖P^{(i,j)}_k ψ‖²` with the shift of [`projector_shift`].
pub fn projector_weight<T: Real>(state: &PureState<T>, settings: &MeasurementSettings<T>, i: usize, j: usize, k: i64) -> Result<T> {
    if settings.local_dim() != state.local_dim() {
        return Err(Error::invalid("settings and state have different local dimensions"));
    }
    let p = shift_projector(settings, i, j, projector_shift(i, j, k));
    Ok(p.mul_vec(state.amplitudes()).iter().map(|z| z.norm_sqr()).sum())
}

/// `I_d = R_d − S_d` assembled from explicit projectors on the joint space.
pub fn evaluate_id_projector<T: Real>(
    state: &PureState<T>,
    settings: &MeasurementSettings<T>,
) -> Result<BellResult<T>> {
    let d = state.local_dim();
    if settings.local_dim() != d {
        return Err(Error::invalid("settings and state have different local dimensions"));
    }
    let mut r = T::zero();
    let mut s = T::zero();
    for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for k in 0..(d / 2) as i64 {
            let c = id_weight::<T>(d, k as usize);
            r += c * projector_weight(state, settings, i, j, k)?;
            s += c * projector_weight(state, settings, i, j, -k - 1)?;
        }
    }
    Ok(BellResult {
        kind: BellKind::Id,
        local_dim: d,
        value: r - s,
    })
}
