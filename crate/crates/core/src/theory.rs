//! Closed-form average errors and bounds, evaluated from the dimensions and,
//! where no closed form exists, from externally supplied Monte Carlo moments.

use serde::{Deserialize, Serialize};

use crate::ensembles::{mp_mu, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{permutation_operator, ComplexMatrix};

/// Largest side accepted for dense second-moment operators.
pub const MAX_SECOND_MOMENT_SIDE: usize = 4096;

fn dims_f(spec: &EnsembleSpec) -> (f64, f64, f64) {
    (spec.d_i as f64, spec.d_o as f64, spec.d_e as f64)
}

/// A closed-form value with the formula that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    pub formula_id: String,
    pub spec: EnsembleSpec,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub moments: Vec<f64>,
}

impl ClosedForm {
    pub fn new(formula_id: &str, spec: &EnsembleSpec, value: f64) -> Self {
        Self {
            value,
            formula_id: formula_id.to_string(),
            spec: *spec,
            moments: Vec::new(),
        }
    }

    pub fn with_moments(mut self, moments: Vec<f64>) -> Self {
        self.moments = moments;
        self
    }

    /// Finite and inside `[0, 2 d_I²]`.
    pub fn is_admissible(&self) -> bool {
        let d = self.spec.d_i as f64;
        self.value.is_finite() && self.value >= -1e-12 && self.value <= 2.0 * d * d + 1e-12
    }
}

/// `E_C[tr C²] = (d_I d_O (d_E² − 1) + d_I² d_E (d_O² − 1)) / (d_O² d_E² − 1)`.
pub fn avg_purity(spec: &EnsembleSpec) -> f64 {
    let (di, d_o, de) = dims_f(spec);
    (di * d_o * (de * de - 1.0) + di * di * de * (d_o * d_o - 1.0)) / (d_o * d_o * de * de - 1.0)
}

/// Map-to-depolarizing error `d_I² − d_I/(d_O d_E)`.
pub fn eps_dep(spec: &EnsembleSpec) -> f64 {
    let (di, d_o, de) = dims_f(spec);
    di * di - di / (d_o * de)
}

/// Environment-averaged error of appending `1/d_E`: `d_I² − E[tr C²]/d_E`.
pub fn eps_avg_ue(spec: &EnsembleSpec) -> f64 {
    let (di, _, de) = dims_f(spec);
    di * di - avg_purity(spec) / de
}

/// Best pure-output error `2 d_I² − (2/d_O) E[(tr √C)²]`.
pub fn eps_pure(spec: &EnsembleSpec, moment_tr_sqrt_sq: f64) -> f64 {
    let (di, d_o, _) = dims_f(spec);
    2.0 * di * di - 2.0 / d_o * moment_tr_sqrt_sq
}

/// Best append-state error `d_I² − Σ_i w_i² / E[tr C²]` for ordered
/// eigenvalue second moments `w_i = E[(c_i↓)²]`.
pub fn eps_app(spec: &EnsembleSpec, weights: &[f64]) -> f64 {
    let (di, _, _) = dims_f(spec);
    let s: f64 = weights.iter().map(|w| w * w).sum();
    di * di - s / avg_purity(spec)
}

/// `(d_I² − E[tr C²], d_I² − E[tr C²]/d_E)`.
pub fn eps_app_bounds(spec: &EnsembleSpec) -> (f64, f64) {
    let (di, _, de) = dims_f(spec);
    let p = avg_purity(spec);
    (di * di - p, di * di - p / de)
}

/// Error of appending the best pure environment state:
/// `d_I² + E[tr C²] − 2 E[c_max²]`.
pub fn eps_app_pure_ancilla(spec: &EnsembleSpec, moment_cmax_sq: f64) -> f64 {
    let (di, _, _) = dims_f(spec);
    di * di + avg_purity(spec) - 2.0 * moment_cmax_sq
}

/// Estimation-strategy guarantee
/// `2 d_I² (min{1, κ (d_I d_O min{d_E, d_I d_O} + ln(1/δ)) / k} + δ)`.
pub fn eps_tomo_bound(spec: &EnsembleSpec, k: f64, delta: f64, kappa: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(kappa > 0.0) || !(k > 0.0) {
        return Err(Error::Domain(format!("kappa and k must be positive, got {kappa}, {k}")));
    }
    let (di, _, _) = dims_f(spec);
    let r = spec.generic_rank() as f64;
    let t = kappa * (spec.system_dim() as f64 * r + (1.0 / delta).ln()) / k;
    Ok(2.0 * di * di * (t.min(1.0) + delta))
}

/// `E(d_I, d_O)`, the average purity at `d_E = d_I d_O`.
pub fn purity_at_full_rank(d_i: usize, d_o: usize) -> f64 {
    let (di, d_o) = (d_i as f64, d_o as f64);
    (di * d_o * (di * di * d_o * d_o - 1.0) + di.powi(3) * d_o * (d_o * d_o - 1.0)) / (d_o.powi(4) * di * di - 1.0)
}

/// One cell of the regime table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeCell {
    Value { value: f64 },
    Interval { lower: f64, upper: f64 },
    RequiresMonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub strategy: String,
    pub isometric: RegimeCell,
    pub full_rank: RegimeCell,
    pub unbounded: RegimeCell,
}

/// Errors of each strategy at `d_E = 1`, `d_E = d_I d_O` and `d_E → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTable {
    #[serde(rename = "d_I")]
    pub d_i: usize,
    #[serde(rename = "d_O")]
    pub d_o: usize,
    pub full_rank_purity: f64,
    pub rows: Vec<RegimeRow>,
}

pub fn table2_regime_values(d_i: usize, d_o: usize) -> RegimeTable {
    let (di, dof) = (d_i as f64, d_o as f64);
    let e = purity_at_full_rank(d_i, d_o);
    let v = |value: f64| RegimeCell::Value { value };
    let rows = vec![
        RegimeRow {
            strategy: "pure".into(),
            isometric: v(2.0 * (di * di - di / dof)),
            full_rank: RegimeCell::RequiresMonteCarlo,
            unbounded: v(0.0),
        },
        RegimeRow {
            strategy: "append".into(),
            isometric: v(0.0),
            full_rank: RegimeCell::Interval {
                lower: di * di - e,
                upper: di * di - e / (di * dof),
            },
            unbounded: v(di * di - 1.0 / (dof * dof)),
        },
        RegimeRow {
            strategy: "dep".into(),
            isometric: v(di * di - di / dof),
            full_rank: v(di * di - 1.0 / (dof * dof)),
            unbounded: v(di * di),
        },
        RegimeRow {
            strategy: "avg-ue".into(),
            isometric: v(0.0),
            full_rank: v(di * di - e / (di * dof)),
            unbounded: v(di * di),
        },
    ];
    RegimeTable {
        d_i,
        d_o,
        full_rank_purity: e,
        rows,
    }
}

/// `E[(tr √C)²] / (d_I² d_O μ(c)²)` with `c = d_I d_O / d_E ≤ 1`; tends to
/// one in the proportional-growth limit.
pub fn sqrt_moment_mp_ratio(spec: &EnsembleSpec, moment_tr_sqrt_sq: f64) -> Result<f64> {
    let c = spec.system_dim() as f64 / spec.d_e as f64;
    let mu = mp_mu(c)?;
    let (di, d_o, _) = dims_f(spec);
    Ok(moment_tr_sqrt_sq / (di * di * d_o * mu * mu))
}

/// Exact `E_V[|V><V| ⊗ |V><V|]` on `(I O E) ⊗ (I' O' E')`:
///
/// `(1 + F) / (D² − 1) − (F_{II'} + F_{OE,O'E'}) / (D (D² − 1))`, `D = d_O d_E`,
///
/// where `F` swaps the two copies and the partial flips swap one group only.
pub fn second_moment_closed_form(spec: &EnsembleSpec) -> Result<ComplexMatrix> {
    let side = spec.total_dim().pow(2);
    if side > MAX_SECOND_MOMENT_SIDE {
        return Err(Error::TooLarge(format!(
            "second-moment operator of side {side} exceeds {MAX_SECOND_MOMENT_SIDE}"
        )));
    }
    let dims = [spec.d_i, spec.d_o, spec.d_e, spec.d_i, spec.d_o, spec.d_e];
    let f_all = permutation_operator(&dims, &[3, 4, 5, 0, 1, 2])?;
    let f_in = permutation_operator(&dims, &[3, 1, 2, 0, 4, 5])?;
    let f_out = permutation_operator(&dims, &[0, 4, 5, 3, 1, 2])?;
    let d = (spec.d_o * spec.d_e) as f64;
    let a = 1.0 / (d * d - 1.0);
    let b = 1.0 / (d * (d * d - 1.0));
    let id = ComplexMatrix::identity(side);
    let sym = (&id + &f_all).scale(a);
    let partial = (&f_in + &f_out).scale(b);
    Ok(&sym - &partial)
}
