//! Purification errors: per-sample closed forms, a numerical optimizer over
//! environment unitaries with a grid oracle, and Monte Carlo estimators.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    isometric_embedding_purification, max_entangled_purification, separable_purification, ChoiOperator,
    PurificationVector,
};
use crate::ensembles::{domain, mp_cdf, sample_choi, sample_haar_unitary, EnsembleSpec, RandomStream};
use crate::error::{Error, Result};
use crate::linalg::{fidelity_unnormalized, polar_factor, psd_eigenvalues, ComplexMatrix, ONE, ZERO};
use crate::strategies::{pure_env_state, tomography_estimate, Strategy, StrategyName};
use crate::theory::{self, MAX_SECOND_MOMENT_SIDE};

/// Sample variance below which a run is reported as zero-variance.
pub const ZERO_VARIANCE: f64 = 1e-20;

/// Mean and standard error (unbiased variance); `stderr` is exactly 0 when
/// the sample variance is below [`ZERO_VARIANCE`].
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    // Welford keeps the mean of a constant sequence exact.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = m2 / (n - 1.0);
    if var < ZERO_VARIANCE {
        (mean, 0.0)
    } else {
        (mean, (var / n).sqrt())
    }
}

fn check_dims(c: &ChoiOperator, d_i: usize, d_o: usize) -> Result<()> {
    if (c.d_i(), c.d_o()) != (d_i, d_o) {
        return Err(Error::InvalidDims(format!(
            "expected a ({d_i}, {d_o}) channel, got ({}, {})",
            c.d_i(),
            c.d_o()
        )));
    }
    Ok(())
}

/// `2 d_I² − 2 ‖√C √(tr_E |W><W|)‖₁²`, the exact minimum over environment
/// unitaries for the constant output `|W><W|`.
pub fn error_pure_output(c: &ChoiOperator, w: &PurificationVector) -> Result<f64> {
    check_dims(c, w.d_i(), w.d_o())?;
    let d2 = (c.d_i() * c.d_i()) as f64;
    let f = fidelity_unnormalized(c.matrix(), &w.marginal_matrix())?;
    Ok((2.0 * d2 - 2.0 * f).clamp(0.0, 2.0 * d2))
}

/// `d_I² + tr C² · tr ρ² − 2 Σ (c_i↓)² λ_i↓(ρ)`, the exact minimum for the
/// output `C ⊗ ρ_E`.
pub fn error_append(c: &ChoiOperator, rho_e: &ComplexMatrix) -> Result<f64> {
    if !rho_e.is_square() || rho_e.rows() == 0 {
        return Err(Error::InvalidDims("environment state must be square".into()));
    }
    let tr = rho_e.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::NotNormalized { trace: tr.re });
    }
    let lam = psd_eigenvalues(rho_e)?;
    Ok(error_append_spectrum(c, &lam))
}

fn error_append_spectrum(c: &ChoiOperator, lam: &[f64]) -> f64 {
    let spec = c.spectrum();
    let d2 = (c.d_i() * c.d_i()) as f64;
    let p = c.purity();
    let rho_purity: f64 = lam.iter().map(|x| x * x).sum();
    let overlap: f64 = spec.iter().zip(lam).map(|(ci, li)| ci * ci * li).sum();
    (d2 + p * rho_purity - 2.0 * overlap).clamp(0.0, 2.0 * d2)
}

/// `d_I² − d_I/(d_O d_E)`, independent of the sampled channel.
pub fn error_map_to_depolarizing(c: &ChoiOperator, d_e: usize) -> Result<f64> {
    if d_e == 0 {
        return Err(Error::InvalidDims("d_E must be >= 1".into()));
    }
    let (di, d_o) = (c.d_i() as f64, c.d_o() as f64);
    Ok(di * di - di / (d_o * d_e as f64))
}

/// `d_I² − tr C²/d_E`: the output `C ⊗ 1/d_E` has the same overlap with every
/// purification in the orbit.
pub fn error_avg_env_unitary(c: &ChoiOperator, d_e: usize) -> Result<f64> {
    if d_e == 0 {
        return Err(Error::InvalidDims("d_E must be >= 1".into()));
    }
    let d2 = (c.d_i() * c.d_i()) as f64;
    Ok((d2 - c.purity() / d_e as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptOptions {
    /// Haar-random starting points in addition to the identity.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once `‖Ω‖² ≤ rel_tol · max(overlap, 1)` for the Riemannian gradient `Ω`.
    pub rel_tol: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for OrbitOptOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 500,
            rel_tol: 1e-14,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitResult {
    pub error: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One ascent run from a single starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentRun {
    /// Error after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
    pub converged: bool,
    pub z: ComplexMatrix,
}

/// The quadratic form `g(Z) = vec(M Z)† Q vec(M Z)` on `U(d_E)`, with `M` the
/// purification reshaped to `(d_I d_O) × d_E`. `Z` plays the role of `U_Eᵀ`.
#[derive(Debug, Clone)]
pub struct OrbitProblem {
    d_e: usize,
    /// `K[(b,e),(b',e')] = Σ M*_{ab} Q[(a,e),(a',e')] M_{a'b'}`.
    k: ComplexMatrix,
    q_sq: f64,
    v_sq: f64,
    q: ComplexMatrix,
    m: ComplexMatrix,
}

impl OrbitProblem {
    /// Environments of different size are matched by zero-padding the smaller.
    pub fn new(q_out: &ComplexMatrix, v: &PurificationVector) -> Result<Self> {
        let n = v.d_i() * v.d_o();
        if !q_out.is_square() || q_out.rows() % n != 0 || q_out.rows() == 0 {
            return Err(Error::InvalidDims(format!(
                "output of side {} is not on a ({}, {}, d_E) space",
                q_out.rows(),
                v.d_i(),
                v.d_o()
            )));
        }
        let d_q = q_out.rows() / n;
        let d_e = d_q.max(v.d_e());
        let v = v.embed_env(d_e)?;
        let q = if d_q == d_e {
            q_out.clone()
        } else {
            ComplexMatrix::from_fn(n * d_e, n * d_e, |r, s| {
                let (a, e) = (r / d_e, r % d_e);
                let (a2, e2) = (s / d_e, s % d_e);
                if e < d_q && e2 < d_q {
                    q_out[(a * d_q + e, a2 * d_q + e2)]
                } else {
                    ZERO
                }
            })
        };
        let m = v.as_system_env_matrix();
        let mut k = ComplexMatrix::zeros(d_e * d_e, d_e * d_e);
        for e in 0..d_e {
            for e2 in 0..d_e {
                let block = ComplexMatrix::from_fn(n, n, |a, a2| q[(a * d_e + e, a2 * d_e + e2)]);
                let kb = m.adjoint().matmul(&block).matmul(&m);
                for b in 0..d_e {
                    for b2 in 0..d_e {
                        k[(b * d_e + e, b2 * d_e + e2)] = kb[(b, b2)];
                    }
                }
            }
        }
        Ok(Self {
            d_e,
            k,
            q_sq: q.frobenius_norm_sqr(),
            v_sq: v.norm_sqr(),
            q,
            m,
        })
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    /// `<V_Z| Q |V_Z>`.
    pub fn overlap(&self, z: &ComplexMatrix) -> f64 {
        self.k.quadratic_form(z.as_slice()).re
    }

    /// Overlap computed directly from `vec(M Z)`; used by the grid oracle.
    pub fn overlap_direct(&self, z: &ComplexMatrix) -> f64 {
        let x = self.m.matmul(z);
        self.q.quadratic_form(x.as_slice()).re
    }

    pub fn error_from_overlap(&self, g: f64) -> f64 {
        (self.q_sq + self.v_sq * self.v_sq - 2.0 * g).max(0.0)
    }

    pub fn error_at(&self, z: &ComplexMatrix) -> f64 {
        self.error_from_overlap(self.overlap(z))
    }

    /// Euclidean gradient `Γ = 2 ∂g/∂Z̄` as a `d_E × d_E` matrix.
    fn euclidean_gradient(&self, z: &ComplexMatrix) -> ComplexMatrix {
        let kz = self.k.matvec(z.as_slice());
        ComplexMatrix::from_vec(self.d_e, self.d_e, kz)
            .expect("square")
            .scale(2.0)
    }

    /// Majorization step `polar(Γ + μZ)`. `K` is PSD, so `g` is convex and
    /// maximizing its linearization over unitaries never decreases it; the
    /// small `μZ` shift keeps the polar factor defined when `Γ` is singular.
    fn majorize_step(&self, z: &ComplexMatrix, gamma: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mu = 1e-3 * gamma.frobenius_norm().max(1e-300);
        let shifted = gamma + &z.scale(mu);
        let p = polar_factor(&shifted)?;
        // A second pass removes the residual non-unitarity of an
        // ill-conditioned first factor.
        polar_factor(&p)
    }

    /// Ascent on `g`: each iteration takes the better of a majorization step
    /// and a Riemannian gradient step (tangent direction `skew(Z†Γ)`, polar
    /// retraction, Armijo backtracking). The overlap never decreases.
    pub fn ascend(&self, z0: &ComplexMatrix, opts: &OrbitOptOptions) -> Result<AscentRun> {
        let mut z = z0.clone();
        let mut g = self.overlap(&z);
        let mut history = vec![self.error_from_overlap(g)];
        let mut t = 1.0 / self.k.frobenius_norm().max(1e-300);
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let gamma = self.euclidean_gradient(&z);
            let a = z.adjoint().matmul(&gamma);
            let omega = (&a - &a.adjoint()).scale(0.5);
            let slope = omega.frobenius_norm_sqr();
            if slope <= opts.rel_tol * g.max(1.0) {
                converged = true;
                break;
            }
            let mut best: Option<(ComplexMatrix, f64)> = None;
            if let Ok(cand) = self.majorize_step(&z, &gamma) {
                let g_new = self.overlap(&cand);
                if g_new > g {
                    best = Some((cand, g_new));
                }
            }
            let mut step = t * 2.0;
            for _ in 0..opts.max_backtracks {
                let mut dir = omega.scale(step);
                for i in 0..self.d_e {
                    dir[(i, i)] += ONE;
                }
                let cand = z.matmul(&polar_factor(&dir)?);
                let g_new = self.overlap(&cand);
                if g_new >= g + opts.armijo * step * slope {
                    t = step;
                    if best.as_ref().map_or(true, |(_, gb)| g_new > *gb) {
                        best = Some((cand, g_new));
                    }
                    break;
                }
                step *= opts.shrink;
            }
            match best {
                Some((cand, g_new)) => {
                    z = cand;
                    g = g_new;
                    history.push(self.error_from_overlap(g));
                }
                None => break,
            }
        }
        Ok(AscentRun { history, converged, z })
    }
}

/// `min_{U_E} ‖Q − |V_U><V_U|‖₂²` by best-of-restarts Riemannian ascent from
/// the identity and `opts.restarts` Haar-random unitaries.
pub fn error_orbit_numeric(
    q_out: &ComplexMatrix,
    v: &PurificationVector,
    opts: &OrbitOptOptions,
    rs: &mut RandomStream,
) -> Result<OrbitResult> {
    if opts.restarts == 0 {
        return Err(Error::InvalidDims("restarts must be >= 1".into()));
    }
    let prob = OrbitProblem::new(q_out, v)?;
    let d = prob.d_e();
    let mut best: Option<(f64, bool)> = None;
    let mut iterations = 0;
    for r in 0..=opts.restarts {
        let z0 = if r == 0 { ComplexMatrix::identity(d) } else { sample_haar_unitary(d, rs)? };
        let run = prob.ascend(&z0, opts)?;
        iterations += run.history.len() - 1;
        let err = *run.history.last().expect("non-empty history");
        if best.map_or(true, |(b, _)| err < b) {
            best = Some((err, run.converged));
        }
    }
    let (error, converged) = best.expect("at least one start");
    Ok(OrbitResult {
        error,
        converged,
        iterations,
    })
}

/// ZYZ Euler rotation `Rz(φ) Ry(θ) Rz(λ)`.
fn euler_zyz(phi: f64, theta: f64, lambda: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = |a: f64| Complex64::from_polar(1.0, a);
    let a = (phi + lambda) / 2.0;
    let b = (phi - lambda) / 2.0;
    ComplexMatrix::from_vec(
        2,
        2,
        vec![e(-a) * c, -e(-b) * s, e(b) * s, e(a) * c],
    )
    .expect("2x2")
}

/// Minimum of the orbit error over a deterministic grid on `U(2)` (global
/// phase dropped): `θ_j = πj/(res−1)`, `φ_j, λ_j = 2πj/res`. An upper bound
/// on the true minimum. With `d_E = 1` it is the plain HS distance.
pub fn orbit_bruteforce(q_out: &ComplexMatrix, v: &PurificationVector, resolution: usize) -> Result<f64> {
    let prob = OrbitProblem::new(q_out, v)?;
    match prob.d_e() {
        1 => Ok(prob.error_from_overlap(prob.overlap_direct(&ComplexMatrix::identity(1)))),
        2 => {
            if resolution < 2 {
                return Err(Error::InvalidDims("grid resolution must be >= 2".into()));
            }
            let res = resolution as f64;
            let best = (0..resolution)
                .into_par_iter()
                .map(|i| {
                    let theta = std::f64::consts::PI * i as f64 / (res - 1.0);
                    let mut best = f64::NEG_INFINITY;
                    for j in 0..resolution {
                        let phi = 2.0 * std::f64::consts::PI * j as f64 / res;
                        for l in 0..resolution {
                            let lambda = 2.0 * std::f64::consts::PI * l as f64 / res;
                            best = best.max(prob.overlap_direct(&euler_zyz(phi, theta, lambda)));
                        }
                    }
                    best
                })
                .collect::<Vec<f64>>()
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(prob.error_from_overlap(best))
        }
        d => Err(Error::TooLarge(format!("grid search needs d_E <= 2, got {d}"))),
    }
}

/// Result of a Monte Carlo error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub strategy: String,
    #[serde(rename = "d_I")]
    pub d_i: usize,
    #[serde(rename = "d_O")]
    pub d_o: usize,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub closed_form: Option<f64>,
    #[serde(skip)]
    pub per_sample: Vec<f64>,
}

impl ErrorReport {
    /// `|mean − closed_form| ≤ 4·stderr` (plus round-off slack); `None` without
    /// a closed form.
    pub fn matches_closed_form(&self) -> Option<bool> {
        self.closed_form.map(|cf| {
            let slack = 1e-10 * cf.abs().max(1.0);
            (self.mean - cf).abs() <= 4.0 * self.stderr + slack
        })
    }
}

/// Per-sample error of `strategy` on a sampled `(C, V)`, by the exact route
/// for its class. Extra randomness (estimation) comes from `rs`.
pub fn per_sample_error(
    strategy: &Strategy,
    c: &ChoiOperator,
    d_e: usize,
    rs: &mut RandomStream,
) -> Result<f64> {
    match strategy {
        Strategy::PureOutput(w) => error_pure_output(c, w),
        Strategy::AppendState(rho) => error_append(c, rho),
        Strategy::AppendMaxMixed | Strategy::AvgEnvUnitary => error_avg_env_unitary(c, d_e),
        Strategy::AppendOptimal(weights) => {
            let total: f64 = weights.iter().sum();
            let lam = crate::strategies::optimal_append_spectrum(weights, total)?;
            Ok(error_append_spectrum(c, &lam))
        }
        Strategy::MapToDepolarizing => error_map_to_depolarizing(c, d_e),
        Strategy::Estimation { k } => {
            let est = tomography_estimate(c, *k, rs)?;
            error_pure_output(c, &est)
        }
    }
}

/// Monte Carlo average of the per-sample error. Sample `i` uses the stream
/// `(seed, SAMPLES, i)` for both the channel and the strategy's own draws,
/// so results are independent of the worker count.
pub fn estimate_average_error(
    label: &str,
    strategy: &Strategy,
    spec: &EnsembleSpec,
    n: usize,
    closed_form: Option<f64>,
) -> Result<ErrorReport> {
    if n < 2 {
        return Err(Error::InvalidDims(format!("need at least 2 samples, got {n}")));
    }
    spec.validate()?;
    let per_sample = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::in_domain(spec.seed, domain::SAMPLES, i);
            let (c, _) = sample_choi(spec, &mut rs)?;
            per_sample_error(strategy, &c, spec.d_e, &mut rs)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_stderr(&per_sample);
    Ok(ErrorReport {
        strategy: label.to_string(),
        d_i: spec.d_i,
        d_o: spec.d_o,
        d_e: spec.d_e,
        n,
        seed: spec.seed,
        mean,
        stderr,
        closed_form,
        per_sample,
    })
}

/// Build the concrete machine for a named strategy. `append:optimal` estimates
/// its weights from `n` pilot samples drawn on a separate stream family.
pub fn resolve_strategy(name: StrategyName, spec: &EnsembleSpec, n: usize) -> Result<Strategy> {
    spec.validate()?;
    Ok(match name {
        StrategyName::PureOmega => Strategy::PureOutput(max_entangled_purification(spec.d_i, spec.d_o)?),
        StrategyName::PureSeparable => {
            let ups = isometric_embedding_purification(spec.d_i, spec.d_o)?;
            let mut psi = vec![ZERO; spec.d_e];
            psi[0] = ONE;
            Strategy::PureOutput(separable_purification(&ups, &psi)?)
        }
        StrategyName::PureRandom => {
            let mut rs = RandomStream::in_domain(spec.seed, domain::FIXED, 0);
            Strategy::PureOutput(sample_choi(spec, &mut rs)?.1)
        }
        StrategyName::AppendMaxMixed => Strategy::AppendMaxMixed,
        StrategyName::AppendOptimal => {
            let m = estimate_moments_in(spec, n.max(2), domain::PILOT)?;
            Strategy::append_optimal(m.ordered_sq.iter().map(|e| e.mean).collect())?
        }
        StrategyName::AppendPure => Strategy::append_state(pure_env_state(spec.d_e))?,
        StrategyName::Dep => Strategy::MapToDepolarizing,
        StrategyName::AvgUe => Strategy::AvgEnvUnitary,
        StrategyName::Tomo { k } => Strategy::Estimation { k },
    })
}

/// Exact average error of a named strategy where one exists without Monte
/// Carlo moments.
pub fn closed_form_for(name: StrategyName, spec: &EnsembleSpec) -> Option<f64> {
    let (di, d_o) = (spec.d_i as f64, spec.d_o as f64);
    let rank_one_output = 2.0 * (di * di - di / d_o);
    match name {
        StrategyName::Dep => Some(theory::eps_dep(spec)),
        StrategyName::AvgUe | StrategyName::AppendMaxMixed => Some(theory::eps_avg_ue(spec)),
        StrategyName::PureSeparable => Some(rank_one_output),
        StrategyName::PureOmega | StrategyName::PureRandom if spec.d_e == 1 => Some(rank_one_output),
        StrategyName::AppendOptimal | StrategyName::AppendPure if spec.d_e == 1 => Some(0.0),
        _ => None,
    }
}

/// Resolve, estimate and attach the closed form for a named strategy.
pub fn estimate_named(name: StrategyName, spec: &EnsembleSpec, n: usize) -> Result<ErrorReport> {
    let strategy = resolve_strategy(name, spec, n)?;
    estimate_average_error(&name.to_string(), &strategy, spec, n, closed_form_for(name, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(xs);
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    /// `tr C²`
    Purity,
    /// `(tr √C)²`
    TraceSqrtSquared,
    /// `(c_max)²`
    MaxEigenSquared,
}

/// Monte Carlo spectral moments of the sampled Choi operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub n: usize,
    pub purity: Estimate,
    pub tr_sqrt_sq: Estimate,
    /// `E[(c_i↓)²]` for `i < min(d_E, d_I d_O)`.
    pub ordered_sq: Vec<Estimate>,
    pub max_sq: Estimate,
}

impl MomentEstimates {
    pub fn get(&self, which: Moment) -> Estimate {
        match which {
            Moment::Purity => self.purity,
            Moment::TraceSqrtSquared => self.tr_sqrt_sq,
            Moment::MaxEigenSquared => self.max_sq,
        }
    }
}

/// Moments over the per-sample stream family.
pub fn estimate_moments(spec: &EnsembleSpec, n: usize) -> Result<MomentEstimates> {
    estimate_moments_in(spec, n, domain::SAMPLES)
}

/// Moments over an explicit stream family.
pub fn estimate_moments_in(spec: &EnsembleSpec, n: usize, family: u64) -> Result<MomentEstimates> {
    if n < 2 {
        return Err(Error::InvalidDims(format!("need at least 2 samples, got {n}")));
    }
    spec.validate()?;
    let r = spec.generic_rank();
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::in_domain(spec.seed, family, i);
            let (c, _) = sample_choi(spec, &mut rs)?;
            let spec_c = c.spectrum();
            let root: f64 = spec_c.iter().map(|x| x.sqrt()).sum();
            let mut sq: Vec<f64> = spec_c.iter().take(r).map(|x| x * x).collect();
            sq.resize(r, 0.0);
            Ok((c.purity(), root * root, sq))
        })
        .collect::<Result<Vec<(f64, f64, Vec<f64>)>>>()?;
    let col = |f: &dyn Fn(&(f64, f64, Vec<f64>)) -> f64| -> Estimate {
        Estimate::from_samples(&rows.iter().map(f).collect::<Vec<f64>>())
    };
    Ok(MomentEstimates {
        n,
        purity: col(&|r| r.0),
        tr_sqrt_sq: col(&|r| r.1),
        ordered_sq: (0..r).map(|j| col(&|row| row.2[j])).collect(),
        max_sq: col(&|r| r.2[0]),
    })
}

const SECOND_MOMENT_CHUNK: usize = 1000;

/// Monte Carlo average of `|V><V| ⊗ |V><V|` on `(I O E) ⊗ (I' O' E')`.
pub fn second_moment_operator(spec: &EnsembleSpec, n: usize) -> Result<ComplexMatrix> {
    if n < 1 {
        return Err(Error::InvalidDims("need at least one sample".into()));
    }
    spec.validate()?;
    let side = spec.total_dim().pow(2);
    if side > MAX_SECOND_MOMENT_SIDE {
        return Err(Error::TooLarge(format!(
            "second-moment operator of side {side} exceeds {MAX_SECOND_MOMENT_SIDE}"
        )));
    }
    let chunks = n.div_ceil(SECOND_MOMENT_CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut acc = ComplexMatrix::zeros(side, side);
            let start = ch * SECOND_MOMENT_CHUNK;
            let end = (start + SECOND_MOMENT_CHUNK).min(n);
            for i in start..end {
                let mut rs = RandomStream::in_domain(spec.seed, domain::SECOND_MOMENT, i as u64);
                let (_, v) = sample_choi(spec, &mut rs)?;
                let vv = crate::linalg::kron_vec(v.as_slice(), v.as_slice());
                let data = acc.as_mut_slice();
                for (r, a) in vv.iter().enumerate() {
                    let row = &mut data[r * side..(r + 1) * side];
                    for (x, b) in row.iter_mut().zip(&vv) {
                        *x += a * b.conj();
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<ComplexMatrix>>>()?;
    let mut total = ComplexMatrix::zeros(side, side);
    for p in &partial {
        total = &total + p;
    }
    Ok(total.scale(1.0 / n as f64))
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn relative_frobenius_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm()
}

/// Eigenvalues of `d_O·C` pooled over `draws` samples, in draw order.
pub fn pooled_scaled_spectrum(spec: &EnsembleSpec, draws: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let per_draw = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomStream::in_domain(spec.seed, domain::SPECTRUM, i);
            let (c, _) = sample_choi(spec, &mut rs)?;
            Ok(c.spectrum().into_iter().map(|x| x * spec.d_o as f64).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(per_draw.into_iter().flatten().collect())
}

/// Eigenvalues at or below this are the atom at zero (round-off puts them
/// at ±1e-15 rather than exactly 0).
pub const ATOM_THRESHOLD: f64 = 1e-9;

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// the Marčenko–Pastur law with ratio `c` (atom at zero included).
pub fn ks_distance_mp(samples: &[f64], c: f64) -> f64 {
    let mut xs: Vec<f64> = samples.iter().map(|&x| if x <= ATOM_THRESHOLD { 0.0 } else { x }).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // Ties (the atom) jump together.
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = mp_cdf(c, xs[i]);
        // Left limit: the law is continuous except for the atom at zero.
        let f_left = if xs[i] == 0.0 { 0.0 } else { f };
        d = d.max((f_left - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidDims("need at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values are equal".into()));
    }
    Ok(sxy / sxx)
}
