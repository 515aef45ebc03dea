//! Purification machines: given a channel's Choi operator they output an
//! operator on `H_I ⊗ H_O ⊗ H_E` meant to approximate one of its purifications.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channels::{apply_env_unitary, stinespring_from_choi, ChoiOperator, PurificationVector};
use crate::ensembles::{sample_haar_unitary, RandomStream};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, kron, psd_eigenvalues, psd_inv_sqrt, ComplexMatrix, ONE, ZERO};

/// Command-line names of the strategy families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyName {
    /// Output the maximally entangled purification `|Ω>`.
    PureOmega,
    /// Output `|Υ> ⊗ |0>` for the isometric embedding `Υ`.
    PureSeparable,
    /// Output a fixed Haar-random purification.
    PureRandom,
    AppendMaxMixed,
    AppendOptimal,
    /// Append the pure environment state `|0>`.
    AppendPure,
    Dep,
    AvgUe,
    Tomo { k: usize },
}

impl StrategyName {
    pub const FAMILIES: [&'static str; 9] = [
        "pure:omega",
        "pure:separable",
        "pure:random",
        "append:maxmixed",
        "append:optimal",
        "append:pure",
        "dep",
        "avg-ue",
        "tomo:k=<int>",
    ];
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PureOmega => f.write_str("pure:omega"),
            Self::PureSeparable => f.write_str("pure:separable"),
            Self::PureRandom => f.write_str("pure:random"),
            Self::AppendMaxMixed => f.write_str("append:maxmixed"),
            Self::AppendOptimal => f.write_str("append:optimal"),
            Self::AppendPure => f.write_str("append:pure"),
            Self::Dep => f.write_str("dep"),
            Self::AvgUe => f.write_str("avg-ue"),
            Self::Tomo { k } => write!(f, "tomo:k={k}"),
        }
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "pure:omega" => Self::PureOmega,
            "pure:separable" => Self::PureSeparable,
            "pure:random" => Self::PureRandom,
            "append:maxmixed" => Self::AppendMaxMixed,
            "append:optimal" => Self::AppendOptimal,
            "append:pure" => Self::AppendPure,
            "dep" => Self::Dep,
            "avg-ue" => Self::AvgUe,
            _ => {
                let k = s
                    .strip_prefix("tomo:k=")
                    .ok_or_else(|| Error::Parse(format!("unknown strategy '{s}'")))?;
                let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad copy budget in '{s}'")))?;
                if k == 0 {
                    return Err(Error::Parse("copy budget k must be >= 1".into()));
                }
                Self::Tomo { k }
            }
        })
    }
}

/// Parse a comma-separated strategy list.
pub fn parse_strategy_list(s: &str) -> Result<Vec<StrategyName>> {
    let names: Vec<StrategyName> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(StrategyName::from_str)
        .collect::<Result<_>>()?;
    if names.is_empty() {
        return Err(Error::Parse("empty strategy list".into()));
    }
    Ok(names)
}

/// A concrete machine.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Ignore the input and output the fixed purification `|W>`.
    PureOutput(PurificationVector),
    /// Output `C ⊗ ρ_E`.
    AppendState(ComplexMatrix),
    /// Output `C ⊗ 1/d_E`.
    AppendMaxMixed,
    /// Output `C ⊗ diag(λ)` with `λ` the optimal spectrum for the given
    /// ordered eigenvalue second moments.
    AppendOptimal(Vec<f64>),
    /// Output the depolarizing channel's Choi operator `1/(d_O d_E)`.
    MapToDepolarizing,
    /// `C ⊗ 1/d_E`, scored by the error averaged over environment unitaries.
    AvgEnvUnitary,
    /// Estimate a purification from `k` single-copy measurements.
    Estimation { k: usize },
}

/// Tolerance on `tr ρ_E = 1` and on ordering of weights.
const STATE_TOL: f64 = 1e-9;

impl Strategy {
    pub fn append_state(rho_e: ComplexMatrix) -> Result<Self> {
        validate_density(&rho_e)?;
        Ok(Self::AppendState(rho_e))
    }

    /// Weights must be non-negative and non-increasing.
    pub fn append_optimal(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self::AppendOptimal(weights))
    }

    /// Environment dimension of the output for a run with environment `d_e`.
    pub fn output_env_dim(&self, d_e: usize) -> usize {
        match self {
            Self::PureOutput(w) => w.d_e().max(d_e),
            Self::AppendState(rho) => rho.rows(),
            _ => d_e,
        }
    }

    /// The machine's output on `H_I ⊗ H_O ⊗ H_E` (trace `d_I`), with the
    /// environment of dimension [`Strategy::output_env_dim`].
    pub fn apply(&self, c: &ChoiOperator, d_e: usize, rs: &mut RandomStream) -> Result<ComplexMatrix> {
        if d_e == 0 {
            return Err(Error::InvalidDims("environment dimension must be >= 1".into()));
        }
        let n = c.d_i() * c.d_o();
        match self {
            Self::PureOutput(w) => {
                if (w.d_i(), w.d_o()) != (c.d_i(), c.d_o()) {
                    return Err(Error::InvalidDims(format!(
                        "purification is for ({}, {}), channel is ({}, {})",
                        w.d_i(),
                        w.d_o(),
                        c.d_i(),
                        c.d_o()
                    )));
                }
                Ok(w.embed_env(self.output_env_dim(d_e))?.projector())
            }
            Self::AppendState(rho) => Ok(kron(c.matrix(), rho)),
            Self::AppendMaxMixed | Self::AvgEnvUnitary => {
                Ok(kron(c.matrix(), &ComplexMatrix::identity(d_e).scale(1.0 / d_e as f64)))
            }
            Self::AppendOptimal(weights) => {
                let lam = padded_optimal_spectrum(weights, d_e)?;
                Ok(kron(c.matrix(), &ComplexMatrix::diag_real(&lam)))
            }
            Self::MapToDepolarizing => Ok(ComplexMatrix::identity(n * d_e).scale(1.0 / (c.d_o() * d_e) as f64)),
            Self::Estimation { k } => {
                let est = tomography_estimate(c, *k, rs)?;
                Ok(est.embed_env(d_e.max(est.d_e()))?.projector())
            }
        }
    }
}

/// Optimal spectrum for weights covering the whole spectrum of `C`
/// (so `Σ w = E[tr C²]`), padded or trimmed to length `d_e`.
fn padded_optimal_spectrum(weights: &[f64], d_e: usize) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    let mut lam = optimal_append_spectrum(weights, total)?;
    if lam.len() > d_e {
        if lam[d_e..].iter().any(|&x| x > 0.0) {
            return Err(Error::InvalidDims(format!("{} weights for d_E = {d_e}", weights.len())));
        }
        lam.truncate(d_e);
    }
    lam.resize(d_e, 0.0);
    Ok(lam)
}

fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() || rho.rows() == 0 {
        return Err(Error::InvalidDims("environment state must be a non-empty square matrix".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::NotNormalized { trace: tr.re });
    }
    psd_eigenvalues(rho)?;
    Ok(())
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("negative or non-finite weight {w}")));
    }
    if weights.windows(2).any(|p| p[1] > p[0] * (1.0 + STATE_TOL) + STATE_TOL) {
        return Err(Error::InvalidWeights("weights must be non-increasing".into()));
    }
    Ok(())
}

/// Environment spectrum minimizing `p Σλ_i² − 2 Σ w_i λ_i` over probability
/// vectors, where `w_i = E[(c_i↓)²]` and `p = E[tr C²]`.
///
/// The minimizer is `λ_i = (w_i − θ)₊ / p` with `θ` fixed by `Σλ = 1`; when
/// `Σ w = p` (exact moments) this is `λ_i = w_i / p`.
pub fn optimal_append_spectrum(weights: &[f64], avg_purity: f64) -> Result<Vec<f64>> {
    validate_weights(weights)?;
    if !(avg_purity > 0.0) {
        return Err(Error::InvalidWeights(format!("average purity must be positive, got {avg_purity}")));
    }
    // Simplex projection of w/p; weights are already sorted.
    let y: Vec<f64> = weights.iter().map(|w| w / avg_purity).collect();
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (j, &yj) in y.iter().enumerate() {
        cum += yj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if yj - t > 0.0 {
            shift = t;
        }
    }
    Ok(y.iter().map(|&v| (v - shift).max(0.0)).collect())
}

/// Purification of `c` on environment dimension `r = rank(c)`, rotated by a
/// Haar-random environment unitary. This is the infinite-copy limit of
/// [`tomography_estimate`].
pub fn purify_exact(c: &ChoiOperator, rs: &mut RandomStream) -> Result<PurificationVector> {
    let r = c.rank().max(1);
    let v = stinespring_from_choi(c, r)?;
    let u = sample_haar_unitary(r, rs)?;
    apply_env_unitary(&v, &u)
}

/// Pure-state tomography surrogate.
///
/// The unknown state is `|V_U><V_U|/d_I` for a Haar-random environment
/// rotation of the canonical purification on `r = rank(c)`. Each of the `k`
/// copies is measured in an independent Haar-random basis of the joint space
/// (dimension `D`); the linear-inversion estimate `(D+1)/k Σ_j |b_j><b_j| − 1`
/// is reduced to its top eigenvector, which is then mapped to the nearest
/// valid Choi vector (rows of the reshaped vector orthonormalized) with
/// squared norm `d_I`.
pub fn tomography_estimate(c: &ChoiOperator, k: usize, rs: &mut RandomStream) -> Result<PurificationVector> {
    if k == 0 {
        return Err(Error::InvalidDims("copy budget k must be >= 1".into()));
    }
    let truth = purify_exact(c, rs)?;
    let (d_i, d_o, r) = (truth.d_i(), truth.d_o(), truth.d_e());
    let dim = d_i * d_o * r;
    let norm = (d_i as f64).sqrt();
    let psi: Vec<Complex64> = truth.as_slice().iter().map(|z| z / norm).collect();

    let mut acc = ComplexMatrix::zeros(dim, dim);
    let mut probs = vec![0.0; dim];
    for _ in 0..k {
        let basis = sample_haar_unitary(dim, rs)?;
        for (j, p) in probs.iter_mut().enumerate() {
            let amp: Complex64 = (0..dim).map(|a| basis[(a, j)].conj() * psi[a]).sum();
            *p = amp.norm_sqr();
        }
        let j = sample_index(&probs, rs.uniform());
        let b = basis.column(j);
        for a in 0..dim {
            let ba = b[a];
            for bcol in 0..dim {
                acc[(a, bcol)] += ba * b[bcol].conj();
            }
        }
    }
    let scale = (dim + 1) as f64 / k as f64;
    let mut est = acc.scale(scale);
    for a in 0..dim {
        est[(a, a)] -= ONE;
    }
    let top = herm_eig(&est.hermitian_part())?.vector(0);
    nearest_choi_vector(d_i, d_o, r, top)
}

/// Map a unit vector on `I ⊗ (O E)` to the closest vector `X` with
/// `X X† = 1_I` (so that its marginal is trace preserving).
fn nearest_choi_vector(d_i: usize, d_o: usize, d_e: usize, v: Vec<Complex64>) -> Result<PurificationVector> {
    let oe = d_o * d_e;
    let x = ComplexMatrix::from_vec(d_i, oe, v)?;
    let gram = x.matmul(&x.adjoint()).hermitian_part();
    let fixed = match psd_inv_sqrt(&gram) {
        Ok(g) => g.matmul(&x),
        // Rank-deficient estimate: fall back to a uniform rescaling.
        Err(Error::SingularNormalizer) => x.scale((d_i as f64).sqrt() / x.frobenius_norm()),
        Err(e) => return Err(e),
    };
    Ok(PurificationVector::from_parts(d_i, d_o, d_e, fixed.into_vec()))
}

/// Inverse-CDF draw from a discrete distribution.
fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut cum = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        cum += p;
        if target < cum {
            return j;
        }
    }
    probs.len() - 1
}

/// `|0><0|` on `C^d`.
pub fn pure_env_state(d_e: usize) -> ComplexMatrix {
    let mut v = vec![ZERO; d_e];
    v[0] = ONE;
    ComplexMatrix::outer(&v, &v)
}
