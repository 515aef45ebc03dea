//! Choi, Kraus and Stinespring representations of channels `L(H_I) → L(H_O)`.
//!
//! Choi operators are unnormalized: `C = Σ_ij |i><j| ⊗ Φ(|i><j|)`, so
//! `tr_O C = 1_I` and `tr C = d_I`. A purification is the Choi vector
//! `|V> = (1_I ⊗ V)|Φ⁺>` of a Stinespring isometry `V: H_I → H_O ⊗ H_E`,
//! stored with index `(i, o, e)` row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_on_factor, herm_eig, kron_vec, norm_sqr, partial_trace, psd_eigenvalues, ComplexMatrix, SubsystemDims,
    HERMITIAN_TOL, ONE, ZERO,
};

/// Tolerance for `tr_O C = 1`, PSD-ness and Kraus completeness.
pub const CHANNEL_TOL: f64 = 1e-9;

/// Eigenvalues at or below this fraction of the largest count as zero when
/// determining Choi rank.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiWire", into = "ChoiWire")]
pub struct ChoiOperator {
    d_i: usize,
    d_o: usize,
    matrix: ComplexMatrix,
}

fn check_positive_dims(dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidDims(format!("dimensions must be >= 1, got {dims:?}")));
    }
    Ok(())
}

/// `max |tr_O C − 1_I|` for a matrix on `H_I ⊗ H_O`.
fn tp_deviation(m: &ComplexMatrix, d_i: usize, d_o: usize) -> Result<f64> {
    let dims = SubsystemDims::new(vec![d_i, d_o])?;
    let t = partial_trace(m, &dims, &[0])?;
    Ok(t.max_abs_diff(&ComplexMatrix::identity(d_i)))
}

impl ChoiOperator {
    /// Validates Hermiticity, positivity and trace preservation.
    pub fn new(d_i: usize, d_o: usize, matrix: ComplexMatrix) -> Result<Self> {
        check_positive_dims(&[d_i, d_o])?;
        let n = d_i * d_o;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::InvalidDims(format!(
                "Choi matrix is {}x{}, expected side {n}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                deviation: matrix.hermitian_deviation(),
            });
        }
        let matrix = matrix.hermitian_part();
        let dev = tp_deviation(&matrix, d_i, d_o)?;
        if dev > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { deviation: dev });
        }
        let min = herm_eig(&matrix)?.values.last().copied().unwrap_or(0.0);
        if min < -CHANNEL_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self { d_i, d_o, matrix })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(d_i: usize, d_o: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), d_i * d_o);
        Self { d_i, d_o, matrix }
    }

    pub fn d_i(&self) -> usize {
        self.d_i
    }

    pub fn d_o(&self) -> usize {
        self.d_o
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> SubsystemDims {
        SubsystemDims::new(vec![self.d_i, self.d_o]).expect("validated dims")
    }

    /// `tr C²`.
    pub fn purity(&self) -> f64 {
        self.matrix.frobenius_norm_sqr()
    }

    /// Non-increasing eigenvalues `c_1 ≥ c_2 ≥ …`, clamped to be non-negative.
    pub fn spectrum(&self) -> Vec<f64> {
        psd_eigenvalues(&self.matrix).expect("Choi operators are PSD")
    }

    pub fn rank(&self) -> usize {
        let s = self.spectrum();
        let top = s.first().copied().unwrap_or(0.0);
        s.iter().filter(|&&x| x > RANK_TOL * top).count()
    }

    /// `C / d_I`, the normalized Choi state.
    pub fn density(&self) -> ComplexMatrix {
        self.matrix.scale(1.0 / self.d_i as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PurificationWire", into = "PurificationWire")]
pub struct PurificationVector {
    d_i: usize,
    d_o: usize,
    d_e: usize,
    data: Vec<Complex64>,
}

impl PurificationVector {
    /// Validates length, `‖V‖² = d_I` and `tr_{OE} |V><V| = 1_I`.
    pub fn new(d_i: usize, d_o: usize, d_e: usize, data: Vec<Complex64>) -> Result<Self> {
        check_positive_dims(&[d_i, d_o, d_e])?;
        if data.len() != d_i * d_o * d_e {
            return Err(Error::InvalidDims(format!(
                "purification has {} entries, expected {}·{}·{}",
                data.len(),
                d_i,
                d_o,
                d_e
            )));
        }
        let v = Self { d_i, d_o, d_e, data };
        let dev = v.input_marginal().max_abs_diff(&ComplexMatrix::identity(d_i));
        if dev > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { deviation: dev });
        }
        Ok(v)
    }

    pub(crate) fn from_parts(d_i: usize, d_o: usize, d_e: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), d_i * d_o * d_e);
        Self { d_i, d_o, d_e, data }
    }

    pub fn d_i(&self) -> usize {
        self.d_i
    }

    pub fn d_o(&self) -> usize {
        self.d_o
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.data)
    }

    pub fn dims(&self) -> SubsystemDims {
        SubsystemDims::new(vec![self.d_i, self.d_o, self.d_e]).expect("validated dims")
    }

    /// `|V><V|` on `H_I ⊗ H_O ⊗ H_E`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.data, &self.data)
    }

    /// The vector reshaped to a `(d_I·d_O) × d_E` matrix.
    pub fn as_system_env_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.d_i * self.d_o, self.d_e, self.data.clone()).expect("consistent shape")
    }

    /// The Stinespring isometry `V` as a `(d_O·d_E) × d_I` matrix.
    pub fn isometry(&self) -> ComplexMatrix {
        let oe = self.d_o * self.d_e;
        ComplexMatrix::from_fn(oe, self.d_i, |r, i| self.data[i * oe + r])
    }

    /// `tr_{OE} |V><V|`, which equals `1_I` for a valid Choi vector.
    fn input_marginal(&self) -> ComplexMatrix {
        let oe = self.d_o * self.d_e;
        ComplexMatrix::from_fn(self.d_i, self.d_i, |a, b| {
            (0..oe).map(|k| self.data[a * oe + k] * self.data[b * oe + k].conj()).sum()
        })
    }

    /// `tr_E |V><V|`.
    pub fn marginal_matrix(&self) -> ComplexMatrix {
        let m = self.as_system_env_matrix();
        m.matmul(&m.adjoint()).hermitian_part()
    }

    /// The channel this vector purifies.
    pub fn marginal(&self) -> ChoiOperator {
        ChoiOperator::from_parts(self.d_i, self.d_o, self.marginal_matrix())
    }

    /// Zero-pad the environment to `d_e ≥ self.d_e()`; the marginal is unchanged.
    pub fn embed_env(&self, d_e: usize) -> Result<Self> {
        if d_e < self.d_e {
            return Err(Error::InvalidDims(format!(
                "cannot embed environment of dimension {} into {d_e}",
                self.d_e
            )));
        }
        let mut data = vec![ZERO; self.d_i * self.d_o * d_e];
        for (m, chunk) in self.data.chunks(self.d_e).enumerate() {
            data[m * d_e..m * d_e + self.d_e].copy_from_slice(chunk);
        }
        Ok(Self::from_parts(self.d_i, self.d_o, d_e, data))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    d_i: usize,
    d_o: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausSet {
    /// Each operator is `d_O × d_I`; `Σ K†K = 1` is enforced.
    pub fn new(d_i: usize, d_o: usize, ops: Vec<ComplexMatrix>) -> Result<Self> {
        check_positive_dims(&[d_i, d_o])?;
        if ops.is_empty() {
            return Err(Error::InvalidDims("empty Kraus set".into()));
        }
        let mut sum = ComplexMatrix::zeros(d_i, d_i);
        for k in &ops {
            if k.rows() != d_o || k.cols() != d_i {
                return Err(Error::InvalidDims(format!(
                    "Kraus operator is {}x{}, expected {d_o}x{d_i}",
                    k.rows(),
                    k.cols()
                )));
            }
            sum = &sum + &k.adjoint().matmul(k);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d_i));
        if dev > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { deviation: dev });
        }
        Ok(Self { d_i, d_o, ops })
    }

    pub fn d_i(&self) -> usize {
        self.d_i
    }

    pub fn d_o(&self) -> usize {
        self.d_o
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// `C = Σ_k |K_k>><<K_k|` with `|K>>_(i,o) = K[o, i]`.
pub fn choi_from_kraus(k: &KrausSet) -> ChoiOperator {
    let (d_i, d_o) = (k.d_i, k.d_o);
    let n = d_i * d_o;
    let mut c = ComplexMatrix::zeros(n, n);
    for op in &k.ops {
        let v: Vec<Complex64> = (0..n).map(|m| op[(m % d_o, m / d_o)]).collect();
        c = &c + &ComplexMatrix::outer(&v, &v);
    }
    ChoiOperator::from_parts(d_i, d_o, c.hermitian_part())
}

/// Kraus operators `√λ_k · reshape(v_k)` for every eigenvalue `λ_k > tol`,
/// in non-increasing eigenvalue order.
pub fn kraus_from_choi(c: &ChoiOperator, tol: f64) -> KrausSet {
    let (d_i, d_o) = (c.d_i, c.d_o);
    let eig = herm_eig(&c.matrix).expect("Choi operators are Hermitian");
    let ops = eig
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &lam)| lam > tol)
        .map(|(k, &lam)| {
            let s = lam.sqrt();
            ComplexMatrix::from_fn(d_o, d_i, |o, i| eig.vectors[(i * d_o + o, k)] * s)
        })
        .collect();
    KrausSet { d_i, d_o, ops }
}

/// Canonical purification `Σ_k K_k ⊗ |k>_E` built from the eigen-ordered
/// Kraus operators of `c`, zero-padded to dimension `d_e`.
pub fn stinespring_from_choi(c: &ChoiOperator, d_e: usize) -> Result<PurificationVector> {
    if d_e == 0 {
        return Err(Error::InvalidDims("environment dimension must be >= 1".into()));
    }
    let eig = herm_eig(&c.matrix)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let rank = eig.values.iter().filter(|&&x| x > RANK_TOL * top).count();
    if rank > d_e {
        return Err(Error::EnvironmentTooSmall { d_e, rank });
    }
    let n = c.d_i * c.d_o;
    let mut data = vec![ZERO; n * d_e];
    for k in 0..rank {
        let s = eig.values[k].sqrt();
        for m in 0..n {
            data[m * d_e + k] = eig.vectors[(m, k)] * s;
        }
    }
    Ok(PurificationVector::from_parts(c.d_i, c.d_o, d_e, data))
}

/// Tolerance on `U†U = 1` for environment unitaries.
pub const UNITARY_TOL: f64 = 1e-9;

/// `(1_{IO} ⊗ U_E)|V>`.
pub fn apply_env_unitary(v: &PurificationVector, u: &ComplexMatrix) -> Result<PurificationVector> {
    if u.rows() != v.d_e || u.cols() != v.d_e {
        return Err(Error::InvalidDims(format!(
            "environment unitary is {}x{}, expected side {}",
            u.rows(),
            u.cols(),
            v.d_e
        )));
    }
    let dev = u.unitarity_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let data = apply_on_factor(&v.data, &[v.d_i * v.d_o, v.d_e], 1, u);
    Ok(PurificationVector::from_parts(v.d_i, v.d_o, v.d_e, data))
}

/// Completely depolarizing channel, `C = 1/d_O`.
pub fn depolarizing_choi(d_i: usize, d_o: usize) -> Result<ChoiOperator> {
    check_positive_dims(&[d_i, d_o])?;
    let n = d_i * d_o;
    Ok(ChoiOperator::from_parts(d_i, d_o, ComplexMatrix::identity(n).scale(1.0 / d_o as f64)))
}

/// `|Ω> = d_O^{-1/2} Σ_m |m>_{IO}|m>_E` with `d_E = d_I·d_O`; purifies the
/// depolarizing channel.
pub fn max_entangled_purification(d_i: usize, d_o: usize) -> Result<PurificationVector> {
    check_positive_dims(&[d_i, d_o])?;
    let n = d_i * d_o;
    let amp = Complex64::new(1.0 / (d_o as f64).sqrt(), 0.0);
    let mut data = vec![ZERO; n * n];
    for m in 0..n {
        data[m * n + m] = amp;
    }
    Ok(PurificationVector::from_parts(d_i, d_o, n, data))
}

/// Choi vector of the isometric channel embedding `H_I` into the first
/// `d_I` levels of `H_O` (the identity channel when `d_I = d_O`).
pub fn isometric_embedding_purification(d_i: usize, d_o: usize) -> Result<PurificationVector> {
    check_positive_dims(&[d_i, d_o])?;
    if d_o < d_i {
        return Err(Error::InvalidDims(format!(
            "no isometric channel from dimension {d_i} into {d_o}"
        )));
    }
    let mut data = vec![ZERO; d_i * d_o];
    for i in 0..d_i {
        data[i * d_o + i] = ONE;
    }
    Ok(PurificationVector::from_parts(d_i, d_o, 1, data))
}

/// `|Υ> ⊗ |ψ>` for an isometric Choi vector `|Υ>` (`d_E = 1`) and a unit
/// environment vector `ψ`.
pub fn separable_purification(upsilon: &PurificationVector, psi: &[Complex64]) -> Result<PurificationVector> {
    if upsilon.d_e != 1 {
        return Err(Error::InvalidDims(format!(
            "separable purification needs an isometric Choi vector, got d_E = {}",
            upsilon.d_e
        )));
    }
    if psi.is_empty() {
        return Err(Error::InvalidDims("empty environment state".into()));
    }
    let n = norm_sqr(psi);
    if (n - 1.0).abs() > CHANNEL_TOL {
        return Err(Error::NotNormalized { trace: n });
    }
    let data = kron_vec(&upsilon.data, psi);
    Ok(PurificationVector::from_parts(upsilon.d_i, upsilon.d_o, psi.len(), data))
}

// JSON wire formats: dimensions plus flat `[re, im]` pairs.

#[derive(Serialize, Deserialize)]
struct ChoiWire {
    #[serde(rename = "d_I")]
    d_i: usize,
    #[serde(rename = "d_O")]
    d_o: usize,
    matrix: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct PurificationWire {
    #[serde(rename = "d_I")]
    d_i: usize,
    #[serde(rename = "d_O")]
    d_o: usize,
    #[serde(rename = "d_E")]
    d_e: usize,
    vector: Vec<[f64; 2]>,
}

pub(crate) fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl From<ChoiOperator> for ChoiWire {
    fn from(c: ChoiOperator) -> Self {
        Self {
            d_i: c.d_i,
            d_o: c.d_o,
            matrix: to_pairs(c.matrix.as_slice()),
        }
    }
}

impl TryFrom<ChoiWire> for ChoiOperator {
    type Error = Error;

    fn try_from(w: ChoiWire) -> Result<Self> {
        let n = w.d_i * w.d_o;
        let m = ComplexMatrix::from_vec(n, n, from_pairs(&w.matrix))?;
        ChoiOperator::new(w.d_i, w.d_o, m)
    }
}

impl From<PurificationVector> for PurificationWire {
    fn from(v: PurificationVector) -> Self {
        Self {
            d_i: v.d_i,
            d_o: v.d_o,
            d_e: v.d_e,
            vector: to_pairs(&v.data),
        }
    }
}

impl TryFrom<PurificationWire> for PurificationVector {
    type Error = Error;

    fn try_from(w: PurificationWire) -> Result<Self> {
        PurificationVector::new(w.d_i, w.d_o, w.d_e, from_pairs(&w.vector))
    }
}
