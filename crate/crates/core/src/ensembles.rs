//! Random channels: Ginibre and Haar sampling, the Haar-Stinespring Choi
//! ensemble, its Wishart route, and Marčenko–Pastur reference quantities.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{ChoiOperator, PurificationVector};
use crate::error::{Error, Result};
use crate::linalg::{complete_elliptic, kron, partial_trace, polar_factor, psd_inv_sqrt, ComplexMatrix, SubsystemDims};

/// Dimensions of the Haar-Stinespring prior plus the seed of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(rename = "d_I")]
    pub d_i: usize,
    #[serde(rename = "d_O")]
    pub d_o: usize,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(d_i: usize, d_o: usize, d_e: usize, seed: u64) -> Result<Self> {
        let spec = Self { d_i, d_o, d_e, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_i < 1 || self.d_e < 1 {
            return Err(Error::InvalidDims(format!(
                "d_I and d_E must be >= 1, got d_I = {}, d_E = {}",
                self.d_i, self.d_e
            )));
        }
        if self.d_o < 2 {
            return Err(Error::InvalidDims(format!("d_O must be >= 2, got {}", self.d_o)));
        }
        if self.d_o * self.d_e < self.d_i {
            return Err(Error::InvalidDims(format!(
                "no isometry from dimension {} into {}·{}",
                self.d_i, self.d_o, self.d_e
            )));
        }
        Ok(())
    }

    pub fn with_d_e(&self, d_e: usize) -> Result<Self> {
        Self::new(self.d_i, self.d_o, d_e, self.seed)
    }

    /// `d_I·d_O`, the side of a Choi matrix.
    pub fn system_dim(&self) -> usize {
        self.d_i * self.d_o
    }

    /// `d_I·d_O·d_E`, the length of a purification vector.
    pub fn total_dim(&self) -> usize {
        self.d_i * self.d_o * self.d_e
    }

    /// Generic Choi rank `min(d_E, d_I·d_O)`.
    pub fn generic_rank(&self) -> usize {
        self.d_e.min(self.system_dim())
    }
}

/// Substream families. Each family owns the top 16 bits of the stream index
/// so that per-sample draws never collide with auxiliary draws.
pub mod domain {
    pub const SAMPLES: u64 = 0;
    pub const PILOT: u64 = 1;
    pub const FIXED: u64 = 2;
    pub const SPECTRUM: u64 = 3;
    pub const SECOND_MOMENT: u64 = 4;
}

const DOMAIN_SHIFT: u32 = 48;

/// Deterministic random source keyed by `(seed, stream index)`.
///
/// Two streams with the same key yield the same draws on any host and in any
/// thread, which is what makes Monte Carlo runs independent of worker count.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    /// Stream `index` inside the substream family `domain`.
    pub fn in_domain(seed: u64, domain: u64, index: u64) -> Self {
        assert!(index < 1 << DOMAIN_SHIFT, "stream index {index} too large");
        Self::new(seed, (domain << DOMAIN_SHIFT) | index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard complex Gaussian: real and imaginary parts `~ N(0, 1/2)`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re * s, im * s)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Matrix of i.i.d. standard complex Gaussians, drawn row-major.
pub fn sample_ginibre(rows: usize, cols: usize, rs: &mut RandomStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rs.complex_normal())
}

/// Haar-distributed isometry `C^{d_in} → C^{d_out}` as the polar factor
/// `G (G†G)^{-1/2}` of a `d_out × d_in` Ginibre matrix.
pub fn sample_haar_isometry(d_in: usize, d_out: usize, rs: &mut RandomStream) -> Result<ComplexMatrix> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::InvalidDims(format!("no isometry from dimension {d_in} into {d_out}")));
    }
    let g = sample_ginibre(d_out, d_in, rs);
    polar_factor(&g)
}

/// Haar unitary of side `d`.
pub fn sample_haar_unitary(d: usize, rs: &mut RandomStream) -> Result<ComplexMatrix> {
    sample_haar_isometry(d, d, rs)
}

/// Uniformly random unit vector in `C^d`.
pub fn sample_unit_vector(d: usize, rs: &mut RandomStream) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| rs.complex_normal()).collect();
    let n = crate::linalg::norm_sqr(&v).sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Choi vector of a Haar-random Stinespring isometry and its channel.
pub fn sample_choi(spec: &EnsembleSpec, rs: &mut RandomStream) -> Result<(ChoiOperator, PurificationVector)> {
    spec.validate()?;
    let (d_i, d_o, d_e) = (spec.d_i, spec.d_o, spec.d_e);
    let oe = d_o * d_e;
    let v = sample_haar_isometry(d_i, oe, rs)?;
    // |V>_(i, o, e) = V[(o, e), i]
    let mut data = Vec::with_capacity(d_i * oe);
    for i in 0..d_i {
        for r in 0..oe {
            data.push(v[(r, i)]);
        }
    }
    let pv = PurificationVector::from_parts(d_i, d_o, d_e, data);
    Ok((pv.marginal(), pv))
}

/// Same law as [`sample_choi`], through the normalized Wishart matrix
/// `(T^{-1/2} ⊗ 1) G G† (T^{-1/2} ⊗ 1)` with `T = tr_O(G G†)`.
pub fn sample_wishart_choi(spec: &EnsembleSpec, rs: &mut RandomStream) -> Result<ChoiOperator> {
    spec.validate()?;
    let (d_i, d_o) = (spec.d_i, spec.d_o);
    let g = sample_ginibre(d_i * d_o, spec.d_e, rs);
    let w = g.matmul(&g.adjoint()).hermitian_part();
    let t = partial_trace(&w, &SubsystemDims::new(vec![d_i, d_o])?, &[0])?;
    let t_inv = psd_inv_sqrt(&t.hermitian_part())?;
    let n = kron(&t_inv, &ComplexMatrix::identity(d_o));
    let c = n.matmul(&w).matmul(&n).hermitian_part();
    Ok(ChoiOperator::from_parts(d_i, d_o, c))
}

/// Support edges `((1 − √c)², (1 + √c)²)` of the Marčenko–Pastur law.
pub fn mp_support(c: f64) -> (f64, f64) {
    let s = c.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Weight `(1 − 1/c)₊` of the atom at zero.
pub fn mp_atom(c: f64) -> f64 {
    (1.0 - 1.0 / c).max(0.0)
}

/// Absolutely continuous part of the Marčenko–Pastur density with ratio `c`.
pub fn mp_density(c: f64, x: f64) -> f64 {
    let (lo, hi) = mp_support(c);
    if !(c > 0.0) || x <= 0.0 || x < lo || x > hi {
        return 0.0;
    }
    ((hi - x) * (x - lo)).max(0.0).sqrt() / (2.0 * PI * c * x)
}

/// Distribution function of the Marčenko–Pastur law (atom included).
///
/// Integrates the density in the angle `x = lo + (hi − lo)(1 − cos θ)/2`,
/// where the edge square-root singularities disappear.
pub fn mp_cdf(c: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let (lo, hi) = mp_support(c);
    let atom = mp_atom(c);
    if x <= lo {
        return atom;
    }
    if x >= hi {
        return 1.0;
    }
    let w = hi - lo;
    let theta_x = (1.0 - 2.0 * (x - lo) / w).clamp(-1.0, 1.0).acos();
    let f = |t: f64| {
        let xt = lo + 0.5 * w * (1.0 - t.cos());
        if xt <= 0.0 {
            // c = 1 edge: sin²θ / x(θ) → 4/hi as θ → 0.
            return w * w / (8.0 * PI * c) * 4.0 / hi;
        }
        let s = t.sin();
        w * w * s * s / (8.0 * PI * c * xt)
    };
    let n = 512;
    let h = theta_x / n as f64;
    let mut s = f(0.0) + f(theta_x);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(h * i as f64);
    }
    (atom + s * h / 3.0).min(1.0)
}

/// `∫ √x dMP_c(x)` in closed form through complete elliptic integrals, with
/// parameter `m = 4√c / (1 + √c)²`.
pub fn mp_mu(c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("mu(c) needs 0 < c <= 1, got {c}")));
    }
    let s = c.sqrt();
    let m = (4.0 * s / (1.0 + s).powi(2)).min(1.0);
    let (k, e) = complete_elliptic(m)?;
    let gap = (1.0 - s).powi(2);
    let k_term = if gap == 0.0 { 0.0 } else { gap * k };
    Ok(2.0 * (1.0 + s) / (3.0 * PI * c) * ((1.0 + c) * e - k_term))
}
