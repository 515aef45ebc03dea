//! Hermitian eigendecomposition, singular values and the PSD functional
//! calculus built on them.
//!
//! Both factorizations are Jacobi-type: slower than Householder reductions
//! but accurate to high relative precision on the small matrices used here,
//! which matters when square roots are taken of tiny eigenvalues.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues with magnitude below this fraction of the largest one are
/// treated as exact zeros by the PSD functions. Sits a few hundred ulps
/// above the rounding floor of the Jacobi sweep.
pub const EIG_NOISE_FLOOR: f64 = 1e-13;

/// Absolute clamp window for slightly negative eigenvalues.
pub const NEG_CLAMP_ABS: f64 = 1e-10;

/// Relative negativity beyond which a matrix is rejected as not PSD.
pub const NEG_REJECT_REL: f64 = 1e-8;

const MAX_SWEEPS: usize = 64;

/// Spectral decomposition `M = V diag(values) V^dag`.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Non-increasing.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    /// `V f(Λ) V^dag`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in fv.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * lam;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

fn jacobi_tangent(theta: f64) -> f64 {
    if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Ties in the sorted order keep the original diagonal position.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::InvalidDims(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            deviation: m.hermitian_deviation(),
        });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(HermEig {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let skip = f64::EPSILON * 1e-3 * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= skip {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = jacobi_tangent(theta);
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = diag(phase, 1) · R(c, s) restricted to the (p, q) plane.
                let j_pp = phase * c;
                let j_pq = phase * s;
                let j_qp = Complex64::new(-s, 0.0);
                let j_qq = Complex64::new(c, 0.0);

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * j_pp + akq * j_qp;
                    a[(k, q)] = akp * j_pq + akq * j_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: equal eigenvalues keep ascending original index.
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).expect("finite eigenvalues"));

    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // Fix the phase: the first largest-magnitude component is real positive.
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..n {
            let mag = v[(i, src)].norm();
            if mag > best_mag * (1.0 + 1e-12) {
                best = i;
                best_mag = mag;
            }
        }
        let ph = if best_mag > 0.0 {
            v[(best, src)].conj() / best_mag
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, col)] = v[(i, src)] * ph;
        }
    }
    Ok(HermEig { values, vectors })
}

/// Singular values (non-increasing) by one-sided Jacobi orthogonalization.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    // Orthogonalize the columns of whichever orientation has fewer columns.
    let work = if m.rows() < m.cols() { m.adjoint() } else { m.clone() };
    let (rows, cols) = (work.rows(), work.cols());
    // Column-major copy for cache-friendly column operations.
    let mut colsv: Vec<Vec<Complex64>> = (0..cols).map(|j| work.column(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let (left, right) = colsv.split_at_mut(j);
                let ui = &mut left[i];
                let uj = &mut right[0];
                let alpha: f64 = ui.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = uj.iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = ui.iter().zip(uj.iter()).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase_c = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = jacobi_tangent(zeta);
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let a = ui[k];
                    let b = uj[k] * phase_c;
                    ui[k] = a * c - b * s;
                    uj[k] = a * s + b * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = colsv
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Eigenvalues of a PSD matrix after noise-floor and clamp handling.
fn clamped_psd_spectrum(m: &ComplexMatrix) -> Result<HermEig> {
    let mut eig = herm_eig(m)?;
    let norm = eig.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -NEG_REJECT_REL * norm && min < -NEG_CLAMP_ABS {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let floor = EIG_NOISE_FLOOR * norm;
    for x in eig.values.iter_mut() {
        if *x <= floor {
            *x = 0.0;
        }
    }
    Ok(eig)
}

/// Clamped, noise-floored spectrum of a PSD matrix (non-increasing).
pub fn psd_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(clamped_psd_spectrum(m)?.values)
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = clamped_psd_spectrum(m)?;
    Ok(eig.reconstruct_with(f64::sqrt))
}

/// `M^{-1/2}` for a positive definite matrix.
pub fn psd_inv_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || min <= 1e-14 * max {
        return Err(Error::SingularNormalizer);
    }
    Ok(eig.reconstruct_with(|x| 1.0 / x.sqrt()))
}

/// Unitary (or isometric) polar factor `A (A^dag A)^{-1/2}`.
pub fn polar_factor(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = a.adjoint().matmul(a);
    Ok(a.matmul(&psd_inv_sqrt(&gram)?))
}

/// `‖√X √Z‖₁²` for PSD `X`, `Z` of any trace.
pub fn fidelity_unnormalized(x: &ComplexMatrix, z: &ComplexMatrix) -> Result<f64> {
    let sx = psd_sqrt(x)?;
    let sz = psd_sqrt(z)?;
    let t = trace_norm(&sx.matmul(&sz));
    Ok(t * t)
}

/// Tolerance on `tr ρ = 1` for [`fidelity`].
pub const TRACE_TOL: f64 = 1e-9;

/// Uhlmann fidelity `‖√ρ √σ‖₁²` of two density matrices.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    for m in [rho, sigma] {
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotNormalized { trace: tr.re });
        }
    }
    if rho.rows() != sigma.rows() {
        return Err(Error::InvalidDims(format!(
            "fidelity between {}x{} and {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    Ok(fidelity_unnormalized(rho, sigma)?.clamp(0.0, 1.0))
}
