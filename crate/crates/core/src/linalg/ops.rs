use num_complex::Complex64;

use super::matrix::{ComplexMatrix, SubsystemDims, ONE, ZERO};
use crate::error::{Error, Result};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Split a flat index into per-factor digits (most significant factor first).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Trace out every factor whose position is not listed in `keep`.
///
/// Kept factors retain their original relative order.
pub fn partial_trace(m: &ComplexMatrix, dims: &SubsystemDims, keep: &[usize]) -> Result<ComplexMatrix> {
    let dims = dims.as_slice();
    let n = dims.iter().product::<usize>();
    if !m.is_square() || m.rows() != n {
        return Err(Error::InvalidDims(format!(
            "{}x{} matrix against factor dims {dims:?}",
            m.rows(),
            m.cols()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidDims(format!("keep index {bad} out of range")));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        kept[k] = true;
    }
    let kept_total: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced_total = n / kept_total;

    // Group full indices by their traced-factor coordinate.
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_total); traced_total];
    let mut dig = vec![0usize; dims.len()];
    for full in 0..n {
        digits(full, dims, &mut dig);
        let (mut k_idx, mut t_idx) = (0usize, 0usize);
        for (f, &d) in dims.iter().enumerate() {
            if kept[f] {
                k_idx = k_idx * d + dig[f];
            } else {
                t_idx = t_idx * d + dig[f];
            }
        }
        groups[t_idx].push((k_idx, full));
    }

    let mut out = ComplexMatrix::zeros(kept_total, kept_total);
    for group in &groups {
        for &(ka, fa) in group {
            for &(kb, fb) in group {
                out[(ka, kb)] += m[(fa, fb)];
            }
        }
    }
    Ok(out)
}

/// Operator mapping `|x_0 … x_{n-1}>` to `|x_{perm[0]} … x_{perm[n-1]}>`.
pub fn permutation_operator(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n_f = dims.len();
    let mut seen = vec![false; n_f];
    if perm.len() != n_f || perm.iter().any(|&p| p >= n_f || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidDims(format!("{perm:?} is not a permutation of {n_f} factors")));
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n: usize = dims.iter().product();
    let mut op = ComplexMatrix::zeros(n, n);
    let mut dig = vec![0usize; n_f];
    for col in 0..n {
        digits(col, dims, &mut dig);
        let mut row = 0usize;
        for (j, &p) in perm.iter().enumerate() {
            row = row * out_dims[j] + dig[p];
        }
        op[(row, col)] = ONE;
    }
    Ok(op)
}

/// Swap (flip) operator on `C^d ⊗ C^d`: `F|ab> = |ba>`.
pub fn flip_operator(d: usize) -> ComplexMatrix {
    permutation_operator(&[d, d], &[1, 0]).expect("valid permutation")
}

/// Apply `u` to one tensor factor of a vector: `(1 ⊗ … ⊗ u ⊗ … ⊗ 1)|v>`.
pub fn apply_on_factor(v: &[Complex64], dims: &[usize], factor: usize, u: &ComplexMatrix) -> Vec<Complex64> {
    let d = dims[factor];
    assert_eq!(u.rows(), d);
    assert_eq!(u.cols(), d);
    let inner: usize = dims[factor + 1..].iter().product();
    let outer: usize = dims[..factor].iter().product();
    let mut out = vec![ZERO; v.len()];
    for o in 0..outer {
        for i in 0..inner {
            for r in 0..d {
                let mut acc = ZERO;
                for c in 0..d {
                    acc += u[(r, c)] * v[(o * d + c) * inner + i];
                }
                out[(o * d + r) * inner + i] = acc;
            }
        }
    }
    out
}
