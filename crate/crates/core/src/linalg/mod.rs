//! Dense complex-matrix kernels.

mod decomp;
mod elliptic;
mod matrix;
mod ops;

pub use decomp::{
    fidelity, fidelity_unnormalized, herm_eig, polar_factor, psd_eigenvalues, psd_inv_sqrt, psd_sqrt,
    singular_values, spectral_norm, trace_norm, HermEig, EIG_NOISE_FLOOR, HERMITIAN_TOL, TRACE_TOL,
};
pub use elliptic::complete_elliptic;
pub use matrix::{inner, kron_vec, norm_sqr, ComplexMatrix, SubsystemDims, ONE, ZERO};
pub use ops::{apply_on_factor, flip_operator, kron, partial_trace, permutation_operator};

#[cfg(test)]
mod tests;
