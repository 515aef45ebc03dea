use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, rank);
    g.matmul(&g.adjoint())
}

fn random_density(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> ComplexMatrix {
    let p = random_psd(rng, n, rank);
    let t = p.trace().re;
    p.scale(1.0 / t)
}

// Unitary via Gram-Schmidt on a random square matrix; independent of polar_factor.
fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..n {
        let mut v = g.column(j);
        for u in &cols {
            let p = inner(u, &v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let nv = norm_sqr(&v).sqrt();
        cols.push(v.into_iter().map(|x| x / nv).collect());
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

fn basis(d: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; d];
    v[i] = ONE;
    v
}

#[test]
fn kron_identity_and_scalar() {
    assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
    let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let one = ComplexMatrix::identity(1);
    assert_eq!(kron(&x, &one), x);
}

#[test]
fn kron_mixed_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let (a, b, cm, d) = (
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 2, 2),
        );
        let lhs = kron(&a, &b).matmul(&kron(&cm, &d));
        let rhs = kron(&a.matmul(&cm), &b.matmul(&d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }
}

#[test]
fn partial_trace_examples() {
    let dims = SubsystemDims::new(vec![2, 2]).unwrap();
    let v00 = kron_vec(&basis(2, 0), &basis(2, 0));
    let p = ComplexMatrix::outer(&v00, &v00);
    let r = partial_trace(&p, &dims, &[0]).unwrap();
    assert_eq!(r, ComplexMatrix::outer(&basis(2, 0), &basis(2, 0)));

    let mut phi = vec![ZERO; 4];
    phi[0] = ONE;
    phi[3] = ONE;
    let r = partial_trace(&ComplexMatrix::outer(&phi, &phi), &dims, &[0]).unwrap();
    assert_eq!(r, ComplexMatrix::identity(2));
}

#[test]
fn partial_trace_matches_explicit_sum() {
    // tr_B of A ⊗ B is tr(B)·A, tr_A is tr(A)·B; middle factor of three.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_matrix(&mut rng, 2, 2);
    let b = random_matrix(&mut rng, 3, 3);
    let e = random_matrix(&mut rng, 2, 2);
    let dims = SubsystemDims::new(vec![2, 3, 2]).unwrap();
    let m = kron(&kron(&a, &b), &e);
    let keep_ae = partial_trace(&m, &dims, &[0, 2]).unwrap();
    let expect = kron(&a, &e).scale_complex(b.trace());
    assert!(keep_ae.max_abs_diff(&expect) < 1e-13);
    let keep_b = partial_trace(&m, &dims, &[1]).unwrap();
    let expect = b.scale_complex(a.trace() * e.trace());
    assert!(keep_b.max_abs_diff(&expect) < 1e-13);
}

#[test]
fn partial_trace_dim_mismatch() {
    let dims = SubsystemDims::new(vec![2, 3]).unwrap();
    let r = partial_trace(&ComplexMatrix::identity(4), &dims, &[0]);
    assert!(matches!(r, Err(Error::InvalidDims(_))));
    assert!(SubsystemDims::new(vec![2, 0]).is_err());
}

#[test]
fn herm_eig_examples() {
    let d = ComplexMatrix::diag_real(&[1.0, 3.0, 2.0]);
    let e = herm_eig(&d).unwrap();
    assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    let e = herm_eig(&ComplexMatrix::identity(4)).unwrap();
    assert!(e.values.iter().all(|&x| x == 1.0));
}

#[test]
fn herm_eig_tie_order_is_index_order() {
    let d = ComplexMatrix::diag_real(&[1.0, 2.0, 1.0, 2.0]);
    let e = herm_eig(&d).unwrap();
    assert_eq!(e.values, vec![2.0, 2.0, 1.0, 1.0]);
    assert_eq!(e.vector(0), basis(4, 1));
    assert_eq!(e.vector(1), basis(4, 3));
    assert_eq!(e.vector(2), basis(4, 0));
    assert_eq!(e.vector(3), basis(4, 2));
}

#[test]
fn herm_eig_rejects_non_hermitian() {
    let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
    assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
}

#[test]
fn herm_eig_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2, 3, 5, 8, 16, 32] {
        let h = random_hermitian(&mut rng, n);
        let e = herm_eig(&h).unwrap();
        let back = e.reconstruct_with(|x| x);
        let scale = spectral_norm(&h);
        assert!(spectral_norm(&(&h - &back)) <= 1e-10 * scale);
        assert!(e.vectors.unitarity_deviation() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn psd_sqrt_examples() {
    let s = psd_sqrt(&ComplexMatrix::diag_real(&[4.0, 9.0])).unwrap();
    assert!(s.max_abs_diff(&ComplexMatrix::diag_real(&[2.0, 3.0])) < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = random_matrix(&mut rng, 4, 1).column(0);
    let nv = norm_sqr(&v).sqrt();
    let v: Vec<Complex64> = v.iter().map(|x| x / nv).collect();
    let p = ComplexMatrix::outer(&v, &v);
    assert!(psd_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-12);

    // A rank-one operator of trace d has square root with trace √d.
    let d = 2.0;
    let s = psd_sqrt(&p.scale(d)).unwrap();
    assert!((s.trace().re - d.sqrt()).abs() < 1e-12);
}

#[test]
fn psd_sqrt_clamp_and_reject() {
    let m = ComplexMatrix::diag_real(&[1.0, -5e-11]);
    let s = psd_sqrt(&m).unwrap();
    assert_eq!(s[(1, 1)], ZERO);
    let m = ComplexMatrix::diag_real(&[1.0, -1e-6]);
    assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd { .. })));
}

#[test]
fn trace_norm_examples() {
    assert!((trace_norm(&ComplexMatrix::diag_real(&[1.0, -2.0])) - 3.0).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_unitary(&mut rng, 5);
    assert!((trace_norm(&u) - 5.0).abs() < 1e-12);
    for _ in 0..20 {
        let m = random_matrix(&mut rng, 4, 4);
        assert!(trace_norm(&m) >= m.trace().norm() - 1e-12);
    }
}

#[test]
fn singular_values_match_eigen_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (r, k) in [(3, 5), (6, 2), (4, 4)] {
        let m = random_matrix(&mut rng, r, k);
        let sv = singular_values(&m);
        let ev = herm_eig(&m.adjoint().matmul(&m)).unwrap().values;
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e.max(0.0)).abs() < 1e-11, "{s} {e}");
        }
    }
}

#[test]
fn fidelity_examples() {
    let z = ComplexMatrix::outer(&basis(2, 0), &basis(2, 0));
    let o = ComplexMatrix::outer(&basis(2, 1), &basis(2, 1));
    let mix = ComplexMatrix::identity(2).scale(0.5);
    assert!((fidelity(&z, &z).unwrap() - 1.0).abs() < 1e-12);
    assert!(fidelity(&z, &o).unwrap().abs() < 1e-12);
    assert!((fidelity(&z, &mix).unwrap() - 0.5).abs() < 1e-12);
    assert!(matches!(
        fidelity(&ComplexMatrix::identity(2), &mix),
        Err(Error::NotNormalized { .. })
    ));
}

#[test]
fn fidelity_is_trace_norm_form_for_noncommuting_states() {
    // For pure states F = |<a|b>|², which the trace-norm form gives but
    // (tr √ρ √σ)² does not.
    let a = vec![ONE, ZERO];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let b = vec![c(s, 0.0), c(0.0, s)];
    let f = fidelity(&ComplexMatrix::outer(&a, &a), &ComplexMatrix::outer(&b, &b)).unwrap();
    assert!((f - 0.5).abs() < 1e-12);
}

#[test]
fn polar_factor_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_matrix(&mut rng, 6, 3);
    let v = polar_factor(&g).unwrap();
    assert!(v.unitarity_deviation() < 1e-12);
    assert!(matches!(polar_factor(&ComplexMatrix::zeros(3, 2)), Err(Error::SingularNormalizer)));
}

#[test]
fn flip_examples() {
    assert_eq!(flip_operator(1), ComplexMatrix::identity(1));
    for d in 1..5 {
        let f = flip_operator(d);
        assert!((f.trace().re - d as f64).abs() < 1e-15);
        assert_eq!(f.matmul(&f), ComplexMatrix::identity(d * d));
        assert_eq!(f.hermitian_deviation(), 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let x = random_matrix(&mut rng, 2, 2);
        let y = random_matrix(&mut rng, 2, 2);
        let lhs = kron(&x, &y).matmul(&flip_operator(2)).trace();
        let rhs = x.matmul(&y).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn permutation_operator_moves_factors() {
    let a = vec![c(1.0, 0.5), c(-0.3, 0.0)];
    let b = vec![c(0.2, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
    let e = vec![c(0.7, 0.0), c(0.1, -0.2)];
    let abe = kron_vec(&kron_vec(&a, &b), &e);
    let p = permutation_operator(&[2, 3, 2], &[2, 0, 1]).unwrap();
    let eab = kron_vec(&kron_vec(&e, &a), &b);
    let got = p.matvec(&abe);
    for (x, y) in got.iter().zip(&eab) {
        assert!((x - y).norm() < 1e-15);
    }
    assert!(permutation_operator(&[2, 2], &[0, 0]).is_err());
}

#[test]
fn apply_on_factor_matches_kron() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = random_matrix(&mut rng, 12, 1).column(0);
    let u = random_matrix(&mut rng, 3, 3);
    let full = kron(&kron(&ComplexMatrix::identity(2), &u), &ComplexMatrix::identity(2));
    let expect = full.matvec(&v);
    let got = apply_on_factor(&v, &[2, 3, 2], 1, &u);
    for (x, y) in got.iter().zip(&expect) {
        assert!((x - y).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, keep_first in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_psd(&mut rng, da * db, 3);
        let dims = SubsystemDims::new(vec![da, db]).unwrap();
        let keep = if keep_first { [0] } else { [1] };
        let r = partial_trace(&m, &dims, &keep).unwrap();
        let t = m.trace().re;
        prop_assert!((r.trace().re - t).abs() <= 1e-12 * t);
    }

    #[test]
    fn psd_sqrt_inverts_square(seed in any::<u64>(), n in 1usize..7, rank in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_psd(&mut rng, n, rank.min(n));
        let s = psd_sqrt(&m).unwrap();
        let back = s.matmul(&s);
        prop_assert!(back.max_abs_diff(&m) <= 1e-9 * m.max_abs());
        prop_assert!(herm_eig(&s).unwrap().values.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn fidelity_symmetric_and_unitarily_invariant(seed in any::<u64>(), n in 2usize..6, r1 in 1usize..6, r2 in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, n, r1.min(n));
        let sigma = random_density(&mut rng, n, r2.min(n));
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() <= 1e-10);
        let u = random_unitary(&mut rng, n);
        let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint()).hermitian_part();
        prop_assert!((f - fidelity(&conj(&rho), &conj(&sigma)).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn uhlmann_dominates_overlap(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_psd(&mut rng, n, 2);
        let z = random_psd(&mut rng, n, n);
        let f = fidelity_unnormalized(&x, &z).unwrap();
        prop_assert!(f >= x.trace_product(&z).re - 1e-10 * f.max(1.0));
    }
}
