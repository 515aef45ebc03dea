//! Cross-module checks through the public API.

use proptest::prelude::*;

use purifylab_core::channels::{
    apply_env_unitary, choi_from_kraus, depolarizing_choi, kraus_from_choi, stinespring_from_choi,
};
use purifylab_core::ensembles::{domain, sample_choi, sample_haar_unitary, EnsembleSpec, RandomStream};
use purifylab_core::fixtures::run_fixtures;
use purifylab_core::linalg::{fidelity_unnormalized, kron, partial_trace, ComplexMatrix, SubsystemDims};
use purifylab_core::metrics::{
    closed_form_for, error_append, error_avg_env_unitary, error_map_to_depolarizing, error_orbit_numeric,
    error_pure_output, estimate_named, OrbitOptOptions,
};
use purifylab_core::strategies::StrategyName;
use purifylab_core::theory;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_channels_round_trip(seed in any::<u64>(), d_i in 1usize..4, d_o in 2usize..4, d_e in 1usize..6) {
        prop_assume!(d_o * d_e >= d_i);
        let spec = EnsembleSpec::new(d_i, d_o, d_e, seed).unwrap();
        let mut rs = RandomStream::in_domain(seed, domain::SAMPLES, 0);
        let (c, v) = sample_choi(&spec, &mut rs).unwrap();
        let scale = c.matrix().max_abs().max(1.0);

        // Purity between the rank bounds.
        let p = c.purity();
        prop_assert!(p >= d_i as f64 / d_o as f64 - 1e-10 && p <= (d_i * d_i) as f64 + 1e-10);

        // Kraus and Stinespring views give back the same Choi operator.
        let k = kraus_from_choi(&c, 1e-12);
        prop_assert!(k.len() <= c.rank().max(1));
        prop_assert!(choi_from_kraus(&k).matrix().max_abs_diff(c.matrix()) < 1e-10 * scale);
        let w = stinespring_from_choi(&c, d_e.max(c.rank())).unwrap();
        prop_assert!(w.marginal_matrix().max_abs_diff(c.matrix()) < 1e-10 * scale);

        // An environment unitary keeps the channel and the error.
        let u = sample_haar_unitary(d_e, &mut rs).unwrap();
        let vu = apply_env_unitary(&v, &u).unwrap();
        prop_assert!(vu.marginal_matrix().max_abs_diff(c.matrix()) < 1e-10 * scale);
        prop_assert!(error_pure_output(&c, &vu).unwrap().abs() < 1e-9);

        // Trace preservation: tr_O C = 1_I (keep factor 0).
        let t = partial_trace(c.matrix(), &SubsystemDims::new([d_i, d_o]).unwrap(), &[0]).unwrap();
        prop_assert!(t.max_abs_diff(&ComplexMatrix::identity(d_i)) < 1e-10);
    }

    #[test]
    fn barycenter_strategies_are_channel_independent(seed in any::<u64>(), d_e in 1usize..5) {
        let spec = EnsembleSpec::new(2, 2, d_e, seed).unwrap();
        let mut rs = RandomStream::in_domain(seed, domain::SAMPLES, 1);
        let (c, _) = sample_choi(&spec, &mut rs).unwrap();
        // Appending 1/d_E is the same machine as averaging over environment unitaries.
        let mixed = ComplexMatrix::identity(d_e).scale(1.0 / d_e as f64);
        let a = error_append(&c, &mixed).unwrap();
        prop_assert!((a - error_avg_env_unitary(&c, d_e).unwrap()).abs() < 1e-10);
        // The depolarizing target gives the same error for every channel.
        let e = error_map_to_depolarizing(&c, d_e).unwrap();
        prop_assert!((e - theory::eps_dep(&spec)).abs() < 1e-10);
        // Fidelity with the barycenter is positive and at most tr C · tr D = d_I².
        let dep = depolarizing_choi(2, 2).unwrap();
        let f = fidelity_unnormalized(c.matrix(), dep.matrix()).unwrap();
        prop_assert!(f > 0.0 && f <= 4.0 + 1e-10);
    }
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let spec = EnsembleSpec::new(2, 2, 3, 99).unwrap();
    let names = [
        StrategyName::PureOmega,
        StrategyName::AppendOptimal,
        StrategyName::AvgUe,
        StrategyName::Tomo { k: 32 },
    ];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| names.iter().map(|&n| estimate_named(n, &spec, 64).unwrap()).collect::<Vec<_>>())
    };
    let (one, many) = (run(1), run(3));
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(a.per_sample, b.per_sample, "{}", a.strategy);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }
}

#[test]
fn unitary_channels_have_closed_forms_for_every_family() {
    let spec = EnsembleSpec::new(2, 3, 1, 5).unwrap();
    for &family in StrategyName::FAMILIES.iter().filter(|f| !f.starts_with("tomo")) {
        let name: StrategyName = family.parse().unwrap();
        let r = estimate_named(name, &spec, 50).unwrap();
        if let Some(ok) = r.matches_closed_form() {
            assert!(ok, "{} {} vs {:?}", r.strategy, r.mean, r.closed_form);
        }
    }
    assert_eq!(closed_form_for(StrategyName::AppendOptimal, &spec), Some(0.0));
}

#[test]
fn orbit_optimizer_beyond_qubit_environments() {
    // d_E = 3 has no grid oracle; the append closed form is the reference.
    let spec = EnsembleSpec::new(1, 3, 3, 17).unwrap();
    let opts = OrbitOptOptions::default();
    for i in 0..10 {
        let mut rs = RandomStream::in_domain(17, domain::FIXED, i);
        let (c, v) = sample_choi(&spec, &mut rs).unwrap();
        let u = sample_haar_unitary(3, &mut rs).unwrap();
        let rho = u
            .matmul(&ComplexMatrix::diag_real(&[0.6, 0.3, 0.1]))
            .matmul(&u.adjoint());
        let q = kron(c.matrix(), &rho);
        let num = error_orbit_numeric(&q, &v, &opts, &mut rs).unwrap();
        assert!((num.error - error_append(&c, &rho).unwrap()).abs() < 1e-6, "instance {i}");
    }
}

#[test]
fn shipped_fixtures_pass_through_public_loader() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden.json");
    let report = run_fixtures(std::path::Path::new(path)).unwrap();
    assert!(report.all_passed(), "{:?}", report.failures().collect::<Vec<_>>());
    assert!(report.outcomes.len() >= 10);
}
