use proptest::prelude::*;
use uqi_core::controllability::{is_controllable, ClosureOptions, InterfaceSystem};
use uqi_core::linalg::{
    hermitian_eig, pauli, random_density, random_hermitian, random_unitary, ComplexMatrix, DensityMatrix,
    HermitianOperator,
};
use uqi_core::measurement::{
    apply_kraus_channel, sequential_generalized_measure, yes_no_channel, yes_no_probabilities, KrausSet,
    YesNoInstrument,
};
use uqi_core::{CMatrix, Density};

fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eig(&HermitianOperator::from_hermitian_part(m)).unwrap().values[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kraus_pair_is_complete(d in 1usize..5, seed in any::<u64>(), theta in -4.0f64..4.0) {
        let inst = YesNoInstrument::new(random_hermitian::<f64>(d, seed), theta).unwrap();
        prop_assert!(inst.completeness_residual() < 1e-10);
    }

    #[test]
    fn channel_preserves_trace_and_positivity(d in 1usize..5, seed in any::<u64>(), theta in -4.0f64..4.0) {
        let rho = random_density::<f64>(d, seed);
        let inst = YesNoInstrument::new(random_hermitian(d, seed ^ 1), theta).unwrap();
        let out = yes_no_channel(&rho, &inst).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-10);
        prop_assert!(min_eigenvalue(out.matrix()) > -1e-10);
        prop_assert!(DensityMatrix::new(out.into_matrix()).is_ok());
    }

    #[test]
    fn commuting_plus_branch_commutes_with_input(d in 2usize..5, seed in any::<u64>(), spread in 0.0f64..1.0) {
        // G and ρ share an eigenbasis; θG has spectrum inside [0, π/2].
        let w = random_unitary::<f64>(d, seed);
        let diag = |vals: Vec<f64>| {
            let m = ComplexMatrix::from_diag(&vals.iter().map(|&x| x.into()).collect::<Vec<_>>());
            w.matrix().matmul(&m).matmul(&w.matrix().adjoint())
        };
        let weights: Vec<f64> = (1..=d).map(|k| k as f64).collect();
        let total: f64 = weights.iter().sum();
        let rho = Density::new(diag(weights.iter().map(|x| x / total).collect())).unwrap();
        let g = HermitianOperator::new(diag((0..d).map(|k| spread * k as f64 / d as f64).collect())).unwrap();
        let inst = YesNoInstrument::new(g, std::f64::consts::FRAC_PI_2).unwrap();
        let (p_plus, _) = yes_no_probabilities(&rho, &inst).unwrap();
        let k = inst.kraus_plus();
        let post = k.matmul(rho.matrix()).matmul(&k.adjoint()).scale_real(1.0 / p_plus);
        prop_assert!(post.commutator(rho.matrix()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn sequential_probability_matches_born_rule(seed in any::<u64>(), a in 0.05f64..0.9, b in 0.05f64..0.9) {
        // Three commuting effects in a random basis: diag(a, b), diag(1−a, 0), diag(0, 1−b).
        let w = random_unitary::<f64>(2, seed);
        let op = |x: f64, y: f64| {
            let m = ComplexMatrix::from_diag(&[x.sqrt().into(), y.sqrt().into()]);
            w.matrix().matmul(&m).matmul(&w.matrix().adjoint())
        };
        let ks = KrausSet::new(vec![op(a, b), op(1.0 - a, 0.0), op(0.0, 1.0 - b)]).unwrap();
        let rho = random_density::<f64>(2, seed ^ 7);
        let probs = ks.probabilities(&rho).unwrap();
        let rec = sequential_generalized_measure(&rho, &ks, seed).unwrap();
        let k = match rec.outcome {
            uqi_core::measurement::Outcome::Index(k) => k,
            other => return Err(TestCaseError::fail(format!("unexpected {other:?}"))),
        };
        prop_assert!((rec.probability - probs[k]).abs() < 1e-9);
        let channel = apply_kraus_channel(&rho, &ks).unwrap();
        prop_assert!((channel.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn algebra_dimension_is_basis_independent(d in 2usize..4, seed in any::<u64>()) {
        let h = random_hermitian::<f64>(d, seed);
        let a = random_hermitian::<f64>(d, seed ^ 3);
        let w = random_unitary::<f64>(d, seed ^ 5);
        let opts = ClosureOptions::default();
        let plain = is_controllable(&InterfaceSystem::new(h.clone(), a.clone()).unwrap(), opts).unwrap();
        let rotated = InterfaceSystem::new(h.conjugate_by(&w), a.conjugate_by(&w)).unwrap();
        let rotated = is_controllable(&rotated, opts).unwrap();
        prop_assert_eq!(plain.traceless_dim, rotated.traceless_dim);
    }

    #[test]
    fn single_precision_verdict_agrees(seed in any::<u64>()) {
        let opts = ClosureOptions::default();
        let wide = is_controllable(
            &InterfaceSystem::new(random_hermitian::<f64>(2, seed), random_hermitian(2, seed ^ 9)).unwrap(),
            opts,
        )
        .unwrap();
        let narrow = is_controllable(
            &InterfaceSystem::new(random_hermitian::<f32>(2, seed), random_hermitian(2, seed ^ 9)).unwrap(),
            ClosureOptions { tol: 1e-4, ..opts },
        )
        .unwrap();
        prop_assert_eq!(wide.controllable, narrow.controllable);
    }
}

#[test]
fn commuting_pair_is_never_controllable() {
    let r = is_controllable(
        &InterfaceSystem::new(pauli::sz::<f64>(), pauli::sz()).unwrap(),
        ClosureOptions::default(),
    )
    .unwrap();
    assert!(!r.controllable);
}
