//! Randomized invariants over seeded generators: algebraic identities that
//! must hold for every well-formed input, not just the curated fixtures.

use proptest::prelude::*;

use haar_thermo::groupoid::{
    kernel_convolve, validate_modular, validate_transverse, Measure, ModularFunction,
};
use haar_thermo::sample;
use haar_thermo::thermo::{entropy, pressure};
use haar_thermo::transfer::{apply_h, normalization_residual, normalize};
use haar_thermo::transverse::{density_identity_check, TransverseMeasure};
use haar_thermo::xy::{eigenprob, enumerate_words, ruelle_apply, CylinderFunction, XySpec};
use haar_thermo::{SignedTransverseFunction, TransverseFunction};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_convolution_is_associative(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, _) = sample::random_groupoid(&mut rng, 12, 3);
        let k1 = sample::random_unit_row_kernel(&mut rng, &g);
        let k2 = sample::random_unit_row_kernel(&mut rng, &g);
        let k3 = sample::random_unit_row_kernel(&mut rng, &g);
        let left = kernel_convolve(&kernel_convolve(&k1, &k2, &g).unwrap(), &k3, &g).unwrap();
        let right = kernel_convolve(&k1, &kernel_convolve(&k2, &k3, &g).unwrap(), &g).unwrap();
        for y in g.space().points() {
            for x in g.space().points() {
                prop_assert!((left.mass(y, x) - right.mass(y, x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transverse_functions_absorb_unit_row_kernels(seed in 0u64..10_000) {
        // lambda * nu = nu when lambda has unit rows and nu is transverse
        let mut rng = sample::rng_from_seed(seed);
        let (g, _) = sample::random_groupoid(&mut rng, 12, 3);
        let lam = sample::random_unit_row_kernel(&mut rng, &g);
        let nu = sample::random_transverse(&mut rng, &g, 2.0);
        let nu_k = nu.as_kernel(&g);
        let out = kernel_convolve(&lam, &nu_k, &g).unwrap();
        let report = validate_transverse(&out, &g);
        prop_assert!(report.support_violation.is_none());
        prop_assert!(report.max_row_discrepancy <= 1e-12);
        for y in g.space().points() {
            for x in g.space().points() {
                prop_assert!((out.mass(y, x) - nu_k.mass(y, x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exponential_modular_is_always_a_cocycle(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, _) = sample::random_groupoid(&mut rng, 10, 3);
        let v = sample::random_potential(&mut rng, g.n_points(), 3.0);
        let report = validate_modular(&ModularFunction::Exp(v), &g, 1e-9).unwrap();
        prop_assert!(report.passed);
    }

    #[test]
    fn normalization_always_lands_on_unit_classes(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 20, 5);
        let u = sample::random_potential(&mut rng, g.n_points(), 4.0);
        let v = normalize(&u, &nu_hat, &g);
        prop_assert!(normalization_residual(&v, &nu_hat, &g) <= 1e-12);
    }

    #[test]
    fn transfer_operator_is_idempotent(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 16, 4);
        let v = sample::random_normalized(&mut rng, &nu_hat, &g);
        let f = sample::random_potential(&mut rng, g.n_points(), 3.0);
        let once = apply_h(&v, f.values(), &nu_hat, &g);
        let twice = apply_h(&v, &once.lift(&g), &nu_hat, &g);
        for c in g.classes() {
            prop_assert!((once.value(c) - twice.value(c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn transverse_measure_is_linear(seed in 0u64..10_000, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 12, 3);
        let (v, m) = sample::random_invariant_pair(&mut rng, &nu_hat, &g);
        let lam = TransverseMeasure::from_parts_unchecked(v, m);
        let nu1 = sample::random_transverse(&mut rng, &g, 1.0);
        let nu2 = sample::random_transverse(&mut rng, &g, 1.0);
        let combo_rows = g
            .classes()
            .map(|c| {
                nu1.class_weights(c)
                    .iter()
                    .zip(nu2.class_weights(c))
                    .map(|(w1, w2)| a * w1 + b * w2)
                    .collect()
            })
            .collect();
        let combo = TransverseFunction::new(&g, combo_rows).unwrap();
        let lhs = lam.eval(&combo, &g);
        let rhs = a * lam.eval(&nu1, &g) + b * lam.eval(&nu2, &g);
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn density_identity_holds_for_invariant_pairs(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 12, 3);
        let (v, m) = sample::random_invariant_pair(&mut rng, &nu_hat, &g);
        let lam = TransverseMeasure::from_parts_unchecked(v, m);
        let f = sample::random_potential(&mut rng, g.n_points(), 2.0);
        prop_assert!(density_identity_check(&lam, f.values(), &nu_hat, &g).unwrap() <= 1e-12);
    }

    #[test]
    fn entropy_is_nonpositive_and_normalized_pressure_vanishes(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 16, 4);
        let (v, m) = sample::random_invariant_pair(&mut rng, &nu_hat, &g);
        let lam = TransverseMeasure::from_parts_unchecked(v.clone(), m);
        prop_assert!(entropy(&lam) <= 1e-12);
        prop_assert!(pressure(&v, &nu_hat, &g).value.abs() <= 1e-12);
    }

    #[test]
    fn eval_forms_agree_on_invariant_pairs(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 12, 3);
        let (v, m) = sample::random_invariant_pair(&mut rng, &nu_hat, &g);
        let lam = TransverseMeasure::from_parts_unchecked(v, m);
        let nu = sample::random_transverse(&mut rng, &g, 2.0);
        prop_assert!((lam.eval(&nu, &g) - lam.eval_cocycle_form(&nu, &g)).abs() <= 1e-11);
    }

    #[test]
    fn signed_split_recovers_the_function(seed in 0u64..10_000) {
        let mut rng = sample::rng_from_seed(seed);
        let (g, nu_hat) = sample::random_groupoid(&mut rng, 12, 3);
        let f = sample::random_potential(&mut rng, g.n_points(), 2.0);
        let nu = SignedTransverseFunction::from_density(f.values(), &nu_hat, &g).unwrap();
        let (pos, neg) = nu.split();
        for p in g.space().points() {
            let back = pos.weight(&g, p) - neg.weight(&g, p);
            prop_assert!((back - nu.weight(&g, p)).abs() <= 1e-15);
            prop_assert!(pos.weight(&g, p) >= 0.0 && neg.weight(&g, p) >= 0.0);
        }
    }

    #[test]
    fn markov_jacobian_columns_are_stochastic(seed in 0u64..10_000, d in 2usize..4) {
        use haar_thermo::dyn_def::{markov_jacobian, MarkovSpec};
        let mut rng = sample::rng_from_seed(seed);
        let mut transition = Vec::new();
        for _ in 0..d {
            transition.push(sample::random_probability(&mut rng, d).masses().to_vec());
        }
        let spec = MarkovSpec::new(transition, None).unwrap();
        let j = markov_jacobian(&spec).unwrap();
        for x1 in 0..d {
            let col: f64 = (0..d).map(|x0| j[x0][x1]).sum();
            prop_assert!((col - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn fiber_jacobian_sums_to_one(seed in 0u64..10_000) {
        use haar_thermo::dyn_def::haar_jacobian;
        let mut rng = sample::rng_from_seed(seed);
        let (g, _) = sample::random_groupoid(&mut rng, 12, 4);
        let m = sample::random_probability(&mut rng, g.n_points());
        let j = haar_jacobian(None, &m, &g).unwrap();
        for c in g.classes() {
            let s: f64 = g.members(c).iter().map(|&x| j[x.0]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn ruelle_operator_is_linear_and_positive(seed in 0u64..10_000, d in 2usize..4) {
        let mut rng = sample::rng_from_seed(seed);
        let table = sample::random_potential(&mut rng, d * d, 1.5);
        let spec = XySpec::new(
            (0..d).map(|s| format!("s{s}")).collect(),
            vec![1.0 / d as f64; d],
            2,
            table.values().to_vec(),
            0,
        ).unwrap();
        let f1 = sample::random_potential(&mut rng, d, 2.0);
        let f2 = sample::random_potential(&mut rng, d, 2.0);
        let c1 = CylinderFunction::new(d, 1, f1.values().to_vec()).unwrap();
        let c2 = CylinderFunction::new(d, 1, f2.values().to_vec()).unwrap();
        let sum = CylinderFunction::new(
            d,
            1,
            f1.values().iter().zip(f2.values()).map(|(a, b)| a + b).collect(),
        ).unwrap();
        let l_sum = ruelle_apply(&spec, &sum);
        let l1 = ruelle_apply(&spec, &c1);
        let l2 = ruelle_apply(&spec, &c2);
        for w in enumerate_words(d, 1) {
            prop_assert!((l_sum.eval(&w) - l1.eval(&w) - l2.eval(&w)).abs() <= 1e-12);
        }
        // positivity: nonnegative input stays nonnegative
        let pos = CylinderFunction::new(d, 1, vec![0.3; d]).unwrap();
        for &v in ruelle_apply(&spec, &pos).table() {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn eigenprob_is_a_projective_probability(seed in 0u64..10_000, d in 2usize..4) {
        let mut rng = sample::rng_from_seed(seed);
        let table = sample::random_potential(&mut rng, d * d, 1.0);
        let spec = XySpec::new(
            (0..d).map(|s| format!("s{s}")).collect(),
            vec![1.0 / d as f64; d],
            2,
            table.values().to_vec(),
            0,
        ).unwrap();
        let fine = eigenprob(&spec, 3).unwrap();
        let total: f64 = fine.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-11);
        let coarse = eigenprob(&spec, 2).unwrap();
        for w in enumerate_words(d, 2) {
            let sum: f64 = (0..d).map(|a| {
                let mut wa = w.clone();
                wa.push(a);
                fine.mass(&wa)
            }).sum();
            prop_assert!((sum - coarse.mass(&w)).abs() <= 1e-12);
        }
    }

    #[test]
    fn disintegration_reconstructs_the_measure(seed in 0u64..10_000) {
        use haar_thermo::dyn_def::disintegrate;
        let mut rng = sample::rng_from_seed(seed);
        let (g, _) = sample::random_groupoid(&mut rng, 12, 4);
        let m = sample::random_probability(&mut rng, g.n_points());
        let dis = disintegrate(None, &m, &g).unwrap();
        prop_assert!(dis.identity_residual <= 1e-12);
        for c in g.classes() {
            let total: f64 = dis.conditionals[c.0].iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
        let _ = Measure::uniform(g.n_points());
    }
}
