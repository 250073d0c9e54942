//! Randomised invariants of utilities, frontiers, documents and the solver.

use proptest::prelude::*;

use netex_core::io::{generate_instance, parse_instance, serialize_instance, FamilyMix};
use netex_core::utility::SampleBox;
use netex_core::{payoff_profile, solve, verify_properties, SolverConfig, UtilitySpec};

fn family() -> impl Strategy<Value = FamilyMix> {
    prop_oneof![
        Just(FamilyMix::AdditivePower),
        Just(FamilyMix::Ces),
        Just(FamilyMix::ShiftedCobbDouglas),
        Just(FamilyMix::Mixed),
    ]
}

fn utility() -> impl Strategy<Value = UtilitySpec> {
    prop_oneof![
        (0.05..0.95f64, 0.05..0.95f64, 0.1..3.0f64).prop_map(|(alpha, beta, c)| UtilitySpec::AdditivePower {
            alpha,
            beta,
            c
        }),
        (0.05..0.95f64, 0.05..0.95f64).prop_map(|(rho, w)| UtilitySpec::Ces { rho, w }),
        (0.05..2.0f64, 0.05..2.0f64, 0.05..0.95f64).prop_map(|(a, b, theta)| UtilitySpec::ShiftedCobbDouglas {
            a,
            b,
            theta
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admitted_utilities_pass_the_property_check(spec in utility(), seed in any::<u64>()) {
        let report = verify_properties(&spec, SampleBox { own: (0.0, 2.0), other: (0.0, 2.0) }, 200, seed);
        prop_assert!(report.is_clean(), "{:?}", report.violations.first());
    }

    #[test]
    fn frontier_queries_agree(mix in family(), seed in any::<u64>(), fracs in prop::collection::vec(0.0..=1.0f64, 8)) {
        let inst = generate_instance(1, 1, 1.0, mix, seed).unwrap();
        prop_assume!(!inst.edges().is_empty());
        let f = inst.frontier(0);
        // Tightness holds to 1e-8 on the rational range. Towards the corners
        // of the possible set, utilities with infinite slope at zero resolve
        // payoffs more coarsely than one ulp of the exchange.
        let rx = f.rx_bounds();
        let mut qs: Vec<f64> = fracs.iter().map(|t| t * rx.v_max_i).collect();
        qs.sort_by(f64::total_cmp);
        let mut last = f64::INFINITY;
        for q in qs {
            let p = f.pareto_point(q).unwrap();
            prop_assert!(f.in_ex(p));
            prop_assert!((f.payoffs().buyer(p) - q).abs() <= 1e-8);
            let v = f.frontier_value(q).unwrap();
            prop_assert!((f.payoffs().seller(p) - v).abs() <= 1e-12);
            prop_assert!(v <= last + 1e-12);
            last = v;
            prop_assert!((f.frontier_value_ij(v).unwrap() - q).abs() <= 1e-6);
        }
    }

    #[test]
    fn frontier_is_monotone_on_the_possible_set(mix in family(), seed in any::<u64>(), fracs in prop::collection::vec(0.0..=1.0f64, 8)) {
        let inst = generate_instance(1, 1, 1.0, mix, seed).unwrap();
        prop_assume!(!inst.edges().is_empty());
        let f = inst.frontier(0);
        let ex = f.ex_bounds();
        let mut qs: Vec<f64> = fracs.iter().map(|t| ex.v_min_i + t * (ex.v_max_i - ex.v_min_i)).collect();
        qs.sort_by(f64::total_cmp);
        let values: Vec<f64> = qs.iter().map(|&q| f.frontier_value(q).unwrap()).collect();
        for (q, w) in qs.iter().zip(values.windows(2)) {
            prop_assert!(w[1] <= w[0] + 1e-12, "not decreasing after q = {}", q);
        }
        for &q in &qs {
            prop_assert!(f.in_ex(f.pareto_point(q).unwrap()));
        }
    }

    #[test]
    fn rq_path_stays_rational(mix in family(), seed in any::<u64>(), s in 0.0..=1.0f64) {
        let inst = generate_instance(1, 1, 1.0, mix, seed).unwrap();
        prop_assume!(!inst.edges().is_empty());
        let f = inst.frontier(0);
        let u = f.rq(s).unwrap();
        prop_assert!(u.v_i >= 0.0 && u.v_j >= -1e-12);
        prop_assert!((f.rq_param_of_payoff_i(u.v_i).unwrap() - s).abs() <= 1e-12);
        prop_assert!(f.in_rx(f.pareto_point(u.v_i).unwrap()));
    }

    #[test]
    fn canonical_documents_round_trip(mix in family(), seed in any::<u64>(), nb in 1..4usize, ns in 1..4usize) {
        let inst = generate_instance(nb, ns, 0.7, mix, seed).unwrap();
        let text = serialize_instance(&inst);
        let again = parse_instance(&text).unwrap();
        prop_assert_eq!(serialize_instance(&again), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solver_outcomes_are_certified(seed in any::<u64>(), seller_side in any::<bool>()) {
        let inst = generate_instance(2, 2, 0.75, FamilyMix::Mixed, seed).unwrap();
        let cfg = SolverConfig {
            propose_side: if seller_side { netex_core::Side::Seller } else { netex_core::Side::Buyer },
            ..SolverConfig::default()
        };
        let out = solve(&inst, &cfg).unwrap();
        prop_assert!(out.certificate.is_stable());
        prop_assert_eq!(payoff_profile(&inst, &out.profile), out.payoffs.clone());
        for &(k, ex) in &out.matching.matched {
            prop_assert!(inst.frontier(k).in_rx(ex));
        }
        prop_assert!(out.payoffs.iter().all(|&u| u >= -1e-12));
    }
}
