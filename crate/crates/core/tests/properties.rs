//! Structural invariants under randomized inputs.

use proptest::prelude::*;

use logistic_chain::limits::{breiman_rate, fluid_solution};
use logistic_chain::logspace::{log_add_exp, log_sum_exp, SignedLog};
use logistic_chain::passage::{g_minus, g_plus, log_s, symmetric_delta2};
use logistic_chain::simulation::simulate;
use logistic_chain::special::{hypergeom_asymptotic, hypergeom_series, hypergeom_via_gamma, normal_cdf};
use logistic_chain::stationary::StationaryLaw;
use logistic_chain::trajectory_io::{decode, encode};
use logistic_chain::{ChainParams, StopRule, Variant};

fn params() -> impl Strategy<Value = ChainParams> {
    (0.2f64..4.0, 0.0f64..0.95, 0.1f64..3.0, 1u64..120).prop_map(|(b, frac, g, l)| {
        ChainParams::modified(b, b * frac, g, l).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detailed_balance_and_normalization(q in params()) {
        let law = StationaryLaw::build(&q, 1e-12).unwrap();
        let mass = law.total_mass();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        for x in 0..law.n_max.min(300) {
            let lhs = law.log_pi(x) + q.beta(x).ln();
            let rhs = law.log_pi(x + 1) + q.alpha(x + 1).ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn generator_kills_constants(q in params(), c in -5.0f64..5.0, x in 0u64..500) {
        prop_assert!(q.apply_generator(|_| c, x).abs() < 1e-9 * (1.0 + q.rates(x).total()));
    }

    #[test]
    fn mode_is_argmax(q in params()) {
        let law = StationaryLaw::build(&q, 1e-12).unwrap();
        prop_assert_eq!(law.argmax(), q.mode().unwrap());
    }

    #[test]
    fn s_recurrence(q in params(), y in 0u64..60) {
        let s0 = log_s(&q, y, 1e-15).unwrap();
        let s1 = log_s(&q, y + 1, 1e-15).unwrap();
        let rhs = log_add_exp(0.0, (q.beta(y) / q.alpha(y + 1)).ln() + s1);
        prop_assert!((s0 - rhs).abs() < 1e-10 * s0.max(1.0));
    }

    #[test]
    fn hypergeom_monotone_in_z(a in 1.5f64..200.0, z1 in 0.0f64..300.0, dz in 0.0f64..50.0) {
        let f1 = hypergeom_series(a, z1, 1e-15).unwrap().log_value;
        let f2 = hypergeom_series(a, z1 + dz, 1e-15).unwrap().log_value;
        prop_assert!(f2 >= f1 - 1e-12);
    }

    #[test]
    fn hypergeom_representations_agree(a in 3.0f64..100.0, frac in 0.01f64..3.0) {
        let z = a * frac;
        let s = hypergeom_series(a, z, 1e-16).unwrap().log_value;
        let g = hypergeom_via_gamma(a, z).unwrap().log_value;
        prop_assert!((s - g).abs() < 1e-8, "A={} z={}: {} vs {}", a, z, s, g);
    }

    #[test]
    fn hypergeom_contiguous_relation(a in 1.5f64..80.0, z in 0.0f64..150.0) {
        // F(A, z) = 1 + (z/A) F(A+1, z)
        let f = hypergeom_series(a, z, 1e-16).unwrap().log_value;
        let f1 = hypergeom_series(a + 1.0, z, 1e-16).unwrap().log_value;
        let rhs = log_add_exp(0.0, (z / a).ln() + f1);
        prop_assert!((f - rhs).abs() < 1e-12 * f.max(1.0));
    }

    #[test]
    fn normal_cdf_symmetry(h in -8.0f64..8.0) {
        prop_assert!((normal_cdf(h) + normal_cdf(-h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_tag_matches_h(a in 100.0f64..1e4, h in -12.0f64..12.0) {
        let z = (a + h * a.sqrt()).max(0.0);
        let v = hypergeom_asymptotic(a, z, 4.5).unwrap();
        prop_assert!(v.log_value.is_finite());
    }

    #[test]
    fn fluid_semigroup(z0 in 0.0f64..5.0, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let q = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let a = fluid_solution(&q, z0, t + s).unwrap().z;
        let b = fluid_solution(&q, fluid_solution(&q, z0, t).unwrap().z, s).unwrap().z;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn symmetric_delta2_balances(delta1 in 0.01f64..0.95) {
        let q = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let c = 0.5;
        let d2 = symmetric_delta2(&q, delta1).unwrap();
        prop_assert!((g_plus(d2 * c) - g_minus(delta1 * c)).abs() < 1e-12);
    }

    #[test]
    fn breiman_rate_decreasing(a in 0.2f64..4.0, da in 0.01f64..1.0) {
        prop_assert!(breiman_rate(a + da).unwrap() < breiman_rate(a).unwrap());
    }

    #[test]
    fn log_sum_matches_linear(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let lin: f64 = xs.iter().map(|x| x.exp()).sum();
        prop_assert!((log_sum_exp(&xs) - lin.ln()).abs() < 1e-12);
    }

    #[test]
    fn signed_log_arithmetic(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let s = SignedLog::from_f64(a).add(SignedLog::from_f64(b)).to_f64();
        prop_assert!((s - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0));
        let m = SignedLog::from_f64(a).mul(SignedLog::from_f64(b)).to_f64();
        prop_assert!((m - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
    }

    #[test]
    fn trajectory_frames_round_trip(seed in any::<u64>(), x0 in 0u64..40, t in 0.0f64..3.0, unmod in any::<bool>()) {
        let v = if unmod { Variant::Unmodified } else { Variant::Modified };
        let q = ChainParams::new(2.0, 1.0, 1.0, 20, v).unwrap();
        let traj = simulate(&q, x0, &StopRule::TimeLimit(t), seed).unwrap();
        prop_assert_eq!(decode(&encode(&traj)).unwrap(), traj);
    }

    #[test]
    fn simulation_paths_are_nearest_neighbour(seed in any::<u64>()) {
        let q = ChainParams::unmodified(2.0, 1.0, 1.0, 15).unwrap();
        let traj = simulate(&q, 3, &StopRule::TimeLimit(4.0), seed).unwrap();
        for w in traj.events.windows(2) {
            prop_assert!(w[1].time > w[0].time);
            prop_assert_eq!(w[1].state.abs_diff(w[0].state), 1);
        }
        prop_assert!(traj.end_time == 4.0 || traj.final_state() == 0);
    }
}
