//! Simulators against exact laws. Seeds are fixed; thresholds are loose
//! enough that a correct simulator fails with probability well under 1e-3.

use logistic_chain::lattice::{simulate_lattice_with, LatticeOptions, LatticeState};
use logistic_chain::limits::{clt_moments, fluctuation_samples};
use logistic_chain::passage::{mean_exit_symmetric, mean_step_time};
use logistic_chain::rng::run_replicates;
use logistic_chain::simulation::{
    occupation_measure, run_chain, sample_first_passage, simulate, OccupationAccumulator, DEFAULT_EVENT_CAP,
};
use logistic_chain::stationary::StationaryLaw;
use logistic_chain::stats::{chi_square_two_sample, histogram, ks_pvalue, ks_statistic_exponential, total_variation};
use logistic_chain::{ChainParams, Error, StopRule, Variant};

#[test]
fn yule_process_mean_growth() {
    // Pure birth at rate b·x: E N(t) = x0 e^{bt}.
    let q = ChainParams::exploratory(1.0, 0.0, 0.0, 1, Variant::Unmodified).unwrap();
    let (x0, t) = (5u64, 1.5);
    let n = 20_000;
    let finals = run_replicates(n, 17, None, |_, rng| {
        run_chain(&q, x0, &StopRule::TimeLimit(t), rng, DEFAULT_EVENT_CAP, |_, _| {}).unwrap().final_state as f64
    })
    .unwrap();
    let mean = finals.iter().sum::<f64>() / n as f64;
    let expect = x0 as f64 * t.exp();
    // Var N(t) = x0 e^{bt}(e^{bt} − 1)
    let se = (expect * (t.exp() - 1.0) / n as f64).sqrt();
    assert!((mean - expect).abs() < 4.0 * se, "{mean} vs {expect}");
}

#[test]
fn holding_times_are_exponential() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 30).unwrap();
    for x in [1u64, 30, 55] {
        let s = sample_first_passage(&q, x, &[x - 1, x + 1], 10_000, 100 + x, None, DEFAULT_EVENT_CAP).unwrap();
        let d = ks_statistic_exponential(&s.times, q.rates(x).total());
        assert!(ks_pvalue(d, s.times.len()) > 1e-3, "x={x}");
    }
}

#[test]
fn step_time_matches_series() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 30).unwrap();
    for y in [10u64, 29, 40] {
        let s = sample_first_passage(&q, y + 1, &[y], 10_000, 7 + y, None, DEFAULT_EVENT_CAP).unwrap();
        let exact = mean_step_time(&q, y).unwrap().mean_time();
        assert!((s.mean - exact).abs() < 4.0 * s.stderr, "y={y}: {} ± {} vs {exact}", s.mean, s.stderr);
    }
}

#[test]
fn exit_time_matches_exact() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 50).unwrap();
    let e = mean_exit_symmetric(&q, 0.5).unwrap();
    let s = sample_first_passage(&q, e.n_star, &[e.n1, e.n2], 4_000, 3, None, DEFAULT_EVENT_CAP).unwrap();
    assert!((s.mean - e.exact.mean_time()).abs() < 4.0 * s.stderr);
    let frac = s.fraction_hitting(e.n2);
    let se = (e.prob_exit_upper * (1.0 - e.prob_exit_upper) / 4_000.0).sqrt();
    assert!((frac - e.prob_exit_upper).abs() < 4.0 * se);
}

#[test]
fn occupation_measure_converges() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 50).unwrap();
    let law = StationaryLaw::build(&q, 1e-15).unwrap();
    let run = |seed: u64| {
        let traj = simulate(&q, 50, &StopRule::TimeLimit(1e4), seed).unwrap();
        occupation_measure(&traj, 100.0).unwrap()
    };
    let (a, b) = (run(1), run(2));
    assert!(law.total_variation(&a) < 0.05);
    assert!(total_variation(&a, &b) < 0.06);

    // Longer horizon via the streaming accumulator.
    let mut acc = OccupationAccumulator::new(50, 100.0);
    let mut rng = logistic_chain::rng::stream_rng(5, 0);
    run_chain(&q, 50, &StopRule::TimeLimit(1e5), &mut rng, DEFAULT_EVENT_CAP, |t, x| acc.observe(t, x)).unwrap();
    assert!(law.total_variation(&acc.finish(1e5).unwrap()) < 0.02);
}

#[test]
fn lattice_total_matches_chain() {
    let q = ChainParams::unmodified(2.0, 1.0, 1.0, 10).unwrap();
    let n = 5_000;
    let opts = LatticeOptions::default();
    let lat = run_replicates(n, 21, None, |_, rng| {
        simulate_lattice_with(&q, LatticeState::spread(10, 20), 5.0, 21, rng, &opts).unwrap().final_state.total
    })
    .unwrap();
    let chain = run_replicates(n, 22, None, |_, rng| {
        run_chain(&q, 20, &StopRule::TimeLimit(5.0), rng, DEFAULT_EVENT_CAP, |_, _| {}).unwrap().final_state
    })
    .unwrap();
    let t = chi_square_two_sample(&histogram(lat), &histogram(chain), 20).unwrap();
    assert!(t.p_value > 1e-3, "{t:?}");
}

#[test]
fn fluctuations_away_from_equilibrium() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 100).unwrap();
    let reps = 3_000;
    let fl = fluctuation_samples(&q, 10_000, 0.5, 1.0, &[1.0], reps, 8, None).unwrap();
    let th = clt_moments(&q, 0.5, fl.zeta0, 1.0, 1e-10).unwrap();
    let emp = fl.empirical(0);
    let se = (emp.variance / reps as f64).sqrt();
    assert!((emp.mean - th.mean).abs() < 4.0 * se, "{emp:?} vs {th:?}");
    assert!((emp.variance / th.variance - 1.0).abs() < 0.12, "{emp:?} vs {th:?}");
}

#[test]
fn results_independent_of_thread_count() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 30).unwrap();
    let a = sample_first_passage(&q, 30, &[20, 40], 200, 99, Some(1), DEFAULT_EVENT_CAP).unwrap();
    let b = sample_first_passage(&q, 30, &[20, 40], 200, 99, Some(4), DEFAULT_EVENT_CAP).unwrap();
    assert_eq!(a, b);
}

#[test]
fn event_cap_is_enforced() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 100).unwrap();
    let r = sample_first_passage(&q, 100, &[0], 1, 1, None, 1_000);
    assert!(matches!(r, Err(Error::EventCapExceeded { cap: 1_000 })));
}

#[test]
fn unreachable_target_is_an_error() {
    // The unmodified chain is absorbed at 0 before reaching 50 from 1 often;
    // with b = 0 it always is.
    let q = ChainParams::exploratory(0.0, 1.0, 1.0, 10, Variant::Unmodified).unwrap();
    assert!(sample_first_passage(&q, 3, &[50], 5, 1, None, 1_000).is_err());
}
