//! Analytic results against independent references: exact rational sums,
//! quadrature, ODE integration and dense linear solves.

use num_bigint::BigInt;
use num_rational::BigRational;

use logistic_chain::limits::{clt_moments, fluid_solution, variance_g};
use logistic_chain::oracles::{adaptive_simpson, generator_null_vector, hitting_times_down, interval_exit, rk45};
use logistic_chain::passage::{mean_exit_symmetric, mean_passage, mean_passage_to_zero, mean_step_time, s_y};
use logistic_chain::special::{
    hypergeom_series, hypergeom_via_gamma, log_incomplete_gamma_lower, log_incomplete_gamma_upper, normal_cdf,
};
use logistic_chain::stationary::{euler_maclaurin_log_product, ld_f, StationaryLaw};
use logistic_chain::ChainParams;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn hypergeom_matches_rational_sum() {
    // F(10, 7) = Σ 7ⁿ / (10)_n, 60 terms in exact arithmetic.
    let z = BigRational::from_integer(BigInt::from(7));
    let mut term = BigRational::from_integer(BigInt::from(1));
    let mut sum = term.clone();
    for n in 0..59 {
        term = term * &z / BigRational::from_integer(BigInt::from(10 + n));
        sum += &term;
    }
    let exact = sum.numer().to_string().parse::<f64>().unwrap() / sum.denom().to_string().parse::<f64>().unwrap();
    let v = hypergeom_series(10.0, 7.0, 1e-16).unwrap().log_value.exp();
    assert!(rel(v, exact) < 1e-14, "{v} vs {exact}");
    let g = hypergeom_via_gamma(10.0, 7.0).unwrap().log_value.exp();
    assert!(rel(g, exact) < 1e-11, "{g} vs {exact}");
}

#[test]
fn incomplete_gamma_matches_quadrature() {
    let (a, z) = (3.5f64, 2.2f64);
    let q = adaptive_simpson(|t| t.powf(a - 1.0) * (-t).exp(), 0.0, z, 1e-14);
    let v = log_incomplete_gamma_lower(a, z).unwrap().exp();
    assert!(rel(v, q) < 1e-10, "{v} vs {q}");
    // Upper tail on a truncated range; the remainder beyond 80 is below 1e-30.
    let q = adaptive_simpson(|t| t.powf(a - 1.0) * (-t).exp(), 9.0, 80.0, 1e-16);
    let v = log_incomplete_gamma_upper(a, 9.0).unwrap().exp();
    assert!(rel(v, q) < 1e-9, "{v} vs {q}");
}

#[test]
fn normal_cdf_matches_quadrature() {
    let q = 0.5 + adaptive_simpson(|x| (-x * x / 2.0).exp(), 0.0, 1.0, 1e-15) / (2.0 * std::f64::consts::PI).sqrt();
    assert!((normal_cdf(1.0) - q).abs() < 1e-13, "{} vs {q}", normal_cdf(1.0));
    assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
}

#[test]
fn ld_f_matches_quadrature() {
    let q = adaptive_simpson(|x| x.ln_1p(), 0.0, 1.0, 1e-15);
    assert!((ld_f(1.0) - q).abs() < 1e-13);
    assert!((ld_f(1.0) - 0.386_294_361_119_890_6).abs() < 1e-15);
}

#[test]
fn euler_maclaurin_close_to_direct_sum() {
    let (r, omega) = (10_000u64, 1e-4);
    let direct: f64 = (0..=r).map(|k| (omega * k as f64).ln_1p()).sum();
    assert!((euler_maclaurin_log_product(r, omega) - direct).abs() < 10.0 * omega);
}

#[test]
fn stationary_law_is_generator_null_vector() {
    for &(b, mu, g) in &[(2.0, 1.0, 1.0), (1.5, 0.5, 2.0), (3.0, 1.0, 0.5)] {
        for l in [5u64, 20, 60, 200] {
            let q = ChainParams::modified(b, mu, g, l).unwrap();
            let law = StationaryLaw::build(&q, 1e-15).unwrap();
            if law.n_max > 900 {
                continue;
            }
            let null = generator_null_vector(&q, law.n_max).unwrap();
            assert!(law.total_variation(&null) < 1e-10, "({b},{mu},{g}) L={l}");
        }
    }
}

#[test]
fn passage_times_match_linear_solve() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 40).unwrap();
    let law = StationaryLaw::build(&q, 1e-16).unwrap();
    let h = hitting_times_down(&q, 10, law.n_max + 30).unwrap();
    for x in [11u64, 25, 40, 70] {
        let a = mean_passage(&q, x, 10).unwrap().mean_time();
        assert!(rel(a, h[(x - 11) as usize]) < 1e-9, "x={x}");
    }
    for y in [0u64, 5, 39, 60] {
        let h = hitting_times_down(&q, y, law.n_max + 30).unwrap();
        assert!(rel(mean_step_time(&q, y).unwrap().mean_time(), h[0]) < 1e-9, "y={y}");
    }
    let h0 = hitting_times_down(&q, 0, law.n_max + 30).unwrap();
    let z = mean_passage_to_zero(&q).unwrap();
    assert!(rel(z.exact.mean_time(), h0[(q.mode().unwrap() - 1) as usize]) < 1e-9);
}

#[test]
fn s_series_identity_holds_with_shifted_index() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 50).unwrap();
    let c = s_y(&q, 3, 1e-15).unwrap();
    assert!(c.rel_diff() < 1e-8);
    assert!((c.log_series - 16.2571).abs() < 1e-3);
}

#[test]
fn exit_time_matches_interval_solve() {
    for l in [20u64, 50, 120] {
        let q = ChainParams::modified(2.0, 1.0, 1.0, l).unwrap();
        let e = mean_exit_symmetric(&q, 0.5).unwrap();
        let o = interval_exit(&q, e.n1, e.n2).unwrap();
        assert!(rel(e.exact.mean_time(), o.mean_time_from(e.n_star)) < 1e-8, "L={l}");
        assert!(rel(e.prob_exit_upper, o.prob_upper_from(e.n_star)) < 1e-8, "L={l}");
    }
}

#[test]
fn fluid_solution_matches_ode_integration() {
    let q = ChainParams::modified(2.0, 1.0, 1.0, 100).unwrap();
    let ode = rk45(|_, z| q.gamma * z * (1.0 - z), 0.5, 0.0, 1.0, 1e-13).unwrap();
    let closed = fluid_solution(&q, 0.5, 1.0).unwrap().z;
    assert!((ode - closed).abs() < 1e-8);
}

#[test]
fn clt_variance_matches_ode_for_second_moment() {
    // d Var/dt = 2F′(Z)Var + G(Z), integrated jointly with Z.
    let q = ChainParams::modified(2.0, 1.0, 1.0, 100).unwrap();
    let (z0, t_end) = (0.5, 1.0);
    let steps = 4000;
    let h = t_end / steps as f64;
    let mut var = 0.0;
    for i in 0..steps {
        let t0 = i as f64 * h;
        var = rk45(
            |t, v| {
                let z = fluid_solution(&q, z0, t).unwrap().z;
                2.0 * (q.b - q.mu - 2.0 * q.gamma * z) * v + variance_g(&q, z)
            },
            var,
            t0,
            t0 + h,
            1e-13,
        )
        .unwrap();
    }
    let m = clt_moments(&q, z0, 1.0, t_end, 1e-12).unwrap();
    assert!(rel(m.variance, var) < 1e-8, "{} vs {var}", m.variance);
}
