//! Fluid limit, Gaussian fluctuations, the equilibrium OU process and its
//! exit rates.
//!
//! Densities are `Z = N/L`; fluctuations are `ζ = √L (Z_L − Z)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, Variant};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::rng::run_replicates;
use crate::simulation::{run_chain, StopReason, StopRule, DEFAULT_EVENT_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub z: f64,
    pub z_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn z_star(params: &ChainParams) -> f64 {
    (params.b - params.mu) / params.gamma
}

/// Drift `F(z) = bz − μz − γz²`.
pub fn drift_f(params: &ChainParams, z: f64) -> f64 {
    params.gamma * z * (z_star(params) - z)
}

/// Infinitesimal variance `G(z) = (b+μ)z + γz²`.
pub fn variance_g(params: &ChainParams, z: f64) -> f64 {
    (params.b + params.mu) * z + params.gamma * z * z
}

/// `F′(z) = b − μ − 2γz`.
pub fn drift_derivative(params: &ChainParams, z: f64) -> f64 {
    params.b - params.mu - 2.0 * params.gamma * z
}

fn check_fluid_args(op: &'static str, z0: f64, t: f64) -> Result<()> {
    if !(z0 >= 0.0 && z0.is_finite()) {
        return Err(Error::domain(op, format!("z0 must be finite and >= 0, got {z0}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(op, format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn flow(params: &ChainParams, z0: f64, t: f64) -> f64 {
    let zs = z_star(params);
    if zs == 0.0 {
        return z0 / (1.0 + params.gamma * z0 * t);
    }
    let e = (-params.gamma * zs * t).exp();
    let den = z0 + (zs - z0) * e;
    if den == 0.0 {
        0.0
    } else {
        zs * z0 / den
    }
}

/// Logistic flow `Z(t) = z* z0 / (z0 + (z* − z0) e^{−γ z* t})`.
pub fn fluid_solution(params: &ChainParams, z0: f64, t: f64) -> Result<FluidState> {
    check_fluid_args("fluid_solution", z0, t)?;
    Ok(FluidState {
        z: flow(params, z0, t),
        z_star: z_star(params),
    })
}

fn flow_derivative_raw(params: &ChainParams, z0: f64, t: f64) -> f64 {
    let zs = z_star(params);
    if zs == 0.0 {
        let d = 1.0 + params.gamma * z0 * t;
        return 1.0 / (d * d);
    }
    let e = (-params.gamma * zs * t).exp();
    let den = z0 + (zs - z0) * e;
    zs * zs * e / (den * den)
}

/// `L_t = ∂Z(t, z0)/∂z0 = exp ∫₀ᵗ F′(Z(u)) du`, in closed form.
pub fn flow_derivative(params: &ChainParams, z0: f64, t: f64) -> Result<f64> {
    check_fluid_args("flow_derivative", z0, t)?;
    Ok(flow_derivative_raw(params, z0, t))
}

/// `exp ∫₀ᵗ F′(Z(u)) du` by quadrature; a cross-check of [`flow_derivative`].
pub fn flow_derivative_quadrature(params: &ChainParams, z0: f64, t: f64, tol: f64) -> Result<f64> {
    check_fluid_args("flow_derivative_quadrature", z0, t)?;
    let i = integrate(|u| drift_derivative(params, flow(params, z0, u)), 0.0, t, tol)?;
    Ok(i.exp())
}

/// Mean `ζ₀ L_t` and variance `L_t² ∫₀ᵗ L_u^{−2} G(Z(u)) du` of the Gaussian
/// fluctuation limit.
///
/// The integrand is evaluated as `(L_t/L_u)² G(Z(u))` with `L_t/L_u` the flow
/// derivative from `Z(u)` over `t − u`, which stays bounded for large `t`.
pub fn clt_moments(params: &ChainParams, z0: f64, zeta0: f64, t: f64, quad_tol: f64) -> Result<GaussMoments> {
    const OP: &str = "clt_moments";
    check_fluid_args(OP, z0, t)?;
    if z0 <= 0.0 {
        return Err(Error::domain(OP, "z0 must be positive"));
    }
    let lt = flow_derivative_raw(params, z0, t);
    let integrand = |u: f64| {
        let zu = flow(params, z0, u);
        let r = flow_derivative_raw(params, zu, t - u);
        r * r * variance_g(params, zu)
    };
    let variance = integrate(integrand, 0.0, t, quad_tol)
        .map_err(|e| Error::convergence(OP, e.to_string()))?
        .max(0.0);
    Ok(GaussMoments {
        mean: zeta0 * lt,
        variance,
    })
}

/// Ornstein–Uhlenbeck process `dζ = qζ dt + √a dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    pub q: f64,
    pub a: f64,
}

impl OuProcess {
    /// `dX = −X dt + √2 dW`, the normalization of the exit-rate polynomial.
    pub fn standard() -> Self {
        Self { q: -1.0, a: 2.0 }
    }

    pub fn stationary_variance(&self) -> f64 {
        self.a / (-2.0 * self.q)
    }

    /// Factor mapping standardized time to process time: `t = t_std / |q|`.
    pub fn time_scale(&self) -> f64 {
        -self.q
    }

    /// Standard deviation of the stationary law; `ζ = space_scale · X`.
    pub fn space_scale(&self) -> f64 {
        self.stationary_variance().sqrt()
    }

    pub fn moments(&self, zeta0: f64, t: f64) -> GaussMoments {
        GaussMoments {
            mean: zeta0 * (self.q * t).exp(),
            variance: self.stationary_variance() * -(2.0 * self.q * t).exp_m1(),
        }
    }

    /// Exact transition over `dt`.
    pub fn step<R: Rng + ?Sized>(&self, x: f64, dt: f64, rng: &mut R) -> f64 {
        let m = self.moments(x, dt);
        let z: f64 = StandardNormal.sample(rng);
        m.mean + m.variance.sqrt() * z
    }
}

/// Equilibrium OU parameters `q = μ − b`, `a = 2b(b − μ)/γ`.
pub fn ou_params(params: &ChainParams) -> Result<OuProcess> {
    params.require_supercritical()?;
    Ok(OuProcess {
        q: params.mu - params.b,
        a: 2.0 * params.b * (params.b - params.mu) / params.gamma,
    })
}

/// Coefficients in `u = A²` of `Σ_{k=0}^m (−2u)^k m! / ((2k)! (m−k)!)`.
pub fn breiman_polynomial_coeffs(m: u32) -> Vec<f64> {
    let mut c = Vec::with_capacity(m as usize + 1);
    c.push(1.0);
    for k in 1..=m {
        let kf = k as f64;
        let prev = c[k as usize - 1];
        c.push(prev * -2.0 * (m - k + 1) as f64 / ((2.0 * kf) * (2.0 * kf - 1.0)));
    }
    c
}

fn horner(c: &[f64], u: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &ck in c.iter().rev() {
        dp = dp * u + p;
        p = p * u + ck;
    }
    (p, dp)
}

/// Half-width `A` of the interval whose OU exit rate is `ν(A) = m`: the
/// square root of the smallest positive root of the polynomial above.
pub fn breiman_nu(m: u32) -> Result<f64> {
    const OP: &str = "breiman_nu";
    if m == 0 {
        return Err(Error::domain(OP, "m must be >= 1"));
    }
    let c = breiman_polynomial_coeffs(m);
    // The smallest root sits near π²/(8m); scan well below it.
    let step = 1.0 / (32.0 * m as f64);
    let mut lo = 0.0;
    let mut hi = step;
    while horner(&c, hi).0 > 0.0 {
        lo = hi;
        hi += step;
        if hi > 4.0 {
            return Err(Error::convergence(OP, format!("no positive root for m={m}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if horner(&c, mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (p, dp) = horner(&c, u);
        if dp == 0.0 {
            break;
        }
        let next = u - p / dp;
        if !(next >= lo && next <= hi) {
            break;
        }
        u = next;
    }
    Ok(u.sqrt())
}

/// Kummer's `M(−ν, ½, x)`.
fn kummer_neg_half(nu: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (k - nu) / (k + 0.5) * x / (k + 1.0);
        sum += term;
        k += 1.0;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > nu + x {
            return sum;
        }
        if k > 10_000.0 {
            return sum;
        }
    }
}

/// Exit rate `ν(A)` of the standardized OU from `(−A, A)`: the smallest
/// `ν > 0` with `M(−ν, ½, A²/2) = 0`. At integer `ν` this inverts
/// [`breiman_nu`]; survival decays as `e^{−2ν t}`.
pub fn breiman_rate(a_half_width: f64) -> Result<f64> {
    const OP: &str = "breiman_rate";
    if !(a_half_width > 0.0 && a_half_width <= 8.0) {
        return Err(Error::domain(OP, format!("A must lie in (0, 8], got {a_half_width}")));
    }
    let x = 0.5 * a_half_width * a_half_width;
    let f = |nu: f64| kummer_neg_half(nu, x);
    let mut lo = 0.0;
    let mut hi = 1e-12;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 1.1;
        if hi > 1e6 {
            return Err(Error::convergence(OP, "no sign change"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Survival table of the OU exit time and the fitted tail slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuTailCheck {
    pub threshold: f64,
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub n_reps: u64,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
}

/// Exit time of `ou` started at 0 from `(−A, A)`, censored at `t_max`.
///
/// Exact Gaussian transitions on a grid of width `dt`, plus a Brownian-bridge
/// test for crossings between grid points.
pub fn ou_exit_time<R: Rng + ?Sized>(ou: &OuProcess, threshold: f64, dt: f64, t_max: f64, rng: &mut R) -> f64 {
    let mut x = 0.0;
    let mut t = 0.0;
    let two_over_adt = 2.0 / (ou.a * dt);
    while t < t_max {
        let y = ou.step(x, dt, rng);
        t += dt;
        if y.abs() >= threshold {
            return t;
        }
        let p_up = (-(threshold - x) * (threshold - y) * two_over_adt).exp();
        let p_down = (-(threshold + x) * (threshold + y) * two_over_adt).exp();
        let u: f64 = rng.random();
        if u < p_up + p_down - p_up * p_down {
            return t - 0.5 * dt;
        }
        x = y;
    }
    f64::INFINITY
}

/// Least-squares slope of `ln S(t)` over grid points with `t ≥ t_min` and
/// at least `min_survivors` surviving paths.
pub fn fit_tail_slope(times: &[f64], survival: &[f64], n_reps: u64, t_min: f64, min_survivors: u64) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(survival)
        .filter(|(&t, &s)| t >= t_min && s * n_reps as f64 >= min_survivors as f64)
        .map(|(&t, &s)| (t, s.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(Error::EmptyWindow(format!(
            "tail fit needs two grid points with t >= {t_min} and >= {min_survivors} survivors"
        )));
    }
    Ok(crate::stats::ols_slope(&x, &y))
}

/// Simulates the chain's equilibrium OU from 0 until it leaves `(−A s, A s)`,
/// `s` the stationary standard deviation, and compares the tail slope of
/// `P{τ > t}` with `−2 ν(A) |q|`. `A` is in standardized units, so at
/// `A = breiman_nu(m)` the predicted slope is `−2m|q|`.
pub fn ou_exit_tail_check(
    params: &ChainParams,
    threshold: f64,
    t_grid: &[f64],
    n_reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<OuTailCheck> {
    const OP: &str = "ou_exit_tail_check";
    if !(threshold > 0.0) {
        return Err(Error::domain(OP, "threshold must be positive"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] < 0.0 {
        return Err(Error::domain(OP, "t_grid must be nonempty, nonnegative and increasing"));
    }
    let ou = ou_params(params)?;
    let dt = 1.0 / ou.time_scale() / 100.0;
    let t_max = *t_grid.last().unwrap();
    let level = threshold * ou.space_scale();
    let taus = run_replicates(n_reps, seed, threads, |_, rng| ou_exit_time(&ou, level, dt, t_max, rng))?;
    let survival: Vec<f64> = t_grid
        .iter()
        .map(|&t| taus.iter().filter(|&&tau| tau > t).count() as f64 / n_reps as f64)
        .collect();
    let nu = breiman_rate(threshold)?;
    let t_min = t_grid[t_grid.len() / 4];
    let fitted_slope = fit_tail_slope(t_grid, &survival, n_reps, t_min, 100)?;
    Ok(OuTailCheck {
        threshold,
        times: t_grid.to_vec(),
        survival,
        n_reps,
        fitted_slope,
        predicted_slope: -2.0 * nu * ou.time_scale(),
    })
}

fn unmodified(params: &ChainParams, l: u64) -> ChainParams {
    params.with_variant(Variant::Unmodified).with_size(l)
}

/// `sup_{t ≤ T} |N(t)/L − Z(t)|` along one run of the unmodified chain from
/// `N(0) = round(L z0)`. `Z` is monotone between jumps, so the supremum is
/// attained at jump times.
pub fn lln_sup_error<R: Rng + ?Sized>(params: &ChainParams, l: u64, z0: f64, t_end: f64, rng: &mut R) -> Result<f64> {
    let p = unmodified(params, l);
    let lf = l as f64;
    let n0 = (lf * z0).round() as u64;
    let z_init = n0 as f64 / lf;
    let mut sup = (z_init - z0).abs();
    let mut prev = z_init;
    run_chain(&p, n0, &StopRule::TimeLimit(t_end), rng, DEFAULT_EVENT_CAP, |t, x| {
        let z = flow(&p, z0, t);
        let next = x as f64 / lf;
        sup = sup.max((prev - z).abs()).max((next - z).abs());
        prev = next;
    })?;
    sup = sup.max((prev - flow(&p, z0, t_end)).abs());
    Ok(sup)
}

/// Median over `n_seeds` replicates of [`lln_sup_error`].
pub fn lln_sup_error_median(
    params: &ChainParams,
    l: u64,
    z0: f64,
    t_end: f64,
    n_seeds: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<f64> {
    let errs = run_replicates(n_seeds, seed, threads, |_, rng| lln_sup_error(params, l, z0, t_end, rng))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::stats::median(&errs))
}

/// Samples of `√L (N(t)/L − Z(t))` on a time grid, unmodified chain from
/// `N(0) = round(L z0 + ζ₀ √L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSamples {
    pub l: u64,
    pub z0: f64,
    /// Realized `√L (N(0)/L − z0)` after rounding.
    pub zeta0: f64,
    pub times: Vec<f64>,
    /// `samples[i][r]`: replicate `r` at `times[i]`.
    pub samples: Vec<Vec<f64>>,
}

impl FluctuationSamples {
    pub fn empirical(&self, i: usize) -> GaussMoments {
        let xs = &self.samples[i];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        GaussMoments { mean, variance }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn fluctuation_samples(
    params: &ChainParams,
    l: u64,
    z0: f64,
    zeta0: f64,
    times: &[f64],
    n_reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<FluctuationSamples> {
    const OP: &str = "fluctuation_samples";
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain(OP, "times must be nonnegative and nondecreasing"));
    }
    let p = unmodified(params, l);
    let lf = l as f64;
    let sl = lf.sqrt();
    let n0 = (lf * z0 + zeta0 * sl).round().max(0.0) as u64;
    let fluid: Vec<f64> = times.iter().map(|&t| flow(&p, z0, t)).collect();
    let runs = run_replicates(n_reps, seed, threads, |_, rng| -> Result<Vec<f64>> {
        let mut x = n0;
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for (&ti, &zi) in times.iter().zip(&fluid) {
            if ti > t {
                let s = run_chain(&p, x, &StopRule::TimeLimit(ti - t), rng, DEFAULT_EVENT_CAP, |_, _| {})?;
                debug_assert!(matches!(s.stop_reason, StopReason::TimeLimit | StopReason::Absorbed));
                x = s.final_state;
                t = ti;
            }
            out.push(sl * (x as f64 / lf - zi));
        }
        Ok(out)
    })?;
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let samples = (0..times.len()).map(|i| runs.iter().map(|r| r[i]).collect()).collect();
    Ok(FluctuationSamples {
        l,
        z0,
        zeta0: sl * (n0 as f64 / lf - z0),
        times: times.to_vec(),
        samples,
    })
}
