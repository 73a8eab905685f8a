//! Mean first-passage times of the modified chain.
//!
//! Downward passages decompose into unit steps,
//! `Eτ_{x→y} = Σ_{k=y}^{x-1} Eτ_{k+1→k}`, and each step is
//! `Eτ_{y+1→y} = S_{y+1}/α_{y+1}` with
//! `S_y = 1 + β_y/α_{y+1} + β_yβ_{y+1}/(α_{y+1}α_{y+2}) + …`.
//! For the logistic rates `S_y = F(μL/γ + y + 1, bL/γ)`.
//!
//! Exit from a window `[n₁, n₂]` around `n*` combines the downward passage
//! times with the harmonic function `ψ₂` (the scale function anchored at
//! `ψ₂(n*) = 0`, `ψ₂(n*+1) = 1`).

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, log_sub_exp, LogAccumulator, SignedLog};
use crate::special::{self, RegimeTag};
use crate::stationary::StationaryLaw;

/// Relative tolerance used for `S_y` series where callers do not choose one.
pub const DEFAULT_SERIES_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassageMethod {
    SeriesExact,
    HypergeomAsymptotic,
    LinearSolveOracle,
    MonteCarlo,
}

/// A mean passage time, analytic or estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageEstimate {
    pub log_mean_time: f64,
    pub method: PassageMethod,
    /// Standard error of the mean (linear scale); Monte Carlo only.
    pub stderr: Option<f64>,
    pub regime: Option<RegimeTag>,
}

impl PassageEstimate {
    pub fn exact(log_mean_time: f64) -> Self {
        PassageEstimate {
            log_mean_time,
            method: PassageMethod::SeriesExact,
            stderr: None,
            regime: None,
        }
    }

    pub fn asymptotic(log_mean_time: f64, regime: RegimeTag) -> Self {
        PassageEstimate {
            log_mean_time,
            method: PassageMethod::HypergeomAsymptotic,
            stderr: None,
            regime: Some(regime),
        }
    }

    pub fn oracle(mean_time: f64) -> Self {
        PassageEstimate {
            log_mean_time: mean_time.ln(),
            method: PassageMethod::LinearSolveOracle,
            stderr: None,
            regime: None,
        }
    }

    /// Monte-Carlo estimate; `stderr` must be positive.
    pub fn monte_carlo(mean: f64, stderr: f64) -> Result<Self> {
        if !(stderr > 0.0) {
            return Err(Error::domain(
                "PassageEstimate::monte_carlo",
                format!("stderr must be positive, got {stderr}"),
            ));
        }
        Ok(PassageEstimate {
            log_mean_time: mean.ln(),
            method: PassageMethod::MonteCarlo,
            stderr: Some(stderr),
            regime: None,
        })
    }

    pub fn mean_time(&self) -> f64 {
        self.log_mean_time.exp()
    }
}

fn analytic_preconditions(params: &ChainParams) -> Result<()> {
    params.require_modified()?;
    params.require_supercritical()
}

/// `(A, z)` with `S_y = F(A, z)`: `A = μL/γ + y + 1`, `z = bL/γ`.
pub fn hypergeom_arguments(params: &ChainParams, y: u64) -> (f64, f64) {
    let scale = params.l_f64() / params.gamma;
    (params.mu * scale + y as f64 + 1.0, params.b * scale)
}

/// `ln S_y` by direct summation of the rate-ratio series.
pub fn log_s(params: &ChainParams, y: u64, rel_tol: f64) -> Result<f64> {
    const OP: &str = "S_y";
    analytic_preconditions(params)?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::domain(OP, "rel_tol must lie in (0,1)"));
    }
    let ln_tol = rel_tol.ln();
    let mut acc = LogAccumulator::new();
    let mut log_term = 0.0;
    acc.push(0.0);
    for n in 0..special::MAX_SERIES_TERMS as u64 {
        let x = y + n;
        log_term += params.beta(x).ln() - params.alpha(x + 1).ln();
        acc.push(log_term);
        // Later ratios β_x/α_{x+1} = b/(μ + γ(x+1)/L) only shrink.
        let r = params.beta(x + 1) / params.alpha(x + 2);
        if r < 1.0 {
            let log_tail = log_term + r.ln() - (-r).ln_1p();
            if log_tail - acc.log_value() < ln_tol {
                return Ok(acc.log_value());
            }
        }
    }
    Err(Error::convergence(OP, format!("series for y={y} did not converge")))
}

/// Result of evaluating `S_y` both as a rate series and as `F(A, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub log_series: f64,
    pub log_hypergeom: f64,
    pub a: f64,
    pub z: f64,
}

impl SeriesCheck {
    pub fn rel_diff(&self) -> f64 {
        (self.log_series - self.log_hypergeom).abs() / self.log_series.abs().max(1e-300)
    }
}

/// `ln S_y` with the hypergeometric cross-check.
///
/// Errors if the two evaluations disagree by more than `1e-8` relative.
pub fn s_y(params: &ChainParams, y: u64, rel_tol: f64) -> Result<SeriesCheck> {
    let log_series = log_s(params, y, rel_tol)?;
    let (a, z) = hypergeom_arguments(params, y);
    let log_hypergeom = special::hypergeom_series(a, z, rel_tol)?.log_value;
    let check = SeriesCheck {
        log_series,
        log_hypergeom,
        a,
        z,
    };
    if check.rel_diff() > 1e-8 {
        return Err(Error::convergence(
            "S_y",
            format!(
                "series {log_series} and F({a}, {z}) = {log_hypergeom} disagree at y={y}"
            ),
        ));
    }
    Ok(check)
}

/// `ln S_y` for every `y` in `lo..=hi`, from one series at `hi` and the
/// backward recurrence `S_y = 1 + (β_y/α_{y+1}) S_{y+1}`.
#[derive(Debug, Clone)]
pub struct SProfile {
    lo: u64,
    log_s: Vec<f64>,
}

impl SProfile {
    pub fn new(params: &ChainParams, lo: u64, hi: u64) -> Result<Self> {
        if hi < lo {
            return Err(Error::domain("SProfile", "hi < lo"));
        }
        let mut log_s_vals = vec![0.0; (hi - lo + 1) as usize];
        let mut cur = log_s(params, hi, DEFAULT_SERIES_TOL)?;
        *log_s_vals.last_mut().unwrap() = cur;
        for y in (lo..hi).rev() {
            let log_r = params.beta(y).ln() - params.alpha(y + 1).ln();
            cur = log_add_exp(0.0, log_r + cur);
            log_s_vals[(y - lo) as usize] = cur;
        }
        Ok(SProfile {
            lo,
            log_s: log_s_vals,
        })
    }

    pub fn log_s(&self, y: u64) -> f64 {
        self.log_s[(y - self.lo) as usize]
    }
}

/// `Eτ_{y+1→y} = S_{y+1}/α_{y+1}`.
pub fn mean_step_time(params: &ChainParams, y: u64) -> Result<PassageEstimate> {
    analytic_preconditions(params)?;
    let log_s1 = log_s(params, y + 1, DEFAULT_SERIES_TOL)?;
    Ok(PassageEstimate::exact(log_s1 - params.alpha(y + 1).ln()))
}

/// `Eτ_{y+1→y}` with `S_{y+1}` from the large-`A` hypergeometric regimes.
pub fn mean_step_time_asymptotic(
    params: &ChainParams,
    y: u64,
    h_threshold: f64,
) -> Result<PassageEstimate> {
    analytic_preconditions(params)?;
    let (a, z) = hypergeom_arguments(params, y + 1);
    let f = special::hypergeom_asymptotic(a, z, h_threshold)?;
    Ok(PassageEstimate::asymptotic(
        f.log_value - params.alpha(y + 1).ln(),
        f.regime,
    ))
}

/// `Eτ_{x→y}` for `x > y`.
pub fn mean_passage(params: &ChainParams, x: u64, y: u64) -> Result<PassageEstimate> {
    analytic_preconditions(params)?;
    if x <= y {
        return Err(Error::domain(
            "mean_passage",
            format!("need x > y, got x={x}, y={y}"),
        ));
    }
    let profile = SProfile::new(params, y + 1, x)?;
    Ok(PassageEstimate::exact(log_passage_from_profile(
        params, &profile, x, y,
    )))
}

fn log_passage_from_profile(params: &ChainParams, profile: &SProfile, x: u64, y: u64) -> f64 {
    let mut acc = LogAccumulator::new();
    for k in (y + 1)..=x {
        acc.push(profile.log_s(k) - params.alpha(k).ln());
    }
    acc.log_value()
}

/// All downward passage times `Eτ_{x→y}` for `x ∈ y+1..=x_max`, as logs.
/// Entry `i` is `x = y + 1 + i`.
pub fn log_passage_profile(params: &ChainParams, y: u64, x_max: u64) -> Result<Vec<f64>> {
    analytic_preconditions(params)?;
    if x_max <= y {
        return Err(Error::domain("log_passage_profile", "need x_max > y"));
    }
    let profile = SProfile::new(params, y + 1, x_max)?;
    let mut acc = LogAccumulator::new();
    Ok(((y + 1)..=x_max)
        .map(|k| {
            acc.push(profile.log_s(k) - params.alpha(k).ln());
            acc.log_value()
        })
        .collect())
}

/// Mean time from `n*` to extinction-level 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageToZero {
    /// `Σ_{k=1}^{n*} S_k/α_k`.
    pub exact: PassageEstimate,
    /// `ln[(b/μ²) ln(b/(b-μ)) S₁]`; absent when `μ = 0`.
    pub log_asymptotic: Option<f64>,
}

pub fn mean_passage_to_zero(params: &ChainParams) -> Result<PassageToZero> {
    analytic_preconditions(params)?;
    let n_star = params.mode()?;
    if n_star == 0 {
        return Err(Error::domain("mean_passage_to_zero", "n* = 0"));
    }
    let profile = SProfile::new(params, 1, n_star)?;
    let exact = PassageEstimate::exact(log_passage_from_profile(params, &profile, n_star, 0));
    let log_asymptotic = (params.mu > 0.0).then(|| {
        let (b, mu) = (params.b, params.mu);
        (b / (mu * mu) * (b / (b - mu)).ln()).ln() + profile.log_s(1)
    });
    Ok(PassageToZero {
        exact,
        log_asymptotic,
    })
}

/// Harmonic function `ψ₂` with `ψ₂(n*) = 0`, `ψ₂(n*+1) = 1`.
///
/// Increments are `D(m) = ψ₂(m) - ψ₂(m-1)`, with `D(n*+1) = 1`,
/// `D(m+1) = (α_m/β_m) D(m)`.
pub fn psi2(params: &ChainParams, x: u64) -> Result<SignedLog> {
    let n_star = params.mode()?;
    let (lo, hi) = (x.min(n_star), x.max(n_star + 1));
    Ok(Psi2Profile::new(params, lo, hi)?.value(x))
}

/// `ψ₂` tabulated over a window containing `n*` and `n* + 1`.
#[derive(Debug, Clone)]
pub struct Psi2Profile {
    lo: u64,
    n_star: u64,
    values: Vec<SignedLog>,
}

impl Psi2Profile {
    pub fn new(params: &ChainParams, lo: u64, hi: u64) -> Result<Self> {
        params.require_supercritical()?;
        let n_star = params.mode()?;
        if n_star == 0 {
            return Err(Error::domain("psi2", "n* = 0 leaves no room below the anchor"));
        }
        if lo > n_star || hi < n_star + 1 {
            return Err(Error::domain("psi2", "window must contain n* and n*+1"));
        }
        let mut values = vec![SignedLog::ZERO; (hi - lo + 1) as usize];
        let idx = |x: u64| (x - lo) as usize;

        // Above: ψ₂(x) = Σ_{m=n*+1}^{x} D(m).
        let mut log_d = 0.0;
        let mut acc = LogAccumulator::new();
        for m in (n_star + 1)..=hi {
            if m > n_star + 1 {
                log_d += params.alpha(m - 1).ln() - params.beta(m - 1).ln();
            }
            acc.push(log_d);
            values[idx(m)] = SignedLog::positive(acc.log_value());
        }
        // Below: ψ₂(x) = -Σ_{m=x+1}^{n*} D(m), D(n*) = β_{n*}/α_{n*}.
        let mut log_d = 0.0;
        let mut acc = LogAccumulator::new();
        for m in (lo + 1..=n_star).rev() {
            log_d += params.beta(m).ln() - params.alpha(m).ln();
            acc.push(log_d);
            values[idx(m - 1)] = SignedLog::negative(acc.log_value());
        }
        Ok(Psi2Profile { lo, n_star, values })
    }

    pub fn value(&self, x: u64) -> SignedLog {
        if x == self.n_star {
            return SignedLog::ZERO;
        }
        self.values[(x - self.lo) as usize]
    }
}

/// `G₋(u) = -∫₀^u ln(1-x) dx = (1-u)ln(1-u) + u`.
pub fn g_minus(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        g_series(u)
    } else {
        (1.0 - u) * (-u).ln_1p() + u
    }
}

/// `G₊(u) = ∫₀^u ln(1+x) dx = (1+u)ln(1+u) - u`, which equals `G₋(-u)`.
pub fn g_plus(u: f64) -> f64 {
    g_minus(-u)
}

/// `Σ_{n≥2} v^n/(n(n-1))`, for small `|v|`.
fn g_series(v: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = v;
    for n in 2..12 {
        pow *= v;
        let n = n as f64;
        sum += pow / (n * (n - 1.0));
    }
    sum
}

/// Solves `G₋(δ₁c) = G₊(δ₂c)` for `δ₂`, `c = 1 - μ/b`, by bisection.
pub fn symmetric_delta2(params: &ChainParams, delta1: f64) -> Result<f64> {
    const OP: &str = "symmetric_delta2";
    params.require_supercritical()?;
    if !(delta1 > 0.0 && delta1 < 1.0) {
        return Err(Error::domain(OP, format!("delta1 must lie in (0,1), got {delta1}")));
    }
    let c = 1.0 - params.mu / params.b;
    if delta1 * c >= 1.0 {
        return Err(Error::domain(OP, "delta1·c >= 1 hits the log singularity"));
    }
    let target = g_minus(delta1 * c);
    let f = |d2: f64| g_plus(d2 * c) - target;
    let mut lo = 0.0;
    let mut hi = delta1.max(1e-300);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::convergence(OP, "could not bracket delta2"));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exit from `[n₁, n₂]` started at `n*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricExit {
    pub n_star: u64,
    pub n1: u64,
    pub n2: u64,
    pub delta1: f64,
    pub delta2: f64,
    /// `1 - (1 - μ/b)δ₁`.
    pub rho1: f64,
    /// `1/(1 + δ₂(1 - μ/b))`.
    pub rho2: f64,
    /// Exact `u(n*)` from the boundary-value construction.
    pub exact: PassageEstimate,
    /// `(b/γ)L ln ρ₁ + δ₁(1 - ln ρ₁)n* - ½ ln L`.
    pub log_asymptotic: f64,
    /// `ψ̃₁(n*) - ½ψ̃₁(n₂)`, the value with the symmetric constant `c₁`.
    pub symmetric_approx: SignedLog,
    /// Probability of leaving through `n₂`.
    pub prob_exit_upper: f64,
    pub log_psi2_n1_abs: f64,
    pub log_psi2_n2: f64,
}

/// Window `[n₁, n₂] = [round((1-δ₁)n*), round((1+δ₂)n*)]` with the
/// symmetric `δ₂`.
pub fn symmetric_window(params: &ChainParams, delta1: f64) -> Result<(u64, u64, f64)> {
    let delta2 = symmetric_delta2(params, delta1)?;
    let n_star = params.mode()? as f64;
    let n1 = ((1.0 - delta1) * n_star).round() as u64;
    let n2 = ((1.0 + delta2) * n_star).round() as u64;
    if n1 as f64 >= n_star || n2 as f64 <= n_star {
        return Err(Error::domain(
            "mean_exit_symmetric",
            format!("window [{n1}, {n2}] does not straddle n* = {n_star}; increase L"),
        ));
    }
    Ok((n1, n2, delta2))
}

/// Mean exit time from the symmetric window around `n*`.
///
/// `u = ψ̃₁ + c₁ + c₂ψ₂` with `ψ̃₁(x) = Eτ_{x→n₁}`; both constants come from
/// `u(n₁) = u(n₂) = 0`, which gives
/// `u(n*) = (1 - w)ψ̃₁(n*) - w·Eτ_{n₂→n*}` where
/// `w = |ψ₂(n₁)|/(ψ₂(n₂) + |ψ₂(n₁)|)` is the upper-exit probability.
pub fn mean_exit_symmetric(params: &ChainParams, delta1: f64) -> Result<SymmetricExit> {
    analytic_preconditions(params)?;
    let (n1, n2, delta2) = symmetric_window(params, delta1)?;
    let n_star = params.mode()?;
    let psi = Psi2Profile::new(params, n1, n2)?;
    let p1 = psi.value(n1);
    let p2 = psi.value(n2);
    let log_span = log_add_exp(p1.log_abs, p2.log_abs);
    let log_w = p1.log_abs - log_span;
    let log_one_minus_w = p2.log_abs - log_span;

    let profile = SProfile::new(params, n1 + 1, n2)?;
    let log_psi1_star = log_passage_from_profile(params, &profile, n_star, n1);
    let log_upper_leg = log_passage_from_profile(params, &profile, n2, n_star);
    let first = log_one_minus_w + log_psi1_star;
    let second = log_w + log_upper_leg;
    if second >= first {
        return Err(Error::convergence(
            "mean_exit_symmetric",
            "cancellation left a nonpositive exit time",
        ));
    }
    let exact = PassageEstimate::exact(log_sub_exp(first, second));

    let log_psi1_n2 = log_add_exp(log_psi1_star, log_upper_leg);
    let symmetric_approx = SignedLog::positive(log_psi1_star)
        .add(SignedLog::negative(log_psi1_n2 - std::f64::consts::LN_2));

    let c = 1.0 - params.mu / params.b;
    let rho1 = 1.0 - c * delta1;
    let rho2 = 1.0 / (1.0 + delta2 * c);
    let l = params.l_f64();
    let log_asymptotic = params.b / params.gamma * l * rho1.ln()
        + delta1 * (1.0 - rho1.ln()) * n_star as f64
        - 0.5 * l.ln();

    Ok(SymmetricExit {
        n_star,
        n1,
        n2,
        delta1,
        delta2,
        rho1,
        rho2,
        exact,
        log_asymptotic,
        symmetric_approx,
        prob_exit_upper: log_w.exp(),
        log_psi2_n1_abs: p1.log_abs,
        log_psi2_n2: p2.log_abs,
    })
}

/// Recurrence-time scale at `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTime {
    /// `-ln π(k)`, the heuristic scale `τ_k ~ 1/π(k)`.
    pub log_scale: f64,
    /// `ln` of the exact mean return time `1/(π(k)(α_k + β_k))`.
    pub log_mean_return: f64,
}

pub fn recurrence_time_estimate(params: &ChainParams, k: u64) -> Result<RecurrenceTime> {
    analytic_preconditions(params)?;
    let law = StationaryLaw::build(params, 1e-14)?;
    if k > law.n_max {
        return Err(Error::domain(
            "recurrence_time_estimate",
            format!("k={k} beyond truncation {}", law.n_max),
        ));
    }
    Ok(RecurrenceTime {
        log_scale: -law.log_pi(k),
        log_mean_return: law.log_mean_return_time(k),
    })
}
