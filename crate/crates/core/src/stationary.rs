//! Stationary law of the modified chain and its Gaussian and large-deviation
//! approximations.
//!
//! The stationary law is the product form
//! `π(x) ∝ β_0 ⋯ β_{x-1} / (α_1 ⋯ α_x)`, kept as log-weights. At `L = 10⁵`
//! the weights span tens of thousands of orders of magnitude.

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, KahanSum};

/// Truncated stationary law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryLaw {
    pub params: ChainParams,
    /// Largest state kept.
    pub n_max: u64,
    /// `ln` of the unnormalized weights on `0..=n_max`, with weight 1 at 0.
    pub log_weights: Vec<f64>,
    /// `ln` of the sum of the kept weights.
    pub log_norm: f64,
    /// Upper bound on the neglected mass beyond `n_max`, relative to the
    /// kept mass.
    pub tail_bound: f64,
}

/// `ln` of the unnormalized stationary weight `β_0⋯β_{x-1}/(α_1⋯α_x)`.
pub fn log_stationary_weight(params: &ChainParams, x: u64) -> Result<f64> {
    params.require_modified()?;
    params.require_supercritical()?;
    let mut acc = KahanSum::default();
    for j in 0..x {
        acc.add(params.beta(j).ln() - params.alpha(j + 1).ln());
    }
    Ok(acc.value())
}

impl StationaryLaw {
    /// Builds the law on `0..=n_max`.
    ///
    /// `n_max` is the smallest state `≥ max(2n*, 1)` where the one-step ratio
    /// `β_x/α_{x+1}` is below ½, extended until the geometric bound on the
    /// remaining tail is under `tail_tol`. The ratio decreases in `x`, so
    /// `w(n_max)·r/(1-r)` bounds everything beyond `n_max`.
    pub fn build(params: &ChainParams, tail_tol: f64) -> Result<Self> {
        params.require_modified()?;
        params.require_supercritical()?;
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::domain("build_stationary", "tail_tol must lie in (0,1)"));
        }
        let n_star = params.mode()?;
        let ratio = |x: u64| params.beta(x) / params.alpha(x + 1);

        let mut log_weights = Vec::with_capacity(2 * n_star as usize + 16);
        let mut acc = KahanSum::default();
        log_weights.push(0.0);
        let min_n = (2 * n_star).max(1);
        let mut x = 0u64;
        loop {
            if x >= min_n && ratio(x) < 0.5 {
                break;
            }
            acc.add(params.beta(x).ln() - params.alpha(x + 1).ln());
            log_weights.push(acc.value());
            x += 1;
        }
        loop {
            let log_norm = log_sum_exp(&log_weights);
            let r = ratio(x);
            let log_tail = log_weights[x as usize] + (r / (1.0 - r)).ln();
            let tail_bound = (log_tail - log_norm).exp();
            if tail_bound < tail_tol {
                return Ok(StationaryLaw {
                    params: *params,
                    n_max: x,
                    log_weights,
                    log_norm,
                    tail_bound,
                });
            }
            acc.add(params.beta(x).ln() - params.alpha(x + 1).ln());
            log_weights.push(acc.value());
            x += 1;
        }
    }

    /// `ln π(x)`; `-inf` beyond the truncation.
    pub fn log_pi(&self, x: u64) -> f64 {
        self.log_weights
            .get(x as usize)
            .map_or(f64::NEG_INFINITY, |w| w - self.log_norm)
    }

    pub fn pi(&self, x: u64) -> f64 {
        self.log_pi(x).exp()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_weights
            .iter()
            .map(|w| (w - self.log_norm).exp())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = KahanSum::default();
        for p in self.probabilities() {
            acc.add(p);
        }
        acc.value()
    }

    /// State of maximal probability; the larger one on exact ties.
    pub fn argmax(&self) -> u64 {
        let mut best = 0usize;
        for (i, &w) in self.log_weights.iter().enumerate() {
            if w >= self.log_weights[best] {
                best = i;
            }
        }
        best as u64
    }

    /// Exact mean return time to `k` for the continuous-time chain,
    /// `1/(π(k)(α_k + β_k))`, in log scale.
    pub fn log_mean_return_time(&self, k: u64) -> f64 {
        -self.log_pi(k) - self.params.rates(k).total().ln()
    }

    /// Total-variation distance to a probability vector indexed from 0.
    /// Missing entries on either side count as zero mass.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        let n = self.log_weights.len().max(other.len());
        let mut acc = KahanSum::default();
        for x in 0..n {
            let p = self.pi(x as u64);
            let q = other.get(x).copied().unwrap_or(0.0);
            acc.add((p - q).abs());
        }
        0.5 * acc.value()
    }
}

/// Stationary variance scale `σ_L² = Lb/γ`.
pub fn clt_variance(params: &ChainParams) -> f64 {
    params.l_f64() * params.b / params.gamma
}

/// Gaussian density with variance `Lb/γ` at offset `k` from the mode.
pub fn local_clt_density(params: &ChainParams, k: f64) -> f64 {
    let var = clt_variance(params);
    (-k * k / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `f(z) = ∫₀^z ln(1+x) dx = (1+z)ln(1+z) - z`, for `z > -1`.
pub fn ld_f(z: f64) -> f64 {
    // ln_1p keeps precision for small z where f(z) ≈ z²/2.
    (1.0 + z) * z.ln_1p() - z
}

/// Large-deviation rate `(b/γ)·f(δγ/b)` of `π(n* + δL)` per unit `L`.
pub fn ld_rate(params: &ChainParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain("ld_rate", format!("delta must be positive, got {delta}")));
    }
    let ratio = params.b / params.gamma;
    Ok(ratio * ld_f(delta / ratio))
}

/// Euler–Maclaurin approximation of `Σ_{k=0}^{r} ln(1 + ωk)`:
/// `(1/ω + r + ½) ln(1 + rω) - r`.
pub fn euler_maclaurin_log_product(r: u64, omega: f64) -> f64 {
    let rf = r as f64;
    (1.0 / omega + rf + 0.5) * (rf * omega).ln_1p() - rf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Variant;

    fn base(l: u64) -> ChainParams {
        ChainParams::modified(2.0, 1.0, 1.0, l).unwrap()
    }

    #[test]
    fn weight_examples() {
        let p = base(100);
        assert_eq!(log_stationary_weight(&p, 0).unwrap(), 0.0);
        let w1 = log_stationary_weight(&p, 1).unwrap();
        assert!((w1 - (2.0f64 / 1.01).ln()).abs() < 1e-15);
        let u = p.with_variant(Variant::Unmodified);
        assert_eq!(log_stationary_weight(&u, 3), Err(Error::NotErgodic));
        assert!(StationaryLaw::build(&u, 1e-12).is_err());
    }

    #[test]
    fn normalization_and_tail() {
        let law = StationaryLaw::build(&base(50), 1e-12).unwrap();
        let m = law.total_mass();
        assert!((m - 1.0).abs() <= 1e-12, "{m}");
        assert!(law.tail_bound < 1e-12);
        assert!(law.n_max >= 100);
        assert_eq!(law.log_weights.len() as u64, law.n_max + 1);
        assert!(StationaryLaw::build(&base(50), 0.0).is_err());
    }

    #[test]
    fn detailed_balance_exact() {
        let p = ChainParams::modified(3.0, 1.0, 0.5, 30).unwrap();
        let law = StationaryLaw::build(&p, 1e-12).unwrap();
        for x in 0..law.n_max {
            let lhs = law.log_pi(x) + p.beta(x).ln();
            let rhs = law.log_pi(x + 1) + p.alpha(x + 1).ln();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "x={x}");
        }
        assert_eq!(law.log_pi(law.n_max + 1), f64::NEG_INFINITY);
    }

    #[test]
    fn mode_near_balance_point() {
        let p = base(10_000);
        let law = StationaryLaw::build(&p, 1e-12).unwrap();
        let n = p.mode().unwrap();
        assert!((law.argmax() as i64 - n as i64).abs() <= 1);
        // (b−μ)L/γ integer ⇒ tie between n*−1 and n*; the larger is kept.
        assert_eq!(law.argmax(), n);
    }

    #[test]
    fn clt_density_symmetric() {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 2000).unwrap();
        let at0 = local_clt_density(&p, 0.0);
        assert!((at0 - 1.0 / (2.0 * std::f64::consts::PI * 4000.0).sqrt()).abs() < 1e-15);
        for k in [1.0, 17.0, 63.2] {
            assert_eq!(local_clt_density(&p, k), local_clt_density(&p, -k));
        }
    }

    #[test]
    fn ld_rate_quadratic_near_zero() {
        let p = base(100);
        let r = ld_rate(&p, 1e-3).unwrap() / ld_rate(&p, 2e-3).unwrap();
        assert!((r - 0.25).abs() < 0.0025, "{r}");
        assert!((ld_f(1.0) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((ld_f(1.0) - 0.386_294).abs() < 1e-6);
        assert!(ld_rate(&p, 0.0).is_err());
        assert!(ld_rate(&p, -1.0).is_err());
    }

    #[test]
    fn euler_maclaurin_examples() {
        assert_eq!(euler_maclaurin_log_product(0, 0.3), 0.0);
        let (r, w) = (10_000u64, 1e-4);
        let mut direct = KahanSum::default();
        for k in 0..=r {
            direct.add((w * k as f64).ln_1p());
        }
        assert!((euler_maclaurin_log_product(r, w) - direct.value()).abs() < 10.0 * w);
        let w = 1e-3;
        let mut prev = f64::NEG_INFINITY;
        for r in (0..=1000).step_by(50) {
            let v = euler_maclaurin_log_product(r, w);
            assert!(v > prev || r == 0);
            prev = v;
        }
    }
}
