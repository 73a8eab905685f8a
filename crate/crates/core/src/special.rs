//! The degenerate hypergeometric function `F(A, z) = 1F1(1; A; z)` and its
//! companions.
//!
//! `F(A, z) = 1 + z/A + z²/(A(A+1)) + …` is evaluated three ways:
//!
//! * [`hypergeom_series`]: the defining series, summed in log space;
//! * [`hypergeom_via_gamma`]: `F = e^z (A-1) z^{1-A} γ(A-1, z)` through the
//!   lower incomplete gamma function;
//! * [`hypergeom_asymptotic`]: the four large-`A` regimes, selected by
//!   `h = (z - A)/√A`.
//!
//! All values are natural logarithms. For `z > A` the function grows like
//! `e^{z-A}` and overflows `f64` long before the parameter sizes of interest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::LogAccumulator;

/// Default `|h|` beyond which the tail regimes (I, II) replace the Gaussian
/// ones (III, IV).
pub const DEFAULT_H_THRESHOLD: f64 = 4.5;

/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 10_000_000;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    ExactSeries,
    /// `z < A`, `(A - z)/√A → ∞`: `F ≈ A/(A - z)`.
    RegimeI,
    /// `z > A`, `(z - A)/√A → ∞`: Stirling form.
    RegimeII,
    /// `z = A + h√A`, `h ≥ 0` fixed.
    RegimeIII,
    /// `z = A - h√A`, `h > 0` fixed.
    RegimeIV,
}

/// Which evaluation path produced a value, with `|z - A|/√A` for the
/// Gaussian regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTag {
    pub kind: RegimeKind,
    pub h: Option<f64>,
}

impl RegimeTag {
    pub const EXACT: RegimeTag = RegimeTag {
        kind: RegimeKind::ExactSeries,
        h: None,
    };

    fn tail(kind: RegimeKind) -> Self {
        RegimeTag { kind, h: None }
    }

    fn gaussian(kind: RegimeKind, h: f64) -> Self {
        debug_assert!(h >= 0.0 && h.is_finite());
        RegimeTag { kind, h: Some(h) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeomValue {
    /// `ln F(A, z)`.
    pub log_value: f64,
    pub regime: RegimeTag,
}

fn check_finite(op: &'static str, a: f64, z: f64) -> Result<()> {
    if !a.is_finite() || !z.is_finite() {
        return Err(Error::domain(op, format!("non-finite input A={a}, z={z}")));
    }
    Ok(())
}

/// Log of `F(A, z)` by direct summation of the series.
///
/// Terms grow while `z > A + n - 1`, so summation stops only once they are
/// decreasing and the geometric bound on the remaining tail drops below
/// `rel_tol` times the running sum. `A` may be any positive real; `A = 1`
/// gives `e^z`.
pub fn hypergeom_series(a: f64, z: f64, rel_tol: f64) -> Result<HypergeomValue> {
    hypergeom_series_capped(a, z, rel_tol, MAX_SERIES_TERMS)
}

/// [`hypergeom_series`] with an explicit term cap.
pub fn hypergeom_series_capped(
    a: f64,
    z: f64,
    rel_tol: f64,
    max_terms: usize,
) -> Result<HypergeomValue> {
    const OP: &str = "hypergeom_series";
    check_finite(OP, a, z)?;
    if a <= 0.0 {
        return Err(Error::domain(OP, format!("A must be positive, got {a}")));
    }
    if z < 0.0 {
        return Err(Error::domain(OP, format!("z must be nonnegative, got {z}")));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::domain(OP, format!("rel_tol must lie in (0,1), got {rel_tol}")));
    }
    if z == 0.0 {
        return Ok(HypergeomValue {
            log_value: 0.0,
            regime: RegimeTag::EXACT,
        });
    }

    let ln_z = z.ln();
    let ln_tol = rel_tol.ln();
    let mut acc = LogAccumulator::new();
    let mut log_term = 0.0;
    acc.push(log_term);
    for n in 1..=max_terms {
        // term_n = term_{n-1} * z / (A + n - 1)
        let denom = a + (n - 1) as f64;
        log_term += ln_z - denom.ln();
        acc.push(log_term);

        let ratio_next = z / (a + n as f64);
        if ratio_next < 1.0 {
            // Remaining tail <= term_{n+1} / (1 - r) with r = ratio_next.
            let log_tail = log_term + ratio_next.ln() - (-ratio_next).ln_1p();
            if log_tail - acc.log_value() < ln_tol {
                return Ok(HypergeomValue {
                    log_value: acc.log_value(),
                    regime: RegimeTag::EXACT,
                });
            }
        }
    }
    Err(Error::convergence(
        OP,
        format!("no convergence within {max_terms} terms for A={a}, z={z}"),
    ))
}

/// `ln F(A, z)` from one specific asymptotic regime formula, regardless of
/// whether `(A, z)` lies in that regime.
///
/// Regimes III and IV use `h = |z - A|/√A`. Regime III is
/// `e^{h²/2} Φ(h) √(2πA)`; its prefactor is the same `e^z Γ(A) z^{1-A}`
/// expansion as regime IV, which is what makes it meet regime II as `h` grows.
pub fn hypergeom_regime(a: f64, z: f64, kind: RegimeKind) -> Result<f64> {
    const OP: &str = "hypergeom_regime";
    check_finite(OP, a, z)?;
    if z < 0.0 {
        return Err(Error::domain(OP, format!("z must be nonnegative, got {z}")));
    }
    if a <= 1.0 {
        return Err(Error::domain(OP, format!("A must exceed 1, got {a}")));
    }
    let half_log_2pi_a = LN_SQRT_2PI + 0.5 * a.ln();
    let h = (z - a) / a.sqrt();
    match kind {
        RegimeKind::ExactSeries => Ok(hypergeom_series(a, z, 1e-15)?.log_value),
        RegimeKind::RegimeI => {
            if z >= a {
                return Err(Error::domain(OP, "regime I needs z < A"));
            }
            Ok((a / (a - z)).ln())
        }
        RegimeKind::RegimeII => {
            if z <= 0.0 {
                return Err(Error::domain(OP, "regime II needs z > 0"));
            }
            Ok((z - a + 1.0) + (a - 1.0) * ((a - 1.0) / z).ln() + half_log_2pi_a)
        }
        RegimeKind::RegimeIII => {
            let h = h.abs();
            Ok(0.5 * h * h + normal_cdf(h).ln() + half_log_2pi_a)
        }
        RegimeKind::RegimeIV => {
            let h = h.abs();
            Ok(0.5 * h * h + normal_cdf(-h).ln() + half_log_2pi_a)
        }
    }
}

/// Large-`A` approximation of `ln F(A, z)`, choosing the regime from
/// `h = (z - A)/√A` and `h_threshold`.
///
/// `h = 0` is assigned to regime III.
pub fn hypergeom_asymptotic(a: f64, z: f64, h_threshold: f64) -> Result<HypergeomValue> {
    const OP: &str = "hypergeom_asymptotic";
    check_finite(OP, a, z)?;
    if z < 0.0 {
        return Err(Error::domain(OP, format!("z must be nonnegative, got {z}")));
    }
    if !(h_threshold > 0.0) {
        return Err(Error::domain(OP, "h_threshold must be positive"));
    }
    let h = (z - a) / a.sqrt();
    let (kind, tag) = if h < -h_threshold {
        (RegimeKind::RegimeI, RegimeTag::tail(RegimeKind::RegimeI))
    } else if h > h_threshold {
        (RegimeKind::RegimeII, RegimeTag::tail(RegimeKind::RegimeII))
    } else if h >= 0.0 {
        (RegimeKind::RegimeIII, RegimeTag::gaussian(RegimeKind::RegimeIII, h))
    } else {
        (RegimeKind::RegimeIV, RegimeTag::gaussian(RegimeKind::RegimeIV, -h))
    };
    Ok(HypergeomValue {
        log_value: hypergeom_regime(a, z, kind)?,
        regime: tag,
    })
}

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Log of the lower incomplete gamma function `γ(a, z) = ∫₀^z t^{a-1} e^{-t} dt`.
///
/// Series for `z < a + 1`, Lentz continued fraction for the upper function
/// otherwise. Returns `-inf` at `z = 0`.
pub fn log_incomplete_gamma_lower(a: f64, z: f64) -> Result<f64> {
    const OP: &str = "incomplete_gamma_lower";
    check_finite(OP, a, z)?;
    if a <= 0.0 {
        return Err(Error::domain(OP, format!("a must be positive, got {a}")));
    }
    if z < 0.0 {
        return Err(Error::domain(OP, format!("z must be nonnegative, got {z}")));
    }
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if z < a + 1.0 {
        let log_sum = gamma_series_log_sum(a, z)?;
        Ok(a * z.ln() - z + log_sum)
    } else {
        let log_upper = log_incomplete_gamma_upper_cf(a, z)?;
        let lg = ln_gamma(a);
        // γ = Γ(a) (1 - Γ(a,z)/Γ(a))
        Ok(lg + (-(log_upper - lg).exp()).ln_1p())
    }
}

/// Log of the upper incomplete gamma function `Γ(a, z)`.
pub fn log_incomplete_gamma_upper(a: f64, z: f64) -> Result<f64> {
    const OP: &str = "incomplete_gamma_upper";
    check_finite(OP, a, z)?;
    if a <= 0.0 || z < 0.0 {
        return Err(Error::domain(OP, format!("need a > 0, z >= 0; got a={a}, z={z}")));
    }
    if z >= a + 1.0 {
        return log_incomplete_gamma_upper_cf(a, z);
    }
    let lg = ln_gamma(a);
    if z == 0.0 {
        return Ok(lg);
    }
    let log_lower = a * z.ln() - z + gamma_series_log_sum(a, z)?;
    Ok(lg + (-(log_lower - lg).exp()).ln_1p())
}

/// `ln Σ_{n≥0} z^n / (a (a+1) … (a+n))`, valid (and decreasing) for `z < a + 1`.
fn gamma_series_log_sum(a: f64, z: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = crate::logspace::KahanSum::default();
    sum.add(term);
    let mut denom = a;
    for _ in 0..MAX_SERIES_TERMS {
        denom += 1.0;
        term *= z / denom;
        sum.add(term);
        if term < sum.value() * 1e-17 {
            return Ok(sum.value().ln());
        }
    }
    Err(Error::convergence(
        "incomplete_gamma_lower",
        format!("series failed for a={a}, z={z}"),
    ))
}

/// Modified Lentz evaluation of the continued fraction for `Γ(a, z)`.
fn log_incomplete_gamma_upper_cf(a: f64, z: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 4.0 * f64::EPSILON {
            return Ok(-z + a * z.ln() + h.ln());
        }
    }
    Err(Error::convergence(
        "incomplete_gamma_upper",
        format!("continued fraction failed for a={a}, z={z}"),
    ))
}

/// `ln F(A, z)` through `F = e^z (A-1) z^{1-A} γ(A-1, z)`.
///
/// Exact representation (no asymptotics); tagged [`RegimeKind::ExactSeries`].
pub fn hypergeom_via_gamma(a: f64, z: f64) -> Result<HypergeomValue> {
    const OP: &str = "hypergeom_via_gamma";
    check_finite(OP, a, z)?;
    if a <= 1.0 {
        return Err(Error::domain(OP, format!("A must exceed 1, got {a}")));
    }
    if z <= 0.0 {
        return Err(Error::domain(OP, format!("z must be positive, got {z}")));
    }
    let log_gamma = log_incomplete_gamma_lower(a - 1.0, z)?;
    Ok(HypergeomValue {
        log_value: z + (a - 1.0).ln() - (a - 1.0) * z.ln() + log_gamma,
        regime: RegimeTag::EXACT,
    })
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(h: f64) -> f64 {
    0.5 * libm::erfc(-h / std::f64::consts::SQRT_2)
}
