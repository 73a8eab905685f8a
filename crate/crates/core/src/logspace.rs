//! Log-domain arithmetic helpers.
//!
//! Weights in this crate routinely span thousands of orders of magnitude, so
//! sums of positive quantities are carried as natural logarithms and signed
//! quantities as a sign plus log-magnitude.

use serde::{Deserialize, Serialize};

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(exp(a) - exp(b))` for `a >= b`. Returns `-inf` when equal.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b || (a - b).abs() < 1e-12, "log_sub_exp needs a >= b");
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    a + (-d.exp()).ln_1p()
}

/// Log of the sum of exponentials of a slice. `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = KahanSum::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

/// Kahan-Babuska (Neumaier) compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }
}

/// Streaming log-domain accumulator for positive terms given by their logs.
///
/// Keeps a running maximum and a compensated sum of `exp(term - max)`,
/// rescaling when a new maximum arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    acc: KahanSum,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            acc: KahanSum::default(),
        }
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.max {
            if self.max > f64::NEG_INFINITY {
                self.acc.scale((self.max - log_term).exp());
            }
            self.max = log_term;
        }
        self.acc.add((log_term - self.max).exp());
    }

    /// Log of the accumulated sum.
    pub fn log_value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.value().ln()
        }
    }
}

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    /// -1, 0 or +1.
    pub sign: i8,
    /// `ln |value|`; `-inf` when `sign == 0`.
    pub log_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn positive(log_abs: f64) -> Self {
        SignedLog { sign: 1, log_abs }
    }

    pub fn negative(log_abs: f64) -> Self {
        SignedLog { sign: -1, log_abs }
    }

    pub fn from_f64(v: f64) -> Self {
        if v > 0.0 {
            Self::positive(v.ln())
        } else if v < 0.0 {
            Self::negative((-v).ln())
        } else {
            Self::ZERO
        }
    }

    /// Converts back to `f64`; overflows to `±inf` for huge magnitudes.
    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: SignedLog) -> SignedLog {
        match (self.sign, other.sign) {
            (0, _) => other,
            (_, 0) => self,
            (a, b) if a == b => SignedLog {
                sign: a,
                log_abs: log_add_exp(self.log_abs, other.log_abs),
            },
            _ => {
                let (big, small) = if self.log_abs >= other.log_abs {
                    (self, other)
                } else {
                    (other, self)
                };
                let m = log_sub_exp(big.log_abs, small.log_abs);
                if m == f64::NEG_INFINITY {
                    SignedLog::ZERO
                } else {
                    SignedLog {
                        sign: big.sign,
                        log_abs: m,
                    }
                }
            }
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: SignedLog) -> SignedLog {
        if self.sign == 0 || other.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.sign * other.sign,
            log_abs: self.log_abs + other.log_abs,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, other: SignedLog) -> SignedLog {
        assert!(other.sign != 0, "division by zero SignedLog");
        if self.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.sign * other.sign,
            log_abs: self.log_abs - other.log_abs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let a = 2.0f64.ln();
        let b = 3.0f64.ln();
        assert!((log_add_exp(a, b) - 5.0f64.ln()).abs() < 1e-15);
        assert!((log_sub_exp(b, a) - 0.0).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, a), a);
    }

    #[test]
    fn log_sum_exp_huge_range() {
        let xs = [-1000.0, 1000.0, 999.0];
        let expect = 1000.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((log_sum_exp(&xs) - expect).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn accumulator_rescales() {
        let mut acc = LogAccumulator::new();
        for x in [0.0, 10.0, 5.0, 700.0, 800.0] {
            acc.push(x);
        }
        let direct = log_sum_exp(&[0.0, 10.0, 5.0, 700.0, 800.0]);
        assert!((acc.log_value() - direct).abs() < 1e-12);
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLog::from_f64(5.0);
        let b = SignedLog::from_f64(-3.0);
        assert!((a.add(b).to_f64() - 2.0).abs() < 1e-14);
        assert!((b.add(a.neg()).to_f64() + 8.0).abs() < 1e-13);
        assert!((a.mul(b).to_f64() + 15.0).abs() < 1e-12);
        assert_eq!(a.add(a.neg()), SignedLog::ZERO);
        assert!((b.div(a).to_f64() + 0.6).abs() < 1e-15);
    }
}
