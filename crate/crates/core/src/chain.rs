//! The logistic birth-death chain.
//!
//! Up-rate `β_x` and down-rate `α_x = μx + γx²/L`. The unmodified chain has
//! `β_x = bx` for `x ≥ 1` and `β_0 = 1`; the modified chain uses
//! `β_x = b(x+1)` everywhere, which removes the trap at 0 and makes the
//! stationary law a clean product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Unmodified,
    Modified,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "unmodified" => Ok(Variant::Unmodified),
            "modified" => Ok(Variant::Modified),
            other => Err(format!("unknown variant {other:?} (expected modified|unmodified)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Unmodified => "unmodified",
            Variant::Modified => "modified",
        })
    }
}

/// Parameters of the chain.
///
/// Construct with [`ChainParams::new`], which enforces the supercritical
/// regime `b > μ` and `γ > 0`. [`ChainParams::exploratory`] lifts those two
/// checks for simulation only; analytic routines call
/// [`ChainParams::require_supercritical`] and refuse such parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub b: f64,
    pub mu: f64,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub l: u64,
    pub variant: Variant,
    #[serde(default)]
    pub exploratory: bool,
}

impl ChainParams {
    pub fn new(b: f64, mu: f64, gamma: f64, l: u64, variant: Variant) -> Result<Self> {
        let p = Self::exploratory(b, mu, gamma, l, variant)?;
        p.require_supercritical()?;
        Ok(ChainParams {
            exploratory: false,
            ..p
        })
    }

    /// Parameters for exploratory simulation: only finiteness,
    /// nonnegativity and `L ≥ 1` are checked.
    pub fn exploratory(b: f64, mu: f64, gamma: f64, l: u64, variant: Variant) -> Result<Self> {
        for (name, v) in [("b", b), ("mu", mu), ("gamma", gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if l == 0 {
            return Err(Error::InvalidParams("L must be at least 1".into()));
        }
        Ok(ChainParams {
            b,
            mu,
            gamma,
            l,
            variant,
            exploratory: true,
        })
    }

    /// Shorthand for the modified chain.
    pub fn modified(b: f64, mu: f64, gamma: f64, l: u64) -> Result<Self> {
        Self::new(b, mu, gamma, l, Variant::Modified)
    }

    pub fn unmodified(b: f64, mu: f64, gamma: f64, l: u64) -> Result<Self> {
        Self::new(b, mu, gamma, l, Variant::Unmodified)
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        ChainParams { variant, ..self }
    }

    pub fn with_size(self, l: u64) -> Self {
        ChainParams { l, ..self }
    }

    pub fn l_f64(&self) -> f64 {
        self.l as f64
    }

    pub fn require_supercritical(&self) -> Result<()> {
        if !(self.b > self.mu) {
            return Err(Error::NoPositiveEquilibrium {
                b: self.b,
                mu: self.mu,
            });
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn require_modified(&self) -> Result<()> {
        match self.variant {
            Variant::Modified => Ok(()),
            Variant::Unmodified => Err(Error::NotErgodic),
        }
    }

    /// Down-rate `α_x = μx + γx²/L`.
    #[inline]
    pub fn alpha(&self, x: u64) -> f64 {
        let xf = x as f64;
        xf * (self.mu + self.gamma * xf / self.l_f64())
    }

    /// Up-rate `β_x`.
    #[inline]
    pub fn beta(&self, x: u64) -> f64 {
        match self.variant {
            Variant::Modified => self.b * (x as f64 + 1.0),
            Variant::Unmodified if x == 0 => 1.0,
            Variant::Unmodified => self.b * x as f64,
        }
    }

    #[inline]
    pub fn rates(&self, x: u64) -> RatePair {
        RatePair {
            alpha: self.alpha(x),
            beta: self.beta(x),
        }
    }

    /// `(b - μ)L/γ`, the density-scaled balance point.
    pub fn balance_point(&self) -> f64 {
        self.l_f64() * (self.b - self.mu) / self.gamma
    }

    /// Equilibrium point of the drift.
    ///
    /// Unmodified: `⌊L(b-μ)/γ⌋`. Modified: floor of the positive root of
    /// `b(x+1) = μx + γx²/L`, which differs from the unmodified value by at
    /// most one for large `L`.
    pub fn equilibrium_point(&self) -> Result<u64> {
        self.require_supercritical()?;
        let l = self.l_f64();
        let v = match self.variant {
            Variant::Unmodified => self.balance_point(),
            Variant::Modified => {
                let d = self.b - self.mu;
                let k = self.gamma / l;
                (d + (d * d + 4.0 * k * self.b).sqrt()) / (2.0 * k)
            }
        };
        Ok(robust_floor(v))
    }

    /// Mode of the modified chain's stationary law, `⌊L(b-μ)/γ⌋`.
    ///
    /// `π(n)/π(n-1) = b/(μ + γn/L) ≥ 1` exactly when `n ≤ L(b-μ)/γ`, so the
    /// floor is the (larger, on ties) mode. This is the `n*` used by the
    /// stationary and passage-time analyses for both variants.
    pub fn mode(&self) -> Result<u64> {
        self.require_supercritical()?;
        Ok(robust_floor(self.balance_point()))
    }

    /// `(Lψ)(x)` for the generator of the chain.
    ///
    /// At `x = 0` the down term is absent: `β_0 (ψ(1) - ψ(0))`.
    pub fn apply_generator<F: Fn(u64) -> f64>(&self, psi: F, x: u64) -> f64 {
        let RatePair { alpha, beta } = self.rates(x);
        let here = psi(x);
        let up = beta * (psi(x + 1) - here);
        if x == 0 {
            up
        } else {
            up + alpha * (psi(x - 1) - here)
        }
    }
}

/// Floor that does not lose an exact integer to rounding (e.g. `99.999…9`).
fn robust_floor(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        v.floor().max(0.0) as u64
    }
}

/// Down and up rates at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub alpha: f64,
    pub beta: f64,
}

impl RatePair {
    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }
}
