//! Shared fixtures for the benchmarks.

use logistic_chain::ChainParams;

/// `(b, μ, γ) = (2, 1, 1)` at size `l`, modified chain.
pub fn reference_params(l: u64) -> ChainParams {
    ChainParams::modified(2.0, 1.0, 1.0, l).expect("reference parameters are valid")
}

/// `(A, z)` pairs spanning the four large-`A` regimes at `A = 10⁴`.
pub fn regime_points() -> [(&'static str, f64, f64); 4] {
    let a: f64 = 1e4;
    let s = a.sqrt();
    [
        ("regime_I", a, a - 10.0 * s),
        ("regime_II", a, a + 10.0 * s),
        ("regime_III", a, a + s),
        ("regime_IV", a, a - s),
    ]
}
