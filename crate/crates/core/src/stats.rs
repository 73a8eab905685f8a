//! Goodness-of-fit tests used to check the simulators.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};

/// Kolmogorov–Smirnov statistic of `samples` against `Exp(rate)`.
pub fn ks_statistic_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-rate * x).exp_m1();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of a one-sample KS statistic `d` from `n` samples
/// (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided exact binomial test p-value for `k` successes in `n` trials.
pub fn binomial_pvalue(k: u64, n: u64, p: f64) -> Result<f64> {
    let dist = Binomial::new(p, n).map_err(|e| Error::domain("binomial_pvalue", e.to_string()))?;
    let lower = dist.cdf(k);
    let upper = if k == 0 { 1.0 } else { dist.sf(k - 1) };
    Ok((2.0 * lower.min(upper)).min(1.0))
}

/// Result of a two-sample chi-square homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square test on histograms over the same bins.
///
/// Adjacent bins are pooled until each pooled bin holds at least
/// `min_count` observations across both samples.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_count: u64) -> Result<ChiSquareTest> {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    let mut pooled: Vec<(u64, u64)> = Vec::new();
    let mut cur = (0u64, 0u64);
    for i in 0..len {
        cur.0 += get(a, i);
        cur.1 += get(b, i);
        if cur.0 + cur.1 >= min_count {
            pooled.push(cur);
            cur = (0, 0);
        }
    }
    if cur.0 + cur.1 > 0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => pooled.push(cur),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::domain("chi_square_two_sample", "fewer than two usable bins"));
    }
    let na: u64 = pooled.iter().map(|c| c.0).sum();
    let nb: u64 = pooled.iter().map(|c| c.1).sum();
    let (na, nb) = (na as f64, nb as f64);
    let ka = (nb / na).sqrt();
    let kb = (na / nb).sqrt();
    let statistic: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let (x, y) = (x as f64, y as f64);
            let d = ka * x - kb * y;
            d * d / (x + y)
        })
        .sum();
    let dof = pooled.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::domain("chi_square_two_sample", e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi.sf(statistic),
    })
}

/// Histogram of nonnegative integer samples.
pub fn histogram(samples: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::new();
    for s in samples {
        let i = s as usize;
        if h.len() <= i {
            h.resize(i + 1, 0);
        }
        h[i] += 1;
    }
    h
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
