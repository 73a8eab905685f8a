//! Independent reference computations: dense linear solves on the truncated
//! generator, adaptive Simpson quadrature and an embedded Runge–Kutta ODE
//! solver. Deliberately share no code with the analytic paths they check.

use nalgebra::{DMatrix, DVector};

use crate::chain::ChainParams;
use crate::error::{Error, Result};

fn lu_solve(op: &'static str, a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::domain(op, "singular linear system"))
}

/// Generator of the chain truncated to `{0..=n_max}`, with births switched
/// off at `n_max` (reflecting top). Row `i` holds the rates out of state `i`.
pub fn truncated_generator(params: &ChainParams, n_max: u64) -> DMatrix<f64> {
    let n = n_max as usize + 1;
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        let x = i as u64;
        let beta = if x < n_max { params.beta(x) } else { 0.0 };
        let alpha = if x > 0 { params.alpha(x) } else { 0.0 };
        if x < n_max {
            q[(i, i + 1)] = beta;
        }
        if x > 0 {
            q[(i, i - 1)] = alpha;
        }
        q[(i, i)] = -(alpha + beta);
    }
    q
}

/// Normalized null vector of the transposed truncated generator, i.e. the
/// stationary law of the truncated chain, by LU with one balance equation
/// replaced by `Σπ = 1`.
pub fn generator_null_vector(params: &ChainParams, n_max: u64) -> Result<Vec<f64>> {
    let q = truncated_generator(params, n_max);
    let n = q.nrows();
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = lu_solve("generator_null_vector", a, rhs)?;
    Ok(pi.iter().copied().collect())
}

/// `E τ_{x→y}` for `x ∈ y+1..=n_top`, reflecting at `n_top`. Entry `k` is
/// the time from `y + 1 + k`.
///
/// `(Q h)(x) = −1`, `h(y) = 0` is solved in the increments
/// `d_x = h(x) − h(x−1)`, where it becomes the upper-bidiagonal system
/// `α_x d_x − β_x d_{x+1} = 1`. Solving for `h` directly is hopelessly
/// ill-conditioned once passage times reach `1e20` and beyond.
pub fn hitting_times_down(params: &ChainParams, y: u64, n_top: u64) -> Result<Vec<f64>> {
    if n_top <= y {
        return Err(Error::domain("hitting_times_down", "need n_top > y"));
    }
    let n = (n_top - y) as usize;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let x = y + 1 + i as u64;
        a[(i, i)] = params.alpha(x);
        if i + 1 < n {
            a[(i, i + 1)] = -params.beta(x);
        }
    }
    let d = a
        .solve_upper_triangular(&DVector::from_element(n, 1.0))
        .ok_or_else(|| Error::domain("hitting_times_down", "singular linear system"))?;
    let mut h = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in d.iter() {
        acc += v;
        h.push(acc);
    }
    Ok(h)
}

/// Mean exit time from `(n1, n2)` and probability of leaving through `n2`,
/// for every start `x ∈ n1..=n2` (boundary entries are `0` and `0`/`1`).
pub struct IntervalExit {
    pub n1: u64,
    pub mean_time: Vec<f64>,
    pub prob_upper: Vec<f64>,
}

impl IntervalExit {
    pub fn mean_time_from(&self, x: u64) -> f64 {
        self.mean_time[(x - self.n1) as usize]
    }

    pub fn prob_upper_from(&self, x: u64) -> f64 {
        self.prob_upper[(x - self.n1) as usize]
    }
}

pub fn interval_exit(params: &ChainParams, n1: u64, n2: u64) -> Result<IntervalExit> {
    if n2 < n1 + 2 {
        return Err(Error::domain("interval_exit", "need n2 >= n1 + 2"));
    }
    let n = (n2 - n1 - 1) as usize;
    let mut a = DMatrix::zeros(n, n);
    let mut rhs_p = DVector::zeros(n);
    for i in 0..n {
        let x = n1 + 1 + i as u64;
        let (alpha, beta) = (params.alpha(x), params.beta(x));
        a[(i, i)] = -(alpha + beta);
        if i > 0 {
            a[(i, i - 1)] = alpha;
        }
        if i + 1 < n {
            a[(i, i + 1)] = beta;
        } else {
            rhs_p[i] = -beta;
        }
    }
    let lu = a.lu();
    let t = lu
        .solve(&DVector::from_element(n, -1.0))
        .ok_or_else(|| Error::domain("interval_exit", "singular linear system"))?;
    let p = lu
        .solve(&rhs_p)
        .ok_or_else(|| Error::domain("interval_exit", "singular linear system"))?;
    let mut mean_time = vec![0.0];
    mean_time.extend(t.iter());
    mean_time.push(0.0);
    let mut prob_upper = vec![0.0];
    prob_upper.extend(p.iter());
    prob_upper.push(1.0);
    Ok(IntervalExit {
        n1,
        mean_time,
        prob_upper,
    })
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Dormand–Prince 5(4) integration of the scalar ODE `y′ = f(t, y)` from
/// `t0` to `t1`.
pub fn rk45<F: Fn(f64, f64) -> f64>(f: F, y0: f64, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * span.abs().min(1e-2);
    for _ in 0..1_000_000 {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let mut k = [0.0; 7];
        k[0] = f(t, y);
        for s in 0..6 {
            let yi = y + h * (0..=s).map(|j| A[s][j] * k[j]).sum::<f64>();
            k[s + 1] = f(t + C[s] * h, yi);
        }
        let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
        let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
        let err = (y5 - y4).abs();
        let scale = tol * (1.0 + y.abs().max(y5.abs()));
        if err <= scale {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * (scale / err).powf(0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    Err(Error::convergence("rk45", "step budget exhausted"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_rows_sum_to_zero() {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let q = truncated_generator(&p, 30);
        for i in 0..q.nrows() {
            assert!(q.row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_null_vector() {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let pi = generator_null_vector(&p, 1).unwrap();
        // β₀ π₀ = α₁ π₁
        let (b0, a1) = (p.beta(0), p.alpha(1));
        assert!((pi[0] - a1 / (a1 + b0)).abs() < 1e-14);
    }

    #[test]
    fn pure_death_hitting_times() {
        // β ≡ 0 above y when n_top = y + k reflecting is irrelevant for k = 1.
        let p = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let h = hitting_times_down(&p, 4, 5).unwrap();
        assert!((h[0] - 1.0 / p.alpha(5)).abs() < 1e-14);
    }

    #[test]
    fn interval_exit_boundary_values() {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 10).unwrap();
        let e = interval_exit(&p, 5, 15).unwrap();
        assert_eq!(e.mean_time_from(5), 0.0);
        assert_eq!(e.prob_upper_from(15), 1.0);
        assert!(e.prob_upper.windows(2).all(|w| w[1] >= w[0]));
        assert!(e.mean_time.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn simpson_and_rk45() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        let y = rk45(|_, y| -2.0 * y, 1.0, 0.0, 1.5, 1e-12).unwrap();
        assert!((y - (-3.0f64).exp()).abs() < 1e-10);
    }
}
