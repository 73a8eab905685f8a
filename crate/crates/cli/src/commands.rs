//! One function per subcommand. Each reads typed values from the merged
//! [`RunConfig`] and returns what should be written.

use std::io::Write;

use logistic_chain::limits::{
    breiman_nu, breiman_rate, clt_moments, fluctuation_samples, fluid_solution, ou_exit_tail_check, ou_params, z_star,
};
use logistic_chain::oracles::interval_exit;
use logistic_chain::passage::{
    mean_exit_symmetric, mean_passage, mean_passage_to_zero, mean_step_time, mean_step_time_asymptotic,
    recurrence_time_estimate, DEFAULT_SERIES_TOL,
};
use logistic_chain::rng::stream_rng;
use logistic_chain::simulation::{sample_first_passage, simulate_with};
use logistic_chain::special::{hypergeom_asymptotic, hypergeom_series, hypergeom_via_gamma};
use logistic_chain::stationary::{clt_variance, ld_rate, local_clt_density, log_stationary_weight};
use logistic_chain::trajectory_io;
use logistic_chain::validation::{run_selected, Scale, SuiteOptions, CRITERION_IDS};
use logistic_chain::{
    ChainParams, CompetitionPairs, LatticeOptions, LatticeState, RegimeTag, StationaryLaw, StopReason, StopRule,
    Variant,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Report};

type Result<T> = std::result::Result<T, CliError>;

pub enum Output {
    Report(Report),
    /// Pre-rendered text (the `validate` table).
    Text(String),
    /// Binary trajectory frame.
    Bytes(Vec<u8>),
}

/// What a command produced, plus a failure to report after writing it.
pub struct Outcome {
    pub output: Output,
    pub status: Result<()>,
}

impl From<Report> for Outcome {
    fn from(r: Report) -> Self {
        Outcome {
            output: Output::Report(r),
            status: Ok(()),
        }
    }
}

pub struct Ctx<'a> {
    pub stderr: &'a mut dyn Write,
    pub threads: Option<usize>,
}

/// Chain parameters from `b, mu, gamma, L, variant, exploratory`.
fn params(cfg: &RunConfig) -> Result<ChainParams> {
    params_sized(cfg, cfg.require("L")?)
}

fn params_sized(cfg: &RunConfig, l: u64) -> Result<ChainParams> {
    let b = cfg.require("b")?;
    let mu = cfg.require("mu")?;
    let gamma = cfg.require("gamma")?;
    let variant: Variant = cfg.parse("variant")?.unwrap_or(Variant::Modified);
    Ok(if cfg.flag("exploratory")? {
        ChainParams::exploratory(b, mu, gamma, l, variant)?
    } else {
        ChainParams::new(b, mu, gamma, l, variant)?
    })
}

/// The configured seed, or a fresh one that is recorded in `cfg` and
/// reported on stderr.
fn seed(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<u64> {
    if let Some(s) = cfg.parse::<u64>("seed")? {
        return Ok(s);
    }
    let s: u64 = rand::random();
    cfg.set("seed", s);
    // Best effort: losing the note must not fail the run.
    let _ = writeln!(ctx.stderr, "seed: {s} (generated; pass --seed {s} to reproduce)");
    Ok(s)
}

fn regime_name(tag: &RegimeTag) -> String {
    format!("{:?}", tag.kind)
}

fn h_cell(tag: &RegimeTag) -> Cell {
    Cell::F(tag.h.unwrap_or(f64::NAN))
}

pub fn stationary(cfg: &mut RunConfig, _ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let law = StationaryLaw::build(&p, cfg.require("tail_tol")?)?;
    let n_star = p.mode()?;
    let lo = cfg.parse::<u64>("x_min")?.unwrap_or(0);
    let hi = cfg.parse::<u64>("x_max")?.unwrap_or(law.n_max).min(law.n_max);
    if lo > hi {
        return Err(CliError::Usage(format!(
            "empty range: x_min = {lo} exceeds min(x_max, n_max = {})",
            law.n_max
        )));
    }
    let mut r = Report::new(cfg, &["x", "pi", "gauss", "ratio"]);
    r.note("n_star", n_star);
    r.note("n_max", law.n_max);
    r.note("tail_bound", law.tail_bound);
    r.note("clt_variance", clt_variance(&p));
    for x in lo..=hi {
        let pi = law.pi(x);
        let g = local_clt_density(&p, x as f64 - n_star as f64);
        r.row(vec![x.into(), pi.into(), g.into(), (pi / g).into()]);
    }
    Ok(r.into())
}

pub fn ldcheck(cfg: &mut RunConfig, _ctx: &mut Ctx) -> Result<Outcome> {
    let sizes: Vec<u64> = cfg.list("sizes")?;
    let deltas: Vec<f64> = cfg.list("deltas")?;
    if sizes.is_empty() || deltas.is_empty() {
        return Err(CliError::Usage("sizes and deltas must be nonempty".into()));
    }
    let mut r = Report::new(cfg, &["L", "delta", "x", "neg_log_pi", "predicted", "rel_err"]);
    for &l in &sizes {
        let p = params_sized(cfg, l)?;
        let law = StationaryLaw::build(&p, DEFAULT_SERIES_TOL)?;
        let n_star = p.mode()?;
        let lf = l as f64;
        for &delta in &deltas {
            let x = n_star + (delta * lf).round() as u64;
            // Beyond the truncation the weight is still exact; only the norm is shared.
            let log_pi = log_stationary_weight(&p, x)? - law.log_norm;
            let measured = -(log_pi + 0.5 * lf.ln());
            let predicted = lf * ld_rate(&p, delta)?;
            let rel = (measured - predicted).abs() / predicted;
            r.row(vec![l.into(), delta.into(), x.into(), measured.into(), predicted.into(), rel.into()]);
        }
    }
    Ok(r.into())
}

pub fn hypergeom(cfg: &mut RunConfig, _ctx: &mut Ctx) -> Result<Outcome> {
    let a: f64 = cfg.require("A")?;
    let z: f64 = cfg.require("z")?;
    let series = hypergeom_series(a, z, cfg.require("tol")?)?;
    let gamma_path = if a > 1.0 && z > 0.0 {
        hypergeom_via_gamma(a, z)?.log_value
    } else {
        f64::NAN
    };
    let asym = hypergeom_asymptotic(a, z, cfg.require("h_threshold")?)?;
    let mut r = Report::new(
        cfg,
        &["A", "z", "log_series", "log_gamma", "log_asymptotic", "regime", "h", "rel_err_asymptotic"],
    );
    r.row(vec![
        a.into(),
        z.into(),
        series.log_value.into(),
        gamma_path.into(),
        asym.log_value.into(),
        regime_name(&asym.regime).into(),
        h_cell(&asym.regime),
        (asym.log_value - series.log_value).exp_m1().abs().into(),
    ]);
    Ok(r.into())
}

pub fn passage(cfg: &mut RunConfig, _ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let mode: String = cfg.require("mode")?;
    let r = match mode.as_str() {
        "step" => {
            let y: u64 = cfg.require("y")?;
            let exact = mean_step_time(&p, y)?;
            let asym = mean_step_time_asymptotic(&p, y, cfg.require("h_threshold")?)?;
            let regime = asym.regime.unwrap_or(RegimeTag::EXACT);
            let mut r = Report::new(cfg, &["y", "log_exact", "log_asymptotic", "rel_err", "regime", "h"]);
            r.row(vec![
                y.into(),
                exact.log_mean_time.into(),
                asym.log_mean_time.into(),
                (asym.log_mean_time - exact.log_mean_time).exp_m1().abs().into(),
                regime_name(&regime).into(),
                h_cell(&regime),
            ]);
            r
        }
        "passage" => {
            let (x, y): (u64, u64) = (cfg.require("x")?, cfg.require("y")?);
            let e = mean_passage(&p, x, y)?;
            let mut r = Report::new(cfg, &["x", "y", "log_mean_time", "mean_time"]);
            r.row(vec![x.into(), y.into(), e.log_mean_time.into(), e.mean_time().into()]);
            r
        }
        "zero" => {
            let z = mean_passage_to_zero(&p)?;
            let mut r = Report::new(cfg, &["n_star", "log_exact", "log_asymptotic"]);
            r.row(vec![
                p.mode()?.into(),
                z.exact.log_mean_time.into(),
                z.log_asymptotic.unwrap_or(f64::NAN).into(),
            ]);
            r
        }
        "exit" => {
            let e = mean_exit_symmetric(&p, cfg.require("delta1")?)?;
            let mut r = Report::new(
                cfg,
                &[
                    "n_star",
                    "n1",
                    "n2",
                    "delta1",
                    "delta2",
                    "rho1",
                    "rho2",
                    "log_exact",
                    "log_asymptotic",
                    "prob_exit_upper",
                ],
            );
            r.row(vec![
                e.n_star.into(),
                e.n1.into(),
                e.n2.into(),
                e.delta1.into(),
                e.delta2.into(),
                e.rho1.into(),
                e.rho2.into(),
                e.exact.log_mean_time.into(),
                e.log_asymptotic.into(),
                e.prob_exit_upper.into(),
            ]);
            r
        }
        "recurrence" => {
            let k: u64 = cfg.require("k")?;
            let t = recurrence_time_estimate(&p, k)?;
            let mut r = Report::new(cfg, &["k", "log_scale", "log_mean_return"]);
            r.row(vec![k.into(), t.log_scale.into(), t.log_mean_return.into()]);
            r
        }
        other => return Err(CliError::Usage(format!("unknown passage mode {other:?}"))),
    };
    Ok(r.into())
}

/// Largest interval handed to the dense exit-time solve.
const MAX_ORACLE_WIDTH: u64 = 5_000;

pub fn passage_mc(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let x0 = match cfg.parse::<u64>("x0")? {
        Some(x) => x,
        None => p.mode()?,
    };
    let mut targets: Vec<u64> = cfg.list("targets")?;
    targets.sort_unstable();
    targets.dedup();
    if targets.is_empty() {
        return Err(CliError::Usage("passage-mc needs --targets".into()));
    }
    let reps: u64 = cfg.require("reps")?;
    let seed = seed(cfg, ctx)?;
    let s = sample_first_passage(&p, x0, &targets, reps, seed, ctx.threads, cfg.require("event_cap")?)?;

    let mut r = Report::new(cfg, &["target", "hits", "fraction"]);
    r.note("x0", x0);
    r.note("reps", reps);
    r.note("mean", s.mean);
    r.note("stderr", s.stderr);
    if let Some(exact) = exact_passage(&p, x0, &targets)? {
        r.note("exact_mean", exact);
        r.note("z_score", (s.mean - exact) / s.stderr);
    }
    for &t in &targets {
        let hits = s.hit_states.iter().filter(|&&h| h == t).count() as u64;
        r.row(vec![t.into(), hits.into(), s.fraction_hitting(t).into()]);
    }
    Ok(r.into())
}

/// Exact mean for the target sets with a closed form or a cheap solve.
fn exact_passage(p: &ChainParams, x0: u64, targets: &[u64]) -> Result<Option<f64>> {
    if p.exploratory || p.variant != Variant::Modified || targets.contains(&x0) {
        return Ok(None);
    }
    match *targets {
        [y] if y < x0 => Ok(Some(mean_passage(p, x0, y)?.mean_time())),
        [n1, n2] if n1 < x0 && x0 < n2 && n2 - n1 <= MAX_ORACLE_WIDTH => {
            Ok(Some(interval_exit(p, n1, n2)?.mean_time_from(x0)))
        }
        _ => Ok(None),
    }
}

pub fn simulate(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let x0 = match cfg.parse::<u64>("x0")? {
        Some(x) => x,
        None if p.require_supercritical().is_ok() => p.mode()?,
        None => p.l,
    };
    let targets: Vec<u64> = cfg.list("targets")?;
    let stop = if targets.is_empty() {
        StopRule::TimeLimit(cfg.require("t_end")?)
    } else {
        StopRule::hit(targets)
    };
    let seed = seed(cfg, ctx)?;
    let traj = simulate_with(&p, x0, &stop, seed, &mut stream_rng(seed, 0), cfg.require("event_cap")?)?;
    if cfg.get("format") == Some("bin") {
        return Ok(Outcome {
            output: Output::Bytes(trajectory_io::encode(&traj)),
            status: Ok(()),
        });
    }
    let mut r = Report::new(cfg, &["time", "state"]);
    let reason = match traj.stop_reason {
        StopReason::TimeLimit => "time_limit".to_string(),
        StopReason::HitTarget(x) => format!("hit_target:{x}"),
        StopReason::Absorbed => "absorbed".to_string(),
    };
    r.note("stop_reason", reason);
    r.note("end_time", traj.end_time);
    r.note("jumps", traj.events.len() as u64 - 1);
    r.note("final_state", traj.final_state());
    for e in &traj.events {
        r.row(vec![e.time.into(), e.state.into()]);
    }
    Ok(r.into())
}

fn grid(t_end: f64, steps: u64) -> Vec<f64> {
    (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
}

pub fn lattice(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let t_end: f64 = cfg.require("t_end")?;
    let n0 = cfg.parse::<u64>("n0")?.unwrap_or(p.l);
    let pairs = match cfg.require::<String>("pairs")?.as_str() {
        "self" => CompetitionPairs::SelfPairs,
        "distinct" => CompetitionPairs::DistinctPairs,
        other => return Err(CliError::Usage(format!("pairs must be self or distinct, got {other:?}"))),
    };
    let mut snapshot_times: Vec<f64> = cfg.list("snapshots")?;
    if snapshot_times.is_empty() {
        snapshot_times = grid(t_end, 10);
    }
    let seed = seed(cfg, ctx)?;
    let opts = LatticeOptions {
        pairs,
        snapshot_times,
        event_cap: cfg.require("event_cap")?,
    };
    let run = logistic_chain::lattice::simulate_mean_field_lattice(
        &p,
        LatticeState::spread(p.l as usize, n0),
        t_end,
        seed,
        &opts,
    )?;
    let mut r = Report::new(cfg, &["t", "total", "occupied_sites", "max_site"]);
    r.note("final_total", run.final_state.total);
    r.note("jumps", run.total.events.len() as u64 - 1);
    for (t, s) in &run.snapshots {
        let occupied = s.site_counts.iter().filter(|&&c| c > 0).count() as u64;
        let max = s.site_counts.iter().copied().max().unwrap_or(0);
        r.row(vec![(*t).into(), s.total.into(), occupied.into(), max.into()]);
    }
    Ok(r.into())
}

pub fn limits(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let p = params(cfg)?;
    let z0 = cfg.parse::<f64>("z0")?.unwrap_or_else(|| z_star(&p));
    let zeta0: f64 = cfg.require("zeta0")?;
    let steps: u64 = cfg.require("steps")?;
    if steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }
    let times = grid(cfg.require("t_end")?, steps);
    let quad_tol: f64 = cfg.require("quad_tol")?;
    let reps: u64 = cfg.require("reps")?;
    let samples = if reps > 0 {
        let seed = seed(cfg, ctx)?;
        Some(fluctuation_samples(&p, p.l, z0, zeta0, &times, reps, seed, ctx.threads)?)
    } else {
        None
    };
    let mut r = Report::new(cfg, &["t", "z", "clt_mean", "clt_var", "emp_mean", "emp_var"]);
    r.note("z_star", z_star(&p));
    if let Some(s) = &samples {
        r.note("realized_zeta0", s.zeta0);
    }
    for (i, &t) in times.iter().enumerate() {
        let z = fluid_solution(&p, z0, t)?.z;
        let m = clt_moments(&p, z0, zeta0, t, quad_tol)?;
        let (em, ev) = samples
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |s| {
                let e = s.empirical(i);
                (e.mean, e.variance)
            });
        r.row(vec![t.into(), z.into(), m.mean.into(), m.variance.into(), em.into(), ev.into()]);
    }
    Ok(r.into())
}

pub fn breiman(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let m_max: u32 = cfg.require("m_max")?;
    let tail_reps: u64 = cfg.require("tail_reps")?;
    let tail = if tail_reps > 0 {
        let p = params(cfg)?;
        let threshold = breiman_nu(cfg.require("tail_m")?)?;
        let scale = 1.0 / ou_params(&p)?.time_scale();
        let t_grid: Vec<f64> = (0..=14).map(|k| 0.25 * k as f64 * scale).collect();
        let seed = seed(cfg, ctx)?;
        Some(ou_exit_tail_check(&p, threshold, &t_grid, tail_reps, seed, ctx.threads)?)
    } else {
        None
    };
    let mut r = Report::new(cfg, &["m", "A", "A_squared", "rate_at_A"]);
    if let Some(check) = tail {
        r.note("tail_threshold", check.threshold);
        r.note("tail_fitted_slope", check.fitted_slope);
        r.note("tail_predicted_slope", check.predicted_slope);
    }
    for m in 1..=m_max {
        let a = breiman_nu(m)?;
        r.row(vec![u64::from(m).into(), a.into(), (a * a).into(), breiman_rate(a)?.into()]);
    }
    Ok(r.into())
}

pub fn validate(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome> {
    let scale = if cfg.flag("quick")? { Scale::Quick } else { Scale::Full };
    let only: Vec<String> = cfg.list("only")?;
    let ids: Vec<&str> = if only.is_empty() {
        CRITERION_IDS.to_vec()
    } else {
        only.iter().map(String::as_str).collect()
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERION_IDS.contains(id)) {
        return Err(CliError::Usage(format!(
            "unknown criterion {bad:?}; known: {}",
            CRITERION_IDS.join(",")
        )));
    }
    let opts = SuiteOptions {
        scale,
        seed: cfg.require("seed")?,
        threads: ctx.threads,
    };
    let results = run_selected(&opts, &ids)?;
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
    let status = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed {
            failed: failed.len(),
            total: results.len(),
        })
    };
    let output = if cfg.get("format") == Some("text") {
        let mut s = cfg.header_lines();
        for c in &results {
            s.push_str(&format!("{c}\n"));
        }
        s.push_str(&format!(
            "{} passed, {} failed{}\n",
            results.len() - failed.len(),
            failed.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" ({})", failed.join(", "))
            }
        ));
        Output::Text(s)
    } else {
        let mut r = Report::new(cfg, &["id", "name", "passed", "detail", "seconds"]);
        r.note("passed", (results.len() - failed.len()) as u64);
        r.note("failed", failed.len() as u64);
        for c in results {
            r.row(vec![c.id.into(), c.name.into(), c.passed.into(), c.detail.into(), c.seconds.into()]);
        }
        Output::Report(r)
    };
    Ok(Outcome { output, status })
}
