//! `logchain`: command-line access to the logistic birth-death chain toolkit.
//!
//! Every option can also come from a `key = value` config file (`--config`);
//! flags win over the file, the file wins over built-in defaults. The
//! effective settings are echoed at the top of every CSV output as
//! `# config: key=value` lines (a `config` object in JSON), and such an
//! output can itself be passed back as `--config` to repeat the run.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use crate::commands::{Ctx, Outcome, Output};
pub use crate::config::RunConfig;
pub use crate::error::CliError;
use crate::output::{render_csv, render_json};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LOGCHAIN_OUT_DIR";

fn chain_args(with_size: bool) -> Vec<Arg> {
    let mut v = vec![
        Arg::new("b")
            .long("b")
            .value_parser(value_parser!(f64))
            .default_value("2")
            .help("Per-capita birth rate"),
        Arg::new("mu")
            .long("mu")
            .value_parser(value_parser!(f64))
            .default_value("1")
            .help("Per-capita death rate"),
        Arg::new("gamma")
            .long("gamma")
            .value_parser(value_parser!(f64))
            .default_value("1")
            .help("Competition strength"),
    ];
    if with_size {
        v.push(
            Arg::new("L")
                .long("L")
                .value_parser(value_parser!(u64))
                .default_value("100")
                .help("System size"),
        );
    }
    v.push(
        Arg::new("variant")
            .long("variant")
            .value_parser(["modified", "unmodified"])
            .default_value("modified")
            .help("modified: β_x = b(x+1); unmodified: β_0 = 1, β_x = bx"),
    );
    v.push(
        Arg::new("exploratory")
            .long("exploratory")
            .action(ArgAction::SetTrue)
            .help("Allow b <= mu or gamma = 0 (simulation only)"),
    );
    v
}

fn io_args(formats: &'static [&'static str]) -> Vec<Arg> {
    vec![
        Arg::new("config")
            .long("config")
            .value_parser(value_parser!(PathBuf))
            .help("key = value file, or an earlier output, merged under the flags"),
        Arg::new("format")
            .long("format")
            .value_parser(formats.to_vec())
            .help(format!("Output format [default: {}]", formats[0])),
        Arg::new("out")
            .long("out")
            .short('o')
            .value_parser(value_parser!(PathBuf))
            .help("Output file; relative paths resolve under the output directory"),
        Arg::new("out_dir")
            .long("out-dir")
            .env(OUT_DIR_ENV)
            .value_parser(value_parser!(PathBuf))
            .help("Output directory; when set without --out, writes <command>.<ext> there"),
        Arg::new("threads")
            .long("threads")
            .value_parser(value_parser!(u64).range(1..=4096))
            .help("Worker threads for replicated runs (results do not depend on it)"),
    ]
}

fn seed_arg() -> Arg {
    Arg::new("seed")
        .long("seed")
        .value_parser(value_parser!(u64))
        .help("Master seed; generated and printed on stderr when omitted")
}

fn opt(id: &'static str, long: &'static str, parser: clap::builder::ValueParser, help: &'static str) -> Arg {
    Arg::new(id).long(long).value_parser(parser).help(help)
}

const CSV_JSON: &[&str] = &["csv", "json"];

/// The full command-line interface.
pub fn cli() -> Command {
    let f64p = || value_parser!(f64).into();
    let u64p = || value_parser!(u64).into();
    let strp = || value_parser!(String);
    Command::new("logchain")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Stationary laws, passage times, simulation and scaling limits of the logistic birth-death chain")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("stationary")
                .about("Stationary law next to its local-CLT Gaussian")
                .args(chain_args(true))
                .args(io_args(CSV_JSON))
                .arg(opt("tail_tol", "tail-tol", f64p(), "Bound on the neglected tail mass").default_value("1e-15"))
                .arg(opt("x_min", "x-min", u64p(), "First state to print"))
                .arg(opt("x_max", "x-max", u64p(), "Last state to print (capped at the truncation)")),
        )
        .subcommand(
            Command::new("ldcheck")
                .about("Large-deviation rate of the stationary law against -ln π")
                .args(chain_args(false))
                .args(io_args(CSV_JSON))
                .arg(opt("sizes", "sizes", strp(), "Comma-separated system sizes").default_value("1000,10000,100000"))
                .arg(opt("deltas", "deltas", strp(), "Comma-separated offsets δ (x = n* + δL)").default_value("0.1,0.3")),
        )
        .subcommand(
            Command::new("hypergeom")
                .about("F(A, z) by series, incomplete gamma and the large-A regimes")
                .args(io_args(CSV_JSON))
                .arg(opt("A", "A", f64p(), "First argument"))
                .arg(opt("z", "z", f64p(), "Second argument"))
                .arg(opt("tol", "tol", f64p(), "Series relative tolerance").default_value("1e-15"))
                .arg(
                    opt("h_threshold", "h-threshold", f64p(), "|h| beyond which the tail regimes are used")
                        .default_value("4.5"),
                ),
        )
        .subcommand(
            Command::new("passage")
                .about("Exact and asymptotic mean passage and exit times")
                .args(chain_args(true))
                .args(io_args(CSV_JSON))
                .arg(
                    Arg::new("mode")
                        .long("mode")
                        .value_parser(["exit", "step", "passage", "zero", "recurrence"])
                        .default_value("exit")
                        .help("exit: symmetric window around n*; step: y+1 -> y; passage: x -> y; zero: n* -> 0; recurrence: return to k"),
                )
                .arg(opt("x", "x", u64p(), "Start state (mode passage)"))
                .arg(opt("y", "y", u64p(), "Target state (modes step, passage)"))
                .arg(opt("k", "k", u64p(), "State (mode recurrence)"))
                .arg(opt("delta1", "delta1", f64p(), "Lower window offset (mode exit)").default_value("0.5"))
                .arg(
                    opt("h_threshold", "h-threshold", f64p(), "|h| beyond which the tail regimes are used")
                        .default_value("4.5"),
                ),
        )
        .subcommand(
            Command::new("passage-mc")
                .about("Monte-Carlo first-passage times, compared with the exact mean when available")
                .args(chain_args(true))
                .args(io_args(&["json", "csv"]))
                .arg(seed_arg())
                .arg(opt("x0", "x0", u64p(), "Start state [default: n*]"))
                .arg(opt("targets", "targets", strp(), "Comma-separated target states"))
                .arg(opt("reps", "reps", u64p(), "Replicates").default_value("1000"))
                .arg(opt("event_cap", "event-cap", u64p(), "Jump cap per replicate").default_value("1000000000")),
        )
        .subcommand(
            Command::new("simulate")
                .about("One exact trajectory (Gillespie)")
                .args(chain_args(true))
                .args(io_args(&["csv", "json", "bin"]))
                .arg(seed_arg())
                .arg(opt("x0", "x0", u64p(), "Start state [default: n*, or L when not supercritical]"))
                .arg(opt("t_end", "t-end", f64p(), "Time horizon").default_value("10"))
                .arg(opt("targets", "targets", strp(), "Stop on entering any of these states instead"))
                .arg(opt("event_cap", "event-cap", u64p(), "Jump cap").default_value("1000000000")),
        )
        .subcommand(
            Command::new("lattice")
                .about("Mean-field lattice of L sites, snapshot summaries")
                .args(chain_args(true))
                .args(io_args(CSV_JSON))
                .arg(seed_arg())
                .arg(opt("n0", "n0", u64p(), "Initial particles, spread evenly [default: L]"))
                .arg(opt("t_end", "t-end", f64p(), "Time horizon").default_value("5"))
                .arg(
                    Arg::new("pairs")
                        .long("pairs")
                        .value_parser(["self", "distinct"])
                        .default_value("self")
                        .help("Competition over all ordered pairs or distinct pairs only"),
                )
                .arg(opt("snapshots", "snapshots", strp(), "Comma-separated snapshot times [default: 11 evenly spaced]"))
                .arg(opt("event_cap", "event-cap", u64p(), "Jump cap").default_value("1000000000")),
        )
        .subcommand(
            Command::new("limits")
                .about("Fluid limit and Gaussian fluctuations, optionally against simulation")
                .args(chain_args(true))
                .args(io_args(CSV_JSON))
                .arg(seed_arg())
                .arg(opt("z0", "z0", f64p(), "Initial density [default: z*]"))
                .arg(opt("zeta0", "zeta0", f64p(), "Initial fluctuation").default_value("0"))
                .arg(opt("t_end", "t-end", f64p(), "Time horizon").default_value("2"))
                .arg(opt("steps", "steps", u64p(), "Grid intervals").default_value("20"))
                .arg(opt("reps", "reps", u64p(), "Simulated replicates at size L (0: theory only)").default_value("0"))
                .arg(opt("quad_tol", "quad-tol", f64p(), "Quadrature tolerance").default_value("1e-10")),
        )
        .subcommand(
            Command::new("breiman")
                .about("Roots of the Breiman polynomials and the OU exit-time tail")
                .args(chain_args(true))
                .args(io_args(CSV_JSON))
                .arg(seed_arg())
                .arg(opt("m_max", "m-max", value_parser!(u32).range(1..=40).into(), "Largest m").default_value("6"))
                .arg(opt("tail_reps", "tail-reps", u64p(), "OU exit replicates (0: skip the tail check)").default_value("0"))
                .arg(opt("tail_m", "tail-m", value_parser!(u32).range(1..=40).into(), "Window A = A(m) for the tail check").default_value("1")),
        )
        .subcommand(
            Command::new("validate")
                .about("Run the acceptance criteria; exit 0 iff every requested check passes")
                .args(io_args(&["text", "csv", "json"]))
                .arg(seed_arg().default_value("20240601"))
                .arg(
                    Arg::new("quick")
                        .long("quick")
                        .action(ArgAction::SetTrue)
                        .help("Smaller Monte-Carlo budgets"),
                )
                .arg(opt("only", "only", strp(), "Comma-separated criterion ids")),
        )
}

/// Command line over config file over defaults.
fn effective_config(name: &str, sub: &ArgMatches, def: &Command) -> Result<RunConfig, CliError> {
    let from_file = match sub.get_one::<PathBuf>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            config::parse_config_text(&text)?
        }
        None => Default::default(),
    };
    let ids: Vec<&str> = def.get_arguments().map(|a| a.get_id().as_str()).collect();
    if let Some(k) = from_file.keys().find(|k| !ids.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("unknown key {k:?} in config for {name}")));
    }
    let raw = |id: &str| -> Option<String> {
        let vals: Vec<String> = sub.get_raw(id)?.map(|v| v.to_string_lossy().into_owned()).collect();
        Some(vals.join(","))
    };
    let mut cfg = RunConfig::new(name);
    for id in ids {
        if matches!(id, "help" | "version") {
            continue;
        }
        let value = match sub.value_source(id) {
            Some(ValueSource::CommandLine | ValueSource::EnvVariable) => raw(id),
            src => from_file
                .get(id)
                .cloned()
                .or_else(|| (src == Some(ValueSource::DefaultValue)).then(|| raw(id)).flatten()),
        };
        if let Some(v) = value {
            cfg.values.insert(id.to_string(), v);
        }
    }
    if cfg.get("format").is_none() {
        let first = def
            .get_arguments()
            .find(|a| a.get_id() == "format")
            .and_then(|a| a.get_possible_values().first().map(|v| v.get_name().to_string()));
        if let Some(f) = first {
            cfg.set("format", f);
        }
    }
    Ok(cfg)
}

fn dispatch(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "stationary" => commands::stationary(cfg, ctx),
        "ldcheck" => commands::ldcheck(cfg, ctx),
        "hypergeom" => commands::hypergeom(cfg, ctx),
        "passage" => commands::passage(cfg, ctx),
        "passage-mc" => commands::passage_mc(cfg, ctx),
        "simulate" => commands::simulate(cfg, ctx),
        "lattice" => commands::lattice(cfg, ctx),
        "limits" => commands::limits(cfg, ctx),
        "breiman" => commands::breiman(cfg, ctx),
        "validate" => commands::validate(cfg, ctx),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

/// `--out`, resolved under the output directory when relative; without
/// `--out`, `<dir>/<command>.<ext>` when a directory is configured, else
/// stdout (`None`).
pub fn output_path(cfg: &RunConfig) -> Option<PathBuf> {
    let dir = cfg.get("out_dir").map(PathBuf::from);
    match (cfg.get("out").map(PathBuf::from), dir) {
        (Some(out), Some(dir)) if out.is_relative() => Some(dir.join(out)),
        (Some(out), _) => Some(out),
        (None, Some(dir)) => {
            let ext = match cfg.get("format") {
                Some("text") => "txt",
                Some(f) => f,
                None => "out",
            };
            Some(dir.join(format!("{}.{ext}", cfg.command)))
        }
        (None, None) => None,
    }
}

fn write_output(bytes: &[u8], path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    fn io(p: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: p.display().to_string(),
            source,
        }
    }
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io(parent))?;
            }
            std::fs::write(p, bytes).map_err(io(p))
        }
        None => stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(io(Path::new("<stdout>"))),
    }
}

fn execute(args: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut def = cli();
    let matches = def.try_get_matches_from_mut(args).map_err(|e| CliError::Usage(e.to_string()))?;
    def.build();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let sub_def = def.find_subcommand(name).expect("parsed subcommand exists");
    let mut cfg = effective_config(name, sub, sub_def)?;
    let threads = cfg.parse::<usize>("threads")?;
    let mut ctx = Ctx { stderr, threads };
    let outcome = dispatch(&mut cfg, &mut ctx)?;
    let bytes = match outcome.output {
        Output::Report(r) if cfg.get("format") == Some("json") => render_json(&r).into_bytes(),
        Output::Report(r) => render_csv(&r).into_bytes(),
        Output::Text(s) => s.into_bytes(),
        Output::Bytes(b) => b,
    };
    let path = output_path(&cfg);
    write_output(&bytes, path.as_deref(), stdout)?;
    if let Some(p) = &path {
        let _ = writeln!(ctx.stderr, "wrote {}", p.display());
    }
    outcome.status
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code: 0 on success, 2 on usage errors, 1 on numerical, I/O or check
/// failures.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // Help and version are successful usage, printed where clap would print them.
    if let Err(e) = cli().try_get_matches_from(args.clone()) {
        let text = e.render().to_string();
        let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
        let _ = sink.write_all(text.as_bytes());
        return e.exit_code();
    }
    match execute(args, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
