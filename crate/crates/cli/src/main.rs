//! `bperc`: batch front end for the bootstrap percolation engine.

mod manifest;
mod verify;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bperc_core::bounds::{self, BoundReport};
use bperc_core::estimator::{self, SweepRow, SweepTable};
use bperc_core::mechanisms::{self, FamilyConstraints, MechanismSpec};
use bperc_core::rng::trial_rng;
use bperc_core::{oracle, Config, Error, ModelKind, Rect};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "bperc", version, about = "Bootstrap percolation laboratory")]
struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "BPERC_THREADS")]
    threads: Option<usize>,

    /// Payload format (default json; `closure` defaults to grid text).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the payload here instead of stdout; the run manifest goes to
    /// `<PATH>.manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closure of a grid read from --in (or stdin).
    Closure {
        #[arg(long, default_value = "standard")]
        model: ModelKind,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Monte Carlo estimate of I(L,p).
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "L")]
        side: u64,
        #[arg(long)]
        p: f64,
    },
    /// Stochastic bisection for p_alpha(L).
    Pc {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "L")]
        side: u64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// L-window endpoints at fixed p.
    Lwindow {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long = "max-L", default_value_t = estimator::MAX_SIDE)]
        max_side: u64,
    },
    /// Estimates on every (L, p) in the product of --L and --p.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "L", value_delimiter = ',', required = true)]
        sides: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
    /// Evaluate a bound formula.
    Bounds {
        #[command(subcommand)]
        formula: BoundCommand,
    },
    /// Growth events D, J and E.
    Mech {
        #[command(subcommand)]
        action: MechCommand,
    },
    /// Exact enumeration oracles.
    Oracle {
        #[command(subcommand)]
        action: OracleCommand,
    },
    /// Run invariant suites.
    Verify {
        #[arg(long, value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value = "standard")]
    model: ModelKind,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum BoundCommand {
    /// Lower bound on I(L) from I(l).
    CompLower {
        #[arg(long = "L")]
        big: u64,
        #[arg(long = "l")]
        small: u64,
        #[arg(long)]
        p: f64,
        #[arg(long = "I")]
        i_small: f64,
    },
    /// Upper bound on I(L) from I(l).
    CompUpper {
        #[arg(long = "L")]
        big: u64,
        #[arg(long = "l")]
        small: u64,
        #[arg(long)]
        p: f64,
        #[arg(long = "I")]
        i_small: f64,
    },
    /// Diagonal lower bound on I_M(a).
    Diag {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        p: f64,
    },
    /// I(b) >= I(a) (F_a^b)^2.
    Growth {
        #[arg(long = "I")]
        i_a: f64,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        p: f64,
    },
    /// Scanning lower bound on I(l) from I(b).
    Scan {
        #[arg(long)]
        b: u64,
        #[arg(long = "l")]
        ell: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        p: f64,
        #[arg(long = "I")]
        i_b: f64,
    },
    /// Modified-model nucleation bound (with --chain: before simplification).
    ModNuc {
        #[arg(long = "B")]
        big_b: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        chain: bool,
    },
    /// Explicit certificate I_M(L,p) >= 1/2.
    Explicit {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        log_l: LogL,
    },
    /// Window constants (C_-, C_+).
    Window {
        #[arg(long)]
        eps: f64,
    },
    /// lambda and lambda_M.
    Constants,
    /// One of the helper functions q, f, g, beta, dilog, integral-g.
    Special {
        #[arg(value_enum)]
        name: Special,
        #[arg(long)]
        x: f64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct LogL {
    #[arg(long = "log10L")]
    log10: Option<f64>,
    #[arg(long = "lnL")]
    ln: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Special {
    Q,
    F,
    G,
    Beta,
    Dilog,
    IntegralG,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Event {
    D,
    J,
    E,
}

#[derive(Args, Debug)]
struct EventArgs {
    #[arg(long, value_enum, default_value_t = Event::E)]
    event: Event,
    /// For D and J.
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    /// For E: `{"B":n,"pairs":[[a1,b1],...]}`.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Subcommand, Debug)]
enum MechCommand {
    /// Whether the grid from --in satisfies the event.
    Check {
        #[command(flatten)]
        event: EventArgs,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Exact probability of the event.
    Prob {
        #[command(flatten)]
        event: EventArgs,
        #[arg(long)]
        p: f64,
    },
    /// A field conditioned on E(spec), as a grid.
    Sample {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Recover the spec of the grid from --in.
    Decode {
        #[arg(long = "B")]
        big_b: u64,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Disjoint-family lower bound on I(B).
    Lower {
        #[arg(long = "B")]
        big_b: u64,
        #[arg(long)]
        p: f64,
        /// JSON array of specs.
        #[arg(long, conflicts_with = "m")]
        family: Option<PathBuf>,
        /// Sum over every spec with this many jogs satisfying the
        /// 1/p < a1 <= ... <= bm < 2/p constraints.
        #[arg(long)]
        m: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Spanning counts of R(w,h) by exhaustive enumeration.
    Poly {
        #[arg(long = "L")]
        side: Option<i64>,
        #[arg(long)]
        width: Option<i64>,
        #[arg(long)]
        height: Option<i64>,
        #[arg(long, default_value = "standard")]
        model: ModelKind,
        /// Also evaluate at this p.
        #[arg(long)]
        p: Option<f64>,
    },
    /// No-double-gap probability for independent events.
    Dgap {
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
    },
}

/// Failure of a subcommand, mapped onto the exit code contract.
enum Failure {
    Usage(String),
    Resource(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceCap(_) | Error::EnumerationCap { .. } => Failure::Resource(e.to_string()),
            Error::InvalidRect { .. }
            | Error::InvalidProbability { .. }
            | Error::OutOfRange(_)
            | Error::DuplicateSpec(_)
            | Error::Parse { .. } => Failure::Usage(e.to_string()),
            Error::NonConvergence { .. } | Error::ScanExhausted(_) | Error::NoMechanism(_) => {
                Failure::Runtime(e.to_string())
            }
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Payload bytes plus the seed recorded in the manifest.
struct Payload {
    bytes: Vec<u8>,
    seed: Option<u64>,
    /// Verification failures still write the report before exiting 4.
    failed: Option<String>,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn table_csv(table: &SweepTable) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    Ok(buf)
}

fn emit<T: Serialize>(format: Format, value: &T, table: Option<SweepTable>) -> Outcome<Vec<u8>> {
    match (format, table) {
        (Format::Csv, Some(t)) => table_csv(&t),
        (Format::Csv, None) => Err(Failure::Usage("this command has no CSV form; use --format json".into())),
        (Format::Json, _) => Ok(json(value)),
    }
}

fn read_input(path: &Option<PathBuf>) -> Outcome<String> {
    match path {
        Some(p) if p != Path::new("-") => Ok(fs::read_to_string(p)?),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn read_grid(path: &Option<PathBuf>) -> Outcome<Config> {
    Ok(Config::from_grid_text(&read_input(path)?)?)
}

fn parse_spec(text: &str) -> Outcome<MechanismSpec> {
    let spec: MechanismSpec =
        serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad --spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

fn row(model: ModelKind, side: u64, p: f64, e: &estimator::Estimate) -> SweepRow {
    SweepRow {
        model,
        side,
        p,
        trials: e.trials,
        successes: e.successes,
        value: e.value,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
        seed: e.seed,
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Outcome<T> {
    v.ok_or_else(|| Failure::Usage(format!("missing {flag}")))
}

#[derive(Serialize)]
struct EventOutcome<'a> {
    event: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_probability: Option<f64>,
}

fn run_mech(action: MechCommand, format: Format) -> Outcome<Payload> {
    let mut seed = None;
    let bytes = match action {
        MechCommand::Check { event, input } => {
            let cfg = read_grid(&input)?;
            let (name, holds) = match event.event {
                Event::D => ("D", mechanisms::check_event_d(&cfg, need(event.a, "--a")?, need(event.b, "--b")?)?),
                Event::J => ("J", mechanisms::check_event_j(&cfg, need(event.a, "--a")?, need(event.b, "--b")?)?),
                Event::E => {
                    let spec = parse_spec(&need(event.spec, "--spec")?)?;
                    ("E", mechanisms::check_event_e(&cfg, &spec)?)
                }
            };
            let out = EventOutcome {
                event: name,
                holds: Some(holds),
                probability: None,
                log_probability: None,
            };
            emit(format, &out, None)?
        }
        MechCommand::Prob { event, p } => {
            let (name, log) = match event.event {
                Event::D => ("D", mechanisms::log_prob_event_d(need(event.a, "--a")?, need(event.b, "--b")?, p)?),
                Event::J => ("J", mechanisms::log_prob_event_j(need(event.a, "--a")?, need(event.b, "--b")?, p)?),
                Event::E => {
                    let spec = parse_spec(&need(event.spec, "--spec")?)?;
                    ("E", mechanisms::log_prob_event_e(&spec, p)?)
                }
            };
            let out = EventOutcome {
                event: name,
                holds: None,
                probability: Some(log.exp()),
                log_probability: Some(log),
            };
            emit(format, &out, None)?
        }
        MechCommand::Sample { spec, p, seed: s } => {
            let spec = parse_spec(&spec)?;
            seed = Some(s);
            let cfg = mechanisms::sample_conditioned_on_e(&spec, p, &mut trial_rng(s, 0))?;
            match format {
                Format::Json => json(&serde_json::json!({ "spec": spec, "grid": cfg.to_grid_text() })),
                Format::Csv => return Err(Failure::Usage("sample has no CSV form".into())),
            }
        }
        MechCommand::Decode { big_b, input } => {
            let cfg = read_grid(&input)?;
            emit(format, &mechanisms::decode_mechanism(&cfg, big_b)?, None)?
        }
        MechCommand::Lower { big_b, p, family, m } => {
            let value = match (family, m) {
                (Some(path), _) => {
                    let specs: Vec<MechanismSpec> = serde_json::from_str(&fs::read_to_string(path)?)
                        .map_err(|e| Failure::Usage(format!("bad family file: {e}")))?;
                    let bound = mechanisms::mechanism_family_lower(big_b, p, &specs)?;
                    serde_json::json!({ "B": big_b, "p": p, "specs": specs.len(), "bound": bound })
                }
                (None, Some(m)) => {
                    let c = FamilyConstraints::possibilities(big_b, p, m)?;
                    let (count, log_bound) = mechanisms::family_dp(big_b, p, &c)?;
                    serde_json::json!({
                        "B": big_b, "p": p, "constraints": c, "specs": count,
                        "log_bound": log_bound, "bound": log_bound.exp(),
                    })
                }
                (None, None) => return Err(Failure::Usage("give --family or --m".into())),
            };
            emit(format, &value, None)?
        }
    };
    Ok(Payload {
        bytes,
        seed,
        failed: None,
    })
}

fn run_bounds(formula: BoundCommand, format: Format) -> Outcome<Vec<u8>> {
    let report: BoundReport = match formula {
        BoundCommand::CompLower { big, small, p, i_small } => bounds::comp_lower(big, small, p, i_small)?,
        BoundCommand::CompUpper { big, small, p, i_small } => bounds::comp_upper(big, small, p, i_small)?,
        BoundCommand::Diag { a, p } => bounds::diag_lower(a, p)?,
        BoundCommand::Growth { i_a, a, b, p } => bounds::growth_lower(i_a, a, b, p)?,
        BoundCommand::Scan { b, ell, m, p, i_b } => bounds::scan_lower(b, ell, m, p, i_b)?,
        BoundCommand::ModNuc { big_b, p, chain } => {
            if chain {
                bounds::mod_nuc_chain(big_b, p)?
            } else {
                bounds::mod_nuc_lower(big_b, p)?
            }
        }
        BoundCommand::Explicit { p, log_l } => {
            let ln = match (log_l.log10, log_l.ln) {
                (Some(l10), _) => l10 * std::f64::consts::LN_10,
                (None, Some(ln)) => ln,
                (None, None) => unreachable!("clap enforces one of --log10L/--lnL"),
            };
            return emit(format, &bounds::explicit_certificate(p, ln)?, None);
        }
        BoundCommand::Window { eps } => {
            let (c_minus, c_plus) = bounds::window_constants(eps)?;
            return emit(format, &serde_json::json!({ "eps": eps, "C_minus": c_minus, "C_plus": c_plus }), None);
        }
        BoundCommand::Constants => {
            return emit(format, &bounds::ThresholdConstants::default(), None);
        }
        BoundCommand::Special { name, x } => {
            let (label, value) = match name {
                Special::Q => ("q", bounds::q_of_p(x)?),
                Special::F => ("f", bounds::f_(x)?),
                Special::G => ("g", bounds::g_(x)?),
                Special::Beta => ("beta", bounds::beta_(x)?),
                Special::Dilog => ("dilog", bounds::dilog(x)?),
                Special::IntegralG => ("integral_g", bounds::integral_g(x)?),
            };
            return emit(format, &serde_json::json!({ "function": label, "x": x, "value": value }), None);
        }
    };
    emit(format, &report, None)
}

fn run_oracle(action: OracleCommand, format: Format) -> Outcome<Vec<u8>> {
    match action {
        OracleCommand::Poly {
            side,
            width,
            height,
            model,
            p,
        } => {
            let r = match (side, width, height) {
                (Some(l), None, None) => Rect::square(l)?,
                (None, Some(w), Some(h)) => Rect::rect(w, h)?,
                _ => return Err(Failure::Usage("give --L or both --width and --height".into())),
            };
            let poly = oracle::exact_span_polynomial(r, model)?;
            match p {
                None => emit(format, &poly, None),
                Some(p) => {
                    let value = poly.eval(p)?;
                    emit(
                        format,
                        &serde_json::json!({ "area": poly.area, "counts": poly.counts, "p": p, "I": value }),
                        None,
                    )
                }
            }
        }
        OracleCommand::Dgap { u } => {
            let value = oracle::double_gap_exact(&u)?;
            emit(format, &serde_json::json!({ "u": u, "value": value }), None)
        }
    }
}

fn run(cli: Cli) -> Outcome<Payload> {
    let format = cli.format.unwrap_or(Format::Json);
    let plain = |bytes: Vec<u8>, seed: Option<u64>| Payload {
        bytes,
        seed,
        failed: None,
    };
    Ok(match cli.command {
        Command::Closure { model, input } => {
            let cfg = read_grid(&input)?;
            let closed = bperc_core::lattice::closure(&cfg, model);
            let bytes = match cli.format {
                None => closed.to_grid_text().into_bytes(),
                Some(Format::Json) => json(&serde_json::json!({
                    "model": model,
                    "spanned": closed.is_full(),
                    "occupied": closed.count_occupied(),
                    "grid": closed.to_grid_text(),
                })),
                Some(Format::Csv) => return Err(Failure::Usage("closure has no CSV form".into())),
            };
            plain(bytes, None)
        }
        Command::Simulate { run, side, p } => {
            let e = estimator::estimate_i(side, p, run.model, run.trials, run.seed)?;
            let table = SweepTable {
                rows: vec![row(run.model, side, p, &e)],
                errors: vec![],
            };
            plain(emit(format, &table.rows[0], Some(table.clone()))?, Some(run.seed))
        }
        Command::Pc { run, side, alpha, tol } => {
            let r = estimator::estimate_p_alpha(side, alpha, run.model, tol, run.trials, run.seed)?;
            let table = SweepTable {
                rows: r.probes.iter().map(|pr| row(run.model, side, pr.p, &pr.estimate)).collect(),
                errors: vec![],
            };
            plain(emit(format, &r, Some(table))?, Some(run.seed))
        }
        Command::Lwindow { run, p, eps, max_side } => {
            let w = estimator::estimate_l_window_with(p, eps, run.model, run.trials, run.seed, max_side)?;
            let table = SweepTable {
                rows: w.points.iter().map(|(l, e)| row(run.model, *l, p, e)).collect(),
                errors: vec![],
            };
            let value = serde_json::json!({
                "p": w.p, "eps": w.eps, "model": w.model,
                "L_lower": w.l_lower, "L_upper": w.l_upper,
                "p_log_ratio": w.width(),
                "trials": w.trials, "seed": w.seed, "points": w.points,
            });
            plain(emit(format, &value, Some(table))?, Some(run.seed))
        }
        Command::Sweep { run, sides, p } => {
            let points: Vec<(u64, f64)> = sides
                .iter()
                .flat_map(|&l| p.iter().map(move |&q| (l, q)))
                .collect();
            let table = estimator::sweep(&points, run.model, run.trials, run.seed);
            for e in &table.errors {
                eprintln!("bperc: sweep point L={} p={} failed: {}", e.side, e.p, e.error);
            }
            plain(emit(format, &table, Some(table.clone()))?, Some(run.seed))
        }
        Command::Bounds { formula } => plain(run_bounds(formula, format)?, None),
        Command::Mech { action } => run_mech(action, format)?,
        Command::Oracle { action } => plain(run_oracle(action, format)?, None),
        Command::Verify { suite, seed } => {
            let report = verify::run(suite, seed);
            let failed = (!report.passed).then(|| format!("verification suite {suite:?} failed"));
            Payload {
                bytes: json(&report),
                seed: Some(seed),
                failed,
            }
        }
    })
}

fn deliver(payload: &Payload, out: &Option<PathBuf>, argv: &[String]) -> io::Result<()> {
    let manifest = RunManifest::new(argv, payload.seed, &payload.bytes);
    match out {
        Some(path) => {
            fs::write(path, &payload.bytes)?;
            let mut side = path.as_os_str().to_owned();
            side.push(".manifest.json");
            fs::write(PathBuf::from(side), json(&manifest))?;
        }
        None => {
            io::stdout().write_all(&payload.bytes)?;
            eprintln!("{}", serde_json::to_string(&manifest).expect("serializable"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("bperc: cannot start {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok(payload) => {
            if let Err(e) = deliver(&payload, &out, &argv) {
                eprintln!("bperc: {e}");
                return ExitCode::from(1);
            }
            match payload.failed {
                Some(msg) => {
                    eprintln!("bperc: {msg}");
                    ExitCode::from(4)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (2, m),
                Failure::Resource(m) => (3, m),
                Failure::Runtime(m) => (1, m),
            };
            eprintln!("bperc: {msg}");
            ExitCode::from(code)
        }
    }
}
