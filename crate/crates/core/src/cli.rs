//! The `cqrepair` command line.
//!
//! Exit codes: 0 success or `yes`, 1 `no` or nothing found, 2 unreadable or
//! malformed input, 3 schema mismatch, 4 `yes-at-bound(N)`, 5 invalid flags,
//! 6 timeout, 7 existence undecided within the bound.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;

use crate::cod;
use crate::dist_repair::{self, Mode};
use crate::error::{Error, Result};
use crate::fitting::{self, enumerate_cqs};
use crate::hom::{evaluate, fits};
use crate::metrics::{self, ExampleDistribution, Metric};
use crate::model::{json, parse_cq, parse_example, parse_instance, parse_labeled, Cq, LabeledExampleSet, Schema};
use crate::result::{dedup_equivalent, unranked, BoundedVerdict, RepairResult, Status};

#[derive(Parser, Debug)]
#[command(name = "cqrepair", version, about = "Repair conjunctive queries from labeled examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a query on an instance; one answer tuple per line.
    Eval { query: PathBuf, instance: PathBuf },
    /// Construct, verify or decide existence of repairs.
    Repair(RepairArgs),
    /// Distance between two queries.
    Distance {
        q1: PathBuf,
        q2: PathBuf,
        #[arg(long, value_enum, default_value = "edit")]
        metric: MetricArg,
        #[arg(long)]
        mu_file: Option<PathBuf>,
    },
    /// Enumeration and fitting oracles over a schema.
    Oracle {
        schema: PathBuf,
        #[arg(value_enum)]
        kind: OracleKind,
        #[arg(long, default_value_t = 0)]
        arity: usize,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct RepairArgs {
    query: PathBuf,
    examples: PathBuf,
    #[arg(long, value_enum, default_value = "edit")]
    preorder: PreorderArg,
    #[arg(long, value_enum, default_value = "repair")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "construct")]
    action: ActionArg,
    #[arg(long, default_value_t = 4)]
    size_bound: usize,
    #[arg(long)]
    distance_bound: Option<usize>,
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[arg(long)]
    mu_file: Option<PathBuf>,
    /// Seconds; 0 disables the limit.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PreorderArg {
    Cod,
    Edit,
    Sdi,
    Sdq,
    Mu,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Repair,
    Generalize,
    Specialize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ActionArg {
    Construct,
    Verify,
    Exists,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MetricArg {
    Edit,
    Sdi,
    Sdq,
    Mu,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OracleKind {
    Enumerate,
    Fit,
    MostSpecific,
    Wmg,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Repair => Mode::Repair,
            ModeArg::Generalize => Mode::Generalize,
            ModeArg::Specialize => Mode::Specialize,
        }
    }
}

/// What a command prints and how it exits.
struct Outcome {
    stdout: String,
    code: i32,
}

impl Outcome {
    fn new(stdout: String, code: i32) -> Self {
        Outcome { stdout, code }
    }
}

/// Failure before or during a command.
enum Failure {
    Flags(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SchemaMismatch(_) | Error::ArityMismatch(_) | Error::UnknownRelation(_) => 3,
        Error::NoFittingExists => 1,
        Error::EmptyPositives => 5,
        Error::Timeout => 6,
        _ => 2,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    5
                }
            };
        }
    };
    if let Err(msg) = check_threads(std::env::var("CQREPAIR_THREADS").ok()) {
        let _ = writeln!(err, "error: {msg}");
        return 5;
    }
    let timeout = match &cli.command {
        Command::Repair(a) if a.timeout.is_nan() || a.timeout < 0.0 => {
            let _ = writeln!(err, "error: --timeout must be a non-negative number of seconds");
            return 5;
        }
        Command::Repair(a) if a.timeout > 0.0 => Some(Duration::from_secs_f64(a.timeout)),
        _ => None,
    };
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(execute(cli.command));
    });
    let result = match timeout {
        Some(t) => match rx.recv_timeout(t) {
            Ok(r) => r,
            Err(_) => Err(Failure::Engine(Error::Timeout)),
        },
        None => rx.recv().unwrap_or(Err(Failure::Engine(Error::Io("worker thread panicked".into())))),
    };
    match result {
        Ok(o) => {
            let _ = write!(out, "{}", o.stdout);
            o.code
        }
        Err(Failure::Flags(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            5
        }
        Err(Failure::Engine(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn check_threads(value: Option<String>) -> std::result::Result<(), String> {
    match value {
        None => Ok(()),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(()),
            _ => Err(format!("CQREPAIR_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_query(path: &Path) -> Result<Cq> {
    parse_cq(&read(path)?)
}

/// Examples as a labeled text collection or a JSON document.
fn read_examples(path: &Path) -> Result<LabeledExampleSet> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(json::from_json(&text)?.1)
    } else {
        parse_labeled(&text)
    }
}

/// Lines `p/q : file`, with files relative to the distribution file.
fn read_mu(path: &Path) -> Result<ExampleDistribution> {
    let text = read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut support = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = crate::model::strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        let (p, file) = line
            .split_once(':')
            .ok_or_else(|| Error::syntax(i + 1, "expected `p/q : file`"))?;
        let p: Ratio<u64> = p
            .trim()
            .parse()
            .map_err(|_| Error::syntax(i + 1, format!("bad probability `{}`", p.trim())))?;
        support.push((parse_example(&read(&dir.join(file.trim()))?)?, p));
    }
    ExampleDistribution::new(support)
}

fn execute(cmd: Command) -> std::result::Result<Outcome, Failure> {
    match cmd {
        Command::Eval { query, instance } => {
            let q = read_query(&query)?;
            let i = parse_instance(&read(&instance)?)?;
            let rows = evaluate(&q, &i)?;
            let mut s = String::new();
            for r in rows {
                s.push_str(&r.join(", "));
                s.push('\n');
            }
            Ok(Outcome::new(s, 0))
        }
        Command::Distance { q1, q2, metric, mu_file } => {
            let metric = match (metric, mu_file) {
                (MetricArg::Edit, _) => Metric::Edit,
                (MetricArg::Sdi, _) => Metric::Sdi,
                (MetricArg::Sdq, _) => Metric::Sdq,
                (MetricArg::Mu, Some(f)) => Metric::Mu(read_mu(&f)?),
                (MetricArg::Mu, None) => return Err(Failure::Flags("--metric mu requires --mu-file".into())),
            };
            let d = metrics::distance(&metric, &read_query(&q1)?, &read_query(&q2)?)?;
            Ok(Outcome::new(format!("{d}\n"), 0))
        }
        Command::Oracle {
            schema,
            kind,
            arity,
            max_size,
            examples,
            json,
        } => oracle(&schema, kind, arity, max_size, examples.as_deref(), json),
        Command::Repair(a) => repair(a),
    }
}

fn oracle(
    schema: &Path,
    kind: OracleKind,
    k: usize,
    max: usize,
    examples: Option<&Path>,
    json: bool,
) -> std::result::Result<Outcome, Failure> {
    let schema = Schema::parse(&read(schema)?)?;
    let load = || -> std::result::Result<LabeledExampleSet, Failure> {
        let path = examples.ok_or_else(|| Failure::Flags("this oracle requires --examples".into()))?;
        let e = read_examples(path)?;
        for (r, a) in e.schema()?.iter() {
            match schema.arity(r) {
                None => return Err(Error::UnknownRelation(r.to_string()).into()),
                Some(b) if a != b => {
                    return Err(Error::SchemaMismatch(format!("`{r}` has arity {b} in the schema, {a} in the examples")).into())
                }
                _ => {}
            }
        }
        if let Some(a) = e.arity() {
            if a != k {
                return Err(Error::ArityMismatch(format!("--arity {k} but examples have arity {a}")).into());
            }
        }
        Ok(e)
    };
    let result = match kind {
        OracleKind::Enumerate => RepairResult::bounded(unranked(enumerate_cqs(&schema, k, max)), max),
        OracleKind::Fit => {
            let e = load()?;
            RepairResult::bounded(unranked(dedup_equivalent(fitting::all_fitting(&schema, k, &e, max))), max)
        }
        OracleKind::MostSpecific => {
            let e = load()?;
            let found = fitting::most_specific_fitting(&e)?;
            RepairResult::exact(unranked(found.into_iter().collect()))
        }
        OracleKind::Wmg => fitting::wmg_fitting_construct(&load()?, max)?,
    };
    Ok(render_result(&result, json))
}

fn repair(a: RepairArgs) -> std::result::Result<Outcome, Failure> {
    let q = read_query(&a.query)?;
    let e = read_examples(&a.examples)?;
    e.check_arity(q.arity())?;
    let candidate = match (&a.candidate, a.action) {
        (Some(p), _) => Some(read_query(p)?),
        (None, ActionArg::Verify) => return Err(Failure::Flags("--action verify requires --candidate".into())),
        (None, _) => None,
    };
    let mode: Mode = a.mode.into();
    let bound = a.size_bound;
    let metric = match a.preorder {
        PreorderArg::Cod | PreorderArg::Edit => None,
        PreorderArg::Sdi => Some(Metric::Sdi),
        PreorderArg::Sdq => Some(Metric::Sdq),
        PreorderArg::Mu => match &a.mu_file {
            Some(f) => Some(Metric::Mu(read_mu(f)?)),
            None => return Err(Failure::Flags("--preorder mu requires --mu-file".into())),
        },
    };
    if a.distance_bound.is_some() && a.preorder != PreorderArg::Edit {
        return Err(Failure::Flags("--distance-bound applies to --preorder edit only".into()));
    }
    if metric.is_some() && mode != Mode::Repair {
        return Err(Failure::Flags("distance pre-orders other than edit support --mode repair only".into()));
    }
    let json = a.json;
    match (a.preorder, a.action) {
        (PreorderArg::Cod, ActionArg::Construct) => {
            let r = match mode {
                Mode::Generalize => RepairResult::exact(unranked(
                    cod::cod_generalization_construct(&q, &e)?.into_iter().collect(),
                )),
                Mode::Specialize => cod::cod_specialization_construct(&q, &e, bound)?,
                Mode::Repair => cod::cod_repair_construct(&q, &e, bound)?,
            };
            Ok(render_result(&r, json))
        }
        (PreorderArg::Cod, ActionArg::Verify) => {
            let c = candidate.expect("checked above");
            let v = match mode {
                Mode::Generalize => BoundedVerdict::from_bool(cod::cod_generalization_verify(&q, &e, &c)?, bound),
                Mode::Specialize => cod::cod_specialization_verify(&q, &e, &c, bound)?,
                Mode::Repair => cod::cod_repair_verify(&q, &e, &c, bound)?,
            };
            Ok(render_verdict(&v, json, false))
        }
        (PreorderArg::Cod, ActionArg::Exists) => {
            let v = match mode {
                Mode::Generalize => BoundedVerdict::from_bool(cod::cod_generalization_exists(&q, &e)?, bound),
                Mode::Specialize => cod::cod_specialization_exists(&q, &e, bound)?,
                Mode::Repair => cod::cod_repair_exists(&q, &e, bound)?,
            };
            Ok(render_verdict(&v, json, true))
        }
        (PreorderArg::Edit, ActionArg::Construct) => match a.distance_bound {
            Some(d) => {
                let found = dist_repair::edit_bounded_fitting_mode(&q, &e, mode, d)?;
                let mut r = RepairResult::exact(Vec::new());
                if let Some(c) = found {
                    let dist = metrics::edit_dist(&q, &c)?;
                    r.queries.push(crate::result::Ranked {
                        query: c,
                        distance: Some(Ratio::from_integer(dist)),
                    });
                }
                Ok(render_result(&r, json))
            }
            None => Ok(render_result(&dist_repair::edit_repair_construct(&q, &e, mode)?, json)),
        },
        (PreorderArg::Edit, ActionArg::Verify) => {
            let c = candidate.expect("checked above");
            let ok = dist_repair::edit_repair_verify(&q, &e, &c, mode)?;
            Ok(render_verdict(&BoundedVerdict::from_bool(ok, bound), json, false))
        }
        (PreorderArg::Edit, ActionArg::Exists) => {
            let ok = match a.distance_bound {
                Some(d) => dist_repair::edit_bounded_fitting_mode(&q, &e, mode, d)?.is_some(),
                None => dist_repair::edit_repair_exists(&q, &e, mode)?,
            };
            Ok(render_verdict(&BoundedVerdict::from_bool(ok, bound), json, true))
        }
        (_, action) => {
            let metric = metric.expect("distance pre-order");
            match action {
                ActionArg::Construct => {
                    Ok(render_result(&dist_repair::generic_dist_repair(&metric, &q, &e, bound)?, json))
                }
                ActionArg::Verify => {
                    let c = candidate.expect("checked above");
                    let v = dist_repair::generic_dist_verify(&metric, &q, &e, &c, bound)?;
                    Ok(render_verdict(&v, json, false))
                }
                ActionArg::Exists => {
                    // a minimal-distance fitting CQ exists whenever any fitting CQ does
                    let schema = fitting::relevant_schema(Some(&q), &e)?;
                    let ok = fits(&q, &e)?.fits || fitting::fitting_exists_over(&schema, &e);
                    Ok(render_verdict(&BoundedVerdict::from_bool(ok, bound), json, true))
                }
            }
        }
    }
}

#[derive(Serialize)]
struct JsonResult {
    bound_limited: bool,
    bound: Option<usize>,
    warnings: Vec<String>,
    results: Vec<JsonRanked>,
}

#[derive(Serialize)]
struct JsonRanked {
    query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<String>,
}

#[derive(Serialize)]
struct JsonVerdict {
    answer: String,
    bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

fn render_result(r: &RepairResult, json: bool) -> Outcome {
    let code = match (r.is_empty(), r.bound_limited) {
        (false, _) => 0,
        (true, false) => 1,
        (true, true) => 4,
    };
    if json {
        let doc = JsonResult {
            bound_limited: r.bound_limited,
            bound: r.bound,
            warnings: r.warnings.clone(),
            results: r
                .queries
                .iter()
                .map(|x| JsonRanked {
                    query: x.query.to_string(),
                    distance: x.distance.map(|d| d.to_string()),
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&doc).expect("plain data");
        return Outcome::new(text + "\n", code);
    }
    let mut s = String::new();
    if r.bound_limited {
        match r.bound {
            Some(b) => s.push_str(&format!("# bound-limited (size bound {b})\n")),
            None => s.push_str("# bound-limited\n"),
        }
    }
    for w in &r.warnings {
        s.push_str(&format!("# warning: {w}\n"));
    }
    for x in &r.queries {
        s.push_str(&x.query.to_string());
        if let Some(d) = x.distance {
            s.push_str(&format!(" # distance {d}"));
        }
        s.push('\n');
    }
    Outcome::new(s, code)
}

/// `existence` marks questions whose undecided answer exits with 7.
fn render_verdict(v: &BoundedVerdict, json: bool, existence: bool) -> Outcome {
    let (answer, code) = match (v.status, existence) {
        (Status::Yes, _) => ("yes".to_string(), 0),
        (Status::No, _) => ("no".to_string(), 1),
        (Status::Unknown, false) => (v.to_string(), 4),
        (Status::Unknown, true) => (format!("unknown-at-bound({})", v.bound), 7),
    };
    if json {
        let doc = JsonVerdict {
            answer,
            bound: v.bound,
            witness: v.witness.as_ref().map(|w| w.to_string()),
        };
        return Outcome::new(serde_json::to_string_pretty(&doc).expect("plain data") + "\n", code);
    }
    let mut s = String::new();
    if v.status == Status::Unknown {
        s.push_str(&format!("# bound-limited (size bound {})\n", v.bound));
    }
    s.push_str(&answer);
    s.push('\n');
    if let Some(w) = &v.witness {
        s.push_str(&format!("# witness: {w}\n"));
    }
    Outcome::new(s, code)
}
