//! Command implementations behind the `memlang` binary. Every command returns
//! an [`Outcome`] holding the exit code, human-readable output and a
//! machine-readable [`Report`].

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::bigraph::TotalBigraph;
use crate::denot::{
    check_soundness, class_dist_json, BiasState, CoendClass, DenEnv, DenotError, Denoter,
};
use crate::laws::{run_dataflow_suite, run_mem_suite, run_monad_suite, run_naturality_suite};
use crate::opsem::{
    enumerate_bigstep, observational_bigstep, observe, run_into, BranchChooser, ForcedChooser,
    OpsemError, SeededChooser,
};
use crate::syntax::{all_memfns_clean, parse_program, Comp, SyntaxError};
use crate::typecheck::{type_of_program, TypeError};
use crate::{ExactDist, Prob, Ty};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_FRESHNESS: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

pub const MAX_UNDEF_VAR: &str = "MEMLANG_MAX_UNDEF";
pub const DEFAULT_MAX_UNDEF: usize = 20;

/// Random states per instance in `laws --monad`.
pub const MONAD_STATES: usize = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{error}", path.display())]
    Syntax { path: PathBuf, error: SyntaxError },
    #[error("{}: type error: {error}", path.display())]
    Type { path: PathBuf, error: TypeError },
    #[error("{}: {error}", path.display())]
    Freshness { path: PathBuf, error: DenotError },
    #[error("{}: runtime error after {step} steps: {error}\n  at {config}", path.display())]
    Runtime {
        path: PathBuf,
        step: usize,
        config: String,
        error: OpsemError,
    },
    #[error("{}: {error}", path.display())]
    Opsem { path: PathBuf, error: OpsemError },
    #[error("{}: {error}", path.display())]
    Denot { path: PathBuf, error: DenotError },
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Freshness { .. } => EXIT_FRESHNESS,
            CliError::Syntax { .. }
            | CliError::Type { .. }
            | CliError::Runtime { .. }
            | CliError::Opsem { .. }
            | CliError::Denot { .. } => EXIT_INVALID,
        }
    }
}

/// Machine-readable summary of one command.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub program: Option<String>,
    pub semantics: String,
    /// Named results, with probabilities as `"p/q"` strings.
    pub distributions: BTreeMap<String, Value>,
    pub equal: Option<bool>,
    pub elapsed_ms: f64,
}

impl Report {
    fn new(command: &str, program: Option<&Path>, semantics: &str) -> Self {
        Report {
            command: command.into(),
            program: program.map(|p| p.display().to_string()),
            semantics: semantics.into(),
            distributions: BTreeMap::new(),
            equal: None,
            elapsed_ms: 0.0,
        }
    }

    /// The full report, keys sorted.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&v).expect("json renders")
    }

    /// Only the results, keys sorted: stable across runs and file names.
    pub fn results_json(&self) -> String {
        let v = serde_json::to_value(&self.distributions).expect("results serialize");
        serde_json::to_string_pretty(&v).expect("json renders")
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: u8,
    pub lines: Vec<String>,
    pub report: Report,
}

impl Outcome {
    fn finish(mut self, start: Instant) -> Self {
        self.report.elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    Mem,
    Dataflow,
    Monad,
    Naturality,
}

impl Law {
    fn name(self) -> &'static str {
        match self {
            Law::Mem => "mem",
            Law::Dataflow => "dataflow",
            Law::Monad => "monad",
            Law::Naturality => "naturality",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub trace: bool,
    /// Branches taken by successive non-degenerate flips; once exhausted,
    /// further flips take the tails branch.
    pub force: Option<Vec<bool>>,
}

/// Reads `MEMLANG_MAX_UNDEF`, falling back to [`DEFAULT_MAX_UNDEF`].
pub fn max_undef_from_env() -> Result<usize, CliError> {
    match std::env::var(MAX_UNDEF_VAR) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{MAX_UNDEF_VAR}={s} is not a count"))),
        Err(_) => Ok(DEFAULT_MAX_UNDEF),
    }
}

/// Parses a branch string such as `tf` or `10`.
pub fn parse_branches(s: &str) -> Result<Vec<bool>, CliError> {
    s.chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c {
            't' | 'T' | '1' | 'h' | 'H' => Ok(true),
            'f' | 'F' | '0' => Ok(false),
            _ => Err(CliError::Usage(format!("bad branch `{c}` in `{s}`"))),
        })
        .collect()
}

pub fn load(path: &Path) -> Result<(Comp, Ty), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    let p = parse_program(&text).map_err(|error| CliError::Syntax {
        path: path.into(),
        error,
    })?;
    let ty = type_of_program(&p).map_err(|error| CliError::Type {
        path: path.into(),
        error,
    })?;
    Ok((p, ty))
}

fn prob_str(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

fn dist_json<T: Ord + Serialize>(d: &ExactDist<T>) -> Value {
    serde_json::to_value(d).expect("distribution serializes")
}

fn dist_lines<T: Ord + std::fmt::Display>(d: &ExactDist<T>) -> Vec<String> {
    d.iter()
        .map(|(x, p)| format!("{:>9}  {x}", prob_str(p)))
        .collect()
}

fn denot_error(path: &Path, error: DenotError) -> CliError {
    match error {
        DenotError::FreshnessViolation { .. } => CliError::Freshness {
            path: path.into(),
            error,
        },
        error => CliError::Denot {
            path: path.into(),
            error,
        },
    }
}

fn opsem_error(path: &Path, error: OpsemError) -> CliError {
    CliError::Opsem {
        path: path.into(),
        error,
    }
}

pub fn cmd_check(path: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (p, ty) = load(path)?;
    let mut report = Report::new("check", Some(path), "typing");
    report
        .distributions
        .insert("type".into(), Value::String(ty.to_string()));
    let mut lines = vec![format!("ok: {ty}")];
    if !all_memfns_clean(&p) {
        lines.push("note: some memfn body is not syntactically freshness-clean".into());
    }
    Ok(Outcome {
        code: EXIT_OK,
        lines,
        report,
    }
    .finish(start))
}

pub fn cmd_run(path: &Path, opts: &RunOptions) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (p, _) = load(path)?;
    let mut chooser: Box<dyn BranchChooser> = match &opts.force {
        Some(bits) => Box::new(ForcedChooser::new(bits.iter().copied(), false)),
        None => Box::new(SeededChooser::new(opts.seed)),
    };
    let mut trace = Vec::new();
    let last = run_into(&p, chooser.as_mut(), &mut trace).map_err(|error| CliError::Runtime {
        path: path.into(),
        step: trace.len().saturating_sub(1),
        config: trace.last().map(|c| c.to_string()).unwrap_or_default(),
        error,
    })?;
    let obs = observe(&last).map_err(|e| opsem_error(path, e))?;

    let mut report = Report::new("run", Some(path), "small-step");
    let mut lines = Vec::new();
    if opts.trace {
        for (i, c) in trace.iter().enumerate() {
            lines.push(format!("{i:>4}  {c}"));
        }
        report.distributions.insert(
            "trace".into(),
            serde_json::to_value(&trace).expect("trace serializes"),
        );
    }
    lines.push(format!("result: {obs}"));
    lines.push(format!("steps: {}", trace.len() - 1));
    report.distributions.insert(
        "terminal".into(),
        serde_json::to_value(&last).expect("configuration serializes"),
    );
    report.distributions.insert(
        "observation".into(),
        serde_json::to_value(&obs).expect("observation serializes"),
    );
    Ok(Outcome {
        code: EXIT_OK,
        lines,
        report,
    }
    .finish(start))
}

pub fn cmd_enumerate(path: &Path, observe: bool) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (p, _) = load(path)?;
    let mut report;
    let lines;
    if observe {
        let d = observational_bigstep(&p).map_err(|e| opsem_error(path, e))?;
        report = Report::new("enumerate", Some(path), "observational big-step");
        report
            .distributions
            .insert("observations".into(), dist_json(&d));
        lines = dist_lines(&d);
    } else {
        let d = enumerate_bigstep(&p).map_err(|e| opsem_error(path, e))?;
        report = Report::new("enumerate", Some(path), "big-step");
        report
            .distributions
            .insert("terminals".into(), dist_json(&d));
        lines = dist_lines(&d);
    }
    Ok(Outcome {
        code: EXIT_OK,
        lines,
        report,
    }
    .finish(start))
}

/// `⟦p⟧` at the empty world and bias state.
pub fn denote(p: &Comp) -> Result<ExactDist<CoendClass>, DenotError> {
    Denoter::new().den(p, &TotalBigraph::empty(), &DenEnv::new(), &BiasState::new())
}

pub fn cmd_denote(path: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (p, _) = load(path)?;
    let d = denote(&p).map_err(|e| denot_error(path, e))?;
    let mut report = Report::new("denote", Some(path), "denotational");
    report
        .distributions
        .insert("denotation".into(), class_dist_json(&d));
    let mut lines = dist_lines(&d);
    if !all_memfns_clean(&p) {
        lines.push("note: accepted semantically, but not syntactically freshness-clean".into());
    }
    Ok(Outcome {
        code: EXIT_OK,
        lines,
        report,
    }
    .finish(start))
}

pub fn cmd_soundness(path: &Path, max_undef: usize) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (p, _) = load(path)?;
    let r = check_soundness(&p, max_undef).map_err(|e| match e {
        DenotError::Opsem(e) => opsem_error(path, e),
        e => denot_error(path, e),
    })?;
    let mut report = Report::new("soundness", Some(path), "denotational vs big-step");
    report
        .distributions
        .insert("denotation".into(), class_dist_json(&r.lhs));
    report
        .distributions
        .insert("big-step".into(), class_dist_json(&r.rhs));
    report.equal = Some(r.sound);
    let mut lines = Vec::new();
    if r.sound {
        lines.push(format!("equal ({} terminal configurations)", r.terminals));
    } else {
        lines.push("MISMATCH".into());
        lines.push("denotation:".into());
        lines.extend(dist_lines(&r.lhs));
        lines.push("big-step:".into());
        lines.extend(dist_lines(&r.rhs));
    }
    if !r.per_function_agrees {
        lines.push("note: drawing every pending edge from its function's bias gives:".into());
        lines.extend(dist_lines(&r.rhs_per_function));
    }
    Ok(Outcome {
        code: if r.sound { EXIT_OK } else { EXIT_MISMATCH },
        lines,
        report,
    }
    .finish(start))
}

/// The `.mem` files directly inside `dir`, sorted.
pub fn program_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io_err = |source| CliError::Io {
        path: dir.into(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "mem") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn cmd_soundness_dir(dir: &Path, max_undef: usize) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut report = Report::new("soundness", Some(dir), "denotational vs big-step");
    let mut lines = Vec::new();
    let mut code = EXIT_OK;
    let mut all_equal = true;
    for file in program_files(dir)? {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match cmd_soundness(&file, max_undef) {
            Ok(o) => {
                let equal = o.report.equal == Some(true);
                all_equal &= equal;
                code = code.max(o.code);
                lines.push(format!(
                    "{name}: {}",
                    if equal { "equal" } else { "MISMATCH" }
                ));
                if !equal {
                    lines.extend(o.lines.iter().map(|l| format!("  {l}")));
                }
                report
                    .distributions
                    .insert(name, serde_json::json!({ "equal": equal }));
            }
            Err(e) => {
                all_equal = false;
                code = code.max(e.exit_code());
                lines.push(format!("{name}: error: {e}"));
                report
                    .distributions
                    .insert(name, serde_json::json!({ "error": e.to_string() }));
            }
        }
    }
    report.equal = Some(all_equal);
    Ok(Outcome {
        code,
        lines,
        report,
    }
    .finish(start))
}

pub fn cmd_laws(law: Law, count: usize, seed: u64) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let r = match law {
        Law::Mem => run_mem_suite(count, seed),
        Law::Dataflow => run_dataflow_suite(count, seed),
        Law::Monad => run_monad_suite(count, seed, MONAD_STATES),
        Law::Naturality => run_naturality_suite(count, seed),
    };
    let mut report = Report::new("laws", None, "denotational and big-step");
    report.distributions.insert(
        law.name().into(),
        serde_json::json!({
            "instances": r.instances,
            "failures": r.failures,
        }),
    );
    report.equal = Some(r.passed());
    let mut lines = vec![format!(
        "{}: {} instances, {} failures",
        r.law,
        r.instances,
        r.failures.len()
    )];
    lines.extend(r.failures.iter().map(|f| format!("  {f}")));
    Ok(Outcome {
        code: if r.passed() { EXIT_OK } else { EXIT_MISMATCH },
        lines,
        report,
    }
    .finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(name: &str, src: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("memlang-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        fs::write(&path, src).unwrap();
        path
    }

    #[test]
    fn check_reports_body_type() {
        let ok = write(
            "p1.mem",
            "let val x <- fresh() in let val f <- memfn y. flip(1/3) in f @ x",
        );
        assert_eq!(cmd_check(&ok).unwrap().code, EXIT_OK);
        let bad = write("bad.mem", "memfn y. fresh()");
        let e = cmd_check(&bad).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_INVALID);
        assert!(e.to_string().contains("body must be bool"));
        let e = cmd_check(Path::new("/nonexistent/x.mem")).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn run_is_deterministic_per_seed() {
        let p = write("coin.mem", "flip(1/2)");
        let opts = RunOptions {
            seed: 9,
            trace: true,
            force: None,
        };
        let a = cmd_run(&p, &opts).unwrap();
        let b = cmd_run(&p, &opts).unwrap();
        assert_eq!(a.lines, b.lines);
        assert_eq!(a.report.results_json(), b.report.results_json());
    }

    #[test]
    fn denote_rejects_self_application() {
        let p = write(
            "selfapp.mem",
            "let val f <- memfn x. flip(1/2) in let val g <- memfn y. f @ y in return g",
        );
        let e = cmd_denote(&p).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_FRESHNESS);
    }

    #[test]
    fn branch_strings() {
        assert_eq!(parse_branches("tf").unwrap(), vec![true, false]);
        assert_eq!(parse_branches("1,0").unwrap(), vec![true, false]);
        assert!(parse_branches("x").is_err());
    }
}
