use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use formloc::corpus::{generate_corpus, CorpusParams};
use formloc::driver::{fault_rank, merge_reports, Bounds, DebugSession, DriverError, FaultReport, RunMode};
use formloc::encoder::ConcretizePolicy;
use formloc::lang::{build_cfg, parse_unasserted, LangError, Program};
use formloc::solver::{brute_force_comss, enumerate_comss, Budget, InstanceError, MaxSatInstance, SolverError};
use formloc::ssa::{dump as dump_ssa, to_ssa, unroll_loops};
use formloc::suite::{derive_assertions, SuiteError, TestSuite};
use formloc::tracer::execute;
use formloc::weights::{collect_coverage, ochiai, CoverageError, CoverageMatrix, SuspiciousnessMap};
use formloc::{Inputs, Width};
use formloc_cli::config::{parse_inputs, Config, ConfigError, CONFIG_ENV};
use formloc_cli::corpus_dir::{read_corpus, write_case, CorpusEntry, CorpusError};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "formloc", version, about = "Formula-based fault localization for MiniImp programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Localize the fault behind one or more failing inputs.
    Debug(DebugArgs),
    /// Run every mode on a corpus directory and tabulate rank, time and iterations.
    Compare(CompareArgs),
    /// Print an intermediate artifact.
    Dump(DumpArgs),
    /// Fill in expected outputs of a test suite from a golden program.
    Derive(DeriveArgs),
    /// Write a seeded corpus of programs with single-statement faults.
    GenCorpus(GenArgs),
    /// Enumerate the CoMSSs of a MAX-SAT instance file.
    CheckInstance(CheckArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config file (falls back to $FORMLOC_CONFIG).
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// ba, ba+cw, ofc or ofc+cw.
    #[arg(long)]
    mode: Option<RunMode>,
    /// Integer width in bits (2..=32).
    #[arg(long, value_parser = parse_width)]
    width: Option<Width>,
    /// Loop unroll bound.
    #[arg(long)]
    unroll: Option<u32>,
    /// Largest CoMSS size to enumerate.
    #[arg(long)]
    max_comss: Option<usize>,
    /// Iteration cap for the on-demand loop.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Largest all-paths formula the baseline builds.
    #[arg(long)]
    ba_cap: Option<usize>,
    /// Wall-clock budget per session, in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Replace operands by logged values.
    #[arg(long, value_enum)]
    concretize: Option<Policy>,
    /// Follow the guard-clause rule only, without witness-path expansion.
    #[arg(long)]
    no_witness_expansion: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    NonlinearProducts,
    AllOperands,
}

#[derive(Args)]
struct DebugArgs {
    /// MiniImp source file.
    program: PathBuf,
    /// Failing input, e.g. `x=0,y=0`.
    #[arg(long, value_parser = parse_inputs)]
    input: Option<Inputs>,
    /// Test suite (JSON); its failing tests are debugged unless --test is given.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Test id from the suite; repeat to merge several failing inputs.
    #[arg(long = "test")]
    tests: Vec<String>,
    /// Coverage matrix for clause weighting (default: computed from the suite).
    #[arg(long)]
    coverage: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory of NAME.mimp / NAME.json pairs.
    #[arg(long)]
    corpus: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Artifact {
    Ssa,
    Cfg,
    Trace,
    Formula,
    Instance,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(value_enum)]
    what: Artifact,
    program: PathBuf,
    #[arg(long, value_parser = parse_inputs)]
    input: Option<Inputs>,
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long = "test")]
    test: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    golden: PathBuf,
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Cross-check against the brute-force oracle (small instances only).
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Program { path: PathBuf, source: LangError },
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Corpus(e) if e.is_io() => 3,
            CliError::Config(ConfigError::Io { .. }) => 3,
            CliError::Config(_)
            | CliError::Program { .. }
            | CliError::Suite(_)
            | CliError::Coverage(_)
            | CliError::Instance(_)
            | CliError::Corpus(_) => 4,
            CliError::Driver(_) | CliError::Solver(_) => 5,
        }
    }
}

fn parse_width(s: &str) -> Result<Width, String> {
    s.parse::<u32>().map_err(|e| e.to_string()).and_then(|b| Width::new(b).map_err(|e| e.to_string()))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_program(path: &Path) -> Result<Program, CliError> {
    parse_unasserted(&read(path)?).map_err(|source| CliError::Program { path: path.to_path_buf(), source })
}

fn load_suite(path: &Path) -> Result<TestSuite, CliError> {
    Ok(TestSuite::from_json(&read(path)?)?)
}

fn settings(c: &Common) -> Result<Config, CliError> {
    let file = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let flags = Config {
        mode: c.mode,
        width: c.width,
        unroll: c.unroll,
        max_comss: c.max_comss,
        max_iters: c.max_iters,
        ba_cap: c.ba_cap,
        timeout_ms: c.timeout_ms,
        concretize: c.concretize.map(|p| match p {
            Policy::NonlinearProducts => ConcretizePolicy::NonlinearProducts,
            Policy::AllOperands => ConcretizePolicy::AllOperands,
        }),
        witness_expansion: c.no_witness_expansion.then_some(false),
    };
    Ok(file.overlay(flags))
}

fn suspiciousness(program: &Program, suite: &TestSuite, b: &Bounds) -> Result<SuspiciousnessMap, CliError> {
    Ok(ochiai(&collect_coverage(program, suite, b.width, u64::from(b.unroll))?)?)
}

/// Programs (with assertion) and inputs to debug.
fn debug_jobs(args: &DebugArgs, program: &Program, suite: Option<&TestSuite>, b: &Bounds) -> Result<Vec<(Program, Inputs)>, CliError> {
    match (suite, &args.input) {
        (_, Some(input)) => {
            if program.assertion().is_none() {
                return Err(CliError::Usage("the program has no assert; add one or debug through --suite".into()));
            }
            Ok(vec![(program.clone(), input.clone())])
        }
        (Some(suite), None) => {
            let ids: Vec<String> = if args.tests.is_empty() {
                suite
                    .classify(program, b.width, u64::from(b.unroll))?
                    .into_iter()
                    .filter(|c| c.outcome == formloc::lang::interp::Outcome::Violated)
                    .map(|c| c.id)
                    .collect()
            } else {
                args.tests.clone()
            };
            if ids.is_empty() {
                return Err(CliError::Usage("no failing test in the suite".into()));
            }
            ids.iter()
                .map(|id| {
                    let t = suite.get(id).ok_or_else(|| CliError::Usage(format!("no test `{id}` in the suite")))?;
                    Ok((suite.program_for(t, program)?, t.inputs.clone()))
                })
                .collect()
        }
        (None, None) => Err(CliError::Usage("give --input or --suite".into())),
    }
}

fn cmd_debug(args: DebugArgs) -> Result<String, CliError> {
    let cfg = settings(&args.common)?;
    let (mode, bounds) = (cfg.mode(), cfg.bounds());
    let program = load_program(&args.program)?;
    let suite = args.suite.as_deref().map(load_suite).transpose()?;
    let susp = match (mode.weighted, &args.coverage, &suite) {
        (false, _, _) => None,
        (true, Some(path), _) => {
            let cov = CoverageMatrix::parse(&read(path)?)?;
            cov.validate(&program)?;
            Some(ochiai(&cov)?)
        }
        (true, None, Some(s)) => Some(suspiciousness(&program, s, &bounds)?),
        (true, None, None) => return Err(CliError::Usage("weighted modes need --coverage or --suite".into())),
    };
    let jobs = debug_jobs(&args, &program, suite.as_ref(), &bounds)?;
    let reports = jobs
        .into_iter()
        .map(|(p, input)| Ok(DebugSession::new(&p, input, mode, bounds.clone(), susp.clone())?.run()?))
        .collect::<Result<Vec<FaultReport>, CliError>>()?;
    let report = if reports.len() == 1 { reports.into_iter().next().unwrap() } else { merge_reports(&reports).expect("non-empty") };
    Ok(if args.json { report.to_json() + "\n" } else { report.to_text() })
}

#[derive(Serialize)]
struct ModeResult {
    mode: RunMode,
    rank: Option<f64>,
    ms: f64,
    iterations: usize,
    statement_clauses: usize,
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareRow {
    case: String,
    results: Vec<ModeResult>,
}

fn compare_case(e: &CorpusEntry, bounds: &Bounds) -> CompareRow {
    let run = |mode: RunMode| -> Result<FaultReport, CliError> {
        let classified = e.suite.classify(&e.program, bounds.width, u64::from(bounds.unroll))?;
        let failing = classified
            .iter()
            .find(|c| c.outcome == formloc::lang::interp::Outcome::Violated)
            .ok_or_else(|| CliError::Usage("no failing test".into()))?;
        let t = e.suite.get(&failing.id).expect("classified ids come from the suite");
        let susp = if mode.weighted { Some(suspiciousness(&e.program, &e.suite, bounds)?) } else { None };
        let p = e.suite.program_for(t, &e.program)?;
        Ok(DebugSession::new(&p, t.inputs.clone(), mode, bounds.clone(), susp)?.run()?)
    };
    let results = RunMode::ALL
        .into_iter()
        .map(|mode| {
            let start = Instant::now();
            match run(mode) {
                Ok(r) => ModeResult {
                    mode,
                    rank: fault_rank(&r, &e.suite.fault_lines),
                    ms: start.elapsed().as_secs_f64() * 1e3,
                    iterations: r.iterations,
                    statement_clauses: r.statement_clauses,
                    error: None,
                },
                Err(err) => ModeResult {
                    mode,
                    rank: None,
                    ms: start.elapsed().as_secs_f64() * 1e3,
                    iterations: 0,
                    statement_clauses: 0,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    CompareRow { case: e.name.clone(), results }
}

fn cmd_compare(args: CompareArgs) -> Result<String, CliError> {
    let bounds = settings(&args.common)?.bounds();
    let entries = read_corpus(&args.corpus)?;
    if entries.is_empty() {
        return Err(CliError::Usage(format!("no NAME.mimp/NAME.json pairs in {}", args.corpus.display())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<CompareRow> = pool.install(|| entries.par_iter().map(|e| compare_case(e, &bounds)).collect());
    if args.json {
        return Ok(serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n");
    }
    let mut out = format!("{:<14}", "case");
    for m in RunMode::ALL {
        let _ = write!(out, " | {:>6} {:>9} {:>5}", format!("{m}"), "ms", "#it");
    }
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "{:<14}", row.case);
        for r in &row.results {
            let rank = match (&r.error, r.rank) {
                (Some(_), _) => "error".to_string(),
                (None, Some(k)) => format!("{k}"),
                (None, None) => "-".to_string(),
            };
            let _ = write!(out, " | {rank:>6} {:>9.1} {:>5}", r.ms, r.iterations);
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<14}", "mean");
    for (i, _) in RunMode::ALL.iter().enumerate() {
        let ok: Vec<&ModeResult> = rows.iter().map(|r| &r.results[i]).filter(|r| r.error.is_none()).collect();
        let ranks: Vec<f64> = ok.iter().filter_map(|r| r.rank).collect();
        let n = ok.len().max(1) as f64;
        let mean_rank = if ranks.is_empty() { f64::NAN } else { ranks.iter().sum::<f64>() / ranks.len() as f64 };
        let ms = ok.iter().map(|r| r.ms).sum::<f64>() / n;
        let its = ok.iter().map(|r| r.iterations as f64).sum::<f64>() / n;
        let _ = write!(out, " | {mean_rank:>6.2} {ms:>9.1} {its:>5.1}");
    }
    out.push('\n');
    for row in &rows {
        for r in row.results.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(out, "{} {}: {}", row.case, r.mode, r.error.as_deref().unwrap_or_default());
        }
    }
    Ok(out)
}

fn cmd_dump(args: DumpArgs) -> Result<String, CliError> {
    let cfg = settings(&args.common)?;
    let bounds = cfg.bounds();
    let mut program = load_program(&args.program)?;
    let mut input = args.input.clone();
    if let Some(path) = &args.suite {
        let suite = load_suite(path)?;
        let id = args.test.as_deref().ok_or_else(|| CliError::Usage("--suite needs --test".into()))?;
        let t = suite.get(id).ok_or_else(|| CliError::Usage(format!("no test `{id}` in the suite")))?;
        program = suite.program_for(t, &program)?;
        input = input.or_else(|| Some(t.inputs.clone()));
    }
    let ssa = || -> Result<_, CliError> {
        let ssa = to_ssa(&build_cfg(std::sync::Arc::new(program.clone()))).map_err(DriverError::from)?;
        Ok(unroll_loops(&ssa, bounds.unroll).map_err(DriverError::from)?)
    };
    let need_input = || input.clone().ok_or_else(|| CliError::Usage("this dump needs --input".into()));
    Ok(match args.what {
        Artifact::Ssa => dump_ssa(&ssa()?),
        Artifact::Cfg => {
            let cfg = build_cfg(std::sync::Arc::new(program.clone()));
            let mut out = String::new();
            for e in cfg.edges() {
                let _ = writeln!(out, "{} -> {} {:?}{}", e.from, e.to, e.kind, if e.back { " back" } else { "" });
            }
            out
        }
        Artifact::Trace => {
            let trace = execute(&ssa()?, &need_input()?, bounds.width).map_err(DriverError::from)?;
            trace.dump()
        }
        Artifact::Formula | Artifact::Instance => {
            let mode = cfg.mode();
            let mut s = DebugSession::new(&program, need_input()?, RunMode { weighted: false, ..mode }, bounds.clone(), None)?;
            s.run()?;
            match args.what {
                Artifact::Formula => s.formula().dump(),
                _ => s.instance().dump(bounds.max_comss, mode.solver_mode()),
            }
        }
    })
}

fn cmd_derive(args: DeriveArgs) -> Result<String, CliError> {
    let b = settings(&args.common)?.bounds();
    let golden = load_program(&args.golden)?;
    let suite = load_suite(&args.suite)?;
    Ok(derive_assertions(&golden, &suite, b.width, u64::from(b.unroll))?.to_json())
}

fn cmd_gen(args: GenArgs) -> Result<String, CliError> {
    let cases = generate_corpus(args.seed, args.count, &CorpusParams::default());
    for c in &cases {
        write_case(&args.out, c)?;
    }
    Ok(format!("wrote {} cases to {}\n", cases.len(), args.out.display()))
}

fn cmd_check(args: CheckArgs) -> Result<String, CliError> {
    let (inst, max, mode): (MaxSatInstance, _, _) = MaxSatInstance::parse(&read(&args.file)?)?;
    let deadline = args.timeout_ms.map(|ms| Instant::now() + std::time::Duration::from_millis(ms));
    let e = enumerate_comss(&inst, max, mode, &Budget { deadline, conflicts: None })?;
    let mut out = String::new();
    for m in &e.comss {
        let ids: Vec<String> = m.clauses.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{{{}}} dropped {}", ids.join(", "), m.dropped);
    }
    let _ = writeln!(out, "{} CoMSSs, {} solver calls{}", e.comss.len(), e.sat_calls, if e.complete { "" } else { ", incomplete" });
    if args.oracle {
        let b = brute_force_comss(&inst, max, mode)?;
        let same = b.iter().map(|m| &m.clauses).eq(e.comss.iter().map(|m| &m.clauses));
        let _ = writeln!(out, "oracle {}", if same { "agrees" } else { "DISAGREES" });
        if !same {
            return Err(CliError::Solver(SolverError::BadModel("enumeration differs from the brute-force oracle".into())));
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Debug(a) => cmd_debug(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Dump(a) => cmd_dump(a),
        Command::Derive(a) => cmd_derive(a),
        Command::GenCorpus(a) => cmd_gen(a),
        Command::CheckInstance(a) => cmd_check(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("formloc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
