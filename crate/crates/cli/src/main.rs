use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use hermsq_core::certificates::{
    certify, coefficient_recovery, recovery_probes, solve_recovery, CertifyOptions, Verdict,
};
use hermsq_core::clifford::{gram_error, realize_correlation, DEFAULT_CHAIN_CAP};
use hermsq_core::group_algebra::{compare_cyclic, QuadraticForm};
use hermsq_core::io::{
    any_element_from_str, correlation_from_json, form_from_json, form_to_json, parse, render,
    tuple_from_json, tuple_to_json, verdict_to_json, CorrelationJson, EvaluationsJson,
    ProbeEntry, ProbeManifest, QuadraticFormJson, TermJson, TupleJson,
};
use hermsq_core::linalg::{max_abs, stream_rng};
use hermsq_core::positivity::{
    convex_combine, gram_distance, infimum_sweep, sample_k3, trace_evaluate, weighted_gram,
    ProbeVerdict, DEFAULT_COMBINE_CAP, DEFAULT_DIMENSIONS, DEFAULT_RESTARTS,
};
use hermsq_core::random::random_hermitian;
use hermsq_core::selftest::{render_report, selftest};
use hermsq_core::{Tolerances, DEFAULT_SEED};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(name = "hermsq", version, about = "Trace positivity and Hermitian-square certificates for quadratic forms in unitaries")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Pretty-print JSON with this many spaces (0 = compact).
    #[arg(long, global = true, default_value_t = 0)]
    json_indent: usize,
    /// Override a numerical tolerance, e.g. `--tol certificate=1e-9`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Realize a real correlation matrix as a tuple of symmetries.
    Realize {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Largest number of generators for the Pauli chain.
        #[arg(long, default_value_t = DEFAULT_CHAIN_CAP)]
        cap: usize,
    },
    /// Search for a unitary tuple with negative trace.
    Infimum {
        input: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Certify ε e + f as a sum of Hermitian squares or refute it.
    Certify {
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two elements modulo commutators.
    ///
    /// Each file holds an element list, a quadratic form, or a certificate
    /// written by `certify` (whose squares are expanded).
    VerifyCyc { first: PathBuf, second: PathBuf },
    /// Sample Haar pairs and write their normalized traces as CSV.
    ExploreK3 {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Realize a rational convex combination of tuple Gram matrices.
    Combine {
        #[arg(required = true)]
        tuples: Vec<PathBuf>,
        /// Comma-separated weights such as `1/2,1/3,1/6`.
        #[arg(long, value_delimiter = ',', value_parser = parse_weight, required = true)]
        weights: Vec<Ratio<u64>>,
        #[arg(long, default_value_t = DEFAULT_COMBINE_CAP)]
        max_dim: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover a quadratic form from trace evaluations.
    #[command(subcommand)]
    Recover(RecoverCommand),
    /// Run the acceptance checks and print a pass/fail table.
    Selftest,
}

#[derive(Subcommand, Debug)]
enum RecoverCommand {
    /// Write the probe tuples and a manifest into a directory.
    Probes {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Solve for the form from evaluations at the probes.
    Solve {
        evaluations: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plant a random form, evaluate it at the probes, and recover it.
    Selftest {
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Matrix sizes to search, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DIMENSIONS.to_vec())]
    m: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hermsq_core::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_parse_error() => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
            CliError::Read { .. } => EXIT_NO_INPUT,
            CliError::Write { .. } => EXIT_IO,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed '{s}': {e}"))
}

fn parse_weight(s: &str) -> Result<Ratio<u64>, String> {
    let s = s.trim();
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: u64 = p.trim().parse().map_err(|_| format!("invalid weight '{s}'"))?;
    let q: u64 = q.trim().parse().map_err(|_| format!("invalid weight '{s}'"))?;
    if q == 0 {
        return Err(format!("weight '{s}' has zero denominator"));
    }
    Ok(Ratio::new(p, q))
}

fn tolerances(overrides: &[String]) -> CliResult<Tolerances> {
    let mut tol = Tolerances::DEFAULT;
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got '{item}'")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol {name}: '{value}' is not a number")))?;
        tol.set(name, value).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(tol)
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("HERMSQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("HERMSQ_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

fn read_input(path: &Path) -> CliResult<String> {
    let read = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        fs::read_to_string(path)
    };
    read.map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    let result = match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|source| CliError::Write {
        path: path.map_or("stdout".into(), |p| p.display().to_string()),
        source,
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T, indent: usize) -> CliResult<()> {
    let mut text = render(value, indent);
    text.push('\n');
    write_output(path, &text)
}

fn load_form(path: &Path, tol: &Tolerances) -> CliResult<QuadraticForm> {
    Ok(form_from_json(&parse::<QuadraticFormJson>(&read_input(path)?)?, tol)?)
}

#[derive(Serialize)]
struct RealizeReport {
    n: usize,
    m: usize,
    max_gram_error: f64,
}

#[derive(Serialize)]
struct InfimumReport {
    verdict: &'static str,
    value: f64,
    m: usize,
    restart: usize,
    sweeps: usize,
    singular_updates: usize,
    witness_tuple: TupleJson,
}

#[derive(Serialize)]
struct CyclicReport {
    equivalent: bool,
    first_difference: Option<TermJson>,
}

#[derive(Serialize)]
struct CombineReport {
    dimension: usize,
    max_gram_error: f64,
}

#[derive(Serialize)]
struct RecoverySelftestReport {
    n: usize,
    probes: usize,
    max_coefficient_error: f64,
    passed: bool,
}

fn run(cli: Cli) -> CliResult<u8> {
    let tol = tolerances(&cli.global.tolerances)?;
    let indent = cli.global.json_indent;
    let seed = cli.global.seed;
    match cli.command {
        Command::Realize { input, output, cap } => {
            let p = correlation_from_json(&parse::<CorrelationJson>(&read_input(&input)?)?, &tol)?;
            let t = realize_correlation(&p, cap, &tol)?;
            let report = RealizeReport {
                n: t.n(),
                m: t.m(),
                max_gram_error: gram_error(&t, &p),
            };
            write_json(output.as_deref(), &tuple_to_json(&t), indent)?;
            eprintln!("{}", render(&report, 0));
            Ok(0)
        }
        Command::Infimum { input, search, output } => {
            let q = load_form(&input, &tol)?;
            let r = infimum_sweep(&q, &search.m, search.restarts, seed, &tol)?;
            let verdict = ProbeVerdict::from_value(r.value, &tol);
            let report = InfimumReport {
                verdict: verdict.label(),
                value: r.value,
                m: r.m,
                restart: r.restart,
                sweeps: r.sweeps,
                singular_updates: r.singular_updates,
                witness_tuple: tuple_to_json(&r.witness),
            };
            write_json(output.as_deref(), &report, indent)?;
            Ok(match verdict {
                ProbeVerdict::NoViolationFound => 0,
                ProbeVerdict::Refuted => 1,
            })
        }
        Command::Certify {
            input,
            epsilon,
            search,
            output,
        } => {
            let q = load_form(&input, &tol)?;
            let opts = CertifyOptions {
                dims: search.m,
                restarts: search.restarts,
                seed,
                tol: tol.clone(),
            };
            let v = certify(&q, epsilon, &opts)?;
            write_json(output.as_deref(), &verdict_to_json(&v, &q, epsilon), indent)?;
            Ok(match v {
                Verdict::Certificate { .. } => 0,
                Verdict::Refutation { .. } => 1,
                Verdict::Inconclusive { .. } => 2,
            })
        }
        Command::VerifyCyc { first, second } => {
            let a = any_element_from_str(&read_input(&first)?, &tol)?;
            let b = any_element_from_str(&read_input(&second)?, &tol)?;
            let c = compare_cyclic(&a, &b, tol.certificate);
            let report = CyclicReport {
                equivalent: c.equivalent,
                first_difference: c.first_difference.map(|(w, z)| TermJson {
                    word: w.to_pairs(),
                    re: z.re,
                    im: z.im,
                }),
            };
            write_json(None, &report, indent)?;
            Ok(if c.equivalent { 0 } else { 1 })
        }
        Command::ExploreK3 { count, m, output } => {
            let records = sample_k3(count, m, seed, &tol)?;
            let mut csv = String::from("re_trU,im_trU,re_trV,im_trV,re_trUV,im_trUV,wang_lhs,wang_rhs\n");
            for r in &records {
                let fields = [
                    r.tr_u.re, r.tr_u.im, r.tr_v.re, r.tr_v.im, r.tr_uv.re, r.tr_uv.im, r.wang.lhs, r.wang.rhs,
                ];
                let row: Vec<String> = fields.iter().map(|x| format!("{x:.16e}")).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            write_output(output.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Combine {
            tuples,
            weights,
            max_dim,
            output,
        } => {
            let tuples = tuples
                .iter()
                .map(|p| Ok(tuple_from_json(&parse::<TupleJson>(&read_input(p)?)?, &tol)?))
                .collect::<CliResult<Vec<_>>>()?;
            let combined = convex_combine(&tuples, &weights, max_dim)?;
            let report = CombineReport {
                dimension: combined.m(),
                max_gram_error: gram_distance(&combined.gram_matrix(), &weighted_gram(&tuples, &weights)),
            };
            write_json(output.as_deref(), &tuple_to_json(&combined), indent)?;
            eprintln!("{}", render(&report, 0));
            Ok(0)
        }
        Command::Recover(cmd) => recover(cmd, seed, indent, &tol),
        Command::Selftest => {
            let reports = selftest(seed, &tol);
            write_output(None, &render_report(seed, &reports))?;
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
        }
    }
}

fn recover(cmd: RecoverCommand, seed: u64, indent: usize, tol: &Tolerances) -> CliResult<u8> {
    match cmd {
        RecoverCommand::Probes { n, dir } => {
            let probes = recovery_probes(n, tol)?;
            fs::create_dir_all(&dir).map_err(|source| CliError::Write {
                path: dir.display().to_string(),
                source,
            })?;
            let mut entries = Vec::new();
            for (k, p) in probes.iter().enumerate() {
                let file = format!("probe_{k:03}.json");
                write_json(Some(&dir.join(&file)), &tuple_to_json(&p.tuple), indent)?;
                entries.push(ProbeEntry {
                    label: p.label.clone(),
                    file,
                });
            }
            let manifest = ProbeManifest { n, probes: entries };
            write_json(Some(&dir.join("manifest.json")), &manifest, indent)?;
            Ok(0)
        }
        RecoverCommand::Solve { evaluations, output } => {
            let ev = parse::<EvaluationsJson>(&read_input(&evaluations)?)?;
            let q = solve_recovery(ev.n, &ev.values, tol)?;
            write_json(output.as_deref(), &form_to_json(&q), indent)?;
            Ok(0)
        }
        RecoverCommand::Selftest { n } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let mut rng = stream_rng(seed, 0);
            let planted = QuadraticForm::from_coefficient_matrix(random_hermitian(n, &mut rng), tol.hermitian)?;
            let recovered = coefficient_recovery(|t| trace_evaluate(&planted, t, tol), n, tol)?;
            let err = max_abs(&(recovered.matrix() - planted.matrix()));
            let report = RecoverySelftestReport {
                n,
                probes: recovery_probes(n, tol)?.len(),
                max_coefficient_error: err,
                passed: err <= 1e-8,
            };
            write_json(None, &report, indent)?;
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|_| run(cli));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hermsq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
