//! The `gapkit` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::backend::Backend;
use crate::error::{ensure, Error, Result};
use crate::gapfinder::{qeig, qgap_const, GapConfig, DEFAULT_GAP_MIN};
use crate::hermitian::{eig_reference, GapGroundTruth, HermitianMatrix};
use crate::hmat::read_hmat;
use crate::instances::gen_planted_gap;
use crate::ledger::CostLedger;
use crate::qube::EncodingMode;
use crate::report::Report;
use crate::rng::{Stream, SEED_ENV};
use crate::validate::{run_suite, Suite, SuiteParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_FOUND: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gapkit", version, about = "Spectral gap estimation on emulated block-encodings")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the k-th gap of one matrix and write a report.
    Run(RunArgs),
    /// Run a statistical validation suite and print a CSV summary.
    Validate(ValidateArgs),
    /// Sweep (N, gap, eps) and print median ledger counters as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed; falls back to $GAPKIT_SEED, then 0.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// sampling | deterministic
    #[arg(long, default_value = "sampling")]
    backend: Backend,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// HMAT v1 matrix file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Generator spec, e.g. `planted:N=16,k=3,gap=0.2[,seed=7]`.
    #[arg(long = "gen")]
    generator: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Gap index, 1 <= k <= N-1 (defaults to the generator's k).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    gap_min: Option<f64>,
    /// exact | frobenius
    #[arg(long, default_value = "exact")]
    encoding: EncodingMode,
    /// Stop after the constant-factor stage.
    #[arg(long)]
    const_only: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// osp | sign | trace | qsmin | qcount | gapconst | qeig | lowerbound
    suite: Suite,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2])]
    gap: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2])]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value = "frobenius")]
    encoding: EncodingMode,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: Common,
}

/// A parsed `name:key=val,...` generator spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub n: usize,
    pub k: usize,
    pub gap: f64,
    pub seed: Option<u64>,
}

pub fn parse_generator(spec: &str) -> Result<Generator> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    ensure!(name == "planted", Parameter, "unknown generator `{name}` (expected planted)");
    let (mut n, mut k, mut gap, mut seed) = (None, None, None, None);
    for pair in rest.split(',').filter(|s| !s.is_empty()) {
        let (key, val) = pair.split_once('=').ok_or_else(|| Error::Parameter(format!("expected key=value, got `{pair}`")))?;
        let bad = || Error::Parameter(format!("bad value `{val}` for `{key}`"));
        match key {
            "N" | "n" => n = Some(val.parse().map_err(|_| bad())?),
            "k" => k = Some(val.parse().map_err(|_| bad())?),
            "gap" => gap = Some(val.parse().map_err(|_| bad())?),
            "seed" => seed = Some(val.parse().map_err(|_| bad())?),
            _ => return Err(Error::Parameter(format!("unknown generator key `{key}`"))),
        }
    }
    let missing = |what: &str| Error::Parameter(format!("generator spec is missing `{what}`"));
    Ok(Generator { n: n.ok_or_else(|| missing("N"))?, k: k.ok_or_else(|| missing("k"))?, gap: gap.ok_or_else(|| missing("gap"))?, seed })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotFound { .. } | Error::DetectionFailed { .. } => EXIT_NOT_FOUND,
        Error::Input(_) | Error::Parameter(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
        Error::Contract(_) | Error::Capacity(_) => EXIT_INTERNAL,
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            ensure!(j >= 1, Parameter, "--jobs must be at least 1");
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::Parameter(format!("cannot start {j} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn set_ledger(r: &mut Report, l: &CostLedger) {
    r.set("quantum.queries_uh", l.queries_uh);
    r.set("quantum.queries_state_prep", l.queries_state_prep);
    r.set("quantum.elementary_gates", l.elementary_gates);
    r.set("quantum.max_qubits", l.max_qubits);
    r.set("classical.samples", l.classical_samples);
}

/// Executes `run` and returns the report with the exit code it implies.
fn cmd_run(args: &RunArgs) -> Result<(Report, i32)> {
    let start = Instant::now();
    let seed = args.common.seed;
    let (h, source, k, truth): (HermitianMatrix, String, usize, Option<GapGroundTruth>) =
        match (&args.source.matrix, &args.source.generator) {
            (Some(path), _) => {
                let h = read_hmat(path)?;
                let k = args.k.ok_or_else(|| Error::Parameter("--k is required with --matrix".into()))?;
                (h, path.display().to_string(), k, None)
            }
            (None, Some(spec)) => {
                let g = parse_generator(spec)?;
                let inst = gen_planted_gap(g.n, g.k, g.gap, g.seed.unwrap_or(seed))?;
                let k = args.k.unwrap_or(g.k);
                let truth = (k == g.k).then_some(inst.truth);
                (inst.matrix, spec.clone(), k, truth)
            }
            (None, None) => unreachable!("clap enforces one source"),
        };
    let n = h.dim();
    ensure!(k >= 1 && k < n, Parameter, "k must lie in [1, N-1] = [1, {}], got {k}", n - 1);
    let truth = match truth {
        Some(t) => t,
        None => eig_reference(&h)?.gap(k)?,
    };
    let cfg = GapConfig {
        backend: args.common.backend,
        encoding: args.encoding,
        gap_min: args.gap_min.unwrap_or(DEFAULT_GAP_MIN),
    };

    let mut r = Report::new();
    r.set("mode", if args.const_only { "gapconst" } else { "qeig" });
    r.set("input.source", &source);
    r.set("input.n", n);
    r.set("input.k", k);
    if !args.const_only {
        r.set_f64("input.eps", args.eps);
    }
    r.set_f64("input.delta", args.delta);
    r.set("input.seed", seed);
    r.set("input.backend", cfg.backend.name());
    r.set("input.encoding", cfg.encoding.name());
    r.set_f64("input.gap_min", cfg.gap_min);
    r.set_f64("truth.lambda_k", truth.lambda_k);
    r.set_f64("truth.lambda_k1", truth.lambda_k1);
    r.set_f64("truth.mu", truth.midpoint);
    r.set_f64("truth.gap", truth.gap);

    let stream = Stream::new(seed).fork_named("run", 0);
    let outcome = if args.const_only {
        qgap_const(&h, k, args.delta, &cfg, stream).map(|g| {
            let c = g.check(&truth);
            r.set_f64("output.mu_hat", g.mu_hat);
            r.set_f64("output.gap_hat", g.gap_hat);
            r.set("output.iterations", g.iterations);
            r.set("output.probes", g.probes);
            r.set("check.gap_hat", c.gap_hat);
            r.set("check.mu_hat", c.mu_hat);
            r.set("check.iterations", c.iterations);
            r.set("check.all", c.all());
            g.ledger
        })
    } else {
        qeig(&h, k, args.delta, args.eps, &cfg, stream).map(|e| {
            let c = e.check(&truth, args.eps);
            r.set_f64("output.lambda_k", e.lambda_k);
            r.set_f64("output.lambda_k1", e.lambda_k1);
            r.set_f64("output.mu", e.mu);
            r.set_f64("output.gap", e.gap);
            r.set_f64("output.mu_hat", e.stage_one.mu_hat);
            r.set_f64("output.gap_hat", e.stage_one.gap_hat);
            r.set("output.iterations", e.stage_one.iterations);
            r.set("output.probes", e.probes);
            r.set("check.lambda_k", c.lambda_k);
            r.set("check.lambda_k1", c.lambda_k1);
            r.set("check.mu", c.mu);
            r.set("check.gap", c.gap);
            r.set("check.all", c.all());
            e.ledger
        })
    };
    let code = match outcome {
        Ok(ledger) => {
            r.set("status", "ok");
            set_ledger(&mut r, &ledger);
            EXIT_OK
        }
        Err(e @ (Error::NotFound { .. } | Error::DetectionFailed { .. })) => {
            let (status, ledger) = match &e {
                Error::NotFound { ledger, .. } => ("not_found", ledger),
                Error::DetectionFailed { ledger, .. } => ("detection_failed", ledger),
                _ => unreachable!(),
            };
            r.set("status", status);
            r.set("output.message", &e);
            set_ledger(&mut r, ledger);
            EXIT_NOT_FOUND
        }
        Err(e) => return Err(e),
    };
    r.set_f64("wall_clock_ms", start.elapsed().as_secs_f64() * 1e3);
    Ok((r, code))
}

fn cmd_validate(args: &ValidateArgs) -> Result<String> {
    let params = SuiteParams {
        n: args.n,
        trials: args.trials,
        delta: args.delta,
        eps: args.eps,
        gap: args.gap,
        k: args.k,
        seed: args.common.seed,
        backend: args.common.backend,
    };
    with_jobs(args.jobs, || run_suite(args.suite, &params))?.map(|t| t.to_csv())
}

/// Predicted query count `N²/(ε²Δ²) · ln(2N) · ln(N/(ε²Δ²))`, without
/// its constant.
pub fn predicted_queries(n: usize, gap: f64, eps: f64) -> f64 {
    let n = n as f64;
    let core = n * n / (eps * eps * gap * gap);
    core * (2.0 * n).ln() * (n / (eps * eps * gap * gap)).ln()
}

fn median(mut v: Vec<u128>) -> u128 {
    v.sort_unstable();
    v[v.len() / 2]
}

fn cmd_bench(args: &BenchArgs) -> Result<String> {
    ensure!(args.trials >= 1, Parameter, "--trials must be at least 1");
    let cfg = GapConfig { backend: args.common.backend, encoding: args.encoding, gap_min: DEFAULT_GAP_MIN };
    let root = Stream::new(args.common.seed).fork_named("bench", 0);
    let mut grid = Vec::new();
    for &n in &args.n {
        for &gap in &args.gap {
            for &eps in &args.eps {
                grid.push((n, gap, eps));
            }
        }
    }
    let mut out = String::from(
        "n,gap,eps,k,trials,failures,queries_uh,queries_state_prep,elementary_gates,max_qubits,classical_samples,predicted_queries_uh\n",
    );
    for (row, &(n, gap, eps)) in grid.iter().enumerate() {
        let cell = root.fork(row as u64);
        let runs: Vec<Result<(CostLedger, bool)>> = with_jobs(args.jobs, || {
            (0..args.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let inst = gen_planted_gap(n, args.k, gap, cell.fork_named("instance", t).key())?;
                    match qeig(&inst.matrix, args.k, args.delta, eps, &cfg, cell.fork(t)) {
                        Ok(r) => Ok((r.ledger, r.check(&inst.truth, eps).all())),
                        Err(Error::NotFound { ledger, .. } | Error::DetectionFailed { ledger, .. }) => Ok((ledger, false)),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })?;
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let failures = runs.iter().filter(|r| !r.1).count();
        let col = |f: fn(&CostLedger) -> u128| median(runs.iter().map(|r| f(&r.0)).collect());
        out.push_str(&format!(
            "{n},{gap:?},{eps:?},{},{},{failures},{},{},{},{},{},{:?}\n",
            args.k,
            args.trials,
            col(|l| l.queries_uh),
            col(|l| l.queries_state_prep),
            col(|l| l.elementary_gates),
            col(|l| l.max_qubits),
            col(|l| l.classical_samples),
            predicted_queries(n, gap, eps),
        ));
    }
    Ok(out)
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).and_then(|(report, code)| {
            let text = report.to_string();
            match &a.report {
                Some(path) => std::fs::write(path, &text)?,
                None => write!(stdout, "{text}")?,
            }
            Ok(code)
        }),
        Command::Validate(a) => cmd_validate(a).and_then(|csv| Ok(write!(stdout, "{csv}").map(|_| EXIT_OK)?)),
        Command::Bench(a) => cmd_bench(a).and_then(|csv| Ok(write!(stdout, "{csv}").map(|_| EXIT_OK)?)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_specs() {
        assert_eq!(
            parse_generator("planted:N=16,k=3,gap=0.2").unwrap(),
            Generator { n: 16, k: 3, gap: 0.2, seed: None }
        );
        assert_eq!(parse_generator("planted:N=4,k=1,gap=0.3,seed=9").unwrap().seed, Some(9));
        assert!(parse_generator("planted:N=4,k=1").is_err());
        assert!(parse_generator("other:N=4,k=1,gap=0.1").is_err());
        assert!(parse_generator("planted:N=x,k=1,gap=0.1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parameter("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Contract("x".into())), EXIT_INTERNAL);
        assert_eq!(exit_code(&Error::NotFound { gap_min: 0.1, ledger: CostLedger::default() }), EXIT_NOT_FOUND);
    }

    #[test]
    fn prediction_grows_with_n_and_shrinking_gap() {
        assert!(predicted_queries(16, 0.2, 0.2) > predicted_queries(8, 0.2, 0.2));
        let ratio = predicted_queries(16, 0.1, 0.2) / predicted_queries(16, 0.2, 0.2);
        assert!((1.8..=4.8).contains(&ratio), "{ratio}");
    }
}
