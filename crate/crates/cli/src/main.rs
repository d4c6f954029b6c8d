use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperkern::embedding::{build_pair, CubeEmbedderPair, Role};
use hyperkern::harness::{
    bench_conjunction, gen_conjunction_dataset, signed_labels, verify_with, Algo, BenchConfig, ConjunctionTask,
    Dataset, Example, Fault, SampleMode, VerifyOptions,
};
use hyperkern::kernels::{universal_kernel, HypercubePoint, KernelSpec, ModelReport};
use hyperkern::learners::{
    mkl_lambda, mkl_train, pegasos_train, rademacher_estimate, LossKind, MklTrainConfig, PegasosConfig,
};
use hyperkern::scheme::{delta_matrix, eta_vector, is_admissible, vertex_betas, BetaCoeffs, LayerParams, DEFAULT_PSD_TOL};
use serde_json::{json, Value};

/// Euclidean kernels on the Boolean hypercube: scheme tools, training,
/// embeddings and self-checks.
#[derive(Parser, Debug)]
#[command(name = "hyperkern", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print compact single-line JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Print nothing on stdout; exit code and --out files only.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Johnson-scheme quantities of a layer.
    #[command(subcommand)]
    Scheme(SchemeCmd),
    /// Build or evaluate kernels.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Train a classifier on a bitstring dataset.
    Train(TrainArgs),
    /// Monte-Carlo Rademacher estimate against the analytic bound.
    Rademacher(RademacherArgs),
    /// Build or apply a hypercube embedding of `[0,1]^n`.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Run a conjunction benchmark.
    Bench(BenchArgs),
    /// Run the self-verification suite.
    Verify(VerifyArgs),
    /// Generate a conjunction dataset.
    Gen(GenArgs),
}

#[derive(Subcommand, Debug)]
enum SchemeCmd {
    /// The eigenvalue matrix Δ and diagonal vector η.
    Delta(LayerArgs),
    /// Vertex kernels of a layer.
    Vertices(LayerArgs),
    /// Admissibility of a coefficient vector.
    Check {
        #[command(flatten)]
        layer: LayerArgs,
        /// Comma-separated coefficients β_0..β_p.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
        tol: f64,
    },
}

#[derive(Args, Debug)]
struct LayerArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    /// Write the universal kernel for dimension n.
    Universal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved kernel on two bitstrings.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        x: HypercubePoint,
        #[arg(long)]
        y: HypercubePoint,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TrainAlgo {
    Pegasos,
    Mkl,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: TrainAlgo,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "hinge")]
    loss: LossKind,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Overrides λ = eps / (n B²).
    #[arg(long)]
    lambda: Option<f64>,
    /// Pegasos passes over the data.
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RademacherArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

#[derive(Subcommand, Debug)]
enum EmbedCmd {
    /// Build a certified embedder pair and write it in binary form.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed real points from a JSON Lines file.
    Apply {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        role: u8,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    /// Number of literals |I|.
    #[arg(long, default_value_t = 1)]
    literals: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "universal")]
    algo: Algo,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "hinge")]
    loss: LossKind,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    /// Plant a fault to see the suite catch it.
    #[arg(long)]
    inject: Option<Fault>,
    #[arg(long, default_value_t = 300)]
    samples: usize,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Draw points of weight exactly s.
    #[arg(long, conflicts_with = "p", required_unless_present = "p")]
    s: Option<usize>,
    /// Draw points uniformly from layer p.
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated literal indices.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    literals: Vec<usize>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// What a command produced: JSON for stdout (none when the command already
/// streamed its output) and whether its checks passed.
struct Outcome {
    value: Option<Value>,
    passed: bool,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Self {
            value: Some(value),
            passed: true,
        }
    }

    fn streamed() -> Self {
        Self {
            value: None,
            passed: true,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let (false, Some(value)) = (cli.quiet, &out.value) {
                let text = if cli.json {
                    serde_json::to_string(value)
                } else {
                    serde_json::to_string_pretty(value)
                };
                // A closed pipe (e.g. `| head`) is not an error.
                let _ = writeln!(io::stdout().lock(), "{}", text.expect("JSON values serialize"));
            }
            ExitCode::from(if out.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn warn(cli: &Cli, msg: &str) {
    if !cli.quiet {
        eprintln!("warning: {msg}");
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Scheme(cmd) => scheme(cmd),
        Command::Kernel(cmd) => kernel(cmd),
        Command::Train(args) => train(cli, args),
        Command::Rademacher(args) => {
            let points = Dataset::load(&args.data)?.cube_points()?;
            let est = rademacher_estimate(&points, args.b, args.trials, cli.seed)?;
            Ok(Outcome::ok(json!({
                "mean": est.mean,
                "stderr": est.stderr,
                "bound": est.bound,
                "trials": est.trials,
                "layer_terms": est.layer_terms,
            })))
        }
        Command::Embed(cmd) => embed(cli, cmd),
        Command::Bench(args) => bench(cli, args),
        Command::Verify(args) => {
            let report = verify_with(&VerifyOptions {
                max_n: args.max_n,
                fault: args.inject,
                characterization_samples: args.samples,
                seed: cli.seed,
            })?;
            let passed = report.passed;
            Ok(Outcome {
                value: Some(serde_json::to_value(report)?),
                passed,
            })
        }
        Command::Gen(args) => gen(cli, args),
    }
}

fn scheme(cmd: &SchemeCmd) -> anyhow::Result<Outcome> {
    match cmd {
        SchemeCmd::Delta(l) => {
            let layer = LayerParams::new(l.n, l.p)?;
            let delta = delta_matrix(layer)?;
            Ok(Outcome::ok(json!({
                "n": l.n,
                "p": l.p,
                "delta": delta.rows(),
                "eta": eta_vector(layer).eta,
                "multiplicities": (0..=l.p).map(|j| layer.multiplicity(j) as f64).collect::<Vec<_>>(),
            })))
        }
        SchemeCmd::Vertices(l) => {
            let layer = LayerParams::new(l.n, l.p)?;
            let betas: Vec<Vec<f64>> = vertex_betas(layer)?.into_iter().map(|b| b.beta).collect();
            Ok(Outcome::ok(json!({"n": l.n, "p": l.p, "vertices": betas})))
        }
        SchemeCmd::Check { layer, beta, tol } => {
            let params = LayerParams::new(layer.n, layer.p)?;
            let adm = is_admissible(&BetaCoeffs::new(params, beta.clone())?, *tol)?;
            let passed = adm.admissible;
            Ok(Outcome {
                value: Some(json!({
                    "admissible": adm.admissible,
                    "eigenvalues": adm.profile.lambdas,
                    "diagonal": adm.diagonal,
                    "violation": adm.violation.map(|v| v.to_string()),
                })),
                passed,
            })
        }
    }
}

fn kernel(cmd: &KernelCmd) -> anyhow::Result<Outcome> {
    match cmd {
        KernelCmd::Universal { n, out } => {
            let spec = universal_kernel(*n)?;
            match out {
                Some(path) => {
                    spec.save(path)?;
                    Ok(Outcome::ok(json!({"written": path, "n": n})))
                }
                None => Ok(Outcome::ok(serde_json::to_value(spec.to_file())?)),
            }
        }
        KernelCmd::Eval { spec, x, y } => {
            let spec = KernelSpec::load(spec)?;
            Ok(Outcome::ok(json!({"value": spec.evaluate(x, y)?})))
        }
    }
}

fn train(cli: &Cli, args: &TrainArgs) -> anyhow::Result<Outcome> {
    let data = Dataset::load(&args.data)?;
    let points = data.cube_points()?;
    let mut labels = data.labels();
    if args.loss == LossKind::Hinge {
        let (signed, mapped) = signed_labels(&labels)?;
        if mapped {
            warn(cli, "labels in {0,1} mapped to {-1,+1} for the hinge loss");
        }
        labels = signed;
    }
    let lambda = args.lambda.unwrap_or_else(|| mkl_lambda(data.n, args.b, args.eps));
    let model = match args.algo {
        TrainAlgo::Pegasos => {
            let spec = universal_kernel(data.n)?;
            let cfg = PegasosConfig::new(lambda, args.epochs, cli.seed, args.loss);
            pegasos_train(&spec, &points, &labels, &cfg)?
        }
        TrainAlgo::Mkl => {
            let mut cfg = MklTrainConfig::new(args.b, args.eps, args.loss);
            cfg.lambda_override = Some(lambda);
            let out = mkl_train(&points, &labels, &cfg)?;
            let report = ModelReport {
                seed: cli.seed,
                ..out.model.report.clone()
            };
            out.model.with_report(report)
        }
    };
    let summary = json!({
        "algo": format!("{:?}", args.algo).to_lowercase(),
        "lambda": lambda,
        "report": model.report,
        "m": points.len(),
    });
    match &args.out {
        Some(path) => {
            model.save(path)?;
            Ok(Outcome::ok(summary))
        }
        None => Ok(Outcome::ok(serde_json::from_str(&model.to_json()?)?)),
    }
}

fn embed(cli: &Cli, cmd: &EmbedCmd) -> anyhow::Result<Outcome> {
    match cmd {
        EmbedCmd::Build { n, eps, out } => {
            let pair = build_pair(*n, *eps, cli.seed)?;
            pair.save(out)?;
            Ok(Outcome::ok(json!({
                "n": pair.n,
                "t": pair.t(),
                "width": pair.width(),
                "epsilon": pair.epsilon,
                "seed": pair.seed,
                "attempts": pair.attempts,
                "certified_error": pair.certified_error(),
            })))
        }
        EmbedCmd::Apply { pair, role, input, out } => {
            let pair = CubeEmbedderPair::load(pair)?;
            let role = Role::from_number(*role)?;
            let data = Dataset::from_jsonl(BufReader::new(
                fs::File::open(input).with_context(|| format!("opening {}", input.display()))?,
            ))?;
            let mut lines = String::new();
            for (x, e) in data.real_points().iter().zip(&data.examples) {
                let bits = pair.embed(role, x)?.bits;
                lines.push_str(&serde_json::to_string(&json!({"x": bits.to_string(), "y": e.y}))?);
                lines.push('\n');
            }
            match out {
                Some(path) => {
                    write_text(path, &lines)?;
                    Ok(Outcome::ok(json!({"written": path, "points": data.len(), "width": pair.width()})))
                }
                None => {
                    if !cli.quiet {
                        io::stdout().write_all(lines.as_bytes())?;
                    }
                    Ok(Outcome::streamed())
                }
            }
        }
    }
}

fn bench(cli: &Cli, args: &BenchArgs) -> anyhow::Result<Outcome> {
    let mut cfg = BenchConfig::new(args.n, args.s, args.literals, args.m, args.algo);
    cfg.b = args.b;
    cfg.epsilon = args.eps;
    cfg.seed = cli.seed;
    cfg.noise_rate = args.noise;
    cfg.loss = args.loss;
    cfg.lambda_override = args.lambda;
    let (report, _) = bench_conjunction(&cfg)?;
    if let Some(w) = &report.warning {
        warn(cli, w);
    }
    let value = serde_json::to_value(&report)?;
    if let Some(path) = &args.out {
        write_text(path, &serde_json::to_string_pretty(&value)?)?;
    }
    Ok(Outcome::ok(value))
}

fn gen(cli: &Cli, args: &GenArgs) -> anyhow::Result<Outcome> {
    let mode = match (args.s, args.p) {
        (Some(s), None) => SampleMode::Sparse { s },
        (None, Some(p)) => SampleMode::UniformLayer { p },
        _ => bail!("give exactly one of --s and --p"),
    };
    let task = ConjunctionTask::new(args.n, args.literals.clone(), mode)?;
    let generated = gen_conjunction_dataset(&task, args.m, args.noise, cli.seed)?;
    if let Some(w) = &generated.warning {
        warn(cli, w);
    }
    let text = generated.dataset.to_jsonl()?;
    match &args.out {
        Some(path) => {
            write_text(path, &text)?;
            let positives = generated.dataset.examples.iter().filter(|e: &&Example| e.y == 1.0).count();
            Ok(Outcome::ok(json!({"written": path, "m": args.m, "positives": positives})))
        }
        None => {
            if !cli.quiet {
                io::stdout().write_all(text.as_bytes())?;
            }
            Ok(Outcome::streamed())
        }
    }
}
