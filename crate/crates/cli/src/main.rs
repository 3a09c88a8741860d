//! `kapcpd` command-line tool.
//!
//! Results go to stdout as JSON (CSV for `kernel` and `bench`), logs and
//! errors to stderr. Exit status: 0 on success, 2 when the statistic is
//! undefined for the data, 1 for anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kapcpd::experiment::{appendix_a_sample, run_bench, BenchSpec, Scenario};
use kapcpd::graphs::{read_sequence, render_sequence, write_sequence, GeneratorSpec, GraphSequence};
use kapcpd::inference::{fast_test, permutation_test, FastConfig, PermConfig, TestOutcome};
use kapcpd::kernels::{read_kernel, render_kernel, write_kernel, KernelChoice, KernelMatrix, DEFAULT_THRESHOLD};
use kapcpd::scan::{scan_statistic, ScanConfig};
use kapcpd::segmentation::{binary_segmentation, Engine, SegmentationConfig};
use kapcpd::{Error, Result};

#[derive(Parser)]
#[command(name = "kapcpd", version, about = "Kernel-aggregated change-point detection for network sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Permutation test for a single change point.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        scan: ScanArgs,
        /// Number of permutations.
        #[arg(long, default_value_t = 1000)]
        perms: usize,
    },
    /// Analytic (Bonferroni) test for a single change point.
    Fastdetect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, default_value_t = FastConfig::DEFAULT_R1)]
        r1: f64,
        #[arg(long, default_value_t = FastConfig::DEFAULT_R2)]
        r2: f64,
        /// Use the two-sided factor for the W tails too.
        #[arg(long)]
        w_two_sided: bool,
    },
    /// Binary segmentation for multiple change points.
    Segment {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.05)]
        n0_frac: f64,
        #[arg(long, default_value_t = 0.95)]
        n1_frac: f64,
        #[arg(long, default_value_t = 1000)]
        perms: usize,
        #[arg(long, default_value_t = FastConfig::DEFAULT_R1)]
        r1: f64,
        #[arg(long, default_value_t = FastConfig::DEFAULT_R2)]
        r2: f64,
        /// Minimum distance between reported change points.
        #[arg(long, default_value_t = 6)]
        min_sep: usize,
        /// Segments shorter than this are not tested (default max(2 min-sep, 20)).
        #[arg(long)]
        min_segment: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = EngineArg::Perm)]
        engine: EngineArg,
        /// Print the recursion tree to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate a sequence and write it as GSEQ.
    Simulate(SimulateArgs),
    /// Compute a kernel matrix from a GSEQ file and write it as CSV.
    Kernel {
        /// GSEQ input file.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
        kind: KernelArg,
        /// Binarization cutoff for weighted graphs (graphlet kernel only).
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark grid described by a TOML or JSON file.
    Bench {
        spec: PathBuf,
        /// Write the CSV here instead of stdout; the summary then goes to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// GSEQ file; may be omitted when both kernels come from files.
    input: Option<PathBuf>,
    /// gaussian, graphlet, or file:PATH (kernel CSV).
    #[arg(long, default_value = "gaussian")]
    kernel1: String,
    #[arg(long, default_value = "graphlet")]
    kernel2: String,
    /// Binarization cutoff applied to weighted graphs for the graphlet kernel.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 0.05)]
    n0_frac: f64,
    #[arg(long, default_value_t = 0.95)]
    n1_frac: f64,
    /// Write the per-cut profile (t, S, Z components) as CSV.
    #[arg(long)]
    dump_profile: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Named experimental setting.
    #[arg(long, value_parser = parse_scenario, required_unless_present = "model")]
    scenario: Option<Scenario>,
    /// Signal level of the setting (its meaning depends on the scenario).
    #[arg(long, default_value_t = 0.0)]
    signal: f64,
    /// Full generator description (TOML or JSON); overrides the scenario flags.
    #[arg(long, conflicts_with = "scenario")]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Last snapshot before the change (default n/2).
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Vector dimension for appendix-a.
    #[arg(long, default_value_t = 30)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted. appendix-a writes the Gaussian and
    /// Laplacian kernels to PATH.gauss.csv and PATH.laplace.csv.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Perm,
    Fast,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Graphlet,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        "expected one of er, sbm, sparse-sbm, dcsbm-degree, dcsbm-hub, dcsbm-block, rgg, ergm, appendix-a".to_string()
    })
}

fn parse_kernel_choice(arg: &str, threshold: f64) -> Result<KernelChoice> {
    match arg {
        "gaussian" => Ok(KernelChoice::Gaussian),
        "graphlet" => Ok(KernelChoice::Graphlet { threshold }),
        _ => match arg.strip_prefix("file:") {
            Some(path) => Ok(KernelChoice::External(read_kernel(path)?)),
            None => Err(Error::Parameter(format!("unknown kernel '{arg}' (gaussian, graphlet or file:PATH)"))),
        },
    }
}

struct Loaded {
    seq: Option<GraphSequence>,
    choices: [KernelChoice; 2],
}

impl Loaded {
    fn kernels(&self) -> Result<(KernelMatrix, KernelMatrix)> {
        let build = |c: &KernelChoice| match (c, &self.seq) {
            (KernelChoice::External(k), None) => Ok(k.clone()),
            (c, Some(seq)) => c.build(seq),
            (_, None) => Err(Error::Parameter(format!("the {} kernel needs a GSEQ input file", c.label()))),
        };
        let (k1, k2) = (build(&self.choices[0])?, build(&self.choices[1])?);
        if k1.n() != k2.n() {
            return Err(Error::Parameter(format!("kernel sizes differ: {} vs {}", k1.n(), k2.n())));
        }
        Ok((k1, k2))
    }
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let choices = [
        parse_kernel_choice(&input.kernel1, input.threshold)?,
        parse_kernel_choice(&input.kernel2, input.threshold)?,
    ];
    let seq = input.input.as_ref().map(read_sequence).transpose()?;
    Ok(Loaded { seq, choices })
}

fn dump_profile(path: Option<&Path>, k1: &KernelMatrix, k2: &KernelMatrix, cfg: ScanConfig) -> Result<()> {
    if let Some(path) = path {
        scan_statistic(k1, k2, cfg)?.write_csv(path)?;
        log::info!("profile written to {}", path.display());
    }
    Ok(())
}

fn print_outcome(o: &TestOutcome) {
    println!("{}", o.to_json());
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parses TOML unless the file extension says JSON.
fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect { input, scan, perms } => {
            let loaded = load(&input)?;
            let (k1, k2) = loaded.kernels()?;
            let cfg = ScanConfig::from_fractions(k1.n(), scan.n0_frac, scan.n1_frac)?;
            let outcome = permutation_test(&k1, &k2, cfg, PermConfig::new(perms, input.seed))?;
            dump_profile(scan.dump_profile.as_deref(), &k1, &k2, cfg)?;
            print_outcome(&outcome);
        }
        Command::Fastdetect {
            input,
            scan,
            r1,
            r2,
            w_two_sided,
        } => {
            let loaded = load(&input)?;
            let (k1, k2) = loaded.kernels()?;
            let cfg = ScanConfig::from_fractions(k1.n(), scan.n0_frac, scan.n1_frac)?;
            let mut fcfg = FastConfig::new(r1, r2, cfg)?;
            fcfg.w_two_sided = w_two_sided;
            let outcome = fast_test(&k1, &k2, fcfg)?;
            dump_profile(scan.dump_profile.as_deref(), &k1, &k2, cfg)?;
            print_outcome(&outcome);
        }
        Command::Segment {
            input,
            n0_frac,
            n1_frac,
            perms,
            r1,
            r2,
            min_sep,
            min_segment,
            alpha,
            engine,
            trace,
        } => {
            let loaded = load(&input)?;
            let mut cfg = SegmentationConfig::with_min_separation(min_sep);
            if let Some(m) = min_segment {
                cfg.min_segment = m;
            }
            cfg.alpha = alpha;
            cfg.n0_frac = n0_frac;
            cfg.n1_frac = n1_frac;
            cfg.perm = PermConfig::new(perms, input.seed);
            cfg.r1 = r1;
            cfg.r2 = r2;
            cfg.engine = match engine {
                EngineArg::Perm => Engine::KapPerm,
                EngineArg::Fast => Engine::KapfAnalytic,
            };
            let result = match &loaded.seq {
                Some(seq) => binary_segmentation(seq, [&loaded.choices[0], &loaded.choices[1]], &cfg)?,
                None => {
                    let (k1, k2) = loaded.kernels()?;
                    kapcpd::segmentation::binary_segmentation_kernels(&k1, &k2, &cfg)?
                }
            };
            if trace {
                eprint!("{}", result.render_trace());
            }
            println!("{}", result.to_json());
        }
        Command::Simulate(args) => simulate(args)?,
        Command::Kernel {
            input,
            kind,
            threshold,
            output,
        } => {
            let seq = read_sequence(&input)?;
            let choice = match kind {
                KernelArg::Gaussian => KernelChoice::Gaussian,
                KernelArg::Graphlet => KernelChoice::Graphlet { threshold },
            };
            let k = choice.build(&seq)?;
            match output {
                Some(path) => write_kernel(&k, path)?,
                None => print!("{}", render_kernel(&k)),
            }
        }
        Command::Bench { spec, output } => {
            let spec: BenchSpec = read_config(&spec)?;
            let result = run_bench(&spec)?;
            let summary = result.summary(spec.metric);
            match output {
                Some(path) => {
                    write_text(&path, &result.to_csv())?;
                    print!("{summary}");
                }
                None => {
                    print!("{}", result.to_csv());
                    eprint!("{summary}");
                }
            }
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    if args.scenario == Some(Scenario::AppendixA) {
        let tau = args.tau.unwrap_or(args.n / 2);
        let x = appendix_a_sample(args.dim, args.signal, args.n, tau, args.seed)?;
        let Some(out) = args.output else {
            return Err(Error::Parameter("appendix-a needs --output; it writes two kernel files".into()));
        };
        let with_suffix = |s: &str| {
            let mut p = out.clone().into_os_string();
            p.push(s);
            PathBuf::from(p)
        };
        write_kernel(&kapcpd::kernels::gaussian_vector_kernel(&x)?, with_suffix(".gauss.csv"))?;
        write_kernel(&kapcpd::kernels::laplacian_vector_kernel(&x)?, with_suffix(".laplace.csv"))?;
        return Ok(());
    }
    let spec: GeneratorSpec = match (&args.model, args.scenario) {
        (Some(path), _) => read_config(path)?,
        (None, Some(s)) => s.spec(args.signal, args.n, args.tau.unwrap_or(args.n / 2), args.nodes, args.seed)?,
        (None, None) => return Err(Error::Parameter("give --scenario or --model".into())),
    };
    let seq = kapcpd::graphs::generate_sequence(&spec)?;
    match args.output {
        Some(path) => write_sequence(&seq, path)?,
        None => print!("{}", render_sequence(&seq)),
    }
    Ok(())
}

fn configure_threads() {
    let Ok(v) = std::env::var("KAPCPD_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring KAPCPD_THREADS={v:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_degenerate() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
