use std::fs;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levelset::benchmark::{generate, run_benchmark, BenchmarkConfig, ScenarioKind};
use levelset::io::{format_points, read_dataset, read_tree, write_labeling, write_tree, DataKind};
use levelset::labeling::ClusterParams;
use levelset::pipeline::DatasetMetric;
use levelset::stability::{split_mass_histogram, subsample_trees, StabilityConfig};
use levelset::{ClusterRequest, Dataset64, Error, TreeParams};
use levelset_explorer::Session;

#[derive(Parser)]
#[command(name = "levelset", version, about = "Level set tree clustering")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log filter, e.g. `info` or `levelset=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Points,
    Fibers,
}

impl From<Kind> for DataKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Points => DataKind::Points,
            Kind::Fibers => DataKind::Fibers,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cut,
    Leaf,
    FirstK,
}

#[derive(Args)]
struct DataArgs {
    /// Point CSV or fiber JSON-lines file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "points")]
    kind: Kind,
    /// Max-average-min cutoff (fibers only).
    #[arg(long, default_value_t = 0.0)]
    cutoff: f64,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset64, Error> {
        read_dataset(&self.input, self.kind.into())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the density, build and prune the tree.
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Turn a saved tree into a cluster labeling.
    Cluster {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, conflicts_with = "mass")]
        level: Option<f64>,
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long = "K")]
        clusters: Option<usize>,
        /// Give every background item the majority label of its nearest
        /// foreground items; needs --input.
        #[arg(long)]
        assign_background: bool,
        #[arg(long)]
        k_assign: Option<usize>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "points")]
        kind: Kind,
        #[arg(long, default_value_t = 0.0)]
        cutoff: f64,
        /// Labeling JSON path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw a synthetic benchmark data set as point CSV.
    Simulate {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Point CSV path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the true group of each point, one per line.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run the error-rate benchmark described by a TOML file.
    Benchmark {
        /// Configuration file; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build trees on random subsamples and record their split masses.
    Stability {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        subsamples: usize,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        /// Sample with replacement.
        #[arg(long)]
        bootstrap: bool,
        #[arg(long)]
        output: PathBuf,
        /// Also write the per-subsample mode function as CSV.
        #[arg(long)]
        mode_csv: Option<PathBuf>,
    },
    /// Serve a tree to the browser explorer.
    Serve {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "points")]
        kind: Kind,
        #[arg(long, default_value_t = 0.0)]
        cutoff: f64,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Directory of static explorer assets.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnachievableK { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Build { data, k, gamma, output } => {
            let set = data.load()?;
            let started = Instant::now();
            let tree = set.tree(&TreeParams {
                k,
                gamma,
                cutoff: data.cutoff,
            })?;
            tracing::info!(n = set.len(), nodes = tree.len(), elapsed = ?started.elapsed(), "built tree");
            write_tree(&output, &tree)
        }
        Command::Cluster {
            tree,
            method,
            level,
            mass,
            clusters,
            assign_background,
            k_assign,
            input,
            kind,
            cutoff,
            output,
        } => {
            let tree = read_tree::<f64>(&tree)?;
            let request = ClusterRequest {
                method: match method {
                    Method::Cut => "cut",
                    Method::Leaf => "leaf",
                    Method::FirstK => "first-k",
                }
                .into(),
                params: ClusterParams {
                    level,
                    mass,
                    k: clusters,
                    assign_background,
                    k_assign,
                },
            };
            let data = input.map(|p| read_dataset::<f64>(p, kind.into())).transpose()?;
            if let Some(d) = &data {
                if d.len() != tree.n() {
                    return Err(Error::InvalidInput(format!(
                        "the tree covers {} items but the data set has {}",
                        tree.n(),
                        d.len()
                    )));
                }
            }
            let metric = data.as_ref().map(|data| DatasetMetric { data, cutoff });
            let labeling = request.run(&tree, metric.as_ref())?;
            match output {
                Some(p) => write_labeling(p, &labeling),
                None => emit(&labeling.to_json(), None),
            }
        }
        Command::Simulate {
            scenario,
            n,
            r,
            seed,
            output,
            truth,
        } => {
            let s = generate(scenario, n, r, seed)?;
            emit(&format_points(&s.points), output.as_deref())?;
            if let Some(p) = truth {
                let text: String = s.truth.iter().map(|g| format!("{g}\n")).collect();
                fs::write(p, text)?;
            }
            Ok(())
        }
        Command::Benchmark { config, output } => {
            let config = match config {
                Some(p) => BenchmarkConfig::read(p)?,
                None => BenchmarkConfig::default(),
            };
            let started = Instant::now();
            let report = run_benchmark(&config)?;
            tracing::info!(rows = report.rows.len(), elapsed = ?started.elapsed(), "benchmark done");
            report.write_csv(output)
        }
        Command::Stability {
            data,
            subsamples,
            size,
            seed,
            k,
            gamma,
            bootstrap,
            output,
            mode_csv,
        } => {
            let set = data.load()?;
            let params = TreeParams {
                k,
                gamma,
                cutoff: data.cutoff,
            };
            let mut config = StabilityConfig::new(size, subsamples, params, seed);
            config.bootstrap = bootstrap;
            let report = subsample_trees(&set, &config)?;
            report.write(&output, mode_csv.as_deref())?;
            if subsamples >= 2 {
                for h in split_mass_histogram(&report, 20)? {
                    tracing::info!(rank = h.rank, coverage = h.coverage, mean = h.mean(), sd = h.sd(), "split mass");
                }
            }
            Ok(())
        }
        Command::Serve {
            tree,
            input,
            kind,
            cutoff,
            port,
            host,
            static_dir,
        } => {
            let tree = read_tree::<f64>(&tree)?;
            let data = input.map(|p| read_dataset::<f64>(p, kind.into())).transpose()?;
            let session = Session::new(tree, data, cutoff)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(levelset_explorer::serve(session, SocketAddr::new(host, port), static_dir))?;
            Ok(())
        }
    }
}
