use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use provclust::pipeline::{
    execute, reproduce_paper, KChoice, OutputOptions, PipelineConfig, PipelineError,
    ReproduceOptions, SigmaChoice, Stage,
};
use provclust::selection::KRange;
use provclust::{Error, KMeansParams, LaplacianVariant, Rate, SilhouetteSpace};

/// Spectral clustering of entities by tabular indicators.
#[derive(Debug, Parser)]
#[command(
    name = "cluster",
    version,
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// CSV with an `entity_id` column followed by numeric indicators.
    #[arg(long, required = true)]
    input: Option<PathBuf>,

    /// Indicators to cluster on, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    columns: Vec<String>,

    /// Divide indicators by a constant or by a per-entity column.
    #[arg(long, value_name = "FLOAT|COLUMN")]
    adjust_rate: Option<Rate>,

    /// Gaussian kernel bandwidth.
    #[arg(long, default_value = "auto", value_name = "FLOAT|auto")]
    sigma: SigmaChoice,

    /// Keep only each entity's k nearest neighbours in the affinity.
    #[arg(long, default_value = "off", value_name = "INT|off")]
    knn: Knn,

    #[arg(long, default_value = "sym", value_name = "sym|unnorm")]
    laplacian: LaplacianVariant,

    /// Unit-normalize embedding rows; `auto` follows the Laplacian.
    #[arg(long, value_enum, default_value_t = Toggle::Auto)]
    row_normalize: Toggle,

    /// Number of clusters.
    #[arg(long, default_value = "auto", value_name = "INT|auto")]
    k: KChoice,

    /// Candidate k range for the eigen-gap and silhouette sweep
    /// [default: 2,min(10,n-1)].
    #[arg(long, value_name = "MIN,MAX")]
    k_range: Option<KRange>,

    /// k-means seed; CLUSTER_SEED in the environment takes precedence.
    #[arg(long, default_value_t = KMeansParams::DEFAULT_SEED)]
    seed: u64,

    #[arg(long, default_value_t = KMeansParams::DEFAULT_RESTARTS)]
    restarts: usize,

    #[arg(long, default_value_t = KMeansParams::DEFAULT_MAX_ITER)]
    max_iter: usize,

    #[arg(long, default_value_t = KMeansParams::DEFAULT_TOL)]
    tol: f64,

    #[arg(long, default_value = "embedding", value_name = "embedding|features")]
    silhouette_space: SilhouetteSpace,

    /// Column whose cluster means order the categories [default: first of --columns].
    #[arg(long)]
    reference: Option<String>,

    /// Category names from lowest to highest, comma separated.
    #[arg(long, value_delimiter = ',')]
    category_names: Option<Vec<String>>,

    /// Output directory.
    #[arg(long, required = true)]
    out: Option<PathBuf>,

    /// Also write eigenvalue, eigen-gap and silhouette SVG plots.
    #[arg(long)]
    plots: bool,

    /// Also write the affinity matrix and eigenvalues as CSV.
    #[arg(long)]
    dump_matrices: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster export, import and net export one at a time, raw and
    /// rate-adjusted, and write one report per analysis.
    ReproducePaper {
        /// CSV with entity_id,export,import,net_export and optionally
        /// <indicator>_adjusted columns.
        #[arg(long)]
        input: PathBuf,

        #[arg(long)]
        out: PathBuf,

        /// Rate used when <indicator>_adjusted columns are absent.
        #[arg(long, value_name = "FLOAT|COLUMN")]
        adjust_rate: Option<Rate>,

        #[arg(long, default_value_t = KMeansParams::DEFAULT_SEED)]
        seed: u64,

        #[arg(long)]
        no_plots: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, Copy)]
struct Knn(Option<usize>);

impl std::str::FromStr for Knn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "off" {
            return Ok(Knn(None));
        }
        s.parse()
            .map(|k| Knn(Some(k)))
            .map_err(|_| format!("expected an integer or \"off\", got {s:?}"))
    }
}

fn config_error(message: String) -> PipelineError {
    PipelineError {
        stage: Stage::Config,
        source: Error::Config(message),
    }
}

fn seed(flag: u64) -> Result<u64, PipelineError> {
    match std::env::var("CLUSTER_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| config_error(format!("CLUSTER_SEED is not a u64: {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn run(args: RunArgs) -> Result<serde_json::Value, PipelineError> {
    let input = args.input.expect("required by clap");
    let out = args.out.expect("required by clap");
    let mut config = PipelineConfig::new(input, &[]);
    config.columns = args.columns;
    config.adjust_rate = args.adjust_rate;
    config.sigma = args.sigma;
    config.knn = args.knn.0;
    config.laplacian = args.laplacian;
    config.row_normalize = match args.row_normalize {
        Toggle::Auto => None,
        Toggle::On => Some(true),
        Toggle::Off => Some(false),
    };
    config.k = args.k;
    config.k_range = args.k_range;
    config.seed = seed(args.seed)?;
    config.restarts = args.restarts;
    config.max_iter = args.max_iter;
    config.tol = args.tol;
    config.silhouette_space = args.silhouette_space;
    config.reference = args.reference;
    config.category_names = args.category_names;

    let options = OutputOptions {
        out_dir: out.clone(),
        plots: args.plots,
        dump_matrices: args.dump_matrices,
    };
    let (run, files) = execute(&config, &options)?;
    Ok(serde_json::json!({
        "k": run.k_used,
        "eigengap_k": run.selection.chosen_k,
        "silhouette": run.silhouette,
        "shares": run.shares.shares,
        "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
    }))
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, PipelineError> {
    match cli.command {
        None => run(cli.run),
        Some(Command::ReproducePaper {
            input,
            out,
            adjust_rate,
            seed: flag,
            no_plots,
        }) => {
            let options = ReproduceOptions {
                seed: seed(flag)?,
                plots: !no_plots,
                adjust_rate,
            };
            let summary = reproduce_paper(&input, &out, &options)?;
            Ok(serde_json::json!({
                "out": out.display().to_string(),
                "analyses": summary.analyses.iter().map(|a| serde_json::json!({
                    "analysis": a.analysis,
                    "k": a.k,
                })).collect::<Vec<_>>(),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect::<Vec<_>>()
                .join(" ");
            let line = serde_json::json!({
                "error": {
                    "stage": "config",
                    "kind": "InvalidArguments",
                    "message": message.trim_start_matches("error: "),
                }
            });
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
