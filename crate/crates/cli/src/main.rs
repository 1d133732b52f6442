//! `ipw` — batch pipeline for multi-treatment IPW analyses.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod config;
mod pipeline;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::PipelineConfig;
use ipw_core::synth::{generate, two_field_demo, GeneratorConfig};
use pipeline::{Failure, Scope};

#[derive(Parser)]
#[command(name = "ipw", version, about = "Multi-treatment IPW analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only records with exactly one category.
    #[arg(long)]
    single_category_only: bool,
    /// Scheme file (one category code per line), overriding the config.
    #[arg(long)]
    scheme: Option<PathBuf>,
    /// Category → supercategory mapping CSV, overriding the config.
    #[arg(long)]
    aggregate: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: scores, overlap, balance, and effects.
    Run(AnalysisArgs),
    /// Balance diagnostics only.
    Balance(AnalysisArgs),
    /// Effect estimation only.
    Effects(AnalysisArgs),
    /// Render overlap.csv as an SVG box-plot panel.
    PlotOverlap { input: PathBuf, output: PathBuf },
    /// Generate a synthetic corpus with a ground-truth sidecar.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Generator config (TOML). Alternative to --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in generator: "two-field-demo", "confounded", or "null".
    #[arg(long)]
    preset: Option<String>,
    /// Records to generate (presets only).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Treatments to generate (presets only).
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for corpus.csv and truth.toml.
    #[arg(long)]
    out: PathBuf,
}

fn apply_overrides(mut config: PipelineConfig, args: &AnalysisArgs) -> PipelineConfig {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if args.single_category_only {
        config.single_category_only = true;
    }
    if let Some(scheme) = &args.scheme {
        config.scheme = None;
        config.scheme_file = Some(scheme.clone());
    }
    if let Some(aggregate) = &args.aggregate {
        config.aggregate = Some(aggregate.clone());
    }
    config
}

fn run_analysis(args: &AnalysisArgs, scope: Scope) -> Result<(), Failure> {
    let config = PipelineConfig::load(&args.config).map_err(Failure::usage)?;
    let config = apply_overrides(config, args);
    config.validate().map_err(Failure::usage)?;
    pipeline::execute(&config, scope)
}

#[derive(Serialize)]
struct TruthFile<'a> {
    seed: u64,
    config_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<&'a str>,
    ace: Vec<Vec<f64>>,
    mc_sigma: Vec<Vec<f64>>,
    potential_means: &'a [f64],
    naive_means: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a GeneratorConfig>,
}

fn run_synth(args: &SynthArgs) -> Result<(), Failure> {
    let mut config = match (&args.config, args.preset.as_deref()) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            toml::from_str::<GeneratorConfig>(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        (None, Some("two-field-demo")) => {
            return write_synth_outputs(args, None);
        }
        (None, Some("confounded")) => GeneratorConfig::confounded(args.n, args.k, 0),
        (None, Some("null")) => GeneratorConfig::null(args.n, args.k, 0),
        (None, Some(other)) => {
            return Err(Failure::usage(format!("unknown preset {other:?}")));
        }
        (Some(_), Some(_)) => {
            return Err(Failure::usage("set either --config or --preset, not both"));
        }
        (None, None) => {
            return Err(Failure::usage("synth needs --config or --preset"));
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    write_synth_outputs(args, Some(config))
}

fn write_synth_outputs(args: &SynthArgs, config: Option<GeneratorConfig>) -> Result<(), Failure> {
    let (records, truth, config_echo) = match config {
        Some(config) => {
            let (records, truth) = generate(&config).map_err(|e| Failure {
                kind: if e.is_numerical() {
                    pipeline::FailureKind::Numerical
                } else {
                    pipeline::FailureKind::Data
                },
                stage: "synth",
                message: e.to_string(),
            })?;
            (records, truth, Some(config))
        }
        None => {
            let (records, truth) = two_field_demo();
            (records, truth, None)
        }
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::data("write", format!("{}: {e}", args.out.display())))?;

    let seed = config_echo.as_ref().map_or(0, |c| c.seed);
    let hash = {
        use sha2::{Digest, Sha256};
        let text = config_echo
            .as_ref()
            .map(|c| toml::to_string(c).unwrap_or_default())
            .unwrap_or_else(|| "two-field-demo".to_string());
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    };

    let schema = ipw_core::dataset::ColumnSchema::default();
    let mut corpus_bytes = format!("# config_hash={hash} seed={seed}\n").into_bytes();
    ipw_core::dataset::write_corpus_csv(&records, &schema, &mut corpus_bytes)
        .map_err(|e| Failure::data("write", e.to_string()))?;
    std::fs::write(args.out.join("corpus.csv"), &corpus_bytes)
        .map_err(|e| Failure::data("write", e.to_string()))?;
    let truth_file = TruthFile {
        seed,
        config_hash: &hash,
        preset: config_echo.is_none().then_some("two-field-demo"),
        ace: truth.ace_rows(),
        mc_sigma: truth.mc_sigma_rows(),
        potential_means: &truth.potential_means,
        naive_means: &truth.naive_means,
        config: config_echo.as_ref(),
    };
    let rendered = toml::to_string(&truth_file)
        .map_err(|e| Failure::data("write", e.to_string()))?;
    std::fs::write(args.out.join("truth.toml"), rendered)
        .map_err(|e| Failure::data("write", e.to_string()))?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(args) => run_analysis(args, Scope::Full),
        Command::Balance(args) => run_analysis(args, Scope::BalanceOnly),
        Command::Effects(args) => run_analysis(args, Scope::EffectsOnly),
        Command::PlotOverlap { input, output } => plot::plot_overlap(input, output),
        Command::Synth(args) => run_synth(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version through the same path
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error [{}]: {}", failure.stage, failure.message);
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
