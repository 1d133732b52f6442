//! The batch analysis: ingest, label, impute, design, score, diagnose,
//! estimate, and write the report artifacts.
//!
//! Every artifact embeds the analytic config hash and seed, carries no
//! timestamps, and is rendered with fixed formatting, so identical runs
//! produce byte-identical files.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use ipw_core::dataset::{
    aggregate_to_scheme, impute_missing, load_corpus, resolve_multilabel, CategoryMapping,
};
use ipw_core::design::{expand_interactions, standardize};
use ipw_core::estimator::{ace_matrix, ipw_estimates, ipw_weights, naive_ace_matrix};
use ipw_core::propensity::{clip_scores, estimate_propensities, overlap_summary};

use crate::config::PipelineConfig;
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub stage: &'static str,
    pub message: String,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Usage => 1,
            FailureKind::Data => 2,
            FailureKind::Numerical => 3,
        }
    }

    pub fn usage(message: impl fmt::Display) -> Failure {
        Failure {
            kind: FailureKind::Usage,
            stage: "config",
            message: message.to_string(),
        }
    }

    pub fn data(stage: &'static str, message: impl fmt::Display) -> Failure {
        Failure {
            kind: FailureKind::Data,
            stage,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for Failure {}

fn at(stage: &'static str) -> impl Fn(ipw_core::Error) -> Failure {
    move |error| Failure {
        kind: if error.is_numerical() {
            FailureKind::Numerical
        } else {
            FailureKind::Data
        },
        stage,
        message: error.to_string(),
    }
}

/// Which artifacts a subcommand produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Full,
    BalanceOnly,
    EffectsOnly,
}

#[derive(Default, Serialize)]
struct Progress {
    n_loaded: Option<usize>,
    n_filtered_multi_category: Option<usize>,
    n_dropped_outside_scheme: Option<usize>,
    n_analyzed: Option<usize>,
    k: Option<usize>,
    design_columns: Option<usize>,
    n_clipped: Option<usize>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'a str>,
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
    rng: &'a str,
    artifacts: &'a [String],
    counts: &'a Progress,
    config: &'a PipelineConfig,
}

struct Writer<'a> {
    out_dir: &'a Path,
    hash: String,
    seed: u64,
    written: Vec<String>,
}

impl Writer<'_> {
    fn stamp(&self, name: &str, body: &str) -> String {
        if name.ends_with(".md") {
            format!(
                "<!-- config_hash={} seed={} -->\n{}",
                self.hash, self.seed, body
            )
        } else {
            format!("# config_hash={} seed={}\n{}", self.hash, self.seed, body)
        }
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, self.stamp(name, body))
            .map_err(|e| Failure::data("write", format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

pub fn execute(config: &PipelineConfig, scope: Scope) -> Result<(), Failure> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Failure::data("write", format!("{}: {e}", config.out_dir.display())))?;
    let mut writer = Writer {
        out_dir: &config.out_dir,
        hash: config.analytic_hash(),
        seed: config.seed,
        written: Vec::new(),
    };
    let mut progress = Progress::default();

    let result = run_stages(config, scope, &mut writer, &mut progress);
    let failed_stage = result.as_ref().err().map(|f| f.stage);
    let metadata = RunMetadata {
        status: if result.is_ok() { "ok" } else { "failed" },
        failed_stage,
        config_hash: &writer.hash,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        rng: ipw_core::rng::ALGORITHM,
        artifacts: &writer.written,
        counts: &progress,
        config,
    };
    let rendered = toml::to_string(&metadata)
        .map_err(|e| Failure::data("metadata", e.to_string()))?;
    std::fs::write(config.out_dir.join("run_metadata.toml"), rendered)
        .map_err(|e| Failure::data("metadata", e.to_string()))?;
    result
}

fn run_stages(
    config: &PipelineConfig,
    scope: Scope,
    writer: &mut Writer<'_>,
    progress: &mut Progress,
) -> Result<(), Failure> {
    let schema = config.column_schema();
    let scheme = config.resolve_scheme().map_err(Failure::usage)?;
    let opts = config.glm_options();

    let mut records = load_corpus(&config.input, &schema).map_err(at("load"))?;
    progress.n_loaded = Some(records.len());

    if config.single_category_only {
        let before = records.len();
        records.retain(|r| r.categories.len() == 1);
        progress.n_filtered_multi_category = Some(before - records.len());
        eprintln!(
            "filtered {} multi-category records, {} remain",
            before - records.len(),
            records.len()
        );
    }

    let mut corpus = resolve_multilabel(records, &scheme, config.seed).map_err(at("label"))?;
    progress.n_dropped_outside_scheme = Some(corpus.dropped);
    if corpus.dropped > 0 {
        eprintln!(
            "dropped {} records with no category in the scheme",
            corpus.dropped
        );
    }

    if let Some(mapping_path) = &config.aggregate {
        let mapping = CategoryMapping::from_csv_path(mapping_path).map_err(at("aggregate"))?;
        corpus = aggregate_to_scheme(&corpus, &mapping).map_err(at("aggregate"))?;
    }
    progress.n_analyzed = Some(corpus.len());
    progress.k = Some(corpus.k());

    let outcomes = corpus.outcomes();
    let labels = corpus.labels.clone();
    let k = corpus.k();
    let imputed = impute_missing(corpus);

    let (_, mains) = standardize(&imputed).map_err(at("design"))?;
    let design =
        expand_interactions(&mains, &config.interaction_policy()).map_err(at("design"))?;
    progress.design_columns = Some(design.p());

    let scores = estimate_propensities(&design, &labels, k, &opts).map_err(at("propensity"))?;
    let scores =
        clip_scores(scores, config.model.clip_lo, config.model.clip_hi).map_err(at("propensity"))?;
    progress.n_clipped = Some(scores.n_clipped());

    if scope == Scope::Full {
        let overlap =
            overlap_summary(&scores, &labels, &imputed.corpus.scheme).map_err(at("overlap"))?;
        writer.write("overlap.csv", &overlap.to_csv())?;
    }

    if matches!(scope, Scope::Full | Scope::BalanceOnly) {
        let family_map = config.family_map().map_err(Failure::usage)?;
        let balance = ipw_core::balance::balance_report(&imputed, &scores, &family_map, &opts)
            .map_err(at("balance"))?;
        writer.write("balance.csv", &balance.to_csv())?;
        writer.write("balance.md", &balance.to_markdown())?;
    }

    if matches!(scope, Scope::Full | Scope::EffectsOnly) {
        let weights = ipw_weights(&scores, &labels).map_err(at("effects"))?;
        let estimates = ipw_estimates(&outcomes, &weights, &labels, k).map_err(at("effects"))?;
        let ipw = ace_matrix(&estimates);
        let naive = naive_ace_matrix(&estimates);
        writer.write(
            "effects.csv",
            &report::effects_csv(&estimates, &imputed.corpus.scheme),
        )?;
        writer.write(
            "effects.md",
            &report::effects_markdown(&estimates, &imputed.corpus.scheme, &naive, &ipw),
        )?;
        writer.write("ace.csv", &report::ace_csv(&naive, &ipw, &imputed.corpus.scheme))?;
        if scope == Scope::Full {
            writer.write(
                "propensities.csv",
                &report::propensities_csv(&imputed.corpus, &scores, &weights),
            )?;
        }
    }
    Ok(())
}
