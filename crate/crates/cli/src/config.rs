//! Pipeline configuration: a nested TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ipw_core::balance::default_family_map;
use ipw_core::dataset::{ColumnSchema, Covariate};
use ipw_core::design::InteractionPolicy;
use ipw_core::glm::{Family, GlmOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Corpus CSV.
    pub input: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Restrict the analysis to records with exactly one category.
    #[serde(default)]
    pub single_category_only: bool,
    /// Ordered category codes, inline…
    #[serde(default)]
    pub scheme: Option<Vec<String>>,
    /// …or one code per line in a file. Exactly one of the two.
    #[serde(default)]
    pub scheme_file: Option<PathBuf>,
    /// Optional category → supercategory CSV applied after labeling.
    #[serde(default)]
    pub aggregate: Option<PathBuf>,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub balance: BalanceConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemaConfig {
    pub id: String,
    pub year: String,
    pub citations: String,
    pub categories: String,
    pub delimiter: String,
    /// Covariate column-name overrides keyed by canonical covariate name.
    pub columns: BTreeMap<String, String>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            id: "id".into(),
            year: "year".into(),
            citations: "citations".into(),
            categories: "categories".into(),
            delimiter: ";".into(),
            columns: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionsKind {
    AllPairs,
    None,
    Pairs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub interactions: InteractionsKind,
    /// Explicit pairs when `interactions = "pairs"`.
    pub pairs: Vec<(String, String)>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
            clip_lo: ipw_core::propensity::DEFAULT_CLIP.0,
            clip_hi: ipw_core::propensity::DEFAULT_CLIP.1,
            interactions: InteractionsKind::AllPairs,
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceConfig {
    /// Family overrides keyed by canonical covariate name:
    /// "gaussian" | "logit" | "negbin".
    pub families: BTreeMap<String, String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema.delimiter.chars().count() != 1 {
            bail!("schema.delimiter must be a single character");
        }
        if self.scheme.is_some() && self.scheme_file.is_some() {
            bail!("set either scheme or scheme_file, not both");
        }
        if self.scheme.is_none() && self.scheme_file.is_none() {
            bail!("a scheme (inline list or scheme_file) is required");
        }
        if !(0.0 < self.model.clip_lo && self.model.clip_lo < self.model.clip_hi
            && self.model.clip_hi < 1.0)
        {
            bail!("clip bounds must satisfy 0 < lo < hi < 1");
        }
        if self.model.interactions == InteractionsKind::Pairs && self.model.pairs.is_empty() {
            bail!("interactions = \"pairs\" needs a non-empty pairs list");
        }
        for name in self.balance.families.keys() {
            if Covariate::from_name(name).is_none() {
                bail!("balance.families: unknown covariate {name:?}");
            }
        }
        for name in self.schema.columns.keys() {
            if Covariate::from_name(name).is_none() {
                bail!("schema.columns: unknown covariate {name:?}");
            }
        }
        Ok(())
    }

    pub fn column_schema(&self) -> ColumnSchema {
        let mut schema = ColumnSchema {
            id: self.schema.id.clone(),
            year: Some(self.schema.year.clone()),
            citations: self.schema.citations.clone(),
            categories: self.schema.categories.clone(),
            delimiter: self.schema.delimiter.chars().next().unwrap_or(';'),
            ..ColumnSchema::default()
        };
        for (covariate, column) in &mut schema.covariates {
            if let Some(over) = self.schema.columns.get(covariate.name()) {
                *column = over.clone();
            }
        }
        schema
    }

    pub fn resolve_scheme(&self) -> Result<Vec<String>> {
        if let Some(scheme) = &self.scheme {
            return Ok(scheme.clone());
        }
        let path = self.scheme_file.as_ref().expect("validated");
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scheme file {}", path.display()))?;
        let scheme: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if scheme.is_empty() {
            bail!("scheme file {} lists no categories", path.display());
        }
        Ok(scheme)
    }

    pub fn interaction_policy(&self) -> InteractionPolicy {
        match self.model.interactions {
            InteractionsKind::AllPairs => InteractionPolicy::AllMainPairs,
            InteractionsKind::None => InteractionPolicy::None,
            InteractionsKind::Pairs => InteractionPolicy::Pairs(self.model.pairs.clone()),
        }
    }

    pub fn glm_options(&self) -> GlmOptions {
        GlmOptions {
            ridge: self.model.ridge,
            tol: self.model.tol,
            max_iter: self.model.max_iter,
            fixed_dispersion: None,
        }
    }

    pub fn family_map(&self) -> Result<Vec<(Covariate, Family)>> {
        let mut map = default_family_map();
        for (name, family) in &self.balance.families {
            let covariate = Covariate::from_name(name).expect("validated");
            let family = match family.as_str() {
                "gaussian" => Family::Gaussian,
                "logit" => Family::Logit,
                "negbin" => Family::NegBin,
                other => bail!("unknown family {other:?} for {name}"),
            };
            map.iter_mut()
                .find(|(c, _)| *c == covariate)
                .expect("all covariates present")
                .1 = family;
        }
        Ok(map)
    }

    /// Hash of the analytic configuration: everything except the output
    /// directory, so reruns into different directories compare equal.
    pub fn analytic_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let text = toml::to_string(&canonical).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: PipelineConfig = toml::from_str(
            r#"
input = "corpus.csv"
scheme = ["F1", "F2"]
"#,
        )
        .unwrap();
        config.validate().unwrap();
        assert_eq!(config.model.ridge, 1e-6);
        assert_eq!(config.model.clip_lo, 0.001);
        assert_eq!(config.model.interactions, InteractionsKind::AllPairs);
        assert_eq!(config.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn scheme_is_required() {
        let config: PipelineConfig = toml::from_str("input = \"x.csv\"").unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn family_overrides_apply() {
        let config: PipelineConfig = toml::from_str(
            r#"
input = "corpus.csv"
scheme = ["A", "B"]
[balance.families]
number_of_pages = "gaussian"
"#,
        )
        .unwrap();
        let map = config.family_map().unwrap();
        let pages = map
            .iter()
            .find(|(c, _)| *c == Covariate::Pages)
            .unwrap()
            .1;
        assert_eq!(pages, Family::Gaussian);
    }

    #[test]
    fn unknown_covariate_in_overrides_is_rejected() {
        let config: PipelineConfig = toml::from_str(
            r#"
input = "corpus.csv"
scheme = ["A", "B"]
[balance.families]
page_count = "gaussian"
"#,
        )
        .unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn hash_ignores_out_dir_but_not_seed() {
        let base: PipelineConfig = toml::from_str(
            "input = \"c.csv\"\nscheme = [\"A\", \"B\"]\nseed = 1\n",
        )
        .unwrap();
        let mut other_dir = base.clone();
        other_dir.out_dir = PathBuf::from("elsewhere");
        assert_eq!(base.analytic_hash(), other_dir.analytic_hash());
        let mut other_seed = base.clone();
        other_seed.seed = 2;
        assert_ne!(base.analytic_hash(), other_seed.analytic_hash());
    }

    #[test]
    fn column_overrides_reach_the_schema() {
        let config: PipelineConfig = toml::from_str(
            r#"
input = "corpus.csv"
scheme = ["A", "B"]
[schema.columns]
journal_impact_factor = "jif"
"#,
        )
        .unwrap();
        let schema = config.column_schema();
        let jif = schema
            .covariates
            .iter()
            .find(|(c, _)| *c == Covariate::JournalImpactFactor)
            .unwrap();
        assert_eq!(jif.1, "jif");
    }
}
