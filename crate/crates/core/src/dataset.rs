//! Corpus ingestion: CSV loading, multi-category label resolution, category
//! scheme aggregation, and missing-value imputation with indicator columns.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// The covariates carried by every observation, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Covariate {
    #[serde(rename = "number_of_subject_categories")]
    SubjectCategories,
    #[serde(rename = "number_of_pages")]
    Pages,
    #[serde(rename = "number_of_coauthors")]
    Coauthors,
    #[serde(rename = "number_of_author_addresses")]
    AuthorAddresses,
    #[serde(rename = "number_of_joined_countries")]
    JoinedCountries,
    #[serde(rename = "usa")]
    Usa,
    #[serde(rename = "europe")]
    Europe,
    #[serde(rename = "asia")]
    Asia,
    #[serde(rename = "number_of_keywords")]
    Keywords,
    #[serde(rename = "number_of_title_words")]
    TitleWords,
    #[serde(rename = "number_of_cited_references")]
    CitedReferences,
    #[serde(rename = "number_of_linked_cited_references")]
    LinkedCitedReferences,
    #[serde(rename = "journal_impact_factor")]
    JournalImpactFactor,
}

pub const NUM_COVARIATES: usize = 13;

impl Covariate {
    pub const ALL: [Covariate; NUM_COVARIATES] = [
        Covariate::SubjectCategories,
        Covariate::Pages,
        Covariate::Coauthors,
        Covariate::AuthorAddresses,
        Covariate::JoinedCountries,
        Covariate::Usa,
        Covariate::Europe,
        Covariate::Asia,
        Covariate::Keywords,
        Covariate::TitleWords,
        Covariate::CitedReferences,
        Covariate::LinkedCitedReferences,
        Covariate::JournalImpactFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Covariate::SubjectCategories => "number_of_subject_categories",
            Covariate::Pages => "number_of_pages",
            Covariate::Coauthors => "number_of_coauthors",
            Covariate::AuthorAddresses => "number_of_author_addresses",
            Covariate::JoinedCountries => "number_of_joined_countries",
            Covariate::Usa => "usa",
            Covariate::Europe => "europe",
            Covariate::Asia => "asia",
            Covariate::Keywords => "number_of_keywords",
            Covariate::TitleWords => "number_of_title_words",
            Covariate::CitedReferences => "number_of_cited_references",
            Covariate::LinkedCitedReferences => "number_of_linked_cited_references",
            Covariate::JournalImpactFactor => "journal_impact_factor",
        }
    }

    pub fn from_name(name: &str) -> Option<Covariate> {
        Covariate::ALL.iter().copied().find(|c| c.name() == name)
    }

    pub fn index(self) -> usize {
        Covariate::ALL.iter().position(|c| *c == self).unwrap()
    }

    /// 0/1 region flags; these skip standardization and default to a
    /// logistic balance model.
    pub fn is_binary(self) -> bool {
        matches!(self, Covariate::Usa | Covariate::Europe | Covariate::Asia)
    }

    /// Integer-valued covariates (everything except the impact factor).
    pub fn is_count(self) -> bool {
        !matches!(self, Covariate::JournalImpactFactor)
    }

    /// Lower bound a present value must satisfy.
    fn min_value(self) -> f64 {
        match self {
            Covariate::Coauthors | Covariate::JoinedCountries | Covariate::TitleWords => 1.0,
            _ => 0.0,
        }
    }
}

/// One observation: an outcome count, a non-empty set of category codes, and
/// thirteen covariates, any of which may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperRecord {
    pub id: String,
    pub year: i32,
    pub citations: u64,
    /// Distinct category codes in input order.
    pub categories: Vec<String>,
    covariates: [Option<f64>; NUM_COVARIATES],
}

impl PaperRecord {
    pub fn new(
        id: impl Into<String>,
        year: i32,
        citations: u64,
        categories: Vec<String>,
        covariates: [Option<f64>; NUM_COVARIATES],
    ) -> Result<Self> {
        let record = PaperRecord {
            id: id.into(),
            year,
            citations,
            categories,
            covariates,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn covariate(&self, c: Covariate) -> Option<f64> {
        self.covariates[c.index()]
    }

    fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::invalid(format!(
                "record {:?} has no categories",
                self.id
            )));
        }
        let distinct: BTreeSet<&str> = self.categories.iter().map(|s| s.as_str()).collect();
        if distinct.len() != self.categories.len() {
            return Err(Error::invalid(format!(
                "record {:?} lists a category twice",
                self.id
            )));
        }
        for c in Covariate::ALL {
            if let Some(v) = self.covariate(c) {
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "record {:?}: {} is not finite",
                        self.id,
                        c.name()
                    )));
                }
                if c.is_binary() && v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!(
                        "record {:?}: {} must be 0 or 1, got {}",
                        self.id,
                        c.name(),
                        v
                    )));
                }
                if c.is_count() && v.fract() != 0.0 {
                    return Err(Error::invalid(format!(
                        "record {:?}: {} must be an integer, got {}",
                        self.id,
                        c.name(),
                        v
                    )));
                }
                if v < c.min_value() {
                    return Err(Error::invalid(format!(
                        "record {:?}: {} must be >= {}, got {}",
                        self.id,
                        c.name(),
                        c.min_value(),
                        v
                    )));
                }
            }
        }
        if let (Some(linked), Some(cited)) = (
            self.covariate(Covariate::LinkedCitedReferences),
            self.covariate(Covariate::CitedReferences),
        ) {
            if linked > cited {
                return Err(Error::invalid(format!(
                    "record {:?}: linked cited references ({}) exceed cited references ({})",
                    self.id, linked, cited
                )));
            }
        }
        Ok(())
    }
}

/// Maps logical columns to CSV header names. The defaults use the canonical
/// covariate names; trim `covariates` to load files that carry fewer columns.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    pub id: String,
    pub year: Option<String>,
    pub citations: String,
    pub categories: String,
    pub covariates: Vec<(Covariate, String)>,
    /// Separator between category codes inside the categories cell.
    pub delimiter: char,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            id: "id".to_string(),
            year: Some("year".to_string()),
            citations: "citations".to_string(),
            categories: "categories".to_string(),
            covariates: Covariate::ALL
                .iter()
                .map(|c| (*c, c.name().to_string()))
                .collect(),
            delimiter: ';',
        }
    }
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::invalid(format!("column {name:?} not found in input header")))
}

/// Reads a UTF-8 CSV with header into records. Empty covariate cells become
/// absent values; the categories cell is split on the schema delimiter.
pub fn load_corpus(path: &Path, schema: &ColumnSchema) -> Result<Vec<PaperRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let id_ix = header_index(&headers, &schema.id)?;
    let year_ix = match &schema.year {
        Some(name) => Some(header_index(&headers, name)?),
        None => None,
    };
    let citations_ix = header_index(&headers, &schema.citations)?;
    let categories_ix = header_index(&headers, &schema.categories)?;
    let covariate_ix: Vec<(Covariate, usize)> = schema
        .covariates
        .iter()
        .map(|(c, name)| Ok((*c, header_index(&headers, name)?)))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parse_err = |msg: String| Error::Parse { line, msg };

        let id = row
            .get(id_ix)
            .ok_or_else(|| parse_err("missing id cell".into()))?
            .trim()
            .to_string();
        if id.is_empty() {
            return Err(parse_err("empty id".into()));
        }
        let year = match year_ix {
            Some(ix) => {
                let cell = row.get(ix).unwrap_or("").trim();
                if cell.is_empty() {
                    0
                } else {
                    cell.parse::<i32>()
                        .map_err(|_| parse_err(format!("bad year {cell:?}")))?
                }
            }
            None => 0,
        };
        let citations_cell = row.get(citations_ix).unwrap_or("").trim();
        let citations_int = citations_cell
            .parse::<i64>()
            .map_err(|_| parse_err(format!("bad citation count {citations_cell:?}")))?;
        if citations_int < 0 {
            return Err(parse_err(format!(
                "negative citation count {citations_int}"
            )));
        }
        let mut categories = Vec::new();
        for code in row
            .get(categories_ix)
            .unwrap_or("")
            .split(schema.delimiter)
        {
            let code = code.trim();
            if !code.is_empty() && !categories.iter().any(|c| c == code) {
                categories.push(code.to_string());
            }
        }

        let mut covariates = [None; NUM_COVARIATES];
        for (c, ix) in &covariate_ix {
            let cell = row.get(*ix).unwrap_or("").trim();
            if !cell.is_empty() {
                let v = cell
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad value {cell:?} for {}", c.name())))?;
                covariates[c.index()] = Some(v);
            }
        }

        let record =
            PaperRecord::new(id, year, citations_int as u64, categories, covariates)
                .map_err(|e| parse_err(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn format_covariate(c: Covariate, v: f64) -> String {
    if c.is_count() {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Writes records in the same CSV layout `load_corpus` reads. Counts are
/// written as integers and absent values as empty cells, so a write/load
/// round trip is exact.
pub fn write_corpus_csv<W: Write>(records: &[PaperRecord], schema: &ColumnSchema, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec![schema.id.clone()];
    if let Some(year) = &schema.year {
        header.push(year.clone());
    }
    header.push(schema.citations.clone());
    header.push(schema.categories.clone());
    for (_, name) in &schema.covariates {
        header.push(name.clone());
    }
    writer.write_record(&header)?;

    let delim = schema.delimiter.to_string();
    for r in records {
        let mut row = vec![r.id.clone()];
        if schema.year.is_some() {
            row.push(r.year.to_string());
        }
        row.push(r.citations.to_string());
        row.push(r.categories.join(&delim));
        for (c, _) in &schema.covariates {
            row.push(match r.covariate(*c) {
                Some(v) => format_covariate(*c, v),
                None => String::new(),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Records with a single treatment label each, drawn from `scheme`.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub records: Vec<PaperRecord>,
    /// Treatment index into `scheme`, one per record.
    pub labels: Vec<usize>,
    pub scheme: Vec<String>,
    pub seed: u64,
    /// Records discarded because none of their categories was in the scheme.
    pub dropped: usize,
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn k(&self) -> usize {
        self.scheme.len()
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.scheme.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.citations as f64).collect()
    }
}

/// Assigns each record exactly one label from `scheme`. A record eligible for
/// m scheme categories receives each with probability 1/m, drawn from a
/// per-record ChaCha8 stream keyed by (seed, record index); see [`crate::rng`].
/// Records with no eligible category are dropped and counted.
pub fn resolve_multilabel(
    records: Vec<PaperRecord>,
    scheme: &[String],
    seed: u64,
) -> Result<LabeledCorpus> {
    if scheme.is_empty() {
        return Err(Error::invalid("scheme must list at least one category"));
    }
    let distinct: BTreeSet<&str> = scheme.iter().map(|s| s.as_str()).collect();
    if distinct.len() != scheme.len() {
        return Err(Error::invalid("scheme lists a category twice"));
    }

    let mut kept = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut dropped = 0usize;
    for (index, record) in records.into_iter().enumerate() {
        let eligible: Vec<usize> = scheme
            .iter()
            .enumerate()
            .filter(|(_, code)| record.categories.iter().any(|c| c == *code))
            .map(|(t, _)| t)
            .collect();
        match eligible.len() {
            0 => dropped += 1,
            1 => {
                labels.push(eligible[0]);
                kept.push(record);
            }
            m => {
                let mut rng = stream_rng(seed, index as u64);
                labels.push(eligible[rng.random_range(0..m)]);
                kept.push(record);
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::invalid(
            "no record has a category in the active scheme",
        ));
    }
    Ok(LabeledCorpus {
        records: kept,
        labels,
        scheme: scheme.to_vec(),
        seed,
        dropped,
    })
}

/// Ordered category → supercategory table.
#[derive(Debug, Clone)]
pub struct CategoryMapping {
    pairs: Vec<(String, String)>,
}

impl CategoryMapping {
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (from, _) in &pairs {
            if !seen.insert(from.clone()) {
                return Err(Error::invalid(format!(
                    "category {from:?} mapped twice"
                )));
            }
        }
        Ok(CategoryMapping { pairs })
    }

    /// Reads a two-column CSV (category, supercategory) preserving row order.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut pairs = Vec::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() < 2 {
                return Err(Error::Parse {
                    line,
                    msg: "mapping rows need two columns".into(),
                });
            }
            pairs.push((row[0].trim().to_string(), row[1].trim().to_string()));
        }
        CategoryMapping::from_pairs(pairs)
    }

    pub fn get(&self, category: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(from, _)| from == category)
            .map(|(_, to)| to.as_str())
    }

    /// Distinct supercategories in first-appearance order.
    pub fn supercategories(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (_, to) in &self.pairs {
            if !out.iter().any(|s| s == to) {
                out.push(to.clone());
            }
        }
        out
    }
}

/// Replaces each label by its supercategory and the scheme by the distinct
/// supercategories in mapping order. Every labeled category must be mapped.
pub fn aggregate_to_scheme(
    corpus: &LabeledCorpus,
    mapping: &CategoryMapping,
) -> Result<LabeledCorpus> {
    let new_scheme = mapping.supercategories();
    if new_scheme.is_empty() {
        return Err(Error::invalid("mapping is empty"));
    }
    let mut labels = Vec::with_capacity(corpus.labels.len());
    for &label in &corpus.labels {
        let category = &corpus.scheme[label];
        let target = mapping
            .get(category)
            .ok_or_else(|| Error::invalid(format!("category {category:?} is not mapped")))?;
        let new_label = new_scheme.iter().position(|s| s == target).unwrap();
        labels.push(new_label);
    }
    Ok(LabeledCorpus {
        records: corpus.records.clone(),
        labels,
        scheme: new_scheme,
        seed: corpus.seed,
        dropped: corpus.dropped,
    })
}

/// A labeled corpus with every covariate completed and one 0/1 indicator
/// column per covariate that had at least one absent value.
#[derive(Debug, Clone)]
pub struct ImputedCorpus {
    pub corpus: LabeledCorpus,
    /// N×13 matrix of completed covariate values in canonical order.
    pub completed: Array2<f64>,
    /// (covariate, 0/1 column) pairs for covariates with any absent value.
    pub indicators: Vec<(Covariate, Vec<f64>)>,
}

impl ImputedCorpus {
    pub fn n(&self) -> usize {
        self.corpus.len()
    }

    pub fn covariate_values(&self, c: Covariate) -> Vec<f64> {
        self.completed.column(c.index()).to_vec()
    }
}

/// Completes absent values with 0 and records the missingness pattern:
/// indicators are created only for covariates with at least one absent value,
/// and both the indicators and the completed columns feed the design matrix.
pub fn impute_missing(corpus: LabeledCorpus) -> ImputedCorpus {
    let n = corpus.len();
    let mut completed = Array2::zeros((n, NUM_COVARIATES));
    let mut indicators = Vec::new();
    for c in Covariate::ALL {
        let mut any_missing = false;
        let mut indicator = vec![0.0; n];
        for (i, record) in corpus.records.iter().enumerate() {
            match record.covariate(c) {
                Some(v) => completed[[i, c.index()]] = v,
                None => {
                    any_missing = true;
                    indicator[i] = 1.0;
                    // completed value stays 0
                }
            }
        }
        if any_missing {
            indicators.push((c, indicator));
        }
    }
    ImputedCorpus {
        corpus,
        completed,
        indicators,
    }
}
