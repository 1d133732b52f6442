//! Design matrix construction: covariate standardization, missingness
//! indicators as main effects, and two-way interaction expansion.
//!
//! Standardization happens before interactions are formed; that keeps the
//! Newton systems well conditioned. Group means and effects downstream are
//! always reported on the original covariate scale, so the scaling is purely
//! internal.

use ndarray::{Array2, ArrayView1};

use crate::dataset::{Covariate, ImputedCorpus};
use crate::error::{Error, Result};
use crate::stats;

/// Where a design column came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRole {
    Intercept,
    Main,
    Indicator,
    /// Elementwise product of the two named parent columns.
    Interaction(String, String),
}

/// How one covariate column was treated during standardization.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnScaling {
    /// z-scored with the stored mean and sample standard deviation.
    Scaled { mean: f64, sd: f64 },
    /// 0/1 column passed through unscaled.
    PassThrough,
    /// Constant column; dropped from the design and flagged here.
    Constant { value: f64 },
}

/// Fitted standardization: per-covariate scaling decisions plus the list of
/// indicator columns present in the corpus it was fitted on.
#[derive(Debug, Clone)]
pub struct Standardization {
    pub covariates: Vec<(Covariate, ColumnScaling)>,
    pub indicator_names: Vec<String>,
}

impl Standardization {
    pub fn constant_columns(&self) -> Vec<Covariate> {
        self.covariates
            .iter()
            .filter(|(_, s)| matches!(s, ColumnScaling::Constant { .. }))
            .map(|(c, _)| *c)
            .collect()
    }

    /// Applies the stored scaling to a corpus. Reapplying to the fit corpus
    /// reproduces the fitted matrix bit for bit.
    pub fn apply(&self, corpus: &ImputedCorpus) -> Result<MainEffects> {
        let n = corpus.n();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        let mut names = Vec::new();
        let mut roles = Vec::new();
        for (c, scaling) in &self.covariates {
            let raw = corpus.completed.column(c.index());
            match scaling {
                ColumnScaling::Scaled { mean, sd } => {
                    columns.push(raw.iter().map(|v| (v - mean) / sd).collect());
                    names.push(c.name().to_string());
                    roles.push(ColumnRole::Main);
                }
                ColumnScaling::PassThrough => {
                    columns.push(raw.to_vec());
                    names.push(c.name().to_string());
                    roles.push(ColumnRole::Main);
                }
                ColumnScaling::Constant { .. } => {}
            }
        }
        let mut indicator_ix = 0usize;
        for (c, flags) in &corpus.indicators {
            let name = format!("{}_missing", c.name());
            if indicator_ix >= self.indicator_names.len()
                || self.indicator_names[indicator_ix] != name
            {
                return Err(Error::invalid(format!(
                    "corpus indicator {name:?} does not match the fitted standardization"
                )));
            }
            indicator_ix += 1;
            // an all-missing covariate yields a constant indicator; drop it
            // like any other constant column
            if flags.iter().all(|&v| v == flags[0]) {
                continue;
            }
            columns.push(flags.clone());
            names.push(name);
            roles.push(ColumnRole::Indicator);
        }
        if indicator_ix != self.indicator_names.len() {
            return Err(Error::invalid(
                "corpus is missing indicator columns the standardization was fitted with",
            ));
        }
        let p = columns.len();
        let mut values = Array2::zeros((n, p));
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[[i, j]] = *v;
            }
        }
        Ok(MainEffects {
            values,
            names,
            roles,
        })
    }
}

/// Main-effect columns (standardized covariates plus missingness indicators)
/// before intercept and interactions are added.
#[derive(Debug, Clone)]
pub struct MainEffects {
    pub values: Array2<f64>,
    pub names: Vec<String>,
    pub roles: Vec<ColumnRole>,
}

/// Fits the standardization on `corpus` and returns the main-effect matrix.
/// Continuous covariates are z-scored (sample sd, n−1 divisor); 0/1 region
/// flags and missingness indicators pass through; constant columns are
/// dropped and flagged.
pub fn standardize(corpus: &ImputedCorpus) -> Result<(Standardization, MainEffects)> {
    let n = corpus.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "standardization needs at least 2 records, got {n}"
        )));
    }
    let mut covariates = Vec::with_capacity(Covariate::ALL.len());
    for c in Covariate::ALL {
        let col = corpus.completed.column(c.index()).to_vec();
        let constant = col.iter().all(|&v| v == col[0]);
        let scaling = if constant {
            ColumnScaling::Constant { value: col[0] }
        } else if c.is_binary() {
            ColumnScaling::PassThrough
        } else {
            let mean = stats::mean(&col);
            let sd = stats::sample_sd(&col);
            ColumnScaling::Scaled { mean, sd }
        };
        covariates.push((c, scaling));
    }
    let standardization = Standardization {
        covariates,
        indicator_names: corpus
            .indicators
            .iter()
            .map(|(c, _)| format!("{}_missing", c.name()))
            .collect(),
    };
    let mains = standardization.apply(corpus)?;
    Ok((standardization, mains))
}

/// Which column pairs to interact.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionPolicy {
    /// All unordered pairs among main-effect columns; indicators excluded.
    AllMainPairs,
    /// No interaction columns.
    None,
    /// Explicit pairs by column name.
    Pairs(Vec<(String, String)>),
}

/// Dense design matrix with named, role-tagged columns. The first column is
/// always the all-ones intercept.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: Array2<f64>,
    pub names: Vec<String>,
    pub roles: Vec<ColumnRole>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Builds a design from pre-assembled columns; the first must be the
    /// intercept and names must be unique.
    pub fn from_parts(
        values: Array2<f64>,
        names: Vec<String>,
        roles: Vec<ColumnRole>,
    ) -> Result<Self> {
        if names.len() != values.ncols() || roles.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} columns but {} names / {} roles",
                values.ncols(),
                names.len(),
                roles.len()
            )));
        }
        if roles.first() != Some(&ColumnRole::Intercept)
            || values.column(0).iter().any(|&v| v != 1.0)
        {
            return Err(Error::invalid(
                "the first design column must be an all-ones intercept",
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(Error::invalid(format!("duplicate design column {name:?}")));
            }
        }
        Ok(DesignMatrix {
            values,
            names,
            roles,
        })
    }
}

/// Prepends the intercept and appends pairwise product columns per `policy`.
pub fn expand_interactions(
    mains: &MainEffects,
    policy: &InteractionPolicy,
) -> Result<DesignMatrix> {
    let n = mains.values.nrows();
    let m = mains.values.ncols();
    if m == 0 {
        return Err(Error::invalid("no main-effect columns to expand"));
    }

    let pairs: Vec<(usize, usize)> = match policy {
        InteractionPolicy::None => Vec::new(),
        InteractionPolicy::AllMainPairs => {
            let main_ix: Vec<usize> = (0..m)
                .filter(|&j| mains.roles[j] == ColumnRole::Main)
                .collect();
            let mut pairs = Vec::new();
            for (a, &i) in main_ix.iter().enumerate() {
                for &j in &main_ix[a + 1..] {
                    pairs.push((i, j));
                }
            }
            pairs
        }
        InteractionPolicy::Pairs(named) => {
            let mut pairs = Vec::new();
            let mut seen = std::collections::BTreeSet::new();
            for (a, b) in named {
                let i = mains
                    .names
                    .iter()
                    .position(|n| n == a)
                    .ok_or_else(|| Error::invalid(format!("unknown column {a:?} in policy")))?;
                let j = mains
                    .names
                    .iter()
                    .position(|n| n == b)
                    .ok_or_else(|| Error::invalid(format!("unknown column {b:?} in policy")))?;
                let key = (i.min(j), i.max(j));
                if !seen.insert(key) {
                    return Err(Error::invalid(format!(
                        "pair ({a:?}, {b:?}) listed twice in policy"
                    )));
                }
                pairs.push((i, j));
            }
            pairs
        }
    };

    let p = 1 + m + pairs.len();
    let mut values = Array2::zeros((n, p));
    let mut names = Vec::with_capacity(p);
    let mut roles = Vec::with_capacity(p);

    values.column_mut(0).fill(1.0);
    names.push("intercept".to_string());
    roles.push(ColumnRole::Intercept);

    for j in 0..m {
        values.column_mut(1 + j).assign(&mains.values.column(j));
        names.push(mains.names[j].clone());
        roles.push(mains.roles[j].clone());
    }

    for (offset, &(i, j)) in pairs.iter().enumerate() {
        let col = 1 + m + offset;
        for row in 0..n {
            values[[row, col]] = mains.values[[row, i]] * mains.values[[row, j]];
        }
        names.push(format!("{}:{}", mains.names[i], mains.names[j]));
        roles.push(ColumnRole::Interaction(
            mains.names[i].clone(),
            mains.names[j].clone(),
        ));
    }

    DesignMatrix::from_parts(values, names, roles)
}
