//! Covariate balance diagnostics: per-covariate regressions on treatment
//! dummies with and without propensity-score adjustment, joint F statistics,
//! and adjusted group means via marginal standardization.
//!
//! The adjustment includes K−1 of the K score columns — the reference
//! category's column is dropped because the scores sum to ~1 and would
//! otherwise be collinear with the intercept. Adjusted means average the
//! model prediction per category with the score columns held at their
//! observed values, so they come out on the original covariate scale.

use ndarray::Array2;

use crate::dataset::{Covariate, ImputedCorpus};
use crate::design::{ColumnRole, DesignMatrix};
use crate::error::{Error, Result};
use crate::glm::{fit_glm, joint_test, Family, GlmOptions, JointTest};
use crate::propensity::PropensityMatrix;
use crate::stats::KahanSum;

/// Balance result for one covariate: F with and without adjustment plus
/// group means on the original scale.
#[derive(Debug, Clone)]
pub struct BalanceRow {
    pub covariate: String,
    pub family: Family,
    pub f_before: f64,
    pub f_after: f64,
    /// 100·(1 − F_after/F_before); 0 when F_before is 0.
    pub reduction_pct: f64,
    pub unadjusted_means: Vec<f64>,
    pub adjusted_means: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    pub scheme: Vec<String>,
    pub n: usize,
    /// Column count of the adjusted model.
    pub p: usize,
}

/// Family used per covariate: counts get a negative binomial, 0/1 flags a
/// logistic, and the two roughly symmetric covariates a Gaussian.
pub fn default_family_map() -> Vec<(Covariate, Family)> {
    Covariate::ALL
        .iter()
        .map(|&c| {
            let family = if c.is_binary() {
                Family::Logit
            } else if matches!(
                c,
                Covariate::SubjectCategories | Covariate::JournalImpactFactor
            ) {
                Family::Gaussian
            } else {
                Family::NegBin
            };
            (c, family)
        })
        .collect()
}

fn dummy_names(k: usize) -> Vec<String> {
    (1..k).map(|t| format!("treat_{t}")).collect()
}

fn balance_design(
    labels: &[usize],
    k: usize,
    scores: Option<&PropensityMatrix>,
) -> Result<DesignMatrix> {
    let n = labels.len();
    let extra = if scores.is_some() { k - 1 } else { 0 };
    let p = 1 + (k - 1) + extra;
    let mut values = Array2::zeros((n, p));
    let mut names = vec!["intercept".to_string()];
    let mut roles = vec![ColumnRole::Intercept];
    for i in 0..n {
        values[[i, 0]] = 1.0;
        let t = labels[i];
        if t > 0 {
            values[[i, t]] = 1.0;
        }
    }
    names.extend(dummy_names(k));
    roles.extend(std::iter::repeat_n(ColumnRole::Main, k - 1));
    if let Some(scores) = scores {
        if scores.n() != n || scores.k() != k {
            return Err(Error::Dimension(format!(
                "score matrix is {}×{} but labels imply {}×{}",
                scores.n(),
                scores.k(),
                n,
                k
            )));
        }
        for t in 1..k {
            let col = k - 1 + t;
            for i in 0..n {
                values[[i, col]] = scores.scores[[i, t]];
            }
            names.push(format!("score_{t}"));
            roles.push(ColumnRole::Main);
        }
    }
    DesignMatrix::from_parts(values, names, roles)
}

/// Regresses one covariate on the treatment dummies (plus score columns when
/// given), returning the joint F test of the dummies and the per-category
/// adjusted means.
pub fn balance_check(
    values: &[f64],
    family: Family,
    labels: &[usize],
    k: usize,
    scores: Option<&PropensityMatrix>,
    opts: &GlmOptions,
) -> Result<(JointTest, Vec<f64>)> {
    if values.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} covariate values for {} labels",
            values.len(),
            labels.len()
        )));
    }
    if k < 2 {
        return Err(Error::invalid("balance check needs at least two categories"));
    }
    if values.iter().all(|&v| v == values[0]) {
        // a constant covariate cannot be imbalanced, and its likelihood has
        // no interior optimum for the logit and count families
        let extra = if scores.is_some() { k - 1 } else { 0 };
        let p = 1 + (k - 1) + extra;
        let jt = JointTest {
            f: 0.0,
            num_df: k - 1,
            den_df: values.len().saturating_sub(p).max(1),
            block: dummy_names(k),
        };
        return Ok((jt, vec![values[0]; k]));
    }
    let design = balance_design(labels, k, scores)?;
    let fit = fit_glm(family, &design, values, opts)?;
    let jt = joint_test(&fit, &dummy_names(k))?;

    // marginal standardization: set every record's dummies to category t,
    // keep its score columns, average the predictions
    let n = labels.len();
    let mut adjusted = Vec::with_capacity(k);
    for t in 0..k {
        let mut counterfactual = design.clone();
        for i in 0..n {
            for dummy in 1..k {
                counterfactual.values[[i, dummy]] = if dummy == t { 1.0 } else { 0.0 };
            }
        }
        let predictions = fit.predict_mean(&counterfactual)?;
        let mut acc = KahanSum::new();
        for v in &predictions {
            acc.add(*v);
        }
        adjusted.push(acc.value() / n as f64);
    }
    Ok((jt, adjusted))
}

/// Runs [`balance_check`] twice per covariate (without, then with the score
/// adjustment) and pairs the results.
pub fn balance_report(
    corpus: &ImputedCorpus,
    scores: &PropensityMatrix,
    family_map: &[(Covariate, Family)],
    opts: &GlmOptions,
) -> Result<BalanceReport> {
    let labels = &corpus.corpus.labels;
    let k = corpus.corpus.k();
    let mut rows = Vec::with_capacity(family_map.len());
    for &(covariate, family) in family_map {
        let values = corpus.covariate_values(covariate);
        let (before, unadjusted) = balance_check(&values, family, labels, k, None, opts)?;
        let (after, adjusted) =
            balance_check(&values, family, labels, k, Some(scores), opts)?;
        let reduction_pct = if before.f > 0.0 {
            100.0 * (1.0 - after.f / before.f)
        } else {
            0.0
        };
        rows.push(BalanceRow {
            covariate: covariate.name().to_string(),
            family,
            f_before: before.f,
            f_after: after.f,
            reduction_pct,
            unadjusted_means: unadjusted,
            adjusted_means: adjusted,
        });
    }
    Ok(BalanceReport {
        rows,
        scheme: corpus.corpus.scheme.clone(),
        n: corpus.n(),
        p: 1 + 2 * (k - 1),
    })
}

impl BalanceReport {
    /// Paired No/Yes rows per covariate, mirroring the balance-table layout.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Balance check of covariates across {} categories (N = {})\n\n",
            self.scheme.len(),
            self.n
        ));
        out.push_str("| Variable | Propensity score? | F-Test |");
        for category in &self.scheme {
            out.push_str(&format!(" {category} |"));
        }
        out.push('\n');
        out.push_str("|---|---|---|");
        for _ in &self.scheme {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} | No | {:.1} |", row.covariate, row.f_before));
            for m in &row.unadjusted_means {
                out.push_str(&format!(" {m:.2} |"));
            }
            out.push('\n');
            out.push_str(&format!("|  | Yes | {:.1} |", row.f_after));
            for m in &row.adjusted_means {
                out.push_str(&format!(" {m:.2} |"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,family,propensity_score,f,reduction_pct");
        for category in &self.scheme {
            out.push_str(&format!(",mean_{category}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},no,{},",
                row.covariate,
                row.family.name(),
                row.f_before
            ));
            for m in &row.unadjusted_means {
                out.push_str(&format!(",{m}"));
            }
            out.push('\n');
            out.push_str(&format!(
                "{},{},yes,{},{}",
                row.covariate,
                row.family.name(),
                row.f_after,
                row.reduction_pct
            ));
            for m in &row.adjusted_means {
                out.push_str(&format!(",{m}"));
            }
            out.push('\n');
        }
        out
    }
}
