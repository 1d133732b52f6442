//! Treatment-membership probability estimation, clipping, and overlap
//! diagnostics.
//!
//! Clipping clamps each score into [lo, hi] without renormalizing the row:
//! downstream weights use only the clipped own-category score, so row
//! stochasticity after clipping is not required and the remaining scores are
//! left untouched.

use ndarray::Array2;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::glm::{fit_multinomial, predict_proba, GlmOptions, MultinomFit};
use crate::stats::{five_number_summary, FiveNumber};

/// Default clip bounds.
pub const DEFAULT_CLIP: (f64, f64) = (0.001, 0.999);

/// N×K matrix of treatment-membership probabilities.
#[derive(Debug, Clone)]
pub struct PropensityMatrix {
    pub scores: Array2<f64>,
    /// Clip bounds once [`clip_scores`] has run.
    pub clip: Option<(f64, f64)>,
    /// Per-entry flag marking scores that were moved by clipping.
    pub clip_flags: Option<Array2<bool>>,
    /// The fit the scores came from, when estimated rather than constructed.
    pub fit: Option<MultinomFit>,
}

impl PropensityMatrix {
    pub fn from_scores(scores: Array2<f64>) -> Self {
        PropensityMatrix {
            scores,
            clip: None,
            clip_flags: None,
            fit: None,
        }
    }

    pub fn n(&self) -> usize {
        self.scores.nrows()
    }

    pub fn k(&self) -> usize {
        self.scores.ncols()
    }

    pub fn is_clipped(&self) -> bool {
        self.clip.is_some()
    }

    /// Number of entries moved by clipping.
    pub fn n_clipped(&self) -> usize {
        self.clip_flags
            .as_ref()
            .map_or(0, |f| f.iter().filter(|&&b| b).count())
    }
}

/// Fits the multinomial model and evaluates it on the same design. Rows of
/// the returned matrix sum to 1; no clipping is applied here.
pub fn estimate_propensities(
    design: &DesignMatrix,
    labels: &[usize],
    k: usize,
    opts: &GlmOptions,
) -> Result<PropensityMatrix> {
    let fit = fit_multinomial(design, labels, k, opts)?;
    let scores = predict_proba(&fit, design)?;
    Ok(PropensityMatrix {
        scores,
        clip: None,
        clip_flags: None,
        fit: Some(fit),
    })
}

/// Clamps every score into [lo, hi] entrywise, recording which entries
/// moved. Idempotent.
pub fn clip_scores(mut p: PropensityMatrix, lo: f64, hi: f64) -> Result<PropensityMatrix> {
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::invalid(format!(
            "clip bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"
        )));
    }
    let mut flags = Array2::from_elem(p.scores.dim(), false);
    for (score, flag) in p.scores.iter_mut().zip(flags.iter_mut()) {
        let clamped = score.clamp(lo, hi);
        if clamped != *score {
            *flag = true;
            *score = clamped;
        }
    }
    if let Some(previous) = &p.clip_flags {
        for (new, old) in flags.iter_mut().zip(previous.iter()) {
            *new |= *old;
        }
    }
    p.clip = Some((lo, hi));
    p.clip_flags = Some(flags);
    Ok(p)
}

/// Five-number summary of the scores for one (assigned, scored) pair.
#[derive(Debug, Clone)]
pub struct OverlapCell {
    pub assigned: usize,
    pub scored: usize,
    pub count: usize,
    pub summary: FiveNumber,
}

/// Distribution summaries of every scored category within every assigned
/// category: the data behind an overlap box plot.
#[derive(Debug, Clone)]
pub struct OverlapSummary {
    pub scheme: Vec<String>,
    pub cells: Vec<OverlapCell>,
}

impl OverlapSummary {
    pub fn k(&self) -> usize {
        self.scheme.len()
    }

    pub fn cell(&self, assigned: usize, scored: usize) -> Option<&OverlapCell> {
        self.cells
            .iter()
            .find(|c| c.assigned == assigned && c.scored == scored)
    }

    /// One CSV row per (assigned, scored) pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("assigned,scored,count,min,q1,median,q3,max\n");
        for cell in &self.cells {
            let s = &cell.summary;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.scheme[cell.assigned],
                self.scheme[cell.scored],
                cell.count,
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max
            ));
        }
        out
    }
}

/// Quartile summaries (Tukey median-of-halves, see [`crate::stats`]) of
/// {P[i, scored] : label(i) = assigned} for every category pair.
pub fn overlap_summary(
    p: &PropensityMatrix,
    labels: &[usize],
    scheme: &[String],
) -> Result<OverlapSummary> {
    let k = p.k();
    if labels.len() != p.n() {
        return Err(Error::Dimension(format!(
            "{} labels for {} score rows",
            labels.len(),
            p.n()
        )));
    }
    if scheme.len() != k {
        return Err(Error::Dimension(format!(
            "{} scheme categories for {} score columns",
            scheme.len(),
            k
        )));
    }
    let mut cells = Vec::with_capacity(k * k);
    for assigned in 0..k {
        let rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == assigned)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyCategory(scheme[assigned].clone()));
        }
        for scored in 0..k {
            let values: Vec<f64> = rows.iter().map(|&i| p.scores[[i, scored]]).collect();
            let summary = five_number_summary(&values).expect("non-empty category");
            cells.push(OverlapCell {
                assigned,
                scored,
                count: values.len(),
                summary,
            });
        }
    }
    Ok(OverlapSummary {
        scheme: scheme.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ColumnRole, DesignMatrix};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn two_field_fixture() -> (DesignMatrix, Vec<usize>) {
        let mut values = Array2::ones((10, 2));
        for i in 0..10 {
            values[[i, 1]] = if i < 5 { 0.0 } else { 1.0 };
        }
        let x = DesignMatrix::from_parts(
            values,
            vec!["intercept".into(), "high_coauthors".into()],
            vec![ColumnRole::Intercept, ColumnRole::Main],
        )
        .unwrap();
        let labels = vec![0, 0, 0, 0, 1, 0, 1, 1, 1, 1];
        (x, labels)
    }

    fn tight() -> GlmOptions {
        GlmOptions {
            ridge: 1e-10,
            tol: 1e-12,
            ..GlmOptions::default()
        }
    }

    #[test]
    fn two_field_own_scores_follow_cell_frequencies() {
        let (x, labels) = two_field_fixture();
        let p = estimate_propensities(&x, &labels, 2, &tight()).unwrap();
        let expected = [0.8, 0.8, 0.8, 0.8, 0.2, 0.2, 0.8, 0.8, 0.8, 0.8];
        for (i, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(p.scores[[i, labels[i]]], e, epsilon = 1e-8);
        }
    }

    #[test]
    fn intercept_only_design_recovers_class_frequencies() {
        let x = DesignMatrix::from_parts(
            Array2::ones((10, 1)),
            vec!["intercept".into()],
            vec![ColumnRole::Intercept],
        )
        .unwrap();
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 2];
        let p = estimate_propensities(&x, &labels, 3, &tight()).unwrap();
        assert_abs_diff_eq!(p.scores[[0, 0]], 0.6, epsilon = 1e-8);
        assert_abs_diff_eq!(p.scores[[0, 1]], 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(p.scores[[0, 2]], 0.1, epsilon = 1e-8);
    }

    #[test]
    fn rows_sum_to_one_before_clipping() {
        let (x, labels) = two_field_fixture();
        let p = estimate_propensities(&x, &labels, 2, &GlmOptions::default()).unwrap();
        for i in 0..p.n() {
            let s: f64 = (0..p.k()).map(|t| p.scores[[i, t]]).sum();
            assert!((s - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn permuting_records_permutes_score_rows() {
        let (x, labels) = two_field_fixture();
        let p = estimate_propensities(&x, &labels, 2, &tight()).unwrap();

        let perm: Vec<usize> = vec![3, 1, 4, 9, 0, 6, 2, 8, 5, 7];
        let mut values = Array2::ones((10, 2));
        let mut plabels = vec![0usize; 10];
        for (new, &old) in perm.iter().enumerate() {
            values[[new, 1]] = x.values[[old, 1]];
            plabels[new] = labels[old];
        }
        let px = DesignMatrix::from_parts(values, x.names.clone(), x.roles.clone()).unwrap();
        let pp = estimate_propensities(&px, &plabels, 2, &tight()).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            for t in 0..2 {
                assert!((pp.scores[[new, t]] - p.scores[[old, t]]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn clip_examples() {
        let scores = array![[0.5, 0.5], [0.0, 1.0]];
        let p = clip_scores(PropensityMatrix::from_scores(scores), 0.001, 0.999).unwrap();
        assert_eq!(p.scores[[0, 0]], 0.5);
        assert_eq!(p.scores[[1, 0]], 0.001);
        assert_eq!(p.scores[[1, 1]], 0.999);
        assert_eq!(p.n_clipped(), 2);
    }

    #[test]
    fn clip_is_idempotent() {
        let scores = array![[0.0, 1.0], [0.3, 0.7]];
        let once = clip_scores(PropensityMatrix::from_scores(scores), 0.001, 0.999).unwrap();
        let twice = clip_scores(once.clone(), 0.001, 0.999).unwrap();
        assert_eq!(once.scores, twice.scores);
        assert_eq!(once.n_clipped(), twice.n_clipped());
    }

    #[test]
    fn invalid_clip_bounds_are_rejected() {
        let p = PropensityMatrix::from_scores(array![[0.5, 0.5]]);
        assert!(clip_scores(p.clone(), 0.9, 0.1).is_err());
        assert!(clip_scores(p, 0.0, 0.999).is_err());
    }

    #[test]
    fn overlap_two_field_medians() {
        let (x, labels) = two_field_fixture();
        let p = estimate_propensities(&x, &labels, 2, &tight()).unwrap();
        let scheme = vec!["F1".to_string(), "F2".to_string()];
        let overlap = overlap_summary(&p, &labels, &scheme).unwrap();
        // assigned F1, scored F1: {0.8, 0.8, 0.8, 0.8, 0.2}
        let own = overlap.cell(0, 0).unwrap();
        assert_abs_diff_eq!(own.summary.median, 0.8, epsilon = 1e-8);
        assert_eq!(own.count, 5);
        // assigned F1, scored F2 is the complement
        let cross = overlap.cell(0, 1).unwrap();
        assert_abs_diff_eq!(cross.summary.median, 0.2, epsilon = 1e-8);
    }

    #[test]
    fn overlap_counts_cover_every_pair() {
        let (x, labels) = two_field_fixture();
        let p = estimate_propensities(&x, &labels, 2, &GlmOptions::default()).unwrap();
        let scheme = vec!["F1".to_string(), "F2".to_string()];
        let overlap = overlap_summary(&p, &labels, &scheme).unwrap();
        for assigned in 0..2 {
            let n_a = labels.iter().filter(|&&l| l == assigned).count();
            let total: usize = overlap
                .cells
                .iter()
                .filter(|c| c.assigned == assigned)
                .map(|c| c.count)
                .sum();
            assert_eq!(total, 2 * n_a);
        }
    }

    #[test]
    fn overlap_single_record_collapses_summary() {
        let scores = array![[0.7, 0.3], [0.4, 0.6]];
        let p = PropensityMatrix::from_scores(scores);
        let scheme = vec!["A".to_string(), "B".to_string()];
        let overlap = overlap_summary(&p, &[0, 1], &scheme).unwrap();
        let cell = overlap.cell(0, 0).unwrap();
        let s = cell.summary;
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (0.7, 0.7, 0.7, 0.7, 0.7));
    }

    #[test]
    fn overlap_empty_category_is_an_error() {
        let p = PropensityMatrix::from_scores(array![[0.5, 0.5]]);
        let scheme = vec!["A".to_string(), "B".to_string()];
        let err = overlap_summary(&p, &[0], &scheme).unwrap_err();
        assert!(err.to_string().contains("B"));
    }
}
