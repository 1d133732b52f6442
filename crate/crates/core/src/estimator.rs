//! IPW point estimation: weights, unconfounded means, weighted spreads, the
//! matrix of pairwise effects, the stratified desk oracle, and the phi
//! association coefficient.
//!
//! Weighted standard deviations divide by the sum of weights. All reductions
//! use compensated summation. No standard errors are attached to the effect
//! estimates; reports carry the effective sample size instead.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::propensity::PropensityMatrix;
use crate::stats::{self, KahanSum};

/// Inverse-propensity weights, ωᵢ = 1 / P[i, label(i)].
#[derive(Debug, Clone)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub sum_by_category: Vec<f64>,
}

/// Per-category estimate: raw moments and IPW-weighted moments.
#[derive(Debug, Clone)]
pub struct CategoryEstimate {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub weighted_mean: f64,
    pub weighted_sd: f64,
    /// Effective sample size, (Σω)²/Σω².
    pub ess: f64,
}

#[derive(Debug, Clone)]
pub struct IpwEstimates {
    pub per_category: Vec<CategoryEstimate>,
}

impl IpwEstimates {
    pub fn k(&self) -> usize {
        self.per_category.len()
    }

    pub fn weighted_means(&self) -> Vec<f64> {
        self.per_category.iter().map(|c| c.weighted_mean).collect()
    }

    pub fn unweighted_means(&self) -> Vec<f64> {
        self.per_category.iter().map(|c| c.mean).collect()
    }
}

/// K×K antisymmetric matrix of pairwise mean differences,
/// A[s, t] = μ_s − μ_t.
#[derive(Debug, Clone)]
pub struct AceMatrix {
    pub values: Array2<f64>,
}

impl AceMatrix {
    pub fn from_means(means: &[f64]) -> Self {
        let k = means.len();
        let values = Array2::from_shape_fn((k, k), |(s, t)| means[s] - means[t]);
        AceMatrix { values }
    }

    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.values[[s, t]]
    }
}

/// One weight per record from its own-category score. Requires strictly
/// positive scores, which clipping guarantees.
pub fn ipw_weights(p: &PropensityMatrix, labels: &[usize]) -> Result<WeightVector> {
    if labels.len() != p.n() {
        return Err(Error::Dimension(format!(
            "{} labels for {} score rows",
            labels.len(),
            p.n()
        )));
    }
    let k = p.k();
    let mut weights = Vec::with_capacity(labels.len());
    let mut sums = vec![KahanSum::new(); k];
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::invalid(format!("label {label} out of range for K={k}")));
        }
        let score = p.scores[[i, label]];
        if score <= 0.0 {
            return Err(Error::invalid(format!(
                "record {i} has non-positive own-category score {score}; clip the scores first"
            )));
        }
        let w = 1.0 / score;
        weights.push(w);
        sums[label].add(w);
    }
    Ok(WeightVector {
        weights,
        sum_by_category: sums.iter().map(|s| s.value()).collect(),
    })
}

/// Raw and weighted moments per category. The weighted mean is
/// Σ yᵢωᵢ / Σ ωᵢ over the category's records; the weighted SD uses the same
/// Σω divisor.
pub fn ipw_estimates(
    y: &[f64],
    weights: &WeightVector,
    labels: &[usize],
    k: usize,
) -> Result<IpwEstimates> {
    if y.len() != labels.len() || y.len() != weights.weights.len() {
        return Err(Error::Dimension(format!(
            "lengths disagree: {} outcomes, {} labels, {} weights",
            y.len(),
            labels.len(),
            weights.weights.len()
        )));
    }
    let mut per_category = Vec::with_capacity(k);
    for t in 0..k {
        let rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == t)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyCategory(t.to_string()));
        }
        let values: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let w: Vec<f64> = rows.iter().map(|&i| weights.weights[i]).collect();
        let wsum = stats::sum(w.iter().copied());
        if wsum <= 0.0 {
            return Err(Error::invalid(format!(
                "category {t} has non-positive weight sum {wsum}"
            )));
        }
        let weighted_mean = stats::weighted_mean(&values, &w);
        let weighted_sd = stats::weighted_sd(&values, &w, weighted_mean);
        let w2sum = stats::sum(w.iter().map(|v| v * v));
        per_category.push(CategoryEstimate {
            n: rows.len(),
            mean: stats::mean(&values),
            sd: stats::sample_sd(&values),
            weighted_mean,
            weighted_sd,
            ess: wsum * wsum / w2sum,
        });
    }
    Ok(IpwEstimates { per_category })
}

/// Pairwise differences of the IPW-weighted means.
pub fn ace_matrix(estimates: &IpwEstimates) -> AceMatrix {
    AceMatrix::from_means(&estimates.weighted_means())
}

/// Pairwise differences of the raw (confounded) means.
pub fn naive_ace_matrix(estimates: &IpwEstimates) -> AceMatrix {
    AceMatrix::from_means(&estimates.unweighted_means())
}

/// Two-treatment effect stratified on a discrete confounder: the average of
/// within-stratum mean differences (treatment 0 minus treatment 1), weighted
/// by the strata's marginal frequencies. On a saturated propensity design
/// this is exactly what IPW must reproduce, which makes it the desk oracle.
pub fn stratified_ace(y: &[f64], strata: &[usize], labels: &[usize]) -> Result<f64> {
    if y.len() != strata.len() || y.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "lengths disagree: {} outcomes, {} strata, {} labels",
            y.len(),
            strata.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("stratified effect is defined for two treatments"));
    }
    let n = y.len();
    let n_strata = strata.iter().max().map_or(0, |&s| s + 1);
    if n_strata == 0 {
        return Err(Error::invalid("empty input"));
    }
    let mut effect = KahanSum::new();
    for s in 0..n_strata {
        let mut cells = [KahanSum::new(), KahanSum::new()];
        let mut counts = [0usize; 2];
        let mut stratum_size = 0usize;
        for i in 0..n {
            if strata[i] == s {
                stratum_size += 1;
                cells[labels[i]].add(y[i]);
                counts[labels[i]] += 1;
            }
        }
        for (t, &count) in counts.iter().enumerate() {
            if count == 0 {
                return Err(Error::EmptyCategory(format!(
                    "stratum {s}, treatment {t}"
                )));
            }
        }
        let delta = cells[0].value() / counts[0] as f64 - cells[1].value() / counts[1] as f64;
        effect.add(stratum_size as f64 / n as f64 * delta);
    }
    Ok(effect.value())
}

/// Phi coefficient of two binary vectors:
/// (n₁₁n₀₀ − n₁₀n₀₁) / √(n₁·n₀·n·₁n·₀).
pub fn phi_coefficient(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "{} vs {} elements",
            a.len(),
            b.len()
        )));
    }
    if a.iter().all(|&v| v == a[0]) || b.iter().all(|&v| v == b[0]) {
        return Err(Error::invalid("phi coefficient needs non-constant vectors"));
    }
    let mut n = [[0f64; 2]; 2];
    for (&ai, &bi) in a.iter().zip(b) {
        n[ai as usize][bi as usize] += 1.0;
    }
    let a1 = n[1][0] + n[1][1];
    let a0 = n[0][0] + n[0][1];
    let b1 = n[0][1] + n[1][1];
    let b0 = n[0][0] + n[1][0];
    Ok((n[1][1] * n[0][0] - n[1][0] * n[0][1]) / (a1 * a0 * b1 * b0).sqrt())
}
