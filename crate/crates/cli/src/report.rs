//! Rendering of effect estimates and score matrices to CSV and Markdown.

use ipw_core::dataset::LabeledCorpus;
use ipw_core::estimator::{AceMatrix, IpwEstimates, WeightVector};
use ipw_core::propensity::PropensityMatrix;

/// Per-category effect table: raw moments next to IPW-weighted moments.
pub fn effects_markdown(
    estimates: &IpwEstimates,
    scheme: &[String],
    naive: &AceMatrix,
    ipw: &AceMatrix,
) -> String {
    let mut out = String::new();
    out.push_str("Effects of categories on the outcome before and after IPW\n\n");
    out.push_str(
        "| Category | Number of papers | Mean (before IPW) | SD (before IPW) | Mean (after IPW) | SD (after IPW) |\n",
    );
    out.push_str("|---|---|---|---|---|---|\n");
    for (category, est) in scheme.iter().zip(&estimates.per_category) {
        out.push_str(&format!(
            "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} |\n",
            category, est.n, est.mean, est.sd, est.weighted_mean, est.weighted_sd
        ));
    }
    out.push_str(
        "\nNote: the weighted standard deviation uses the sum of weights as divisor.\n",
    );
    out.push_str("\nPairwise mean differences (row minus column), before IPW:\n\n");
    out.push_str(&matrix_markdown(naive, scheme));
    out.push_str("\nPairwise mean differences (row minus column), after IPW — the unconfounded category effects:\n\n");
    out.push_str(&matrix_markdown(ipw, scheme));
    out
}

fn matrix_markdown(matrix: &AceMatrix, scheme: &[String]) -> String {
    let mut out = String::from("| |");
    for category in scheme {
        out.push_str(&format!(" {category} |"));
    }
    out.push_str("\n|---|");
    for _ in scheme {
        out.push_str("---|");
    }
    out.push('\n');
    for (s, category) in scheme.iter().enumerate() {
        out.push_str(&format!("| {category} |"));
        for t in 0..scheme.len() {
            out.push_str(&format!(" {:.2} |", matrix.get(s, t)));
        }
        out.push('\n');
    }
    out
}

pub fn effects_csv(estimates: &IpwEstimates, scheme: &[String]) -> String {
    let mut out =
        String::from("category,n,mean_before,sd_before,mean_after,sd_after,ess\n");
    for (category, est) in scheme.iter().zip(&estimates.per_category) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            category, est.n, est.mean, est.sd, est.weighted_mean, est.weighted_sd, est.ess
        ));
    }
    out
}

/// Long-format effect matrix: one row per ordered category pair.
pub fn ace_csv(naive: &AceMatrix, ipw: &AceMatrix, scheme: &[String]) -> String {
    let mut out = String::from("category_a,category_b,naive_diff,ipw_diff\n");
    for (s, a) in scheme.iter().enumerate() {
        for (t, b) in scheme.iter().enumerate() {
            if s != t {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    a,
                    b,
                    naive.get(s, t),
                    ipw.get(s, t)
                ));
            }
        }
    }
    out
}

pub fn propensities_csv(
    corpus: &LabeledCorpus,
    scores: &PropensityMatrix,
    weights: &WeightVector,
) -> String {
    let mut out = String::from("id,category,weight");
    for category in &corpus.scheme {
        out.push_str(&format!(",p_{category}"));
    }
    out.push('\n');
    for (i, record) in corpus.records.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}",
            record.id, corpus.scheme[corpus.labels[i]], weights.weights[i]
        ));
        for t in 0..corpus.k() {
            out.push_str(&format!(",{}", scores.scores[[i, t]]));
        }
        out.push('\n');
    }
    out
}
