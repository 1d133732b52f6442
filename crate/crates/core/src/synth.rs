//! Synthetic corpus generation with known assignment and outcome mechanisms.
//!
//! Every record draws from its own RNG stream keyed by (seed, record index),
//! so generation is reproducible regardless of chunking. Both potential
//! outcomes are realized per unit with shared per-unit random numbers, which
//! keeps the finite-sample ground-truth effects low-variance; the corpus
//! exposes only the outcome of the assigned treatment.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::{Covariate, PaperRecord, NUM_COVARIATES};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::KahanSum;

/// Marginal distribution of one covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateModel {
    Poisson { mean: f64, offset: u32 },
    /// Gamma-Poisson mixture: count with variance mean + alpha·mean².
    OverdispersedCount { mean: f64, alpha: f64, offset: u32 },
    Bernoulli { p: f64 },
    LogNormal { log_mean: f64, log_sd: f64 },
    Constant { value: f64 },
}

impl CovariateModel {
    /// Theoretical mean and standard deviation, used to put assignment and
    /// outcome coefficients on a standardized covariate scale.
    fn moments(&self) -> (f64, f64) {
        match *self {
            CovariateModel::Poisson { mean, offset } => (offset as f64 + mean, mean.sqrt()),
            CovariateModel::OverdispersedCount { mean, alpha, offset } => (
                offset as f64 + mean,
                (mean + alpha * mean * mean).sqrt(),
            ),
            CovariateModel::Bernoulli { p } => (p, (p * (1.0 - p)).sqrt()),
            CovariateModel::LogNormal { log_mean, log_sd } => {
                let mean = (log_mean + 0.5 * log_sd * log_sd).exp();
                let var = (log_sd * log_sd).exp_m1() * mean * mean;
                (mean, var.sqrt())
            }
            CovariateModel::Constant { value } => (value, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CovariateModel::Poisson { mean, .. } => mean >= 0.0 && mean.is_finite(),
            CovariateModel::OverdispersedCount { mean, alpha, .. } => {
                mean >= 0.0 && alpha >= 0.0 && mean.is_finite() && alpha.is_finite()
            }
            CovariateModel::Bernoulli { p } => (0.0..=1.0).contains(&p),
            CovariateModel::LogNormal { log_mean, log_sd } => {
                log_mean.is_finite() && log_sd >= 0.0 && log_sd.is_finite()
            }
            CovariateModel::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid covariate model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub covariate: Covariate,
    pub model: CovariateModel,
    #[serde(default)]
    pub missing_rate: f64,
}

/// Multinomial-logit treatment assignment on standardized covariates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentModel {
    /// One intercept per treatment.
    pub intercepts: Vec<f64>,
    /// K rows of 13 coefficients each.
    pub coefficients: Vec<Vec<f64>>,
}

/// Outcome counts: y ~ NegBin(μ) with log μ = base_t + γ'z, where base_t is
/// the per-treatment causal offset and z the standardized covariates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub base: Vec<f64>,
    pub gamma: Vec<f64>,
    /// NB2 dispersion of the outcome; 0 means Poisson.
    pub dispersion: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub k: usize,
    pub scheme: Vec<String>,
    pub covariates: Vec<CovariateSpec>,
    pub assignment: AssignmentModel,
    pub outcome: OutcomeModel,
    pub seed: u64,
}

/// What the generator knows and an analyst does not.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// K×K matrix of true effects: mean potential-outcome differences over
    /// the generated sample.
    pub ace: Array2<f64>,
    /// Monte Carlo standard error of each `ace` entry, from the per-unit
    /// difference spread.
    pub mc_sigma: Array2<f64>,
    /// Mean potential outcome per treatment.
    pub potential_means: Vec<f64>,
    /// Realized (confounded) mean outcome per assigned treatment.
    pub naive_means: Vec<f64>,
    /// N×K matrix of both potential outcomes per unit.
    pub potential_outcomes: Array2<f64>,
    pub assigned: Vec<usize>,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.ace.nrows()
    }

    pub fn ace_rows(&self) -> Vec<Vec<f64>> {
        let k = self.k();
        (0..k)
            .map(|s| (0..k).map(|t| self.ace[[s, t]]).collect())
            .collect()
    }

    pub fn mc_sigma_rows(&self) -> Vec<Vec<f64>> {
        let k = self.k();
        (0..k)
            .map(|s| (0..k).map(|t| self.mc_sigma[[s, t]]).collect())
            .collect()
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("generator needs at least two treatments"));
        }
        if self.n < self.k {
            return Err(Error::invalid("generator needs n >= k"));
        }
        if self.scheme.len() != self.k {
            return Err(Error::invalid(format!(
                "scheme lists {} categories for k = {}",
                self.scheme.len(),
                self.k
            )));
        }
        if self.covariates.len() != NUM_COVARIATES {
            return Err(Error::invalid(format!(
                "config must specify all {NUM_COVARIATES} covariates, got {}",
                self.covariates.len()
            )));
        }
        for c in Covariate::ALL {
            if self.covariates.iter().filter(|s| s.covariate == c).count() != 1 {
                return Err(Error::invalid(format!(
                    "covariate {} must appear exactly once",
                    c.name()
                )));
            }
        }
        for spec in &self.covariates {
            spec.model.validate()?;
            if !(0.0..1.0).contains(&spec.missing_rate) {
                return Err(Error::invalid(format!(
                    "missing rate {} out of [0, 1)",
                    spec.missing_rate
                )));
            }
        }
        if self.assignment.intercepts.len() != self.k
            || self.assignment.coefficients.len() != self.k
            || self
                .assignment
                .coefficients
                .iter()
                .any(|row| row.len() != NUM_COVARIATES)
        {
            return Err(Error::invalid("assignment model shape does not match k × 13"));
        }
        if self.outcome.base.len() != self.k || self.outcome.gamma.len() != NUM_COVARIATES {
            return Err(Error::invalid("outcome model shape does not match k / 13"));
        }
        if self.outcome.dispersion < 0.0 {
            return Err(Error::invalid("outcome dispersion must be non-negative"));
        }
        Ok(())
    }

    /// Covariate marginals on familiar bibliometric scales (mean citations
    /// around 30, mean co-author count around 5.4, impact factor around 2.3)
    /// with no treatment/outcome coupling.
    pub fn with_scales(n: usize, k: usize, seed: u64) -> GeneratorConfig {
        use Covariate::*;
        use CovariateModel::*;
        let spec = |covariate: Covariate, model: CovariateModel, missing_rate: f64| CovariateSpec {
            covariate,
            model,
            missing_rate,
        };
        let covariates = vec![
            spec(SubjectCategories, Poisson { mean: 1.2, offset: 1 }, 0.0),
            spec(
                Pages,
                OverdispersedCount { mean: 9.8, alpha: 0.55, offset: 0 },
                0.0,
            ),
            spec(
                Coauthors,
                OverdispersedCount { mean: 4.45, alpha: 2.0, offset: 1 },
                0.0,
            ),
            spec(
                AuthorAddresses,
                OverdispersedCount { mean: 3.32, alpha: 0.5, offset: 0 },
                0.0,
            ),
            spec(JoinedCountries, Poisson { mean: 0.3, offset: 1 }, 0.0),
            spec(Usa, Bernoulli { p: 0.36 }, 0.0),
            spec(Europe, Bernoulli { p: 0.40 }, 0.0),
            spec(Asia, Bernoulli { p: 0.16 }, 0.0),
            spec(
                Keywords,
                OverdispersedCount { mean: 5.21, alpha: 0.4, offset: 0 },
                0.0021,
            ),
            spec(
                TitleWords,
                OverdispersedCount { mean: 11.0, alpha: 0.1, offset: 1 },
                0.0,
            ),
            spec(
                CitedReferences,
                OverdispersedCount { mean: 28.46, alpha: 0.4, offset: 0 },
                0.0,
            ),
            spec(
                LinkedCitedReferences,
                OverdispersedCount { mean: 19.45, alpha: 0.6, offset: 0 },
                0.0,
            ),
            spec(
                JournalImpactFactor,
                LogNormal { log_mean: 0.385, log_sd: 0.927 },
                0.0008,
            ),
        ];
        GeneratorConfig {
            n,
            k,
            scheme: (1..=k).map(|t| format!("F{t}")).collect(),
            covariates,
            assignment: AssignmentModel {
                intercepts: vec![0.0; k],
                coefficients: vec![vec![0.0; NUM_COVARIATES]; k],
            },
            outcome: OutcomeModel {
                base: vec![30.0f64.ln(); k],
                gamma: vec![0.0; NUM_COVARIATES],
                dispersion: 0.25,
            },
            seed,
        }
    }

    /// Null mechanism: assignment ignores the covariates and every treatment
    /// shares the same outcome level, so the true effect matrix is zero. The
    /// outcome still depends on a few covariates.
    pub fn null(n: usize, k: usize, seed: u64) -> GeneratorConfig {
        let mut config = GeneratorConfig::with_scales(n, k, seed);
        config.outcome.gamma[Covariate::Pages.index()] = 0.2;
        config.outcome.gamma[Covariate::Coauthors.index()] = 0.15;
        config.outcome.gamma[Covariate::JournalImpactFactor.index()] = 0.25;
        config
    }

    /// Strong confounding: pages, co-author count, and impact factor drive
    /// both the treatment assignment and the outcome, and treatments differ
    /// in their causal offsets.
    pub fn confounded(n: usize, k: usize, seed: u64) -> GeneratorConfig {
        let mut config = GeneratorConfig::null(n, k, seed);
        for t in 0..k {
            let direction = if k > 1 {
                2.0 * t as f64 / (k - 1) as f64 - 1.0
            } else {
                0.0
            };
            config.assignment.coefficients[t][Covariate::Pages.index()] = 0.8 * direction;
            config.assignment.coefficients[t][Covariate::Coauthors.index()] = 0.6 * direction;
            config.assignment.coefficients[t][Covariate::JournalImpactFactor.index()] =
                0.7 * direction;
            config.outcome.base[t] = 30.0f64.ln() + 0.35 * direction;
        }
        config
    }

    /// The covariates `confounded` couples to both assignment and outcome.
    pub fn confounded_covariates() -> [Covariate; 3] {
        [
            Covariate::Pages,
            Covariate::Coauthors,
            Covariate::JournalImpactFactor,
        ]
    }
}

fn standard_normal_quantile(u: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15))
}

/// Poisson quantile by CDF inversion; monotone in `u` so shared uniforms
/// yield comonotone counts across treatment arms. Means above 500 switch to
/// a normal approximation to avoid underflow of the recurrence start.
fn poisson_quantile(u: f64, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean > 500.0 {
        let z = standard_normal_quantile(u);
        let value = mean + mean.sqrt() * z;
        return value.round().max(0.0) as u64;
    }
    let cap = (mean + 30.0 * mean.sqrt() + 50.0) as u64;
    let mut k = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf && k < cap {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    k
}

fn draw_covariate(model: &CovariateModel, rng: &mut impl Rng) -> f64 {
    match *model {
        CovariateModel::Poisson { mean, offset } => {
            offset as f64 + poisson_quantile(rng.random(), mean) as f64
        }
        CovariateModel::OverdispersedCount { mean, alpha, offset } => {
            let lambda = if alpha > 0.0 {
                let gamma = Gamma::new(1.0 / alpha, alpha * mean).expect("valid gamma");
                gamma.sample(rng)
            } else {
                mean
            };
            offset as f64 + poisson_quantile(rng.random(), lambda) as f64
        }
        CovariateModel::Bernoulli { p } => {
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        }
        CovariateModel::LogNormal { log_mean, log_sd } => {
            (log_mean + log_sd * standard_normal_quantile(rng.random())).exp()
        }
        CovariateModel::Constant { value } => value,
    }
}

/// Generates the corpus and its ground truth. Deterministic for a fixed
/// config (the seed lives inside the config).
pub fn generate(config: &GeneratorConfig) -> Result<(Vec<PaperRecord>, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let k = config.k;

    let moments: Vec<(f64, f64)> = config
        .covariates
        .iter()
        .map(|s| s.model.moments())
        .collect();
    // specs may come in any order; index them canonically
    let mut spec_by_index: Vec<&CovariateSpec> = Vec::with_capacity(NUM_COVARIATES);
    for c in Covariate::ALL {
        spec_by_index.push(
            config
                .covariates
                .iter()
                .find(|s| s.covariate == c)
                .expect("validated above"),
        );
    }
    let moments_by_index: Vec<(f64, f64)> = spec_by_index
        .iter()
        .map(|s| {
            let pos = config
                .covariates
                .iter()
                .position(|other| other.covariate == s.covariate)
                .unwrap();
            moments[pos]
        })
        .collect();

    let mut records = Vec::with_capacity(n);
    let mut potential_outcomes = Array2::zeros((n, k));
    let mut assigned = Vec::with_capacity(n);

    for i in 0..n {
        let mut rng = stream_rng(config.seed, i as u64);

        let mut values = [0f64; NUM_COVARIATES];
        let mut missing = [false; NUM_COVARIATES];
        for (j, spec) in spec_by_index.iter().enumerate() {
            values[j] = draw_covariate(&spec.model, &mut rng);
            missing[j] = rng.random::<f64>() < spec.missing_rate;
        }
        // linked references can never exceed cited references
        let cited = values[Covariate::CitedReferences.index()];
        let linked = &mut values[Covariate::LinkedCitedReferences.index()];
        if *linked > cited {
            *linked = cited;
        }

        let z: Vec<f64> = (0..NUM_COVARIATES)
            .map(|j| {
                let (mean, sd) = moments_by_index[j];
                if sd > 0.0 {
                    (values[j] - mean) / sd
                } else {
                    0.0
                }
            })
            .collect();

        // treatment assignment by inverse CDF over the softmax
        let logits: Vec<f64> = (0..k)
            .map(|t| {
                let mut eta = config.assignment.intercepts[t];
                for j in 0..NUM_COVARIATES {
                    eta += config.assignment.coefficients[t][j] * z[j];
                }
                eta
            })
            .collect();
        let max_logit = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let expd: Vec<f64> = logits.iter().map(|&l| (l - max_logit).exp()).collect();
        let total: f64 = expd.iter().sum();
        let u_assign: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut treatment = k - 1;
        for (t, &e) in expd.iter().enumerate() {
            cumulative += e / total;
            if u_assign <= cumulative {
                treatment = t;
                break;
            }
        }

        // shared per-unit randomness across the potential outcomes
        let heterogeneity = if config.outcome.dispersion > 0.0 {
            let a = config.outcome.dispersion;
            Gamma::new(1.0 / a, a).expect("valid gamma").sample(&mut rng)
        } else {
            1.0
        };
        let u_outcome: f64 = rng.random();
        let mut covariate_effect = 0.0;
        for j in 0..NUM_COVARIATES {
            covariate_effect += config.outcome.gamma[j] * z[j];
        }
        for t in 0..k {
            let mu = (config.outcome.base[t] + covariate_effect).exp() * heterogeneity;
            potential_outcomes[[i, t]] = poisson_quantile(u_outcome, mu) as f64;
        }

        let citations = potential_outcomes[[i, treatment]] as u64;
        let mut covariates = [None; NUM_COVARIATES];
        for j in 0..NUM_COVARIATES {
            if !missing[j] {
                covariates[j] = Some(values[j]);
            }
        }
        let record = PaperRecord::new(
            format!("s{i}"),
            2000 + (i % 6) as i32,
            citations,
            vec![config.scheme[treatment].clone()],
            covariates,
        )?;
        records.push(record);
        assigned.push(treatment);
    }

    let mut class_counts = vec![0usize; k];
    for &t in &assigned {
        class_counts[t] += 1;
    }
    if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCategory(config.scheme[empty].clone()));
    }

    let truth = ground_truth(&potential_outcomes, &assigned, &records);
    Ok((records, truth))
}

fn ground_truth(
    potential_outcomes: &Array2<f64>,
    assigned: &[usize],
    records: &[PaperRecord],
) -> GroundTruth {
    let n = potential_outcomes.nrows();
    let k = potential_outcomes.ncols();
    let potential_means: Vec<f64> = (0..k)
        .map(|t| {
            let mut acc = KahanSum::new();
            for i in 0..n {
                acc.add(potential_outcomes[[i, t]]);
            }
            acc.value() / n as f64
        })
        .collect();
    let mut ace = Array2::zeros((k, k));
    let mut mc_sigma = Array2::zeros((k, k));
    for s in 0..k {
        for t in 0..k {
            ace[[s, t]] = potential_means[s] - potential_means[t];
            if s != t {
                let mean_diff = ace[[s, t]];
                let mut ss = KahanSum::new();
                for i in 0..n {
                    let d = potential_outcomes[[i, s]] - potential_outcomes[[i, t]] - mean_diff;
                    ss.add(d * d);
                }
                let var = if n > 1 { ss.value() / (n - 1) as f64 } else { 0.0 };
                mc_sigma[[s, t]] = (var / n as f64).sqrt();
            }
        }
    }
    let mut naive_sums = vec![KahanSum::new(); k];
    let mut counts = vec![0usize; k];
    for (record, &t) in records.iter().zip(assigned) {
        naive_sums[t].add(record.citations as f64);
        counts[t] += 1;
    }
    let naive_means = naive_sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s.value() / c as f64 } else { f64::NAN })
        .collect();
    GroundTruth {
        ace,
        mc_sigma,
        potential_means,
        naive_means,
        potential_outcomes: potential_outcomes.clone(),
        assigned: assigned.to_vec(),
    }
}

/// The ten-record desk example: two fields confounded by a binary co-author
/// split with cell counts (4,1) / (1,4). Within each co-author group the two
/// fields share the same mean outcome, so the true field effect is zero while
/// the raw field means differ by 30.
pub fn two_field_demo() -> (Vec<PaperRecord>, GroundTruth) {
    let coauthors = [1.0, 1.0, 1.0, 1.0, 1.0, 5.0, 5.0, 5.0, 5.0, 5.0];
    let field = [0usize, 0, 0, 0, 1, 0, 1, 1, 1, 1];
    let citations = [40u64, 60, 40, 60, 50, 100, 150, 50, 150, 50];
    let scheme = ["F1", "F2"];
    let records: Vec<PaperRecord> = (0..10)
        .map(|i| {
            let mut covariates = [None; NUM_COVARIATES];
            let set = |cov: Covariate, v: f64, c: &mut [Option<f64>; NUM_COVARIATES]| {
                c[cov.index()] = Some(v);
            };
            set(Covariate::SubjectCategories, 1.0, &mut covariates);
            set(Covariate::Pages, 8.0, &mut covariates);
            set(Covariate::Coauthors, coauthors[i], &mut covariates);
            set(Covariate::AuthorAddresses, 2.0, &mut covariates);
            set(Covariate::JoinedCountries, 1.0, &mut covariates);
            set(Covariate::Usa, 0.0, &mut covariates);
            set(Covariate::Europe, 1.0, &mut covariates);
            set(Covariate::Asia, 0.0, &mut covariates);
            set(Covariate::Keywords, 5.0, &mut covariates);
            set(Covariate::TitleWords, 11.0, &mut covariates);
            set(Covariate::CitedReferences, 25.0, &mut covariates);
            set(Covariate::LinkedCitedReferences, 15.0, &mut covariates);
            set(Covariate::JournalImpactFactor, 1.5, &mut covariates);
            PaperRecord::new(
                format!("p{}", i + 1),
                2003,
                citations[i],
                vec![scheme[field[i]].to_string()],
                covariates,
            )
            .expect("demo records are valid")
        })
        .collect();
    // within each co-author group the field makes no difference, so both
    // potential outcomes equal the realized one
    let mut potential_outcomes = Array2::zeros((10, 2));
    for i in 0..10 {
        potential_outcomes[[i, 0]] = citations[i] as f64;
        potential_outcomes[[i, 1]] = citations[i] as f64;
    }
    let truth = ground_truth(&potential_outcomes, &field, &records);
    (records, truth)
}
