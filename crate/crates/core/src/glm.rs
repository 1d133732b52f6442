//! Maximum-likelihood fitting of Gaussian, binomial-logit, negative-binomial,
//! and multinomial-logit regressions with ridge stabilization, plus Wald-type
//! joint hypothesis tests.
//!
//! All solvers are Newton / Fisher-scoring iterations with a step-halving
//! line search, so the penalized log-likelihood never decreases across
//! accepted steps. The ridge penalty applies to every non-intercept
//! coefficient. Normal equations are solved with dense Cholesky
//! factorizations; the model sizes here (p ≈ 100) make that cheap.
//!
//! The negative binomial uses the NB2 parameterization, Var(y) = μ + αμ²,
//! with a log link. α is kept positive by optimizing log α, alternating a
//! one-dimensional Newton step on log α with the β updates; α starts at its
//! method-of-moments estimate.
//!
//! F statistics for the logit and negative-binomial families are Wald block
//! statistics divided by their degrees of freedom, reported on an F scale.
//! For the Gaussian family with no ridge this reduces to the exact classical
//! F test. Before/after comparisons always use the same test family, so
//! ratios of the reported values are internally consistent.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use statrs::function::gamma::ln_gamma;

use crate::design::{ColumnRole, DesignMatrix};
use crate::error::{Error, Result};
use crate::stats::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Logit,
    NegBin,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Logit => "logit",
            Family::NegBin => "negbin",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GlmOptions {
    /// Ridge strength on non-intercept coefficients.
    pub ridge: f64,
    /// Convergence tolerance on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Fix the negative-binomial dispersion instead of estimating it.
    pub fixed_dispersion: Option<f64>,
}

impl Default for GlmOptions {
    fn default() -> Self {
        GlmOptions {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
            fixed_dispersion: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Convergence {
    pub iterations: usize,
    pub grad_norm: f64,
}

/// A fitted univariate GLM.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub family: Family,
    /// Coefficients in design-column order.
    pub coefficients: Vec<f64>,
    /// NB2 dispersion α (negative binomial only).
    pub dispersion: Option<f64>,
    pub log_likelihood: f64,
    pub convergence: Convergence,
    /// Fisher information of the penalized log-likelihood at the optimum.
    pub information: Array2<f64>,
    pub column_names: Vec<String>,
    pub n: usize,
}

impl GlmFit {
    /// Mean response for each row of `x` on the original outcome scale.
    pub fn predict_mean(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        if x.names != self.column_names {
            return Err(Error::Dimension(
                "design columns do not match the fitted model".into(),
            ));
        }
        let beta = Array1::from_vec(self.coefficients.clone());
        let eta = x.values.dot(&beta);
        Ok(match self.family {
            Family::Gaussian => eta.to_vec(),
            Family::Logit => eta.iter().map(|&e| sigmoid(e)).collect(),
            Family::NegBin => eta.iter().map(|&e| e.exp()).collect(),
        })
    }

    /// Coefficient covariance: the inverse of the information matrix.
    pub fn covariance(&self) -> Result<Array2<f64>> {
        chol_inverse(&self.information, "coefficient covariance")
    }
}

/// Wald joint test of a coefficient block, reported on an F scale.
#[derive(Debug, Clone)]
pub struct JointTest {
    pub f: f64,
    pub num_df: usize,
    pub den_df: usize,
    pub block: Vec<String>,
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

// ---------------------------------------------------------------------------
// Dense Cholesky helpers
// ---------------------------------------------------------------------------

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn cholesky(a: &Array2<f64>, context: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(to_nalgebra(a)).ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

fn chol_solve(a: &Array2<f64>, b: &[f64], context: &str) -> Result<Array1<f64>> {
    let chol = cholesky(a, context)?;
    let sol = chol.solve(&DVector::from_row_slice(b));
    Ok(Array1::from_iter(sol.iter().copied()))
}

fn chol_inverse(a: &Array2<f64>, context: &str) -> Result<Array2<f64>> {
    let inv = cholesky(a, context)?.inverse();
    Ok(Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| {
        inv[(i, j)]
    }))
}

/// X' diag(w) X plus a diagonal penalty.
fn weighted_cross(x: &Array2<f64>, w: &Array1<f64>, penalties: &[f64]) -> Array2<f64> {
    let xw = x * &w.view().insert_axis(Axis(1));
    let mut m = x.t().dot(&xw);
    for (j, &lambda) in penalties.iter().enumerate() {
        m[[j, j]] += lambda;
    }
    m
}

fn penalty_vector(x: &DesignMatrix, ridge: f64) -> Vec<f64> {
    x.roles
        .iter()
        .map(|role| {
            if *role == ColumnRole::Intercept {
                0.0
            } else {
                ridge
            }
        })
        .collect()
}

fn penalty_term(beta: &Array1<f64>, penalties: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (b, l) in beta.iter().zip(penalties) {
        acc.add(l * b * b);
    }
    0.5 * acc.value()
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// Exponential-family Newton iteration (logit / Poisson / negative binomial)
// ---------------------------------------------------------------------------

enum ExpFam {
    Logit,
    Poisson,
    /// NB2 with size r = 1/α.
    NegBin { r: f64 },
}

impl ExpFam {
    fn mean(&self, eta: f64) -> f64 {
        match self {
            ExpFam::Logit => sigmoid(eta),
            ExpFam::Poisson | ExpFam::NegBin { .. } => eta.exp(),
        }
    }

    /// dℓ/dη for one observation.
    fn score(&self, y: f64, mu: f64) -> f64 {
        match self {
            ExpFam::Logit | ExpFam::Poisson => y - mu,
            ExpFam::NegBin { r } => r * (y - mu) / (r + mu),
        }
    }

    /// Fisher weight for one observation.
    fn weight(&self, mu: f64) -> f64 {
        match self {
            ExpFam::Logit => mu * (1.0 - mu),
            ExpFam::Poisson => mu,
            ExpFam::NegBin { r } => mu * r / (r + mu),
        }
    }

    fn loglik(&self, y: &[f64], eta: &Array1<f64>, ln_fact: &[f64]) -> f64 {
        let mut acc = KahanSum::new();
        match self {
            ExpFam::Logit => {
                for (yi, ei) in y.iter().zip(eta) {
                    acc.add(yi * ei - softplus(*ei));
                }
            }
            ExpFam::Poisson => {
                for ((yi, ei), lf) in y.iter().zip(eta).zip(ln_fact) {
                    acc.add(yi * ei - ei.exp() - lf);
                }
            }
            ExpFam::NegBin { r } => {
                for ((yi, ei), lf) in y.iter().zip(eta).zip(ln_fact) {
                    acc.add(negbin_obs_loglik(*yi, *ei, *r, *lf));
                }
            }
        }
        acc.value()
    }
}

/// NB2 log-likelihood of one observation with integer y, written so the
/// Poisson limit r → ∞ stays accurate: the usual lnΓ(y+r) − lnΓ(r) difference
/// is evaluated as Σ_{j<y} ln(r+j), which is exact for integer y and free of
/// cancellation at large r.
fn negbin_obs_loglik(y: f64, eta: f64, r: f64, ln_fact: f64) -> f64 {
    let mu = eta.exp();
    let yi = y as u64;
    let mut rising = KahanSum::new();
    for j in 0..yi {
        rising.add((r + j as f64).ln());
    }
    rising.value() - ln_fact + y * eta - y * (r + mu).ln() - r * (mu / r).ln_1p()
}

struct NewtonState {
    beta: Array1<f64>,
    loglik: f64,
    iterations: usize,
    grad_norm: f64,
    information: Array2<f64>,
    converged: bool,
}

fn newton_exp_fam(
    fam: &ExpFam,
    x: &Array2<f64>,
    y: &[f64],
    ln_fact: &[f64],
    penalties: &[f64],
    tol: f64,
    max_iter: usize,
    beta0: Array1<f64>,
) -> Result<NewtonState> {
    let mut beta = beta0;
    let mut eta = x.dot(&beta);
    let mut loglik = fam.loglik(y, &eta, ln_fact);
    let mut penalized = loglik - penalty_term(&beta, penalties);
    let mut iterations = 0usize;

    loop {
        let mu: Array1<f64> = eta.iter().map(|&e| fam.mean(e)).collect();
        let scores: Array1<f64> =
            y.iter().zip(&mu).map(|(&yi, &mi)| fam.score(yi, mi)).collect();
        let weights: Array1<f64> = mu.iter().map(|&mi| fam.weight(mi)).collect();
        let mut grad = x.t().dot(&scores);
        for (g, (b, l)) in grad.iter_mut().zip(beta.iter().zip(penalties)) {
            *g -= l * b;
        }
        let grad_norm = max_abs(&grad);
        let information = weighted_cross(x, &weights, penalties);

        if grad_norm <= tol {
            return Ok(NewtonState {
                beta,
                loglik,
                iterations,
                grad_norm,
                information,
                converged: true,
            });
        }
        if iterations >= max_iter {
            return Ok(NewtonState {
                beta,
                loglik,
                iterations,
                grad_norm,
                information,
                converged: false,
            });
        }
        iterations += 1;

        let delta = chol_solve(&information, grad.as_slice().unwrap(), "newton step")?;

        let mut step = 1.0;
        let mut accepted = false;
        // near the optimum a Newton step improves the objective by less than
        // float resolution; accept anything within that noise floor
        let floor = penalized - 1e-14 * (1.0 + penalized.abs());
        for _ in 0..60 {
            let candidate = &beta + &(&delta * step);
            let eta_c = x.dot(&candidate);
            let ll_c = fam.loglik(y, &eta_c, ln_fact);
            let pl_c = ll_c - penalty_term(&candidate, penalties);
            if pl_c.is_finite() && pl_c >= floor {
                beta = candidate;
                eta = eta_c;
                loglik = ll_c;
                penalized = pl_c;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // the line search stalled; report the current iterate
            return Ok(NewtonState {
                beta,
                loglik,
                iterations,
                grad_norm,
                information,
                converged: false,
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Negative binomial dispersion updates
// ---------------------------------------------------------------------------

const ALPHA_MIN: f64 = 1e-12;
const ALPHA_MAX: f64 = 1e8;

/// The dispersion optimum can sit on the boundary of its allowed range (for
/// underdispersed data α wants to be 0); a gradient pointing outward there
/// counts as converged.
fn at_dispersion_boundary(alpha: f64, dl_dtheta: f64) -> bool {
    (alpha <= ALPHA_MIN * 1.000001 && dl_dtheta < 0.0)
        || (alpha >= ALPHA_MAX * 0.999999 && dl_dtheta > 0.0)
}

fn moment_alpha(y: &[f64], mu: &Array1<f64>) -> f64 {
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (yi, mi) in y.iter().zip(mu) {
        num.add((yi - mi) * (yi - mi) - mi);
        den.add(mi * mi);
    }
    let alpha = num.value() / den.value();
    alpha.clamp(1e-8, ALPHA_MAX)
}

/// dℓ/dθ at θ = ln α, with β (hence η) held fixed.
fn negbin_dl_dtheta(y: &[f64], eta: &Array1<f64>, alpha: f64) -> f64 {
    let r = 1.0 / alpha;
    let mut dl_dr = KahanSum::new();
    for (yi, ei) in y.iter().zip(eta) {
        let mu = ei.exp();
        let mut harmonic = KahanSum::new();
        for j in 0..(*yi as u64) {
            harmonic.add(1.0 / (r + j as f64));
        }
        dl_dr.add(harmonic.value() + (mu - yi) / (r + mu) - (mu / r).ln_1p());
    }
    -r * dl_dr.value()
}

fn negbin_loglik_at(y: &[f64], eta: &Array1<f64>, ln_fact: &[f64], alpha: f64) -> f64 {
    ExpFam::NegBin { r: 1.0 / alpha }.loglik(y, eta, ln_fact)
}

/// One-dimensional Newton ascent on θ = ln α with a numeric second
/// derivative and step halving.
fn update_alpha(y: &[f64], eta: &Array1<f64>, ln_fact: &[f64], alpha0: f64, tol: f64) -> f64 {
    let mut theta = alpha0.ln();
    let mut ll = negbin_loglik_at(y, eta, ln_fact, theta.exp());
    for _ in 0..40 {
        let d = negbin_dl_dtheta(y, eta, theta.exp());
        if d.abs() <= tol || at_dispersion_boundary(theta.exp(), d) {
            break;
        }
        let h = 1e-4 * theta.abs().max(1.0);
        let d_hi = negbin_dl_dtheta(y, eta, (theta + h).exp());
        let d_lo = negbin_dl_dtheta(y, eta, (theta - h).exp());
        let dd = (d_hi - d_lo) / (2.0 * h);
        let mut step = if dd < -1e-12 { -d / dd } else { d.signum() * 0.5 };
        step = step.clamp(-2.0, 2.0);
        let mut accepted = false;
        let floor = ll - 1e-14 * (1.0 + ll.abs());
        for _ in 0..30 {
            let theta_c = (theta + step).clamp(ALPHA_MIN.ln(), ALPHA_MAX.ln());
            let ll_c = negbin_loglik_at(y, eta, ln_fact, theta_c.exp());
            if ll_c.is_finite() && ll_c >= floor && (theta_c - theta).abs() > 0.0 {
                theta = theta_c;
                ll = ll_c;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    theta.exp()
}

// ---------------------------------------------------------------------------
// Public univariate fit
// ---------------------------------------------------------------------------

/// Fits `family` by penalized maximum likelihood. Ridge applies to every
/// non-intercept coefficient. Logit outcomes must be 0/1; negative-binomial
/// outcomes must be non-negative integers.
pub fn fit_glm(
    family: Family,
    x: &DesignMatrix,
    y: &[f64],
    opts: &GlmOptions,
) -> Result<GlmFit> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "{} design rows but {} outcomes",
            n,
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("empty outcome vector"));
    }
    match family {
        Family::Logit => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::invalid("logit outcomes must be 0 or 1"));
            }
        }
        Family::NegBin => {
            if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || !v.is_finite()) {
                return Err(Error::invalid(
                    "negative-binomial outcomes must be non-negative integers",
                ));
            }
        }
        Family::Gaussian => {}
    }
    let penalties = penalty_vector(x, opts.ridge);

    match family {
        Family::Gaussian => fit_gaussian(x, y, &penalties, opts),
        Family::Logit => {
            let state = newton_exp_fam(
                &ExpFam::Logit,
                &x.values,
                y,
                &[],
                &penalties,
                opts.tol,
                opts.max_iter,
                Array1::zeros(x.p()),
            )?;
            finish_exp_fam(Family::Logit, x, n, state, None)
        }
        Family::NegBin => fit_negbin(x, y, &penalties, opts),
    }
}

fn finish_exp_fam(
    family: Family,
    x: &DesignMatrix,
    n: usize,
    state: NewtonState,
    dispersion: Option<f64>,
) -> Result<GlmFit> {
    if !state.converged {
        return Err(Error::NonConvergence {
            iterations: state.iterations,
            grad_norm: state.grad_norm,
            last_coefficients: state.beta.to_vec(),
        });
    }
    Ok(GlmFit {
        family,
        coefficients: state.beta.to_vec(),
        dispersion,
        log_likelihood: state.loglik,
        convergence: Convergence {
            iterations: state.iterations,
            grad_norm: state.grad_norm,
        },
        information: state.information,
        column_names: x.names.clone(),
        n,
    })
}

fn fit_gaussian(
    x: &DesignMatrix,
    y: &[f64],
    penalties: &[f64],
    _opts: &GlmOptions,
) -> Result<GlmFit> {
    let n = x.n();
    let p = x.p();
    let xtx = weighted_cross(&x.values, &Array1::ones(n), penalties);
    let xty = x.t_dot(y);
    let beta = chol_solve(&xtx, xty.as_slice().unwrap(), "gaussian normal equations")?;

    let fitted = x.values.dot(&beta);
    let mut rss = KahanSum::new();
    for (yi, fi) in y.iter().zip(&fitted) {
        rss.add((yi - fi) * (yi - fi));
    }
    let rss = rss.value();
    let residual_df = if n > p { (n - p) as f64 } else { n as f64 };
    let sigma2 = (rss / residual_df).max(1e-30);
    let sigma2_mle = (rss / n as f64).max(1e-30);
    let log_likelihood =
        -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2_mle).ln() + 1.0);

    // normal-equation residual, in the same units as the score
    let mut grad = xty - xtx.dot(&beta);
    for g in grad.iter_mut() {
        *g /= sigma2;
    }
    let information = xtx.mapv(|v| v / sigma2);

    Ok(GlmFit {
        family: Family::Gaussian,
        coefficients: beta.to_vec(),
        dispersion: None,
        log_likelihood,
        convergence: Convergence {
            iterations: 1,
            grad_norm: max_abs(&grad),
        },
        information,
        column_names: x.names.clone(),
        n,
    })
}

impl DesignMatrix {
    fn t_dot(&self, v: &[f64]) -> Array1<f64> {
        self.values.t().dot(&Array1::from_vec(v.to_vec()))
    }
}

fn fit_negbin(
    x: &DesignMatrix,
    y: &[f64],
    penalties: &[f64],
    opts: &GlmOptions,
) -> Result<GlmFit> {
    let n = x.n();
    let ln_fact: Vec<f64> = y.iter().map(|&v| ln_gamma(v + 1.0)).collect();

    // Poisson warm start for β and the moment estimate of α.
    let warm = newton_exp_fam(
        &ExpFam::Poisson,
        &x.values,
        y,
        &ln_fact,
        penalties,
        opts.tol.max(1e-6),
        50,
        Array1::zeros(x.p()),
    )?;
    let mut beta = warm.beta;
    let mut eta = x.values.dot(&beta);
    let mu: Array1<f64> = eta.iter().map(|&e| e.exp()).collect();
    let mut alpha = opts
        .fixed_dispersion
        .unwrap_or_else(|| moment_alpha(y, &mu))
        .clamp(ALPHA_MIN, ALPHA_MAX);

    let mut iterations = warm.iterations;
    let mut last_grad_norm = f64::INFINITY;
    let mut state = None;
    for _ in 0..opts.max_iter {
        let run = newton_exp_fam(
            &ExpFam::NegBin { r: 1.0 / alpha },
            &x.values,
            y,
            &ln_fact,
            penalties,
            opts.tol,
            25,
            beta.clone(),
        )?;
        iterations += run.iterations;
        beta = run.beta.clone();
        eta = x.values.dot(&beta);

        if opts.fixed_dispersion.is_none() {
            alpha = update_alpha(y, &eta, &ln_fact, alpha, opts.tol);
        }

        // joint convergence at the updated (β, α)
        let fam = ExpFam::NegBin { r: 1.0 / alpha };
        let mu: Array1<f64> = eta.iter().map(|&e| fam.mean(e)).collect();
        let scores: Array1<f64> =
            y.iter().zip(&mu).map(|(&yi, &mi)| fam.score(yi, mi)).collect();
        let mut grad = x.values.t().dot(&scores);
        for (g, (b, l)) in grad.iter_mut().zip(beta.iter().zip(penalties)) {
            *g -= l * b;
        }
        let beta_grad = max_abs(&grad);
        let alpha_grad = if opts.fixed_dispersion.is_some() {
            0.0
        } else {
            let d = negbin_dl_dtheta(y, &eta, alpha);
            if at_dispersion_boundary(alpha, d) {
                0.0
            } else {
                d.abs()
            }
        };
        let grad_norm = beta_grad.max(alpha_grad);
        last_grad_norm = grad_norm;
        if grad_norm <= opts.tol {
            let weights: Array1<f64> = mu.iter().map(|&mi| fam.weight(mi)).collect();
            state = Some(NewtonState {
                beta: beta.clone(),
                loglik: fam.loglik(y, &eta, &ln_fact),
                iterations,
                grad_norm,
                information: weighted_cross(&x.values, &weights, penalties),
                converged: true,
            });
            break;
        }
    }

    match state {
        Some(state) => finish_exp_fam(Family::NegBin, x, n, state, Some(alpha)),
        None => Err(Error::NonConvergence {
            iterations,
            grad_norm: last_grad_norm,
            last_coefficients: beta.to_vec(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Multinomial logit
// ---------------------------------------------------------------------------

/// A fitted multinomial-logit model with category 0 as the reference.
#[derive(Debug, Clone)]
pub struct MultinomFit {
    /// (K−1)×p coefficients; row t−1 belongs to category t.
    pub coefficients: Array2<f64>,
    pub k: usize,
    pub ridge: f64,
    pub log_likelihood: f64,
    pub convergence: Convergence,
    pub column_names: Vec<String>,
}

fn multinomial_forward(
    x: &Array2<f64>,
    coefficients: &Array2<f64>,
    labels: Option<&[usize]>,
) -> (Array2<f64>, f64) {
    let n = x.nrows();
    let k = coefficients.nrows() + 1;
    let eta = x.dot(&coefficients.t()); // N×(K−1)
    let mut probs = Array2::zeros((n, k));
    let mut loglik = KahanSum::new();
    for i in 0..n {
        let row = eta.row(i);
        let m = row.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let mut denom = KahanSum::new();
        denom.add((-m).exp());
        for &e in row {
            denom.add((e - m).exp());
        }
        let lse = m + denom.value().ln();
        probs[[i, 0]] = (-lse).exp().max(1e-300);
        for t in 1..k {
            probs[[i, t]] = (eta[[i, t - 1]] - lse).exp().max(1e-300);
        }
        if let Some(labels) = labels {
            let t = labels[i];
            let e = if t == 0 { 0.0 } else { eta[[i, t - 1]] };
            loglik.add(e - lse);
        }
    }
    (probs, loglik.value())
}

/// Fits a ridge-penalized multinomial logit of `labels` on the design by full
/// Newton iteration with step halving. Every class must be non-empty.
pub fn fit_multinomial(
    x: &DesignMatrix,
    labels: &[usize],
    k: usize,
    opts: &GlmOptions,
) -> Result<MultinomFit> {
    let n = x.n();
    let p = x.p();
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} design rows but {} labels",
            n,
            labels.len()
        )));
    }
    if k < 2 {
        return Err(Error::invalid("need at least two categories"));
    }
    let mut counts = vec![0usize; k];
    for &t in labels {
        if t >= k {
            return Err(Error::invalid(format!("label {t} out of range for K={k}")));
        }
        counts[t] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCategory(empty.to_string()));
    }

    let penalties = penalty_vector(x, opts.ridge);
    let dim = (k - 1) * p;
    let mut coefficients: Array2<f64> = Array2::zeros((k - 1, p));
    let (_, mut loglik) = multinomial_forward(&x.values, &coefficients, Some(labels));
    let mut penalized = loglik; // zero coefficients carry no penalty

    let indicator: Vec<Array1<f64>> = (1..k)
        .map(|t| {
            Array1::from_iter(labels.iter().map(|&l| if l == t { 1.0 } else { 0.0 }))
        })
        .collect();

    let mut iterations = 0usize;
    loop {
        let (probs, _) = multinomial_forward(&x.values, &coefficients, None);

        // stacked gradient, class-major
        let mut grad = Array1::zeros(dim);
        for t in 1..k {
            let residual = &indicator[t - 1] - &probs.column(t);
            let mut g = x.values.t().dot(&residual);
            for (j, gj) in g.iter_mut().enumerate() {
                *gj -= penalties[j] * coefficients[[t - 1, j]];
            }
            grad.slice_mut(ndarray::s![(t - 1) * p..t * p]).assign(&g);
        }
        let grad_norm = max_abs(&grad);

        if grad_norm <= opts.tol {
            return Ok(MultinomFit {
                coefficients,
                k,
                ridge: opts.ridge,
                log_likelihood: loglik,
                convergence: Convergence {
                    iterations,
                    grad_norm,
                },
                column_names: x.names.clone(),
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                grad_norm,
                last_coefficients: coefficients.iter().copied().collect(),
            });
        }
        iterations += 1;

        // negated Hessian, assembled blockwise
        let zero_penalties = vec![0.0; p];
        let mut hess = Array2::zeros((dim, dim));
        for a in 1..k {
            for b in a..k {
                let w: Array1<f64> = (0..n)
                    .map(|i| {
                        let pa = probs[[i, a]];
                        let pb = probs[[i, b]];
                        if a == b {
                            pa * (1.0 - pa)
                        } else {
                            -pa * pb
                        }
                    })
                    .collect();
                let block = weighted_cross(
                    &x.values,
                    &w,
                    if a == b { &penalties } else { &zero_penalties },
                );
                let (ra, rb) = ((a - 1) * p, (b - 1) * p);
                for i in 0..p {
                    for j in 0..p {
                        hess[[ra + i, rb + j]] = block[[i, j]];
                        if a != b {
                            hess[[rb + j, ra + i]] = block[[i, j]];
                        }
                    }
                }
            }
        }

        let delta = chol_solve(&hess, grad.as_slice().unwrap(), "multinomial newton step")?;

        let mut step = 1.0;
        let mut accepted = false;
        let floor = penalized - 1e-14 * (1.0 + penalized.abs());
        for _ in 0..60 {
            let mut candidate = coefficients.clone();
            for t in 0..(k - 1) {
                for j in 0..p {
                    candidate[[t, j]] += step * delta[t * p + j];
                }
            }
            let (_, ll_c) = multinomial_forward(&x.values, &candidate, Some(labels));
            let mut pen = KahanSum::new();
            for t in 0..(k - 1) {
                for j in 0..p {
                    pen.add(penalties[j] * candidate[[t, j]] * candidate[[t, j]]);
                }
            }
            let pl_c = ll_c - 0.5 * pen.value();
            if pl_c.is_finite() && pl_c >= floor {
                coefficients = candidate;
                loglik = ll_c;
                penalized = pl_c;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                grad_norm,
                last_coefficients: coefficients.iter().copied().collect(),
            });
        }
    }
}

/// Class probabilities via softmax over the fitted linear predictors, with
/// the reference category's predictor fixed at zero. Rows sum to 1.
pub fn predict_proba(fit: &MultinomFit, x: &DesignMatrix) -> Result<Array2<f64>> {
    if x.names != fit.column_names {
        return Err(Error::Dimension(
            "design columns do not match the fitted model".into(),
        ));
    }
    let (probs, _) = multinomial_forward(&x.values, &fit.coefficients, None);
    Ok(probs)
}

fn exp_fam_for(family: Family, dispersion: Option<f64>) -> Result<ExpFam> {
    match family {
        Family::Logit => Ok(ExpFam::Logit),
        Family::NegBin => {
            let alpha = dispersion.ok_or_else(|| {
                Error::invalid("negative-binomial evaluation needs a dispersion value")
            })?;
            if alpha <= 0.0 {
                return Err(Error::invalid("dispersion must be positive"));
            }
            Ok(ExpFam::NegBin { r: 1.0 / alpha })
        }
        Family::Gaussian => Err(Error::invalid("gaussian handled separately")),
    }
}

/// Unpenalized log-likelihood at an arbitrary coefficient vector. The
/// Gaussian value has its variance profiled out.
pub fn log_likelihood(
    family: Family,
    x: &DesignMatrix,
    y: &[f64],
    beta: &[f64],
    dispersion: Option<f64>,
) -> Result<f64> {
    if beta.len() != x.p() || y.len() != x.n() {
        return Err(Error::Dimension("coefficient or outcome length".into()));
    }
    let beta = Array1::from_vec(beta.to_vec());
    let eta = x.values.dot(&beta);
    match family {
        Family::Gaussian => {
            let n = x.n() as f64;
            let mut rss = KahanSum::new();
            for (yi, ei) in y.iter().zip(&eta) {
                rss.add((yi - ei) * (yi - ei));
            }
            let sigma2 = (rss.value() / n).max(1e-30);
            Ok(-0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0))
        }
        Family::Logit => Ok(ExpFam::Logit.loglik(y, &eta, &[])),
        Family::NegBin => {
            let fam = exp_fam_for(family, dispersion)?;
            let ln_fact: Vec<f64> = y.iter().map(|&v| ln_gamma(v + 1.0)).collect();
            Ok(fam.loglik(y, &eta, &ln_fact))
        }
    }
}

/// Analytic gradient of [`log_likelihood`] with respect to the coefficients.
pub fn log_likelihood_gradient(
    family: Family,
    x: &DesignMatrix,
    y: &[f64],
    beta: &[f64],
    dispersion: Option<f64>,
) -> Result<Vec<f64>> {
    if beta.len() != x.p() || y.len() != x.n() {
        return Err(Error::Dimension("coefficient or outcome length".into()));
    }
    let beta = Array1::from_vec(beta.to_vec());
    let eta = x.values.dot(&beta);
    let scores: Array1<f64> = match family {
        Family::Gaussian => {
            // profiled variance: dℓ/dβ = n X'(y − η) / RSS
            let n = x.n() as f64;
            let mut rss = KahanSum::new();
            for (yi, ei) in y.iter().zip(&eta) {
                rss.add((yi - ei) * (yi - ei));
            }
            let scale = n / rss.value().max(1e-30);
            y.iter().zip(&eta).map(|(yi, ei)| scale * (yi - ei)).collect()
        }
        Family::Logit | Family::NegBin => {
            let fam = exp_fam_for(family, dispersion)?;
            y.iter()
                .zip(&eta)
                .map(|(&yi, &ei)| fam.score(yi, fam.mean(ei)))
                .collect()
        }
    };
    Ok(x.values.t().dot(&scores).to_vec())
}

/// Unpenalized multinomial log-likelihood at arbitrary (K−1)×p coefficients.
pub fn multinomial_log_likelihood(
    x: &DesignMatrix,
    labels: &[usize],
    coefficients: &Array2<f64>,
) -> Result<f64> {
    if coefficients.ncols() != x.p() || labels.len() != x.n() {
        return Err(Error::Dimension("coefficient shape or label length".into()));
    }
    let (_, ll) = multinomial_forward(&x.values, coefficients, Some(labels));
    Ok(ll)
}

/// Analytic gradient of [`multinomial_log_likelihood`], stacked class-major.
pub fn multinomial_gradient(
    x: &DesignMatrix,
    labels: &[usize],
    coefficients: &Array2<f64>,
) -> Result<Vec<f64>> {
    if coefficients.ncols() != x.p() || labels.len() != x.n() {
        return Err(Error::Dimension("coefficient shape or label length".into()));
    }
    let p = x.p();
    let k = coefficients.nrows() + 1;
    let (probs, _) = multinomial_forward(&x.values, coefficients, None);
    let mut grad = Vec::with_capacity((k - 1) * p);
    for t in 1..k {
        let residual: Array1<f64> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (if l == t { 1.0 } else { 0.0 }) - probs[[i, t]])
            .collect();
        grad.extend(x.values.t().dot(&residual).iter().copied());
    }
    Ok(grad)
}

/// Wald test of the named coefficient block: W = β_b' V_b⁻¹ β_b reported as
/// F = W/q with denominator degrees of freedom n − p.
pub fn joint_test(fit: &GlmFit, block: &[String]) -> Result<JointTest> {
    if block.is_empty() {
        return Err(Error::invalid("empty coefficient block"));
    }
    let indices: Vec<usize> = block
        .iter()
        .map(|name| {
            fit.column_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::invalid(format!("unknown coefficient {name:?}")))
        })
        .collect::<Result<_>>()?;
    let cov = fit.covariance()?;
    let q = indices.len();
    let mut block_cov = Array2::zeros((q, q));
    for (i, &a) in indices.iter().enumerate() {
        for (j, &b) in indices.iter().enumerate() {
            block_cov[[i, j]] = cov[[a, b]];
        }
    }
    let beta_block: Vec<f64> = indices.iter().map(|&j| fit.coefficients[j]).collect();
    let solved = chol_solve(&block_cov, &beta_block, "joint test block")?;
    let mut wald = KahanSum::new();
    for (b, s) in beta_block.iter().zip(&solved) {
        wald.add(b * s);
    }
    let p = fit.column_names.len();
    if fit.n <= p {
        return Err(Error::invalid(format!(
            "joint test needs n > p, got n={} p={}",
            fit.n, p
        )));
    }
    Ok(JointTest {
        f: wald.value() / q as f64,
        num_df: q,
        den_df: fit.n - p,
        block: block.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ColumnRole, DesignMatrix};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    pub(crate) fn design(values: Array2<f64>, names: &[&str]) -> DesignMatrix {
        let roles: Vec<ColumnRole> = names
            .iter()
            .map(|n| {
                if *n == "intercept" {
                    ColumnRole::Intercept
                } else {
                    ColumnRole::Main
                }
            })
            .collect();
        DesignMatrix::from_parts(
            values,
            names.iter().map(|s| s.to_string()).collect(),
            roles,
        )
        .unwrap()
    }

    fn intercept_only(n: usize) -> DesignMatrix {
        design(Array2::ones((n, 1)), &["intercept"])
    }

    #[test]
    fn gaussian_constant_fit() {
        let x = intercept_only(3);
        let fit = fit_glm(Family::Gaussian, &x, &[3.0, 3.0, 3.0], &GlmOptions::default()).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 3.0, epsilon = 1e-12);
        let fitted = fit.predict_mean(&x).unwrap();
        assert!(fitted.iter().all(|&f| (f - 3.0).abs() < 1e-12));
    }

    fn two_field_design_and_labels() -> (DesignMatrix, Vec<f64>) {
        // ten records, dummy = 1 when the co-author count is high;
        // group sizes (4,1) and (1,4)
        let mut values = Array2::ones((10, 2));
        for i in 0..10 {
            values[[i, 1]] = if i < 5 { 0.0 } else { 1.0 };
        }
        let field2 = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        (design(values, &["intercept", "high_coauthors"]), field2)
    }

    #[test]
    fn logit_saturated_probabilities_match_cell_frequencies() {
        let (x, y) = two_field_design_and_labels();
        let opts = GlmOptions {
            ridge: 1e-10,
            tol: 1e-12,
            ..GlmOptions::default()
        };
        let fit = fit_glm(Family::Logit, &x, &y, &opts).unwrap();
        let p = fit.predict_mean(&x).unwrap();
        // P(field 2 | low co-authors) = 0.2 so P(field 1 | low) = 0.8
        assert_abs_diff_eq!(p[0], 0.2, epsilon = 1e-8);
        assert_abs_diff_eq!(p[9], 0.8, epsilon = 1e-8);
    }

    #[test]
    fn logit_outcome_validation() {
        let x = intercept_only(3);
        assert!(fit_glm(Family::Logit, &x, &[0.0, 1.0, 2.0], &GlmOptions::default()).is_err());
    }

    #[test]
    fn negbin_outcome_validation() {
        let x = intercept_only(3);
        assert!(fit_glm(Family::NegBin, &x, &[0.0, 1.5, 2.0], &GlmOptions::default()).is_err());
        assert!(fit_glm(Family::NegBin, &x, &[0.0, -1.0, 2.0], &GlmOptions::default()).is_err());
    }

    #[test]
    fn binary_multinomial_matches_logit() {
        let (x, y) = two_field_design_and_labels();
        let labels: Vec<usize> = y.iter().map(|&v| v as usize).collect();
        let opts = GlmOptions {
            ridge: 1e-10,
            tol: 1e-12,
            ..GlmOptions::default()
        };
        let logit = fit_glm(Family::Logit, &x, &y, &opts).unwrap();
        let multi = fit_multinomial(&x, &labels, 2, &opts).unwrap();
        let p_logit = logit.predict_mean(&x).unwrap();
        let p_multi = predict_proba(&multi, &x).unwrap();
        for i in 0..10 {
            assert_abs_diff_eq!(p_multi[[i, 1]], p_logit[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_coefficients_give_uniform_probabilities() {
        let x = intercept_only(4);
        let fit = MultinomFit {
            coefficients: Array2::zeros((2, 1)),
            k: 3,
            ridge: 0.0,
            log_likelihood: 0.0,
            convergence: Convergence {
                iterations: 0,
                grad_norm: 0.0,
            },
            column_names: x.names.clone(),
        };
        let probs = predict_proba(&fit, &x).unwrap();
        for i in 0..4 {
            for t in 0..3 {
                assert_abs_diff_eq!(probs[[i, t]], 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn probability_rows_sum_to_one() {
        let mut values = Array2::ones((30, 3));
        for i in 0..30 {
            values[[i, 1]] = (i as f64 * 0.37).sin();
            values[[i, 2]] = (i as f64 * 0.53).cos();
        }
        let x = design(values, &["intercept", "a", "b"]);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let fit = fit_multinomial(&x, &labels, 3, &GlmOptions::default()).unwrap();
        let probs = predict_proba(&fit, &x).unwrap();
        for i in 0..30 {
            let s: f64 = (0..3).map(|t| probs[[i, t]]).sum();
            assert!((s - 1.0).abs() <= 1e-10, "row {i} sums to {s}");
        }
    }

    #[test]
    fn empty_class_is_an_error() {
        let x = intercept_only(4);
        let labels = vec![0usize, 0, 1, 1];
        let err = fit_multinomial(&x, &labels, 3, &GlmOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyCategory(_)));
    }

    #[test]
    fn identical_group_means_give_zero_f() {
        let mut values = Array2::ones((4, 2));
        values[[2, 1]] = 1.0;
        values[[3, 1]] = 1.0;
        values[[0, 1]] = 0.0;
        values[[1, 1]] = 0.0;
        let x = design(values, &["intercept", "g"]);
        let opts = GlmOptions {
            ridge: 0.0,
            ..GlmOptions::default()
        };
        let fit = fit_glm(Family::Gaussian, &x, &[1.0, 1.0, 1.0, 1.0], &opts).unwrap();
        let jt = joint_test(&fit, &["g".to_string()]).unwrap();
        assert_abs_diff_eq!(jt.f, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn gaussian_joint_test_matches_hand_anova() {
        // groups (0,2) and (10,12): SSB=100, SSW=4, F = 100 / (4/2) = 50
        let mut values = Array2::ones((4, 2));
        values[[0, 1]] = 0.0;
        values[[1, 1]] = 0.0;
        values[[2, 1]] = 1.0;
        values[[3, 1]] = 1.0;
        let x = design(values, &["intercept", "g"]);
        let opts = GlmOptions {
            ridge: 0.0,
            ..GlmOptions::default()
        };
        let fit = fit_glm(Family::Gaussian, &x, &[0.0, 2.0, 10.0, 12.0], &opts).unwrap();
        let jt = joint_test(&fit, &["g".to_string()]).unwrap();
        assert_abs_diff_eq!(jt.f, 50.0, epsilon = 1e-9);
        assert_eq!(jt.num_df, 1);
        assert_eq!(jt.den_df, 2);
    }

    #[test]
    fn joint_test_df_counts_treatment_dummies() {
        // ten categories, nine dummies
        let k = 10;
        let n = 200;
        let mut values = Array2::zeros((n, k));
        let mut names = vec!["intercept".to_string()];
        names.extend((1..k).map(|t| format!("treat_{t}")));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            values[[i, 0]] = 1.0;
            let t = i % k;
            if t > 0 {
                values[[i, t]] = 1.0;
            }
            y.push((t as f64) + ((i as f64) * 0.77).sin());
        }
        let roles: Vec<ColumnRole> = (0..k)
            .map(|j| {
                if j == 0 {
                    ColumnRole::Intercept
                } else {
                    ColumnRole::Main
                }
            })
            .collect();
        let x = DesignMatrix::from_parts(values, names.clone(), roles).unwrap();
        let fit = fit_glm(Family::Gaussian, &x, &y, &GlmOptions::default()).unwrap();
        let jt = joint_test(&fit, &names[1..]).unwrap();
        assert_eq!(jt.num_df, 9);
        assert_eq!(jt.den_df, n - k);
    }

    #[test]
    fn ridge_shrinks_non_intercept_norm() {
        let mut values = Array2::ones((40, 3));
        let mut y = Vec::new();
        for i in 0..40 {
            values[[i, 1]] = (i as f64 * 0.31).sin();
            values[[i, 2]] = (i as f64 * 0.17).cos();
            y.push(1.0 + 2.0 * values[[i, 1]] - values[[i, 2]] + (i as f64 * 0.05).sin());
        }
        let x = design(values, &["intercept", "a", "b"]);
        let norm = |ridge: f64| {
            let fit = fit_glm(
                Family::Gaussian,
                &x,
                &y,
                &GlmOptions {
                    ridge,
                    ..GlmOptions::default()
                },
            )
            .unwrap();
            (fit.coefficients[1].powi(2) + fit.coefficients[2].powi(2)).sqrt()
        };
        assert!(norm(10.0) <= norm(1e-4));
    }

    #[test]
    fn singular_design_with_zero_ridge_advises_ridge() {
        let mut values = Array2::ones((5, 3));
        for i in 0..5 {
            values[[i, 1]] = i as f64;
            values[[i, 2]] = 2.0 * i as f64; // collinear
        }
        let x = design(values, &["intercept", "a", "b"]);
        let err = fit_glm(
            Family::Gaussian,
            &x,
            &[0.0, 1.0, 2.0, 3.0, 4.0],
            &GlmOptions {
                ridge: 0.0,
                ..GlmOptions::default()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("ridge"));
        assert!(err.is_numerical());
    }

    #[test]
    fn reference_relabeling_leaves_probabilities_unchanged() {
        let mut values = Array2::ones((60, 2));
        for i in 0..60 {
            values[[i, 1]] = (i as f64 * 0.23).sin() * 2.0;
        }
        let x = design(values, &["intercept", "a"]);
        let labels: Vec<usize> = (0..60).map(|i| (i + i / 7) % 3).collect();
        let swapped: Vec<usize> = labels
            .iter()
            .map(|&t| match t {
                0 => 1,
                1 => 0,
                other => other,
            })
            .collect();
        let opts = GlmOptions {
            ridge: 1e-10,
            tol: 1e-12,
            ..GlmOptions::default()
        };
        let base = predict_proba(&fit_multinomial(&x, &labels, 3, &opts).unwrap(), &x).unwrap();
        let perm = predict_proba(&fit_multinomial(&x, &swapped, 3, &opts).unwrap(), &x).unwrap();
        for i in 0..60 {
            assert_abs_diff_eq!(base[[i, 0]], perm[[i, 1]], epsilon = 1e-8);
            assert_abs_diff_eq!(base[[i, 1]], perm[[i, 0]], epsilon = 1e-8);
            assert_abs_diff_eq!(base[[i, 2]], perm[[i, 2]], epsilon = 1e-8);
        }
    }

    #[test]
    fn fits_are_bitwise_deterministic() {
        let (x, y) = two_field_design_and_labels();
        let a = fit_glm(Family::Logit, &x, &y, &GlmOptions::default()).unwrap();
        let b = fit_glm(Family::Logit, &x, &y, &GlmOptions::default()).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
    }

    #[test]
    fn loglik_does_not_decrease_from_start() {
        let (x, y) = two_field_design_and_labels();
        let fit = fit_glm(Family::Logit, &x, &y, &GlmOptions::default()).unwrap();
        let ll_zero = ExpFam::Logit.loglik(&y, &Array1::zeros(10), &[]);
        assert!(fit.log_likelihood >= ll_zero);
    }

    #[test]
    fn negbin_estimates_dispersion_on_overdispersed_counts() {
        // deterministic overdispersed counts around mean 5
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let base = 5.0 + 4.0 * ((i as f64) * 0.9).sin();
                (base + ((i * i % 13) as f64)).round().max(0.0)
            })
            .collect();
        let x = intercept_only(200);
        let fit = fit_glm(Family::NegBin, &x, &y, &GlmOptions::default()).unwrap();
        let alpha = fit.dispersion.unwrap();
        assert!(alpha > 0.0);
        assert!(fit.convergence.grad_norm <= 1e-8);
        assert!(fit.log_likelihood.is_finite());
    }

    #[test]
    fn multinomial_intercept_only_recovers_class_frequencies() {
        let x = intercept_only(10);
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 2, 2];
        let opts = GlmOptions {
            ridge: 1e-10,
            tol: 1e-12,
            ..GlmOptions::default()
        };
        let fit = fit_multinomial(&x, &labels, 3, &opts).unwrap();
        let probs = predict_proba(&fit, &x).unwrap();
        assert_abs_diff_eq!(probs[[0, 0]], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(probs[[0, 1]], 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(probs[[0, 2]], 0.2, epsilon = 1e-8);
    }

    #[test]
    fn predict_dimension_mismatch_is_an_error() {
        let (x, y) = two_field_design_and_labels();
        let fit = fit_glm(Family::Logit, &x, &y, &GlmOptions::default()).unwrap();
        let other = intercept_only(10);
        assert!(fit.predict_mean(&other).is_err());
    }

    #[test]
    fn information_matrix_is_symmetric() {
        let (x, y) = two_field_design_and_labels();
        let fit = fit_glm(Family::Logit, &x, &y, &GlmOptions::default()).unwrap();
        let info = &fit.information;
        for i in 0..info.nrows() {
            for j in 0..info.ncols() {
                assert_abs_diff_eq!(info[[i, j]], info[[j, i]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_loglik_is_finite_even_with_zero_residual() {
        let x = intercept_only(3);
        let fit = fit_glm(Family::Gaussian, &x, &[2.0, 2.0, 2.0], &GlmOptions::default()).unwrap();
        assert!(fit.log_likelihood.is_finite());
    }

    #[test]
    fn unknown_block_name_is_an_error() {
        let (x, y) = two_field_design_and_labels();
        let fit = fit_glm(Family::Gaussian, &x, &y, &GlmOptions::default()).unwrap();
        assert!(joint_test(&fit, &["nope".to_string()]).is_err());
    }

    #[test]
    fn uniform_probability_identity_on_random_design() {
        let values = array![
            [1.0, 0.4, -1.2],
            [1.0, -0.3, 0.8],
            [1.0, 1.7, 0.1],
            [1.0, -0.9, -0.5],
        ];
        let x = design(values, &["intercept", "a", "b"]);
        let fit = MultinomFit {
            coefficients: Array2::zeros((3, 3)),
            k: 4,
            ridge: 0.0,
            log_likelihood: 0.0,
            convergence: Convergence {
                iterations: 0,
                grad_norm: 0.0,
            },
            column_names: x.names.clone(),
        };
        let probs = predict_proba(&fit, &x).unwrap();
        for i in 0..4 {
            let s: f64 = (0..4).map(|t| probs[[i, t]]).sum();
            assert!((s - 1.0).abs() <= 1e-10);
        }
    }
}
