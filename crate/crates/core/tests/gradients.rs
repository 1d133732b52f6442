//! Independent numerical checks of the solvers: central finite differences
//! of the log-likelihoods against the analytic gradients, a hand-rolled
//! Poisson fitter against the small-dispersion negative binomial, and
//! parameter recovery from simulated counts.

use ipw_core::design::{ColumnRole, DesignMatrix};
use ipw_core::glm::{
    fit_glm, log_likelihood, log_likelihood_gradient, multinomial_gradient,
    multinomial_log_likelihood, Family, GlmOptions,
};
use ipw_core::rng::stream_rng;
use ndarray::{Array1, Array2};
use rand::Rng;

fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
    let mut rng = stream_rng(seed, 0);
    let mut values = Array2::ones((n, p));
    for i in 0..n {
        for j in 1..p {
            values[[i, j]] = rng.random_range(-1000..1000i32) as f64 / 500.0;
        }
    }
    let mut names = vec!["intercept".to_string()];
    names.extend((1..p).map(|j| format!("x{j}")));
    let mut roles = vec![ColumnRole::Intercept];
    roles.extend(std::iter::repeat_n(ColumnRole::Main, p - 1));
    DesignMatrix::from_parts(values, names, roles).unwrap()
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, beta: &[f64]) -> Vec<f64> {
    let mut grad = Vec::with_capacity(beta.len());
    for j in 0..beta.len() {
        let h = 1e-5 * beta[j].abs().max(1.0);
        let mut hi = beta.to_vec();
        let mut lo = beta.to_vec();
        hi[j] += h;
        lo[j] -= h;
        grad.push((f(&hi) - f(&lo)) / (2.0 * h));
    }
    grad
}

fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .fold(1.0f64, |m, &v| m.max(v.abs()));
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / scale)
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_gradient_matches_finite_differences() {
    let x = random_design(40, 4, 1);
    let mut rng = stream_rng(2, 0);
    let y: Vec<f64> = (0..40)
        .map(|_| rng.random_range(-500..1500i32) as f64 / 100.0)
        .collect();
    for trial in 0..3u64 {
        let mut rng = stream_rng(3, trial);
        let beta: Vec<f64> = (0..4)
            .map(|_| rng.random_range(-100..100i32) as f64 / 100.0)
            .collect();
        let analytic =
            log_likelihood_gradient(Family::Gaussian, &x, &y, &beta, None).unwrap();
        let fd = fd_gradient(
            |b| log_likelihood(Family::Gaussian, &x, &y, b, None).unwrap(),
            &beta,
        );
        assert!(max_rel_err(&analytic, &fd) <= 1e-6);
    }
}

#[test]
fn logit_gradient_matches_finite_differences() {
    let x = random_design(50, 4, 4);
    let mut rng = stream_rng(5, 0);
    let y: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(0..2u32))).collect();
    for trial in 0..3u64 {
        let mut rng = stream_rng(6, trial);
        let beta: Vec<f64> = (0..4)
            .map(|_| rng.random_range(-150..150i32) as f64 / 100.0)
            .collect();
        let analytic = log_likelihood_gradient(Family::Logit, &x, &y, &beta, None).unwrap();
        let fd = fd_gradient(
            |b| log_likelihood(Family::Logit, &x, &y, b, None).unwrap(),
            &beta,
        );
        assert!(max_rel_err(&analytic, &fd) <= 1e-6);
    }
}

#[test]
fn negbin_gradient_matches_finite_differences() {
    let x = random_design(50, 4, 7);
    let mut rng = stream_rng(8, 0);
    let y: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(0..40u32))).collect();
    for (trial, alpha) in [(0u64, 0.3), (1, 1.2), (2, 0.05)] {
        let mut rng = stream_rng(9, trial);
        let beta: Vec<f64> = (0..4)
            .map(|_| rng.random_range(-80..80i32) as f64 / 100.0)
            .collect();
        let analytic =
            log_likelihood_gradient(Family::NegBin, &x, &y, &beta, Some(alpha)).unwrap();
        let fd = fd_gradient(
            |b| log_likelihood(Family::NegBin, &x, &y, b, Some(alpha)).unwrap(),
            &beta,
        );
        assert!(max_rel_err(&analytic, &fd) <= 1e-6);
    }
}

#[test]
fn multinomial_gradient_matches_finite_differences() {
    let n = 50;
    let p = 4;
    let k = 3;
    let x = random_design(n, p, 10);
    let mut rng = stream_rng(11, 0);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    for trial in 0..3u64 {
        let mut rng = stream_rng(12, trial);
        let flat: Vec<f64> = (0..(k - 1) * p)
            .map(|_| rng.random_range(-100..100i32) as f64 / 100.0)
            .collect();
        let coefficients = Array2::from_shape_vec((k - 1, p), flat.clone()).unwrap();
        let analytic = multinomial_gradient(&x, &labels, &coefficients).unwrap();
        let fd = fd_gradient(
            |b| {
                let c = Array2::from_shape_vec((k - 1, p), b.to_vec()).unwrap();
                multinomial_log_likelihood(&x, &labels, &c).unwrap()
            },
            &flat,
        );
        assert!(max_rel_err(&analytic, &fd) <= 1e-6);
    }
}

/// Inverse-CDF Poisson draw, independent of the library's samplers.
fn poisson_draw(u: f64, mean: f64) -> f64 {
    let mut k = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf && k < 10_000 {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    k as f64
}

fn simulate_negbin(
    x: &DesignMatrix,
    beta: &[f64],
    alpha: f64,
    seed: u64,
) -> Vec<f64> {
    use rand_distr::Distribution;
    let beta = Array1::from_vec(beta.to_vec());
    let eta = x.values.dot(&beta);
    let gamma = rand_distr::Gamma::new(1.0 / alpha, alpha).unwrap();
    eta.iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut rng = stream_rng(seed, i as u64);
            let heterogeneity: f64 = gamma.sample(&mut rng);
            poisson_draw(rng.random(), e.exp() * heterogeneity)
        })
        .collect()
}

#[test]
fn negbin_recovers_simulated_parameters() {
    let n = 1500;
    let x = random_design(n, 3, 13);
    let beta_true = [1.8, 0.45, -0.3];
    let alpha_true = 0.5;
    let y = simulate_negbin(&x, &beta_true, alpha_true, 14);

    let opts = GlmOptions {
        ridge: 1e-10,
        tol: 1e-8,
        ..GlmOptions::default()
    };
    let fit = fit_glm(Family::NegBin, &x, &y, &opts).unwrap();
    let alpha_hat = fit.dispersion.unwrap();

    // the analytic gradient at the returned coefficients is zero to within
    // finite-difference resolution
    let analytic =
        log_likelihood_gradient(Family::NegBin, &x, &y, &fit.coefficients, Some(alpha_hat))
            .unwrap();
    let fd = fd_gradient(
        |b| log_likelihood(Family::NegBin, &x, &y, b, Some(alpha_hat)).unwrap(),
        &fit.coefficients,
    );
    let ll_scale = log_likelihood(Family::NegBin, &x, &y, &fit.coefficients, Some(alpha_hat))
        .unwrap()
        .abs();
    for (a, f) in analytic.iter().zip(&fd) {
        assert!(
            (a - f).abs() <= 1e-6 * ll_scale.max(1.0),
            "gradient {a} vs finite difference {f}"
        );
    }

    // every true coefficient sits inside its 99% Wald interval
    let cov = fit.covariance().unwrap();
    for j in 0..3 {
        let se = cov[[j, j]].sqrt();
        let z = (fit.coefficients[j] - beta_true[j]).abs() / se;
        assert!(z <= 2.5758, "coefficient {j}: |z| = {z}");
    }
    assert!(alpha_hat > 0.55 * alpha_true && alpha_hat < 1.8 * alpha_true);
}

/// Plain Poisson Newton fit, written here as an independent oracle.
fn poisson_mle(x: &DesignMatrix, y: &[f64]) -> Vec<f64> {
    let p = x.p();
    let mut beta = Array1::zeros(p);
    for _ in 0..200 {
        let eta = x.values.dot(&beta);
        let mu: Array1<f64> = eta.iter().map(|&e| e.exp()).collect();
        let residual: Array1<f64> =
            y.iter().zip(&mu).map(|(yi, mi)| yi - mi).collect();
        let grad = x.values.t().dot(&residual);
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) <= 1e-10 {
            break;
        }
        let xw = &x.values * &mu.view().insert_axis(ndarray::Axis(1));
        let hess = x.values.t().dot(&xw);
        let chol = nalgebra::Cholesky::new(nalgebra::DMatrix::from_fn(p, p, |i, j| {
            hess[[i, j]]
        }))
        .unwrap();
        let delta = chol.solve(&nalgebra::DVector::from_iterator(p, grad.iter().copied()));
        for j in 0..p {
            beta[j] += delta[j];
        }
    }
    beta.to_vec()
}

#[test]
fn negbin_with_vanishing_dispersion_matches_poisson() {
    let n = 400;
    let x = random_design(n, 3, 20);
    let beta_true = [1.2, 0.5, -0.4];
    // Poisson data: unit heterogeneity
    let beta = Array1::from_vec(beta_true.to_vec());
    let eta = x.values.dot(&beta);
    let y: Vec<f64> = eta
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut rng = stream_rng(21, i as u64);
            poisson_draw(rng.random(), e.exp())
        })
        .collect();

    let oracle = poisson_mle(&x, &y);
    let opts = GlmOptions {
        ridge: 0.0,
        tol: 1e-10,
        fixed_dispersion: Some(1e-12),
        ..GlmOptions::default()
    };
    let fit = fit_glm(Family::NegBin, &x, &y, &opts).unwrap();
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-4, "negbin {a} vs poisson {b}");
    }
}
