//! End-to-end pipeline: solve the assembled system by minimum-norm least
//! squares, predict on a dense grid, score against oracles, and attach
//! conditioning diagnostics to every result.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_ode, Collocation, LinearSystem, OdeProblem};
use crate::basis::{build_basis, ElmConfig, EncodedBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, log10_det_proxy, numerical_rank, solve_from_svd, svd, SingularSpectrum,
};

/// Dense held-out evaluation grid: solution quality is scored here, never on
/// the collocation set.
pub const EVAL_GRID_POINTS: usize = 10_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub max_abs_err: f64,
}

/// Conditioning diagnostics of one activation matrix, plus the weight and
/// residual statistics tracked across the stiffness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningReport {
    pub rank: usize,
    pub raw_condition: f64,
    pub effective_condition: f64,
    pub log10_det_proxy: f64,
    pub spectrum: SingularSpectrum,
    /// Fraction of exactly-zero entries in H.
    pub sparsity: f64,
    /// (mean, population std) of beta.
    pub weight_stats: (f64, f64),
    /// (mean, population std) of T - H beta.
    pub residual_stats: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub beta: Vec<f64>,
    pub predictions: Vec<(f64, f64)>,
    /// Present iff an oracle was available.
    pub metrics: Option<Metrics>,
    pub report: ConditioningReport,
    pub train_seconds: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Uniform grid over [0, 1] including both endpoints.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Minimum-norm least-squares solve of the assembled system. The returned
/// timing covers decomposition and back-substitution only; diagnostics are
/// computed outside the clock.
pub fn train(sys: &LinearSystem, rank_tol_factor: f64) -> Result<(Vec<f64>, ConditioningReport, f64)> {
    let sparsity = sys.h.zero_fraction();

    let t0 = Instant::now();
    let decomp = svd(&sys.h, rank_tol_factor)?;
    let beta = solve_from_svd(&decomp, &sys.t);
    let train_seconds = t0.elapsed().as_secs_f64();

    let rank = numerical_rank(&decomp.spectrum);
    let (raw_condition, effective_condition) = condition_number(&decomp.spectrum)?;
    let fitted = sys.h.matvec(&beta)?;
    let residual: Vec<f64> = sys.t.iter().zip(&fitted).map(|(t, f)| t - f).collect();

    let report = ConditioningReport {
        rank,
        raw_condition,
        effective_condition,
        log10_det_proxy: log10_det_proxy(&decomp.spectrum),
        spectrum: decomp.spectrum,
        sparsity,
        weight_stats: mean_std(&beta),
        residual_stats: mean_std(&residual),
    };
    Ok((beta, report, train_seconds))
}

/// Elementwise forward evaluation of the trained network.
pub fn predict(basis: &EncodedBasis, beta: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| basis.forward(beta, x)).collect()
}

/// Error metrics of predictions against an oracle evaluated at `xs`.
pub fn evaluate(predictions: &[f64], oracle: impl Fn(f64) -> f64, xs: &[f64]) -> Result<Metrics> {
    let truth: Vec<f64> = xs.iter().map(|&x| oracle(x)).collect();
    metrics_between(predictions, &truth)
}

/// Error metrics between two aligned value sequences.
pub fn metrics_between(predictions: &[f64], truth: &[f64]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions against {} oracle values",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidProblem("nothing to evaluate".into()));
    }
    let n = predictions.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut max_abs = 0.0f64;
    for (p, t) in predictions.iter().zip(truth) {
        let e = (p - t).abs();
        abs_sum += e;
        sq_sum += e * e;
        max_abs = max_abs.max(e);
    }
    Ok(Metrics {
        mae: abs_sum / n,
        mse: sq_sum / n,
        max_abs_err: max_abs,
    })
}

/// Exact solution of `u' = epsilon u''`, `u(0) = 0`, `u(1) = 1`.
///
/// The textbook form `(e^{x/eps} - 1)/(e^{1/eps} - 1)` overflows for
/// `0 < eps < 1/709`, so positive eps uses the rewritten form
/// `e^{(x-1)/eps} expm1(-x/eps) / expm1(-1/eps)` whose exponents are all
/// non-positive; it hits both boundary values exactly. Negative eps keeps the
/// direct expm1 ratio, which is already stable there.
pub fn exact_ade_solution(epsilon: f64, x: f64) -> Result<f64> {
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidProblem(format!(
            "exact ADE solution needs non-zero finite epsilon, got {epsilon}"
        )));
    }
    if epsilon > 0.0 {
        Ok(((x - 1.0) / epsilon).exp() * (-x / epsilon).exp_m1() / (-1.0 / epsilon).exp_m1())
    } else {
        Ok((x / epsilon).exp_m1() / (1.0 / epsilon).exp_m1())
    }
}

/// The multiscale regression target:
/// `sin(10x) + 0.2 cos(20x + 50x^2) + e^{-100x^2} sin(200x)`.
pub fn multiscale_target(x: f64) -> f64 {
    (10.0 * x).sin()
        + 0.2 * (20.0 * x + 50.0 * x * x).cos()
        + (-100.0 * x * x).exp() * (200.0 * x).sin()
}

/// Full ADE pipeline for one stiffness value: build the basis, assemble,
/// train, and score against the exact solution on the dense grid.
pub fn solve_ade(
    config: &ElmConfig,
    epsilon: f64,
    collocation: Collocation,
    rank_tol_factor: f64,
) -> Result<SolveResult> {
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidProblem(format!(
            "epsilon must be non-zero and finite, got {epsilon}"
        )));
    }
    let basis = build_basis(config)?;
    let problem = OdeProblem::ade(epsilon, collocation);
    let sys = assemble_ode(&basis, &problem)?;
    let (beta, report, train_seconds) = train(&sys, rank_tol_factor)?;

    let xs = uniform_grid(EVAL_GRID_POINTS);
    let preds = predict(&basis, &beta, &xs)?;
    let metrics = evaluate(
        &preds,
        |x| exact_ade_solution(epsilon, x).expect("epsilon already validated"),
        &xs,
    )?;
    Ok(SolveResult {
        beta,
        predictions: xs.into_iter().zip(preds).collect(),
        metrics: Some(metrics),
        report,
        train_seconds,
    })
}

/// One sweep row: either a full solve or the failure message that replaced it.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub outcome: std::result::Result<SolveResult, String>,
}

/// One full ADE solve per stiffness value, same seed and architecture
/// throughout, rows in input order. Failures are recorded per row; the sweep
/// never aborts.
pub fn sweep_epsilon(
    config: &ElmConfig,
    collocation: Collocation,
    epsilons: &[f64],
    rank_tol_factor: f64,
) -> Vec<SweepRow> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let outcome = if epsilon > 0.0 {
                solve_ade(config, epsilon, collocation, rank_tol_factor).map_err(|e| e.to_string())
            } else {
                Err(format!("epsilon must be positive, got {epsilon}"))
            };
            SweepRow { epsilon, outcome }
        })
        .collect()
}
