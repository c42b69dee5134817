//! Mean-square continuity and differentiability read off sampled paths.
//!
//! Paths are drawn at `0` and `xᵢ = 1/i`; `βᵢ` averages `(f(xᵢ) − f(0))²`
//! over the draws and `γᵢ = βᵢ / xᵢ²`. A bounded `γ` signals a
//! differentiable process, while `γᵢ ∝ i` signals a rough one.

use crate::error::{Error, Result};
use crate::gp::{sample_prior_with, GpModel};
use crate::io::{Cell, ExperimentConfig, ExperimentKind};
use crate::kernel::KernelExpr;
use crate::linalg::Matrix;
use crate::rng::RngStream;

use super::{kernel_label, Artifact};

const MIN_DRAWS: usize = 500;
/// Jitter relative to the prior variance; keeps the nearly coincident
/// points `1/i` factorizable.
const RELATIVE_JITTER: f64 = 1e-8;
const CONVERGENT_SLOPE: f64 = 0.3;
const DIVERGENT_SLOPE: f64 = 0.7;
const CONTINUITY_RATIO: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    pub kernel: KernelExpr,
    pub label: String,
    /// `xᵢ = 1/i` for `i = 1..I`.
    pub x: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `β` at the smallest `x` is below 5% of `β₁`.
    pub beta_limit_flag: bool,
    /// Least-squares slope of `log γᵢ` against `log i` over `i ≥ I/2`.
    pub gamma_slope: f64,
    /// `Some(true)` for a slope below 0.3, `Some(false)` above 0.7.
    pub differentiable: Option<bool>,
}

fn summary_rows(reports: &[SmoothnessReport]) -> Vec<Vec<Cell>> {
    reports
        .iter()
        .map(|r| {
            let diff = match r.differentiable {
                Some(true) => "yes",
                Some(false) => "no",
                None => "inconclusive",
            };
            vec![
                r.label.as_str().into(),
                r.beta_limit_flag.to_string().into(),
                r.gamma_slope.into(),
                diff.into(),
            ]
        })
        .collect()
}

impl SmoothnessReport {
    /// `sim1.csv` (one row per kernel and point) and `sim1_summary.csv`.
    pub fn artifacts(reports: &[SmoothnessReport]) -> Result<Vec<Artifact>> {
        let mut rows = Vec::new();
        for r in reports {
            for (i, ((&x, &b), &g)) in r.x.iter().zip(&r.beta).zip(&r.gamma).enumerate() {
                rows.push(vec![
                    r.label.as_str().into(),
                    (i + 1).into(),
                    x.into(),
                    b.into(),
                    g.into(),
                ]);
            }
        }
        Ok(vec![
            Artifact::csv("sim1.csv", &["kernel", "i", "x", "beta", "gamma"], &rows)?,
            Artifact::csv(
                "sim1_summary.csv",
                &["kernel", "continuous", "gamma_slope", "differentiable"],
                &summary_rows(reports),
            )?,
        ])
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn smoothness_of(
    k: &KernelExpr,
    points: usize,
    draws: usize,
    rng: &RngStream,
) -> Result<SmoothnessReport> {
    let x: Vec<f64> = (1..=points).map(|i| 1.0 / i as f64).collect();
    let locations = Matrix::from_fn(points + 1, 1, |r, _| if r == 0 { 0.0 } else { x[r - 1] });
    let model = GpModel::new(k.clone(), RELATIVE_JITTER * k.prior_variance());
    let paths = sample_prior_with(&model, &locations, draws, rng)?;
    let mut beta = vec![0.0; points];
    for t in 0..draws {
        let row = paths.row(t);
        for (b, &v) in beta.iter_mut().zip(&row[1..]) {
            *b += (v - row[0]).powi(2);
        }
    }
    beta.iter_mut().for_each(|b| *b /= draws as f64);
    let gamma: Vec<f64> = beta.iter().zip(&x).map(|(b, x)| b / (x * x)).collect();
    let tail = points / 2;
    let log_i: Vec<f64> = (tail..=points).map(|i| (i as f64).ln()).collect();
    let log_g: Vec<f64> = gamma[tail - 1..].iter().map(|g| g.ln()).collect();
    let gamma_slope = slope(&log_i, &log_g);
    let differentiable = if gamma_slope < CONVERGENT_SLOPE {
        Some(true)
    } else if gamma_slope > DIVERGENT_SLOPE {
        Some(false)
    } else {
        None
    };
    Ok(SmoothnessReport {
        kernel: k.clone(),
        label: kernel_label(k),
        beta_limit_flag: beta[points - 1] < CONTINUITY_RATIO * beta[0],
        x,
        beta,
        gamma,
        gamma_slope,
        differentiable,
    })
}

/// Estimates `β` and `γ` for every kernel in `cfg.kernels`, with
/// `cfg.points` points and `cfg.draws` sampled paths.
pub fn run_sim_smoothness(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SmoothnessReport>> {
    if cfg.draws < MIN_DRAWS {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_DRAWS} draws are needed, got {}",
            cfg.draws
        )));
    }
    if cfg.points < 4 {
        return Err(Error::InvalidConfig(format!(
            "at least 4 points are needed, got {}",
            cfg.points
        )));
    }
    if cfg.kernels.is_empty() {
        return Err(Error::InvalidConfig("no kernels to sample".into()));
    }
    cfg.kernels
        .iter()
        .enumerate()
        .map(|(idx, k)| {
            if !k.is_scalar() {
                return Err(Error::UnsupportedKernel(format!("{k} has several outputs")));
            }
            let rng = RngStream::new(seed, &[ExperimentKind::Sim1.stream_id(), idx as u64]);
            smoothness_of(k, cfg.points, cfg.draws, &rng)
        })
        .collect()
}
