//! Held-out prediction error of several kernels over random splits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{mse, posterior_predict, sample_prior_with, Dataset, GpModel};
use crate::io::{Cell, ExperimentConfig, ExperimentKind};
use crate::kernel::KernelExpr;
use crate::linalg::Matrix;
use crate::optimize::fit;
use crate::rng::RngStream;

use super::{kernel_label, quantile, Artifact};

const MIN_ROWS: usize = 40;

/// Monthly series shaped like an atmospheric CO₂ record: linear trend,
/// annual cycle and a rough Matérn 1/2 residual. Columns are the decimal
/// date and the concentration.
pub fn synthetic_co2(n: usize, seed: u64) -> Result<Dataset> {
    let x = Matrix::from_fn(n, 1, |i, _| 1960.0 + (i as f64 + 0.5) / 12.0);
    let residual = KernelExpr::matern(0.25, 2.0, 0.5)?;
    let noise = sample_prior_with(
        &GpModel::new(residual, 0.0),
        &x,
        1,
        &RngStream::new(seed, &[ExperimentKind::Regression.stream_id(), 0]),
    )?;
    let y = (0..n)
        .map(|i| {
            let t = x[(i, 0)];
            316.0
                + 1.4 * (t - 1960.0)
                + 3.0 * (2.0 * std::f64::consts::PI * t).sin()
                + noise[(0, i)]
        })
        .collect();
    Dataset::scalar(x, y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseRow {
    pub kernel: String,
    pub fraction: f64,
    pub rep: usize,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionTable {
    /// Ordered by fraction, replication, then kernel in configuration order.
    pub rows: Vec<MseRow>,
    pub kernels: Vec<String>,
    pub fractions: Vec<f64>,
}

impl RegressionTable {
    pub fn median_mse(&self, kernel: &str, fraction: f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.kernel == kernel && r.fraction == fraction)
            .map(|r| r.mse)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(quantile(&v, 0.5))
    }

    /// `regression.csv` and `regression_summary.csv` (median MSE per
    /// kernel and fraction).
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.kernel.as_str().into(),
                    r.fraction.into(),
                    r.rep.into(),
                    r.mse.into(),
                ]
            })
            .collect();
        let mut summary = Vec::new();
        for k in &self.kernels {
            for &f in &self.fractions {
                if let Some(m) = self.median_mse(k, f) {
                    summary.push(vec![k.as_str().into(), f.into(), m.into()]);
                }
            }
        }
        Ok(vec![
            Artifact::csv(
                "regression.csv",
                &["kernel", "fraction", "rep", "mse"],
                &rows,
            )?,
            Artifact::csv(
                "regression_summary.csv",
                &["kernel", "fraction", "median_mse"],
                &summary,
            )?,
        ])
    }
}

fn train_size(n: usize, fraction: f64) -> Result<usize> {
    let train = (fraction * n as f64).round() as usize;
    if train == 0 || train >= n {
        return Err(Error::SplitTooSmall(format!(
            "fraction {fraction} of {n} rows leaves an empty training or test set"
        )));
    }
    Ok(train)
}

fn split_mse(
    data: &Dataset,
    kernel: &KernelExpr,
    train: &[usize],
    test: &[usize],
    cfg: &ExperimentConfig,
) -> Result<f64> {
    let tr = data.subset(train);
    let te = data.subset(test);
    let mean = tr.y_flat().iter().sum::<f64>() / tr.len() as f64;
    let centered: Vec<f64> = tr.y_flat().iter().map(|v| v - mean).collect();
    let tr = Dataset::scalar(tr.x, centered)?;
    let model = GpModel::new(kernel.clone(), cfg.epsilon);
    let fitted = fit(&model, &tr, &cfg.optimizer)?.kernel;
    let post = posterior_predict(
        &GpModel::new(fitted, cfg.epsilon),
        &tr.x,
        tr.y_flat(),
        &te.x,
    )?;
    let pred: Vec<f64> = post.mean.iter().map(|v| v + mean).collect();
    mse(&pred, te.y_flat())
}

/// Fits every kernel in `cfg.kernels` on `cfg.reps` random splits per
/// training fraction and records the test MSE. Responses are centered by
/// the training mean.
///
/// All kernels see the same split for a given fraction and replication.
pub fn run_regression_benchmark(
    data: &Dataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<RegressionTable> {
    cfg.validate()?;
    let n = data.len();
    if n < MIN_ROWS {
        return Err(Error::SplitTooSmall(format!(
            "{n} rows, at least {MIN_ROWS} needed"
        )));
    }
    if data.outputs() != 1 {
        return Err(Error::DimensionMismatch(
            "the benchmark needs a single response".into(),
        ));
    }
    if cfg.kernels.is_empty() {
        return Err(Error::InvalidConfig("no kernels to compare".into()));
    }
    let sizes = cfg
        .fractions
        .iter()
        .map(|&f| train_size(n, f))
        .collect::<Result<Vec<_>>>()?;
    let splits: Vec<(usize, usize, Vec<usize>, Vec<usize>)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(fi, &ntrain)| {
            (0..cfg.reps).map(move |rep| {
                let mut idx: Vec<usize> = (0..n).collect();
                RngStream::new(
                    seed,
                    &[
                        ExperimentKind::Regression.stream_id(),
                        1,
                        fi as u64,
                        rep as u64,
                    ],
                )
                .shuffle(&mut idx);
                let (mut train, mut test) = (idx[..ntrain].to_vec(), idx[ntrain..].to_vec());
                train.sort_unstable();
                test.sort_unstable();
                (fi, rep, train, test)
            })
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|s| (0..cfg.kernels.len()).map(move |k| (s, k)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, k)| split_mse(data, &cfg.kernels[k], &splits[s].2, &splits[s].3, cfg))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = cfg.kernels.iter().map(kernel_label).collect();
    let rows = jobs
        .iter()
        .zip(errors)
        .map(|(&(s, k), mse)| MseRow {
            kernel: labels[k].clone(),
            fraction: cfg.fractions[splits[s].0],
            rep: splits[s].1,
            mse,
        })
        .collect();
    Ok(RegressionTable {
        rows,
        kernels: labels,
        fractions: cfg.fractions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{Method, OptimizerConfig};

    fn cfg(fractions: Vec<f64>) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(ExperimentKind::Regression);
        c.kernels = vec![
            KernelExpr::matern(100.0, 0.5, 0.5).unwrap(),
            KernelExpr::matern(100.0, 0.5, 1.5).unwrap(),
        ];
        c.fractions = fractions;
        c.reps = 2;
        c.optimizer = OptimizerConfig::new(Method::Adam, 0.05, 30);
        c
    }

    #[test]
    fn co2_series_trends_upward() {
        let d = synthetic_co2(120, 1).unwrap();
        assert_eq!(d.len(), 120);
        let y = d.y_flat();
        assert!(y[119] - y[0] > 10.0);
        assert_eq!(d, synthetic_co2(120, 1).unwrap());
    }

    #[test]
    fn full_training_fraction_rejected() {
        let d = synthetic_co2(60, 1).unwrap();
        let r = run_regression_benchmark(&d, &cfg(vec![0.5, 1.0]), 1);
        assert!(matches!(r, Err(Error::SplitTooSmall(_))));
        let small = synthetic_co2(30, 1).unwrap();
        assert!(matches!(
            run_regression_benchmark(&small, &cfg(vec![0.5]), 1),
            Err(Error::SplitTooSmall(_))
        ));
    }

    #[test]
    fn table_shape_and_determinism() {
        let d = synthetic_co2(60, 2).unwrap();
        let c = cfg(vec![0.3, 0.7]);
        let t = run_regression_benchmark(&d, &c, 4).unwrap();
        assert_eq!(t.rows.len(), 2 * 2 * 2);
        assert!(t.rows.iter().all(|r| r.mse.is_finite() && r.mse >= 0.0));
        assert!(t.median_mse("matern(1/2)", 0.7).is_some());
        let again = run_regression_benchmark(&d, &c, 4).unwrap();
        assert_eq!(t.artifacts().unwrap(), again.artifacts().unwrap());
    }
}
