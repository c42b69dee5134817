//! Maximum-likelihood fitting of kernel hyperparameters.
//!
//! The optimizer works in unconstrained coordinates (see [`transform`]) and
//! minimizes the negative log marginal likelihood divided by the number of
//! observations, so learning rates do not depend on the sample size.

mod optimizer;
mod transform;

pub use optimizer::{optimizer_step, Method, OptimizerConfig, OptimizerState};
pub use transform::{chain_gradient, from_unconstrained, to_unconstrained};

use crate::error::{Error, Result};
use crate::gp::{Dataset, GpModel};
use crate::kernel::{self, KernelExpr, ParamPath};
use crate::linalg::Matrix;
use crate::spectral::{self, MicroergodicReport};

/// Gradient ∞-norm below which a fit counts as converged.
pub const GRADIENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    EpochBudget,
    SmallGradient,
    /// A step left the region where the likelihood can be evaluated; the
    /// last good parameters are kept.
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct FitReport {
    /// Negative log marginal likelihood at the start of each epoch.
    pub loss_trace: Vec<f64>,
    pub kernel: KernelExpr,
    /// Final parameters in canonical order.
    pub params: Vec<(ParamPath, f64)>,
    /// `None` when the kernel has no supported identifiable combination.
    pub microergodic: Option<MicroergodicReport>,
    pub converged: bool,
    pub stop: StopReason,
    pub epochs_run: usize,
}

impl FitReport {
    pub fn param(&self, path: ParamPath) -> Option<f64> {
        self.params
            .iter()
            .find(|(p, _)| *p == path)
            .map(|&(_, v)| v)
    }
}

struct Objective<'a> {
    model: &'a GpModel,
    dist: Matrix,
    y: &'a [f64],
}

impl Objective<'_> {
    /// Negative LML and its gradient in unconstrained coordinates.
    fn eval(&self, k: &KernelExpr) -> Result<(f64, Vec<f64>)> {
        let model = GpModel {
            kernel: k.clone(),
            ..self.model.clone()
        };
        let (lml, grad) = model.lml_and_gradient(&self.dist, self.y)?;
        let g: Vec<f64> = chain_gradient(k, &grad).into_iter().map(|v| -v).collect();
        if !lml.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(
                "likelihood or gradient is not finite".into(),
            ));
        }
        Ok((-lml, g))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits the hyperparameters of `model.kernel` to `data`, starting from the
/// kernel's current values.
///
/// Failures at the starting point are returned as errors. A later step
/// that produces a non-finite or non-factorizable state ends the fit early
/// with the last good parameters.
pub fn fit(model: &GpModel, data: &Dataset, cfg: &OptimizerConfig) -> Result<FitReport> {
    cfg.validate()?;
    model.kernel.validate()?;
    let obj = Objective {
        model,
        dist: kernel::pairwise_distances(&data.x),
        y: data.y_flat(),
    };
    if obj.y.len() != data.len() * model.kernel.outputs() {
        return Err(Error::DimensionMismatch(format!(
            "{} outputs in data, {} in kernel",
            data.outputs(),
            model.kernel.outputs()
        )));
    }
    let template = &model.kernel;
    let mut theta = to_unconstrained(template)?;
    let mut state = OptimizerState::new(theta.len());
    let mut current = template.clone();
    let (mut loss, mut grad) = obj.eval(&current)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut stop = StopReason::EpochBudget;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        trace.push(loss);
        if max_abs(&grad) < GRADIENT_TOL {
            stop = StopReason::SmallGradient;
            break;
        }
        let mut next = theta.clone();
        optimizer_step(&mut state, &mut next, &grad, cfg)?;
        epochs_run = epoch + 1;
        let step = from_unconstrained(template, &next).and_then(|k| {
            let (l, g) = obj.eval(&k)?;
            Ok((k, l, g))
        });
        match step {
            Ok((k, l, g)) => {
                theta = next;
                current = k;
                loss = l;
                grad = g;
            }
            Err(e @ (Error::NonFinite(_) | Error::NotPositiveDefinite { .. })) => {
                log::warn!("fit stopped after {epochs_run} epochs: {e}");
                stop = StopReason::NumericalFailure;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let p = data.input_dim();
    Ok(FitReport {
        loss_trace: trace,
        params: current
            .params()
            .into_iter()
            .zip(current.param_values())
            .collect(),
        microergodic: spectral::microergodic(&current, p).ok(),
        converged: max_abs(&grad) < GRADIENT_TOL,
        kernel: current,
        stop,
        epochs_run,
    })
}
