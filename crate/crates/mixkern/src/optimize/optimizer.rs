//! First-order update rules. All of them minimize.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    Adam,
    Lbfgs,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Method::Sgd),
            "adam" => Ok(Method::Adam),
            "lbfgs" | "l-bfgs" => Ok(Method::Lbfgs),
            other => Err(Error::InvalidConfig(format!(
                "unknown optimizer `{other}` (expected sgd, adam or lbfgs)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sgd => "sgd",
            Method::Adam => "adam",
            Method::Lbfgs => "lbfgs",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub lbfgs_memory: usize,
}

impl OptimizerConfig {
    pub fn new(method: Method, learning_rate: f64, epochs: usize) -> Self {
        OptimizerConfig {
            method,
            learning_rate,
            epochs,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            lbfgs_memory: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.lbfgs_memory == 0 {
            return Err(Error::InvalidConfig(
                "lbfgs memory must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-run optimizer memory.
#[derive(Clone, Debug, Default)]
pub struct OptimizerState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    history: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    previous: Option<(Vec<f64>, Vec<f64>)>,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        OptimizerState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            ..Default::default()
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Applies one update to `theta` given the loss gradient `grad`.
pub fn optimizer_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    grad: &[f64],
    cfg: &OptimizerConfig,
) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters but {} gradient entries",
            theta.len(),
            grad.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient entry {i} is {}",
            grad[i]
        )));
    }
    if state.m.len() != theta.len() {
        *state = OptimizerState::new(theta.len());
    }
    state.step += 1;
    let lr = cfg.learning_rate;
    match cfg.method {
        Method::Sgd => {
            for (t, g) in theta.iter_mut().zip(grad) {
                *t -= lr * g;
            }
        }
        Method::Adam => {
            let t = state.step as i32;
            let c1 = 1.0 - cfg.adam_beta1.powi(t);
            let c2 = 1.0 - cfg.adam_beta2.powi(t);
            for i in 0..theta.len() {
                state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
                state.v[i] =
                    cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
                let mh = state.m[i] / c1;
                let vh = state.v[i] / c2;
                theta[i] -= lr * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
        Method::Lbfgs => {
            if let Some((x0, g0)) = state.previous.take() {
                let s: Vec<f64> = theta.iter().zip(&x0).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad.iter().zip(&g0).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    if state.history.len() == cfg.lbfgs_memory {
                        state.history.pop_front();
                    }
                    state.history.push_back((s, y, 1.0 / sy));
                }
            }
            let dir = two_loop(&state.history, grad);
            state.previous = Some((theta.to_vec(), grad.to_vec()));
            for (t, d) in theta.iter_mut().zip(&dir) {
                *t -= lr * d;
            }
        }
    }
    Ok(())
}

/// Approximate inverse-Hessian times `g`.
fn two_loop(history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut a = vec![0.0; history.len()];
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        a[i] = rho * dot(s, &q);
        for (qj, yj) in q.iter_mut().zip(y) {
            *qj -= a[i] * yj;
        }
    }
    // Without curvature pairs the first step has length one.
    let gamma = history.back().map_or_else(
        || 1.0 / dot(g, g).sqrt().max(f64::MIN_POSITIVE),
        |(s, y, _)| dot(s, y) / dot(y, y),
    );
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qj, sj) in q.iter_mut().zip(s) {
            *qj += sj * (a[i] - b);
        }
    }
    q
}
