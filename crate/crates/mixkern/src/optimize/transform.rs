//! Map between constrained kernel parameters and an unconstrained vector.
//!
//! * `σ², α, τ²` are stored as logarithms.
//! * Mixture weights `w_1..w_L` become `L − 1` logits `z_l = ln(w_l / w_1)`;
//!   the first logit is pinned to zero, so the vector is unique.
//! * A separable covariance `A = G·Gᵀ` is stored through its lower factor
//!   `G`, with the diagonal on a log scale.

use crate::error::{Error, Result};
use crate::kernel::{KernelExpr, ParamPath};

const WEIGHT_TOL: f64 = 1e-12;

/// Unconstrained coordinates of `k`.
pub fn to_unconstrained(k: &KernelExpr) -> Result<Vec<f64>> {
    let params = k.params();
    let values = k.param_values();
    let w0 = params
        .iter()
        .position(|p| *p == ParamPath::Weight(0))
        .map(|i| values[i]);
    if w0.is_some() {
        let total: f64 = params
            .iter()
            .zip(&values)
            .filter(|(p, _)| matches!(p, ParamPath::Weight(_)))
            .map(|(_, v)| v)
            .sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidKernel(format!(
                "mixture weights sum to {total}; only simplex weights can be optimized"
            )));
        }
    }
    let mut out = Vec::with_capacity(params.len());
    for (p, &v) in params.iter().zip(&values) {
        let u = match *p {
            ParamPath::Weight(0) => continue,
            ParamPath::Weight(_) => (v / w0.expect("weights present")).ln(),
            ParamPath::Factor(r, c) if r != c => v,
            _ => v.ln(),
        };
        if !u.is_finite() {
            return Err(Error::NonFinite(format!(
                "{p} = {v} has no unconstrained image"
            )));
        }
        out.push(u);
    }
    Ok(out)
}

/// Rebuilds a kernel with the structure of `template` from unconstrained
/// coordinates.
pub fn from_unconstrained(template: &KernelExpr, v: &[f64]) -> Result<KernelExpr> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!(
            "unconstrained coordinate {i} is {}",
            v[i]
        )));
    }
    let params = template.params();
    let nweights = params
        .iter()
        .filter(|p| matches!(p, ParamPath::Weight(_)))
        .count();
    let expected = params.len() - usize::from(nweights > 0);
    if v.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} unconstrained values for {expected} free parameters",
            v.len()
        )));
    }
    let mut values = Vec::with_capacity(params.len());
    let mut it = v.iter().copied();
    let mut weight_slots = Vec::new();
    for p in &params {
        match *p {
            ParamPath::Weight(0) => {
                weight_slots.push(values.len());
                values.push(0.0);
            }
            ParamPath::Weight(_) => {
                weight_slots.push(values.len());
                values.push(it.next().expect("length checked"));
            }
            ParamPath::Factor(r, c) if r != c => values.push(it.next().expect("length checked")),
            _ => values.push(it.next().expect("length checked").exp()),
        }
    }
    if !weight_slots.is_empty() {
        let zmax = weight_slots
            .iter()
            .map(|&i| values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = weight_slots.iter().map(|&i| (values[i] - zmax).exp()).sum();
        for &i in &weight_slots {
            values[i] = (values[i] - zmax).exp() / total;
        }
    }
    for (p, x) in params.iter().zip(&values) {
        let ok = match p {
            ParamPath::Factor(r, c) if r != c => x.is_finite(),
            ParamPath::Weight(_) => x.is_finite() && *x >= 0.0,
            _ => x.is_finite() && *x > 0.0,
        };
        if !ok {
            return Err(Error::NonFinite(format!("{p} mapped to {x}")));
        }
    }
    template.with_param_values(&values)
}

/// Pulls a gradient in natural coordinates back to unconstrained ones,
/// evaluated at `k`.
pub fn chain_gradient(k: &KernelExpr, natural: &[f64]) -> Vec<f64> {
    let params = k.params();
    let values = k.param_values();
    let weights: Vec<(usize, f64)> = params
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p, ParamPath::Weight(_)))
        .map(|(i, _)| (i, values[i]))
        .collect();
    let mean_g: f64 = weights.iter().map(|&(i, w)| w * natural[i]).sum();
    let mut out = Vec::with_capacity(params.len());
    for (i, p) in params.iter().enumerate() {
        let g = natural[i];
        match *p {
            ParamPath::Weight(0) => {}
            ParamPath::Weight(_) => out.push(values[i] * (g - mean_g)),
            ParamPath::Factor(r, c) if r != c => out.push(g),
            _ => out.push(g * values[i]),
        }
    }
    out
}
