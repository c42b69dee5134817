//! Adaptive Gauss–Legendre quadrature on geometrically graded panels, suited
//! to smooth integrands with algebraic tails on `[a, b]`, `0 ≤ a < b`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 16;
const MAX_REFINEMENTS: u32 = 8;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel_sum(f: &impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
    let (x, w) = rule();
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let s: f64 = x
            .iter()
            .zip(w)
            .map(|(xi, wi)| wi * f(mid + half * xi))
            .sum();
        total += half * s;
    }
    total
}

fn edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    if a == 0.0 {
        let split = b.min(1.0);
        let mut e: Vec<f64> = (0..=panels)
            .map(|i| split * i as f64 / panels as f64)
            .collect();
        if b > split {
            e.pop();
            e.extend(edges(split, b, panels));
        }
        return e;
    }
    let decades = (b / a).log10().max(0.0);
    let count = ((decades * panels as f64).ceil() as usize).max(panels);
    let ratio = (b / a).powf(1.0 / count as f64);
    let mut e: Vec<f64> = (0..count).map(|i| a * ratio.powi(i as i32)).collect();
    e.push(b);
    e
}

/// `∫_a^b f`, refined until two successive panel counts agree to `rel_tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_with(f, a, b, rel_tol, 0.0)
}

/// As [`integrate`], also accepting agreement within `abs_tol`.
pub(crate) fn integrate_with(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
        return Err(Error::QuadratureFailure(format!(
            "invalid interval [{a}, {b}]"
        )));
    }
    let mut panels = 2;
    let mut prev = panel_sum(&f, &edges(a, b, panels));
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let next = panel_sum(&f, &edges(a, b, panels));
        if !next.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "integrand not finite on [{a}, {b}]"
            )));
        }
        if (next - prev).abs() <= rel_tol * next.abs() + abs_tol || next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureFailure(format!(
        "no convergence on [{a}, {b}] after {MAX_REFINEMENTS} refinements"
    )))
}
