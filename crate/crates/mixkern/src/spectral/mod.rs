//! Spectral densities of isotropic Matérn mixtures in `R^p`, the
//! parameter combinations that fixed-domain data can identify, and
//! numerical diagnostics for smoothness and Gaussian-measure equivalence.
//!
//! With `ν` the smoothness of a leaf, its density is
//! `σ² α^{2ν} / (α² + ω²)^{ν + p/2}` up to a constant shared by all leaves of
//! the same smoothness in the same dimension, which cancels in every ratio
//! and every convergence question asked here.

mod quadrature;

use std::f64::consts::PI;
use std::fmt;

use quadrature::integrate_with;
pub use quadrature::{gauss_legendre, integrate};

use crate::error::{Error, Result};
use crate::kernel::{KernelExpr, Leaf};
use crate::linalg::Matrix;

const QUAD_TOL: f64 = 1e-10;
const NUGGET_TOL: f64 = 1e-12;

/// Default cutoffs for [`equivalence_diagnostic`].
pub const EQUIVALENCE_CUTOFFS: [f64; 5] = [1e1, 1e2, 1e3, 1e4, 1e5];
/// Default cutoffs for [`moment_integral_diagnostic`].
pub const MOMENT_CUTOFFS: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// `(w σ², α, ν)` for every leaf of a scalar Matérn kernel.
fn matern_terms(k: &KernelExpr) -> Result<Vec<(f64, f64, f64)>> {
    if !k.is_scalar() {
        return Err(Error::UnsupportedKernel(
            "spectral quantities need a scalar kernel without nugget".into(),
        ));
    }
    k.weighted_leaves()
        .into_iter()
        .map(|(w, leaf)| match leaf {
            Leaf::Matern(m) => Ok((w * m.sigma2, m.alpha, m.nu.nu())),
            Leaf::Rbf(_) => Err(Error::UnsupportedKernel(
                "spectral density is only defined here for Matérn leaves".into(),
            )),
        })
        .collect()
}

fn density_of(terms: &[(f64, f64, f64)], p: usize, omega: f64) -> f64 {
    let h = p as f64 / 2.0;
    let w2 = omega * omega;
    terms
        .iter()
        .map(|&(c, a, nu)| c * (2.0 * nu * a.ln() - (nu + h) * (a * a + w2).ln()).exp())
        .sum()
}

/// `ρ₂(ω)/ρ₁(ω) − 1` without the cancellation of the naive ratio.
///
/// Each term is written as `M ω^{-2(ν+h)} (1 + α²/ω²)^{-(ν+h)}` with
/// `M = wσ²α^{2ν}`; leaves of equal `ν` share the power of `ω`, so their
/// difference reduces to `ΔM` plus `expm1` corrections of order `α²/ω²`.
fn relative_difference(
    t1: &[(f64, f64, f64)],
    t2: &[(f64, f64, f64)],
    p: usize,
    omega: f64,
) -> f64 {
    let h = p as f64 / 2.0;
    let nu_min = t1
        .iter()
        .chain(t2)
        .map(|t| t.2)
        .fold(f64::INFINITY, f64::min);
    let lw = omega.ln();
    let inv = 1.0 / (omega * omega);
    let mut nus: Vec<f64> = t1.iter().chain(t2).map(|t| t.2).collect();
    nus.sort_by(f64::total_cmp);
    nus.dedup();
    let mut diff = 0.0;
    let mut base = 0.0;
    for nu in nus {
        let e = nu + h;
        let scale = (-2.0 * (nu - nu_min) * lw).exp();
        let mut lead = 0.0;
        let mut corr = 0.0;
        for (sign, terms) in [(-1.0, t1), (1.0, t2)] {
            for &(c, a, _) in terms.iter().filter(|t| t.2 == nu) {
                let m = c * a.powf(2.0 * nu);
                let el = e * (a * a * inv).ln_1p();
                let q = if el > 0.5 {
                    let q = (-el).exp();
                    corr += sign * m * q;
                    q
                } else {
                    let x = (-el).exp_m1();
                    lead += sign * m;
                    corr += sign * m * x;
                    1.0 + x
                };
                if sign < 0.0 {
                    base += scale * m * q;
                }
            }
        }
        diff += scale * (lead + corr);
    }
    diff / base
}

/// Surface area of the unit sphere in `R^p`, `2 π^{p/2} / Γ(p/2)`.
fn shell_area(p: usize) -> f64 {
    let even = p.is_multiple_of(2);
    let mut gamma = if even { 1.0 } else { PI.sqrt() };
    let mut x = if even { 1.0 } else { 0.5 };
    while x < p as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(p as f64 / 2.0) / gamma
}

fn check_dim(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidConfig(
            "input dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Spectral density of a scalar Matérn kernel or Matérn mixture at
/// frequency `omega`.
pub fn spectral_density(k: &KernelExpr, p: usize, omega: f64) -> Result<f64> {
    check_dim(p)?;
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::NonFinite(format!("frequency {omega}")));
    }
    Ok(density_of(&matern_terms(k)?, p, omega))
}

/// Mean-square differentiability order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MsdOrder {
    Finite(u32),
    Infinite,
}

impl fmt::Display for MsdOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MsdOrder::Finite(k) => write!(f, "{k}"),
            MsdOrder::Infinite => f.write_str("inf"),
        }
    }
}

/// Number of mean-square derivatives of the latent process, the minimum
/// over its leaves. RBF leaves are infinitely differentiable.
pub fn smoothness_order(k: &KernelExpr) -> Result<MsdOrder> {
    let leaves = k.weighted_leaves();
    if leaves.is_empty() {
        return Err(Error::UnsupportedKernel("no scalar leaves".into()));
    }
    Ok(leaves
        .iter()
        .map(|(_, l)| match l.smoothness() {
            Some(s) => MsdOrder::Finite(s.order()),
            None => MsdOrder::Infinite,
        })
        .min()
        .expect("nonempty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MicroergodicKind {
    /// Mixture of pairwise distinct smoothness values.
    DistinctNu,
    /// Single Matérn, or a mixture whose leaves share one smoothness.
    SameNu,
    /// Separable multi-output kernel over one Matérn.
    Separable,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MicroValue {
    Scalar(f64),
    Matrix(Matrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroergodicReport {
    pub kind: MicroergodicKind,
    pub primary: MicroValue,
    /// Next-order combination, identifiable only in high dimension.
    pub secondary: Option<f64>,
    /// Whether `p` is large enough for `secondary` to matter (`p ≥ 5`).
    pub secondary_relevant: bool,
}

/// The identifiable parameter combinations of `k` under fixed-domain
/// asymptotics in `R^p`. A nugget is ignored.
///
/// * Distinct smoothness, sorted `ν₁ < ν₂ < …`: `w₁σ₁²α₁^{2ν₁}`, then
///   `w₂σ₂²α₂^{2ν₂} − ν₁ w₁σ₁²α₁^{2(ν₁+1)}`.
/// * Shared smoothness: `Σ w σ² α^{2ν}`, then `Σ w σ² α^{2ν+2}`.
/// * Separable over a Matérn: the matrix `σ² α^{2ν} A`.
pub fn microergodic(k: &KernelExpr, p: usize) -> Result<MicroergodicReport> {
    check_dim(p)?;
    let secondary_relevant = p >= 5;
    if let KernelExpr::Separable(s) = k.core() {
        let KernelExpr::Matern(m) = s.base() else {
            return Err(Error::UnsupportedKernel(
                "separable kernels are supported over a single Matérn".into(),
            ));
        };
        let scale = m.sigma2 * m.alpha.powf(2.0 * m.nu.nu());
        return Ok(MicroergodicReport {
            kind: MicroergodicKind::Separable,
            primary: MicroValue::Matrix(s.a().scaled(scale)),
            secondary: None,
            secondary_relevant,
        });
    }
    let mut terms = matern_terms(k.core())?;
    terms.sort_by(|a, b| a.2.total_cmp(&b.2));
    let same = terms.windows(2).all(|t| t[0].2 == t[1].2);
    let distinct = terms.windows(2).all(|t| t[0].2 < t[1].2);
    let lead = |&(c, a, nu): &(f64, f64, f64)| c * a.powf(2.0 * nu);
    if same {
        let primary = terms.iter().map(lead).sum();
        let secondary = terms
            .iter()
            .map(|&(c, a, nu)| c * a.powf(2.0 * nu + 2.0))
            .sum();
        Ok(MicroergodicReport {
            kind: MicroergodicKind::SameNu,
            primary: MicroValue::Scalar(primary),
            secondary: Some(secondary),
            secondary_relevant,
        })
    } else if distinct {
        let (c1, a1, nu1) = terms[0];
        let secondary = lead(&terms[1]) - nu1 * c1 * a1.powf(2.0 * (nu1 + 1.0));
        Ok(MicroergodicReport {
            kind: MicroergodicKind::DistinctNu,
            primary: MicroValue::Scalar(lead(&terms[0])),
            secondary: Some(secondary),
            secondary_relevant,
        })
    } else {
        Err(Error::MixedCase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Convergent,
    Divergent,
    Equivalent,
    NotEquivalent,
    Orthogonal,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Convergent => "convergent",
            Classification::Divergent => "divergent",
            Classification::Equivalent => "equivalent",
            Classification::NotEquivalent => "not-equivalent",
            Classification::Orthogonal => "orthogonal",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of a numerical tail diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVerdict {
    pub classification: Classification,
    /// Log–log slope of the integrand near the largest cutoff.
    pub tail_slope: f64,
    pub cutoffs: Vec<f64>,
    /// Partial integrals up to each cutoff.
    pub cutoff_values: Vec<f64>,
}

fn check_cutoffs(cutoffs: &[f64], start: f64, min: usize) -> Result<()> {
    let increasing = cutoffs.windows(2).all(|w| w[0] < w[1]);
    if cutoffs.len() < min
        || !increasing
        || cutoffs[0] <= start
        || !cutoffs[cutoffs.len() - 1].is_finite()
    {
        return Err(Error::InvalidConfig(format!(
            "need at least {min} finite increasing cutoffs above {start}"
        )));
    }
    Ok(())
}

fn partial_integrals(f: &impl Fn(f64) -> f64, start: f64, cutoffs: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cutoffs.len());
    let mut lo = start;
    let mut acc = 0.0f64;
    for &c in cutoffs {
        acc += integrate_with(f, lo, c, QUAD_TOL, QUAD_TOL * acc.abs())?;
        out.push(acc);
        lo = c;
    }
    Ok(out)
}

/// Least-squares slope of `ln f` against `ln ω` over the last two decades
/// below `top`. `−∞` when `f` vanishes there.
fn tail_slope(f: &impl Fn(f64) -> f64, top: f64) -> f64 {
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| top * 10f64.powf(-2.0 + 0.1 * i as f64))
        .filter_map(|w| {
            let v = f(w);
            (v > 0.0).then(|| (w.ln(), v.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn increments(values: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    values
        .iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect()
}

/// Whether `∫_1^∞ ω^{2d} ρ(ω) ω^{p−1} dω` is finite, judged from partial
/// integrals up to `cutoffs`. A finite integral means the process has
/// `d` mean-square derivatives.
pub fn moment_integral_diagnostic(
    k: &KernelExpr,
    p: usize,
    d: u32,
    cutoffs: &[f64],
) -> Result<SpectralVerdict> {
    check_dim(p)?;
    check_cutoffs(cutoffs, 1.0, 4)?;
    let terms = matern_terms(k.core())?;
    let shell = shell_area(p);
    let f = |w: f64| w.powi(2 * d as i32) * density_of(&terms, p, w) * shell * w.powi(p as i32 - 1);
    let values = partial_integrals(&f, 1.0, cutoffs)?;
    let n = values.len();
    let growth = (values[n - 1] / values[n - 2]).ln() / (cutoffs[n - 1] / cutoffs[n - 2]).ln();
    let inc = increments(&values);
    let shrinking = inc.windows(2).all(|w| w[1] < w[0]);
    let negligible = inc[n - 1].abs() <= 1e-12 * values[n - 1];
    let classification = if growth >= 0.1 {
        Classification::Divergent
    } else if negligible || (shrinking && inc[n - 1] <= 0.9 * inc[n - 2]) {
        Classification::Convergent
    } else {
        Classification::Inconclusive
    };
    Ok(SpectralVerdict {
        classification,
        tail_slope: tail_slope(&f, cutoffs[n - 1]),
        cutoffs: cutoffs.to_vec(),
        cutoff_values: values,
    })
}

/// Numerical check of whether the Gaussian measures of two Matérn-type
/// kernels on a bounded domain of `R^p` are equivalent, through the tail
/// of `∫_{ω>δ} (ρ₂/ρ₁ − 1)² ω^{p−1} dω`.
///
/// Kernels whose nugget variances differ are orthogonal outright. From
/// `p = 4` on the criterion is not sharp and the verdict is inconclusive.
pub fn equivalence_diagnostic(
    k1: &KernelExpr,
    k2: &KernelExpr,
    p: usize,
    delta: f64,
    cutoffs: &[f64],
) -> Result<SpectralVerdict> {
    check_dim(p)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    if (k1.tau2() - k2.tau2()).abs() > NUGGET_TOL {
        return Ok(SpectralVerdict {
            classification: Classification::Orthogonal,
            tail_slope: f64::NAN,
            cutoffs: cutoffs.to_vec(),
            cutoff_values: Vec::new(),
        });
    }
    check_cutoffs(cutoffs, delta, 4)?;
    let t1 = matern_terms(k1.core())?;
    let t2 = matern_terms(k2.core())?;
    let shell = shell_area(p);
    let f = |w: f64| {
        let r = relative_difference(&t1, &t2, p, w);
        r * r * shell * w.powi(p as i32 - 1)
    };
    let values = partial_integrals(&f, delta, cutoffs)?;
    let slope = tail_slope(&f, cutoffs[cutoffs.len() - 1]);
    let inc = increments(&values);
    let n = inc.len();
    let settled = inc[n - 1] <= 0.5 * inc[n - 2] || inc[n - 1] <= 1e-12 * values[n - 1];
    let edge = (p - 1) as f64;
    let classification = if p >= 4 {
        Classification::Inconclusive
    } else if slope == f64::NEG_INFINITY || (slope <= -1.5 && settled) {
        Classification::Equivalent
    } else if (slope - edge).abs() <= 0.1 || slope > edge {
        Classification::NotEquivalent
    } else {
        Classification::Inconclusive
    };
    Ok(SpectralVerdict {
        classification,
        tail_slope: slope,
        cutoffs: cutoffs.to_vec(),
        cutoff_values: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s2: f64, a: f64, nu: f64) -> KernelExpr {
        KernelExpr::matern(s2, a, nu).unwrap()
    }

    fn mix(w: &[f64], c: &[(f64, f64, f64)]) -> KernelExpr {
        KernelExpr::mixture(w.to_vec(), c.iter().map(|&(s, a, n)| m(s, a, n)).collect()).unwrap()
    }

    fn sim2_truth() -> KernelExpr {
        mix(
            &[0.2, 0.3, 0.5],
            &[(10.0, 1.0, 0.5), (10.0, 0.5, 1.5), (15.0, 1.0 / 3.0, 2.5)],
        )
    }

    #[test]
    fn relative_difference_agrees_with_naive_ratio() {
        let t1 = matern_terms(&sim2_truth()).unwrap();
        let t2 = vec![(2.0, 1.0, 0.5), (4.0, 0.7, 1.5), (1.0, 3.0, 4.5)];
        for p in 1..=3 {
            for w in [0.1, 1.0, 3.0, 30.0] {
                let naive = density_of(&t2, p, w) / density_of(&t1, p, w) - 1.0;
                let stable = relative_difference(&t1, &t2, p, w);
                assert!(
                    (naive - stable).abs() <= 1e-12 * naive.abs().max(1.0),
                    "{p} {w}: {naive} {stable}"
                );
            }
        }
    }

    #[test]
    fn shell_areas() {
        assert!((shell_area(1) - 2.0).abs() < 1e-15);
        assert!((shell_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((shell_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((shell_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn density_integrates_to_variance_in_one_dimension() {
        // For ν = ½, p = 1 the normalized density is α σ² / (π (α² + ω²)).
        let k = m(3.0, 2.0, 0.5);
        let total = integrate(|w| spectral_density(&k, 1, w).unwrap(), 0.0, 1e8, 1e-12).unwrap();
        let expected = 3.0 * 2.0 * (1e8f64 / 2.0).atan() / 2.0;
        assert!((total - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn microergodic_distinct_nu() {
        let r = microergodic(&sim2_truth(), 1).unwrap();
        assert_eq!(r.kind, MicroergodicKind::DistinctNu);
        assert_eq!(r.primary, MicroValue::Scalar(2.0));
        assert!(!r.secondary_relevant);
    }

    #[test]
    fn microergodic_same_nu_and_single() {
        let k = mix(
            &[0.2, 0.3, 0.5],
            &[(16.0, 2.0, 0.5), (4.0, 1.0, 0.5), (1.0, 4.0, 0.5)],
        );
        let r = microergodic(&k, 1).unwrap();
        assert_eq!(r.kind, MicroergodicKind::SameNu);
        let MicroValue::Scalar(v) = r.primary else {
            panic!()
        };
        assert!((v - 9.6).abs() < 1e-12);
        let single = microergodic(&m(10.0, 1.0, 0.5), 1).unwrap();
        assert_eq!(single.primary, MicroValue::Scalar(10.0));
        assert_eq!(single.kind, MicroergodicKind::SameNu);
    }

    #[test]
    fn microergodic_separable() {
        let a = Matrix::from_rows(&[[5.0, 1.0], [1.0, 5.0]]).unwrap();
        let k = KernelExpr::separable(a, m(10.0, 1.0, 0.5)).unwrap();
        let r = microergodic(&k, 1).unwrap();
        let MicroValue::Matrix(b) = r.primary else {
            panic!()
        };
        let expect = Matrix::from_rows(&[[50.0, 10.0], [10.0, 50.0]]).unwrap();
        assert!(b.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn microergodic_mixed_case_and_rbf() {
        let k = mix(
            &[0.5, 0.3, 0.2],
            &[(1.0, 1.0, 0.5), (1.0, 2.0, 0.5), (1.0, 1.0, 1.5)],
        );
        assert!(matches!(microergodic(&k, 1), Err(Error::MixedCase)));
        let r = KernelExpr::rbf(1.0, 1.0).unwrap();
        assert!(matches!(
            microergodic(&r, 1),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn smoothness_orders() {
        assert_eq!(
            smoothness_order(&sim2_truth()).unwrap(),
            MsdOrder::Finite(0)
        );
        let k = mix(&[0.5, 0.5], &[(1.0, 1.0, 1.5), (1.0, 1.0, 2.5)]);
        assert_eq!(smoothness_order(&k).unwrap(), MsdOrder::Finite(1));
        let r = KernelExpr::rbf(1.0, 1.0).unwrap();
        assert_eq!(smoothness_order(&r).unwrap(), MsdOrder::Infinite);
    }

    #[test]
    fn moment_diagnostics() {
        let mix = sim2_truth();
        let v = moment_integral_diagnostic(&mix, 1, 1, &MOMENT_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Divergent);
        assert!(v.cutoff_values.windows(2).all(|w| w[1] >= w[0]));
        let m32 = m(1.0, 1.0, 1.5);
        let v = moment_integral_diagnostic(&m32, 1, 1, &MOMENT_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Convergent);
        assert!((v.tail_slope + 2.0).abs() < 0.01);
        let v = moment_integral_diagnostic(&m32, 1, 0, &MOMENT_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Convergent);
        for (nu, d) in [(2.5, 0), (2.5, 2), (1.5, 0)] {
            let v = moment_integral_diagnostic(&m(1.0, 1.0, nu), 1, d, &MOMENT_CUTOFFS).unwrap();
            assert_eq!(
                v.classification,
                Classification::Convergent,
                "nu {nu} d {d}"
            );
        }
    }

    #[test]
    fn equivalence_of_matched_mixtures() {
        let other = mix(
            &[0.2, 0.3, 0.5],
            &[(10.0, 1.0, 0.5), (20.0, 0.2, 1.5), (5.0, 2.0, 2.5)],
        );
        let v =
            equivalence_diagnostic(&sim2_truth(), &other, 1, 1.0, &EQUIVALENCE_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Equivalent);
        let v =
            equivalence_diagnostic(&other, &sim2_truth(), 1, 1.0, &EQUIVALENCE_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Equivalent);
    }

    #[test]
    fn mismatched_microergodic_is_not_equivalent() {
        for p in 1..=3 {
            let v = equivalence_diagnostic(
                &m(10.0, 1.0, 0.5),
                &m(20.0, 1.0, 0.5),
                p,
                1.0,
                &EQUIVALENCE_CUTOFFS,
            )
            .unwrap();
            assert_eq!(v.classification, Classification::NotEquivalent, "p = {p}");
        }
    }

    #[test]
    fn matched_single_matern_equivalent_up_to_three_dimensions() {
        for p in 1..=3 {
            let v = equivalence_diagnostic(
                &m(4.0, 1.0, 0.5),
                &m(2.0, 2.0, 0.5),
                p,
                1.0,
                &EQUIVALENCE_CUTOFFS,
            )
            .unwrap();
            assert_eq!(v.classification, Classification::Equivalent, "p = {p}");
        }
        let v = equivalence_diagnostic(
            &m(4.0, 1.0, 0.5),
            &m(2.0, 2.0, 0.5),
            4,
            1.0,
            &EQUIVALENCE_CUTOFFS,
        )
        .unwrap();
        assert_eq!(v.classification, Classification::Inconclusive);
    }

    #[test]
    fn identical_and_nugget_cases() {
        let k = sim2_truth();
        let v = equivalence_diagnostic(&k, &k, 2, 1.0, &EQUIVALENCE_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Equivalent);
        assert_eq!(v.tail_slope, f64::NEG_INFINITY);
        let kn = k.clone().with_nugget(0.1).unwrap();
        let v = equivalence_diagnostic(&k, &kn, 1, 1.0, &EQUIVALENCE_CUTOFFS).unwrap();
        assert_eq!(v.classification, Classification::Orthogonal);
    }

    #[test]
    fn different_smoothness_is_not_equivalent() {
        let v = equivalence_diagnostic(
            &m(1.0, 1.0, 0.5),
            &m(1.0, 1.0, 1.5),
            1,
            1.0,
            &EQUIVALENCE_CUTOFFS,
        )
        .unwrap();
        assert_eq!(v.classification, Classification::NotEquivalent);
    }

    #[test]
    fn invalid_queries() {
        let r = KernelExpr::rbf(1.0, 1.0).unwrap();
        assert!(matches!(
            spectral_density(&r, 1, 1.0),
            Err(Error::UnsupportedKernel(_))
        ));
        assert!(moment_integral_diagnostic(&sim2_truth(), 1, 0, &[10.0, 5.0, 100.0]).is_err());
    }
}
