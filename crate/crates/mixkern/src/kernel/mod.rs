//! Kernel expressions: Matérn and RBF leaves, weighted additive mixtures,
//! separable multi-output kernels and an optional root nugget.
//!
//! A [`KernelExpr`] is an immutable value. Every scalar parameter is
//! addressed by a [`ParamPath`]; [`KernelExpr::params`] lists them in a
//! fixed canonical order that the likelihood gradient and the optimizer
//! share.

mod eval;
mod grad;
mod spec;

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub(crate) use eval::{assemble, pairwise_distances, scalar_gram};
pub use eval::{cross_covariance, eval_kernel, gram_matrix, KernelValue};
pub use grad::gram_gradient;
pub(crate) use grad::{contract_gradient, contract_separable, SeparableParts};
pub use spec::parse_kernel;

const SIMPLEX_TOL: f64 = 1e-12;

/// Half-integer smoothness `ν = k + 1/2` for `k ∈ 0..=4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Smoothness(u8);

impl Smoothness {
    pub const HALF: Smoothness = Smoothness(0);
    pub const THREE_HALVES: Smoothness = Smoothness(1);
    pub const FIVE_HALVES: Smoothness = Smoothness(2);
    pub const SEVEN_HALVES: Smoothness = Smoothness(3);
    pub const NINE_HALVES: Smoothness = Smoothness(4);

    pub fn from_nu(nu: f64) -> Result<Self> {
        let k = nu - 0.5;
        if (0.0..=4.0).contains(&k) && k.fract() == 0.0 {
            Ok(Smoothness(k as u8))
        } else {
            Err(Error::UnsupportedNu(nu))
        }
    }

    /// The integer `k` in `ν = k + 1/2`.
    pub fn k(self) -> usize {
        self.0 as usize
    }

    pub fn nu(self) -> f64 {
        self.0 as f64 + 0.5
    }

    /// Mean-square differentiability order `⌈ν⌉ − 1`.
    pub fn order(self) -> u32 {
        self.0 as u32
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nu())
    }
}

/// Matérn kernel `σ² · 2^{1−ν}/Γ(ν) · (αd)^ν K_ν(αd)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matern {
    pub sigma2: f64,
    pub alpha: f64,
    pub nu: Smoothness,
}

impl Matern {
    pub fn new(sigma2: f64, alpha: f64, nu: f64) -> Result<Self> {
        let m = Matern {
            sigma2,
            alpha,
            nu: Smoothness::from_nu(nu)?,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        positive("sigma2", self.sigma2)?;
        positive("alpha", self.alpha)
    }
}

/// Squared-exponential kernel `σ² exp(−α d²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rbf {
    pub sigma2: f64,
    pub alpha: f64,
}

impl Rbf {
    pub fn new(sigma2: f64, alpha: f64) -> Result<Self> {
        let r = Rbf { sigma2, alpha };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        positive("sigma2", self.sigma2)?;
        positive("alpha", self.alpha)
    }
}

/// A scalar kernel that can appear as a mixture component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Leaf {
    Matern(Matern),
    Rbf(Rbf),
}

impl Leaf {
    pub fn sigma2(&self) -> f64 {
        match self {
            Leaf::Matern(m) => m.sigma2,
            Leaf::Rbf(r) => r.sigma2,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Leaf::Matern(m) => m.alpha,
            Leaf::Rbf(r) => r.alpha,
        }
    }

    /// `None` for RBF leaves.
    pub fn smoothness(&self) -> Option<Smoothness> {
        match self {
            Leaf::Matern(m) => Some(m.nu),
            Leaf::Rbf(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Leaf::Matern(m) => m.validate(),
            Leaf::Rbf(r) => r.validate(),
        }
    }
}

/// Weighted sum `Σ w_l K_l` of scalar leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    weights: Vec<f64>,
    components: Vec<Leaf>,
}

impl Mixture {
    /// Builds a mixture whose weights lie on the probability simplex.
    pub fn new(weights: Vec<f64>, components: Vec<Leaf>) -> Result<Self> {
        let m = Mixture::new_unnormalized(weights, components)?;
        let total: f64 = m.weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidKernel(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(m)
    }

    /// Like [`Mixture::new`] but only requires nonnegative weights. A
    /// warning is logged when they do not sum to one.
    pub fn new_unnormalized(weights: Vec<f64>, components: Vec<Leaf>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidKernel(
                "mixture needs at least one component".into(),
            ));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidKernel(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        for (l, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidKernel(format!("weight {} is {w}", l + 1)));
            }
        }
        for c in &components {
            c.validate()?;
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            log::warn!("mixture weights sum to {total}; using them as given");
        }
        let nus: Vec<Smoothness> = components.iter().filter_map(Leaf::smoothness).collect();
        let mut sorted = nus.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() > 1 && sorted.len() < nus.len() {
            log::warn!(
                "mixture smoothness values {nus:?} are neither all distinct nor all equal; \
                 identifiability results do not cover this case"
            );
        }
        Ok(Mixture {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Leaf] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        (self.weights.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
    }
}

/// Multi-output kernel `A · K₀(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Separable {
    a: Matrix,
    base: Box<KernelExpr>,
}

impl Separable {
    pub fn new(a: Matrix, base: KernelExpr) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::InvalidKernel(format!(
                "output covariance must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_symmetric(SIMPLEX_TOL) {
            return Err(Error::InvalidKernel(
                "output covariance is not symmetric".into(),
            ));
        }
        if linalg::spd_factor(&a).is_err() {
            return Err(Error::InvalidKernel(
                "output covariance is not positive definite".into(),
            ));
        }
        if !base.is_scalar() {
            return Err(Error::InvalidKernel(
                "separable base must be a Matérn, RBF or mixture kernel".into(),
            ));
        }
        Ok(Separable {
            a,
            base: Box::new(base),
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn base(&self) -> &KernelExpr {
        &self.base
    }

    pub fn outputs(&self) -> usize {
        self.a.rows()
    }

    /// Lower Cholesky factor `G` with `A = G·Gᵀ`.
    pub fn factor(&self) -> Matrix {
        factor_of(&self.a)
    }
}

/// Root wrapper adding `τ² 1{x = x'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Nugget {
    tau2: f64,
    base: Box<KernelExpr>,
}

impl Nugget {
    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn base(&self) -> &KernelExpr {
        &self.base
    }
}

/// A kernel expression.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelExpr {
    Matern(Matern),
    Rbf(Rbf),
    Mixture(Mixture),
    Separable(Separable),
    Nugget(Nugget),
}

/// Address of one scalar kernel parameter.
///
/// Component and factor indices are zero-based; the display form is
/// one-based (`w1`, `sigma2_2`, `G21`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamPath {
    /// Mixture weight of component `l`.
    Weight(usize),
    /// Variance of the single leaf (`None`) or of mixture component `l`.
    Sigma2(Option<usize>),
    /// Inverse length of the single leaf or of mixture component `l`.
    Alpha(Option<usize>),
    /// Entry `(r, c)`, `r ≥ c`, of the lower factor `G` with `A = G·Gᵀ`.
    Factor(usize, usize),
    Tau2,
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ParamPath::Weight(l) => write!(f, "w{}", l + 1),
            ParamPath::Sigma2(None) => f.write_str("sigma2"),
            ParamPath::Sigma2(Some(l)) => write!(f, "sigma2_{}", l + 1),
            ParamPath::Alpha(None) => f.write_str("alpha"),
            ParamPath::Alpha(Some(l)) => write!(f, "alpha_{}", l + 1),
            ParamPath::Factor(r, c) => write!(f, "G{}{}", r + 1, c + 1),
            ParamPath::Tau2 => f.write_str("tau2"),
        }
    }
}

impl std::str::FromStr for ParamPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownParameter(s.to_string());
        let index = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(unknown()),
            }
        };
        match s {
            "sigma2" => return Ok(ParamPath::Sigma2(None)),
            "alpha" => return Ok(ParamPath::Alpha(None)),
            "tau2" => return Ok(ParamPath::Tau2),
            _ => {}
        }
        if let Some(t) = s.strip_prefix("sigma2_") {
            Ok(ParamPath::Sigma2(Some(index(t)?)))
        } else if let Some(t) = s.strip_prefix("alpha_") {
            Ok(ParamPath::Alpha(Some(index(t)?)))
        } else if let Some(t) = s.strip_prefix('w') {
            Ok(ParamPath::Weight(index(t)?))
        } else if let Some(t) = s.strip_prefix('G') {
            let d: Vec<char> = t.chars().collect();
            match d.as_slice() {
                [r, c] if r.is_ascii_digit() && c.is_ascii_digit() => {
                    let (r, c) = (index(&r.to_string())?, index(&c.to_string())?);
                    if c > r {
                        return Err(unknown());
                    }
                    Ok(ParamPath::Factor(r, c))
                }
                _ => Err(unknown()),
            }
        } else {
            Err(unknown())
        }
    }
}

impl KernelExpr {
    pub fn matern(sigma2: f64, alpha: f64, nu: f64) -> Result<Self> {
        Ok(KernelExpr::Matern(Matern::new(sigma2, alpha, nu)?))
    }

    pub fn rbf(sigma2: f64, alpha: f64) -> Result<Self> {
        Ok(KernelExpr::Rbf(Rbf::new(sigma2, alpha)?))
    }

    /// Mixture with simplex weights. Components must be Matérn or RBF leaves.
    pub fn mixture(weights: Vec<f64>, components: Vec<KernelExpr>) -> Result<Self> {
        Ok(KernelExpr::Mixture(Mixture::new(
            weights,
            leaves(components)?,
        )?))
    }

    /// Mixture with arbitrary nonnegative weights.
    pub fn mixture_unnormalized(weights: Vec<f64>, components: Vec<KernelExpr>) -> Result<Self> {
        Ok(KernelExpr::Mixture(Mixture::new_unnormalized(
            weights,
            leaves(components)?,
        )?))
    }

    pub fn separable(a: Matrix, base: KernelExpr) -> Result<Self> {
        Ok(KernelExpr::Separable(Separable::new(a, base)?))
    }

    /// Wraps `self` with a nugget `τ² ≥ 0`.
    pub fn with_nugget(self, tau2: f64) -> Result<Self> {
        if !(tau2.is_finite() && tau2 >= 0.0) {
            return Err(Error::InvalidKernel(format!(
                "tau2 must be nonnegative, got {tau2}"
            )));
        }
        if matches!(self, KernelExpr::Nugget(_)) {
            return Err(Error::InvalidKernel("only one nugget is allowed".into()));
        }
        Ok(KernelExpr::Nugget(Nugget {
            tau2,
            base: Box::new(self),
        }))
    }

    /// Checks every structural and positivity invariant.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelExpr::Matern(m) => m.validate(),
            KernelExpr::Rbf(r) => r.validate(),
            KernelExpr::Mixture(m) => {
                Mixture::new_unnormalized(m.weights.clone(), m.components.clone()).map(|_| ())
            }
            KernelExpr::Separable(s) => {
                Separable::new(s.a.clone(), (*s.base).clone())?;
                s.base.validate()
            }
            KernelExpr::Nugget(n) => {
                if !(n.tau2.is_finite() && n.tau2 >= 0.0) {
                    return Err(Error::InvalidKernel(format!("tau2 is {}", n.tau2)));
                }
                if matches!(*n.base, KernelExpr::Nugget(_)) {
                    return Err(Error::InvalidKernel("only one nugget is allowed".into()));
                }
                n.base.validate()
            }
        }
    }

    /// Matérn, RBF or mixture.
    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            KernelExpr::Matern(_) | KernelExpr::Rbf(_) | KernelExpr::Mixture(_)
        )
    }

    /// The expression without its root nugget.
    pub fn core(&self) -> &KernelExpr {
        match self {
            KernelExpr::Nugget(n) => &n.base,
            k => k,
        }
    }

    /// Nugget variance, zero when absent.
    pub fn tau2(&self) -> f64 {
        match self {
            KernelExpr::Nugget(n) => n.tau2,
            _ => 0.0,
        }
    }

    /// Number of outputs `m` (1 for scalar kernels).
    pub fn outputs(&self) -> usize {
        match self.core() {
            KernelExpr::Separable(s) => s.outputs(),
            _ => 1,
        }
    }

    /// Scalar kernel at the heart of the expression (the base of a separable kernel).
    pub fn scalar_part(&self) -> &KernelExpr {
        match self.core() {
            KernelExpr::Separable(s) => &s.base,
            k => k,
        }
    }

    /// Average marginal variance `K(x, x)` per output, excluding the nugget.
    pub fn prior_variance(&self) -> f64 {
        let base = eval::scalar_value(self.scalar_part(), 0.0);
        match self.core() {
            KernelExpr::Separable(s) => {
                base * s.a.diagonal().iter().sum::<f64>() / s.outputs() as f64
            }
            _ => base,
        }
    }

    /// Leaves of the scalar part, with their weights (1 for a single leaf).
    pub fn weighted_leaves(&self) -> Vec<(f64, Leaf)> {
        match self.scalar_part() {
            KernelExpr::Matern(m) => vec![(1.0, Leaf::Matern(*m))],
            KernelExpr::Rbf(r) => vec![(1.0, Leaf::Rbf(*r))],
            KernelExpr::Mixture(m) => m
                .weights
                .iter()
                .copied()
                .zip(m.components.iter().copied())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Parameter paths in canonical order: factor entries (lower triangle,
    /// row-major), then the scalar part (weights, then `σ²_l, α_l` per
    /// component), then `τ²`.
    pub fn params(&self) -> Vec<ParamPath> {
        let mut out = Vec::new();
        if let KernelExpr::Separable(s) = self.core() {
            for r in 0..s.outputs() {
                for c in 0..=r {
                    out.push(ParamPath::Factor(r, c));
                }
            }
        }
        match self.scalar_part() {
            KernelExpr::Matern(_) | KernelExpr::Rbf(_) => {
                out.push(ParamPath::Sigma2(None));
                out.push(ParamPath::Alpha(None));
            }
            KernelExpr::Mixture(m) => {
                out.extend((0..m.len()).map(ParamPath::Weight));
                for l in 0..m.len() {
                    out.push(ParamPath::Sigma2(Some(l)));
                    out.push(ParamPath::Alpha(Some(l)));
                }
            }
            _ => {}
        }
        if matches!(self, KernelExpr::Nugget(_)) {
            out.push(ParamPath::Tau2);
        }
        out
    }

    pub fn get_param(&self, path: &ParamPath) -> Result<f64> {
        let unknown = || Error::UnknownParameter(path.to_string());
        match *path {
            ParamPath::Tau2 => match self {
                KernelExpr::Nugget(n) => Ok(n.tau2),
                _ => Err(unknown()),
            },
            ParamPath::Factor(r, c) => match self.core() {
                KernelExpr::Separable(s) if c <= r && r < s.outputs() => Ok(s.factor()[(r, c)]),
                _ => Err(unknown()),
            },
            ParamPath::Weight(l) => match self.scalar_part() {
                KernelExpr::Mixture(m) if l < m.len() => Ok(m.weights[l]),
                _ => Err(unknown()),
            },
            ParamPath::Sigma2(idx) | ParamPath::Alpha(idx) => {
                let leaf = self.leaf(idx).ok_or_else(unknown)?;
                Ok(match path {
                    ParamPath::Sigma2(_) => leaf.sigma2(),
                    _ => leaf.alpha(),
                })
            }
        }
    }

    /// Returns a copy with one parameter replaced. No positivity checks are
    /// applied, so finite-difference probes may step anywhere.
    pub fn with_param(&self, path: &ParamPath, value: f64) -> Result<KernelExpr> {
        let mut k = self.clone();
        k.set_param(path, value)?;
        Ok(k)
    }

    fn set_param(&mut self, path: &ParamPath, value: f64) -> Result<()> {
        let unknown = || Error::UnknownParameter(path.to_string());
        match *path {
            ParamPath::Tau2 => match self {
                KernelExpr::Nugget(n) => {
                    n.tau2 = value;
                    Ok(())
                }
                _ => Err(unknown()),
            },
            ParamPath::Factor(r, c) => match self.core_mut() {
                KernelExpr::Separable(s) if c <= r && r < s.outputs() => {
                    let mut g = s.factor();
                    g[(r, c)] = value;
                    s.a = factor_product(&g);
                    Ok(())
                }
                _ => Err(unknown()),
            },
            ParamPath::Weight(l) => match self.scalar_part_mut() {
                KernelExpr::Mixture(m) if l < m.len() => {
                    m.weights[l] = value;
                    Ok(())
                }
                _ => Err(unknown()),
            },
            ParamPath::Sigma2(idx) => {
                *self.leaf_mut(idx).ok_or_else(unknown)?.0 = value;
                Ok(())
            }
            ParamPath::Alpha(idx) => {
                *self.leaf_mut(idx).ok_or_else(unknown)?.1 = value;
                Ok(())
            }
        }
    }

    /// Values of [`KernelExpr::params`], in order.
    pub fn param_values(&self) -> Vec<f64> {
        self.params()
            .iter()
            .map(|p| self.get_param(p).expect("listed parameter exists"))
            .collect()
    }

    /// Replaces every parameter at once, in canonical order. Unchecked like
    /// [`KernelExpr::with_param`].
    pub fn with_param_values(&self, values: &[f64]) -> Result<KernelExpr> {
        let params = self.params();
        if values.len() != params.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                values.len(),
                params.len()
            )));
        }
        let mut k = self.clone();
        let mut rest = 0;
        if let KernelExpr::Separable(s) = k.core_mut() {
            let m = s.outputs();
            let mut g = Matrix::zeros(m, m);
            for r in 0..m {
                for c in 0..=r {
                    g[(r, c)] = values[rest];
                    rest += 1;
                }
            }
            s.a = factor_product(&g);
        }
        for (p, &v) in params[rest..].iter().zip(&values[rest..]) {
            k.set_param(p, v)?;
        }
        Ok(k)
    }

    fn core_mut(&mut self) -> &mut KernelExpr {
        match self {
            KernelExpr::Nugget(n) => &mut n.base,
            k => k,
        }
    }

    fn scalar_part_mut(&mut self) -> &mut KernelExpr {
        match self.core_mut() {
            KernelExpr::Separable(s) => &mut s.base,
            k => k,
        }
    }

    fn leaf(&self, idx: Option<usize>) -> Option<Leaf> {
        match (self.scalar_part(), idx) {
            (KernelExpr::Matern(m), None) => Some(Leaf::Matern(*m)),
            (KernelExpr::Rbf(r), None) => Some(Leaf::Rbf(*r)),
            (KernelExpr::Mixture(m), Some(l)) => m.components.get(l).copied(),
            _ => None,
        }
    }

    fn leaf_mut(&mut self, idx: Option<usize>) -> Option<(&mut f64, &mut f64)> {
        match (self.scalar_part_mut(), idx) {
            (KernelExpr::Matern(m), None) => Some((&mut m.sigma2, &mut m.alpha)),
            (KernelExpr::Rbf(r), None) => Some((&mut r.sigma2, &mut r.alpha)),
            (KernelExpr::Mixture(m), Some(l)) => match m.components.get_mut(l)? {
                Leaf::Matern(x) => Some((&mut x.sigma2, &mut x.alpha)),
                Leaf::Rbf(x) => Some((&mut x.sigma2, &mut x.alpha)),
            },
            _ => None,
        }
    }
}

fn leaves(components: Vec<KernelExpr>) -> Result<Vec<Leaf>> {
    components
        .into_iter()
        .map(|c| match c {
            KernelExpr::Matern(m) => Ok(Leaf::Matern(m)),
            KernelExpr::Rbf(r) => Ok(Leaf::Rbf(r)),
            _ => Err(Error::InvalidKernel(
                "mixture components must be Matérn or RBF leaves".into(),
            )),
        })
        .collect()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// `G·Gᵀ`, computed once per pair and mirrored so the result is exactly symmetric.
fn factor_product(g: &Matrix) -> Matrix {
    let m = g.rows();
    let mut a = Matrix::zeros(m, m);
    for r in 0..m {
        for c in 0..=r {
            let v = linalg::dot(g.row(r), g.row(c));
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
    }
    a
}

/// Lower Cholesky factor of a small SPD matrix; falls back to a zero
/// matrix when `a` is not positive definite (reachable only through
/// unchecked parameter updates).
fn factor_of(a: &Matrix) -> Matrix {
    linalg::spd_factor(a)
        .map(|f| f.lower().clone())
        .unwrap_or_else(|_| Matrix::zeros(a.rows(), a.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim2_truth() -> KernelExpr {
        KernelExpr::mixture(
            vec![0.1, 0.3, 0.6],
            vec![
                KernelExpr::matern(16.0, 4.0, 0.5).unwrap(),
                KernelExpr::matern(4.0, 2.0, 1.5).unwrap(),
                KernelExpr::matern(1.0, 1.0, 2.5).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn smoothness_accepts_half_integers_only() {
        assert_eq!(Smoothness::from_nu(2.5).unwrap(), Smoothness::FIVE_HALVES);
        assert_eq!(Smoothness::from_nu(4.5).unwrap().order(), 4);
        for bad in [1.0, 5.5, -0.5, f64::NAN, 0.25] {
            assert!(matches!(
                Smoothness::from_nu(bad),
                Err(Error::UnsupportedNu(_))
            ));
        }
    }

    #[test]
    fn constructors_reject_invalid_values() {
        assert!(KernelExpr::matern(0.0, 1.0, 0.5).is_err());
        assert!(KernelExpr::rbf(1.0, -1.0).is_err());
        let comps = || vec![KernelExpr::matern(1.0, 1.0, 0.5).unwrap(); 2];
        assert!(KernelExpr::mixture(vec![0.5, 0.6], comps()).is_err());
        assert!(KernelExpr::mixture(vec![-0.5, 1.5], comps()).is_err());
        assert!(KernelExpr::mixture_unnormalized(vec![0.5, 0.49], comps()).is_ok());
        let sep = KernelExpr::separable(
            Matrix::identity(2),
            KernelExpr::matern(1.0, 1.0, 0.5).unwrap(),
        )
        .unwrap();
        assert!(KernelExpr::mixture(vec![1.0], vec![sep.clone()]).is_err());
        let bad_a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(KernelExpr::separable(bad_a, KernelExpr::matern(1.0, 1.0, 0.5).unwrap()).is_err());
        let nug = sep.with_nugget(0.1).unwrap();
        assert!(nug.clone().with_nugget(0.1).is_err());
        assert!(KernelExpr::separable(Matrix::identity(2), nug).is_err());
    }

    #[test]
    fn canonical_params_for_mixture_with_nugget() {
        let k = sim2_truth().with_nugget(0.1).unwrap();
        let names: Vec<String> = k.params().iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            [
                "w1", "w2", "w3", "sigma2_1", "alpha_1", "sigma2_2", "alpha_2", "sigma2_3",
                "alpha_3", "tau2"
            ]
        );
        assert_eq!(
            k.param_values(),
            vec![0.1, 0.3, 0.6, 16.0, 4.0, 4.0, 2.0, 1.0, 1.0, 0.1]
        );
        for n in names {
            let p: ParamPath = n.parse().unwrap();
            assert_eq!(p.to_string(), n);
        }
    }

    #[test]
    fn separable_params_roundtrip_through_factor() {
        let a = Matrix::from_rows(&[[5.0, 1.0], [1.0, 5.0]]).unwrap();
        let k =
            KernelExpr::separable(a.clone(), KernelExpr::matern(10.0, 1.0, 0.5).unwrap()).unwrap();
        let names: Vec<String> = k.params().iter().map(ToString::to_string).collect();
        assert_eq!(names, ["G11", "G21", "G22", "sigma2", "alpha"]);
        let v = k.param_values();
        assert!((v[0] - 5f64.sqrt()).abs() < 1e-15);
        let back = k.with_param_values(&v).unwrap();
        let KernelExpr::Separable(s) = back else {
            panic!()
        };
        assert!(s.a().max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn with_param_touches_one_value() {
        let k = sim2_truth();
        let k2 = k.with_param(&ParamPath::Alpha(Some(1)), 3.0).unwrap();
        assert_eq!(k2.get_param(&ParamPath::Alpha(Some(1))).unwrap(), 3.0);
        assert_eq!(k2.get_param(&ParamPath::Sigma2(Some(1))).unwrap(), 4.0);
        assert!(matches!(
            k.get_param(&ParamPath::Tau2),
            Err(Error::UnknownParameter(_))
        ));
        assert!(k.get_param(&ParamPath::Sigma2(None)).is_err());
        assert!(k.get_param(&ParamPath::Weight(3)).is_err());
    }

    #[test]
    fn unknown_param_names() {
        for bad in ["w0", "beta", "G12", "sigma2_x", "G1"] {
            assert!(bad.parse::<ParamPath>().is_err(), "{bad}");
        }
    }

    #[test]
    fn prior_variance_and_outputs() {
        assert!((sim2_truth().prior_variance() - (1.6 + 1.2 + 0.6)).abs() < 1e-12);
        let a = Matrix::from_rows(&[[5.0, 1.0], [1.0, 3.0]]).unwrap();
        let k = KernelExpr::separable(a, KernelExpr::matern(10.0, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(k.outputs(), 2);
        assert_eq!(k.prior_variance(), 40.0);
    }
}
