use super::{KernelExpr, Leaf};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Ascending coefficients of `P_k` in `K = σ² P_k(t) e^{−t}`, `t = αd`.
const MATERN_COEF: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 1.0 / 3.0, 0.0, 0.0],
    [1.0, 1.0, 2.0 / 5.0, 1.0 / 15.0, 0.0],
    [1.0, 1.0, 3.0 / 7.0, 2.0 / 21.0, 1.0 / 105.0],
];

/// `P_k(t) e^{−t}` and its `t`-derivative `(P_k'(t) − P_k(t)) e^{−t}`.
#[inline]
pub(crate) fn matern_unit(k: usize, t: f64) -> (f64, f64) {
    let c = &MATERN_COEF[k];
    let mut p = c[k];
    let mut dp = 0.0;
    for i in (0..k).rev() {
        dp = dp * t + p;
        p = p * t + c[i];
    }
    let e = (-t).exp();
    (p * e, (dp - p) * e)
}

impl Leaf {
    /// `K(d)`.
    #[inline]
    pub fn value(&self, d: f64) -> f64 {
        if d == 0.0 {
            return self.sigma2();
        }
        match self {
            Leaf::Matern(m) => m.sigma2 * matern_unit(m.nu.k(), m.alpha * d).0,
            Leaf::Rbf(r) => r.sigma2 * (-r.alpha * d * d).exp(),
        }
    }

    /// `(K(d)/σ², ∂K/∂α)` at distance `d`.
    #[inline]
    pub(crate) fn unit_and_dalpha(&self, d: f64) -> (f64, f64) {
        if d == 0.0 {
            return (1.0, 0.0);
        }
        match self {
            Leaf::Matern(m) => {
                let (u, du) = matern_unit(m.nu.k(), m.alpha * d);
                (u, m.sigma2 * d * du)
            }
            Leaf::Rbf(r) => {
                let u = (-r.alpha * d * d).exp();
                (u, -r.sigma2 * d * d * u)
            }
        }
    }
}

/// Value of the scalar part of `k` at distance `d`.
pub(crate) fn scalar_value(k: &KernelExpr, d: f64) -> f64 {
    match k.scalar_part() {
        KernelExpr::Matern(m) => Leaf::Matern(*m).value(d),
        KernelExpr::Rbf(r) => Leaf::Rbf(*r).value(d),
        KernelExpr::Mixture(m) => m
            .weights()
            .iter()
            .zip(m.components())
            .map(|(w, c)| w * c.value(d))
            .sum(),
        _ => unreachable!("scalar part is always a leaf or a mixture"),
    }
}

/// Result of a single kernel evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelValue {
    Scalar(f64),
    /// `m × m` block of a separable kernel.
    Block(Matrix),
}

impl KernelValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            KernelValue::Scalar(v) => Some(*v),
            KernelValue::Block(_) => None,
        }
    }

    pub fn into_matrix(self) -> Matrix {
        match self {
            KernelValue::Scalar(v) => Matrix::from_vec(1, 1, vec![v]),
            KernelValue::Block(m) => m,
        }
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `K(x, y)`. The nugget is added only when `x` and `y` are bitwise equal.
pub fn eval_kernel(k: &KernelExpr, x: &[f64], y: &[f64]) -> Result<KernelValue> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "points have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    let base = scalar_value(k, distance(x, y));
    let same = x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits());
    let tau2 = if same { k.tau2() } else { 0.0 };
    Ok(match k.core() {
        KernelExpr::Separable(s) => {
            let mut block = s.a().scaled(base);
            block.add_diagonal(tau2);
            KernelValue::Block(block)
        }
        _ => KernelValue::Scalar(base + tau2),
    })
}

/// Full `n × n` matrix of Euclidean distances between the rows of `x`.
pub(crate) fn pairwise_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = distance(x.row(i), x.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Gram matrix of the scalar part of `k` from precomputed distances.
/// The upper triangle is computed and mirrored, so the result is exactly
/// symmetric.
pub(crate) fn scalar_gram(k: &KernelExpr, dist: &Matrix) -> Matrix {
    let n = dist.rows();
    let mut g = Matrix::zeros(n, n);
    let diag = scalar_value(k, 0.0);
    for i in 0..n {
        g[(i, i)] = diag;
        for j in i + 1..n {
            let v = scalar_value(k, dist[(i, j)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `base ⊗ A` in location-major order: entry `(i·m + a, j·m + b)` is `base_ij A_ab`.
pub(crate) fn kron_location_major(base: &Matrix, a: &Matrix) -> Matrix {
    let (n, m) = (base.rows(), a.rows());
    let nb = base.cols();
    let mut out = Matrix::zeros(n * m, nb * m);
    for i in 0..n {
        for j in 0..nb {
            let g = base[(i, j)];
            for r in 0..m {
                for c in 0..m {
                    out[(i * m + r, j * m + c)] = g * a[(r, c)];
                }
            }
        }
    }
    out
}

/// Builds the covariance `Gram + (τ² + jitter) I` from a scalar base Gram.
pub(crate) fn assemble(k: &KernelExpr, base: Matrix, jitter: f64) -> Matrix {
    let mut c = match k.core() {
        KernelExpr::Separable(s) => kron_location_major(&base, s.a()),
        _ => base,
    };
    c.add_diagonal(k.tau2() + jitter);
    c
}

fn check_inputs(x: &Matrix, jitter: f64) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::DimensionMismatch("no input locations".into()));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::InvalidKernel(format!(
            "jitter must be nonnegative, got {jitter}"
        )));
    }
    Ok(())
}

/// Gram matrix of `k` at the rows of `x`, plus `jitter` on the diagonal.
///
/// For a separable kernel the result is `N × N` with `N = n·m`, ordered
/// location-major. The nugget is added on the diagonal only.
pub fn gram_matrix(k: &KernelExpr, x: &Matrix, jitter: f64) -> Result<Matrix> {
    check_inputs(x, jitter)?;
    let base = scalar_gram(k, &pairwise_distances(x));
    Ok(assemble(k, base, jitter))
}

/// Cross-covariance `K(xa, xb)` of the latent process (no nugget).
pub fn cross_covariance(k: &KernelExpr, xa: &Matrix, xb: &Matrix) -> Result<Matrix> {
    if xa.cols() != xb.cols() {
        return Err(Error::DimensionMismatch(format!(
            "inputs have dimensions {} and {}",
            xa.cols(),
            xb.cols()
        )));
    }
    let base = Matrix::from_fn(xa.rows(), xb.rows(), |i, j| {
        scalar_value(k, distance(xa.row(i), xb.row(j)))
    });
    Ok(match k.core() {
        KernelExpr::Separable(s) => kron_location_major(&base, s.a()),
        _ => base,
    })
}
