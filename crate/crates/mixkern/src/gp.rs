//! Exact zero-mean Gaussian-process inference.
//!
//! The covariance of the observations is `C = Gram + (τ² + ε) I`, where
//! `τ²` is the kernel's nugget and `ε` the model's fixed jitter. Multi-output
//! data are flattened location-major, matching the separable Gram layout.

use crate::error::{Error, Result};
use crate::kernel::{self, KernelExpr, ParamPath, SeparableParts};
use crate::linalg::{self, Matrix, SpdFactor};
use crate::rng::RngStream;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Inputs and (possibly multi-output) responses.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `n × p` input locations.
    pub x: Matrix,
    /// `n × m` responses; `m = 1` for scalar outputs.
    pub y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} input rows but {} response rows",
                x.rows(),
                y.rows()
            )));
        }
        Ok(Dataset { x, y })
    }

    pub fn scalar(x: Matrix, y: Vec<f64>) -> Result<Self> {
        Dataset::new(x, Matrix::column(y))
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn outputs(&self) -> usize {
        self.y.cols()
    }

    /// Responses flattened location-major.
    pub fn y_flat(&self) -> &[f64] {
        self.y.as_slice()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let take = |m: &Matrix| {
            let mut data = Vec::with_capacity(idx.len() * m.cols());
            for &i in idx {
                data.extend_from_slice(m.row(i));
            }
            Matrix::from_vec(idx.len(), m.cols(), data)
        };
        Dataset {
            x: take(&self.x),
            y: take(&self.y),
        }
    }
}

/// A kernel plus the fixed diagonal jitter `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct GpModel {
    pub kernel: KernelExpr,
    pub jitter: f64,
    /// Use the eigen-decomposition of `A` for separable kernels instead of
    /// factoring the full `nm × nm` covariance.
    pub kronecker: bool,
}

/// Gaussian conditional of the latent process at test locations.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

impl Posterior {
    pub fn variance(&self) -> Vec<f64> {
        self.cov.diagonal()
    }

    /// Mean reshaped to `n* × m`.
    pub fn mean_by_output(&self, outputs: usize) -> Matrix {
        Matrix::from_vec(self.mean.len() / outputs, outputs, self.mean.clone())
    }
}

/// Result of solving `C α = y`.
pub(crate) struct Solved {
    pub log_det: f64,
    pub alpha: Vec<f64>,
    /// `C⁻¹`, when requested.
    pub inverse: Option<Inverse>,
}

pub(crate) enum Inverse {
    Dense(Matrix),
    /// `C⁻¹ = Σ_a (u_a u_aᵀ) ⊗ M_a⁻¹`, with `M_a = d_a K₀ + s I`.
    Rotated {
        d: Vec<f64>,
        u: Matrix,
        k0: Matrix,
        blocks: Vec<Matrix>,
    },
}

/// Factors `c`, retrying once with ten times the jitter (or a small
/// multiple of the mean diagonal when the jitter is zero).
pub(crate) fn factor_with_retry(c: &mut Matrix, jitter: f64) -> Result<SpdFactor> {
    match linalg::spd_factor(c) {
        Ok(f) => Ok(f),
        Err(Error::NotPositiveDefinite { pivot }) => {
            let n = c.rows().max(1) as f64;
            let mean_diag = c.diagonal().iter().sum::<f64>() / n;
            let extra = if jitter > 0.0 {
                9.0 * jitter
            } else {
                1e-10 * mean_diag.abs().max(f64::MIN_POSITIVE)
            };
            log::debug!(
                "factorization failed at pivot {pivot}; retrying with extra jitter {extra}"
            );
            c.add_diagonal(extra);
            linalg::spd_factor(c)
        }
        Err(e) => Err(e),
    }
}

impl GpModel {
    pub fn new(kernel: KernelExpr, jitter: f64) -> Self {
        GpModel {
            kernel,
            jitter,
            kronecker: false,
        }
    }

    pub fn with_kronecker(mut self, on: bool) -> Self {
        self.kronecker = on;
        self
    }

    fn check(&self, x: &Matrix, y: &[f64]) -> Result<()> {
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::InvalidKernel(format!(
                "jitter must be nonnegative, got {}",
                self.jitter
            )));
        }
        let n = x.rows() * self.kernel.outputs();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} locations with {} outputs",
                y.len(),
                x.rows(),
                self.kernel.outputs()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response {i} is {}", y[i])));
        }
        Ok(())
    }

    /// Observation covariance `Gram + (τ² + ε) I`.
    pub fn covariance(&self, x: &Matrix) -> Result<Matrix> {
        kernel::gram_matrix(&self.kernel, x, self.jitter)
    }

    pub(crate) fn solve(&self, dist: &Matrix, y: &[f64], want_inverse: bool) -> Result<Solved> {
        if self.kronecker {
            if let KernelExpr::Separable(_) = self.kernel.core() {
                return self.solve_kronecker(dist, y, want_inverse);
            }
        }
        let base = kernel::scalar_gram(self.kernel.scalar_part(), dist);
        let mut c = kernel::assemble(&self.kernel, base, self.jitter);
        let f = factor_with_retry(&mut c, self.jitter)?;
        let alpha = f.solve_vec(y)?;
        let inverse = want_inverse.then(|| Inverse::Dense(f.inverse()));
        Ok(Solved {
            log_det: f.log_det(),
            alpha,
            inverse,
        })
    }

    /// `C = K₀ ⊗ A + s I` with `A = U D Uᵀ` decouples into `m` systems
    /// `d_a K₀ + s I` in the rotated output basis.
    fn solve_kronecker(&self, dist: &Matrix, y: &[f64], want_inverse: bool) -> Result<Solved> {
        let KernelExpr::Separable(s) = self.kernel.core() else {
            unreachable!()
        };
        let m = s.outputs();
        let n = dist.rows();
        let shift = self.kernel.tau2() + self.jitter;
        let (d, u) = linalg::symmetric_eigen(s.a())?;
        let k0 = kernel::scalar_gram(s.base(), dist);
        let mut log_det = 0.0;
        let mut alpha = vec![0.0; n * m];
        let mut blocks = Vec::with_capacity(m);
        for (a, &da) in d.iter().enumerate() {
            let mut ma = k0.scaled(da);
            ma.add_diagonal(shift);
            let f = factor_with_retry(&mut ma, shift)?;
            log_det += f.log_det();
            let ya: Vec<f64> = (0..n)
                .map(|i| (0..m).map(|r| u[(r, a)] * y[i * m + r]).sum())
                .collect();
            let beta = f.solve_vec(&ya)?;
            for i in 0..n {
                for r in 0..m {
                    alpha[i * m + r] += u[(r, a)] * beta[i];
                }
            }
            if want_inverse {
                blocks.push(f.inverse());
            }
        }
        Ok(Solved {
            log_det,
            alpha,
            inverse: want_inverse.then_some(Inverse::Rotated { d, u, k0, blocks }),
        })
    }

    pub(crate) fn lml_from(solved: &Solved, y: &[f64]) -> f64 {
        let quad: f64 = linalg::dot(y, &solved.alpha);
        -0.5 * quad - 0.5 * solved.log_det - 0.5 * y.len() as f64 * LN_2PI
    }

    /// Log marginal likelihood and its gradient with respect to every
    /// parameter of the kernel, in canonical order.
    pub(crate) fn lml_and_gradient(&self, dist: &Matrix, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let solved = self.solve(dist, y, true)?;
        let lml = Self::lml_from(&solved, y);
        let a = &solved.alpha;
        let grad = match solved.inverse.expect("inverse requested") {
            Inverse::Dense(mut w) => {
                for (i, &ai) in a.iter().enumerate() {
                    for (wij, &aj) in w.row_mut(i).iter_mut().zip(a) {
                        *wij = ai * aj - *wij;
                    }
                }
                kernel::contract_gradient(&self.kernel, dist, &w)
            }
            Inverse::Rotated { d, u, k0, blocks } => {
                let parts = rotated_parts(&self.kernel, a, &d, &u, &k0, &blocks);
                kernel::contract_separable(&self.kernel, dist, &parts)
            }
        };
        Ok((lml, grad))
    }
}

/// Reduces `W = ααᵀ − C⁻¹` without forming the `nm × nm` inverse.
fn rotated_parts(
    k: &KernelExpr,
    alpha: &[f64],
    d: &[f64],
    u: &Matrix,
    k0: &Matrix,
    blocks: &[Matrix],
) -> SeparableParts {
    let KernelExpr::Separable(s) = k.core() else {
        unreachable!()
    };
    let a = s.a();
    let m = a.rows();
    let n = k0.rows();
    let am = Matrix::from_vec(n, m, alpha.to_vec());
    let proj = am.matmul(a).expect("conformable");
    let mut sw = Matrix::zeros(n, n);
    for i in 0..n {
        let pi = proj.row(i);
        for j in 0..n {
            sw[(i, j)] = linalg::dot(pi, am.row(j));
        }
    }
    let k0a = k0.matmul(&am).expect("conformable");
    let mut t = am.transpose().matmul(&k0a).expect("conformable");
    let mut trace = linalg::dot(alpha, alpha);
    for (b, (mi, &da)) in blocks.iter().zip(d).enumerate() {
        let overlap = linalg::dot(mi.as_slice(), k0.as_slice());
        for (x, &v) in sw.as_mut_slice().iter_mut().zip(mi.as_slice()) {
            *x -= da * v;
        }
        for r in 0..m {
            for c in 0..m {
                t[(r, c)] -= u[(r, b)] * u[(c, b)] * overlap;
            }
        }
        trace -= mi.diagonal().iter().sum::<f64>();
    }
    SeparableParts { sw, t, trace }
}

/// `log N(y | 0, C)`.
pub fn log_marginal_likelihood(model: &GpModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    model.check(x, y)?;
    let dist = kernel::pairwise_distances(x);
    let solved = model.solve(&dist, y, false)?;
    Ok(GpModel::lml_from(&solved, y))
}

/// Gradient of the log marginal likelihood with respect to `params`, in the
/// kernel's natural parameterization.
pub fn lml_gradient(
    model: &GpModel,
    x: &Matrix,
    y: &[f64],
    params: &[ParamPath],
) -> Result<Vec<f64>> {
    model.check(x, y)?;
    let all = model.kernel.params();
    let index: Vec<usize> = params
        .iter()
        .map(|p| {
            all.iter()
                .position(|q| q == p)
                .ok_or_else(|| Error::UnknownParameter(p.to_string()))
        })
        .collect::<Result<_>>()?;
    let dist = kernel::pairwise_distances(x);
    let (_, grad) = model.lml_and_gradient(&dist, y)?;
    Ok(index.into_iter().map(|i| grad[i]).collect())
}

/// Posterior of the latent process at `xtest` given `y` observed at `xtrain`.
///
/// The mean is `K*ᵀ C⁻¹ y` and the covariance `K** − K*ᵀ C⁻¹ K*`, where the
/// cross and test covariances exclude the nugget and the jitter. Small
/// negative variances from rounding are clamped to zero.
pub fn posterior_predict(
    model: &GpModel,
    xtrain: &Matrix,
    y: &[f64],
    xtest: &Matrix,
) -> Result<Posterior> {
    model.check(xtrain, y)?;
    if xtrain.cols() != xtest.cols() {
        return Err(Error::DimensionMismatch(format!(
            "training inputs have dimension {}, test inputs {}",
            xtrain.cols(),
            xtest.cols()
        )));
    }
    let mut c = model.covariance(xtrain)?;
    let f = factor_with_retry(&mut c, model.jitter)?;
    let alpha = f.solve_vec(y)?;
    let kx = kernel::cross_covariance(&model.kernel, xtrain, xtest)?;
    let kt = kx.transpose();
    let mean = kt.matvec(&alpha)?;
    let mut v = Matrix::zeros(kt.rows(), kt.cols());
    for r in 0..kt.rows() {
        v.row_mut(r).copy_from_slice(&f.forward_solve(kt.row(r))?);
    }
    let mut cov = kernel::cross_covariance(&model.kernel, xtest, xtest)?;
    let vvt = v.matmul(&v.transpose())?;
    for (c, q) in cov.as_mut_slice().iter_mut().zip(vvt.as_slice()) {
        *c -= q;
    }
    let total = model.kernel.prior_variance().max(f64::MIN_POSITIVE);
    for i in 0..cov.rows() {
        let d = cov[(i, i)];
        if d < 0.0 {
            if d < -1e-8 * total {
                log::warn!("posterior variance {d} at test point {i} clamped to zero");
            }
            cov[(i, i)] = 0.0;
        }
    }
    Ok(Posterior { mean, cov })
}

/// `t` independent draws from `N(0, C)`, row `r` from substream `[r]` of `seed`.
pub fn sample_prior(model: &GpModel, x: &Matrix, t: usize, seed: u64) -> Result<Matrix> {
    sample_prior_with(model, x, t, &RngStream::new(seed, &[]))
}

/// Like [`sample_prior`], with row `r` drawn from `base.child(r)`.
pub fn sample_prior_with(
    model: &GpModel,
    x: &Matrix,
    t: usize,
    base: &RngStream,
) -> Result<Matrix> {
    if t == 0 {
        return Err(Error::InvalidConfig(
            "replication count must be at least 1".into(),
        ));
    }
    let mut c = model.covariance(x)?;
    let f = factor_with_retry(&mut c, model.jitter)?;
    let n = c.rows();
    let mut out = Matrix::zeros(t, n);
    for r in 0..t {
        let z = base.child(r as u64).normals(n);
        out.row_mut(r).copy_from_slice(&linalg::sample_mvn(&f, &z)?);
    }
    Ok(out)
}

/// Mean squared difference.
pub fn mse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} targets",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::DimensionMismatch("no values to compare".into()));
    }
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predicted.len() as f64)
}
