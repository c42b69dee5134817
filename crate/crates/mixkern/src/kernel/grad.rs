use super::eval::{kron_location_major, pairwise_distances, scalar_gram};
use super::{KernelExpr, Leaf, ParamPath};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Weight and leaf addressed by a `Sigma2`/`Alpha` path.
fn addressed_leaf(k: &KernelExpr, idx: Option<usize>) -> Option<(f64, Leaf)> {
    match (k.scalar_part(), idx) {
        (KernelExpr::Matern(m), None) => Some((1.0, Leaf::Matern(*m))),
        (KernelExpr::Rbf(r), None) => Some((1.0, Leaf::Rbf(*r))),
        (KernelExpr::Mixture(m), Some(l)) if l < m.len() => {
            Some((m.weights()[l], m.components()[l]))
        }
        _ => None,
    }
}

fn base_derivative(dist: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let n = dist.rows();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = f(0.0);
        for j in i + 1..n {
            let v = f(dist[(i, j)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `∂Gram/∂θ` for the parameter at `param`, evaluated analytically.
///
/// Factor paths differentiate through `A = G·Gᵀ`; the jitter does not
/// depend on any parameter and so never appears.
pub fn gram_gradient(k: &KernelExpr, x: &Matrix, param: &ParamPath) -> Result<Matrix> {
    let unknown = || Error::UnknownParameter(param.to_string());
    let m = k.outputs();
    let n = x.rows();
    if *param == ParamPath::Tau2 {
        return match k {
            KernelExpr::Nugget(_) => Ok(Matrix::identity(n * m)),
            _ => Err(unknown()),
        };
    }
    let dist = pairwise_distances(x);
    let scalar = k.scalar_part();
    let d0 = match *param {
        ParamPath::Weight(l) => match scalar {
            KernelExpr::Mixture(mix) if l < mix.len() => {
                let leaf = mix.components()[l];
                base_derivative(&dist, |d| leaf.value(d))
            }
            _ => return Err(unknown()),
        },
        ParamPath::Sigma2(idx) => {
            let (w, leaf) = addressed_leaf(k, idx).ok_or_else(unknown)?;
            base_derivative(&dist, |d| w * leaf.unit_and_dalpha(d).0)
        }
        ParamPath::Alpha(idx) => {
            let (w, leaf) = addressed_leaf(k, idx).ok_or_else(unknown)?;
            base_derivative(&dist, |d| w * leaf.unit_and_dalpha(d).1)
        }
        ParamPath::Factor(r, c) => {
            let KernelExpr::Separable(s) = k.core() else {
                return Err(unknown());
            };
            if c > r || r >= m {
                return Err(unknown());
            }
            let g = s.factor();
            let mut da = Matrix::zeros(m, m);
            for b in 0..m {
                da[(r, b)] += g[(b, c)];
                da[(b, r)] += g[(b, c)];
            }
            return Ok(kron_location_major(&scalar_gram(scalar, &dist), &da));
        }
        ParamPath::Tau2 => unreachable!(),
    };
    Ok(match k.core() {
        KernelExpr::Separable(s) => kron_location_major(&d0, s.a()),
        _ => d0,
    })
}

/// `½ Σ_ij W_ij ∂C_ij/∂θ` for every parameter of `k`, in canonical order.
///
/// With `W = ααᵀ − C⁻¹` this is the gradient of the log marginal
/// likelihood. `dist` holds the pairwise input distances and `w` is the
/// symmetric `N × N` weight matrix.
/// Reductions of `W` for a separable kernel: `sw_ij = Σ_rc W[(i,r),(j,c)] A_rc`,
/// `t_rc = Σ_ij W[(i,r),(j,c)] K₀_ij`, and `tr W`.
pub(crate) struct SeparableParts {
    pub sw: Matrix,
    pub t: Matrix,
    pub trace: f64,
}

/// Gradient `½ tr(W ∂C/∂θ)` for every parameter, given `W = ααᵀ − C⁻¹`.
pub(crate) fn contract_gradient(k: &KernelExpr, dist: &Matrix, w: &Matrix) -> Vec<f64> {
    if let KernelExpr::Separable(s) = k.core() {
        let n = dist.rows();
        let m = s.outputs();
        let a = s.a();
        let k0 = scalar_gram(s.base(), dist);
        let mut sw = Matrix::zeros(n, n);
        let mut t = Matrix::zeros(m, m);
        for i in 0..n {
            for j in 0..n {
                let kij = k0[(i, j)];
                let mut acc = 0.0;
                for r in 0..m {
                    let row = w.row(i * m + r);
                    for c in 0..m {
                        let v = row[j * m + c];
                        acc += v * a[(r, c)];
                        t[(r, c)] += v * kij;
                    }
                }
                sw[(i, j)] = acc;
            }
        }
        let trace = w.diagonal().iter().sum();
        return contract_separable(k, dist, &SeparableParts { sw, t, trace });
    }
    let mut out = Vec::new();
    scalar_contract(k.core(), dist, w, &mut out);
    if let KernelExpr::Nugget(_) = k {
        out.push(0.5 * w.diagonal().iter().sum::<f64>());
    }
    out
}

pub(crate) fn contract_separable(
    k: &KernelExpr,
    dist: &Matrix,
    parts: &SeparableParts,
) -> Vec<f64> {
    let KernelExpr::Separable(s) = k.core() else {
        unreachable!("separable core expected")
    };
    let mut out = Vec::new();
    let m = s.outputs();
    let tg = parts.t.matmul(&s.factor()).expect("square");
    for r in 0..m {
        for c in 0..=r {
            out.push(tg[(r, c)]);
        }
    }
    scalar_contract(s.base(), dist, &parts.sw, &mut out);
    if let KernelExpr::Nugget(_) = k {
        out.push(0.5 * parts.trace);
    }
    out
}

fn scalar_contract(k: &KernelExpr, dist: &Matrix, w: &Matrix, out: &mut Vec<f64>) {
    let (weights, leaves): (Vec<f64>, Vec<Leaf>) = k.weighted_leaves().into_iter().unzip();
    let l = leaves.len();
    let mut gw = vec![0.0; l];
    let mut gs = vec![0.0; l];
    let mut ga = vec![0.0; l];
    let n = dist.rows();
    for i in 0..n {
        let wi = w.row(i);
        let di = dist.row(i);
        let c = wi[i];
        for q in 0..l {
            gw[q] += c * leaves[q].sigma2();
            gs[q] += c * weights[q];
        }
        for j in 0..i {
            let c = wi[j] + w[(j, i)];
            for q in 0..l {
                let (u, da) = leaves[q].unit_and_dalpha(di[j]);
                gw[q] += c * leaves[q].sigma2() * u;
                gs[q] += c * weights[q] * u;
                ga[q] += c * weights[q] * da;
            }
        }
    }
    if let KernelExpr::Mixture(_) = k {
        out.extend(gw.iter().map(|v| 0.5 * v));
    }
    for q in 0..l {
        out.push(0.5 * gs[q]);
        out.push(0.5 * ga[q]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gram_matrix;
    use crate::rng::RngStream;

    fn kernels() -> Vec<KernelExpr> {
        let m = |s, a, nu| KernelExpr::matern(s, a, nu).unwrap();
        let a = Matrix::from_rows(&[[5.0, 1.0], [1.0, 5.0]]).unwrap();
        vec![
            m(3.0, 1.0, 0.5),
            m(1.5, 0.8, 2.5).with_nugget(0.2).unwrap(),
            KernelExpr::rbf(2.0, 0.3).unwrap(),
            KernelExpr::mixture(
                vec![0.1, 0.3, 0.6],
                vec![
                    m(16.0, 4.0, 0.5),
                    m(4.0, 2.0, 1.5),
                    KernelExpr::rbf(1.0, 1.0).unwrap(),
                ],
            )
            .unwrap()
            .with_nugget(0.1)
            .unwrap(),
            KernelExpr::separable(a, m(10.0, 1.0, 0.5))
                .unwrap()
                .with_nugget(0.3)
                .unwrap(),
        ]
    }

    fn inputs(n: usize) -> Matrix {
        let mut r = RngStream::new(8, &[n as u64]);
        Matrix::from_fn(n, 2, |_, _| r.uniform(-2.0, 2.0))
    }

    #[test]
    fn analytic_matches_central_differences() {
        let x = inputs(7);
        for k in kernels() {
            for p in k.params() {
                let theta = k.get_param(&p).unwrap();
                let h = 1e-6 * theta.abs().max(1.0);
                let hi = gram_matrix(&k.with_param(&p, theta + h).unwrap(), &x, 0.0).unwrap();
                let lo = gram_matrix(&k.with_param(&p, theta - h).unwrap(), &x, 0.0).unwrap();
                let g = gram_gradient(&k, &x, &p).unwrap();
                let scale = g
                    .as_slice()
                    .iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()))
                    .max(1e-12);
                for (idx, &an) in g.as_slice().iter().enumerate() {
                    let fd = (hi.as_slice()[idx] - lo.as_slice()[idx]) / (2.0 * h);
                    assert!((an - fd).abs() <= 1e-6 * scale, "{k:?} {p}: {an} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn weight_gradient_is_component_gram() {
        let comps = vec![
            KernelExpr::matern(1.0, 1.0, 0.5).unwrap(),
            KernelExpr::matern(2.0, 0.5, 1.5).unwrap(),
        ];
        let k = KernelExpr::mixture(vec![0.4, 0.6], comps.clone()).unwrap();
        let x = inputs(6);
        for (l, c) in comps.iter().enumerate() {
            let g = gram_gradient(&k, &x, &ParamPath::Weight(l)).unwrap();
            assert_eq!(g, gram_matrix(c, &x, 0.0).unwrap());
        }
    }

    #[test]
    fn sigma2_gradient_at_distance_two() {
        let k = KernelExpr::matern(3.0, 1.0, 0.5).unwrap();
        let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let g = gram_gradient(&k, &x, &ParamPath::Sigma2(None)).unwrap();
        assert!((g[(0, 1)] - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(g[(0, 0)], 1.0);
    }

    #[test]
    fn contraction_equals_dense_traces() {
        let x = inputs(6);
        let mut rng = RngStream::new(2, &[]);
        for k in kernels() {
            let n = 6 * k.outputs();
            let b = Matrix::from_fn(n, n, |_, _| rng.next_f64() - 0.5);
            let w = Matrix::from_fn(n, n, |i, j| b[(i, j)] + b[(j, i)]);
            let fused = contract_gradient(&k, &pairwise_distances(&x), &w);
            let params = k.params();
            assert_eq!(fused.len(), params.len());
            for (p, got) in params.iter().zip(&fused) {
                let d = gram_gradient(&k, &x, p).unwrap();
                let want: f64 = 0.5
                    * d.as_slice()
                        .iter()
                        .zip(w.as_slice())
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "{p}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn unknown_paths_rejected() {
        let k = KernelExpr::matern(1.0, 1.0, 0.5).unwrap();
        let x = inputs(3);
        for p in [
            ParamPath::Tau2,
            ParamPath::Weight(0),
            ParamPath::Factor(0, 0),
            ParamPath::Alpha(Some(0)),
        ] {
            assert!(matches!(
                gram_gradient(&k, &x, &p),
                Err(Error::UnknownParameter(_))
            ));
        }
    }
}
