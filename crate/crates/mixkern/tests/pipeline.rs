use mixkern::experiments::{run_sim_smoothness, write_outputs, Artifact, SmoothnessReport};
use mixkern::gp::{log_marginal_likelihood, posterior_predict, sample_prior, Dataset, GpModel};
use mixkern::io::{read_csv_dataset, write_csv_dataset, ExperimentConfig, ExperimentKind};
use mixkern::kernel::{parse_kernel, KernelExpr, ParamPath};
use mixkern::linalg::Matrix;
use mixkern::optimize::{fit, Method, OptimizerConfig};

fn grid(n: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(n, 1, |i, _| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

#[test]
fn sample_fit_predict_roundtrip() {
    let truth = KernelExpr::matern(2.0, 1.5, 1.5).unwrap();
    let x = grid(120, 0.0, 10.0);
    let y = sample_prior(&GpModel::new(truth, 0.01), &x, 1, 11)
        .unwrap()
        .row(0)
        .to_vec();
    let train: Vec<usize> = (0..120).filter(|i| i % 4 != 0).collect();
    let test: Vec<usize> = (0..120).filter(|i| i % 4 == 0).collect();
    let data = Dataset::scalar(x, y).unwrap();
    let (tr, te) = (data.subset(&train), data.subset(&test));

    let start = GpModel::new(KernelExpr::matern(1.0, 1.0, 1.5).unwrap(), 0.01);
    let report = fit(&start, &tr, &OptimizerConfig::new(Method::Lbfgs, 1.0, 60)).unwrap();
    assert!(report.loss_trace.last().unwrap() < report.loss_trace.first().unwrap());
    let fitted = GpModel::new(report.kernel.clone(), 0.01);
    assert!(
        log_marginal_likelihood(&fitted, &tr.x, tr.y_flat()).unwrap()
            > log_marginal_likelihood(&start, &tr.x, tr.y_flat()).unwrap()
    );

    let post = posterior_predict(&fitted, &tr.x, tr.y_flat(), &te.x).unwrap();
    let var_y: f64 = te.y_flat().iter().map(|v| v * v).sum::<f64>() / te.len() as f64;
    let err: f64 = post
        .mean
        .iter()
        .zip(te.y_flat())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / te.len() as f64;
    assert!(err < 0.1 * var_y, "mse {err} vs signal {var_y}");
    assert!(post.variance().iter().all(|&v| v >= 0.0));
}

#[test]
fn dataset_csv_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let x = Matrix::from_fn(7, 2, |i, j| (i as f64).sin() * 1e-7 + j as f64 / 3.0);
    let y = Matrix::from_fn(7, 2, |i, j| 1e20 * i as f64 - j as f64 * 0.1);
    let d = Dataset::new(x, y).unwrap();
    write_csv_dataset(&path, &d).unwrap();
    assert_eq!(read_csv_dataset(&path, None).unwrap(), d);
}

#[test]
fn written_outputs_carry_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(ExperimentKind::Sim1);
    cfg.draws = 500;
    cfg.points = 10;
    let report = run_sim_smoothness(&cfg, 3).unwrap();
    let files: Vec<Artifact> = SmoothnessReport::artifacts(&report).unwrap();
    write_outputs(dir.path(), &cfg, &files).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for f in &files {
        assert_eq!(std::fs::read(dir.path().join(&f.name)).unwrap(), f.bytes);
        assert!(manifest.contains(&f.name));
    }
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn kernel_specs_roundtrip_through_display() {
    for src in [
        "matern(2,0.5,2.5)",
        "rbf(1,3)",
        "mix(0.25*matern(1,1,0.5), 0.75*matern(2,2,1.5))",
        "matern(1,1,0.5) + nugget(0.1)",
        "sep([[2,0.5],[0.5,1]], matern(1,2,0.5))",
    ] {
        let k = parse_kernel(src).unwrap();
        assert_eq!(parse_kernel(&k.to_string()).unwrap(), k, "{src}");
    }
    let k = parse_kernel("mix(0.25*matern(1,1,0.5), 0.75*matern(2,2,1.5))").unwrap();
    assert_eq!(k.get_param(&ParamPath::Weight(1)).unwrap(), 0.75);
}
