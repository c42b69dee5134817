//! `mixkern`: sampling, fitting, prediction, spectral diagnostics and the
//! batch experiments, driven by a configuration file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixkern::experiments::{
    bundled_digit, parameter_table, run_image_inpaint, run_regression_benchmark,
    run_sim_identifiability, run_sim_same_nu, run_sim_separable, run_sim_smoothness, synthetic_co2,
    write_outputs, Artifact, ReplicationTable, SmoothnessReport,
};
use mixkern::gp::{posterior_predict, sample_prior, Dataset, GpModel};
use mixkern::io::{
    csv_bytes, parse_config, parse_config_for, read_csv_dataset, read_pgm, Cell, ExperimentConfig,
    ExperimentKind, Schema,
};
use mixkern::linalg::Matrix;
use mixkern::optimize::fit;
use mixkern::spectral::{
    equivalence_diagnostic, moment_integral_diagnostic, smoothness_order, MsdOrder, MOMENT_CUTOFFS,
};
use mixkern::{Error, Result};

/// Length of the sampling grid `[0, GRID_END]`.
const GRID_END: f64 = 10.0;
/// Length of the synthetic CO₂ series used when no data file is given.
const CO2_MONTHS: usize = 240;

#[derive(Parser)]
#[command(
    name = "mixkern",
    version,
    about = "Gaussian processes with Matérn mixture kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML key = value pairs)
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Use the published replication counts instead of desk scale
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw prior sample paths of `kernel` on a regular grid
    Sample(Common),
    /// Fit `kernel` to the dataset `data` by maximum likelihood
    Fit(Common),
    /// Posterior mean and variance at the locations of `test_data`
    Predict(Common),
    /// Decide whether `kernel` and `other_kernel` give equivalent measures
    #[command(name = "equiv-test")]
    EquivTest(Common),
    /// Mean-square differentiability of `kernel` from its spectral density
    Smoothness(Common),
    /// Continuity and differentiability read off sampled paths
    Sim1(Common),
    /// Identifiability of a mixture with distinct smoothness
    Sim2(Common),
    /// Identifiability of a separable bivariate kernel
    Sim3(Common),
    /// Identifiability of a mixture with shared smoothness
    Sim4(Common),
    /// Held-out MSE of several kernels over random splits
    #[command(alias = "regression")]
    Regress(Common),
    /// Predict a masked square of a grayscale image
    Inpaint(Common),
}

fn load(common: &Common, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, kind) {
        (Some(path), Some(kind)) => parse_config_for(path, kind)?,
        (Some(path), None) => parse_config(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(kind),
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if common.paper_scale {
        cfg.paper_scale();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn need<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig(format!("the configuration must set `{key}`")))
}

fn read_data(cfg: &ExperimentConfig, path: &PathBuf) -> Result<Dataset> {
    if cfg.data_columns.len() >= 2 {
        let (inputs, output) = cfg.data_columns.split_at(cfg.data_columns.len() - 1);
        let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        read_csv_dataset(path, Some(&Schema::named(&inputs, &[output[0].as_str()])))
    } else {
        read_csv_dataset(path, None)
    }
}

fn csv(name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<Artifact> {
    Ok(Artifact::new(name, csv_bytes(header, rows)?))
}

fn finish(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Result<()> {
    write_outputs(&cfg.out, cfg, artifacts)?;
    for a in artifacts {
        eprintln!("wrote {}", cfg.out.join(&a.name).display());
    }
    Ok(())
}

fn sample(cfg: &ExperimentConfig) -> Result<()> {
    let kernel = need(&cfg.kernel, "kernel")?;
    let (n, p, m) = (cfg.points, cfg.input_dim, kernel.outputs());
    let step = if n > 1 {
        GRID_END / (n - 1) as f64
    } else {
        0.0
    };
    let x = Matrix::from_fn(n, p, |i, _| step * i as f64);
    let model = GpModel::new(kernel.clone(), cfg.epsilon);
    let draws = sample_prior(&model, &x, cfg.draws, cfg.seed)?;
    let schema = Schema::standard(p, m);
    let mut header = vec!["draw"];
    header.extend(schema.header());
    let mut rows = Vec::with_capacity(cfg.draws * n);
    for t in 0..cfg.draws {
        let path = draws.row(t);
        for i in 0..n {
            let mut row: Vec<Cell> = vec![t.into()];
            row.extend(x.row(i).iter().map(|&v| Cell::from(v)));
            row.extend(path[i * m..(i + 1) * m].iter().map(|&v| Cell::from(v)));
            rows.push(row);
        }
    }
    finish(cfg, &[csv("samples.csv", &header, &rows)?])
}

fn run_fit(cfg: &ExperimentConfig) -> Result<()> {
    let data = read_data(cfg, need(&cfg.data, "data")?)?;
    let start = need(&cfg.kernel, "kernel")?;
    let model = GpModel::new(start.clone(), cfg.epsilon).with_kronecker(cfg.kronecker);
    let report = fit(&model, &data, &cfg.optimizer)?;
    println!("fitted kernel: {}", report.kernel);
    println!(
        "epochs: {}, stop: {:?}, converged: {}",
        report.epochs_run, report.stop, report.converged
    );
    let params: Vec<Vec<Cell>> = parameter_table(&report.kernel, data.input_dim())
        .into_iter()
        .map(|(name, v)| vec![name.into(), v.into()])
        .collect();
    let loss: Vec<Vec<Cell>> = report
        .loss_trace
        .iter()
        .enumerate()
        .map(|(e, &l)| vec![e.into(), l.into()])
        .collect();
    finish(
        cfg,
        &[
            csv("fit.csv", &["param", "estimate"], &params)?,
            csv("loss.csv", &["epoch", "neg_log_likelihood"], &loss)?,
        ],
    )
}

fn predict(cfg: &ExperimentConfig) -> Result<()> {
    let train = read_data(cfg, need(&cfg.data, "data")?)?;
    let test = read_data(cfg, need(&cfg.test_data, "test_data")?)?;
    let kernel = need(&cfg.kernel, "kernel")?;
    let model = GpModel::new(kernel.clone(), cfg.epsilon).with_kronecker(cfg.kronecker);
    let post = posterior_predict(&model, &train.x, train.y_flat(), &test.x)?;
    let m = kernel.outputs();
    let var = post.variance();
    let mut header: Vec<String> = Schema::standard(test.input_dim(), 1).inputs;
    for j in 1..=m {
        let suffix = if m == 1 { String::new() } else { j.to_string() };
        header.push(format!("mean{suffix}"));
        header.push(format!("variance{suffix}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = (0..test.len())
        .map(|i| {
            let mut row: Vec<Cell> = test.x.row(i).iter().map(|&v| v.into()).collect();
            for j in 0..m {
                row.push(post.mean[i * m + j].into());
                row.push(var[i * m + j].into());
            }
            row
        })
        .collect();
    println!("test mse: {}", mixkern::gp::mse(&post.mean, test.y_flat())?);
    finish(cfg, &[csv("predictions.csv", &header, &rows)?])
}

fn equiv_test(cfg: &ExperimentConfig) -> Result<()> {
    let k1 = need(&cfg.kernel, "kernel")?;
    let k2 = need(&cfg.other_kernel, "other_kernel")?;
    let v = equivalence_diagnostic(k1, k2, cfg.input_dim, cfg.delta, &cfg.cutoffs)?;
    let mut row: Vec<Cell> = vec![v.classification.to_string().into(), v.tail_slope.into()];
    let tail = v.cutoff_values.len().saturating_sub(3);
    row.extend((0..3).map(|i| {
        v.cutoff_values
            .get(tail + i)
            .copied()
            .map_or(Cell::from(""), Cell::from)
    }));
    let verdict = vec![row];
    let header = [
        "classification",
        "tail_slope",
        "integral_1",
        "integral_2",
        "integral_3",
    ];
    print!(
        "{}",
        String::from_utf8_lossy(&csv_bytes(&header, &verdict)?)
    );
    let partial: Vec<Vec<Cell>> = v
        .cutoffs
        .iter()
        .zip(&v.cutoff_values)
        .map(|(&c, &i)| vec![c.into(), i.into()])
        .collect();
    finish(
        cfg,
        &[
            csv("equivalence.csv", &header, &verdict)?,
            csv(
                "equivalence_integrals.csv",
                &["cutoff", "partial_integral"],
                &partial,
            )?,
        ],
    )
}

fn smoothness(cfg: &ExperimentConfig) -> Result<()> {
    let kernel = need(&cfg.kernel, "kernel")?;
    let order = smoothness_order(kernel)?;
    println!("mean-square derivatives: {order}");
    let mut rows = Vec::new();
    if let MsdOrder::Finite(k) = order {
        for d in 0..=k + 1 {
            let v = moment_integral_diagnostic(kernel, cfg.input_dim, d, &MOMENT_CUTOFFS)?;
            println!("moment integral of order {d}: {}", v.classification);
            rows.push(vec![
                Cell::from(d as usize),
                v.classification.to_string().into(),
            ]);
        }
    }
    finish(
        cfg,
        &[
            csv(
                "smoothness.csv",
                &["msd_order"],
                &[vec![order.to_string().into()]],
            )?,
            csv("moments.csv", &["d", "classification"], &rows)?,
        ],
    )
}

fn report_table(table: &ReplicationTable) {
    for s in table
        .summaries()
        .iter()
        .filter(|s| s.param.starts_with("micro"))
    {
        println!(
            "n={} {}: median {} (truth {}, iqr {})",
            s.n,
            s.param,
            s.median,
            s.truth,
            s.iqr()
        );
    }
    if !table.failures.is_empty() {
        println!("{} replications failed", table.failures.len());
    }
}

fn sim(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<()> {
    let table = match kind {
        ExperimentKind::Sim2 => run_sim_identifiability(cfg, cfg.seed)?,
        ExperimentKind::Sim3 => run_sim_separable(cfg, cfg.seed)?,
        _ => run_sim_same_nu(cfg, cfg.seed)?,
    };
    report_table(&table);
    finish(cfg, &table.artifacts()?)
}

fn sim1(cfg: &ExperimentConfig) -> Result<()> {
    let reports = run_sim_smoothness(cfg, cfg.seed)?;
    for r in &reports {
        println!(
            "{}: gamma slope {}, continuous {}",
            r.label, r.gamma_slope, r.beta_limit_flag
        );
    }
    finish(cfg, &SmoothnessReport::artifacts(&reports)?)
}

fn regress(cfg: &ExperimentConfig) -> Result<()> {
    let mut artifacts = Vec::new();
    let data = match &cfg.data {
        Some(path) => read_data(cfg, path)?,
        None => {
            let d = synthetic_co2(CO2_MONTHS, cfg.seed)?;
            let rows: Vec<Vec<Cell>> = (0..d.len())
                .map(|i| vec![d.x[(i, 0)].into(), d.y_flat()[i].into()])
                .collect();
            artifacts.push(csv(
                "co2_synthetic.csv",
                &["decimal_date", "co2_ppm"],
                &rows,
            )?);
            d
        }
    };
    let table = run_regression_benchmark(&data, cfg, cfg.seed)?;
    for k in &table.kernels {
        let medians: Vec<String> = table
            .fractions
            .iter()
            .filter_map(|&f| table.median_mse(k, f).map(|m| format!("{f}: {m:.4}")))
            .collect();
        println!("{k}  {}", medians.join(", "));
    }
    artifacts.extend(table.artifacts()?);
    finish(cfg, &artifacts)
}

fn inpaint(cfg: &ExperimentConfig) -> Result<()> {
    let image = match &cfg.image {
        Some(path) => read_pgm(path)?,
        None => bundled_digit(),
    };
    let report = run_image_inpaint(&image, cfg.mask, cfg)?;
    for r in &report.results {
        println!("{}: mse {}", r.label, r.mse);
    }
    finish(cfg, &report.artifacts()?)
}

fn run(command: &Command) -> Result<()> {
    use ExperimentKind::*;
    match command {
        Command::Sample(c) => sample(&load(c, None)?),
        Command::Fit(c) => run_fit(&load(c, None)?),
        Command::Predict(c) => predict(&load(c, None)?),
        Command::EquivTest(c) => equiv_test(&load(c, None)?),
        Command::Smoothness(c) => smoothness(&load(c, None)?),
        Command::Sim1(c) => sim1(&load(c, Some(Sim1))?),
        Command::Sim2(c) => sim(Sim2, &load(c, Some(Sim2))?),
        Command::Sim3(c) => sim(Sim3, &load(c, Some(Sim3))?),
        Command::Sim4(c) => sim(Sim4, &load(c, Some(Sim4))?),
        Command::Regress(c) => regress(&load(c, Some(Regression))?),
        Command::Inpaint(c) => inpaint(&load(c, Some(Inpaint))?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use mixkern::kernel::KernelExpr;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_configuration() {
        let common = Common {
            config: None,
            seed: Some(9),
            out: Some("elsewhere".into()),
            paper_scale: true,
        };
        let cfg = load(&common, Some(ExperimentKind::Sim2)).unwrap();
        assert_eq!((cfg.seed, cfg.reps), (9, 100));
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn missing_keys_are_config_errors() {
        let e = need::<KernelExpr>(&None, "kernel").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
