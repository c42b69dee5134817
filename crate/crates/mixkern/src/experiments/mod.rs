//! Seeded batch reproductions of the smoothness, identifiability and
//! application studies.
//!
//! Every run is a pure function of its configuration and seed. Results are
//! rendered to CSV bytes ([`Artifact`]) so that a rerun can be compared byte
//! for byte, and [`write_outputs`] adds a `manifest.txt` with hashes.

mod identifiability;
mod inpaint;
mod regression;
mod sim1;

pub use identifiability::{run_sim_identifiability, run_sim_same_nu, run_sim_separable};
pub use inpaint::{bundled_digit, run_image_inpaint, InpaintReport, InpaintResult};
pub use regression::{run_regression_benchmark, synthetic_co2, MseRow, RegressionTable};
pub use sim1::{run_sim_smoothness, SmoothnessReport};

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::io::{csv_bytes, Cell, ExperimentConfig, ExperimentKind};
use crate::kernel::{KernelExpr, Leaf};
use crate::spectral::{microergodic, MicroValue};

/// A named output file held in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }

    fn csv(name: impl Into<String>, header: &[&str], rows: &[Vec<Cell>]) -> Result<Self> {
        Ok(Artifact::new(name, csv_bytes(header, rows)?))
    }
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `manifest.txt`: crate version, seed, config hash and one hash per file.
pub fn manifest(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Vec<u8> {
    let mut out = format!(
        "version = {}\nexperiment = {}\nseed = {}\nconfig_sha256 = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.experiment.map_or("none", ExperimentKind::name),
        cfg.seed,
        hex(cfg.to_toml().as_bytes()),
    );
    for a in artifacts {
        out.push_str(&format!("file {} sha256 = {}\n", a.name, hex(&a.bytes)));
    }
    out.into_bytes()
}

/// Writes the artifacts and their manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
    }
    fs::write(dir.join("manifest.txt"), manifest(cfg, artifacts))?;
    Ok(())
}

/// Short label listing smoothness orders, e.g. `matern(1/2)` or
/// `mix(1/2+3/2+5/2)`.
pub fn kernel_label(k: &KernelExpr) -> String {
    fn leaf(l: &Leaf) -> String {
        match l {
            Leaf::Matern(m) => format!("{}/2", 2 * m.nu.k() + 1),
            Leaf::Rbf(_) => "rbf".into(),
        }
    }
    match k.core() {
        KernelExpr::Mixture(m) => {
            let parts: Vec<String> = m.components().iter().map(leaf).collect();
            format!("mix({})", parts.join("+"))
        }
        KernelExpr::Matern(m) => format!("matern({})", leaf(&Leaf::Matern(*m))),
        KernelExpr::Rbf(_) => "rbf".into(),
        KernelExpr::Separable(s) => format!("sep{}({})", s.outputs(), kernel_label(s.base())),
        KernelExpr::Nugget(_) => unreachable!("core strips the nugget"),
    }
}

/// Every parameter of `k` in canonical order, followed by its microergodic
/// combination when one is defined (`micro`, or `micro_rc` entries for a
/// separable kernel, which also lists `A_rc`).
pub fn parameter_table(k: &KernelExpr, p: usize) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = k
        .params()
        .into_iter()
        .zip(k.param_values())
        .map(|(path, v)| (path.to_string(), v))
        .collect();
    if let Ok(report) = microergodic(k, p) {
        match &report.primary {
            MicroValue::Scalar(v) => out.push(("micro".to_string(), *v)),
            MicroValue::Matrix(m) => {
                for r in 0..m.rows() {
                    for c in r..m.cols() {
                        out.push((format!("micro_{}{}", r + 1, c + 1), m[(r, c)]));
                    }
                }
            }
        }
        if let (Some(v), true) = (report.secondary, report.secondary_relevant) {
            out.push(("micro_secondary".to_string(), v));
        }
    }
    if let KernelExpr::Separable(s) = k.core() {
        let a = s.a();
        for r in 0..a.rows() {
            for c in r..a.cols() {
                out.push((format!("A{}{}", r + 1, c + 1), a[(r, c)]));
            }
        }
    }
    out
}

/// Type-7 sample quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One fitted (or derived) quantity of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRow {
    pub n: usize,
    pub rep: usize,
    pub param: String,
    pub estimate: f64,
    pub truth: f64,
}

/// A replication that could not be completed.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub n: usize,
    pub rep: usize,
    pub message: String,
}

/// Spread of one quantity at one sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub param: String,
    pub truth: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub count: usize,
}

impl Summary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    /// `|median − truth| / |truth|`.
    pub fn relative_error(&self) -> f64 {
        (self.median - self.truth).abs() / self.truth.abs()
    }

    /// The median misses the truth by more than the interquartile range.
    pub fn non_convergent(&self) -> bool {
        (self.median - self.truth).abs() > self.iqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationTable {
    pub experiment: ExperimentKind,
    /// Sorted by sample size, then replication; parameters in canonical
    /// order within a replication.
    pub rows: Vec<ReplicationRow>,
    pub failures: Vec<Failure>,
}

impl ReplicationTable {
    pub fn sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        v.dedup();
        v
    }

    fn params(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.param.as_str()) {
                seen.push(&r.param);
            }
        }
        seen
    }

    pub fn summary(&self, n: usize, param: &str) -> Option<Summary> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.n == n && r.param == param)
            .map(|r| r.estimate)
            .collect();
        if v.is_empty() {
            return None;
        }
        let truth = self.rows.iter().find(|r| r.param == param)?.truth;
        v.sort_by(f64::total_cmp);
        Some(Summary {
            n,
            param: param.to_string(),
            truth,
            median: quantile(&v, 0.5),
            q25: quantile(&v, 0.25),
            q75: quantile(&v, 0.75),
            count: v.len(),
        })
    }

    /// Medians and quartiles for every `(n, parameter)` pair.
    pub fn summaries(&self) -> Vec<Summary> {
        let params = self.params();
        self.sizes()
            .into_iter()
            .flat_map(|n| params.iter().filter_map(move |p| self.summary(n, p)))
            .collect()
    }

    /// `<name>.csv`, `<name>_summary.csv` and `<name>_failures.csv`.
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let name = self.experiment.name();
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.into(),
                    r.rep.into(),
                    r.param.as_str().into(),
                    r.estimate.into(),
                    r.truth.into(),
                ]
            })
            .collect();
        let summary: Vec<Vec<Cell>> = self
            .summaries()
            .into_iter()
            .map(|s| {
                vec![
                    s.n.into(),
                    s.param.as_str().into(),
                    s.truth.into(),
                    s.median.into(),
                    s.q25.into(),
                    s.q75.into(),
                    s.iqr().into(),
                    s.count.into(),
                ]
            })
            .collect();
        let failures: Vec<Vec<Cell>> = self
            .failures
            .iter()
            .map(|f| vec![f.n.into(), f.rep.into(), f.message.as_str().into()])
            .collect();
        Ok(vec![
            Artifact::csv(
                format!("{name}.csv"),
                &["n", "rep", "param", "estimate", "truth"],
                &rows,
            )?,
            Artifact::csv(
                format!("{name}_summary.csv"),
                &[
                    "n", "param", "truth", "median", "q25", "q75", "iqr", "count",
                ],
                &summary,
            )?,
            Artifact::csv(
                format!("{name}_failures.csv"),
                &["n", "rep", "message"],
                &failures,
            )?,
        ])
    }
}
