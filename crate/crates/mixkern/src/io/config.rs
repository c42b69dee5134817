//! Experiment configuration files.
//!
//! A configuration is a flat TOML document: `key = value` lines, quoted
//! strings, numbers, booleans and bracketed lists. Optimizer settings live
//! under dotted `opt.` keys, or equivalently in an `[opt]` section.
//!
//! ```toml
//! experiment = "sim2"
//! seed = 7
//! kernel = "mix(0.1*matern(16,4,0.5), 0.3*matern(4,2,1.5), 0.6*matern(1,1,2.5))"
//! sizes = [20, 50, 100, 500]
//! opt.method = "sgd"
//! opt.lr = 0.005
//! ```
//!
//! Setting `experiment` first loads that experiment's defaults; every other
//! key overrides them.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::kernel::{parse_kernel, KernelExpr};
use crate::linalg::Matrix;
use crate::optimize::{Method, OptimizerConfig};
use crate::spectral::EQUIVALENCE_CUTOFFS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Sim1,
    Sim2,
    Sim3,
    Sim4,
    Regression,
    Inpaint,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Sim1,
        ExperimentKind::Sim2,
        ExperimentKind::Sim3,
        ExperimentKind::Sim4,
        ExperimentKind::Regression,
        ExperimentKind::Inpaint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sim1 => "sim1",
            ExperimentKind::Sim2 => "sim2",
            ExperimentKind::Sim3 => "sim3",
            ExperimentKind::Sim4 => "sim4",
            ExperimentKind::Regression => "regression",
            ExperimentKind::Inpaint => "inpaint",
        }
    }

    /// Stream id used as the first element of every RNG path.
    pub fn stream_id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "regress" && *k == ExperimentKind::Regression))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment `{s}`")))
    }
}

/// Everything a batch run or a CLI subcommand needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub out: PathBuf,
    /// Data-generating kernel, or the model kernel for single fits.
    pub kernel: Option<KernelExpr>,
    /// Kernels sampled (Sim 1), or starting points of fits.
    pub kernels: Vec<KernelExpr>,
    /// Second kernel of an equivalence query.
    pub other_kernel: Option<KernelExpr>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    /// Fixed diagonal term added to every covariance, in simulation and fit.
    pub epsilon: f64,
    pub input_dim: usize,
    /// Locations are perturbed by `unif(−1/(s n), 1/(s n))` with `s` this value.
    pub jitter_scale: f64,
    pub kronecker: bool,
    /// Monte-Carlo draws `T` (Sim 1) or prior samples (`sample`).
    pub draws: usize,
    /// Number of points `1/i` (Sim 1) or grid points (`sample`).
    pub points: usize,
    pub fractions: Vec<f64>,
    pub data: Option<PathBuf>,
    /// Column names of `data` when it lacks a standard header; the last
    /// name is the response.
    pub data_columns: Vec<String>,
    pub test_data: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub mask: usize,
    pub delta: f64,
    pub cutoffs: Vec<f64>,
    pub optimizer: OptimizerConfig,
}

fn matern(s2: f64, a: f64, nu: f64) -> KernelExpr {
    KernelExpr::matern(s2, a, nu).expect("valid preset")
}

fn mixture(w: &[f64], comps: &[(f64, f64, f64)]) -> KernelExpr {
    KernelExpr::mixture_unnormalized(
        w.to_vec(),
        comps.iter().map(|&(s, a, n)| matern(s, a, n)).collect(),
    )
    .expect("valid preset")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 1,
            out: PathBuf::from("out"),
            kernel: None,
            kernels: Vec::new(),
            other_kernel: None,
            sizes: Vec::new(),
            reps: 20,
            epsilon: 0.0,
            input_dim: 1,
            jitter_scale: 5.0,
            kronecker: false,
            draws: 5000,
            points: 100,
            fractions: vec![0.2, 0.5, 0.75],
            data: None,
            data_columns: Vec::new(),
            test_data: None,
            image: None,
            mask: 8,
            delta: 1.0,
            cutoffs: EQUIVALENCE_CUTOFFS.to_vec(),
            optimizer: OptimizerConfig::new(Method::Adam, 0.01, 1000),
        }
    }
}

impl ExperimentConfig {
    /// Settings of the published experiment, at desk scale (20 replications).
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: Some(kind),
            ..Default::default()
        };
        match kind {
            ExperimentKind::Sim1 => {
                c.kernels = vec![
                    mixture(
                        &[0.03, 0.33, 0.63],
                        &[(3.0, 1.0, 0.5), (3.0, 1.0, 1.5), (3.0, 1.0, 2.5)],
                    ),
                    matern(3.0, 1.0, 0.5),
                    matern(3.0, 1.0, 1.5),
                    matern(3.0, 1.0, 2.5),
                ];
                c.draws = 5000;
                c.points = 100;
            }
            ExperimentKind::Sim2 => {
                c.kernel = Some(mixture(
                    &[0.1, 0.3, 0.6],
                    &[(16.0, 4.0, 0.5), (4.0, 2.0, 1.5), (1.0, 1.0, 2.5)],
                ));
                c.kernels = vec![mixture(
                    &[0.2, 0.3, 0.5],
                    &[
                        (5.0067, 0.7615, 0.5),
                        (10.0, 0.4702, 1.5),
                        (15.0, 0.3280, 2.5),
                    ],
                )];
                c.sizes = vec![20, 50, 100, 500];
                c.epsilon = 0.1;
                c.optimizer = OptimizerConfig::new(Method::Sgd, 0.005, 1000);
            }
            ExperimentKind::Sim3 => {
                let a = Matrix::from_rows(&[[5.0, 1.0], [1.0, 5.0]]).expect("2x2");
                c.kernel =
                    Some(KernelExpr::separable(a, matern(10.0, 1.0, 0.5)).expect("valid preset"));
                c.kernels =
                    vec![
                        KernelExpr::separable(Matrix::identity(2), matern(1.0, 10.0, 0.5))
                            .expect("valid preset"),
                    ];
                c.sizes = vec![50, 100, 200, 400];
                c.epsilon = 0.5;
                c.kronecker = true;
                c.optimizer = OptimizerConfig::new(Method::Sgd, 0.001, 2000);
            }
            ExperimentKind::Sim4 => {
                c.kernel = Some(mixture(
                    &[0.2, 0.3, 0.5],
                    &[(16.0, 2.0, 0.5), (4.0, 1.0, 0.5), (1.0, 4.0, 0.5)],
                ));
                c.kernels = vec![mixture(
                    &[0.2, 0.3, 0.5],
                    &[(16.0, 4.0, 0.5), (4.0, 2.0, 0.5), (1.0, 1.0, 0.5)],
                )];
                c.sizes = vec![20, 50, 100, 500];
                c.epsilon = 0.1;
                c.jitter_scale = 10.0;
                c.optimizer = OptimizerConfig::new(Method::Adam, 0.01, 1000);
            }
            ExperimentKind::Regression => {
                let (s2, al) = ([10.0, 500.0, 500.0], [4.0, 0.1, 0.1]);
                let nus = [0.5, 1.5, 2.5];
                let mix = |idx: &[usize]| {
                    let w = vec![1.0 / idx.len() as f64; idx.len()];
                    let comps: Vec<_> = idx.iter().map(|&i| (s2[i], al[i], nus[i])).collect();
                    mixture(&w, &comps)
                };
                c.kernels = vec![
                    mix(&[0, 1]),
                    mix(&[0, 1, 2]),
                    mix(&[1, 2]),
                    matern(s2[0], al[0], 0.5),
                    matern(s2[1], al[1], 1.5),
                    matern(s2[2], al[2], 2.5),
                ];
                c.fractions = vec![0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
                c.reps = 10;
                c.epsilon = 0.01;
                c.optimizer = OptimizerConfig::new(Method::Adam, 0.05, 150);
            }
            ExperimentKind::Inpaint => {
                let third = 1.0 / 3.0;
                c.kernels = vec![
                    mixture(
                        &[third; 3],
                        &[(1.0, 1.0, 0.5), (1.0, 1.0, 1.5), (1.0, 1.0, 2.5)],
                    ),
                    matern(1.0, 1.0, 0.5),
                ];
                c.epsilon = 0.01;
                c.mask = 8;
                c.optimizer = OptimizerConfig::new(Method::Adam, 0.05, 150);
            }
        }
        c
    }

    /// Restores the published replication count.
    pub fn paper_scale(&mut self) {
        self.reps = match self.experiment {
            Some(ExperimentKind::Regression) => 10,
            _ => 100,
        };
    }

    /// Structural checks that do not depend on the input files.
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.sizes.contains(&0) {
            return bad("sample sizes must be positive".into());
        }
        if self.input_dim == 0 {
            return bad("input_dim must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.jitter_scale.is_finite() && self.jitter_scale > 0.0) {
            return bad(format!(
                "jitter_scale must be positive, got {}",
                self.jitter_scale
            ));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("training fraction {f} outside (0, 1]"));
        }
        Ok(())
    }

    /// Serializes every field so that [`parse_config_str`] reproduces it.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        if let Some(e) = self.experiment {
            put("experiment", quote(e.name()));
        }
        put("seed", self.seed.to_string());
        put("out", quote(&self.out.to_string_lossy()));
        if let Some(k) = &self.kernel {
            put("kernel", quote(&k.to_string()));
        }
        put(
            "kernels",
            list(self.kernels.iter().map(|k| quote(&k.to_string()))),
        );
        if let Some(k) = &self.other_kernel {
            put("other_kernel", quote(&k.to_string()));
        }
        put("sizes", list(self.sizes.iter().map(usize::to_string)));
        put("reps", self.reps.to_string());
        put("epsilon", float(self.epsilon));
        put("input_dim", self.input_dim.to_string());
        put("jitter_scale", float(self.jitter_scale));
        put("kronecker", self.kronecker.to_string());
        put("draws", self.draws.to_string());
        put("points", self.points.to_string());
        put("fractions", list(self.fractions.iter().map(|v| float(*v))));
        if let Some(p) = &self.data {
            put("data", quote(&p.to_string_lossy()));
        }
        put(
            "data_columns",
            list(self.data_columns.iter().map(|s| quote(s))),
        );
        if let Some(p) = &self.test_data {
            put("test_data", quote(&p.to_string_lossy()));
        }
        if let Some(p) = &self.image {
            put("image", quote(&p.to_string_lossy()));
        }
        put("mask", self.mask.to_string());
        put("delta", float(self.delta));
        put("cutoffs", list(self.cutoffs.iter().map(|v| float(*v))));
        let o = &self.optimizer;
        put("opt.method", quote(&o.method.to_string()));
        put("opt.lr", float(o.learning_rate));
        put("opt.epochs", o.epochs.to_string());
        put("opt.beta1", float(o.adam_beta1));
        put("opt.beta2", float(o.adam_beta2));
        put("opt.eps", float(o.adam_eps));
        put("opt.memory", o.lbfgs_memory.to_string());
        out
    }
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

fn list(items: impl Iterator<Item = String>) -> String {
    format!("[{}]", items.collect::<Vec<_>>().join(", "))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("cannot read configuration: {e}"),
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    parse_with_base(&read_text(path)?, path, None)
}

/// Like [`parse_config`], but a file without an `experiment` key starts
/// from the defaults of `kind` instead of the empty configuration.
pub fn parse_config_for(path: impl AsRef<Path>, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    parse_with_base(&read_text(path)?, path, Some(kind))
}

/// Parses configuration text; `path` is only used in error messages.
pub fn parse_config_str(text: &str, path: &Path) -> Result<ExperimentConfig> {
    parse_with_base(text, path, None)
}

fn parse_with_base(
    text: &str,
    path: &Path,
    base: Option<ExperimentKind>,
) -> Result<ExperimentConfig> {
    let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
    let table = DeTable::parse(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map_or(0, |s| line_of(s.start)),
        message: e.message().to_string(),
    })?;
    let mut entries = Vec::new();
    flatten("", table.get_ref(), &mut entries);
    let ctx = Ctx {
        path,
        line_of: &line_of,
    };
    let mut cfg = match entries.iter().find(|(k, _, _)| k == "experiment") {
        Some((_, v, _)) => ExperimentConfig::preset(ctx.parse(v, ctx.string(v)?.parse())?),
        None => base.map_or_else(ExperimentConfig::default, ExperimentConfig::preset),
    };
    for (key, value, key_span) in &entries {
        ctx.apply(&mut cfg, key, value, key_span.clone())?;
    }
    Ok(cfg)
}

type Entry<'a, 'i> = (String, &'a Spanned<DeValue<'i>>, std::ops::Range<usize>);

fn flatten<'a, 'i>(prefix: &str, table: &'a DeTable<'i>, out: &mut Vec<Entry<'a, 'i>>) {
    for (k, v) in table.iter() {
        let key = format!("{prefix}{}", k.get_ref());
        match v.get_ref() {
            DeValue::Table(t) => flatten(&format!("{key}."), t, out),
            _ => out.push((key, v, k.span())),
        }
    }
}

struct Ctx<'a> {
    path: &'a Path,
    line_of: &'a dyn Fn(usize) -> usize,
}

impl Ctx<'_> {
    fn error(&self, v: &Spanned<DeValue<'_>>, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: (self.line_of)(v.span().start),
            message,
        }
    }

    /// Attaches a line number to a value-level error.
    fn parse<T>(&self, v: &Spanned<DeValue<'_>>, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::InvalidConfig(m) => self.error(v, m),
            other => other,
        })
    }

    fn string<'v>(&self, v: &'v Spanned<DeValue<'_>>) -> Result<&'v str> {
        v.get_ref().as_str().ok_or_else(|| {
            self.error(
                v,
                format!("expected a string, found {}", v.get_ref().type_str()),
            )
        })
    }

    fn float(&self, v: &Spanned<DeValue<'_>>) -> Result<f64> {
        let parsed = match v.get_ref() {
            DeValue::Float(f) => f.as_str().replace('_', "").parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .ok()
                .map(|x| x as f64),
            _ => None,
        };
        parsed.filter(|x| x.is_finite()).ok_or_else(|| {
            self.error(
                v,
                format!("expected a finite number, found {}", v.get_ref().type_str()),
            )
        })
    }

    fn unsigned(&self, v: &Spanned<DeValue<'_>>) -> Result<u64> {
        match v.get_ref() {
            DeValue::Integer(i) => u64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .map_err(|_| {
                    self.error(
                        v,
                        format!("expected a nonnegative integer, found {}", i.as_str()),
                    )
                }),
            other => Err(self.error(
                v,
                format!("expected an integer, found {}", other.type_str()),
            )),
        }
    }

    fn usize(&self, v: &Spanned<DeValue<'_>>) -> Result<usize> {
        let n = self.unsigned(v)?;
        usize::try_from(n).map_err(|_| self.error(v, format!("{n} is too large")))
    }

    fn boolean(&self, v: &Spanned<DeValue<'_>>) -> Result<bool> {
        v.get_ref().as_bool().ok_or_else(|| {
            self.error(
                v,
                format!("expected a boolean, found {}", v.get_ref().type_str()),
            )
        })
    }

    fn array<'v, 'i>(&self, v: &'v Spanned<DeValue<'i>>) -> Result<&'v [Spanned<DeValue<'i>>]> {
        v.get_ref().as_array().map(|a| &a[..]).ok_or_else(|| {
            self.error(
                v,
                format!("expected a list, found {}", v.get_ref().type_str()),
            )
        })
    }

    fn kernel(&self, v: &Spanned<DeValue<'_>>) -> Result<KernelExpr> {
        parse_kernel(self.string(v)?)
    }

    fn apply(
        &self,
        cfg: &mut ExperimentConfig,
        key: &str,
        v: &Spanned<DeValue<'_>>,
        key_span: std::ops::Range<usize>,
    ) -> Result<()> {
        match key {
            "experiment" => {}
            "seed" => cfg.seed = self.unsigned(v)?,
            "out" => cfg.out = PathBuf::from(self.string(v)?),
            "kernel" => cfg.kernel = Some(self.kernel(v)?),
            "kernels" => {
                cfg.kernels = self
                    .array(v)?
                    .iter()
                    .map(|k| self.kernel(k))
                    .collect::<Result<_>>()?
            }
            "other_kernel" => cfg.other_kernel = Some(self.kernel(v)?),
            "sizes" => {
                cfg.sizes = self
                    .array(v)?
                    .iter()
                    .map(|x| self.usize(x))
                    .collect::<Result<_>>()?
            }
            "reps" => cfg.reps = self.usize(v)?,
            "epsilon" => cfg.epsilon = self.float(v)?,
            "input_dim" => cfg.input_dim = self.usize(v)?,
            "jitter_scale" => cfg.jitter_scale = self.float(v)?,
            "kronecker" => cfg.kronecker = self.boolean(v)?,
            "draws" => cfg.draws = self.usize(v)?,
            "points" => cfg.points = self.usize(v)?,
            "fractions" => {
                cfg.fractions = self
                    .array(v)?
                    .iter()
                    .map(|x| self.float(x))
                    .collect::<Result<_>>()?
            }
            "data" => cfg.data = Some(PathBuf::from(self.string(v)?)),
            "data_columns" => {
                cfg.data_columns = self
                    .array(v)?
                    .iter()
                    .map(|x| self.string(x).map(str::to_string))
                    .collect::<Result<_>>()?
            }
            "test_data" => cfg.test_data = Some(PathBuf::from(self.string(v)?)),
            "image" => cfg.image = Some(PathBuf::from(self.string(v)?)),
            "mask" => cfg.mask = self.usize(v)?,
            "delta" => cfg.delta = self.float(v)?,
            "cutoffs" => {
                cfg.cutoffs = self
                    .array(v)?
                    .iter()
                    .map(|x| self.float(x))
                    .collect::<Result<_>>()?
            }
            "opt.method" => cfg.optimizer.method = self.parse(v, self.string(v)?.parse())?,
            "opt.lr" => cfg.optimizer.learning_rate = self.float(v)?,
            "opt.epochs" => cfg.optimizer.epochs = self.usize(v)?,
            "opt.beta1" => cfg.optimizer.adam_beta1 = self.float(v)?,
            "opt.beta2" => cfg.optimizer.adam_beta2 = self.float(v)?,
            "opt.eps" => cfg.optimizer.adam_eps = self.float(v)?,
            "opt.memory" => cfg.optimizer.lbfgs_memory = self.usize(v)?,
            _ => {
                return Err(Error::UnknownKey {
                    path: self.path.to_path_buf(),
                    line: (self.line_of)(key_span.start),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, Path::new("test.toml"))
    }

    #[test]
    fn learning_rate_key() {
        let c = parse("opt.lr = 0.005\n").unwrap();
        assert_eq!(c.optimizer.learning_rate, 0.005);
        let c = parse("[opt]\nlr = 0.25\nmethod = \"lbfgs\"\n").unwrap();
        assert_eq!(c.optimizer.learning_rate, 0.25);
        assert_eq!(c.optimizer.method, Method::Lbfgs);
    }

    #[test]
    fn kernel_key() {
        let c = parse("kernel = \"matern(16,4,0.5)\"").unwrap();
        assert_eq!(c.kernel, Some(KernelExpr::matern(16.0, 4.0, 0.5).unwrap()));
        let e = parse("kernel = \"matern(16,4,0.7)\"").unwrap_err();
        assert!(matches!(e, Error::InvalidKernelSpec { .. }), "{e:?}");
    }

    #[test]
    fn unknown_key_has_line() {
        match parse("seed = 3\n\nlearning_rate = 0.1\n") {
            Err(Error::UnknownKey { line, key, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(key, "learning_rate");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("[opt]\nfoo = 1\n"),
            Err(Error::UnknownKey { line: 2, .. })
        ));
    }

    #[test]
    fn syntax_and_type_errors_have_lines() {
        assert!(matches!(
            parse("seed = 1\nreps = = 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("seed = 1\nreps = \"x\"\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("opt.method = \"newton\""),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_parse_error() {
        let e = parse_config("/no/such/config.toml").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn base_experiment_applies_without_key() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "reps = 2\n").unwrap();
        let c = parse_config_for(&p, ExperimentKind::Sim4).unwrap();
        assert_eq!((c.reps, c.jitter_scale), (2, 10.0));
        std::fs::write(&p, "experiment = \"sim2\"\n").unwrap();
        let c = parse_config_for(&p, ExperimentKind::Sim4).unwrap();
        assert_eq!(c.experiment, Some(ExperimentKind::Sim2));
    }

    #[test]
    fn experiment_loads_preset_before_overrides() {
        let c = parse("reps = 3\nexperiment = \"sim3\"\n").unwrap();
        assert_eq!(c.reps, 3);
        assert_eq!(c.sizes, vec![50, 100, 200, 400]);
        assert_eq!(c.optimizer.learning_rate, 0.001);
        assert!(c.kronecker);
    }

    #[test]
    fn serialization_roundtrips() {
        for kind in ExperimentKind::ALL {
            let mut c = ExperimentConfig::preset(kind);
            c.data = Some(PathBuf::from("dir with space/co2.csv"));
            c.data_columns = vec!["decimal_date".into(), "co2_ppm".into()];
            c.other_kernel = Some(
                KernelExpr::rbf(1.5, 0.25)
                    .unwrap()
                    .with_nugget(0.1)
                    .unwrap(),
            );
            let text = c.to_toml();
            let back = parse(&text).unwrap_or_else(|e| panic!("{kind}: {e}\n{text}"));
            assert_eq!(back, c, "{kind}");
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::preset(ExperimentKind::Sim2);
        assert!(c.validate().is_ok());
        c.reps = 0;
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            fractions: vec![1.5],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
