//! Filling a masked square of a grayscale image with the posterior mean.
//!
//! Pixel coordinates are the inputs and intensities the response.
//! Intensities are scaled to `[0, 1]` and centered by the mean of the
//! visible pixels before fitting; predictions are mapped back to `[0, 255]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{mse, posterior_predict, Dataset, GpModel};
use crate::io::{parse_pgm, pgm_bytes, Cell, ExperimentConfig};
use crate::kernel::KernelExpr;
use crate::linalg::Matrix;
use crate::optimize::fit;

use super::{kernel_label, Artifact};

const SCALE: f64 = 255.0;

/// A 32×32 synthetic handwritten zero bundled with the crate.
pub fn bundled_digit() -> Matrix {
    parse_pgm(include_bytes!("../../data/zero32.pgm")).expect("bundled image is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct InpaintResult {
    pub label: String,
    pub kernel: KernelExpr,
    /// Mean squared error over the masked block, in `[0, 255]` units.
    pub mse: f64,
    /// The input image with the masked block replaced by the prediction.
    pub image: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InpaintReport {
    /// Top-left corner and side of the masked block.
    pub top: usize,
    pub left: usize,
    pub side: usize,
    /// The input with the masked block set to zero.
    pub masked: Matrix,
    pub results: Vec<InpaintResult>,
}

impl InpaintReport {
    /// `inpaint.csv`, `inpaint_masked.pgm` and one `inpaint_k<i>.pgm` per
    /// kernel.
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut out = vec![Artifact::new(
            "inpaint_masked.pgm",
            pgm_bytes(&self.masked)?,
        )];
        let mut rows = Vec::new();
        for (i, r) in self.results.iter().enumerate() {
            let file = format!("inpaint_k{}.pgm", i + 1);
            rows.push(vec![
                Cell::from(r.label.as_str()),
                Cell::from(file.as_str()),
                r.mse.into(),
            ]);
            out.push(Artifact::new(file, pgm_bytes(&r.image)?));
        }
        out.insert(
            0,
            Artifact::csv("inpaint.csv", &["kernel", "file", "mse"], &rows)?,
        );
        Ok(out)
    }
}

/// Fits each kernel of `cfg.kernels` to the pixels outside a centered
/// `side × side` square and predicts the square.
pub fn run_image_inpaint(
    image: &Matrix,
    side: usize,
    cfg: &ExperimentConfig,
) -> Result<InpaintReport> {
    cfg.optimizer.validate()?;
    let (h, w) = image.shape();
    if side == 0 || side >= h.min(w) {
        return Err(Error::MaskTooLarge {
            side,
            rows: h,
            cols: w,
        });
    }
    if cfg.kernels.is_empty() {
        return Err(Error::InvalidConfig("no kernels to compare".into()));
    }
    let (top, left) = ((h - side) / 2, (w - side) / 2);
    let inside =
        |r: usize, c: usize| (top..top + side).contains(&r) && (left..left + side).contains(&c);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for r in 0..h {
        for c in 0..w {
            if inside(r, c) { &mut test } else { &mut train }.push((r, c));
        }
    }
    let coords = |px: &[(usize, usize)]| {
        Matrix::from_fn(
            px.len(),
            2,
            |i, j| if j == 0 { px[i].0 } else { px[i].1 } as f64,
        )
    };
    let values = |px: &[(usize, usize)]| -> Vec<f64> {
        px.iter().map(|&(r, c)| image[(r, c)] / SCALE).collect()
    };
    let raw = values(&train);
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let data = Dataset::scalar(coords(&train), raw.iter().map(|v| v - mean).collect())?;
    let xtest = coords(&test);
    let truth: Vec<f64> = test.iter().map(|&(r, c)| image[(r, c)]).collect();
    let results = cfg
        .kernels
        .par_iter()
        .map(|k| {
            let fitted = fit(&GpModel::new(k.clone(), cfg.epsilon), &data, &cfg.optimizer)?.kernel;
            let model = GpModel::new(fitted.clone(), cfg.epsilon);
            let post = posterior_predict(&model, &data.x, data.y_flat(), &xtest)?;
            let pred: Vec<f64> = post.mean.iter().map(|v| (v + mean) * SCALE).collect();
            let mut filled = image.clone();
            for (&(r, c), &v) in test.iter().zip(&pred) {
                filled[(r, c)] = v;
            }
            Ok(InpaintResult {
                label: kernel_label(k),
                kernel: fitted,
                mse: mse(&pred, &truth)?,
                image: filled,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut masked = image.clone();
    for &(r, c) in &test {
        masked[(r, c)] = 0.0;
    }
    Ok(InpaintReport {
        top,
        left,
        side,
        masked,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::ExperimentKind;
    use crate::optimize::{Method, OptimizerConfig};

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(ExperimentKind::Inpaint);
        c.kernels = vec![KernelExpr::matern(1.0, 1.0, 0.5).unwrap()];
        c.optimizer = OptimizerConfig::new(Method::Adam, 0.05, 10);
        c
    }

    #[test]
    fn bundled_image_is_32_square() {
        let m = bundled_digit();
        assert_eq!(m.shape(), (32, 32));
        assert!(m.as_slice().iter().any(|&v| v > 200.0));
    }

    #[test]
    fn constant_image_is_reproduced() {
        let img = Matrix::from_fn(10, 10, |_, _| 100.0);
        let r = run_image_inpaint(&img, 4, &cfg()).unwrap();
        let out = &r.results[0];
        assert!(out.mse < 1e-6, "{}", out.mse);
        for i in 3..7 {
            for j in 3..7 {
                assert!((out.image[(i, j)] - 100.0).abs() < 1e-3);
            }
        }
        assert_eq!((r.top, r.left), (3, 3));
        assert_eq!(r.masked[(5, 5)], 0.0);
    }

    #[test]
    fn mask_must_fit() {
        let img = Matrix::from_fn(6, 8, |r, c| (r + c) as f64);
        assert!(matches!(
            run_image_inpaint(&img, 6, &cfg()),
            Err(Error::MaskTooLarge {
                side: 6,
                rows: 6,
                cols: 8
            })
        ));
    }

    #[test]
    fn smooth_image_predicted_closely() {
        let img = Matrix::from_fn(12, 12, |r, c| {
            120.0 + 60.0 * ((r as f64) / 4.0).sin() * ((c as f64) / 5.0).cos()
        });
        let r = run_image_inpaint(&img, 4, &cfg()).unwrap();
        assert!(r.results[0].mse < 400.0, "{}", r.results[0].mse);
        let names: Vec<String> = r.artifacts().unwrap().into_iter().map(|a| a.name).collect();
        assert_eq!(
            names,
            ["inpaint.csv", "inpaint_masked.pgm", "inpaint_k1.pgm"]
        );
    }
}
