//! Counter-based, splittable random streams.
//!
//! A stream is identified by a root seed and a short path of integers such
//! as `[experiment, n, replication, draw]`. The key of a stream is obtained
//! by folding every path element into the root with the SplitMix64
//! finalizer:
//!
//! ```text
//! key_0     = finalize(root)
//! key_{i+1} = finalize(key_i ^ finalize(path[i] + GOLDEN))
//! word_j    = finalize(key + (j + 1) * GOLDEN)
//! ```
//!
//! with `GOLDEN = 0x9E3779B97F4A7C15`. Words are a pure function of
//! `(root, path, j)`, so any stream can be reconstructed anywhere without
//! coordination, which is what makes parallel replications reproducible.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Longest supported stream path.
pub const MAX_PATH: usize = 8;

/// The SplitMix64 output finalizer.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic stream of 64-bit words.
#[derive(Clone, Debug)]
pub struct RngStream {
    root: u64,
    path: Vec<u64>,
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    /// Opens the stream at `path` below `root`.
    ///
    /// # Panics
    /// If `path` has more than [`MAX_PATH`] elements.
    pub fn new(root: u64, path: &[u64]) -> Self {
        assert!(
            path.len() <= MAX_PATH,
            "stream path has {} elements, at most {MAX_PATH} allowed",
            path.len()
        );
        let key = path.iter().fold(finalize(root), |k, &e| {
            finalize(k ^ finalize(e.wrapping_add(GOLDEN)))
        });
        RngStream {
            root,
            path: path.to_vec(),
            key,
            counter: 0,
            spare_normal: None,
        }
    }

    /// The stream one level below this one.
    pub fn child(&self, element: u64) -> Self {
        let mut path = self.path.clone();
        path.push(element);
        RngStream::new(self.root, &path)
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        finalize(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in the open interval `(0, 1)`.
    #[inline]
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via the Box–Muller transform; draws come in pairs
    /// and the second of each pair is cached.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }

    /// Index uniformly distributed in `0..n` (Lemire's multiply-shift).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Uniform perturbation on `(-1/(scale·n), 1/(scale·n))`, one value per point.
///
/// Uses the open-interval generator, so the bounds are never attained.
pub fn location_jitter(rng: &mut RngStream, n: usize, scale: f64) -> Vec<f64> {
    let half = 1.0 / (scale * n as f64);
    (0..n)
        .map(|_| half * (2.0 * rng.next_open_f64() - 1.0))
        .collect()
}
