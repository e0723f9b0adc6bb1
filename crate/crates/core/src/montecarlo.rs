//! Reproducible parallel Monte Carlo means of complex-valued samples.
//!
//! Draws are split into fixed-size batches. Batch `b` owns the ChaCha8
//! stream `b` of the run seed, so results do not depend on the number of
//! worker threads or on scheduling; batch accumulators are merged in order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

pub const DEFAULT_BATCH: usize = 4096;

/// Independent random stream `index` of the run `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
    pub batch: usize,
}

impl McConfig {
    pub fn new(seed: u64, samples: usize) -> Self {
        Self {
            seed,
            samples,
            batch: DEFAULT_BATCH,
        }
    }

    fn check(&self, min_samples: usize) -> Result<()> {
        if self.samples < min_samples {
            return Err(invalid(format!(
                "need at least {min_samples} samples, got {}",
                self.samples
            )));
        }
        if self.batch == 0 {
            return Err(invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Running sums for a complex sample mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub count: usize,
    pub sum: Complex64,
    pub sum_sq_re: f64,
    pub sum_sq_im: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq_re += x.re * x.re;
        self.sum_sq_im += x.im * x.im;
    }

    pub fn merge(mut self, other: &Accumulator) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq_re += other.sum_sq_re;
        self.sum_sq_im += other.sum_sq_im;
        self
    }

    pub fn estimate(&self) -> McEstimate {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = |sq: f64, m: f64| {
            if self.count < 2 {
                0.0
            } else {
                ((sq - n * m * m) / (n - 1.0)).max(0.0)
            }
        };
        let se_re = (var(self.sum_sq_re, mean.re) / n).sqrt();
        let se_im = (var(self.sum_sq_im, mean.im) / n).sqrt();
        McEstimate {
            mean,
            std_error: se_re.hypot(se_im),
            std_error_re: se_re,
            std_error_im: se_im,
            samples: self.count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    /// Standard error of the complex mean, `sqrt(se_re^2 + se_im^2)`.
    pub std_error: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Exact value with no sampling error.
    pub fn exact(value: Complex64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            std_error_re: 0.0,
            std_error_im: 0.0,
            samples: 0,
        }
    }

    /// `|mean - reference|` in units of the standard error.
    pub fn z_score(&self, reference: Complex64) -> f64 {
        let d = (self.mean - reference).norm();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }

    pub fn within(&self, reference: Complex64, sigmas: f64) -> bool {
        (self.mean - reference).norm() <= sigmas * self.std_error
    }
}

/// Per-batch accumulators for `draw`, in batch order.
pub fn run_batches<F>(cfg: &McConfig, min_samples: usize, draw: F) -> Result<Vec<Accumulator>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync,
{
    cfg.check(min_samples)?;
    let batches = cfg.samples.div_ceil(cfg.batch);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(cfg.seed, b as u64);
            let size = cfg.batch.min(cfg.samples - b * cfg.batch);
            let mut acc = Accumulator::default();
            for _ in 0..size {
                acc.push(draw(&mut rng)?);
            }
            Ok(acc)
        })
        .collect()
}

/// Sample mean of `draw` with its standard error.
pub fn monte_carlo<F>(cfg: &McConfig, min_samples: usize, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync,
{
    let accs = run_batches(cfg, min_samples, draw)?;
    Ok(accs
        .iter()
        .fold(Accumulator::default(), |a, b| a.merge(b))
        .estimate())
}

/// Several means from the same draws: `draw` fills one value per output.
pub fn monte_carlo_multi<F>(
    cfg: &McConfig,
    min_samples: usize,
    outputs: usize,
    draw: F,
) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut [Complex64]) -> Result<()> + Sync,
{
    cfg.check(min_samples)?;
    let batches = cfg.samples.div_ceil(cfg.batch);
    let per_batch: Vec<Vec<Accumulator>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(cfg.seed, b as u64);
            let size = cfg.batch.min(cfg.samples - b * cfg.batch);
            let mut accs = vec![Accumulator::default(); outputs];
            let mut buf = vec![Complex64::new(0.0, 0.0); outputs];
            for _ in 0..size {
                draw(&mut rng, &mut buf)?;
                for (acc, &x) in accs.iter_mut().zip(&buf) {
                    acc.push(x);
                }
            }
            Ok(accs)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Accumulator::default(); outputs];
    for accs in &per_batch {
        for (t, a) in total.iter_mut().zip(accs) {
            *t = t.merge(a);
        }
    }
    Ok(total.iter().map(Accumulator::estimate).collect())
}
