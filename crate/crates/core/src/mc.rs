//! Seeded, parallel Monte Carlo with reproducible merging.
//!
//! Every run is split into fixed per-worker quotas. Worker `w` draws from its
//! own ChaCha stream seeded by [`derive_seed`]`(seed, w)`, and the partial
//! moments are merged in worker order, so the result depends only on
//! `(samples, seed, workers)` and never on scheduling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type McRng = ChaCha8Rng;

/// Relative standard error above which an estimate is flagged.
pub const INSUFFICIENT_REL_STDERR: f64 = 0.05;

pub fn rng_from_seed(seed: u64) -> McRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    /// Same budget, independent stream.
    pub fn substream(&self, tag: u64) -> Self {
        Self { seed: derive_seed(self.seed, tag ^ 0xA5A5_0000_0000_0000), ..*self }
    }

    fn quota(&self, worker: usize) -> u64 {
        let w = self.workers as u64;
        self.samples / w + u64::from((worker as u64) < self.samples % w)
    }
}

/// Running count, mean and centered second moment (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        Estimate { mean: self.mean, stderr: self.stderr(), n_samples: self.n, seed }
    }
}

/// Monte Carlo result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, stderr: 0.0, n_samples: 0, seed: 0 }
    }

    pub fn is_exact(&self) -> bool {
        self.stderr == 0.0 && self.n_samples == 0
    }

    pub fn rel_stderr(&self) -> f64 {
        if self.mean == 0.0 {
            if self.stderr == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.stderr / self.mean.abs()
        }
    }

    /// Relative standard error above 5%.
    pub fn insufficient_samples(&self) -> bool {
        self.rel_stderr() > INSUFFICIENT_REL_STDERR
    }

    pub fn scale(self, c: f64) -> Self {
        Self { mean: self.mean * c, stderr: self.stderr * c.abs(), ..self }
    }

    /// Product of independent estimates, first-order error propagation.
    pub fn mul(self, o: Estimate) -> Self {
        let var = (o.mean * self.stderr).powi(2) + (self.mean * o.stderr).powi(2);
        Self { mean: self.mean * o.mean, stderr: var.sqrt(), n_samples: self.n_samples + o.n_samples, seed: self.seed }
    }

    /// Difference of independent estimates.
    pub fn sub(self, o: Estimate) -> Self {
        Self {
            mean: self.mean - o.mean,
            stderr: self.stderr.hypot(o.stderr),
            n_samples: self.n_samples + o.n_samples,
            seed: self.seed,
        }
    }

    /// `self^k`, first-order error propagation.
    pub fn powf(self, k: f64) -> Self {
        let mean = self.mean.powf(k);
        let d = if self.mean == 0.0 { 0.0 } else { k * mean / self.mean };
        Self { mean, stderr: (d * self.stderr).abs(), ..self }
    }

    /// `(mean - target) / stderr`, or 0/inf for exact values.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if agrees(self.mean, target, 0.0, 0.0) {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// `|a - b| <= k sigma`, allowing floating round-off when `sigma` is 0.
pub fn agrees(a: f64, b: f64, sigma: f64, k: f64) -> bool {
    (a - b).abs() <= k * sigma + 1e-10 * a.abs().max(b.abs()) + 1e-300
}

/// `(a - b) / sigma` in units that include the round-off allowance of
/// [`agrees`]: differences at round-off level count as 0.
pub fn sigmas(a: f64, b: f64, sigma: f64) -> f64 {
    let d = a - b;
    if agrees(a, b, 0.0, 0.0) {
        return 0.0;
    }
    let s = sigma + 1e-10 * a.abs().max(b.abs());
    if s > 0.0 {
        d / s
    } else {
        d.signum() * f64::INFINITY
    }
}

/// `a + k sigma >= b`, with the same round-off allowance.
pub fn not_below(a: f64, b: f64, sigma: f64, k: f64) -> bool {
    a + k * sigma + 1e-10 * a.abs().max(b.abs()) >= b
}

/// Run `f` for `cfg.samples` draws split across `cfg.workers` streams.
pub fn try_run<F>(cfg: &McConfig, f: F) -> Result<Moments>
where
    F: Fn(&mut McRng) -> Result<f64> + Sync,
{
    let parts: Vec<Result<Moments>> = (0..cfg.workers.max(1))
        .into_par_iter()
        .map(|w| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, w as u64));
            let mut m = Moments::default();
            for _ in 0..cfg.quota(w) {
                m.push(f(&mut rng)?);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

pub fn run<F>(cfg: &McConfig, f: F) -> Moments
where
    F: Fn(&mut McRng) -> f64 + Sync,
{
    try_run(cfg, |rng| Ok(f(rng))).expect("infallible sampler")
}

pub fn try_estimate<F>(cfg: &McConfig, f: F) -> Result<Estimate>
where
    F: Fn(&mut McRng) -> Result<f64> + Sync,
{
    Ok(try_run(cfg, f)?.estimate(cfg.seed))
}

pub fn estimate<F>(cfg: &McConfig, f: F) -> Estimate
where
    F: Fn(&mut McRng) -> f64 + Sync,
{
    run(cfg, f).estimate(cfg.seed)
}

/// Parallel map over `0..count` with a per-item stream; results keep order.
pub fn par_map_seeded<T, F>(count: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut McRng) -> T + Sync,
{
    (0..count).into_par_iter().map(|i| f(i, &mut rng_from_seed(derive_seed(seed, i as u64)))).collect()
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform point on the unit sphere `S^{d-1}`.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point in the unit ball `B^d`.
pub fn sample_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    let mut v = sample_sphere(d, rng);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_budget(rejections: u64) -> Result<()> {
    if rejections >= MAX_REJECTIONS {
        Err(Error::RejectionBudgetExceeded(rejections))
    } else {
        Ok(())
    }
}

/// Consecutive rejections allowed before a sampler gives up.
pub const MAX_REJECTIONS: u64 = 1_000_000;
