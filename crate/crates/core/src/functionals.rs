//! Ball constants, the random-simplex functional
//! `B(K_1..K_n) = ∫ Φ(|det(x_1..x_n)|) dx_1..dx_n`, the one-dimensional
//! functionals `M` and `M_λ`, and the gap to equal-volume balls.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::bodies::{volume, Body};
use crate::error::{Error, Result};
use crate::mc::{self, Estimate, McConfig};
use crate::ncla::det_abs_tuple;
use crate::scalars::{FVector, Field, Scalar};

/// Volume of the unit ball in `R^n`.
pub fn kappa(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => kappa(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Surface area of the unit sphere in `R^n`, `n kappa_n`.
pub fn omega(n: usize) -> f64 {
    n as f64 * kappa(n)
}

pub fn kappa_real(x: f64) -> f64 {
    PI.powf(0.5 * x) / libm::tgamma(0.5 * x + 1.0)
}

pub fn omega_real(x: f64) -> f64 {
    x * kappa_real(x)
}

/// Memoized `kappa` and `omega` up to a fixed index.
#[derive(Debug, Clone)]
pub struct BallConstants {
    kappa: Vec<f64>,
    omega: Vec<f64>,
}

impl BallConstants {
    pub fn new(max_n: usize) -> Self {
        Self { kappa: (0..=max_n).map(kappa).collect(), omega: (0..=max_n).map(omega).collect() }
    }

    pub fn kappa(&self, n: usize) -> f64 {
        self.kappa.get(n).copied().unwrap_or_else(|| kappa(n))
    }

    pub fn omega(&self, n: usize) -> f64 {
        self.omega.get(n).copied().unwrap_or_else(|| omega(n))
    }
}

/// `B(B^{np}, ..., B^{np})` for `Φ(t) = t^r`:
/// `kappa_{np+r}^n prod_{j<n} omega_{(n-j)p} / omega_{(n-j)p+r}`.
pub fn b_balls_exact(n: usize, p: usize, r: f64) -> f64 {
    let np = (n * p) as f64;
    let mut v = kappa_real(np + r).powi(n as i32);
    for j in 0..n {
        let d = ((n - j) * p) as f64;
        v *= omega_real(d) / omega_real(d + r);
    }
    v
}

pub type CustomWeight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Strictly increasing weight `Φ` on `[0, inf)`.
#[derive(Clone)]
pub enum Weight {
    Power(f64),
    Custom(CustomWeight),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Power(r) => write!(f, "Power({r})"),
            Weight::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Weight {
    pub fn power(r: f64) -> Result<Self> {
        if r >= 0.0 && r.is_finite() {
            Ok(Weight::Power(r))
        } else {
            Err(Error::InvalidArgument(format!("power weight needs r >= 0, got {r}")))
        }
    }

    /// Accepts `f` after checking strict increase on a grid of `[0, 10]`.
    pub fn custom(f: CustomWeight) -> Result<Self> {
        let grid: Vec<f64> = (0..=1000).map(|i| f(i as f64 * 0.01)).collect();
        if grid.windows(2).all(|w| w[1] > w[0]) {
            Ok(Weight::Custom(f))
        } else {
            Err(Error::InvalidArgument("custom weight is not strictly increasing".into()))
        }
    }

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        match self {
            Weight::Power(r) => {
                if *r == 0.0 {
                    1.0
                } else if *r == 2.0 {
                    t * t
                } else if *r == 1.0 {
                    t
                } else {
                    t.powf(*r)
                }
            }
            Weight::Custom(f) => f(t),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            Weight::Power(r) => Some(*r),
            Weight::Custom(_) => None,
        }
    }
}

fn check_family(bodies: &[Body], expected_n: Option<usize>) -> Result<(Field, usize)> {
    let first = bodies.first().ok_or_else(|| Error::InvalidArgument("no bodies given".into()))?;
    let (field, n) = (first.field(), first.n());
    for k in bodies {
        if k.field() != field {
            return Err(Error::FieldMismatch(field, k.field()));
        }
        crate::error::check_dim(n, k.n())?;
    }
    if let Some(e) = expected_n {
        crate::error::check_dim(e, n)?;
    }
    Ok((field, n))
}

/// Volumes of several bodies from independent streams.
pub fn volumes(bodies: &[Body], cfg: &McConfig) -> Result<Vec<Estimate>> {
    bodies.iter().enumerate().map(|(i, k)| volume(k.as_ref(), &cfg.substream(1000 + i as u64))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BEstimate {
    /// `B(K_1..K_n)`.
    pub value: Estimate,
    /// Mean of `Φ(|det|)` over independent uniform points.
    pub integrand: Estimate,
    pub volumes: Vec<Estimate>,
}

impl BEstimate {
    pub fn insufficient_samples(&self) -> bool {
        self.value.insufficient_samples()
    }
}

fn combine(integrand: Estimate, vols: &[Estimate]) -> Estimate {
    let v = vols.iter().fold(Estimate::exact(1.0), |acc, e| acc.mul(*e));
    Estimate { n_samples: integrand.n_samples, seed: integrand.seed, ..integrand.mul(v) }
}

/// Monte Carlo `B(K_1..K_n)` for `n` bodies in `F^n`.
pub fn b_functional(bodies: &[Body], weight: &Weight, cfg: &McConfig) -> Result<BEstimate> {
    let (field, _) = check_family(bodies, Some(bodies.len()))?;
    let integrand = mc::try_estimate(cfg, |rng| {
        let pts = bodies.iter().map(|k| FVector::from_real(field, &k.sample(rng)?)).collect::<Result<Vec<_>>>()?;
        Ok(weight.apply(det_abs_tuple(&pts)?.value()))
    })?;
    let vols = volumes(bodies, cfg)?;
    Ok(BEstimate { value: combine(integrand, &vols), integrand, volumes: vols })
}

/// `M` (all `λ_i = 1`) or `M_λ`: `∫ Φ(|x_1 λ_1 + ... + x_m λ_m|)` over
/// bodies in `F`.
pub fn m_functional(bodies: &[Body], weight: &Weight, lambda: Option<&[Scalar]>, cfg: &McConfig) -> Result<BEstimate> {
    let (field, _) = check_family(bodies, Some(1))?;
    let ones = vec![Scalar::one(field); bodies.len()];
    let lambda = lambda.unwrap_or(&ones);
    crate::error::check_dim(bodies.len(), lambda.len())?;
    if let Some(bad) = lambda.iter().find(|l| l.field() != field) {
        return Err(Error::FieldMismatch(field, bad.field()));
    }
    let integrand = mc::try_estimate(cfg, |rng| {
        let mut acc = Scalar::zero(field);
        for (k, &l) in bodies.iter().zip(lambda) {
            let x = Scalar::from_slice(field, &k.sample(rng)?)?;
            acc += x * l;
        }
        Ok(weight.apply(acc.norm()))
    })?;
    let vols = volumes(bodies, cfg)?;
    Ok(BEstimate { value: combine(integrand, &vols), integrand, volumes: vols })
}

#[derive(Debug, Clone, Serialize)]
pub struct BrsGap {
    pub b_k: Estimate,
    /// `B` of the centered balls with the volumes of the `K_i`.
    pub b_balls: f64,
    pub gap: f64,
    pub sigma: f64,
}

impl BrsGap {
    pub fn z(&self) -> f64 {
        mc::sigmas(self.b_k.mean, self.b_balls, self.sigma)
    }
}

/// `B(K_1..K_n) - B(B_1..B_n)` for `Φ = t^r`, the `B_i` centered balls with
/// `|B_i| = |K_i|`.
///
/// Substituting `x_i = ρ_i y_i` gives
/// `B(ρ_1 B, ..., ρ_n B) = prod ρ_i^{np} (prod ρ_i)^r B(B, ..., B)`, i.e.
/// `b_balls_exact * prod (v_i / kappa_{np})^{1 + r/(np)}`. The error of the
/// volume estimates enters both terms and is propagated jointly.
pub fn brs_gap(bodies: &[Body], weight: &Weight, cfg: &McConfig) -> Result<BrsGap> {
    let r = weight.exponent().ok_or_else(|| Error::InvalidArgument("brs_gap needs a power weight".into()))?;
    let est = b_functional(bodies, weight, cfg)?;
    let (field, n) = (bodies[0].field(), bodies.len());
    let np = n * field.p();
    let gamma = 1.0 + r / np as f64;
    let b_balls =
        b_balls_exact(n, field.p(), r) * est.volumes.iter().map(|v| (v.mean / kappa(np)).powf(gamma)).product::<f64>();
    let b_k = est.value;
    let vprod: f64 = est.volumes.iter().map(|v| v.mean).product();
    let mut var = (vprod * est.integrand.stderr).powi(2);
    for v in &est.volumes {
        if v.stderr > 0.0 {
            var += ((b_k.mean - gamma * b_balls) / v.mean * v.stderr).powi(2);
        }
    }
    Ok(BrsGap { b_k, b_balls, gap: b_k.mean - b_balls, sigma: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ball_constants() {
        assert!(rel(kappa(2), PI) < 1e-15);
        assert!(rel(kappa(3), 4.0 * PI / 3.0) < 1e-15);
        assert!(rel(omega(4), 2.0 * PI * PI) < 1e-15);
        assert!(rel(kappa(8), PI.powi(4) / 24.0) < 1e-15);
        assert_eq!(kappa(0), 1.0);
        for n in 0..20 {
            assert!(rel(kappa_real(n as f64), kappa(n)) < 1e-12, "n = {n}");
        }
        let t = BallConstants::new(8);
        assert_eq!(t.kappa(4), kappa(4));
        assert_eq!(t.omega(30), omega(30));
    }

    #[test]
    fn ball_formula_anchors() {
        assert!(rel(b_balls_exact(1, 1, 1.0), 1.0) < 1e-13);
        assert!(rel(b_balls_exact(1, 2, 2.0), PI / 2.0) < 1e-13);
        assert!(rel(b_balls_exact(2, 1, 1.0), 8.0 * PI / 9.0) < 1e-13);
        assert!(rel(b_balls_exact(2, 2, 2.0), PI.powi(4) / 18.0) < 1e-13);
        // r = 0: the integrand is 1 and B = kappa_{np}^n.
        assert!(rel(b_balls_exact(3, 4, 0.0), kappa(12).powi(3)) < 1e-12);
    }

    #[test]
    fn weights() {
        assert!(Weight::power(-1.0).is_err());
        assert!(Weight::custom(Arc::new(|t: f64| -t)).is_err());
        let w = Weight::custom(Arc::new(|t: f64| t.exp())).unwrap();
        assert_eq!(w.apply(0.0), 1.0);
        assert_eq!(w.exponent(), None);
        assert_eq!(Weight::Power(3.0).apply(2.0), 8.0);
    }
}
