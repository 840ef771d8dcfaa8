//! Affine and dual affine quermassintegrals over `Gr_m(n, F)`:
//! `Φ_m(K) = ∫ |P_E K|^{-n} dE` and `Φ~_m(K) = ∫ |K ∩ E|^n dE`,
//! with the intersection inequality, the Santalo case and the conjecture
//! as numerical experiments.

use serde::Serialize;

use crate::bodies::{affine_image, section, unit_scalar_invariance_check, volume, Body, ConvexBody};
use crate::error::{check_dim, Error, Result};
use crate::functionals::kappa;
use crate::mc::{self, Estimate, McConfig, McRng};
use crate::ncla::FMat;
use crate::randgeom::{sample_grassmann, Subspace};
use crate::scalars::{FVector, Field};

/// Trials of the unit-scalar invariance screen.
pub const INVARIANCE_TRIALS: usize = 2_000;

fn origin_interior(k: &dyn ConvexBody) -> Result<()> {
    if k.contains(&vec![0.0; k.dim()]) {
        Ok(())
    } else {
        Err(Error::OriginNotInterior)
    }
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        Err(Error::InvalidArgument(format!("need 1 <= m < n, got m = {m}, n = {n}")))
    } else {
        Ok(())
    }
}

/// Hit-or-miss volume of a section with `samples` draws; returns the
/// estimate and its binomial relative variance.
fn inner_volume(s: &dyn ConvexBody, samples: usize, rng: &mut McRng) -> Result<(f64, f64)> {
    if let Some(v) = s.exact_volume() {
        return Ok((v, 0.0));
    }
    if s.is_empty_body() {
        return Ok((0.0, 0.0));
    }
    let prop = crate::bodies::proposal(s);
    let hits = (0..samples).filter(|_| s.contains(&prop.draw(rng))).count();
    let frac = hits as f64 / samples as f64;
    let rel_var = if hits == 0 { 0.0 } else { (1.0 - frac) / (samples as f64 * frac) };
    Ok((prop.volume() * frac, rel_var))
}

/// Unbiased estimate of `|S|^α` for one section: exact when the volume is
/// known, a product of `α` independent estimates for integer `α`, and a
/// second-order bias-corrected plug-in for fractional `α`.
fn section_power(s: &dyn ConvexBody, alpha: f64, samples: usize, rng: &mut McRng) -> Result<f64> {
    if let Some(v) = s.exact_volume() {
        return Ok(v.powf(alpha));
    }
    if alpha.fract() == 0.0 {
        let mut prod = 1.0;
        for _ in 0..alpha as usize {
            prod *= inner_volume(s, samples, rng)?.0;
        }
        return Ok(prod);
    }
    let (v, rel_var) = inner_volume(s, samples, rng)?;
    Ok(v.powf(alpha) / (1.0 + 0.5 * alpha * (alpha - 1.0) * rel_var))
}

/// `∫ |K ∩ E|^n dE`.
pub fn dual_affine_quermass(k: &Body, m: usize, cfg: &McConfig, inner_samples: usize) -> Result<Estimate> {
    check_m(m, k.n())?;
    origin_interior(k.as_ref())?;
    let (n, field) = (k.n(), k.field());
    let zero = vec![0.0; k.dim()];
    mc::try_estimate(cfg, |rng| {
        let e = sample_grassmann(n, m, field, rng)?;
        let s = section(k, &e, &zero)?;
        section_power(s.as_ref(), n as f64, inner_samples, rng)
    })
}

/// `|P_E K|` for an ellipsoid, or for `m = 1` and a unit-scalar invariant
/// body with a support function (`κ_p h_K(u)^p`, `u` a unit vector of `E`).
fn projection_volume(k: &dyn ConvexBody, e: &Subspace, invariant_line_path: bool) -> Result<f64> {
    if let Some(ell) = k.as_ellipsoid() {
        return Ok(ell.projection_volume(e.real_basis()));
    }
    if invariant_line_path {
        let u = e.basis()[0].to_real();
        let h = k.support(&u).ok_or(Error::UnsupportedBodyForProjection)?;
        let p = k.field().p();
        return Ok(kappa(p) * h.powi(p as i32));
    }
    Err(Error::UnsupportedBodyForProjection)
}

fn projection_path(k: &Body, m: usize) -> Result<bool> {
    if k.as_ellipsoid().is_some() {
        return Ok(false);
    }
    let probe = vec![1.0; k.dim()];
    if m == 1 && k.support(&probe).is_some() {
        let mut rng = mc::rng_from_seed(0x5CA1A7);
        if unit_scalar_invariance_check(k.as_ref(), INVARIANCE_TRIALS, &mut rng) {
            return Ok(true);
        }
    }
    Err(Error::UnsupportedBodyForProjection)
}

/// `∫ |P_E K|^{-n} dE`, for ellipsoids (any `m`) and for unit-scalar
/// invariant bodies with a support function (`m = 1`).
pub fn affine_quermass(k: &Body, m: usize, cfg: &McConfig) -> Result<Estimate> {
    check_m(m, k.n())?;
    let line_path = projection_path(k, m)?;
    let (n, field) = (k.n(), k.field());
    mc::try_estimate(cfg, |rng| {
        let e = sample_grassmann(n, m, field, rng)?;
        Ok(projection_volume(k.as_ref(), &e, line_path)?.powi(-(n as i32)))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `lhs - rhs`.
    pub difference: f64,
    pub sigma: f64,
}

impl ComparisonReport {
    pub fn new(lhs: Estimate, rhs: Estimate) -> Self {
        Self { lhs, rhs, difference: lhs.mean - rhs.mean, sigma: lhs.stderr.hypot(rhs.stderr) }
    }

    /// `difference / sigma`, see [`mc::sigmas`].
    pub fn margin_sigmas(&self) -> f64 {
        mc::sigmas(self.lhs.mean, self.rhs.mean, self.sigma)
    }

    pub fn equal_within(&self, k: f64) -> bool {
        mc::agrees(self.lhs.mean, self.rhs.mean, self.sigma, k)
    }

    /// `lhs >= rhs - k sigma`.
    pub fn holds_within(&self, k: f64) -> bool {
        mc::not_below(self.lhs.mean, self.rhs.mean, self.sigma, k)
    }
}

/// Quermassintegral of `K` against that of `g K` for `|det g| = 1`.
pub fn sl_invariance_test(
    k: &Body,
    m: usize,
    g: &FMat,
    dual: bool,
    cfg: &McConfig,
    inner_samples: usize,
) -> Result<ComparisonReport> {
    let d = g.det_abs()?.value();
    if (d - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnimodular(d));
    }
    let gk = affine_image(k, g, &FVector::zeros(k.field(), k.n()))?;
    let eval = |body: &Body, c: &McConfig| {
        if dual {
            dual_affine_quermass(body, m, c, inner_samples)
        } else {
            affine_quermass(body, m, c)
        }
    };
    let base = eval(k, &cfg.substream(1))?;
    let moved = eval(&gk, &cfg.substream(2))?;
    Ok(ComparisonReport::new(moved, base))
}

/// Scales `g` to `|det g| = 1`.
pub fn normalize_unimodular(g: &FMat) -> Result<FMat> {
    let d = g.det_abs()?.value();
    if d == 0.0 {
        return Err(Error::SingularTransform);
    }
    Ok(g.scale(d.powf(-1.0 / g.rows() as f64)))
}

/// `|K_1|..|K_m|` against
/// `κ_{np}^m / κ_{mp}^n ∫ |K_1 ∩ E|^{n/m} .. |K_m ∩ E|^{n/m} dE`.
pub fn intersection_inequality_check(
    bodies: &[Body],
    cfg: &McConfig,
    inner_samples: usize,
) -> Result<ComparisonReport> {
    let first = bodies.first().ok_or_else(|| Error::InvalidArgument("no bodies given".into()))?;
    let (field, n, m) = (first.field(), first.n(), bodies.len());
    check_m(m, n)?;
    for k in bodies {
        if k.field() != field {
            return Err(Error::FieldMismatch(field, k.field()));
        }
        check_dim(n, k.n())?;
        origin_interior(k.as_ref())?;
    }
    let p = field.p();
    let alpha = n as f64 / m as f64;
    let zero = vec![0.0; n * p];
    let integral = mc::try_estimate(cfg, |rng| {
        let e = sample_grassmann(n, m, field, rng)?;
        let mut prod = 1.0;
        for k in bodies {
            let s = section(k, &e, &zero)?;
            prod *= section_power(s.as_ref(), alpha, inner_samples, rng)?;
        }
        Ok(prod)
    })?;
    let rhs = integral.scale(kappa(n * p).powi(m as i32) / kappa(m * p).powi(n as i32));
    let lhs = bodies
        .iter()
        .enumerate()
        .map(|(i, k)| volume(k.as_ref(), &cfg.substream(3000 + i as u64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Estimate::exact(1.0), Estimate::mul);
    Ok(ComparisonReport::new(lhs, rhs))
}

#[derive(Debug, Clone, Serialize)]
pub struct SantaloReport {
    /// `κ_p^n ∫ |P_E K|^{-n} dE` over lines.
    pub line_integral: Estimate,
    /// `|K*| / κ_{np}` from the sphere average of `h_K^{-np}`.
    pub polar_ratio: Estimate,
    /// `line_integral` against `polar_ratio`.
    pub identity: ComparisonReport,
    /// `|K|^{-1}` against `line_integral / κ_{np}`.
    pub inequality: ComparisonReport,
}

/// Both sides of `κ_p^n ∫ |P_E K|^{-n} dE = |K*| / κ_{np}` and of
/// `|K|^{-1} >= κ_p^n / κ_{np} ∫ |P_E K|^{-n} dE` for a unit-scalar
/// invariant body.
pub fn santalo_case(k: &Body, cfg: &McConfig) -> Result<SantaloReport> {
    origin_interior(k.as_ref())?;
    let (n, field) = (k.n(), k.field());
    let np = k.dim();
    let probe = vec![1.0; np];
    if k.support(&probe).is_none() {
        return Err(Error::UnsupportedKind(k.kind().name()));
    }
    let mut rng = mc::rng_from_seed(cfg.seed ^ 0x5A17);
    if !unit_scalar_invariance_check(k.as_ref(), INVARIANCE_TRIALS, &mut rng) {
        return Err(Error::NotUnitScalarInvariant);
    }
    let h_pow = |u: &[f64]| -> Result<f64> {
        let h = k.support(u).ok_or(Error::UnsupportedKind(k.kind().name()))?;
        if h <= 0.0 {
            return Err(Error::OriginNotInterior);
        }
        Ok(h.powi(-(np as i32)))
    };
    let p = field.p();
    let line_integral = mc::try_estimate(&cfg.substream(1), |rng| {
        let e = sample_grassmann(n, 1, field, rng)?;
        let proj = projection_volume(k.as_ref(), &e, true)?;
        Ok(kappa(p).powi(n as i32) * proj.powi(-(n as i32)))
    })?;
    let polar_ratio = mc::try_estimate(&cfg.substream(2), |rng| h_pow(&mc::sample_sphere(np, rng)))?;
    let vol = volume(k.as_ref(), &cfg.substream(3))?;
    let inv_vol = vol.powf(-1.0);
    Ok(SantaloReport {
        line_integral,
        polar_ratio,
        identity: ComparisonReport::new(line_integral, polar_ratio),
        inequality: ComparisonReport::new(inv_vol, line_integral.scale(1.0 / kappa(np))),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    /// Exploration only; never an acceptance gate.
    pub exploration: bool,
    /// `|K|^{-m}` against `κ_{mp}^n / κ_{np}^m ∫ |P_E K|^{-n} dE`.
    pub conjecture: ComparisonReport,
    /// `(1/κ_{mp}) ∫ |P_E K| dE` against `(|K| / κ_{np})^{m/n}`.
    pub isoperimetric: ComparisonReport,
}

pub fn conjecture_eval(k: &Body, m: usize, cfg: &McConfig) -> Result<ConjectureReport> {
    check_m(m, k.n())?;
    let line_path = projection_path(k, m)?;
    let (n, field, p) = (k.n(), k.field(), k.field().p());
    let neg = affine_quermass(k, m, &cfg.substream(1))?;
    let pos = mc::try_estimate(&cfg.substream(2), |rng| {
        let e = sample_grassmann(n, m, field, rng)?;
        projection_volume(k.as_ref(), &e, line_path)
    })?;
    let vol = volume(k.as_ref(), &cfg.substream(3))?;
    let conjecture = ComparisonReport::new(
        vol.powf(-(m as f64)),
        neg.scale(kappa(m * p).powi(n as i32) / kappa(n * p).powi(m as i32)),
    );
    let isoperimetric =
        ComparisonReport::new(pos.scale(1.0 / kappa(m * p)), vol.scale(1.0 / kappa(n * p)).powf(m as f64 / n as f64));
    Ok(ConjectureReport { exploration: true, conjecture, isoperimetric })
}

/// The exact value `κ_{mp}^n` of the dual quermassintegral of the unit
/// ball, and `κ_{mp}^{-n}` of the affine one.
pub fn unit_ball_values(n: usize, m: usize, field: Field) -> (f64, f64) {
    let k = kappa(m * field.p()).powi(n as i32);
    (k, 1.0 / k)
}
