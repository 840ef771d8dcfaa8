//! Convex bodies in `F^n`, seen through their real coordinates.
//!
//! A point of `F^n` is a slice of `n p` reals in entry-major order (see
//! [`FVector::to_real`]). Every body answers membership queries and carries a
//! bounding ball; the remaining capabilities (exact volume, support
//! function, H-representation, ellipsoid form) are optional fast paths.

mod derived;
mod ellipsoid;
mod polytope;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::functionals::kappa;
use crate::mc::{self, McConfig, McRng, Moments, MAX_REJECTIONS};
use crate::ncla::FMat;
use crate::randgeom::{sample_grassmann, Subspace};
use crate::scalars::{FVector, Field, Scalar};

pub use derived::{AffineImage, Empty, NormBall, OracleBody, SectionBody};
pub use ellipsoid::Ellipsoid;
pub use polytope::{polygon_vertices, BoxBody, HRep, VPolytope};

pub type Body = Arc<dyn ConvexBody>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BodyKind {
    Ball,
    Ellipsoid,
    Box,
    VPolytope,
    AffineImage,
    Section,
    Symmetrized,
    NormBall,
    OracleOnly,
    Empty,
}

impl BodyKind {
    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Ball => "ball",
            BodyKind::Ellipsoid => "ellipsoid",
            BodyKind::Box => "box",
            BodyKind::VPolytope => "vpolytope",
            BodyKind::AffineImage => "affine_image",
            BodyKind::Section => "section",
            BodyKind::Symmetrized => "symmetrized",
            BodyKind::NormBall => "norm_ball",
            BodyKind::OracleOnly => "oracle",
            BodyKind::Empty => "empty",
        }
    }
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait ConvexBody: Send + Sync + fmt::Debug {
    fn field(&self) -> Field;

    /// Dimension over the field.
    fn n(&self) -> usize;

    fn dim(&self) -> usize {
        self.n() * self.field().p()
    }

    fn kind(&self) -> BodyKind;

    /// Membership of a point given in real coordinates of length `dim()`.
    fn contains(&self, x: &[f64]) -> bool;

    /// Center and radius of a euclidean ball containing the body.
    fn bounding_ball(&self) -> (Vec<f64>, f64);

    /// Radius of an origin-centered ball containing the body.
    fn bounding_radius(&self) -> f64 {
        let (c, r) = self.bounding_ball();
        mc::norm(&c) + r
    }

    fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn exact_volume(&self) -> Option<f64> {
        None
    }

    /// Analytic support function `sup <x, u>`, for any `u` (not only unit).
    fn support(&self, _u: &[f64]) -> Option<f64> {
        None
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        None
    }

    fn as_ellipsoid(&self) -> Option<&Ellipsoid> {
        None
    }

    fn hrep(&self) -> Option<&HRep> {
        None
    }

    fn is_empty_body(&self) -> bool {
        false
    }

    /// A uniform point. The default rejects from [`proposal`].
    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        rejection_sample(self, rng)
    }
}

/// Region from which rejection sampling draws.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Proposal {
    pub fn volume(&self) -> f64 {
        match self {
            Proposal::Ball { center, radius } => kappa(center.len()) * radius.powi(center.len() as i32),
            Proposal::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }

    pub fn draw(&self, rng: &mut McRng) -> Vec<f64> {
        match self {
            Proposal::Ball { center, radius } => {
                let mut x = mc::sample_ball(center.len(), rng);
                x.iter_mut().zip(center).for_each(|(xi, ci)| *xi = ci + radius * *xi);
                x
            }
            Proposal::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect(),
        }
    }
}

/// The smaller of the bounding ball and the bounding box.
pub fn proposal<K: ConvexBody + ?Sized>(k: &K) -> Proposal {
    let (center, radius) = k.bounding_ball();
    let ball = Proposal::Ball { center, radius };
    match k.bounding_box() {
        Some((lo, hi)) => {
            let bx = Proposal::Box { lo, hi };
            if bx.volume() < ball.volume() {
                bx
            } else {
                ball
            }
        }
        None => ball,
    }
}

pub fn rejection_sample<K: ConvexBody + ?Sized>(k: &K, rng: &mut McRng) -> Result<Vec<f64>> {
    if k.is_empty_body() {
        return Err(Error::RejectionBudgetExceeded(0));
    }
    let prop = proposal(k);
    for _ in 0..MAX_REJECTIONS {
        let x = prop.draw(rng);
        if k.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::RejectionBudgetExceeded(MAX_REJECTIONS))
}

/// Membership with a dimension check.
pub fn contains_checked(k: &dyn ConvexBody, x: &[f64]) -> Result<bool> {
    check_dim(k.dim(), x.len())?;
    Ok(k.contains(x))
}

/// Minimum sample budget accepted by [`volume`].
pub const MIN_VOLUME_SAMPLES: u64 = 1_000;

/// Exact volume when known, otherwise hit-or-miss Monte Carlo from the
/// rejection proposal with binomial standard error.
pub fn volume(k: &dyn ConvexBody, cfg: &McConfig) -> Result<mc::Estimate> {
    if let Some(v) = k.exact_volume() {
        return Ok(mc::Estimate::exact(v));
    }
    if k.is_empty_body() {
        return Ok(mc::Estimate::exact(0.0));
    }
    if cfg.samples < MIN_VOLUME_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "volume needs at least {MIN_VOLUME_SAMPLES} samples, got {}",
            cfg.samples
        )));
    }
    let prop = proposal(k);
    let hits = mc::estimate(cfg, |rng| f64::from(u8::from(k.contains(&prop.draw(rng)))));
    Ok(hits.scale(prop.volume()))
}

/// Right multiplication of every entry by `w`: the map `x -> x w`.
pub fn right_scalar_mul(field: Field, x: &[f64], w: Scalar) -> Vec<f64> {
    let p = field.p();
    let mut out = Vec::with_capacity(x.len());
    for ch in x.chunks_exact(p) {
        let s = Scalar::from_slice(field, ch).expect("chunk of length p");
        out.extend_from_slice((s * w).as_slice());
    }
    out
}

/// Support function with a sampled fallback: the best of `samples` uniform
/// points, pushed outward along `u` by bisection. A lower bound in general.
pub fn support_sampled(k: &dyn ConvexBody, u: &[f64], samples: usize, rng: &mut McRng) -> Result<f64> {
    if let Some(h) = k.support(u) {
        return Ok(h);
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_val = f64::NEG_INFINITY;
    for _ in 0..samples.max(1) {
        let x = k.sample(rng)?;
        let v = mc::dot(&x, u);
        if v > best_val {
            best_val = v;
            best = Some(x);
        }
    }
    let x = best.expect("at least one sample");
    let un = mc::norm(u);
    if un == 0.0 {
        return Ok(0.0);
    }
    let dir: Vec<f64> = u.iter().map(|t| t / un).collect();
    let t = boundary_along(k, &x, &dir);
    Ok(best_val + t * un)
}

/// Largest `t >= 0` with `x + t dir` in the body, for `x` in the body and a
/// unit `dir`; bisection to `1e-9 R`.
pub fn boundary_along(k: &dyn ConvexBody, x: &[f64], dir: &[f64]) -> f64 {
    let (c, r) = k.bounding_ball();
    // Exit time from the bounding ball bounds the search.
    let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
    let b = mc::dot(&d, dir);
    let disc = b * b - (mc::dot(&d, &d) - r * r);
    let mut hi = (-b + disc.max(0.0).sqrt()).max(0.0);
    let mut lo = 0.0;
    let tol = 1e-9 * r.max(f64::MIN_POSITIVE);
    let at = |t: f64| -> Vec<f64> { x.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
    if k.contains(&at(hi)) {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if k.contains(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Radial function `max{t : t u in K}`.
pub fn radial(k: &dyn ConvexBody, u: &[f64]) -> Result<f64> {
    check_dim(k.dim(), u.len())?;
    let origin = vec![0.0; k.dim()];
    if !k.contains(&origin) {
        return Err(Error::OriginNotInterior);
    }
    let un = mc::norm(u);
    if un == 0.0 {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    let dir: Vec<f64> = u.iter().map(|t| t / un).collect();
    let t = boundary_along(k, &origin, &dir);
    if t <= 0.0 {
        return Err(Error::OriginNotInterior);
    }
    Ok(t / un)
}

/// Radial function of the polar body, `1 / h_K(u)`.
pub fn polar_radial(k: &dyn ConvexBody, u: &[f64]) -> Result<f64> {
    check_dim(k.dim(), u.len())?;
    if !k.contains(&vec![0.0; k.dim()]) {
        return Err(Error::OriginNotInterior);
    }
    let h = k.support(u).ok_or(Error::UnsupportedKind(k.kind().name()))?;
    if h <= 0.0 {
        return Err(Error::OriginNotInterior);
    }
    Ok(1.0 / h)
}

/// Checks `x in K <=> x w in K` for random points of the bounding ball and
/// random unit scalars `w`.
pub fn unit_scalar_invariance_check(k: &dyn ConvexBody, trials: usize, rng: &mut McRng) -> bool {
    unit_scalar_witness(k, trials, rng).is_none()
}

/// A point `x` and unit scalar `w` with `x in K` differing from `x w in K`.
pub fn unit_scalar_witness(k: &dyn ConvexBody, trials: usize, rng: &mut McRng) -> Option<(Vec<f64>, Scalar)> {
    let field = k.field();
    let r = k.bounding_radius();
    let prop = Proposal::Ball { center: vec![0.0; k.dim()], radius: r };
    for t in 0..trials {
        // Alternate between body samples and points of the bounding ball.
        let x = if t % 2 == 0 { k.sample(rng).unwrap_or_else(|_| prop.draw(rng)) } else { prop.draw(rng) };
        let w = Scalar::random_unit(field, rng);
        if k.contains(&x) != k.contains(&right_scalar_mul(field, &x, w)) {
            return Some((x, w));
        }
    }
    None
}

/// Samples used to estimate a centroid when no exact one is known.
pub const CENTROID_SAMPLES: usize = 10_000;

pub fn centroid_or_estimate(k: &dyn ConvexBody, rng: &mut McRng) -> Result<Vec<f64>> {
    if let Some(c) = k.centroid() {
        return Ok(c);
    }
    let mut acc = vec![0.0; k.dim()];
    for _ in 0..CENTROID_SAMPLES {
        let x = k.sample(rng)?;
        acc.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
    }
    Ok(acc.into_iter().map(|a| a / CENTROID_SAMPLES as f64).collect())
}

/// Spread `max - min` of the support function of `K - c` over random unit
/// directions, `c` the centroid. Bodies without an analytic support
/// function use the radial function about `c` instead.
pub fn roundness_defect(k: &dyn ConvexBody, n_dirs: usize, rng: &mut McRng) -> Result<f64> {
    if k.is_empty_body() {
        return Ok(0.0);
    }
    let c = centroid_or_estimate(k, rng)?;
    let analytic = k.support(&c).is_some();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..n_dirs {
        let u = mc::sample_sphere(k.dim(), rng);
        let v = if analytic {
            k.support(&u).expect("analytic support") - mc::dot(&c, &u)
        } else {
            if !k.contains(&c) {
                return Err(Error::OriginNotInterior);
            }
            boundary_along(k, &c, &u)
        };
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(if n_dirs == 0 { 0.0 } else { hi - lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineRoundnessReport {
    pub max_defect: f64,
    pub lines: usize,
    pub degenerate: usize,
}

/// Sections by random affine F-lines through random points of `K`, each
/// recentered and measured by [`roundness_defect`].
pub fn line_section_roundness(k: &Body, trials: usize, n_dirs: usize, rng: &mut McRng) -> Result<LineRoundnessReport> {
    let mut report = LineRoundnessReport { max_defect: 0.0, lines: 0, degenerate: 0 };
    for _ in 0..trials {
        let line = sample_grassmann(k.n(), 1, k.field(), rng)?;
        let x = k.sample(rng)?;
        let s = section(k, &line, &x)?;
        if s.is_empty_body() || s.exact_volume() == Some(0.0) {
            report.degenerate += 1;
            continue;
        }
        let d = roundness_defect(s.as_ref(), n_dirs, rng)?;
        report.max_defect = report.max_defect.max(d);
        report.lines += 1;
    }
    Ok(report)
}

/// Midpoints of random member pairs are members.
pub fn convexity_spot_check(k: &dyn ConvexBody, pairs: usize, rng: &mut McRng) -> Result<bool> {
    for _ in 0..pairs {
        let a = k.sample(rng)?;
        let b = k.sample(rng)?;
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        if !k.contains(&mid) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Section `K ∩ (y + E)` in the coordinates of `E`'s real basis, a body in
/// `F^m`. The offset is projected onto `E^⟂`.
pub fn section(k: &Body, e: &Subspace, y: &[f64]) -> Result<Body> {
    if e.field() != k.field() {
        return Err(Error::FieldMismatch(k.field(), e.field()));
    }
    check_dim(k.n(), e.n())?;
    check_dim(k.dim(), y.len())?;
    let q = e.real_basis();
    let y_perp = e.project_out(y);
    if let Some(ell) = k.as_ellipsoid() {
        return Ok(match ell.section(&y_perp, q) {
            Some((center, form)) => Arc::new(Ellipsoid::from_real_form(k.field(), e.m(), center, form)?),
            None => Arc::new(Empty::new(k.field(), e.m())),
        });
    }
    Ok(SectionBody::build(k.clone(), y_perp, q.clone(), e.m()))
}

pub fn make_ball(field: Field, center: &FVector, r: f64) -> Result<Body> {
    Ok(Arc::new(Ellipsoid::ball(field, center, r)?))
}

pub fn make_ellipsoid(a: &FVector, h: &FMat) -> Result<Body> {
    Ok(Arc::new(Ellipsoid::from_hermitian(a, h)?))
}

pub fn make_box(field: Field, lo: &[f64], hi: &[f64]) -> Result<Body> {
    Ok(Arc::new(BoxBody::new(field, lo.to_vec(), hi.to_vec())?))
}

pub fn make_vpolytope(field: Field, vertices: Vec<Vec<f64>>) -> Result<Body> {
    Ok(Arc::new(VPolytope::new(field, vertices)?))
}

pub fn make_norm_ball(field: Field, n: usize, q: f64, r: f64) -> Result<Body> {
    Ok(Arc::new(NormBall::new(field, n, q, r)?))
}

/// Hides every fast path, leaving membership and the bounding ball.
pub fn oracle_only(k: Body) -> Body {
    Arc::new(OracleBody::new(k))
}

/// `x -> A x + b`; ellipsoids stay ellipsoids.
pub fn affine_image(k: &Body, a: &FMat, b: &FVector) -> Result<Body> {
    if a.field() != k.field() {
        return Err(Error::FieldMismatch(k.field(), a.field()));
    }
    if b.field() != k.field() {
        return Err(Error::FieldMismatch(k.field(), b.field()));
    }
    check_dim(k.n(), a.rows())?;
    check_dim(k.n(), a.cols())?;
    check_dim(k.n(), b.len())?;
    if a.det_abs()?.is_singular() {
        return Err(Error::SingularTransform);
    }
    let ar = a.real_operator();
    let br = b.to_real();
    if let Some(ell) = k.as_ellipsoid() {
        return Ok(Arc::new(ell.affine_image(&ar, &br)?));
    }
    Ok(Arc::new(AffineImage::new(k.clone(), ar, br)?))
}

/// Moments of `f` over uniform samples of `K`.
pub fn sample_moments<F>(k: &dyn ConvexBody, cfg: &McConfig, f: F) -> Result<Moments>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    mc::try_run(cfg, |rng| Ok(f(&k.sample(rng)?)))
}
