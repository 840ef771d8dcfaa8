//! Steiner symmetrization in real hyperplanes and symmetrization in
//! F-hyperplanes.
//!
//! Both replace the fibers of `K` over a linear hyperplane `H` by centered
//! balls of the same volume: segments for Steiner (fibers along a real unit
//! normal `u`), `p`-balls for an F-hyperplane (fibers along `ν F` for a unit
//! F-normal `ν`). Ellipsoids are mapped to ellipsoids in closed form; other
//! bodies get a membership oracle built on fiber measurements.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::bodies::{roundness_defect, volume, Body, BodyKind, ConvexBody, Ellipsoid};
use crate::error::{check_dim, Error, Result};
use crate::functionals::kappa;
use crate::mc::{self, Estimate, McConfig, McRng};
use crate::randgeom::Subspace;
use crate::scalars::{FVector, Field};

/// Points in the coarse scan of a chord.
pub const CHORD_SCAN_POINTS: usize = 64;
/// Bisection steps refining each chord end.
pub const CHORD_BISECTION_STEPS: usize = 60;
/// Finest scan used when the coarse scan finds no interior point.
pub const CHORD_SCAN_MAX_POINTS: usize = 1024;
/// Monte Carlo budget of one fiber volume.
pub const FIBER_SAMPLES: usize = 4096;
/// Fiber cache pitch as a fraction of the bounding radius.
pub const FIBER_GRID: f64 = 512.0;

/// Linear hyperplane `u^⟂` of `R^{np}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealHyperplane {
    normal: Vec<f64>,
}

impl RealHyperplane {
    pub fn new(normal: &[f64]) -> Result<Self> {
        let len = mc::norm(normal);
        if !(len > 0.0) {
            return Err(Error::InvalidArgument("hyperplane normal must be nonzero".into()));
        }
        Ok(Self { normal: normal.iter().map(|x| x / len).collect() })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let t = 2.0 * mc::dot(x, &self.normal);
        x.iter().zip(&self.normal).map(|(a, u)| a - t * u).collect()
    }
}

/// F-linear hyperplane `ν^⟂` of `F^n`, `ν` a unit F-vector.
#[derive(Debug, Clone)]
pub struct FHyperplane {
    normal: FVector,
    fiber: Subspace,
}

impl FHyperplane {
    pub fn new(normal: &FVector) -> Result<Self> {
        let fiber = Subspace::span(std::slice::from_ref(normal))?;
        Ok(Self { normal: fiber.basis()[0].clone(), fiber })
    }

    /// `{x : x_k = 0}`.
    pub fn coordinate(field: Field, n: usize, k: usize) -> Self {
        Self::new(&FVector::basis(field, n, k)).expect("basis vector")
    }

    pub fn field(&self) -> Field {
        self.normal.field()
    }

    pub fn normal(&self) -> &FVector {
        &self.normal
    }

    /// Real orthonormal basis `ν u_c` of the fiber direction `ν F`.
    pub fn fiber_basis(&self) -> &DMatrix<f64> {
        self.fiber.real_basis()
    }

    /// `x -> y + N a w` with the fiber coordinate rotated by the unit scalar
    /// `w`: the fiber coordinate is `(ν, x)`, which turns into `(ν, x) w`.
    pub fn rotate_fiber(&self, x: &[f64], w: crate::scalars::Scalar) -> Vec<f64> {
        let xv = FVector::from_real(self.field(), x).expect("point of F^n");
        let a = self.normal.hermitian_inner_unchecked(&xv);
        let mut out = xv.clone();
        out.sub_scaled(&self.normal, a);
        out.sub_scaled(&self.normal, -(a * w));
        out.to_real()
    }
}

/// `S_N E` for an ellipsoid, fibers along the orthonormal columns of `N`.
///
/// With `S` the form and `a` the center, the fiber over `y` is an ellipsoid
/// with form `M = N^T S N` centered off `H`; it becomes the centered ball of
/// equal volume, giving the form `G + det(M)^{1/k} N N^T` centered at
/// `P a`, where `G = S - S N M^{-1} N^T S` and `P = I - N N^T`.
pub fn symmetrize_ellipsoid(e: &Ellipsoid, fibers: &DMatrix<f64>) -> Result<Ellipsoid> {
    let s = e.form();
    let k = fibers.ncols();
    let sn = s * fibers;
    let m = fibers.transpose() * &sn;
    let m_inv = m.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let g = s - &sn * m_inv * sn.transpose();
    let delta = m.determinant().powf(1.0 / k as f64);
    let form = g + fibers * fibers.transpose() * delta;
    let a = DVector::from_column_slice(e.center());
    let pa = &a - fibers * (fibers.transpose() * &a);
    Ellipsoid::from_real_form(e.field(), e.n(), pa.iter().copied().collect(), form)
}

/// How chords and fibers of a non-ellipsoid parent are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiberRoute {
    /// Exact through an H-representation when available.
    Auto,
    /// Membership queries only.
    Oracle,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(s, t)| s - t).collect()
}

fn chord_bounds(parent: &dyn ConvexBody, y: &[f64], u: &[f64]) -> Option<(f64, f64)> {
    let (c, r) = parent.bounding_ball();
    let cy: Vec<f64> = c.iter().zip(y).map(|(a, b)| a - b).collect();
    let sc = mc::dot(&cy, u);
    let h2 = r * r - (mc::dot(&cy, &cy) - sc * sc);
    (h2 > 0.0).then(|| (sc - h2.sqrt(), sc + h2.sqrt()))
}

/// Chord `{s : y + s u in K}`: a coarse scan for an interior point, refined
/// by finer levels up to `CHORD_SCAN_MAX_POINTS` when the coarse scan
/// misses a short chord, then bisection of both ends.
pub fn chord_oracle(parent: &dyn ConvexBody, y: &[f64], u: &[f64]) -> Option<(f64, f64)> {
    let (lo, hi) = chord_bounds(parent, y, u)?;
    let at = |s: f64| -> Vec<f64> { y.iter().zip(u).map(|(a, b)| a + s * b).collect() };
    let mut inner = None;
    let mut points = CHORD_SCAN_POINTS;
    let mut step = (hi - lo) / points as f64;
    // Each level halves the cells and probes the new cell centers.
    let mut offsets: Vec<f64> = (0..points).map(|k| lo + (k as f64 + 0.5) * step).collect();
    while inner.is_none() {
        inner = offsets.iter().copied().find(|&s| parent.contains(&at(s)));
        if inner.is_some() || points >= CHORD_SCAN_MAX_POINTS {
            break;
        }
        offsets = offsets.iter().flat_map(|&s| [s - 0.25 * step, s + 0.25 * step]).collect();
        points *= 2;
        step *= 0.5;
    }
    let s0 = inner?;
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..CHORD_BISECTION_STEPS {
            let mid = 0.5 * (inside + outside);
            if parent.contains(&at(mid)) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Some((refine(s0, lo), refine(s0, hi)))
}

fn chord(parent: &dyn ConvexBody, y: &[f64], u: &[f64], route: FiberRoute) -> Option<(f64, f64)> {
    match (route, parent.hrep()) {
        (FiberRoute::Auto, Some(h)) => {
            let (blo, bhi) = chord_bounds(parent, y, u)?;
            h.chord(y, u).map(|(a, b)| (a.max(blo), b.min(bhi))).filter(|(a, b)| a < b)
        }
        _ => chord_oracle(parent, y, u),
    }
}

/// Steiner symmetral of a body without a closed form.
#[derive(Debug)]
pub struct SteinerBody {
    parent: Body,
    plane: RealHyperplane,
    route: FiberRoute,
}

impl SteinerBody {
    pub fn new(parent: Body, plane: RealHyperplane, route: FiberRoute) -> Self {
        Self { parent, plane, route }
    }

    /// Half chord length over the foot point of `x`, and the foot point.
    fn split(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let u = self.plane.normal();
        let t = mc::dot(x, u);
        (t, x.iter().zip(u).map(|(a, b)| a - t * b).collect())
    }
}

impl ConvexBody for SteinerBody {
    fn field(&self) -> Field {
        self.parent.field()
    }

    fn n(&self) -> usize {
        self.parent.n()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::Symmetrized
    }

    fn contains(&self, x: &[f64]) -> bool {
        let (c, r) = self.bounding_ball();
        if mc::dot(&sub(x, &c), &sub(x, &c)) > r * r {
            return false;
        }
        let (t, y) = self.split(x);
        match chord(self.parent.as_ref(), &y, self.plane.normal(), self.route) {
            Some((lo, hi)) => 2.0 * t.abs() <= hi - lo,
            None => false,
        }
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let (c, r) = self.parent.bounding_ball();
        (self.split(&c).1, r)
    }

    /// Uniform points of the parent with each chord slid to be centered.
    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        let u = self.plane.normal();
        loop {
            let x = self.parent.sample(rng)?;
            let (t, y) = self.split(&x);
            if let Some((lo, hi)) = chord(self.parent.as_ref(), &y, u, self.route) {
                let s = t - 0.5 * (lo + hi);
                return Ok(y.iter().zip(u).map(|(a, b)| a + s * b).collect());
            }
        }
    }
}

/// F-hyperplane symmetral of a body without a closed form.
#[derive(Debug)]
pub struct FSymBody {
    parent: Body,
    plane: FHyperplane,
    route: FiberRoute,
    pitch: f64,
    seed: u64,
    cache: Mutex<HashMap<Vec<i64>, f64>>,
}

impl FSymBody {
    pub fn new(parent: Body, plane: FHyperplane, route: FiberRoute, seed: u64) -> Self {
        let pitch = parent.bounding_radius() / FIBER_GRID;
        Self { parent, plane, route, pitch, seed, cache: Mutex::new(HashMap::new()) }
    }

    fn p(&self) -> usize {
        self.plane.field().p()
    }

    /// `(a, y)` with `x = y + N a`, `y` in the hyperplane.
    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nb = self.plane.fiber_basis();
        let a: Vec<f64> = (0..nb.ncols()).map(|c| (0..x.len()).map(|i| nb[(i, c)] * x[i]).sum()).collect();
        let mut y = x.to_vec();
        for (c, &ac) in a.iter().enumerate() {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi -= nb[(i, c)] * ac;
            }
        }
        (a, y)
    }

    /// Exact fiber volume when the route allows it.
    fn exact_fiber(&self, y: &[f64]) -> Option<f64> {
        let nb = self.plane.fiber_basis();
        if self.p() == 1 {
            let u: Vec<f64> = nb.column(0).iter().copied().collect();
            return Some(chord(self.parent.as_ref(), y, &u, self.route).map_or(0.0, |(a, b)| b - a));
        }
        if self.route == FiberRoute::Oracle {
            return None;
        }
        let h = self.parent.hrep()?.section(y, nb);
        let Some(h) = h else { return Some(0.0) };
        let (c, r) = self.parent.bounding_ball();
        let cy: Vec<f64> = c.iter().zip(y).map(|(a, b)| a - b).collect();
        let center: Vec<f64> = (0..nb.ncols()).map(|k| (0..cy.len()).map(|i| nb[(i, k)] * cy[i]).sum()).collect();
        h.low_dim_volume(&center, r)
    }

    /// Monte Carlo fiber volume at the grid point of `y`, cached.
    fn mc_fiber(&self, y: &[f64]) -> f64 {
        let key: Vec<i64> = y.iter().map(|v| (v / self.pitch).round() as i64).collect();
        if let Some(&v) = self.cache.lock().expect("fiber cache").get(&key) {
            return v;
        }
        let yq: Vec<f64> = key.iter().map(|&k| k as f64 * self.pitch).collect();
        let (_, yq) = self.split(&yq);
        let mut h: u64 = self.seed;
        for &k in &key {
            h = mc::derive_seed(h, k as u64);
        }
        let mut rng = mc::rng_from_seed(h);
        let nb = self.plane.fiber_basis();
        let (c, r) = self.parent.bounding_ball();
        let cy: Vec<f64> = c.iter().zip(&yq).map(|(a, b)| a - b).collect();
        let center: Vec<f64> = (0..nb.ncols()).map(|k| (0..cy.len()).map(|i| nb[(i, k)] * cy[i]).sum()).collect();
        let r2 = r * r - (mc::dot(&cy, &cy) - mc::dot(&center, &center));
        let v = if r2 <= 0.0 {
            0.0
        } else {
            let rad = r2.sqrt();
            let p = self.p();
            let mut hits = 0usize;
            for _ in 0..FIBER_SAMPLES {
                let z = mc::sample_ball(p, &mut rng);
                let mut x = yq.clone();
                for k in 0..p {
                    let t = center[k] + rad * z[k];
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi += nb[(i, k)] * t;
                    }
                }
                hits += usize::from(self.parent.contains(&x));
            }
            kappa(p) * rad.powi(p as i32) * hits as f64 / FIBER_SAMPLES as f64
        };
        self.cache.lock().expect("fiber cache").insert(key, v);
        v
    }

    /// `r(y) = (vol_p(K(y)) / kappa_p)^{1/p}`.
    pub fn fiber_radius(&self, y: &[f64]) -> f64 {
        let v = self.exact_fiber(y).unwrap_or_else(|| self.mc_fiber(y));
        let p = self.p();
        (v / kappa(p)).powf(1.0 / p as f64)
    }

    fn exact_fibers(&self) -> bool {
        self.p() == 1 || (self.route == FiberRoute::Auto && self.parent.hrep().is_some() && self.p() <= 2)
    }
}

impl ConvexBody for FSymBody {
    fn field(&self) -> Field {
        self.parent.field()
    }

    fn n(&self) -> usize {
        self.parent.n()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::Symmetrized
    }

    fn contains(&self, x: &[f64]) -> bool {
        let (a, y) = self.split(x);
        let na = mc::norm(&a);
        // Points far outside the bounding ball need no fiber measurement.
        let (c, r) = self.bounding_ball();
        let off: f64 = x.iter().zip(&c).map(|(s, t)| (s - t) * (s - t)).sum();
        if off > r * r {
            return false;
        }
        na <= self.fiber_radius(&y)
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let (c, r) = self.parent.bounding_ball();
        (self.split(&c).1, r)
    }

    /// With exact fibers: the base point of a uniform parent point has the
    /// right marginal, and the fiber ball is then sampled uniformly.
    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        if !self.exact_fibers() {
            return crate::bodies::rejection_sample(self, rng);
        }
        let nb = self.plane.fiber_basis();
        let p = self.p();
        let (_, y) = self.split(&self.parent.sample(rng)?);
        let rad = self.fiber_radius(&y);
        let z = mc::sample_ball(p, rng);
        let mut x = y;
        for k in 0..p {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += nb[(i, k)] * rad * z[k];
            }
        }
        Ok(x)
    }
}

/// Steiner symmetrization in `u^⟂`.
pub fn steiner(k: &Body, h: &RealHyperplane) -> Result<Body> {
    steiner_with(k, h, FiberRoute::Auto)
}

pub fn steiner_with(k: &Body, h: &RealHyperplane, route: FiberRoute) -> Result<Body> {
    check_dim(k.dim(), h.normal().len())?;
    if let Some(e) = k.as_ellipsoid() {
        let u = DMatrix::from_column_slice(h.normal().len(), 1, h.normal());
        return Ok(Arc::new(symmetrize_ellipsoid(e, &u)?));
    }
    Ok(Arc::new(SteinerBody::new(k.clone(), h.clone(), route)))
}

/// Symmetrization in an F-hyperplane. `seed` fixes the Monte Carlo fiber
/// volumes of bodies without exact fibers.
pub fn symmetrize_fhyperplane(k: &Body, h: &FHyperplane, seed: u64) -> Result<Body> {
    symmetrize_fhyperplane_with(k, h, FiberRoute::Auto, seed)
}

pub fn symmetrize_fhyperplane_with(k: &Body, h: &FHyperplane, route: FiberRoute, seed: u64) -> Result<Body> {
    if h.field() != k.field() {
        return Err(Error::FieldMismatch(k.field(), h.field()));
    }
    check_dim(k.n(), h.normal().len())?;
    if let Some(e) = k.as_ellipsoid() {
        return Ok(Arc::new(symmetrize_ellipsoid(e, h.fiber_basis())?));
    }
    Ok(Arc::new(FSymBody::new(k.clone(), h.clone(), route, seed)))
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    /// Roundness defect before the first round and after each round.
    pub defects: Vec<f64>,
    /// Volume before the first round and after each round.
    pub volumes: Vec<Estimate>,
}

impl IterationTrace {
    pub fn decreased(&self) -> bool {
        match (self.defects.first(), self.defects.last()) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        }
    }
}

/// Applies the planes cyclically, one plane per round, recording the
/// roundness defect and volume after every round. Symmetrals of
/// non-ellipsoids nest oracles, so deep runs are practical only for
/// ellipsoids.
pub fn iterate(
    k: &Body,
    planes: &[FHyperplane],
    rounds: usize,
    n_dirs: usize,
    cfg: &McConfig,
) -> Result<(Body, IterationTrace)> {
    if planes.is_empty() {
        return Err(Error::InvalidArgument("iterate needs at least one plane".into()));
    }
    let mut rng = mc::rng_from_seed(cfg.seed);
    let mut body = k.clone();
    let mut trace = IterationTrace {
        defects: vec![roundness_defect(body.as_ref(), n_dirs, &mut rng)?],
        volumes: vec![volume(body.as_ref(), cfg)?],
    };
    for round in 0..rounds {
        let plane = &planes[round % planes.len()];
        body = symmetrize_fhyperplane(&body, plane, rng.random())?;
        trace.defects.push(roundness_defect(body.as_ref(), n_dirs, &mut rng)?);
        trace.volumes.push(volume(body.as_ref(), &cfg.substream(round as u64))?);
    }
    Ok((body, trace))
}
