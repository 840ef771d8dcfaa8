use nalgebra::{DMatrix, DVector};

use super::polytope::polygon_measure;
use super::{Body, BodyKind, ConvexBody, HRep};
use crate::error::{Error, Result};
use crate::functionals::{kappa, omega_real};
use crate::mc::{self, McRng};
use crate::scalars::Field;

/// `A K + b` for an invertible real-linear `A` (the real operator of an
/// F-linear map).
#[derive(Debug)]
pub struct AffineImage {
    parent: Body,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: Vec<f64>,
    abs_det: f64,
    op_norm: f64,
    hrep: Option<HRep>,
}

impl AffineImage {
    pub fn new(parent: Body, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let a_inv = a.clone().try_inverse().ok_or(Error::SingularTransform)?;
        let abs_det = a.determinant().abs();
        let op_norm = a.clone().singular_values().iter().copied().fold(0.0, f64::max);
        let hrep = parent.hrep().map(|h| h.affine_image(&a_inv, &b));
        Ok(Self { parent, a, a_inv, b, abs_det, op_norm, hrep })
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let d = self.b.len();
        (0..d).map(|i| self.b[i] + (0..d).map(|j| self.a[(i, j)] * x[j]).sum::<f64>()).collect()
    }

    fn backward(&self, z: &[f64]) -> Vec<f64> {
        let d = self.b.len();
        (0..d).map(|i| (0..d).map(|j| self.a_inv[(i, j)] * (z[j] - self.b[j])).sum()).collect()
    }
}

impl ConvexBody for AffineImage {
    fn field(&self) -> Field {
        self.parent.field()
    }

    fn n(&self) -> usize {
        self.parent.n()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::AffineImage
    }

    fn contains(&self, x: &[f64]) -> bool {
        match &self.hrep {
            Some(h) => h.contains(x),
            None => self.parent.contains(&self.backward(x)),
        }
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let (c, r) = self.parent.bounding_ball();
        (self.forward(&c), r * self.op_norm)
    }

    fn exact_volume(&self) -> Option<f64> {
        self.parent.exact_volume().map(|v| v * self.abs_det)
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        let d = u.len();
        let at_u: Vec<f64> = (0..d).map(|j| (0..d).map(|i| self.a[(i, j)] * u[i]).sum()).collect();
        Some(self.parent.support(&at_u)? + mc::dot(&self.b, u))
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        self.parent.centroid().map(|c| self.forward(&c))
    }

    fn hrep(&self) -> Option<&HRep> {
        self.hrep.as_ref()
    }

    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        Ok(self.forward(&self.parent.sample(rng)?))
    }
}

/// `K ∩ (y + span Q)` in `w`-coordinates, `x = y + Q w`.
#[derive(Debug)]
pub struct SectionBody {
    parent: Body,
    field: Field,
    m: usize,
    y: Vec<f64>,
    q: DMatrix<f64>,
    center: Vec<f64>,
    radius: f64,
    hrep: Option<HRep>,
    /// Vertices, area and centroid when the section is a polygon.
    planar: Option<(Vec<[f64; 2]>, f64, [f64; 2])>,
    empty: bool,
}

impl SectionBody {
    /// Builds the section, or an [`Empty`] body when the offset misses the
    /// bounding ball or an H-representation rules the section out.
    pub fn build(parent: Body, y: Vec<f64>, q: DMatrix<f64>, m: usize) -> Body {
        let field = parent.field();
        let (c, r) = parent.bounding_ball();
        let rel = DVector::from_iterator(y.len(), c.iter().zip(&y).map(|(a, b)| a - b));
        let coords = q.transpose() * &rel;
        let perp2 = rel.norm_squared() - coords.norm_squared();
        let r2 = r * r - perp2;
        if r2 <= 0.0 {
            return std::sync::Arc::new(Empty::new(field, m));
        }
        let center: Vec<f64> = coords.iter().copied().collect();
        let radius = r2.sqrt();
        let hrep = match parent.hrep() {
            Some(h) => match h.section(&y, &q) {
                Some(s) => Some(s),
                None => return std::sync::Arc::new(Empty::new(field, m)),
            },
            None => None,
        };
        let planar = hrep.as_ref().filter(|h| h.dim() == 2).map(|h| polygon_measure(h, &center, radius));
        let empty = match (&planar, &hrep) {
            (Some((_, area, _)), _) => *area <= 0.0,
            (None, Some(h)) if h.dim() == 1 => h.low_dim_volume(&center, radius) == Some(0.0),
            _ => false,
        };
        if empty {
            return std::sync::Arc::new(Empty::new(field, m));
        }
        std::sync::Arc::new(Self { parent, field, m, y, q, center, radius, hrep, planar, empty })
    }

    fn embed(&self, w: &[f64]) -> Vec<f64> {
        let mut x = self.y.clone();
        for (j, &wj) in w.iter().enumerate() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += self.q[(i, j)] * wj;
            }
        }
        x
    }
}

impl ConvexBody for SectionBody {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.m
    }

    fn kind(&self) -> BodyKind {
        BodyKind::Section
    }

    fn contains(&self, w: &[f64]) -> bool {
        match &self.hrep {
            Some(h) => h.contains(w),
            None => self.parent.contains(&self.embed(w)),
        }
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }

    fn exact_volume(&self) -> Option<f64> {
        if let Some((_, area, _)) = &self.planar {
            return Some(*area);
        }
        self.hrep.as_ref().and_then(|h| h.low_dim_volume(&self.center, self.radius))
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        let (poly, _, _) = self.planar.as_ref()?;
        Some(poly.iter().map(|v| v[0] * u[0] + v[1] * u[1]).fold(f64::NEG_INFINITY, f64::max))
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        if let Some((_, _, c)) = &self.planar {
            return Some(c.to_vec());
        }
        let h = self.hrep.as_ref().filter(|h| h.dim() == 1)?;
        let (lo, hi) = h.chord(&[0.0], &[1.0])?;
        Some(vec![0.5 * (lo.max(self.center[0] - self.radius) + hi.min(self.center[0] + self.radius))])
    }

    fn hrep(&self) -> Option<&HRep> {
        self.hrep.as_ref()
    }

    fn is_empty_body(&self) -> bool {
        self.empty
    }
}

/// Membership and bounding ball of a body with every fast path hidden.
#[derive(Debug)]
pub struct OracleBody {
    inner: Body,
}

impl OracleBody {
    pub fn new(inner: Body) -> Self {
        Self { inner }
    }
}

impl ConvexBody for OracleBody {
    fn field(&self) -> Field {
        self.inner.field()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::OracleOnly
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.inner.contains(x)
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        self.inner.bounding_ball()
    }

    fn is_empty_body(&self) -> bool {
        self.inner.is_empty_body()
    }
}

/// The empty set, e.g. a section missing the body.
#[derive(Debug, Clone)]
pub struct Empty {
    field: Field,
    n: usize,
}

impl Empty {
    pub fn new(field: Field, n: usize) -> Self {
        Self { field, n }
    }
}

impl ConvexBody for Empty {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> BodyKind {
        BodyKind::Empty
    }

    fn contains(&self, _x: &[f64]) -> bool {
        false
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (vec![0.0; self.dim()], 0.0)
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(0.0)
    }

    fn is_empty_body(&self) -> bool {
        true
    }
}

/// `{x : (sum |x_i|^q)^{1/q} <= r}` with `|x_i|` the norm of the i-th
/// F-entry; `q = inf` gives the polydisk. Invariant under unit scalars.
#[derive(Debug, Clone)]
pub struct NormBall {
    field: Field,
    n: usize,
    q: f64,
    r: f64,
}

impl NormBall {
    pub fn new(field: Field, n: usize, q: f64, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("norm ball needs n >= 1".into()));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {q}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Ok(Self { field, n, q, r })
    }

    pub fn exponent(&self) -> f64 {
        self.q
    }

    fn entry_norms<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        x.chunks_exact(self.field.p()).map(mc::norm)
    }

    fn norm(&self, x: &[f64]) -> f64 {
        if self.q.is_infinite() {
            self.entry_norms(x).fold(0.0, f64::max)
        } else {
            self.entry_norms(x).map(|a| a.powf(self.q)).sum::<f64>().powf(1.0 / self.q)
        }
    }
}

impl ConvexBody for NormBall {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> BodyKind {
        BodyKind::NormBall
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.norm(x) <= self.r
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        // The largest euclidean norm on the unit l^q ball is n^{1/2 - 1/q} for q >= 2.
        let growth = if self.q > 2.0 { (self.n as f64).powf(0.5 - 1.0 / self.q) } else { 1.0 };
        (vec![0.0; self.dim()], self.r * growth)
    }

    fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![-self.r; self.dim()], vec![self.r; self.dim()]))
    }

    fn exact_volume(&self) -> Option<f64> {
        let (n, p) = (self.n as f64, self.field.p() as f64);
        let unit = if self.q.is_infinite() {
            kappa(self.field.p()).powf(n)
        } else {
            let q = self.q;
            // Polar coordinates in each F-entry reduce to a Dirichlet integral.
            (omega_real(p) * libm::tgamma(p / q) / q).powf(n) / libm::tgamma(n * p / q + 1.0)
        };
        Some(unit * self.r.powf(n * p))
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        let moduli = self.entry_norms(u);
        let dual = if self.q.is_infinite() {
            moduli.sum::<f64>()
        } else if self.q == 1.0 {
            moduli.fold(0.0, f64::max)
        } else {
            let qs = self.q / (self.q - 1.0);
            moduli.map(|a| a.powf(qs)).sum::<f64>().powf(1.0 / qs)
        };
        Some(self.r * dual)
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim()])
    }
}
