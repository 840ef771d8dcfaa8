use nalgebra::{DMatrix, DVector};

use super::{BodyKind, ConvexBody};
use crate::error::{check_dim, Error, Result};
use crate::functionals::kappa;
use crate::mc::{self, McRng};
use crate::ncla::FMat;
use crate::scalars::{FVector, Field};

/// `{x : (x - a)^T S (x - a) <= 1}` for a real symmetric positive definite
/// `S` on the real coordinates of `F^n`.
///
/// An F-ellipsoid `<x - a, H (x - a)> <= 1` with `H` hermitian has
/// `S = real_operator(H)`; Steiner symmetrals of F-ellipsoids are real
/// ellipsoids that in general have no such `H`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    field: Field,
    n: usize,
    center: Vec<f64>,
    form: DMatrix<f64>,
    form_inv: DMatrix<f64>,
    /// `L` with `S = L L^T`.
    chol: DMatrix<f64>,
    /// `L^{-T}`, pushing the unit ball onto the ellipsoid.
    sample_map: DMatrix<f64>,
    det_form: f64,
    max_semi_axis: f64,
    is_ball: bool,
}

fn is_symmetric(s: &DMatrix<f64>) -> bool {
    let scale = s.amax().max(f64::MIN_POSITIVE);
    (s - s.transpose()).amax() <= 1e-10 * scale
}

impl Ellipsoid {
    pub fn from_real_form(field: Field, n: usize, center: Vec<f64>, form: DMatrix<f64>) -> Result<Self> {
        let d = n * field.p();
        check_dim(d, center.len())?;
        check_dim(d, form.nrows())?;
        check_dim(d, form.ncols())?;
        if !is_symmetric(&form) || form.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let form = (&form + form.transpose()) * 0.5;
        let chol = form.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
        let linv = chol.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let sample_map = linv.transpose();
        let form_inv = &sample_map * &linv;
        let det_form = chol.diagonal().iter().map(|x| x * x).product();
        let eig = form.clone().symmetric_eigenvalues();
        let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let max_eig = eig.iter().copied().fold(0.0, f64::max);
        let is_ball = (max_eig - min_eig) <= 1e-12 * max_eig;
        Ok(Self {
            field,
            n,
            center,
            form,
            form_inv,
            chol,
            sample_map,
            det_form,
            max_semi_axis: 1.0 / min_eig.sqrt(),
            is_ball,
        })
    }

    /// `{x : <x - a, H (x - a)> <= 1}` for hermitian positive definite `H`.
    pub fn from_hermitian(a: &FVector, h: &FMat) -> Result<Self> {
        if a.field() != h.field() {
            return Err(Error::FieldMismatch(a.field(), h.field()));
        }
        check_dim(a.len(), h.rows())?;
        check_dim(a.len(), h.cols())?;
        let scale = h.max_entry_norm().max(f64::MIN_POSITIVE);
        let diff = h.adjoint();
        for i in 0..h.rows() {
            for j in 0..h.cols() {
                if (diff.get(i, j) - h.get(i, j)).norm() > 1e-10 * scale {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        Self::from_real_form(a.field(), a.len(), a.to_real(), h.real_operator())
    }

    pub fn ball(field: Field, center: &FVector, r: f64) -> Result<Self> {
        if center.field() != field {
            return Err(Error::FieldMismatch(field, center.field()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {r}")));
        }
        let d = center.len() * field.p();
        Self::from_real_form(field, center.len(), center.to_real(), DMatrix::identity(d, d) / (r * r))
    }

    pub fn unit_ball(field: Field, n: usize) -> Self {
        Self::ball(field, &FVector::zeros(field, n), 1.0).expect("unit ball")
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn form_inverse(&self) -> &DMatrix<f64> {
        &self.form_inv
    }

    pub fn is_ball(&self) -> bool {
        self.is_ball
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let mut q = 0.0;
        for i in 0..d {
            let di = x[i] - self.center[i];
            let mut row = 0.0;
            for j in 0..d {
                row += self.form[(i, j)] * (x[j] - self.center[j]);
            }
            q += di * row;
        }
        q
    }

    /// Section by the affine subspace `y + Q w` (`Q` with orthonormal
    /// columns) in `w`-coordinates, as `(center, form)`; `None` when the
    /// section is empty or a single point.
    pub fn section(&self, y: &[f64], q: &DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let s = &self.form;
        let sq = q.transpose() * s * q;
        let ya = DVector::from_iterator(y.len(), y.iter().zip(&self.center).map(|(a, b)| a - b));
        let rhs = -(q.transpose() * (s * &ya));
        let chol = sq.clone().cholesky()?;
        let w0 = chol.solve(&rhs);
        let c = ya.dot(&(s * &ya)) - w0.dot(&(&sq * &w0));
        let slack = 1.0 - c;
        if slack <= 1e-14 {
            return None;
        }
        Some((w0.iter().copied().collect(), sq / slack))
    }

    /// Volume of the orthogonal projection onto the span of `Q`'s
    /// orthonormal columns.
    pub fn projection_volume(&self, q: &DMatrix<f64>) -> f64 {
        let g = q.transpose() * &self.form_inv * q;
        kappa(q.ncols()) * g.determinant().max(0.0).sqrt()
    }

    /// Image under the real affine map `x -> A x + b`.
    pub fn affine_image(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let ainv = a.clone().try_inverse().ok_or(Error::SingularTransform)?;
        let form = ainv.transpose() * &self.form * &ainv;
        let c = a * DVector::from_column_slice(&self.center);
        let center = c.iter().zip(b).map(|(x, y)| x + y).collect();
        Self::from_real_form(self.field, self.n, center, form)
    }
}

impl ConvexBody for Ellipsoid {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> BodyKind {
        if self.is_ball {
            BodyKind::Ball
        } else {
            BodyKind::Ellipsoid
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.quadratic(x) <= 1.0
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.max_semi_axis)
    }

    fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let half: Vec<f64> = (0..self.center.len()).map(|i| self.form_inv[(i, i)].sqrt()).collect();
        Some((
            self.center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            self.center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        ))
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(kappa(self.center.len()) / self.det_form.sqrt())
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        let uv = DVector::from_column_slice(u);
        let z = self.chol.solve_lower_triangular(&uv)?;
        Some(mc::dot(&self.center, u) + z.norm())
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        Some(self.center.clone())
    }

    fn as_ellipsoid(&self) -> Option<&Ellipsoid> {
        Some(self)
    }

    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        let d = self.center.len();
        let z = mc::sample_ball(d, rng);
        let mut x = self.center.clone();
        for i in 0..d {
            for j in i..d {
                // L^{-T} is upper triangular.
                x[i] += self.sample_map[(i, j)] * z[j];
            }
        }
        Ok(x)
    }
}
