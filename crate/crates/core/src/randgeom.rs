//! Haar-random F-subspaces and the linear Blaschke-Petkantchin formula
//!
//! `∫_{(F^n)^m} f = c_{m,n} ∫_{Gr_m} ∫_{E^m} f |det(x_1..x_m)|^{(n-m)p} dx dE`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::bodies::{volume, Body, ConvexBody, Ellipsoid};
use crate::error::{check_dim, Error, Result};
use crate::functionals::{kappa, omega};
use crate::mc::{self, Estimate, McConfig};
use crate::ncla::{det_abs_tuple, gram_schmidt, FMat};
use crate::scalars::{FVector, Field};

/// Orthonormal F-basis of an `m`-dimensional subspace of `F^n`.
#[derive(Debug, Clone)]
pub struct Subspace {
    field: Field,
    n: usize,
    basis: Vec<FVector>,
    /// Columns `b_s u_c` (unit `u_c` in 1, i, j, k) in real coordinates;
    /// orthonormal in `R^{np}`.
    real: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalizes the given spanning vectors.
    pub fn span(vs: &[FVector]) -> Result<Self> {
        let (qs, _) = gram_schmidt(vs)?
            .ok_or_else(|| Error::InvalidArgument("spanning vectors are linearly dependent".into()))?;
        Self::from_orthonormal(qs)
    }

    pub fn from_orthonormal(basis: Vec<FVector>) -> Result<Self> {
        let first = basis.first().ok_or_else(|| Error::InvalidArgument("empty basis".into()))?;
        let (field, n) = (first.field(), first.len());
        let p = field.p();
        let mut real = DMatrix::zeros(n * p, basis.len() * p);
        for (s, b) in basis.iter().enumerate() {
            if b.field() != field {
                return Err(Error::FieldMismatch(field, b.field()));
            }
            check_dim(n, b.len())?;
            for (c, u) in field.units().enumerate() {
                for (i, x) in b.mul_right(u).to_real().into_iter().enumerate() {
                    real[(i, s * p + c)] = x;
                }
            }
        }
        let out = Self { field, n, basis, real };
        if out.orthonormality_error() > 1e-10 {
            return Err(Error::InvalidArgument("basis is not orthonormal".into()));
        }
        Ok(out)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[FVector] {
        &self.basis
    }

    pub fn real_basis(&self) -> &DMatrix<f64> {
        &self.real
    }

    /// `max |(b_i, b_j) - δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g = a.hermitian_inner_unchecked(b);
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g - crate::scalars::Scalar::real(self.field, target)).norm());
            }
        }
        err
    }

    /// `B B*`, the orthogonal projector onto the subspace.
    pub fn projector(&self) -> FMat {
        let b = FMat::from_columns(&self.basis).expect("basis shares one field");
        b.matmul(&b.adjoint()).expect("conformable")
    }

    /// Coordinates `Q^T x` of the orthogonal projection.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        (self.real.transpose() * DVector::from_column_slice(x)).iter().copied().collect()
    }

    pub fn embed(&self, w: &[f64]) -> Vec<f64> {
        (&self.real * DVector::from_column_slice(w)).iter().copied().collect()
    }

    /// Component of `x` orthogonal to the subspace.
    pub fn project_out(&self, x: &[f64]) -> Vec<f64> {
        let back = self.embed(&self.coords(x));
        x.iter().zip(back).map(|(a, b)| a - b).collect()
    }
}

/// Attempts allowed before a rank-deficient Gaussian draw is reported.
pub const GRASSMANN_RETRIES: u32 = 100;

/// Haar-random `m`-dimensional F-subspace of `F^n`: Gram-Schmidt of `m`
/// i.i.d. standard Gaussian vectors.
pub fn sample_grassmann<R: Rng + ?Sized>(n: usize, m: usize, field: Field, rng: &mut R) -> Result<Subspace> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    for _ in 0..GRASSMANN_RETRIES {
        let vs: Vec<FVector> = (0..m).map(|_| FVector::gaussian(field, n, rng)).collect();
        if let Some((qs, _)) = gram_schmidt(&vs)? {
            return Subspace::from_orthonormal(qs);
        }
    }
    Err(Error::RetryExhausted(GRASSMANN_RETRIES))
}

/// `c_{m,n} = prod_{j<m} omega_{(n-j)p} / omega_{(m-j)p}`.
pub fn c_constant(m: usize, n: usize, p: usize) -> f64 {
    (0..m).map(|j| omega((n - j) * p) / omega((m - j) * p)).product()
}

/// `kappa_{np}^m / kappa_{mp}^n / c_{m,n}`.
pub fn b_constant(m: usize, n: usize, p: usize) -> f64 {
    kappa(n * p).powi(m as i32) / kappa(m * p).powi(n as i32) / c_constant(m, n, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct BpReport {
    /// `prod |K_i|`.
    pub lhs: Estimate,
    /// `c_{m,n}` times the Grassmannian integral.
    pub rhs: Estimate,
}

impl BpReport {
    pub fn ratio(&self) -> f64 {
        self.rhs.mean / self.lhs.mean
    }

    /// Relative standard error of the ratio.
    pub fn ratio_rel_sigma(&self) -> f64 {
        self.rhs.rel_stderr().hypot(self.lhs.rel_stderr())
    }
}

/// One uniform point of `K ∩ E` with the volume weight of its proposal, or
/// weight 0 for a rejected draw.
fn section_draw(k: &dyn ConvexBody, e: &Subspace, rng: &mut mc::McRng) -> Result<(Vec<f64>, f64)> {
    let q = e.real_basis();
    let dim = q.ncols();
    if let Some(ell) = k.as_ellipsoid() {
        let zero = vec![0.0; k.dim()];
        return Ok(match ell.section(&zero, q) {
            Some((c, form)) => {
                let s = Ellipsoid::from_real_form(k.field(), e.m(), c, form)?;
                let w = s.sample(rng)?;
                (e.embed(&w), s.exact_volume().expect("ellipsoid volume"))
            }
            None => (vec![0.0; k.dim()], 0.0),
        });
    }
    let (c, r) = k.bounding_ball();
    let cw = e.coords(&c);
    let perp2 = mc::dot(&c, &c) - mc::dot(&cw, &cw);
    let r2 = r * r - perp2;
    if r2 <= 0.0 {
        return Ok((vec![0.0; k.dim()], 0.0));
    }
    let rad = r2.sqrt();
    let mut w = mc::sample_ball(dim, rng);
    w.iter_mut().zip(&cw).for_each(|(x, c)| *x = c + rad * *x);
    let x = e.embed(&w);
    let weight = if k.contains(&x) { kappa(dim) * rad.powi(dim as i32) } else { 0.0 };
    Ok((x, weight))
}

/// Both sides of the Blaschke-Petkantchin formula for
/// `f = 1_{K_1 x ... x K_m}`. Each outer draw is a Haar subspace with
/// `inner` independent point tuples; the bodies must contain the origin.
pub fn bp_check(bodies: &[Body], cfg: &McConfig, inner: usize) -> Result<BpReport> {
    let first = bodies.first().ok_or_else(|| Error::InvalidArgument("no bodies given".into()))?;
    let (field, n, m) = (first.field(), first.n(), bodies.len());
    if m >= n {
        return Err(Error::InvalidArgument(format!("need m < n, got m = {m}, n = {n}")));
    }
    for k in bodies {
        if k.field() != field {
            return Err(Error::FieldMismatch(field, k.field()));
        }
        check_dim(n, k.n())?;
        if !k.contains(&vec![0.0; k.dim()]) {
            return Err(Error::OriginNotInterior);
        }
    }
    let exponent = ((n - m) * field.p()) as i32;
    let inner = inner.max(1);
    let integral = mc::try_estimate(cfg, |rng| {
        let e = sample_grassmann(n, m, field, rng)?;
        let mut acc = 0.0;
        for _ in 0..inner {
            let mut weight = 1.0;
            let mut pts = Vec::with_capacity(m);
            for k in bodies {
                let (x, w) = section_draw(k.as_ref(), &e, rng)?;
                weight *= w;
                pts.push(FVector::from_real(field, &x)?);
            }
            if weight > 0.0 {
                acc += weight * det_abs_tuple(&pts)?.value().powi(exponent);
            }
        }
        Ok(acc / inner as f64)
    })?;
    let rhs = integral.scale(c_constant(m, n, field.p()));
    let lhs = bodies
        .iter()
        .enumerate()
        .map(|(i, k)| volume(k.as_ref(), &cfg.substream(2000 + i as u64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Estimate::exact(1.0), Estimate::mul);
    Ok(BpReport { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants() {
        assert!((c_constant(1, 2, 1) - PI).abs() < 1e-14);
        assert!((c_constant(1, 2, 2) - PI).abs() < 1e-14);
        assert!((c_constant(1, 2, 4) - PI * PI / 6.0).abs() < 1e-14);
        assert!((c_constant(2, 3, 1) - 2.0 * PI).abs() < 1e-13);
        // b c = kappa_{np}^m / kappa_{mp}^n.
        let bc = b_constant(1, 2, 2) * c_constant(1, 2, 2);
        assert!((bc - kappa(4) / kappa(2).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn sampled_bases_are_orthonormal() {
        let mut rng = mc::rng_from_seed(5);
        for f in Field::ALL {
            for (n, m) in [(2, 1), (3, 2), (4, 4)] {
                let e = sample_grassmann(n, m, f, &mut rng).unwrap();
                assert!(e.orthonormality_error() < 1e-10);
                let q = e.real_basis();
                let g = q.transpose() * q;
                assert!((g - DMatrix::identity(m * f.p(), m * f.p())).amax() < 1e-10);
            }
        }
        assert!(sample_grassmann(2, 3, Field::Real, &mut rng).is_err());
        assert!(sample_grassmann(2, 0, Field::Real, &mut rng).is_err());
    }

    #[test]
    fn full_subspace_projector_is_identity() {
        let mut rng = mc::rng_from_seed(6);
        let e = sample_grassmann(3, 3, Field::Quaternion, &mut rng).unwrap();
        let pr = e.projector();
        let id = FMat::identity(Field::Quaternion, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((pr.get(i, j) - id.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_basis_spans_right_multiples() {
        let mut rng = mc::rng_from_seed(7);
        let e = sample_grassmann(3, 1, Field::Quaternion, &mut rng).unwrap();
        let w = crate::scalars::Scalar::gaussian(Field::Quaternion, &mut rng);
        let x = e.basis()[0].mul_right(w).to_real();
        // Lies in the subspace: nothing left after projecting out.
        assert!(mc::norm(&e.project_out(&x)) < 1e-12);
        assert!((mc::norm(&e.coords(&x)) - w.norm()).abs() < 1e-12);
    }
}
