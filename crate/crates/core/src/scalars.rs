//! The division algebras R, C and H.
//!
//! Every scalar is stored as four real components `x0 + x1 i + x2 j + x3 k`
//! regardless of its field; components beyond the field's real dimension are
//! kept at zero. Products are Hamilton products, which restrict to the usual
//! complex and real products on the embedded subalgebras.
//!
//! Vectors in `F^n` are right vector spaces: scalars act from the right,
//! and the hermitian product is conjugate-linear in its first argument,
//! `(v, w) = sum conj(v_i) w_i`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// The scalar field, serialized as `"R"`, `"C"` or `"H"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
    #[serde(rename = "H")]
    Quaternion,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Real, Field::Complex, Field::Quaternion];

    /// Real dimension of the field.
    pub const fn p(self) -> usize {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
            Field::Quaternion => 4,
        }
    }

    pub const fn tag(self) -> &'static str {
        match self {
            Field::Real => "R",
            Field::Complex => "C",
            Field::Quaternion => "H",
        }
    }

    /// The real basis `1, i, j, k` truncated to `p` elements.
    pub fn units(self) -> impl Iterator<Item = Scalar> {
        (0..self.p()).map(move |c| Scalar::unit(self, c))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(Field::Real),
            "C" | "c" => Ok(Field::Complex),
            "H" | "h" => Ok(Field::Quaternion),
            other => Err(Error::InvalidArgument(format!("unknown field {other:?}, expected R, C or H"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct Scalar {
    field: Field,
    c: [f64; 4],
}

impl Scalar {
    pub fn new(field: Field, c: [f64; 4]) -> Result<Self> {
        if c[field.p()..].iter().any(|&x| x != 0.0) {
            return Err(Error::InvalidArgument(format!("scalar {c:?} has components outside field {field}")));
        }
        Ok(Self { field, c })
    }

    /// Builds a scalar from exactly `p` real components.
    pub fn from_slice(field: Field, comps: &[f64]) -> Result<Self> {
        check_dim(field.p(), comps.len())?;
        let mut c = [0.0; 4];
        c[..comps.len()].copy_from_slice(comps);
        Ok(Self { field, c })
    }

    pub const fn real(field: Field, x: f64) -> Self {
        Self { field, c: [x, 0.0, 0.0, 0.0] }
    }

    pub const fn zero(field: Field) -> Self {
        Self::real(field, 0.0)
    }

    pub const fn one(field: Field) -> Self {
        Self::real(field, 1.0)
    }

    /// The `idx`-th real basis element (`1, i, j, k`).
    ///
    /// Panics if `idx >= field.p()`.
    pub fn unit(field: Field, idx: usize) -> Self {
        assert!(idx < field.p(), "unit {idx} outside field {field}");
        let mut c = [0.0; 4];
        c[idx] = 1.0;
        Self { field, c }
    }

    /// Standard Gaussian in every real component.
    pub fn gaussian<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Self {
        let mut c = [0.0; 4];
        for x in c.iter_mut().take(field.p()) {
            *x = rng.sample(StandardNormal);
        }
        Self { field, c }
    }

    /// Uniform on the unit sphere of the field.
    pub fn random_unit<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Self {
        loop {
            let s = Self::gaussian(field, rng);
            let n = s.norm();
            if n > 1e-12 {
                return s.scale(1.0 / n);
            }
        }
    }

    pub const fn field(&self) -> Field {
        self.field
    }

    pub const fn components(&self) -> [f64; 4] {
        self.c
    }

    /// The first `p` real components.
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.field.p()]
    }

    /// Hamilton product, rejecting mixed fields.
    pub fn try_mul(self, rhs: Self) -> Result<Self> {
        if self.field != rhs.field {
            return Err(Error::FieldMismatch(self.field, rhs.field));
        }
        Ok(self.hamilton(rhs))
    }

    #[inline]
    fn hamilton(self, b: Self) -> Self {
        let [a0, a1, a2, a3] = self.c;
        let [b0, b1, b2, b3] = b.c;
        Self {
            field: self.field,
            c: [
                a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
                a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
                a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
                a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
            ],
        }
    }

    #[inline]
    pub fn conj(self) -> Self {
        let [x0, x1, x2, x3] = self.c;
        Self { field: self.field, c: [x0, -x1, -x2, -x3] }
    }

    #[inline]
    pub fn re(self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inv(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// Inverse without the zero check; callers guarantee `self != 0`.
    #[inline]
    pub(crate) fn inv_unchecked(self) -> Self {
        self.conj().scale(1.0 / self.norm_sqr())
    }

    #[inline]
    pub fn scale(self, t: f64) -> Self {
        let [x0, x1, x2, x3] = self.c;
        Self { field: self.field, c: [t * x0, t * x1, t * x2, t * x3] }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    fn debug_check(&self, other: &Self) {
        debug_assert_eq!(self.field, other.field, "mixed-field scalar arithmetic");
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.as_slice();
        write!(f, "{}{:?}", self.field, c)
    }
}

impl Mul for Scalar {
    type Output = Scalar;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.debug_check(&rhs);
        self.hamilton(rhs)
    }
}

impl Add for Scalar {
    type Output = Scalar;

    #[inline]
    fn add(self, b: Self) -> Self {
        self.debug_check(&b);
        let a = self.c;
        Self { field: self.field, c: [a[0] + b.c[0], a[1] + b.c[1], a[2] + b.c[2], a[3] + b.c[3]] }
    }
}

impl Sub for Scalar {
    type Output = Scalar;

    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for Scalar {
    type Output = Scalar;

    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

/// A column vector in `F^n`.
#[derive(Clone, PartialEq)]
pub struct FVector {
    field: Field,
    data: Vec<Scalar>,
}

impl FVector {
    pub fn new(field: Field, data: Vec<Scalar>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|s| s.field != field) {
            return Err(Error::FieldMismatch(field, bad.field));
        }
        Ok(Self { field, data })
    }

    pub fn zeros(field: Field, n: usize) -> Self {
        Self { field, data: vec![Scalar::zero(field); n] }
    }

    /// `k`-th standard basis vector.
    pub fn basis(field: Field, n: usize, k: usize) -> Self {
        let mut v = Self::zeros(field, n);
        v.data[k] = Scalar::one(field);
        v
    }

    pub fn gaussian<R: Rng + ?Sized>(field: Field, n: usize, rng: &mut R) -> Self {
        Self { field, data: (0..n).map(|_| Scalar::gaussian(field, rng)).collect() }
    }

    /// Reads `n * p` real coordinates, entry-major: `(Re v_1, Im v_1, ..., Re v_2, ...)`.
    pub fn from_real(field: Field, coords: &[f64]) -> Result<Self> {
        let p = field.p();
        if !coords.len().is_multiple_of(p) {
            return Err(Error::DimensionMismatch { expected: p * (coords.len() / p + 1), got: coords.len() });
        }
        let data = coords.chunks_exact(p).map(|ch| Scalar::from_slice(field, ch)).collect::<Result<Vec<_>>>()?;
        Ok(Self { field, data })
    }

    /// Entry-major real coordinates, inverse of [`FVector::from_real`].
    pub fn to_real(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len() * self.field.p());
        for s in &self.data {
            out.extend_from_slice(s.as_slice());
        }
        out
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Scalar] {
        &mut self.data
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.data[i]
    }

    fn check_compatible(&self, w: &Self) -> Result<()> {
        if self.field != w.field {
            return Err(Error::FieldMismatch(self.field, w.field));
        }
        check_dim(self.len(), w.len())
    }

    /// `(v, w) = sum conj(v_i) w_i`.
    pub fn hermitian_inner(&self, w: &Self) -> Result<Scalar> {
        self.check_compatible(w)?;
        Ok(self.hermitian_inner_unchecked(w))
    }

    pub(crate) fn hermitian_inner_unchecked(&self, w: &Self) -> Scalar {
        self.data.iter().zip(&w.data).fold(Scalar::zero(self.field), |acc, (a, b)| acc + a.conj() * *b)
    }

    /// `<v, w> = Re (v, w)`, the euclidean product of the underlying real space.
    pub fn euclidean_inner(&self, w: &Self) -> Result<f64> {
        self.check_compatible(w)?;
        Ok(self.data.iter().zip(&w.data).map(|(a, b)| a.c.iter().zip(&b.c).map(|(x, y)| x * y).sum::<f64>()).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Right scalar multiplication `v * a`.
    pub fn mul_right(&self, a: Scalar) -> Self {
        Self { field: self.field, data: self.data.iter().map(|&x| x * a).collect() }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { field: self.field, data: self.data.iter().map(|x| x.scale(t)).collect() }
    }

    pub fn try_add(&self, w: &Self) -> Result<Self> {
        self.check_compatible(w)?;
        Ok(self.zip_with(w, |a, b| a + b))
    }

    pub fn try_sub(&self, w: &Self) -> Result<Self> {
        self.check_compatible(w)?;
        Ok(self.zip_with(w, |a, b| a - b))
    }

    fn zip_with(&self, w: &Self, f: impl Fn(Scalar, Scalar) -> Scalar) -> Self {
        Self { field: self.field, data: self.data.iter().zip(&w.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    /// `self - w * a`, the projection step of Gram-Schmidt.
    pub(crate) fn sub_scaled(&mut self, w: &Self, a: Scalar) {
        for (x, y) in self.data.iter_mut().zip(&w.data) {
            *x -= *y * a;
        }
    }
}

impl fmt::Debug for FVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.data).finish()
    }
}
