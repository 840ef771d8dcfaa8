//! Dense matrices over R, C and H and the magnitude of the Dieudonne
//! determinant.
//!
//! Matrices act by left multiplication on coordinate columns of right
//! vector spaces, so `(AB)_{il} = sum_r a_{ir} b_{rl}` with the scalar order
//! kept as written. Row operations are always "add a *left* multiple of one
//! row to another", which leaves the Dieudonne determinant unchanged; the
//! determinant is then the coset of the product of the pivots, whose
//! magnitude is the product of the pivot norms.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::scalars::{FVector, Field, Scalar};

/// Relative pivot threshold: a pivot whose norm is at most this times the
/// largest entry norm of the input declares the matrix singular.
pub const PIVOT_RTOL: f64 = 1e-12;

/// `|det A|`, the magnitude representative of the Dieudonne determinant.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DetMagnitude(f64);

impl DetMagnitude {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_singular(self) -> bool {
        self.0 == 0.0
    }
}

impl From<DetMagnitude> for f64 {
    fn from(d: DetMagnitude) -> f64 {
        d.0
    }
}

#[derive(Clone, PartialEq)]
pub struct FMat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl FMat {
    pub fn new(field: Field, rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        if let Some(bad) = data.iter().find(|s| s.field() != field) {
            return Err(Error::FieldMismatch(field, bad.field()));
        }
        Ok(Self { field, rows, cols, data })
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.len())?;
            data.extend(row);
        }
        Self::new(field, r, c, data)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[FVector]) -> Result<Self> {
        let first = cols.first().ok_or_else(|| Error::InvalidArgument("need at least one column".into()))?;
        let (field, n) = (first.field(), first.len());
        let mut m = Self::zeros(field, n, cols.len());
        for (j, v) in cols.iter().enumerate() {
            if v.field() != field {
                return Err(Error::FieldMismatch(field, v.field()));
            }
            check_dim(n, v.len())?;
            for i in 0..n {
                m.set(i, j, v.get(i));
            }
        }
        Ok(m)
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Self { field, rows, cols, data: vec![Scalar::zero(field); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one(field));
        }
        m
    }

    pub fn diag(field: Field, d: &[Scalar]) -> Result<Self> {
        let mut m = Self::zeros(field, d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            if x.field() != field {
                return Err(Error::FieldMismatch(field, x.field()));
            }
            m.set(i, i, x);
        }
        Ok(m)
    }

    /// I.i.d. standard Gaussian real components in every entry.
    pub fn gaussian<R: Rng + ?Sized>(field: Field, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| Scalar::gaussian(field, rng)).collect();
        Self { field, rows, cols, data }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn column(&self, j: usize) -> FVector {
        let col = (0..self.rows).map(|i| self.get(i, j)).collect();
        FVector::new(self.field, col).expect("entries share the matrix field")
    }

    pub fn columns(&self) -> Vec<FVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    fn row_slice(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// `row_dst -= f * row_src`, a left multiple.
    fn row_sub(&mut self, dst: usize, src: usize, f: Scalar, from_col: usize) {
        for j in from_col..self.cols {
            let s = self.get(src, j);
            let d = self.get(dst, j);
            self.set(dst, j, d - f * s);
        }
    }

    pub fn max_entry_norm(&self) -> f64 {
        self.data.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm; an upper bound for the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, b: &FMat) -> Result<FMat> {
        if self.field != b.field {
            return Err(Error::FieldMismatch(self.field, b.field));
        }
        check_dim(self.cols, b.rows)?;
        let mut out = FMat::zeros(self.field, self.rows, b.cols);
        for i in 0..self.rows {
            for l in 0..b.cols {
                let mut acc = Scalar::zero(self.field);
                for r in 0..self.cols {
                    acc += self.get(i, r) * b.get(r, l);
                }
                out.set(i, l, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &FVector) -> Result<FVector> {
        if self.field != v.field() {
            return Err(Error::FieldMismatch(self.field, v.field()));
        }
        check_dim(self.cols, v.len())?;
        let out = (0..self.rows)
            .map(|i| {
                self.row_slice(i).iter().zip(v.as_slice()).fold(Scalar::zero(self.field), |acc, (&a, &x)| acc + a * x)
            })
            .collect();
        FVector::new(self.field, out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> FMat {
        let mut out = FMat::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> FMat {
        let mut out = FMat::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `A(i, j)`: delete row `i` and column `j`.
    pub fn minor(&self, i: usize, j: usize) -> FMat {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for r in (0..self.rows).filter(|&r| r != i) {
            for c in (0..self.cols).filter(|&c| c != j) {
                data.push(self.get(r, c));
            }
        }
        FMat { field: self.field, rows: self.rows - 1, cols: self.cols - 1, data }
    }

    pub fn scale(&self, t: f64) -> FMat {
        FMat { data: self.data.iter().map(|x| x.scale(t)).collect(), ..self.clone() }
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.rows, got: self.cols })
        }
    }

    /// Magnitude of the Dieudonne determinant.
    ///
    /// Gaussian elimination with partial pivoting on entry norms; the result
    /// is the product of pivot norms, `0` once a pivot falls below
    /// [`PIVOT_RTOL`] times the largest input entry. For R and C this equals
    /// the absolute value of the ordinary determinant.
    pub fn det_abs(&self) -> Result<DetMagnitude> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(DetMagnitude(1.0));
        }
        let tol = PIVOT_RTOL * self.max_entry_norm();
        if tol == 0.0 {
            return Ok(DetMagnitude(0.0));
        }
        let mut a = self.clone();
        let mut prod = 1.0;
        for k in 0..n {
            let (piv, pnorm) =
                (k..n)
                    .map(|r| (r, a.get(r, k).norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pnorm <= tol {
                return Ok(DetMagnitude(0.0));
            }
            a.swap_rows(k, piv);
            let inv = a.get(k, k).inv_unchecked();
            for r in k + 1..n {
                let f = a.get(r, k) * inv;
                a.row_sub(r, k, f, k);
            }
            prod *= pnorm;
        }
        Ok(DetMagnitude(prod))
    }

    /// Gauss-Jordan on `[A | B]` using left row operations; returns `A^{-1} B`.
    pub fn solve(&self, b: &FMat) -> Result<FMat> {
        self.require_square()?;
        if self.field != b.field {
            return Err(Error::FieldMismatch(self.field, b.field));
        }
        check_dim(self.rows, b.rows)?;
        let n = self.rows;
        let tol = PIVOT_RTOL * self.max_entry_norm();
        let mut aug = FMat::zeros(self.field, n, n + b.cols);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            for j in 0..b.cols {
                aug.set(i, n + j, b.get(i, j));
            }
        }
        for k in 0..n {
            let (piv, pnorm) =
                (k..n)
                    .map(|r| (r, aug.get(r, k).norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pnorm <= tol || pnorm == 0.0 {
                return Err(Error::SingularTransform);
            }
            aug.swap_rows(k, piv);
            // Normalize the pivot row from the left, then clear the column.
            let inv = aug.get(k, k).inv_unchecked();
            for j in k..aug.cols {
                let x = aug.get(k, j);
                aug.set(k, j, inv * x);
            }
            for r in (0..n).filter(|&r| r != k) {
                let f = aug.get(r, k);
                if !f.is_zero() {
                    aug.row_sub(r, k, f, k);
                }
            }
        }
        let mut out = FMat::zeros(self.field, n, b.cols);
        for i in 0..n {
            for j in 0..b.cols {
                out.set(i, j, aug.get(i, n + j));
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<FMat> {
        self.solve(&FMat::identity(self.field, self.rows))
    }

    /// Real matrix of `x -> A x` in the basis
    /// `(e_1..e_n, e_1 i..e_n i, e_1 j..e_n j, e_1 k..e_n k)`, truncated to
    /// the field's `p` blocks.
    pub fn realify(&self) -> Result<DMatrix<f64>> {
        self.require_square()?;
        let (n, p) = (self.rows, self.field.p());
        let mut out = DMatrix::zeros(n * p, n * p);
        for r in 0..n {
            for s in 0..n {
                let a = self.get(r, s);
                for (b, u) in self.field.units().enumerate() {
                    let img = (a * u).components();
                    for c in 0..p {
                        out[(c * n + r, b * n + s)] = img[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Real matrix of `x -> A x` acting on entry-major real coordinates, the
    /// layout of [`FVector::to_real`]. Works for rectangular matrices.
    pub fn real_operator(&self) -> DMatrix<f64> {
        let p = self.field.p();
        let mut out = DMatrix::zeros(self.rows * p, self.cols * p);
        for r in 0..self.rows {
            for s in 0..self.cols {
                let a = self.get(r, s);
                for (b, u) in self.field.units().enumerate() {
                    let img = (a * u).components();
                    for c in 0..p {
                        out[(r * p + c, s * p + b)] = img[c];
                    }
                }
            }
        }
        out
    }

    /// Real matrix of `M -> M A` on `Mat(m x n, F)` regarded as a real
    /// vector space of dimension `m n p` (entry `(i, j)`, component `c` at
    /// index `(i n + j) p + c`).
    pub fn right_mult_operator(&self, m: usize) -> Result<DMatrix<f64>> {
        self.require_square()?;
        let (n, p) = (self.rows, self.field.p());
        let dim = m * n * p;
        let mut out = DMatrix::zeros(dim, dim);
        for i in 0..m {
            for j in 0..n {
                for (c, u) in self.field.units().enumerate() {
                    let col = (i * n + j) * p + c;
                    // (E_{ij} u) A has row i equal to u * (row j of A).
                    for l in 0..n {
                        let img = (u * self.get(j, l)).components();
                        for c2 in 0..p {
                            out[((i * n + l) * p + c2, col)] = img[c2];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Weak row expansion of the determinant.
    ///
    /// Returns `lambda_1..lambda_n`, depending only on rows `2..n`, with
    /// `|a_11 lambda_1 + ... + a_1n lambda_n| = |det A|` and
    /// `|lambda_i| = |det A(1, i)|`. Rows `2..n` are brought by left row
    /// operations to a diagonal-permutation normal form `[y | D]`; the
    /// pivots are chosen greedily by norm, and when `A(1, 1)` is non-singular
    /// only columns `2..n` are eligible, so that `lambda_1` does not depend on
    /// the first column. Returns all zeros when rows `2..n` are dependent.
    pub fn row_expansion(&self) -> Result<Vec<Scalar>> {
        self.require_square()?;
        let n = self.rows;
        if n < 2 {
            return Err(Error::InvalidArgument("row expansion needs n >= 2".into()));
        }
        let zero = vec![Scalar::zero(self.field); n];
        let mut lower = FMat { field: self.field, rows: n - 1, cols: n, data: self.data[n..].to_vec() };
        let tol = PIVOT_RTOL * lower.max_entry_norm();
        if tol == 0.0 {
            return Ok(zero);
        }
        let keep_first = !self.minor(0, 0).det_abs()?.is_singular();
        let mut eligible: Vec<bool> = (0..n).map(|j| !keep_first || j > 0).collect();
        let mut pivot_col = vec![0; n - 1];

        for step in 0..n - 1 {
            let mut best = (step, 0, -1.0);
            for r in step..n - 1 {
                for (c, _) in eligible.iter().enumerate().filter(|(_, &e)| e) {
                    let v = lower.get(r, c).norm();
                    if v > best.2 {
                        best = (r, c, v);
                    }
                }
            }
            let (pr, pc, pnorm) = best;
            if pnorm <= tol {
                return Ok(zero);
            }
            lower.swap_rows(step, pr);
            eligible[pc] = false;
            pivot_col[step] = pc;
            let inv = lower.get(step, pc).inv_unchecked();
            for r in (0..n - 1).filter(|&r| r != step) {
                let f = lower.get(r, pc) * inv;
                if !f.is_zero() {
                    lower.row_sub(r, step, f, 0);
                }
            }
        }

        let free = eligible
            .iter()
            .position(|&e| e)
            .or_else(|| (0..n).find(|c| !pivot_col.contains(c)))
            .expect("exactly one column is left without a pivot");
        let mu_abs: f64 = (0..n - 1).map(|i| lower.get(i, pivot_col[i]).norm()).product();
        let mu = Scalar::real(self.field, mu_abs);
        let mut lambda = zero;
        lambda[free] = mu;
        for i in 0..n - 1 {
            let d = lower.get(i, pivot_col[i]);
            let y = lower.get(i, free);
            lambda[pivot_col[i]] = -(d.inv_unchecked() * y * mu);
        }
        Ok(lambda)
    }
}

impl fmt::Debug for FMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FMat<{}> {}x{} [", self.field, self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row_slice(i))?;
        }
        write!(f, "]")
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Returns the orthonormal frame and the triangular diagonal `r_jj`, or
/// `None` when some vector is numerically dependent on its predecessors.
/// Projection coefficients `(q_i, v)` multiply `q_i` from the right.
pub fn gram_schmidt(vs: &[FVector]) -> Result<Option<(Vec<FVector>, Vec<f64>)>> {
    let Some(first) = vs.first() else {
        return Ok(Some((Vec::new(), Vec::new())));
    };
    let (field, n) = (first.field(), first.len());
    let scale = vs.iter().map(FVector::norm).fold(0.0, f64::max);
    let mut qs: Vec<FVector> = Vec::with_capacity(vs.len());
    let mut diag = Vec::with_capacity(vs.len());
    for v in vs {
        if v.field() != field {
            return Err(Error::FieldMismatch(field, v.field()));
        }
        check_dim(n, v.len())?;
        let mut w = v.clone();
        for _pass in 0..2 {
            for q in &qs {
                let r = q.hermitian_inner_unchecked(&w);
                w.sub_scaled(q, r);
            }
        }
        let norm = w.norm();
        if norm <= PIVOT_RTOL * scale || norm == 0.0 {
            return Ok(None);
        }
        qs.push(w.scale(1.0 / norm));
        diag.push(norm);
    }
    Ok(Some((qs, diag)))
}

/// `|det(v_1, ..., v_m)|` for `m <= n` vectors in `F^n`: the determinant
/// magnitude of the map sending an orthonormal basis of a subspace
/// containing the `v_i` to the `v_i`.
pub fn det_abs_tuple(vs: &[FVector]) -> Result<DetMagnitude> {
    if let Some(first) = vs.first() {
        if vs.len() > first.len() {
            return Ok(DetMagnitude(0.0));
        }
    }
    Ok(match gram_schmidt(vs)? {
        Some((_, diag)) => DetMagnitude(diag.iter().product()),
        None => DetMagnitude(0.0),
    })
}

/// Right action of a matrix on a tuple: `(v_1..v_m) A = (sum_r v_r A_{r1}, ...)`.
pub fn right_action(vs: &[FVector], a: &FMat) -> Result<Vec<FVector>> {
    check_dim(a.rows(), vs.len())?;
    let first = vs.first().ok_or_else(|| Error::InvalidArgument("empty tuple".into()))?;
    let (field, n) = (first.field(), first.len());
    if a.field() != field {
        return Err(Error::FieldMismatch(field, a.field()));
    }
    (0..a.cols())
        .map(|c| {
            let mut acc = FVector::zeros(field, n);
            for (r, v) in vs.iter().enumerate() {
                check_dim(n, v.len())?;
                acc.sub_scaled(v, -a.get(r, c));
            }
            Ok(acc)
        })
        .collect()
}

/// Worst relative error of each determinant identity over a random batch.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DeterminantSuite {
    pub trials: usize,
    pub multiplicativity: f64,
    pub adjoint: f64,
    pub swap: f64,
    pub realify: f64,
    pub right_multiplication: f64,
    pub row_expansion: f64,
    pub minors: f64,
    pub gram: f64,
    pub unitary: f64,
    pub right_action: f64,
}

impl DeterminantSuite {
    pub fn worst(&self) -> f64 {
        [
            self.multiplicativity,
            self.adjoint,
            self.swap,
            self.realify,
            self.right_multiplication,
            self.row_expansion,
            self.minors,
            self.gram,
            self.unitary,
            self.right_action,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `(name, worst relative error)` pairs.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("multiplicativity", self.multiplicativity),
            ("adjoint", self.adjoint),
            ("swap", self.swap),
            ("realify", self.realify),
            ("right_multiplication", self.right_multiplication),
            ("row_expansion", self.row_expansion),
            ("minors", self.minors),
            ("gram", self.gram),
            ("unitary", self.unitary),
            ("right_action", self.right_action),
        ]
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Checks the determinant identities on `trials` Gaussian matrices of
/// random size `2..=max_n`.
pub fn determinant_suite<R: Rng + ?Sized>(
    field: Field,
    trials: usize,
    max_n: usize,
    rng: &mut R,
) -> Result<DeterminantSuite> {
    let p = field.p() as i32;
    let mut out = DeterminantSuite { trials, ..Default::default() };
    let upd = |slot: &mut f64, e: f64| *slot = slot.max(e);
    for _ in 0..trials {
        let n = rng.random_range(2..=max_n.max(2));
        let a = FMat::gaussian(field, n, n, rng);
        let b = FMat::gaussian(field, n, n, rng);
        let da = a.det_abs()?.value();
        let db = b.det_abs()?.value();
        upd(&mut out.multiplicativity, rel_err(a.matmul(&b)?.det_abs()?.value(), da * db));
        upd(&mut out.adjoint, rel_err(a.adjoint().det_abs()?.value(), da));
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let mut swapped = a.clone();
        for c in 0..n {
            swapped.set(i, c, a.get(j, c));
            swapped.set(j, c, a.get(i, c));
        }
        let mut both = swapped.clone();
        let (k, l) = (rng.random_range(0..n), rng.random_range(0..n));
        for r in 0..n {
            both.set(r, k, swapped.get(r, l));
            both.set(r, l, swapped.get(r, k));
        }
        upd(&mut out.swap, rel_err(both.det_abs()?.value(), da));
        upd(&mut out.realify, rel_err(a.realify()?.determinant().abs(), da.powi(p)));
        let m = rng.random_range(1..=2);
        let rm = a.right_mult_operator(m)?.determinant().abs();
        upd(&mut out.right_multiplication, rel_err(rm, da.powi(m as i32 * p)));
        let lambda = a.row_expansion()?;
        let mut acc = Scalar::zero(field);
        for (c, l) in lambda.iter().enumerate() {
            acc += a.get(0, c) * *l;
            upd(&mut out.minors, rel_err(l.norm(), a.minor(0, c).det_abs()?.value()));
        }
        upd(&mut out.row_expansion, rel_err(acc.norm(), da));
        upd(&mut out.gram, rel_err(a.adjoint().matmul(&a)?.det_abs()?.value(), da * da));
        if let Some((qs, _)) = gram_schmidt(&a.columns())? {
            upd(&mut out.unitary, rel_err(FMat::from_columns(&qs)?.det_abs()?.value(), 1.0));
        }
        let k = rng.random_range(1..=n);
        let tuple: Vec<FVector> = (0..k).map(|_| FVector::gaussian(field, n, rng)).collect();
        let g = FMat::gaussian(field, k, k, rng);
        let moved = det_abs_tuple(&right_action(&tuple, &g)?)?.value();
        let expect = g.det_abs()?.value() * det_abs_tuple(&tuple)?.value();
        upd(&mut out.right_action, rel_err(moved, expect));
    }
    Ok(out)
}
