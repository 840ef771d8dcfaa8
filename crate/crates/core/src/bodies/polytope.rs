use nalgebra::DMatrix;
use rand::Rng;

use super::{BodyKind, ConvexBody};
use crate::error::{check_dim, Error, Result};
use crate::mc::{self, McRng};
use crate::scalars::Field;

/// Largest number of vertex subsets tried by facet enumeration.
pub const FACET_SUBSET_CAP: u128 = 5_000_000;

/// Intersection of halfspaces `<n_i, x> <= c_i` with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct HRep {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl HRep {
    pub fn new(dim: usize, normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        check_dim(normals.len(), offsets.len())?;
        let mut out = Self { dim, normals: Vec::new(), offsets: Vec::new() };
        for (n, c) in normals.into_iter().zip(offsets) {
            check_dim(dim, n.len())?;
            let len = mc::norm(&n);
            if len == 0.0 {
                return Err(Error::InvalidArgument("zero halfspace normal".into()));
            }
            out.normals.push(n.iter().map(|x| x / len).collect());
            out.offsets.push(c / len);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(n, &c)| mc::dot(n, x) <= c)
    }

    /// Parameter interval `{s : y + s u in P}`, `None` when empty.
    pub fn chord(&self, y: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (n, &c) in self.normals.iter().zip(&self.offsets) {
            let a = mc::dot(n, u);
            let b = c - mc::dot(n, y);
            if a.abs() <= 1e-15 {
                if b < 0.0 {
                    return None;
                }
            } else if a > 0.0 {
                hi = hi.min(b / a);
            } else {
                lo = lo.max(b / a);
            }
        }
        (lo < hi).then_some((lo, hi))
    }

    /// Restriction to `y + Q w` in `w`-coordinates; `None` when empty by a
    /// constraint parallel to the subspace.
    pub fn section(&self, y: &[f64], q: &DMatrix<f64>) -> Option<HRep> {
        let k = q.ncols();
        let mut out = HRep { dim: k, normals: Vec::new(), offsets: Vec::new() };
        for (n, &c) in self.normals.iter().zip(&self.offsets) {
            let nq: Vec<f64> = (0..k).map(|j| (0..n.len()).map(|i| n[i] * q[(i, j)]).sum()).collect();
            let len = mc::norm(&nq);
            let b = c - mc::dot(n, y);
            if len <= 1e-13 {
                if b < 0.0 {
                    return None;
                }
                continue;
            }
            out.normals.push(nq.iter().map(|x| x / len).collect());
            out.offsets.push(b / len);
        }
        Some(out)
    }

    /// Image under `x -> A x + b`, given `A^{-1}`.
    pub fn affine_image(&self, a_inv: &DMatrix<f64>, b: &[f64]) -> HRep {
        let d = self.dim;
        let mut out = HRep { dim: d, normals: Vec::new(), offsets: Vec::new() };
        for (n, &c) in self.normals.iter().zip(&self.offsets) {
            // <n, A^{-1}(z - b)> <= c  <=>  <A^{-T} n, z> <= c + <A^{-T} n, b>.
            let m: Vec<f64> = (0..d).map(|j| (0..d).map(|i| a_inv[(i, j)] * n[i]).sum()).collect();
            let len = mc::norm(&m);
            let off = c + mc::dot(&m, b);
            out.normals.push(m.iter().map(|x| x / len).collect());
            out.offsets.push(off / len);
        }
        out
    }

    /// Exact volume in real dimension 1 or 2, given a box `center +- half`
    /// known to contain the set.
    pub fn low_dim_volume(&self, center: &[f64], half: f64) -> Option<f64> {
        match self.dim {
            0 => Some(if self.offsets.iter().all(|&c| c >= 0.0) { 1.0 } else { 0.0 }),
            1 => Some(
                self.chord(&[0.0], &[1.0])
                    .map_or(0.0, |(lo, hi)| hi.min(center[0] + half) - lo.max(center[0] - half))
                    .max(0.0),
            ),
            2 => Some(polygon_area(&polygon_vertices(self, center, half))),
            _ => None,
        }
    }
}

/// Vertices, counter-clockwise, of a 2-dimensional H-polytope clipped to the
/// square `center +- half`.
pub fn polygon_vertices(h: &HRep, center: &[f64], half: f64) -> Vec<[f64; 2]> {
    assert_eq!(h.dim, 2, "polygon clipping needs a planar H-representation");
    let (cx, cy) = (center[0], center[1]);
    let mut poly = vec![[cx - half, cy - half], [cx + half, cy - half], [cx + half, cy + half], [cx - half, cy + half]];
    for (n, &c) in h.normals.iter().zip(&h.offsets) {
        if poly.is_empty() {
            break;
        }
        let side = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
        let mut next = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (sa, sb) = (side(&a), side(&b));
            if sa <= 0.0 {
                next.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                next.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        poly = next;
    }
    poly
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

fn polygon_centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let cr = p[0] * q[1] - q[0] * p[1];
        a2 += cr;
        cx += (p[0] + q[0]) * cr;
        cy += (p[1] + q[1]) * cr;
    }
    if a2.abs() < 1e-300 {
        let k = poly.len().max(1) as f64;
        return [poly.iter().map(|p| p[0]).sum::<f64>() / k, poly.iter().map(|p| p[1]).sum::<f64>() / k];
    }
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

/// Axis-parallel box `lo <= x <= hi` in real coordinates.
#[derive(Debug, Clone)]
pub struct BoxBody {
    field: Field,
    lo: Vec<f64>,
    hi: Vec<f64>,
    hrep: HRep,
}

impl BoxBody {
    pub fn new(field: Field, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || !lo.len().is_multiple_of(field.p()) {
            return Err(Error::InvalidArgument(format!(
                "box needs a positive multiple of {} coordinates, got {}",
                field.p(),
                lo.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("box needs lo < hi in every coordinate".into()));
        }
        let d = lo.len();
        let mut normals = Vec::with_capacity(2 * d);
        let mut offsets = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(hi[i]);
            e[i] = -1.0;
            normals.push(e);
            offsets.push(-lo[i]);
        }
        let hrep = HRep::new(d, normals, offsets)?;
        Ok(Self { field, lo, hi, hrep })
    }

    /// `[-s, s]^{np}`.
    pub fn cube(field: Field, n: usize, s: f64) -> Result<Self> {
        let d = n * field.p();
        Self::new(field, vec![-s; d], vec![s; d])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

impl ConvexBody for BoxBody {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.lo.len() / self.field.p()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::Box
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let c: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let r = self.lo.iter().zip(&self.hi).map(|(a, b)| 0.25 * (b - a) * (b - a)).sum::<f64>().sqrt();
        (c, r)
    }

    fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.lo.clone(), self.hi.clone()))
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product())
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        Some(u.iter().zip(self.lo.iter().zip(&self.hi)).map(|(x, (a, b))| (x * a).max(x * b)).sum())
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        Some(self.bounding_ball().0)
    }

    fn hrep(&self) -> Option<&HRep> {
        Some(&self.hrep)
    }

    fn sample(&self, rng: &mut McRng) -> Result<Vec<f64>> {
        Ok(self.lo.iter().zip(&self.hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect())
    }
}

/// Convex hull of finitely many points.
#[derive(Debug, Clone)]
pub struct VPolytope {
    field: Field,
    vertices: Vec<Vec<f64>>,
    hrep: HRep,
    volume: f64,
    centroid: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

struct Facet {
    normal: Vec<f64>,
    offset: f64,
    members: Vec<usize>,
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Normal of the hyperplane through `d` points in `R^d` by cofactors.
fn hyperplane_normal(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    let base = points[0];
    let rows: Vec<Vec<f64>> = points[1..].iter().map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    (0..d)
        .map(|j| {
            let m = DMatrix::from_fn(d - 1, d - 1, |r, c| rows[r][if c < j { c } else { c + 1 }]);
            let det = if d == 1 { 1.0 } else { m.determinant() };
            if j % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

fn enumerate_facets(points: &[Vec<f64>]) -> Result<Vec<Facet>> {
    let d = points[0].len();
    let count = binomial(points.len(), d);
    if count > FACET_SUBSET_CAP {
        return Err(Error::TooComplex(count));
    }
    let center: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / points.len() as f64).collect();
    let scale = points
        .iter()
        .map(|p| mc::norm(&p.iter().zip(&center).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let mut facets: Vec<Facet> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let seen = facets.iter().any(|f| idx.iter().all(|i| f.members.contains(i)));
        if !seen {
            let pts: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
            let mut nrm = hyperplane_normal(&pts);
            let len = mc::norm(&nrm);
            if len > 1e-10 * scale.powi(d as i32 - 1) {
                nrm.iter_mut().for_each(|x| *x /= len);
                let mut off = mc::dot(&nrm, &points[idx[0]]);
                let sides: Vec<f64> = points.iter().map(|p| mc::dot(&nrm, p) - off).collect();
                let all_below = sides.iter().all(|&s| s <= tol);
                let all_above = sides.iter().all(|&s| s >= -tol);
                if all_below || all_above {
                    if !all_below {
                        nrm.iter_mut().for_each(|x| *x = -*x);
                        off = -off;
                    }
                    let members = sides.iter().enumerate().filter(|(_, s)| s.abs() <= tol).map(|(i, _)| i).collect();
                    facets.push(Facet { normal: nrm, offset: off, members });
                }
            }
        }
        if !next_combination(&mut idx, points.len()) {
            break;
        }
    }
    if facets.len() <= d {
        return Err(Error::InvalidArgument("polytope is not full-dimensional".into()));
    }
    Ok(facets)
}

/// Orthonormal basis of the complement of a unit vector.
fn complement_basis(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut e_order: Vec<usize> = (0..d).collect();
    // Start from the coordinate axes least aligned with n.
    e_order.sort_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()));
    for &k in &e_order {
        if basis.len() == d - 1 {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for _ in 0..2 {
            let t = mc::dot(&v, n);
            v.iter_mut().zip(n).for_each(|(a, b)| *a -= t * b);
            for b in &basis {
                let t = mc::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= t * c);
            }
        }
        let len = mc::norm(&v);
        if len > 1e-8 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    basis
}

/// Volume and centroid of the convex hull by pyramids over facets.
fn hull_measure(points: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let d = points[0].len();
    if d == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return Ok((hi - lo, vec![0.5 * (lo + hi)]));
    }
    let facets = enumerate_facets(points)?;
    let apex: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / points.len() as f64).collect();
    let mut vol = 0.0;
    let mut moment = vec![0.0; d];
    for f in &facets {
        let h = f.offset - mc::dot(&f.normal, &apex);
        let basis = complement_basis(&f.normal);
        let origin = &points[f.members[0]];
        let local: Vec<Vec<f64>> = f
            .members
            .iter()
            .map(|&i| {
                let rel: Vec<f64> = points[i].iter().zip(origin).map(|(a, b)| a - b).collect();
                basis.iter().map(|b| mc::dot(b, &rel)).collect()
            })
            .collect();
        let (area, g_local) = if d == 2 {
            hull_measure(&local)?
        } else if local.len() == d {
            simplex_measure(&local)
        } else {
            hull_measure(&local)?
        };
        let mut g = origin.clone();
        for (b, &t) in basis.iter().zip(&g_local) {
            g.iter_mut().zip(b).for_each(|(x, y)| *x += t * y);
        }
        let v = h * area / d as f64;
        // Centroid of the cone over the facet: apex + d/(d+1) (g - apex).
        let frac = d as f64 / (d as f64 + 1.0);
        for i in 0..d {
            moment[i] += v * (apex[i] + frac * (g[i] - apex[i]));
        }
        vol += v;
    }
    Ok((vol, moment.into_iter().map(|m| m / vol).collect()))
}

/// Volume and centroid of a `k`-simplex given by `k + 1` points in `R^k`.
fn simplex_measure(pts: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let k = pts.len() - 1;
    let m = DMatrix::from_fn(k, k, |r, c| pts[r + 1][c] - pts[0][c]);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let g = (0..k).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / pts.len() as f64).collect();
    (m.determinant().abs() / fact, g)
}

impl VPolytope {
    pub fn new(field: Field, vertices: Vec<Vec<f64>>) -> Result<Self> {
        let d = vertices.first().map_or(0, Vec::len);
        if d == 0 || !d.is_multiple_of(field.p()) {
            return Err(Error::InvalidArgument("vertices need a positive multiple of p coordinates".into()));
        }
        for v in &vertices {
            check_dim(d, v.len())?;
        }
        if vertices.len() <= d {
            return Err(Error::InvalidArgument(format!(
                "a full-dimensional polytope in R^{d} needs more than {d} vertices"
            )));
        }
        let facets = if d == 1 { Vec::new() } else { enumerate_facets(&vertices)? };
        let hrep = if d == 1 {
            let lo = vertices.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            HRep::new(1, vec![vec![1.0], vec![-1.0]], vec![hi, -lo])?
        } else {
            HRep::new(d, facets.iter().map(|f| f.normal.clone()).collect(), facets.iter().map(|f| f.offset).collect())?
        };
        let (volume, centroid) = hull_measure(&vertices)?;
        let lo = (0..d).map(|i| vertices.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..d).map(|i| vertices.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
        Ok(Self { field, vertices, hrep, volume, centroid, lo, hi })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facet_count(&self) -> usize {
        self.hrep.len()
    }
}

impl ConvexBody for VPolytope {
    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.lo.len() / self.field.p()
    }

    fn kind(&self) -> BodyKind {
        BodyKind::VPolytope
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.hrep.contains(x)
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let c: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let r = self
            .vertices
            .iter()
            .map(|v| mc::norm(&v.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        (c, r)
    }

    fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.lo.clone(), self.hi.clone()))
    }

    fn exact_volume(&self) -> Option<f64> {
        Some(self.volume)
    }

    fn support(&self, u: &[f64]) -> Option<f64> {
        Some(self.vertices.iter().map(|v| mc::dot(v, u)).fold(f64::NEG_INFINITY, f64::max))
    }

    fn centroid(&self) -> Option<Vec<f64>> {
        Some(self.centroid.clone())
    }

    fn hrep(&self) -> Option<&HRep> {
        Some(&self.hrep)
    }
}

pub(crate) fn polygon_measure(h: &HRep, center: &[f64], half: f64) -> (Vec<[f64; 2]>, f64, [f64; 2]) {
    let poly = polygon_vertices(h, center, half);
    let area = polygon_area(&poly);
    let c = polygon_centroid(&poly);
    (poly, area, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_counted() {
        let mut idx = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut idx, 6) {
            count += 1;
        }
        assert_eq!(count as u128, binomial(6, 3));
    }

    #[test]
    fn cube_hull_volume_and_facets() {
        let mut verts = Vec::new();
        for m in 0..16u32 {
            verts.push((0..4).map(|b| if m >> b & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
        let p = VPolytope::new(Field::Complex, verts).unwrap();
        assert_eq!(p.facet_count(), 8);
        assert!((p.exact_volume().unwrap() - 16.0).abs() < 1e-10);
        assert!(p.centroid().unwrap().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn simplex_volume_and_centroid() {
        let verts = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let p = VPolytope::new(Field::Real, verts).unwrap();
        assert!((p.exact_volume().unwrap() - 1.0 / 6.0).abs() < 1e-14);
        for c in p.centroid().unwrap() {
            assert!((c - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_points_are_ignored() {
        let verts = vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0], vec![0.1, 0.2]];
        let p = VPolytope::new(Field::Real, verts).unwrap();
        assert!((p.exact_volume().unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(p.facet_count(), 4);
    }

    #[test]
    fn degenerate_and_oversized_inputs() {
        let flat = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(VPolytope::new(Field::Real, flat).is_err());
        assert!(binomial(256, 8) > FACET_SUBSET_CAP);
    }

    #[test]
    fn polygon_clipping() {
        let h = HRep::new(2, vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        let area = polygon_area(&polygon_vertices(&h, &[0.0, 0.0], 1.0));
        assert!((area - 2.0).abs() < 1e-14);
        let empty = HRep::new(2, vec![vec![1.0, 0.0]], vec![-5.0]).unwrap();
        assert_eq!(empty.low_dim_volume(&[0.0, 0.0], 1.0), Some(0.0));
    }

    #[test]
    fn chords() {
        let b = BoxBody::cube(Field::Real, 2, 1.0).unwrap();
        let (lo, hi) = b.hrep().unwrap().chord(&[0.5, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((lo, hi), (-1.0, 1.0));
        assert!(b.hrep().unwrap().chord(&[2.0, 0.0], &[0.0, 1.0]).is_none());
    }
}
