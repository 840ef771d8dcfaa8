use std::f64::consts::PI;

use bcg_core::bodies::{make_ball, make_box, make_ellipsoid, make_norm_ball, oracle_only};
use bcg_core::functionals::kappa;
use bcg_core::mc::rng_from_seed;
use bcg_core::quermass::{
    affine_quermass, conjecture_eval, dual_affine_quermass, intersection_inequality_check, normalize_unimodular,
    santalo_case, sl_invariance_test, unit_ball_values,
};
use bcg_core::{Body, FMat, FVector, Field, McConfig, Scalar};

const C: Field = Field::Complex;

fn ball(f: Field, n: usize) -> Body {
    make_ball(f, &FVector::zeros(f, n), 1.0).unwrap()
}

fn diag_ellipsoid(f: Field, d: &[f64]) -> Body {
    let h = FMat::diag(f, &d.iter().map(|&x| Scalar::real(f, x)).collect::<Vec<_>>()).unwrap();
    make_ellipsoid(&FVector::zeros(f, d.len()), &h).unwrap()
}

/// Unit-determinant complex ellipsoid `{|z1|^2 / a^2 + a^2 |z2|^2 <= 1}`.
fn unimodular_ellipsoid(a: f64) -> Body {
    diag_ellipsoid(C, &[1.0 / (a * a), a * a])
}

#[test]
fn dual_quermass_of_unit_balls() {
    for (n, m, f) in [(2, 1, Field::Real), (2, 1, C), (2, 1, Field::Quaternion), (3, 2, Field::Real)] {
        let est = dual_affine_quermass(&ball(f, n), m, &McConfig::new(1000, 1), 100).unwrap();
        let (exact, _) = unit_ball_values(n, m, f);
        assert!((est.mean - exact).abs() < 1e-10 * exact, "{f} n={n} m={m}");
        // Through the oracle every section volume is estimated.
        let mc = dual_affine_quermass(&oracle_only(ball(f, n)), m, &McConfig::new(2000, 2), 200).unwrap();
        assert!(mc.z_score(exact).abs() < 3.0, "{f} n={n} m={m}: {mc:?}");
    }
    assert!((unit_ball_values(2, 1, C).0 - PI * PI).abs() < 1e-12);
}

#[test]
fn dual_quermass_of_a_shifted_ball_is_smaller() {
    let shifted = make_ball(C, &FVector::from_real(C, &[0.6, 0.0, 0.0, 0.2]).unwrap(), 1.0).unwrap();
    let est = dual_affine_quermass(&shifted, 1, &McConfig::new(20_000, 3), 1).unwrap();
    assert!(est.mean + 3.0 * est.stderr < PI * PI, "{est:?}");
}

#[test]
fn dual_quermass_homogeneity() {
    let cube = make_box(C, &[-1.0, -0.8, -0.6, -1.0], &[1.0, 0.9, 0.7, 0.5]).unwrap();
    let c = 1.5f64;
    let big = bcg_core::bodies::affine_image(&cube, &FMat::identity(C, 2).scale(c), &FVector::zeros(C, 2)).unwrap();
    let a = dual_affine_quermass(&cube, 1, &McConfig::new(20_000, 4), 1).unwrap();
    let b = dual_affine_quermass(&big, 1, &McConfig::new(20_000, 5), 1).unwrap();
    let factor = c.powi(4);
    assert!((b.mean - factor * a.mean).abs() <= 3.0 * b.stderr.hypot(factor * a.stderr), "{a:?} {b:?}");
}

#[test]
fn affine_quermass_of_balls_and_unimodular_ellipsoids() {
    let est = affine_quermass(&ball(C, 2), 1, &McConfig::new(1000, 6)).unwrap();
    assert!((est.mean - 1.0 / (PI * PI)).abs() < 1e-12);
    let est = affine_quermass(&ball(Field::Quaternion, 3), 2, &McConfig::new(1000, 6)).unwrap();
    assert!((est.mean - unit_ball_values(3, 2, Field::Quaternion).1).abs() < 1e-10 * est.mean);
    // The invariant m = 1 path agrees with the ellipsoid path.
    let nb = make_norm_ball(C, 2, 2.0, 1.0).unwrap();
    let est = affine_quermass(&nb, 1, &McConfig::new(1000, 6)).unwrap();
    assert!((est.mean - 1.0 / (PI * PI)).abs() < 1e-12);

    let mut rng = rng_from_seed(7);
    let g = normalize_unimodular(&FMat::gaussian(C, 3, 3, &mut rng)).unwrap();
    let rep =
        sl_invariance_test(&diag_ellipsoid(C, &[0.5, 1.0, 3.0]), 2, &g, false, &McConfig::new(20_000, 8), 1).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");
}

#[test]
fn sl_invariance_of_dual_quermass() {
    let a = 2.0;
    let g = FMat::diag(C, &[Scalar::real(C, a), Scalar::real(C, 1.0 / a)]).unwrap();
    let rep = sl_invariance_test(&ball(C, 2), 1, &g, true, &McConfig::new(20_000, 9), 1).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");

    let mut rng = rng_from_seed(10);
    let h = Field::Quaternion;
    let mut shear = FMat::identity(h, 2);
    shear.set(0, 1, Scalar::from_slice(h, &[0.5; 4]).unwrap());
    let cube = make_box(h, &[-1.0; 8], &[1.0; 8]).unwrap();
    let rep = sl_invariance_test(&cube, 1, &shear, true, &McConfig::new(4000, 11), 400).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");

    let u = {
        let (qs, _) = bcg_core::gram_schmidt(&FMat::gaussian(C, 2, 2, &mut rng).columns()).unwrap().unwrap();
        FMat::from_columns(&qs).unwrap()
    };
    let k = make_box(C, &[-1.0, -0.8, -0.6, -1.0], &[1.0, 0.9, 0.7, 0.5]).unwrap();
    let rep = sl_invariance_test(&k, 1, &u, true, &McConfig::new(20_000, 12), 1).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");
}

#[test]
fn intersection_inequality_cases() {
    let rep = intersection_inequality_check(&[ball(C, 2)], &McConfig::new(2000, 13), 1).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");
    let cube = make_box(C, &[-1.0; 4], &[1.0; 4]).unwrap();
    let rep = intersection_inequality_check(&[cube], &McConfig::new(50_000, 14), 1).unwrap();
    assert!(rep.margin_sigmas() > 3.0, "{rep:?}");

    let f = Field::Real;
    let h = FMat::diag(f, &[1.0, 0.25, 4.0].map(|x| Scalar::real(f, x))).unwrap();
    let shifted = make_ellipsoid(&FVector::from_real(f, &[0.5, 0.8, 0.1]).unwrap(), &h).unwrap();
    let rep = intersection_inequality_check(&[shifted.clone(), shifted], &McConfig::new(50_000, 15), 1).unwrap();
    assert!(rep.margin_sigmas() > 3.0, "{rep:?}");
    let centered = diag_ellipsoid(f, &[1.0, 0.25, 4.0]);
    let rep = intersection_inequality_check(&[centered.clone(), centered], &McConfig::new(50_000, 16), 1).unwrap();
    assert!(rep.equal_within(3.0), "{rep:?}");
}

#[test]
fn fractional_power_route_matches_exact() {
    // m = 2 in R^3 raises section areas to the power 3/2; the oracle route
    // estimates them with the bias-corrected plug-in.
    let f = Field::Real;
    let e = diag_ellipsoid(f, &[1.0, 0.25, 4.0]);
    let exact = intersection_inequality_check(&[e.clone(), e.clone()], &McConfig::new(20_000, 17), 1).unwrap();
    let o = oracle_only(e);
    let mc = intersection_inequality_check(&[o.clone(), o], &McConfig::new(5_000, 18), 10_000).unwrap();
    let diff = exact.rhs.mean - mc.rhs.mean;
    assert!(diff.abs() <= 3.0 * exact.rhs.stderr.hypot(mc.rhs.stderr), "{exact:?} {mc:?}");
}

#[test]
fn santalo_cases() {
    let rep = santalo_case(&ball(C, 2), &McConfig::new(20_000, 19)).unwrap();
    assert!(rep.identity.equal_within(3.0) && rep.inequality.equal_within(3.0), "{rep:?}");
    let rep = santalo_case(&unimodular_ellipsoid(1.7), &McConfig::new(20_000, 20)).unwrap();
    assert!(rep.identity.equal_within(3.0), "{rep:?}");
    assert!(rep.inequality.equal_within(3.0), "{rep:?}");
    let l1 = make_norm_ball(C, 2, 1.0, 1.0).unwrap();
    let rep = santalo_case(&l1, &McConfig::new(100_000, 21)).unwrap();
    assert!(rep.identity.equal_within(3.0), "{rep:?}");
    assert!(rep.inequality.margin_sigmas() > 3.0, "{rep:?}");
    // |K*| / kappa_4 for the l1 ball is the polydisk volume pi^2 over pi^2 / 2.
    assert!(rep.polar_ratio.z_score(2.0).abs() < 3.0, "{rep:?}");
}

#[test]
fn conjecture_exploration() {
    let rep = conjecture_eval(&ball(C, 2), 1, &McConfig::new(2000, 22)).unwrap();
    assert!(rep.exploration);
    assert!(rep.conjecture.equal_within(3.0) && rep.isoperimetric.equal_within(3.0), "{rep:?}");
    let rep = conjecture_eval(&unimodular_ellipsoid(1.4), 1, &McConfig::new(20_000, 23)).unwrap();
    assert!(rep.conjecture.equal_within(3.0), "{rep:?}");

    // Scaling K by c multiplies both sides of the conjecture by c^{-mnp}.
    let mut rng = rng_from_seed(24);
    let g = FMat::gaussian(C, 2, 2, &mut rng);
    let k = make_ellipsoid(&FVector::zeros(C, 2), &g.adjoint().matmul(&g).unwrap()).unwrap();
    let c = 1.3f64;
    let ck = bcg_core::bodies::affine_image(&k, &FMat::identity(C, 2).scale(c), &FVector::zeros(C, 2)).unwrap();
    let cfg = McConfig::new(20_000, 25);
    let a = conjecture_eval(&k, 1, &cfg).unwrap().conjecture;
    let b = conjecture_eval(&ck, 1, &cfg).unwrap().conjecture;
    let ra = a.lhs.mean / a.rhs.mean;
    let rb = b.lhs.mean / b.rhs.mean;
    let sigma = (a.rhs.rel_stderr()).hypot(b.rhs.rel_stderr());
    assert!((ra / rb - 1.0).abs() <= 3.0 * sigma.max(1e-12), "{ra} {rb}");
    assert!((b.lhs.mean / a.lhs.mean - c.powi(-4)).abs() < 1e-10);
    let _ = kappa(4);
}
