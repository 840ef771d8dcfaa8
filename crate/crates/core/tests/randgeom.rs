use std::f64::consts::PI;

use bcg_core::bodies::{affine_image, make_ball, make_box, make_ellipsoid};
use bcg_core::functionals::kappa;
use bcg_core::mc::{rng_from_seed, Moments};
use bcg_core::randgeom::{bp_check, sample_grassmann};
use bcg_core::{Body, FMat, FVector, Field, McConfig};

fn ball(f: Field, n: usize) -> Body {
    make_ball(f, &FVector::zeros(f, n), 1.0).unwrap()
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks2(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn projector_mean_is_scaled_identity() {
    let mut rng = rng_from_seed(1);
    for (f, n, m) in [(Field::Complex, 3, 1), (Field::Quaternion, 3, 2)] {
        let mut acc = vec![Moments::default(); n * n * f.p()];
        for _ in 0..100_000 {
            let pr = sample_grassmann(n, m, f, &mut rng).unwrap().projector();
            for i in 0..n {
                for j in 0..n {
                    for (c, &v) in pr.get(i, j).as_slice().iter().enumerate() {
                        acc[(i * n + j) * f.p() + c].push(v);
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for c in 0..f.p() {
                    let mo = &acc[(i * n + j) * f.p() + c];
                    let target = if i == j && c == 0 { m as f64 / n as f64 } else { 0.0 };
                    assert!((mo.mean - target).abs() <= 5.0 * mo.stderr().max(1e-15), "{f} ({i},{j},{c}): {}", mo.mean);
                }
            }
        }
    }
}

#[test]
fn unitary_twist_leaves_the_law_unchanged() {
    let mut rng = rng_from_seed(2);
    for f in Field::ALL {
        let (n, m) = (3, 1);
        let g = FMat::gaussian(f, n, n, &mut rng);
        let (qs, _) = bcg_core::gram_schmidt(&g.columns()).unwrap().unwrap();
        let u = FMat::from_columns(&qs).unwrap();
        let e1 = FVector::basis(f, n, 0);
        let stat = |pr: &FMat| pr.mul_vec(&e1).unwrap().norm().powi(2);
        let count = 5000;
        let plain: Vec<f64> =
            (0..count).map(|_| stat(&sample_grassmann(n, m, f, &mut rng).unwrap().projector())).collect();
        let twisted: Vec<f64> = (0..count)
            .map(|_| {
                let pr = sample_grassmann(n, m, f, &mut rng).unwrap().projector();
                stat(&u.matmul(&pr).unwrap().matmul(&u.adjoint()).unwrap())
            })
            .collect();
        let crit = 1.628 * (2.0 / count as f64).sqrt();
        assert!(ks2(plain, twisted) < crit, "{f}");
    }
}

#[test]
fn closed_loop_anchors() {
    let cfg = McConfig::new(200_000, 3);
    let rep = bp_check(&[ball(Field::Complex, 2)], &cfg, 1).unwrap();
    assert_eq!(rep.lhs.mean, PI * PI / 2.0);
    assert!(rep.rhs.z_score(PI * PI / 2.0).abs() < 3.0, "{rep:?}");
    let rep = bp_check(&[ball(Field::Real, 2)], &cfg, 1).unwrap();
    assert!(rep.rhs.z_score(PI).abs() < 3.0, "{rep:?}");
}

#[test]
fn formula_across_fields_and_dimensions() {
    let cfg = McConfig::new(50_000, 4);
    for f in Field::ALL {
        for (n, m) in [(2, 1), (3, 1), (3, 2)] {
            let rep = bp_check(&vec![ball(f, n); m], &cfg, 4).unwrap();
            let dev = (rep.ratio() - 1.0).abs();
            assert!(dev <= 3.0 * rep.ratio_rel_sigma(), "{f} n={n} m={m}: {rep:?}");
            assert!((rep.lhs.mean - kappa(n * f.p()).powi(m as i32)).abs() < 1e-12);
        }
    }
}

#[test]
fn formula_for_oracle_bodies() {
    let mut rng = rng_from_seed(5);
    let cube = make_box(Field::Complex, &[-1.0, -0.5, -0.7, -1.0], &[0.8, 1.0, 0.6, 0.9]).unwrap();
    let g = FMat::gaussian(Field::Complex, 2, 2, &mut rng);
    let h = g.adjoint().matmul(&g).unwrap();
    let e = make_ellipsoid(&FVector::zeros(Field::Complex, 2), &h).unwrap();
    let rep = bp_check(&[cube], &McConfig::new(100_000, 6), 4).unwrap();
    assert!((rep.ratio() - 1.0).abs() <= 3.0 * rep.ratio_rel_sigma(), "{rep:?}");
    let rep = bp_check(&[e.clone(), e], &McConfig::new(1, 0), 1);
    assert!(rep.is_err(), "m must be below n");
}

#[test]
fn doubling_keeps_the_ratio() {
    let f = Field::Real;
    let k = make_ellipsoid(
        &FVector::zeros(f, 3),
        &FMat::diag(f, &[1.0, 2.0, 0.5].map(|x| bcg_core::Scalar::real(f, x))).unwrap(),
    )
    .unwrap();
    let two = affine_image(&k, &FMat::identity(f, 3).scale(2.0), &FVector::zeros(f, 3)).unwrap();
    let cfg = McConfig::new(50_000, 7);
    let a = bp_check(&[k.clone(), k], &cfg, 4).unwrap();
    let b = bp_check(&[two.clone(), two], &cfg, 4).unwrap();
    assert!((b.lhs.mean / a.lhs.mean - 64.0).abs() < 1e-9);
    let diff = a.ratio() - b.ratio();
    assert!(diff.abs() <= 3.0 * a.ratio_rel_sigma().hypot(b.ratio_rel_sigma()), "{a:?} {b:?}");
}

#[test]
fn origin_must_be_inside() {
    let f = Field::Complex;
    let off = make_ball(f, &FVector::from_real(f, &[3.0, 0.0, 0.0, 0.0]).unwrap(), 1.0).unwrap();
    assert_eq!(bp_check(&[off], &McConfig::new(10, 0), 1).unwrap_err(), bcg_core::Error::OriginNotInterior);
}
