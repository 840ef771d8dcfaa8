//! One runner per subcommand. Each returns the rows, a structured report
//! and the pass/fail verdict of its checks.

use std::f64::consts::PI;

use anyhow::{bail, ensure, Context, Result};
use bcg_core::bodies::{volume, ConvexBody};
use bcg_core::functionals::{b_balls_exact, b_functional, brs_gap, Weight};
use bcg_core::mc::{self, McRng};
use bcg_core::quermass::{
    affine_quermass, conjecture_eval, dual_affine_quermass, intersection_inequality_check, normalize_unimodular,
    santalo_case, sl_invariance_test,
};
use bcg_core::randgeom::bp_check;
use bcg_core::symmetrize::{iterate, steiner, symmetrize_fhyperplane, FHyperplane, RealHyperplane};
use bcg_core::{determinant_suite, Body, Estimate, FMat, FVector, Field, McConfig, Scalar};
use serde::Serialize;
use serde_json::json;

use crate::report::Outcome;
use crate::scenario::{build_hyperplane, Experiment, Hyperplane, Scenario};

/// Significance used by every check.
pub const SIGMAS: f64 = 3.0;
/// Probes of the symmetry checks after a symmetrization.
pub const SYMMETRY_PROBES: usize = 10_000;
/// Directions of each roundness measurement.
pub const ROUNDNESS_DIRECTIONS: usize = 2_000;

pub fn run(exp: Experiment, sc: &Scenario) -> Result<Outcome> {
    if let Some(e) = sc.experiment {
        ensure!(e == exp, "scenario is for `{}`, not `{}`", e.name(), exp.name());
    }
    let start = std::time::Instant::now();
    let mut out = match exp {
        Experiment::Selftest => selftest(sc),
        Experiment::Brs => brs(sc),
        Experiment::BpCheck => bp(sc),
        Experiment::Symmetrize => symmetrize(sc),
        Experiment::Quermass => quermass(sc),
        Experiment::Intersection => intersection(sc),
        Experiment::Santalo => santalo(sc),
        Experiment::Counterexample => counterexample_run(sc),
        Experiment::Conjecture => conjecture(sc),
    }
    .with_context(|| format!("scenario `{}`", sc.id))?;
    out.finish(start.elapsed().as_secs_f64());
    Ok(out)
}

fn bodies(sc: &Scenario, min: usize) -> Result<Vec<Body>> {
    let b = sc.build_bodies()?;
    ensure!(b.len() >= min, "scenario needs at least {min} bodies, got {}", b.len());
    Ok(b)
}

fn estimate_json(e: &Estimate) -> serde_json::Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "samples": e.n_samples, "seed": e.seed })
}

/// Worst relative error of the scalar algebra laws on random triples.
fn scalar_laws(field: Field, trials: usize, rng: &mut McRng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let [a, b, c] = [0; 3].map(|_| Scalar::gaussian(field, rng));
        let scale = a.norm() * b.norm() * c.norm();
        worst = worst.max(((a * b) * c - a * (b * c)).norm() / scale);
        worst = worst.max(((a * b).conj() - b.conj() * a.conj()).norm() / (a.norm() * b.norm()));
        worst = worst.max(((a * b).norm() - a.norm() * b.norm()).abs() / (a.norm() * b.norm()));
        let s = a + a.conj();
        if s.re() != 2.0 * a.re() || s.as_slice()[1..].iter().any(|&x| x != 0.0) {
            worst = f64::INFINITY;
        }
    }
    worst
}

fn selftest(sc: &Scenario) -> Result<Outcome> {
    let mut out = Outcome::new(sc);
    let mut rng = mc::rng_from_seed(sc.seed);
    let trials = sc.samples as usize;
    let scalar = scalar_laws(sc.field, 10 * trials, &mut rng);
    out.push_value("scalar_laws", scalar);
    out.check("scalar laws", scalar <= 1e-12, format!("worst relative error {scalar:.2e}"));
    let max_n = sc.n.clamp(2, 6);
    let suite = determinant_suite(sc.field, trials, max_n, &mut rng)?;
    for (name, err) in suite.entries() {
        out.push_value(name, err);
        out.check(name, err <= 1e-8, format!("worst relative error {err:.2e}"));
    }
    out.report = json!({ "scalar_laws": scalar, "determinants": suite });
    Ok(out)
}

fn brs(sc: &Scenario) -> Result<Outcome> {
    let ks = bodies(sc, 1)?;
    let r = sc.r.context("brs needs the weight exponent r")?;
    let g = brs_gap(&ks, &Weight::power(r)?, &sc.mc())?;
    let mut out = Outcome::new(sc);
    out.push("b_k", &g.b_k);
    out.push_value("b_balls", g.b_balls);
    out.push("gap", &Estimate { mean: g.gap, stderr: g.sigma, ..g.b_k });
    out.push_value("gap_sigmas", g.z());
    out.check("B(K) >= B(balls)", g.z() >= -SIGMAS, format!("gap {:.6} ({:+.2} sigma)", g.gap, g.z()));
    out.report = serde_json::to_value(&g)?;
    Ok(out)
}

fn bp(sc: &Scenario) -> Result<Outcome> {
    let ks = bodies(sc, 1)?;
    let rep = bp_check(&ks, &sc.mc(), sc.inner_samples)?;
    let mut out = Outcome::new(sc);
    out.push("lhs", &rep.lhs);
    out.push("rhs", &rep.rhs);
    let sigma = rep.ratio_rel_sigma();
    out.push("ratio", &Estimate { mean: rep.ratio(), stderr: rep.ratio() * sigma, ..rep.rhs });
    let dev = (rep.ratio() - 1.0).abs();
    out.check("rhs / lhs = 1", dev <= SIGMAS * sigma, format!("ratio {:.5} +- {:.5}", rep.ratio(), sigma));
    out.report = serde_json::to_value(&rep)?;
    Ok(out)
}

/// Volume of a body: exact when known, else Monte Carlo on `cfg`.
fn volume_of(k: &dyn ConvexBody, cfg: &McConfig) -> Result<Estimate> {
    Ok(volume(k, cfg)?)
}

fn probe_points(k: &dyn ConvexBody, count: usize, rng: &mut McRng) -> Vec<Vec<f64>> {
    let (c, r) = k.bounding_ball();
    (0..count).map(|_| mc::sample_ball(c.len(), rng).iter().zip(&c).map(|(z, c)| c + 1.05 * r * z).collect()).collect()
}

/// Points where membership differs from membership of the mirrored point.
pub fn symmetry_violations(
    s: &dyn ConvexBody,
    mirror: &dyn Fn(&[f64], &mut McRng) -> Vec<f64>,
    probes: usize,
    rng: &mut McRng,
) -> usize {
    probe_points(s, probes, rng).iter().filter(|x| s.contains(x) != s.contains(&mirror(x, rng))).count()
}

fn symmetrize(sc: &Scenario) -> Result<Outcome> {
    let k = bodies(sc, 1)?.remove(0);
    ensure!(!sc.hyperplanes.is_empty(), "symmetrize needs at least one hyperplane");
    let mut out = Outcome::new(sc);
    let mut rng = mc::rng_from_seed(mc::derive_seed(sc.seed, 77));
    let cfg = sc.mc();
    let base = volume_of(k.as_ref(), &cfg.substream(0))?;
    out.push("volume", &base);
    let mut field_planes = Vec::new();
    let mut records = Vec::new();
    for (i, desc) in sc.hyperplanes.iter().enumerate() {
        let plane = build_hyperplane(desc, sc.field).with_context(|| format!("hyperplanes[{i}]"))?;
        let (s, kind, violations): (Body, &str, usize) = match &plane {
            Hyperplane::Real(h) => {
                let s = steiner(&k, h)?;
                let v = symmetry_violations(s.as_ref(), &|x, _| h.reflect(x), SYMMETRY_PROBES, &mut rng);
                (s, "steiner", v)
            }
            Hyperplane::Field(h) => {
                let s = symmetrize_fhyperplane(&k, h, mc::derive_seed(sc.seed, i as u64))?;
                let f = sc.field;
                let v = symmetry_violations(
                    s.as_ref(),
                    &|x, rng| h.rotate_fiber(x, Scalar::random_unit(f, rng)),
                    SYMMETRY_PROBES,
                    &mut rng,
                );
                field_planes.push(h.clone());
                (s, "field", v)
            }
        };
        let vol = volume_of(s.as_ref(), &cfg.substream(1 + i as u64))?;
        out.push(&format!("volume_{kind}_{i}"), &vol);
        out.push_value(&format!("symmetry_violations_{kind}_{i}"), violations as f64);
        let sigma = vol.stderr.hypot(base.stderr);
        let ok = mc::agrees(vol.mean, base.mean, sigma, SIGMAS);
        out.check(
            &format!("volume preserved ({kind} {i})"),
            ok,
            format!("{:.6} vs {:.6} (sigma {:.2e})", vol.mean, base.mean, sigma),
        );
        out.check(
            &format!("symmetry ({kind} {i})"),
            violations == 0,
            format!("{violations} of {SYMMETRY_PROBES} probes violate it"),
        );
        records.push(json!({ "kind": kind, "volume": estimate_json(&vol), "symmetry_violations": violations }));
    }
    let mut trace_json = serde_json::Value::Null;
    if let Some(rounds) = sc.rounds.filter(|&r| r > 0) {
        ensure!(!field_planes.is_empty(), "iterated symmetrization needs field hyperplanes");
        let (_, trace) = iterate(&k, &field_planes, rounds, ROUNDNESS_DIRECTIONS, &cfg.substream(500))?;
        for (i, d) in trace.defects.iter().enumerate() {
            out.push_value(&format!("defect_round_{i}"), *d);
        }
        // Reported, not gated: the theorem gives convergence, not monotonicity.
        out.checks.push(format!(
            "INFO roundness defect {:.4} -> {:.4} over {rounds} rounds",
            trace.defects[0],
            trace.defects.last().copied().unwrap_or(f64::NAN)
        ));
        trace_json = serde_json::to_value(&trace)?;
    }
    out.report = json!({ "base_volume": estimate_json(&base), "planes": records, "iteration": trace_json });
    Ok(out)
}

fn quermass(sc: &Scenario) -> Result<Outcome> {
    let k = bodies(sc, 1)?.remove(0);
    let m = sc.m.unwrap_or(1);
    let dual = sc.dual.unwrap_or(true);
    let mut out = Outcome::new(sc);
    let cfg = sc.mc();
    match sc.build_transform()? {
        Some(g) => {
            let g = normalize_unimodular(&g)?;
            let rep = sl_invariance_test(&k, m, &g, dual, &cfg, sc.inner_samples)?;
            out.push("base", &rep.rhs);
            out.push("moved", &rep.lhs);
            out.push_value("difference_sigmas", rep.margin_sigmas());
            out.check(
                "quermassintegral of gK equals that of K",
                rep.equal_within(SIGMAS),
                format!("difference {:.6} ({:+.2} sigma)", rep.difference, rep.margin_sigmas()),
            );
            out.report = serde_json::to_value(&rep)?;
        }
        None => {
            let v =
                if dual { dual_affine_quermass(&k, m, &cfg, sc.inner_samples)? } else { affine_quermass(&k, m, &cfg)? };
            out.push(if dual { "dual_quermass" } else { "affine_quermass" }, &v);
            out.report = json!({ "m": m, "dual": dual, "value": estimate_json(&v) });
        }
    }
    Ok(out)
}

fn intersection(sc: &Scenario) -> Result<Outcome> {
    let ks = bodies(sc, 1)?;
    let rep = intersection_inequality_check(&ks, &sc.mc(), sc.inner_samples)?;
    let mut out = Outcome::new(sc);
    out.push("lhs", &rep.lhs);
    out.push("rhs", &rep.rhs);
    out.push_value("margin_sigmas", rep.margin_sigmas());
    out.check(
        "volumes >= section integral",
        rep.holds_within(SIGMAS),
        format!("margin {:+.2} sigma", rep.margin_sigmas()),
    );
    out.report = serde_json::to_value(&rep)?;
    Ok(out)
}

fn santalo(sc: &Scenario) -> Result<Outcome> {
    let k = bodies(sc, 1)?.remove(0);
    let rep = santalo_case(&k, &sc.mc())?;
    let mut out = Outcome::new(sc);
    out.push("line_integral", &rep.line_integral);
    out.push("polar_ratio", &rep.polar_ratio);
    out.push("inverse_volume", &rep.inequality.lhs);
    out.push_value("identity_sigmas", rep.identity.margin_sigmas());
    out.push_value("inequality_sigmas", rep.inequality.margin_sigmas());
    out.check(
        "line integral = polar volume ratio",
        rep.identity.equal_within(SIGMAS),
        format!("{:+.2} sigma", rep.identity.margin_sigmas()),
    );
    out.check(
        "inverse volume >= line integral",
        rep.inequality.holds_within(SIGMAS),
        format!("{:+.2} sigma", rep.inequality.margin_sigmas()),
    );
    out.report = serde_json::to_value(&rep)?;
    Ok(out)
}

fn conjecture(sc: &Scenario) -> Result<Outcome> {
    let k = bodies(sc, 1)?.remove(0);
    let rep = conjecture_eval(&k, sc.m.unwrap_or(1), &sc.mc())?;
    let mut out = Outcome::new(sc);
    out.push("conjecture_lhs", &rep.conjecture.lhs);
    out.push("conjecture_rhs", &rep.conjecture.rhs);
    out.push("isoperimetric_lhs", &rep.isoperimetric.lhs);
    out.push("isoperimetric_rhs", &rep.isoperimetric.rhs);
    out.checks.push(format!(
        "INFO exploration only: conjecture margin {:+.2} sigma, isoperimetric margin {:+.2} sigma",
        rep.conjecture.margin_sigmas(),
        rep.isoperimetric.margin_sigmas()
    ));
    out.report = serde_json::to_value(&rep)?;
    Ok(out)
}

/// `E_a = {|z1|^2 / a^2 + a^2 |z2|^2 <= 1}` in `C^2`, of unit determinant.
pub fn counterexample_ellipsoid(a: f64) -> Result<Body> {
    let f = Field::Complex;
    let h = FMat::diag(f, &[Scalar::real(f, 1.0 / (a * a)), Scalar::real(f, a * a)])?;
    Ok(bcg_core::bodies::make_ellipsoid(&FVector::zeros(f, 2), &h)?)
}

/// The normal `(1, 0, 1, 0) / sqrt 2` mixing `Re z1` and `Re z2`.
pub fn counterexample_normal() -> Vec<f64> {
    let s = 0.5f64.sqrt();
    vec![s, 0.0, s, 0.0]
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetralB {
    pub normal: Vec<f64>,
    pub b: Estimate,
    /// `b - b_exact`.
    pub delta: f64,
    pub delta_sigmas: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub aspect: f64,
    pub r: f64,
    /// `B(E_a, E_a)`, equal to the ball value.
    pub b_exact: f64,
    pub steiner: SymmetralB,
    /// Symmetrization in the complex hyperplane `{z1 = 0}`.
    pub control: SymmetralB,
    /// `(theta, delta_sigmas)` of the normal scan, run only when the
    /// default normal is not significant.
    pub scan: Vec<(f64, f64)>,
    /// Steiner symmetral is significantly above and the control is not.
    pub certified: bool,
}

fn b_of(k: &Body, r: f64, cfg: &McConfig, exact: f64, normal: Vec<f64>) -> Result<SymmetralB> {
    let b = b_functional(&[k.clone(), k.clone()], &Weight::power(r)?, cfg)?.value;
    let delta = b.mean - exact;
    let delta_sigmas = mc::sigmas(b.mean, exact, b.stderr);
    Ok(SymmetralB { normal, b, delta, delta_sigmas })
}

/// Steiner symmetrization of `E_a` in a real hyperplane can raise `B`,
/// while symmetrization in a complex hyperplane cannot.
pub fn counterexample(a: f64, r: f64, cfg: &McConfig) -> Result<CounterexampleReport> {
    ensure!(a >= 1.0, "aspect must be at least 1");
    let e = counterexample_ellipsoid(a)?;
    let b_exact = b_balls_exact(2, 2, r);
    let steiner_b = |u: Vec<f64>, cfg: &McConfig| -> Result<SymmetralB> {
        let s = steiner(&e, &RealHyperplane::new(&u)?)?;
        b_of(&s, r, cfg, b_exact, u)
    };
    let mut best = steiner_b(counterexample_normal(), &cfg.substream(1))?;
    let mut scan = Vec::new();
    if best.delta_sigmas < SIGMAS {
        let coarse = cfg.with_samples((cfg.samples / 10).max(1000));
        let mut top = (f64::NAN, f64::NEG_INFINITY);
        for k in 1..12 {
            let theta = k as f64 * PI / 12.0;
            let u = vec![theta.cos(), 0.0, theta.sin(), 0.0];
            let z = steiner_b(u, &coarse.substream(100 + k))?.delta_sigmas;
            scan.push((theta, z));
            if z > top.1 {
                top = (theta, z);
            }
        }
        // Re-estimate the best witness on a fresh stream.
        let u = vec![top.0.cos(), 0.0, top.0.sin(), 0.0];
        let fresh = steiner_b(u, &cfg.substream(2))?;
        if fresh.delta_sigmas > best.delta_sigmas {
            best = fresh;
        }
    }
    let ctrl_plane = FHyperplane::coordinate(Field::Complex, 2, 0);
    let ctrl_body = symmetrize_fhyperplane(&e, &ctrl_plane, cfg.seed)?;
    let control = b_of(&ctrl_body, r, &cfg.substream(3), b_exact, ctrl_plane.normal().to_real())?;
    let certified = best.delta_sigmas >= SIGMAS && control.delta_sigmas <= SIGMAS;
    Ok(CounterexampleReport { aspect: a, r, b_exact, steiner: best, control, scan, certified })
}

fn counterexample_run(sc: &Scenario) -> Result<Outcome> {
    if sc.field != Field::Complex || sc.n != 2 {
        bail!("the counterexample lives in C^2 (field C, n = 2)");
    }
    let a = sc.aspect.unwrap_or(3f64.sqrt());
    let r = sc.r.unwrap_or(2.0);
    let rep = counterexample(a, r, &sc.mc())?;
    let mut out = Outcome::new(sc);
    out.push_value("b_exact", rep.b_exact);
    out.push("b_steiner", &rep.steiner.b);
    out.push_value("delta_sigmas_steiner", rep.steiner.delta_sigmas);
    out.push("b_control", &rep.control.b);
    out.push_value("delta_sigmas_control", rep.control.delta_sigmas);
    if a > 1.0 {
        out.check(
            "Steiner symmetral raises B",
            rep.steiner.delta_sigmas >= SIGMAS,
            format!("delta {:+.5} ({:+.2} sigma)", rep.steiner.delta, rep.steiner.delta_sigmas),
        );
    } else {
        out.check(
            "ball is a fixed point",
            rep.steiner.delta_sigmas.abs() <= SIGMAS,
            format!("delta {:+.5} ({:+.2} sigma)", rep.steiner.delta, rep.steiner.delta_sigmas),
        );
    }
    out.check(
        "complex hyperplane control does not raise B",
        rep.control.delta_sigmas <= SIGMAS,
        format!("delta {:+.5} ({:+.2} sigma)", rep.control.delta, rep.control.delta_sigmas),
    );
    out.report = serde_json::to_value(&rep)?;
    Ok(out)
}

/// Built-in scenario of a subcommand when no config file is given.
pub fn default_scenario(exp: Experiment, field: Field, samples: u64, seed: u64, workers: usize) -> Scenario {
    use crate::scenario::{BodyDesc, EntryDesc, Exponent, HyperplaneDesc, HyperplaneType};
    let p = field.p();
    let n = 2;
    let cube = || BodyDesc::Box { field: None, n: None, lo: vec![-1.0; n * p], hi: vec![1.0; n * p] };
    let ball = || BodyDesc::Ball { field: None, n: None, center: None, radius: 1.0 };
    let diag = |d: &[f64]| -> Vec<Vec<EntryDesc>> {
        (0..d.len()).map(|i| (0..d.len()).map(|j| EntryDesc::Real(if i == j { d[i] } else { 0.0 })).collect()).collect()
    };
    let mut sc = Scenario {
        schema_version: crate::scenario::SCHEMA_VERSION,
        id: format!("{}-default-{}", exp.name(), field.tag()),
        experiment: Some(exp),
        field,
        n,
        bodies: Vec::new(),
        r: None,
        m: None,
        hyperplanes: Vec::new(),
        rounds: None,
        dual: None,
        transform: None,
        aspect: None,
        samples,
        inner_samples: 1,
        seed,
        workers,
    };
    match exp {
        Experiment::Selftest => sc.n = 6,
        Experiment::Brs => {
            sc.bodies = vec![cube(), cube()];
            sc.r = Some(2.0);
        }
        Experiment::BpCheck => {
            sc.bodies = vec![ball()];
            sc.inner_samples = 4;
        }
        Experiment::Symmetrize => {
            sc.bodies = vec![BodyDesc::Ellipsoid { field: None, n: None, center: None, h: diag(&[0.25, 4.0]) }];
            let mut generic = vec![0.0; n * p];
            generic[0] = 1.0;
            generic[p] = 0.7;
            if p > 1 {
                generic[p + 1] = 0.3;
            }
            let mut real = vec![0.0; n * p];
            real[0] = 0.5f64.sqrt();
            real[p] = 0.5f64.sqrt();
            let e = |k: usize| {
                let mut v = vec![0.0; n * p];
                v[k * p] = 1.0;
                v
            };
            sc.hyperplanes = vec![
                HyperplaneDesc { kind: HyperplaneType::Real, normal: real },
                HyperplaneDesc { kind: HyperplaneType::Field, normal: e(0) },
                HyperplaneDesc { kind: HyperplaneType::Field, normal: e(1) },
                HyperplaneDesc { kind: HyperplaneType::Field, normal: generic },
            ];
            sc.rounds = Some(20);
        }
        Experiment::Quermass => {
            sc.bodies = vec![ball()];
            sc.m = Some(1);
            sc.dual = Some(true);
            sc.transform = Some(diag(&[2.0, 0.5]));
        }
        Experiment::Intersection => sc.bodies = vec![cube()],
        Experiment::Santalo => {
            sc.bodies = vec![BodyDesc::NormBall { field: None, n: None, q: Exponent::Finite(1.0), radius: 1.0 }];
        }
        Experiment::Counterexample => {
            sc.field = Field::Complex;
            sc.id = "counterexample-default-C".into();
            sc.r = Some(2.0);
            sc.aspect = Some(3f64.sqrt());
        }
        Experiment::Conjecture => {
            sc.bodies = vec![ball()];
            sc.m = Some(1);
        }
    }
    sc
}
