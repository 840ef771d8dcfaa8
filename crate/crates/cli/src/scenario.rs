//! Scenario files: a JSON document with an explicit schema version, the
//! ambient space, body descriptors and Monte Carlo budgets.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bcg_core::bodies::{affine_image, make_ball, make_box, make_ellipsoid, make_norm_ball, make_vpolytope};
use bcg_core::symmetrize::{FHyperplane, RealHyperplane};
use bcg_core::{Body, FMat, FVector, Field, McConfig, Scalar};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A matrix entry: a bare number is a real scalar, an array lists the
/// real components (1, i, j, k order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryDesc {
    Real(f64),
    Components(Vec<f64>),
}

pub type MatrixDesc = Vec<Vec<EntryDesc>>;

/// `q` of a norm ball: a number, or the string "inf".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDesc {
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<Field>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        /// Real coordinates; the origin when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        radius: f64,
    },
    /// `{x : (x - a)* H (x - a) <= 1}` for a Hermitian positive definite `H`.
    Ellipsoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<Field>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        h: MatrixDesc,
    },
    /// Axis-aligned box in real coordinates.
    Box {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<Field>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Vpolytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<Field>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        vertices: Vec<Vec<f64>>,
    },
    /// `{A x + b : x in body}`.
    AffineImage {
        body: Box<BodyDesc>,
        a: MatrixDesc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    /// `{x : (sum |x_i|^q)^{1/q} <= radius}`.
    NormBall {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<Field>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        q: Exponent,
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperplaneType {
    /// Real hyperplane `u^⟂` in realified coordinates.
    Real,
    /// 𝔽-hyperplane with the given 𝔽-normal (real coordinates).
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperplaneDesc {
    #[serde(rename = "type")]
    pub kind: HyperplaneType,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Selftest,
    Brs,
    BpCheck,
    Symmetrize,
    Quermass,
    Intersection,
    Santalo,
    Counterexample,
    Conjecture,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Selftest => "selftest",
            Experiment::Brs => "brs",
            Experiment::BpCheck => "bp-check",
            Experiment::Symmetrize => "symmetrize",
            Experiment::Quermass => "quermass",
            Experiment::Intersection => "intersection",
            Experiment::Santalo => "santalo",
            Experiment::Counterexample => "counterexample",
            Experiment::Conjecture => "conjecture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    /// When present it must match the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub field: Field,
    pub n: usize,
    #[serde(default)]
    pub bodies: Vec<BodyDesc>,
    /// Exponent of the power weight `t^r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Subspace dimension for quermassintegrals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub hyperplanes: Vec<HyperplaneDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Dual (sections) rather than projection quermassintegral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<bool>,
    /// Linear map for invariance tests; rescaled to `|det| = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<MatrixDesc>,
    /// Aspect `a` of the counterexample ellipsoid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<f64>,
    pub samples: u64,
    pub inner_samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Scenario {
    pub fn mc(&self) -> McConfig {
        McConfig::new(self.samples, self.seed).with_workers(self.workers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version);
        }
        if self.n == 0 {
            bail!("n must be positive");
        }
        if self.workers == 0 {
            bail!("workers must be positive");
        }
        if self.id.is_empty() {
            bail!("id must not be empty");
        }
        Ok(())
    }

    pub fn build_bodies(&self) -> Result<Vec<Body>> {
        self.bodies
            .iter()
            .enumerate()
            .map(|(i, b)| build_body(b, self.field, self.n).with_context(|| format!("bodies[{i}]")))
            .collect()
    }

    pub fn build_transform(&self) -> Result<Option<FMat>> {
        self.transform.as_ref().map(|m| build_matrix(m, self.field)).transpose()
    }
}

/// Parses a scenario, reporting syntax and schema errors with line and
/// column.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let sc: Scenario =
        serde_json::from_str(text).map_err(|e| anyhow!("{origin}: line {}, column {}: {e}", e.line(), e.column()))?;
    sc.validate().with_context(|| origin.to_string())?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text, &path.display().to_string())
}

fn scalar(e: &EntryDesc, field: Field) -> Result<Scalar> {
    Ok(match e {
        EntryDesc::Real(x) => Scalar::real(field, *x),
        EntryDesc::Components(c) => Scalar::from_slice(field, c)?,
    })
}

pub fn build_matrix(m: &MatrixDesc, field: Field) -> Result<FMat> {
    let rows = m
        .iter()
        .map(|row| row.iter().map(|e| scalar(e, field)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(FMat::from_rows(field, rows)?)
}

fn vector(coords: Option<&Vec<f64>>, field: Field, n: usize) -> Result<FVector> {
    match coords {
        Some(c) => Ok(FVector::from_real(field, c)?),
        None => Ok(FVector::zeros(field, n)),
    }
}

fn space(field: Option<Field>, n: Option<usize>, default_field: Field, default_n: usize) -> (Field, usize) {
    (field.unwrap_or(default_field), n.unwrap_or(default_n))
}

pub fn build_body(desc: &BodyDesc, field: Field, n: usize) -> Result<Body> {
    Ok(match desc {
        BodyDesc::Ball { field: f, n: d, center, radius } => {
            let (f, d) = space(*f, *d, field, n);
            make_ball(f, &vector(center.as_ref(), f, d)?, *radius)?
        }
        BodyDesc::Ellipsoid { field: f, n: d, center, h } => {
            let (f, d) = space(*f, *d, field, n);
            make_ellipsoid(&vector(center.as_ref(), f, d)?, &build_matrix(h, f)?)?
        }
        BodyDesc::Box { field: f, lo, hi, .. } => make_box(f.unwrap_or(field), lo, hi)?,
        BodyDesc::Vpolytope { field: f, vertices, .. } => make_vpolytope(f.unwrap_or(field), vertices.clone())?,
        BodyDesc::AffineImage { body, a, b } => {
            let inner = build_body(body, field, n)?;
            let f = inner.field();
            affine_image(&inner, &build_matrix(a, f)?, &vector(b.as_ref(), f, inner.n())?)?
        }
        BodyDesc::NormBall { field: f, n: d, q, radius } => {
            let (f, d) = space(*f, *d, field, n);
            let q = match q {
                Exponent::Finite(q) => *q,
                Exponent::Named(s) if s == "inf" => f64::INFINITY,
                Exponent::Named(s) => bail!("norm exponent must be a number or \"inf\", got {s:?}"),
            };
            make_norm_ball(f, d, q, *radius)?
        }
    })
}

pub enum Hyperplane {
    Real(RealHyperplane),
    Field(FHyperplane),
}

pub fn build_hyperplane(h: &HyperplaneDesc, field: Field) -> Result<Hyperplane> {
    Ok(match h.kind {
        HyperplaneType::Real => Hyperplane::Real(RealHyperplane::new(&h.normal)?),
        HyperplaneType::Field => Hyperplane::Field(FHyperplane::new(&FVector::from_real(field, &h.normal)?)?),
    })
}
