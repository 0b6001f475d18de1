//! Height-window regions: finite unions of polyhedra in the space of
//! multi-height vectors, given by two-sided bounds on divisor-class pairings.
//!
//! A region document constrains quantities `a([D])` for divisor vectors `[D]`;
//! compilation turns each divisor into integer coordinates in the ample
//! basis, so membership of a height vector is an integer combination of its
//! components.  Bounds written as `log(p/q)` keep their exact rational
//! preimage, which later allows boundary hits to be resolved in exact
//! integer arithmetic.

use num_bigint::BigInt;
use num_traits::Signed;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::picard::{class_of, AmpleBasis, GrowthDirection, PicardData};
use crate::ratgeom::{ln_bigint, rat, recession_unbounded, Ineq, Rat};

/// One endpoint of a window: its float value, and the exact number whose log
/// it is, when the document said so explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSpec {
    pub value: f64,
    /// `Some(r)` when the bound was given as `log(r)` with rational r > 0.
    pub exact: Option<Rat>,
}

impl BoundSpec {
    pub fn from_f64(value: f64) -> Self {
        BoundSpec { value, exact: None }
    }

    pub fn from_log_rat(r: Rat) -> Self {
        let value = ln_bigint(r.numer()) - ln_bigint(r.denom());
        BoundSpec { value, exact: Some(r) }
    }
}

/// `min ≤ a([divisor]) ≤ max`, with either side possibly absent and each
/// side open or closed.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub divisor: Vec<i64>,
    pub min: Option<BoundSpec>,
    pub max: Option<BoundSpec>,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
}

/// A finite union of constraint polyhedra.
#[derive(Clone, Debug)]
pub struct Region {
    pub polyhedra: Vec<Vec<Constraint>>,
}

fn parse_bound(v: &Value, what: &str) -> Result<Option<BoundSpec>> {
    match v {
        Value::Null => Ok(None),
        Value::Number(x) => {
            let f = x
                .as_f64()
                .ok_or_else(|| Error::Document(format!("{what}: number out of range")))?;
            if !f.is_finite() {
                return Err(Error::Document(format!("{what}: bound must be finite")));
            }
            Ok(Some(BoundSpec::from_f64(f)))
        }
        Value::String(s) => {
            let inner = s
                .trim()
                .strip_prefix("log(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| {
                    Error::Document(format!(
                        "{what}: string bound must look like \"log(p/q)\", got {s:?}"
                    ))
                })?;
            let (p, q) = match inner.split_once('/') {
                Some((p, q)) => (p.trim(), q.trim()),
                None => (inner.trim(), "1"),
            };
            let p: BigInt = p
                .parse()
                .map_err(|_| Error::Document(format!("{what}: bad numerator {p:?}")))?;
            let q: BigInt = q
                .parse()
                .map_err(|_| Error::Document(format!("{what}: bad denominator {q:?}")))?;
            if !p.is_positive() || !q.is_positive() {
                return Err(Error::Document(format!(
                    "{what}: log argument must be a positive rational"
                )));
            }
            Ok(Some(BoundSpec::from_log_rat(Rat::new(p, q))))
        }
        other => Err(Error::Document(format!(
            "{what}: bound must be a number, a \"log(p/q)\" string, or null, got {other}"
        ))),
    }
}

/// Parse a region document: a JSON array of polyhedra (each an array of
/// constraint objects), or an object `{"polyhedra": [...]}`.
pub fn parse_region(text: &str) -> Result<Region> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Document(format!("malformed region document: {e}")))?;
    let polys_value = match &root {
        Value::Array(_) => &root,
        Value::Object(map) => map.get("polyhedra").ok_or_else(|| {
            Error::Document("region object must have a \"polyhedra\" field".into())
        })?,
        _ => {
            return Err(Error::Document(
                "region document must be an array of polyhedra".into(),
            ))
        }
    };
    let Value::Array(polys) = polys_value else {
        return Err(Error::Document("\"polyhedra\" must be an array".into()));
    };
    if polys.is_empty() {
        return Err(Error::Document("region has no polyhedra".into()));
    }
    let mut out = Vec::with_capacity(polys.len());
    for (i, poly) in polys.iter().enumerate() {
        let Value::Array(cons) = poly else {
            return Err(Error::Document(format!(
                "polyhedron {i} must be an array of constraints"
            )));
        };
        if cons.is_empty() {
            return Err(Error::Document(format!("polyhedron {i} has no constraints")));
        }
        let mut list = Vec::with_capacity(cons.len());
        for (j, c) in cons.iter().enumerate() {
            let what = format!("polyhedron {i} constraint {j}");
            let Value::Object(obj) = c else {
                return Err(Error::Document(format!("{what} must be an object")));
            };
            for key in obj.keys() {
                if !matches!(
                    key.as_str(),
                    "divisor" | "min" | "max" | "min_inclusive" | "max_inclusive"
                ) {
                    return Err(Error::Document(format!("{what}: unknown field {key:?}")));
                }
            }
            let divisor: Vec<i64> = serde_json::from_value(
                obj.get("divisor")
                    .ok_or_else(|| Error::Document(format!("{what}: missing divisor")))?
                    .clone(),
            )
            .map_err(|e| Error::Document(format!("{what}: bad divisor: {e}")))?;
            let min = match obj.get("min") {
                Some(v) => parse_bound(v, &format!("{what} min"))?,
                None => None,
            };
            let max = match obj.get("max") {
                Some(v) => parse_bound(v, &format!("{what} max"))?,
                None => None,
            };
            let min_inclusive = match obj.get("min_inclusive") {
                Some(Value::Bool(b)) => *b,
                None => true,
                _ => return Err(Error::Document(format!("{what}: min_inclusive must be a bool"))),
            };
            let max_inclusive = match obj.get("max_inclusive") {
                Some(Value::Bool(b)) => *b,
                None => false,
                _ => return Err(Error::Document(format!("{what}: max_inclusive must be a bool"))),
            };
            list.push(Constraint { divisor, min, max, min_inclusive, max_inclusive });
        }
        out.push(list);
    }
    Ok(Region { polyhedra: out })
}

/// A constraint resolved against the fan: the divisor's class and its integer
/// coordinates in the ample basis.
#[derive(Clone, Debug)]
pub struct CompiledConstraint {
    pub divisor: Vec<i64>,
    pub class: Vec<i64>,
    /// Pairing with a height vector h is `Σ_k coords[k] · h[k]`.
    pub coords: Vec<i64>,
    pub min: Option<BoundSpec>,
    pub max: Option<BoundSpec>,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
}

impl CompiledConstraint {
    pub fn pair_h(&self, h: &[f64]) -> f64 {
        self.coords.iter().zip(h).map(|(&c, &x)| c as f64 * x).sum()
    }
}

/// A region compiled to ample-basis coordinates, each polyhedron certified
/// bounded.
#[derive(Clone, Debug)]
pub struct CompiledRegion {
    pub t: usize,
    pub polyhedra: Vec<Vec<CompiledConstraint>>,
}

/// Exact inequality system of one compiled polyhedron over R^t (closed form:
/// inclusivity flags are dropped, which never changes boundedness or
/// volumes).
pub fn poly_ineqs(poly: &[CompiledConstraint]) -> Vec<Ineq> {
    let mut out = Vec::new();
    for c in poly {
        let coords: Vec<Rat> = c.coords.iter().map(|&x| rat(x)).collect();
        if let Some(lo) = &c.min {
            let rhs = bound_rat(lo);
            out.push(Ineq::new(coords.clone(), rhs));
        }
        if let Some(hi) = &c.max {
            let rhs = -bound_rat(hi);
            out.push(Ineq::new(coords.iter().map(|x| -x.clone()).collect(), rhs));
        }
    }
    out
}

fn bound_rat(b: &BoundSpec) -> Rat {
    // exact log-rational bounds have irrational positions in height space;
    // for polyhedral geometry only the float position matters, snapped to an
    // exact rational
    Rat::from_float(b.value).unwrap_or_else(|| rat(0))
}

/// Resolve every divisor against the Picard data and ample basis, and check
/// each polyhedron is bounded (its constraint classes must positively span
/// the class space).
pub fn compile_region(
    pd: &PicardData,
    ab: &AmpleBasis,
    region: &Region,
) -> Result<CompiledRegion> {
    let t = pd.t;
    let mut polyhedra = Vec::with_capacity(region.polyhedra.len());
    for (i, poly) in region.polyhedra.iter().enumerate() {
        let mut compiled = Vec::with_capacity(poly.len());
        for c in poly {
            if c.divisor.len() != pd.m {
                return Err(Error::InvalidRegion(format!(
                    "polyhedron {i}: divisor has length {}, expected {}",
                    c.divisor.len(),
                    pd.m
                )));
            }
            if let (Some(lo), Some(hi)) = (&c.min, &c.max) {
                if lo.value > hi.value {
                    return Err(Error::InvalidRegion(format!(
                        "polyhedron {i}: empty window [{}, {}]",
                        lo.value, hi.value
                    )));
                }
            }
            if c.min.is_none() && c.max.is_none() {
                return Err(Error::InvalidRegion(format!(
                    "polyhedron {i}: constraint with neither bound"
                )));
            }
            let class = class_of(pd, &c.divisor)?;
            let coords = ab.coords(&class);
            compiled.push(CompiledConstraint {
                divisor: c.divisor.clone(),
                class,
                coords,
                min: c.min.clone(),
                max: c.max.clone(),
                min_inclusive: c.min_inclusive,
                max_inclusive: c.max_inclusive,
            });
        }
        let ineqs = poly_ineqs(&compiled);
        if recession_unbounded(&ineqs, t) {
            return Err(Error::InvalidRegion(format!(
                "polyhedron {i} is unbounded in height space"
            )));
        }
        polyhedra.push(compiled);
    }
    Ok(CompiledRegion { t, polyhedra })
}

/// The moving-window data: a growth direction and the scale B ≥ 1, with the
/// exact rational B kept when available.
#[derive(Clone, Debug)]
pub struct GrowthSpec {
    pub direction: GrowthDirection,
    pub b: f64,
    pub b_exact: Option<Rat>,
}

impl GrowthSpec {
    pub fn new(direction: GrowthDirection, b: f64) -> Result<Self> {
        if !(b >= 1.0) {
            return Err(Error::InvalidConfig(format!("B must be at least 1, got {b}")));
        }
        // every finite float is an exact dyadic rational, so the exact shift
        // is always available when the pairing is an integer
        let b_exact = Rat::from_float(b);
        Ok(GrowthSpec { direction, b, b_exact })
    }

    pub fn log_b(&self) -> f64 {
        self.b.ln()
    }
}

/// One window endpoint after shifting by `log(B)·⟨class,u⟩`: float position,
/// inclusivity, and when possible the exact rational `r·B^e` whose log it is.
#[derive(Clone, Debug)]
pub struct ShiftedBound {
    pub value: f64,
    pub inclusive: bool,
    pub exact: Option<Rat>,
}

/// A constraint with bounds already shifted to the window at scale B.
#[derive(Clone, Debug)]
pub struct PreparedConstraint {
    pub coords: Vec<i64>,
    pub lo: Option<ShiftedBound>,
    pub hi: Option<ShiftedBound>,
}

impl PreparedConstraint {
    pub fn pair_h(&self, h: &[f64]) -> f64 {
        self.coords.iter().zip(h).map(|(&c, &x)| c as f64 * x).sum()
    }
}

/// Region with all window endpoints materialized for a specific B.
#[derive(Clone, Debug)]
pub struct PreparedRegion {
    pub t: usize,
    pub polyhedra: Vec<Vec<PreparedConstraint>>,
}

/// Shift every bound by `log(B)^⟨class,u⟩`; with no growth spec the region is
/// used as-is.  Exact endpoints survive the shift when B is rational and the
/// pairing `⟨class,u⟩` is an integer.
pub fn prepare_region(region: &CompiledRegion, gs: Option<&GrowthSpec>) -> PreparedRegion {
    let polyhedra = region
        .polyhedra
        .iter()
        .map(|poly| {
            poly.iter()
                .map(|c| {
                    let (shift, exact_scale) = match gs {
                        None => (0.0, Some(rat(1))),
                        Some(g) => {
                            let e = g.direction.pair_class(&c.class);
                            let shift = g.log_b() * crate::ratgeom::rat_to_f64(&e);
                            let exact_scale = match (&g.b_exact, e.is_integer()) {
                                (Some(b), true) => {
                                    let k = num_traits::ToPrimitive::to_i32(&e.to_integer());
                                    k.map(|k| b.pow(k))
                                }
                                _ => None,
                            };
                            (shift, exact_scale)
                        }
                    };
                    let mk = |b: &Option<BoundSpec>, inclusive: bool| {
                        b.as_ref().map(|spec| ShiftedBound {
                            value: spec.value + shift,
                            inclusive,
                            exact: match (&spec.exact, &exact_scale) {
                                (Some(r), Some(s)) => Some(r * s),
                                _ => None,
                            },
                        })
                    };
                    PreparedConstraint {
                        coords: c.coords.clone(),
                        lo: mk(&c.min, c.min_inclusive),
                        hi: mk(&c.max, c.max_inclusive),
                    }
                })
                .collect()
        })
        .collect();
    PreparedRegion { t: region.t, polyhedra }
}

/// The standard window: `0 ≤ a(L_k) < log 2` for every ample basis class,
/// lower-inclusive and upper-exclusive, with exact endpoints 1 and 2.
pub fn default_unit_box(pd: &PicardData, ab: &AmpleBasis) -> Result<Region> {
    let mut constraints = Vec::with_capacity(ab.t());
    for class in &ab.classes {
        let divisor = crate::picard::lift_class(pd, class)?;
        constraints.push(Constraint {
            divisor,
            min: Some(BoundSpec::from_log_rat(rat(1))),
            max: Some(BoundSpec::from_log_rat(rat(2))),
            min_inclusive: true,
            max_inclusive: false,
        });
    }
    Ok(Region { polyhedra: vec![constraints] })
}

/// A single-polyhedron region bounding each ample basis coordinate in
/// `[lo_k, hi_k)`, built programmatically (used by tests and defaults).
pub fn box_region(pd: &PicardData, ab: &AmpleBasis, windows: &[(BoundSpec, BoundSpec)]) -> Result<Region> {
    assert_eq!(windows.len(), ab.t());
    let mut constraints = Vec::with_capacity(ab.t());
    for (class, (lo, hi)) in ab.classes.iter().zip(windows) {
        let divisor = crate::picard::lift_class(pd, class)?;
        constraints.push(Constraint {
            divisor,
            min: Some(lo.clone()),
            max: Some(hi.clone()),
            min_inclusive: true,
            max_inclusive: false,
        });
    }
    Ok(Region { polyhedra: vec![constraints] })
}
