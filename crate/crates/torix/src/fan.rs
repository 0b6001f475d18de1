//! Fans of smooth projective toric varieties: parsing, validation, cone
//! enumeration, primitive collections, and point counts over finite fields.
//!
//! The ray order of the input document is the canonical coordinate order for
//! everything downstream (divisor vectors, torsor coordinates, monomials), so
//! all derived data is reproducible from the document alone.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{inverse_unimodular, IMat};
use crate::ratgeom::{fm_feasible, rat, Ineq, Rat};

/// Hard cap on the number of rays; primitive collections are found by a
/// bitmask sweep over subsets, so the cap keeps that sweep trivial.
pub const MAX_RAYS: usize = 20;

/// Canonically sorted subset of ray indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RaySet(Vec<usize>);

impl RaySet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        RaySet(indices)
    }

    pub fn empty() -> Self {
        RaySet(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset_of(&self, other: &RaySet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn intersect(&self, other: &RaySet) -> RaySet {
        RaySet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    /// Indices of `{0..m-1}` not in this set.
    pub fn complement(&self, m: usize) -> RaySet {
        RaySet((0..m).filter(|&i| !self.contains(i)).collect())
    }

    pub fn mask(&self) -> u32 {
        self.0.iter().fold(0u32, |acc, &i| acc | (1 << i))
    }

    pub fn from_mask(mut mask: u32) -> Self {
        let mut v = Vec::new();
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            v.push(i);
            mask &= mask - 1;
        }
        RaySet(v)
    }
}

impl std::fmt::Display for RaySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A complete smooth fan, given by its rays and maximal cones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub max_cones: Vec<RaySet>,
}

impl Fan {
    /// Number of rays.
    pub fn m(&self) -> usize {
        self.rays.len()
    }

    /// Picard rank of the associated smooth complete toric variety.
    pub fn picard_rank(&self) -> usize {
        self.m() - self.dim
    }

    /// Matrix with one row per ray (the map from divisor space to N).
    pub fn ray_matrix(&self) -> IMat {
        IMat::from_rows(&self.rays)
    }

    /// Inverse of the generator matrix of a smooth max cone: row `k` is the
    /// integer functional extracting the coefficient of the cone's `k`-th ray.
    pub fn cone_dual_rows(&self, cone: &RaySet) -> Result<IMat> {
        let n = self.dim;
        if cone.len() != n {
            return Err(Error::InvalidFan(format!(
                "max cone {cone} does not have {n} generators"
            )));
        }
        let mut m = IMat::zeros(n, n);
        for (j, ray_idx) in cone.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = self.rays[ray_idx][i];
            }
        }
        inverse_unimodular(&m)
            .map_err(|_| Error::InvalidFan(format!("max cone {cone} is not unimodular")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Convert failures into an error listing every failing check.
    pub fn into_result(self) -> Result<()> {
        if self.all_pass() {
            return Ok(());
        }
        let msgs: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                format!("{}: {}", c.name, c.witness.as_deref().unwrap_or("failed"))
            })
            .collect();
        Err(Error::InvalidFan(msgs.join("; ")))
    }
}

/// Parse a fan document (JSON with fields `name`, `dim`, `rays`, `max_cones`).
/// Structural checks only; geometric invariants are the job of
/// [`validate_fan`].
pub fn parse_fan(text: &str) -> Result<Fan> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        #[serde(default)]
        name: Option<String>,
        dim: usize,
        rays: Vec<Vec<i64>>,
        max_cones: Vec<Vec<usize>>,
    }
    let doc: Doc = serde_json::from_str(text)
        .map_err(|e| Error::Document(format!("malformed fan document: {e}")))?;
    if doc.dim == 0 {
        return Err(Error::Document("fan dimension must be positive".into()));
    }
    let m = doc.rays.len();
    if m == 0 {
        return Err(Error::Document("fan has no rays".into()));
    }
    if m > MAX_RAYS {
        return Err(Error::UnsupportedScale(format!(
            "fan has {m} rays; at most {MAX_RAYS} are supported"
        )));
    }
    for (i, r) in doc.rays.iter().enumerate() {
        if r.len() != doc.dim {
            return Err(Error::Document(format!(
                "ray {i} has {} entries, expected dim = {}",
                r.len(),
                doc.dim
            )));
        }
    }
    for (k, c) in doc.max_cones.iter().enumerate() {
        if let Some(&bad) = c.iter().find(|&&i| i >= m) {
            return Err(Error::Document(format!(
                "max cone {k} references ray index {bad}, but there are only {m} rays"
            )));
        }
    }
    Ok(Fan {
        name: doc.name,
        dim: doc.dim,
        rays: doc.rays,
        max_cones: doc.max_cones.into_iter().map(RaySet::new).collect(),
    })
}

/// Run the four geometric checks: primitive-rays, simplicial-smooth,
/// fan-condition, complete.  Failures are report entries with witnesses,
/// never errors.
pub fn validate_fan(f: &Fan) -> ValidationReport {
    let mut checks = Vec::with_capacity(4);
    checks.push(check_primitive_rays(f));
    let smooth = check_simplicial_smooth(f);
    let smooth_ok = smooth.pass;
    checks.push(smooth);
    if smooth_ok {
        checks.push(check_fan_condition(f));
        checks.push(check_complete(f));
    } else {
        for name in ["fan-condition", "complete"] {
            checks.push(CheckResult {
                name,
                pass: false,
                witness: Some("not evaluated: requires smooth simplicial max cones".into()),
            });
        }
    }
    ValidationReport { checks }
}

/// Validate and turn any failure into an error.
pub fn require_valid(f: &Fan) -> Result<()> {
    validate_fan(f).into_result()
}

fn check_primitive_rays(f: &Fan) -> CheckResult {
    for (i, r) in f.rays.iter().enumerate() {
        if r.iter().all(|&x| x == 0) {
            return fail("primitive-rays", format!("ray {i} is zero"));
        }
        let g = r.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        if g != 1 {
            return fail(
                "primitive-rays",
                format!("ray {i} = {r:?} is not primitive (gcd {g})"),
            );
        }
        for (j, s) in f.rays.iter().enumerate().take(i) {
            if r == s {
                return fail("primitive-rays", format!("rays {j} and {i} are equal"));
            }
        }
    }
    pass("primitive-rays")
}

fn check_simplicial_smooth(f: &Fan) -> CheckResult {
    let n = f.dim;
    if f.max_cones.is_empty() {
        return fail("simplicial-smooth", "fan has no max cones".into());
    }
    for (k, c) in f.max_cones.iter().enumerate() {
        if c.len() != n {
            return fail(
                "simplicial-smooth",
                format!("max cone {k} = {c} has {} distinct generators, expected {n}", c.len()),
            );
        }
        let rows: Vec<Vec<i64>> = c.iter().map(|i| f.rays[i].clone()).collect();
        let det = IMat::from_rows(&rows).det();
        if det.abs() != 1 {
            return fail(
                "simplicial-smooth",
                format!("max cone {k} = {c} has determinant {det}, expected ±1"),
            );
        }
    }
    pass("simplicial-smooth")
}

/// Exact pairwise check that cone intersections are common faces.  For smooth
/// cones σ, σ′ with shared rays S, the intersection equals cone(S) unless some
/// point of σ ∩ σ′ has a positive σ-coordinate outside S — a feasibility
/// question over the dual functionals, decided by Fourier–Motzkin.
fn check_fan_condition(f: &Fan) -> CheckResult {
    let n = f.dim;
    let m = f.m();
    for i in 0..m {
        if !f.max_cones.iter().any(|c| c.contains(i)) {
            return fail("fan-condition", format!("ray {i} is not in any max cone"));
        }
    }
    for (k, c) in f.max_cones.iter().enumerate() {
        if let Some(j) = f.max_cones.iter().take(k).position(|d| d == c) {
            return fail(
                "fan-condition",
                format!("max cones {j} and {k} are identical ({c})"),
            );
        }
    }
    let duals: Vec<IMat> = match f
        .max_cones
        .iter()
        .map(|c| f.cone_dual_rows(c))
        .collect::<Result<_>>()
    {
        Ok(d) => d,
        Err(e) => return fail("fan-condition", e.to_string()),
    };
    let as_ineq = |row: &[i64]| Ineq::new(row.iter().map(|&x| rat(x)).collect(), Rat::zero());
    for a in 0..f.max_cones.len() {
        for b in a + 1..f.max_cones.len() {
            let ca = &f.max_cones[a];
            let cb = &f.max_cones[b];
            let shared = ca.intersect(cb);
            let mut base: Vec<Ineq> = Vec::with_capacity(2 * n + 1);
            for r in 0..n {
                base.push(as_ineq(duals[a].row(r)));
                base.push(as_ineq(duals[b].row(r)));
            }
            for (pos, ray) in ca.iter().enumerate() {
                if shared.contains(ray) {
                    continue;
                }
                let mut sys = base.clone();
                sys.push(Ineq::new(
                    duals[a].row(pos).iter().map(|&x| rat(x)).collect(),
                    Rat::one(),
                ));
                if fm_feasible(&sys, n) {
                    return fail(
                        "fan-condition",
                        format!(
                            "max cones {a} = {ca} and {b} = {cb} meet outside their common face {shared}"
                        ),
                    );
                }
            }
        }
    }
    pass("fan-condition")
}

/// Facet pairing: collect every (n−1)-generator facet of every max cone and
/// count the max cones containing it; completeness of a pure smooth
/// simplicial fan is equivalent to every facet lying in exactly two max cones
/// plus connectivity of the resulting adjacency graph.
fn check_complete(f: &Fan) -> CheckResult {
    let facets = facet_table(f);
    for (facet, cones) in &facets {
        if cones.len() != 2 {
            return fail(
                "complete",
                format!(
                    "facet {} of max cone {} lies in {} max cone(s), expected 2",
                    facet,
                    cones[0],
                    cones.len()
                ),
            );
        }
    }
    // adjacency connectivity
    let nc = f.max_cones.len();
    let mut adj = vec![Vec::new(); nc];
    for cones in facets.values() {
        adj[cones[0]].push(cones[1]);
        adj[cones[1]].push(cones[0]);
    }
    let mut seen = vec![false; nc];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    if let Some(lonely) = seen.iter().position(|&s| !s) {
        return fail(
            "complete",
            format!("max cone {lonely} is disconnected from max cone 0 in the facet graph"),
        );
    }
    pass("complete")
}

/// Every (n−1)-subset of every max cone, mapped to the max cones containing it.
fn facet_table(f: &Fan) -> BTreeMap<RaySet, Vec<usize>> {
    let n = f.dim;
    let mut facets: BTreeMap<RaySet, Vec<usize>> = BTreeMap::new();
    for (k, c) in f.max_cones.iter().enumerate() {
        let idx: Vec<usize> = c.iter().collect();
        for drop in 0..n {
            let facet: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != drop)
                .map(|(_, &i)| i)
                .collect();
            let entry = facets.entry(RaySet::new(facet)).or_default();
            if !entry.contains(&k) {
                entry.push(k);
            }
        }
    }
    facets
}

/// A shared facet between two adjacent max cones.
#[derive(Clone, Debug)]
pub struct Wall {
    pub facet: RaySet,
    pub cones: (usize, usize),
}

/// All walls of a validated complete fan, sorted by facet.
pub fn walls(f: &Fan) -> Result<Vec<Wall>> {
    let mut out = Vec::new();
    for (facet, cones) in facet_table(f) {
        if cones.len() != 2 {
            return Err(Error::InvalidFan(format!(
                "facet {} lies in {} max cone(s), expected 2",
                facet,
                cones.len()
            )));
        }
        out.push(Wall { facet, cones: (cones[0], cones[1]) });
    }
    Ok(out)
}

/// All cones of the fan as ray sets, grouped by dimension 0..=n.  Each face
/// appears exactly once; the zero cone is the empty set.
pub fn all_cones(f: &Fan) -> Vec<Vec<RaySet>> {
    let n = f.dim;
    let mut groups: Vec<std::collections::BTreeSet<RaySet>> = vec![Default::default(); n + 1];
    for c in &f.max_cones {
        let idx: Vec<usize> = c.iter().collect();
        for mask in 0u32..(1 << idx.len()) {
            let face: Vec<usize> = (0..idx.len()).filter(|&p| mask & (1 << p) != 0).map(|p| idx[p]).collect();
            let d = face.len();
            groups[d].insert(RaySet::new(face));
        }
    }
    groups.into_iter().map(|g| g.into_iter().collect()).collect()
}

/// Minimal sets of rays not contained in any single cone: `C` is primitive
/// when no max cone contains all of `C` but every proper subset of `C` lies
/// in some max cone.  Output sorted lexicographically.
pub fn primitive_collections(f: &Fan) -> Vec<RaySet> {
    let m = f.m();
    assert!(m <= MAX_RAYS);
    let cone_masks: Vec<u32> = f.max_cones.iter().map(|c| c.mask()).collect();
    let covered = |mask: u32| cone_masks.iter().any(|&c| mask & !c == 0);
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << m) {
        if mask.count_ones() < 2 || covered(mask) {
            continue;
        }
        let mut minimal = true;
        let mut rest = mask;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            if !covered(mask & !bit) {
                minimal = false;
                break;
            }
            rest &= rest - 1;
        }
        if minimal {
            out.push(RaySet::from_mask(mask));
        }
    }
    out.sort();
    out
}

/// Smallest size of a primitive collection (written `f` in reports).
pub fn min_collection_size(f: &Fan) -> Result<usize> {
    primitive_collections(f)
        .iter()
        .map(RaySet::len)
        .min()
        .ok_or_else(|| Error::InvalidFan("fan has no primitive collection".into()))
}

/// Number of points of the toric variety over the field with `q` elements:
/// the orbit decomposition gives Σ over cones of (q−1)^(n − dim σ).
pub fn count_points_mod_p(f: &Fan, q: &BigUint) -> Result<BigUint> {
    if q < &BigUint::from(2u32) {
        return Err(Error::InvalidConfig(format!("field size must be at least 2, got {q}")));
    }
    let n = f.dim;
    let qm1 = q - BigUint::one();
    let mut total = BigUint::ZERO;
    for (d, group) in all_cones(f).iter().enumerate() {
        total += BigUint::from(group.len()) * qm1.pow((n - d) as u32);
    }
    Ok(total)
}

/// SHA-256 of the canonical geometry document `{dim, rays, max_cones}`
/// (name excluded), as lowercase hex.
pub fn fan_hash(f: &Fan) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        dim: usize,
        rays: &'a [Vec<i64>],
        max_cones: &'a [RaySet],
    }
    let doc = Canonical { dim: f.dim, rays: &f.rays, max_cones: &f.max_cones };
    let json = serde_json::to_string(&doc).expect("serialization cannot fail");
    let mut h = Sha256::new();
    h.update(json.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn pass(name: &'static str) -> CheckResult {
    CheckResult { name, pass: true, witness: None }
}

fn fail(name: &'static str, witness: String) -> CheckResult {
    CheckResult { name, pass: false, witness: Some(witness) }
}

// ---------------------------------------------------------------------------
// Built-in fans
// ---------------------------------------------------------------------------

/// A named fan from the built-in library, together with the default growth
/// direction used by the command line (given as its pairing with each ray
/// class; the anticanonical direction where that is consistent, otherwise the
/// smallest adjustment making it a genuine dual vector).
#[derive(Clone, Debug)]
pub struct BuiltinFan {
    pub fan: Fan,
    pub default_u: Vec<i64>,
}

pub const BUILTIN_NAMES: [&str; 9] =
    ["P1", "P2", "P3", "P1xP1", "F1", "F2", "dP8", "dP7", "dP6"];

pub fn builtin_fan(name: &str) -> Result<BuiltinFan> {
    let (dim, rays, cones, default_u): (usize, Vec<Vec<i64>>, Vec<Vec<usize>>, Vec<i64>) =
        match name {
            "P1" => (1, vec![vec![1], vec![-1]], vec![vec![0], vec![1]], vec![1, 1]),
            "P2" => (
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 0]],
                vec![1, 1, 1],
            ),
            "P3" => (
                3,
                vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]],
                vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
                vec![1, 1, 1, 1],
            ),
            "P1xP1" => (
                2,
                vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
                vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]],
                vec![1, 1, 1, 1],
            ),
            "F1" => (
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
                vec![1, 1, 1, 2],
            ),
            "F2" => (
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, 2], vec![0, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
                vec![1, 1, 1, 3],
            ),
            "dP8" => (
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![1, 1]],
                vec![vec![0, 3], vec![3, 1], vec![1, 2], vec![2, 0]],
                vec![1, 1, 2, 1],
            ),
            "dP7" => (
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![1, 1], vec![-1, 0]],
                vec![vec![0, 3], vec![3, 1], vec![1, 4], vec![4, 2], vec![2, 0]],
                vec![2, 1, 2, 1, 1],
            ),
            "dP6" => (
                2,
                vec![
                    vec![1, 0],
                    vec![0, 1],
                    vec![-1, -1],
                    vec![1, 1],
                    vec![-1, 0],
                    vec![0, -1],
                ],
                vec![
                    vec![0, 3],
                    vec![3, 1],
                    vec![1, 4],
                    vec![4, 2],
                    vec![2, 5],
                    vec![5, 0],
                ],
                vec![1, 1, 1, 1, 1, 1],
            ),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown builtin fan '{name}' (available: {})",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
    let fan = Fan {
        name: Some(name.to_string()),
        dim,
        rays,
        max_cones: cones.into_iter().map(RaySet::new).collect(),
    };
    Ok(BuiltinFan { fan, default_u })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Fan {
        builtin_fan("P2").unwrap().fan
    }

    fn f1() -> Fan {
        builtin_fan("F1").unwrap().fan
    }

    fn p1xp1() -> Fan {
        builtin_fan("P1xP1").unwrap().fan
    }

    #[test]
    fn parse_basic_documents() {
        let f = parse_fan(
            r#"{"dim": 2, "rays": [[1,0],[0,1],[-1,-1]], "max_cones": [[0,1],[1,2],[2,0]]}"#,
        )
        .unwrap();
        assert_eq!(f.dim, 2);
        assert_eq!(f.m(), 3);
        let f = parse_fan(r#"{"dim": 1, "rays": [[1],[-1]], "max_cones": [[0],[1]]}"#).unwrap();
        assert_eq!(f.dim, 1);
        assert_eq!(f.m(), 2);
    }

    #[test]
    fn parse_accepts_nonprimitive_ray_but_validate_rejects_it() {
        let f = parse_fan(
            r#"{"dim": 2, "rays": [[2,2],[0,1],[-1,-1]], "max_cones": [[0,1],[1,2],[2,0]]}"#,
        )
        .unwrap();
        let report = validate_fan(&f);
        let prim = report.checks.iter().find(|c| c.name == "primitive-rays").unwrap();
        assert!(!prim.pass);
        assert!(prim.witness.as_ref().unwrap().contains("not primitive"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_fan("not json"), Err(Error::Document(_))));
        // ray of wrong dimension
        let e = parse_fan(r#"{"dim": 2, "rays": [[1,0],[1]], "max_cones": [[0,1]]}"#);
        assert!(matches!(e, Err(Error::Document(_))));
        // cone index out of range
        let e = parse_fan(r#"{"dim": 1, "rays": [[1],[-1]], "max_cones": [[0],[2]]}"#);
        assert!(matches!(e, Err(Error::Document(_))));
    }

    #[test]
    fn validate_standard_fans() {
        for name in BUILTIN_NAMES {
            let f = builtin_fan(name).unwrap().fan;
            let report = validate_fan(&f);
            assert!(report.all_pass(), "{name}: {:?}", report.checks);
        }
    }

    #[test]
    fn lone_cone_is_incomplete_with_facet_witness() {
        let f = parse_fan(r#"{"dim": 2, "rays": [[1,0],[0,1]], "max_cones": [[0,1]]}"#).unwrap();
        let report = validate_fan(&f);
        let complete = report.checks.iter().find(|c| c.name == "complete").unwrap();
        assert!(!complete.pass);
        assert!(complete.witness.as_ref().unwrap().contains("facet"));
        // the other named checks do pass for this fragment
        assert!(report.checks.iter().find(|c| c.name == "simplicial-smooth").unwrap().pass);
    }

    #[test]
    fn overlapping_cones_fail_fan_condition() {
        // cone(e1, e2) and cone(e1, e1+e2) overlap without a common face
        let f = parse_fan(
            r#"{"dim": 2, "rays": [[1,0],[0,1],[1,1]], "max_cones": [[0,1],[0,2]]}"#,
        )
        .unwrap();
        let report = validate_fan(&f);
        let fc = report.checks.iter().find(|c| c.name == "fan-condition").unwrap();
        assert!(!fc.pass, "{:?}", fc);
        assert!(fc.witness.as_ref().unwrap().contains("common face"));
    }

    #[test]
    fn non_unimodular_cone_fails_smoothness() {
        // cone((1,0),(1,2)) has determinant 2
        let f = parse_fan(
            r#"{"dim": 2, "rays": [[1,0],[1,2],[-1,-1]], "max_cones": [[0,1],[1,2],[2,0]]}"#,
        )
        .unwrap();
        let report = validate_fan(&f);
        let sm = report.checks.iter().find(|c| c.name == "simplicial-smooth").unwrap();
        assert!(!sm.pass);
        assert!(sm.witness.as_ref().unwrap().contains("determinant 2"));
    }

    #[test]
    fn cone_enumeration_counts() {
        let count = |f: &Fan| all_cones(f).iter().map(Vec::len).collect::<Vec<_>>();
        let p1 = builtin_fan("P1").unwrap().fan;
        assert_eq!(count(&p1), vec![1, 2]);
        assert_eq!(count(&p2()), vec![1, 3, 3]);
        assert_eq!(count(&f1()), vec![1, 4, 4]);
    }

    #[test]
    fn primitive_collections_of_standard_fans() {
        assert_eq!(primitive_collections(&p2()), vec![RaySet::new(vec![0, 1, 2])]);
        assert_eq!(
            primitive_collections(&p1xp1()),
            vec![RaySet::new(vec![0, 1]), RaySet::new(vec![2, 3])]
        );
        assert_eq!(
            primitive_collections(&f1()),
            vec![RaySet::new(vec![0, 2]), RaySet::new(vec![1, 3])]
        );
        // hexagon: all nine non-adjacent pairs
        let dp6 = builtin_fan("dP6").unwrap().fan;
        assert_eq!(primitive_collections(&dp6).len(), 9);
        let dp7 = builtin_fan("dP7").unwrap().fan;
        assert_eq!(primitive_collections(&dp7).len(), 5);
        let dp8 = builtin_fan("dP8").unwrap().fan;
        assert_eq!(primitive_collections(&dp8).len(), 2);
        let p3 = builtin_fan("P3").unwrap().fan;
        assert_eq!(primitive_collections(&p3), vec![RaySet::new(vec![0, 1, 2, 3])]);
    }

    #[test]
    fn collections_meet_the_outside_of_every_max_cone() {
        for name in BUILTIN_NAMES {
            let f = builtin_fan(name).unwrap().fan;
            for c in primitive_collections(&f) {
                for cone in &f.max_cones {
                    assert!(
                        c.iter().any(|i| !cone.contains(i)),
                        "{name}: collection {c} inside max cone {cone}"
                    );
                }
            }
        }
    }

    #[test]
    fn min_collection_sizes() {
        let p1 = builtin_fan("P1").unwrap().fan;
        assert_eq!(min_collection_size(&p2()).unwrap(), 3);
        assert_eq!(min_collection_size(&f1()).unwrap(), 2);
        assert_eq!(min_collection_size(&p1).unwrap(), 2);
    }

    #[test]
    fn point_counts_over_small_fields() {
        let q = |x: u32| BigUint::from(x);
        assert_eq!(count_points_mod_p(&p2(), &q(2)).unwrap(), q(7));
        assert_eq!(count_points_mod_p(&p1xp1(), &q(3)).unwrap(), q(16));
        assert_eq!(count_points_mod_p(&f1(), &q(2)).unwrap(), q(9));
        assert!(matches!(
            count_points_mod_p(&p2(), &q(1)),
            Err(Error::InvalidConfig(_))
        ));
    }

    /// Independent check of the orbit-sum point count: over F_p, points of
    /// the variety correspond to coordinate tuples whose zero set contains no
    /// primitive collection, up to the free torus action of rank t = m − n.
    #[test]
    fn point_count_matches_brute_force() {
        for name in ["P1", "P2", "P1xP1", "F1", "dP8"] {
            let f = builtin_fan(name).unwrap().fan;
            let m = f.m();
            let t = f.picard_rank() as u32;
            let pcs = primitive_collections(&f);
            for p in [2u64, 3, 5, 7, 11, 13] {
                let mut good = 0u64;
                let total = p.pow(m as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut zero_mask: u32 = 0;
                    for i in 0..m {
                        if c % p == 0 {
                            zero_mask |= 1 << i;
                        }
                        c /= p;
                    }
                    if pcs.iter().all(|pc| pc.mask() & !zero_mask != 0) {
                        good += 1;
                    }
                }
                let torus_order = (p - 1).pow(t);
                assert_eq!(good % torus_order, 0, "{name} p={p}");
                let expected = BigUint::from(good / torus_order);
                assert_eq!(count_points_mod_p(&f, &BigUint::from(p)).unwrap(), expected, "{name} p={p}");
            }
        }
    }

    #[test]
    fn cone_counts_reproduce_point_counts() {
        for name in BUILTIN_NAMES {
            let f = builtin_fan(name).unwrap().fan;
            let groups = all_cones(&f);
            for q in [2u64, 3, 4, 5, 9] {
                let mut total = 0u64;
                for (d, g) in groups.iter().enumerate() {
                    total += g.len() as u64 * (q - 1).pow((f.dim - d) as u32);
                }
                assert_eq!(
                    count_points_mod_p(&f, &BigUint::from(q)).unwrap(),
                    BigUint::from(total)
                );
            }
        }
    }

    #[test]
    fn walls_of_the_plane_fans() {
        let w = walls(&p2()).unwrap();
        assert_eq!(w.len(), 3);
        let w = walls(&f1()).unwrap();
        assert_eq!(w.len(), 4);
        // the one-dimensional fan has a single (empty) wall between its cones
        let p1 = builtin_fan("P1").unwrap().fan;
        let w = walls(&p1).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].facet.is_empty());
    }

    #[test]
    fn hash_ignores_name_and_tracks_geometry() {
        let mut a = p2();
        let h1 = fan_hash(&a);
        a.name = Some("renamed".into());
        assert_eq!(fan_hash(&a), h1);
        a.rays[0] = vec![1, 1];
        assert_ne!(fan_hash(&a), h1);
        assert_eq!(h1.len(), 64);
    }

    #[test]
    fn ray_set_basics() {
        let s = RaySet::new(vec![3, 1, 3]);
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(s.mask(), 0b1010);
        assert_eq!(RaySet::from_mask(0b1010), s);
        assert_eq!(s.complement(4).indices(), &[0, 2]);
        assert!(s.is_subset_of(&RaySet::new(vec![0, 1, 3])));
        assert!(!RaySet::new(vec![0, 1, 3]).is_subset_of(&s));
        assert_eq!(format!("{s}"), "{1,3}");
    }
}
