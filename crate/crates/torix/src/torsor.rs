//! Integral points of the universal torsor: membership tests, multi-heights,
//! window membership with exact boundary resolution, constructive coordinate
//! bounds, and the pruned depth-first enumeration that produces exact counts.
//!
//! A candidate is a vector y ∈ Z^m of homogeneous coordinates.  It lies on
//! the torsor when every primitive collection of rays has coprime
//! coordinates; its k-th height is the maximum absolute value of the k-th
//! monomial basis evaluated at y.  Counting rational points means counting
//! torsor points with heights in a window and dividing by the 2^t sign
//! orbits.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fan::{primitive_collections, Fan};
use crate::picard::{is_ample, PicardData};
use crate::ratgeom::{fm_feasible, lp_max, rat, rat_to_f64, Ineq, LpOutcome, Rat};
use crate::region::{prepare_region, CompiledRegion, GrowthSpec, PreparedRegion};
use crate::scalar::Real;
use crate::sections::SectionBasis;

fn check_point(m: usize, y: &[BigInt]) -> Result<()> {
    if y.len() != m {
        return Err(Error::InvalidPoint(format!(
            "point has {} coordinates, expected {m}",
            y.len()
        )));
    }
    if y.iter().all(|v| v.is_zero()) {
        return Err(Error::InvalidPoint("the zero vector is excluded".into()));
    }
    Ok(())
}

/// Membership via primitive collections: every collection's coordinates must
/// be coprime (equivalently, no prime divides a whole collection).
pub fn is_integral_torsor_point(f: &Fan, y: &[BigInt]) -> Result<bool> {
    check_point(f.m(), y)?;
    for c in primitive_collections(f) {
        let mut g = BigInt::zero();
        for rho in c.iter() {
            g = g.gcd(&y[rho]);
        }
        if !g.is_one() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn mono_value_big(exps: &[i64], y: &[BigInt]) -> BigInt {
    let mut v = BigInt::one();
    for (e, yi) in exps.iter().zip(y) {
        if *e > 0 {
            v *= yi.pow(*e as u32);
        }
    }
    v
}

/// Membership via the section bases: for every k the monomial values of the
/// k-th basis class must have gcd 1 (with gcd(0, a) = |a|).
pub fn is_torsor_point_via_sections(sb: &SectionBasis, y: &[BigInt]) -> Result<bool> {
    let m = sb.monomials[0][0].len();
    check_point(m, y)?;
    for mk in &sb.monomials {
        let mut g = BigInt::zero();
        for exps in mk {
            g = g.gcd(&mono_value_big(exps, y));
            if g.is_one() {
                break;
            }
        }
        if !g.is_one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Heights of an integral point: float logs plus the exact maximizing
/// monomial value per basis class.
#[derive(Clone, Debug)]
pub struct MultiHeight {
    /// h[k] = log max_{D ∈ M_k} |y^D|.
    pub h: Vec<f64>,
    /// Per k, the index of a maximizing monomial and its absolute value.
    pub witnesses: Vec<(usize, BigInt)>,
}

pub fn multi_height(sb: &SectionBasis, y: &[BigInt]) -> Result<MultiHeight> {
    let m = sb.monomials[0][0].len();
    check_point(m, y)?;
    let mut h = Vec::with_capacity(sb.t());
    let mut witnesses = Vec::with_capacity(sb.t());
    for (k, mk) in sb.monomials.iter().enumerate() {
        let mut best: Option<(usize, BigInt)> = None;
        for (i, exps) in mk.iter().enumerate() {
            let v = mono_value_big(exps, y).abs();
            if best.as_ref().map_or(true, |(_, b)| v > *b) {
                best = Some((i, v));
            }
        }
        let (i, v) = best.unwrap();
        if v.is_zero() {
            return Err(Error::InvalidPoint(format!(
                "all monomials of basis class {k} vanish (outside the torsor closure)"
            )));
        }
        h.push(crate::ratgeom::ln_bigint(&v));
        witnesses.push((i, v));
    }
    Ok(MultiHeight { h, witnesses })
}

/// Heights of a real point, computed in log space so the sign-action
/// covariance holds to float precision.
pub fn multi_height_real<R: Real>(sb: &SectionBasis, y: &[R]) -> Result<Vec<R>> {
    let m = sb.monomials[0][0].len();
    if y.len() != m {
        return Err(Error::InvalidPoint(format!(
            "point has {} coordinates, expected {m}",
            y.len()
        )));
    }
    let mut h = Vec::with_capacity(sb.t());
    for (k, mk) in sb.monomials.iter().enumerate() {
        let mut best: Option<R> = None;
        for exps in mk {
            let mut log_val = R::zero();
            let mut dead = false;
            for (e, yi) in exps.iter().zip(y) {
                if *e > 0 {
                    if yi.is_zero() {
                        dead = true;
                        break;
                    }
                    log_val = log_val + R::of(*e as f64) * yi.abs().ln();
                }
            }
            if !dead && best.map_or(true, |b| log_val > b) {
                best = Some(log_val);
            }
        }
        match best {
            Some(b) => h.push(b),
            None => {
                return Err(Error::InvalidPoint(format!(
                    "all monomials of basis class {k} vanish (outside T(R))"
                )))
            }
        }
    }
    Ok(h)
}

/// Exact comparison of ∏_k H_k^{c_k} against a positive rational bound.
fn cmp_pairing_exact(coords: &[i64], heights: &[BigInt], bound: &Rat) -> std::cmp::Ordering {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (&c, hk) in coords.iter().zip(heights) {
        if c > 0 {
            num *= hk.pow(c as u32);
        } else if c < 0 {
            den *= hk.pow((-c) as u32);
        }
    }
    (num * bound.denom()).cmp(&(den * bound.numer()))
}

fn bound_side_ok(
    x: f64,
    coords: &[i64],
    bound: &crate::region::ShiftedBound,
    lower: bool,
    eps: f64,
    exact_heights: Option<&[BigInt]>,
    exact_boundary: bool,
) -> bool {
    let diff = x - bound.value;
    if diff.abs() > eps {
        return if lower { diff > 0.0 } else { diff < 0.0 };
    }
    // boundary hit within tolerance: resolve exactly when we can
    if exact_boundary {
        if let (Some(hs), Some(r)) = (exact_heights, &bound.exact) {
            let cmp = cmp_pairing_exact(coords, hs, r);
            return if lower {
                if bound.inclusive {
                    cmp != std::cmp::Ordering::Less
                } else {
                    cmp == std::cmp::Ordering::Greater
                }
            } else if bound.inclusive {
                cmp != std::cmp::Ordering::Greater
            } else {
                cmp == std::cmp::Ordering::Less
            };
        }
    }
    bound.inclusive
}

fn window_accepts(
    pr: &PreparedRegion,
    h: &[f64],
    exact_heights: Option<&[BigInt]>,
    eps: f64,
    exact_boundary: bool,
) -> bool {
    'poly: for poly in &pr.polyhedra {
        for c in poly {
            let x = c.pair_h(h);
            if let Some(lo) = &c.lo {
                if !bound_side_ok(x, &c.coords, lo, true, eps, exact_heights, exact_boundary) {
                    continue 'poly;
                }
            }
            if let Some(hi) = &c.hi {
                if !bound_side_ok(x, &c.coords, hi, false, eps, exact_heights, exact_boundary) {
                    continue 'poly;
                }
            }
        }
        return true;
    }
    false
}

/// Window membership for a plain real height vector; boundary hits within
/// `eps` follow the inclusivity flags (no exact refinement is available).
pub fn window_contains(pr: &PreparedRegion, h: &[f64], eps: f64) -> bool {
    window_accepts(pr, h, None, eps, false)
}

/// Window membership for a measured point: every constraint of some
/// polyhedron must hold, comparisons carry an absolute tolerance `eps`
/// (default 1e-9), and hits within the tolerance follow the inclusivity
/// flags unless `exact_boundary` resolves them by integer arithmetic.
pub fn in_region(
    mh: &MultiHeight,
    pr: &PreparedRegion,
    eps: f64,
    exact_boundary: bool,
) -> bool {
    let exact: Vec<BigInt> = mh.witnesses.iter().map(|(_, v)| v.clone()).collect();
    window_accepts(pr, &mh.h, Some(&exact), eps, exact_boundary)
}

fn prepared_poly_ineqs(poly: &[crate::region::PreparedConstraint]) -> Vec<Ineq> {
    let mut out = Vec::new();
    for c in poly {
        let coords: Vec<Rat> = c.coords.iter().map(|&x| crate::ratgeom::rat(x)).collect();
        if let Some(lo) = &c.lo {
            let rhs = Rat::from_float(lo.value).unwrap_or_else(|| crate::ratgeom::rat(0));
            out.push(Ineq::new(coords.clone(), rhs));
        }
        if let Some(hi) = &c.hi {
            let rhs = Rat::from_float(hi.value).unwrap_or_else(|| crate::ratgeom::rat(0));
            out.push(Ineq::new(coords.iter().map(|x| -x.clone()).collect(), -rhs));
        }
    }
    out
}

/// Largest value of `Σ coords_k h_k` over the prepared window, or None when
/// every polyhedron is empty.
fn sup_over_window(pr: &PreparedRegion, coords: &[i64]) -> Result<Option<f64>> {
    let objective: Vec<Rat> = coords.iter().map(|&c| crate::ratgeom::rat(c)).collect();
    let mut best: Option<f64> = None;
    for poly in &pr.polyhedra {
        let ineqs = prepared_poly_ineqs(poly);
        match lp_max(&ineqs, pr.t, &objective) {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                return Err(Error::Internal(
                    "window certified bounded but an objective is unbounded".into(),
                ))
            }
            LpOutcome::Value(v) => {
                let f = rat_to_f64(&v);
                best = Some(best.map_or(f, |b: f64| b.max(f)));
            }
        }
    }
    Ok(best)
}

/// A bound valid for every coordinate of an integral torsor point with
/// heights in the window: the least, over an ample class A among the basis
/// classes, their sum, and the anticanonical class when ample, of
/// exp(sup of a(A) over the shifted window).  Justification: each nonzero
/// coordinate divides some nonzero monomial value of A's basis, which the
/// height of A bounds.
pub fn coordinate_bounds(
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    gs: Option<&GrowthSpec>,
) -> Result<Vec<f64>> {
    let ab = &sb.basis;
    let pr = prepare_region(region, gs);
    let mut candidates: Vec<Vec<i64>> = ab.classes.clone();
    if is_ample(pd, &pd.anticanonical)? {
        candidates.push(pd.anticanonical.clone());
    }
    let mut sum = vec![0i64; pd.t];
    for class in &ab.classes {
        for (s, c) in sum.iter_mut().zip(class) {
            *s += c;
        }
    }
    candidates.push(sum);

    let mut best: Option<f64> = None;
    for class in &candidates {
        let coords = ab.coords(class);
        if let Some(s) = sup_over_window(&pr, &coords)? {
            let b = s.exp();
            best = Some(best.map_or(b, |x: f64| x.min(b)));
        }
    }
    // an empty window admits no points at all
    Ok(vec![best.unwrap_or(0.0); pd.m])
}

/// Per-coordinate sampling bounds for the real shell {y ∈ T(R) : h(y) in the
/// window}: exact suprema of |y_ρ|, one small exact LP per maximal cone.  The
/// divisibility argument behind `coordinate_bounds` fails over the reals (a
/// huge coordinate can hide behind a tiny cofactor), so the max-structure is
/// solved directly: on the cell of x = log|y| belonging to a maximal cone,
/// every class's height is attained by its unique monomial supported off the
/// cone, making all window constraints linear there.
pub fn real_coordinate_bounds(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    gs: Option<&GrowthSpec>,
) -> Result<Vec<f64>> {
    let pr = prepare_region(region, gs);
    let m = pd.m;
    let mut sup = vec![f64::NEG_INFINITY; m];
    for cone in &f.max_cones {
        let mask = cone.mask();
        // the argmax monomial of each class on this cell
        let mut verts: Vec<&Vec<i64>> = Vec::with_capacity(sb.t());
        for (k, mk) in sb.monomials.iter().enumerate() {
            let mut found: Option<&Vec<i64>> = None;
            for exps in mk {
                let meets_cone = exps
                    .iter()
                    .enumerate()
                    .any(|(rho, &e)| e > 0 && mask & (1 << rho) != 0);
                if !meets_cone {
                    if found.is_some() {
                        return Err(Error::Internal(format!(
                            "class {k} has two monomials supported off a maximal cone"
                        )));
                    }
                    found = Some(exps);
                }
            }
            verts.push(found.ok_or_else(|| {
                Error::Internal(format!(
                    "class {k} has no monomial supported off a maximal cone"
                ))
            })?);
        }
        // cell inequalities: each vertex monomial beats its whole class
        let mut cell: Vec<Ineq> = Vec::new();
        for (k, mk) in sb.monomials.iter().enumerate() {
            for exps in mk {
                if exps == verts[k] {
                    continue;
                }
                let coeffs: Vec<Rat> = (0..m).map(|r| rat(verts[k][r] - exps[r])).collect();
                cell.push(Ineq::new(coeffs, rat(0)));
            }
        }
        for poly in &pr.polyhedra {
            let mut sys = cell.clone();
            for c in poly {
                let mut w = vec![0i64; m];
                for (k, &g) in c.coords.iter().enumerate() {
                    for (wr, &vr) in w.iter_mut().zip(verts[k]) {
                        *wr += g * vr;
                    }
                }
                let coeffs: Vec<Rat> = w.iter().map(|&x| rat(x)).collect();
                if let Some(lo) = &c.lo {
                    let rhs = Rat::from_float(lo.value).unwrap_or_else(|| rat(0));
                    sys.push(Ineq::new(coeffs.clone(), rhs));
                }
                if let Some(hi) = &c.hi {
                    let rhs = Rat::from_float(hi.value).unwrap_or_else(|| rat(0));
                    sys.push(Ineq::new(coeffs.iter().map(|x| -x.clone()).collect(), -rhs));
                }
            }
            if !fm_feasible(&sys, m) {
                continue;
            }
            for rho in 0..m {
                let mut obj = vec![rat(0); m];
                obj[rho] = rat(1);
                match lp_max(&sys, m, &obj) {
                    LpOutcome::Infeasible => {}
                    LpOutcome::Unbounded => {
                        return Err(Error::UnsupportedScale(format!(
                            "the real height shell is unbounded in coordinate {rho}; \
                             its volume cannot be sampled"
                        )))
                    }
                    LpOutcome::Value(v) => {
                        let val = rat_to_f64(&v);
                        if val > sup[rho] {
                            sup[rho] = val;
                        }
                    }
                }
            }
        }
    }
    Ok(sup
        .iter()
        .map(|&s| if s == f64::NEG_INFINITY { 0.0 } else { s.exp() })
        .collect())
}

/// Knobs for the enumeration engine.
#[derive(Clone, Debug)]
pub struct EnumOptions {
    /// Absolute tolerance for float comparisons against window bounds.
    pub eps: f64,
    /// Resolve boundary-tolerance hits by exact integer comparison when the
    /// bound has an exact rational preimage.
    pub exact_boundary: bool,
    /// Abort with an error when the number of visited search nodes exceeds
    /// this.
    pub node_budget: u64,
    /// Track distinct normalized projective embeddings (the deduplication
    /// oracle); costs memory proportional to the count.
    pub collect_embeddings: bool,
    /// Multiply every coordinate bound by this factor (soundness testing:
    /// enlarged boxes must not change any count).
    pub bound_scale: f64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            eps: 1e-9,
            exact_boundary: false,
            node_budget: u64::MAX,
            collect_embeddings: false,
            bound_scale: 1.0,
        }
    }
}

/// Exact counts from one enumeration run.
#[derive(Clone, Debug, PartialEq)]
pub struct CountReport {
    /// Torsor points (gcd conditions hold) with heights in the window.
    pub torsor_count: u64,
    /// Those with every coordinate nonzero (above the dense torus).
    pub torus_count: u64,
    /// torsor_count − torus_count.
    pub boundary_count: u64,
    /// torsor_count / 2^t: the number of rational points.
    pub rational_count: u64,
    /// Search nodes visited.
    pub nodes: u64,
    /// Size of the enumerated integer box (before pruning).
    pub box_volume: f64,
    /// Distinct normalized embeddings, when collected.
    pub distinct_embeddings: Option<u64>,
}

struct Mono {
    k: usize,
    support: u32,
    exps: Vec<u8>,
}

struct Problem {
    m: usize,
    t: usize,
    monos: Vec<Mono>,
    /// Monomial indices containing each coordinate.
    per_coord: Vec<Vec<usize>>,
    occurrences: Vec<usize>,
    /// Per basis class: monomial indices, in the section-basis order (for
    /// embeddings).
    monos_by_k: Vec<Vec<usize>>,
    /// Value-space cap per basis class: any |y^D|, D ∈ M_k, of an accepted
    /// point is at most this.
    caps: Vec<u128>,
    /// Per coordinate: bound for the enumerated variable (actual value is
    /// variable × multiplier).
    var_bound: Vec<i64>,
    mult: Vec<i64>,
    pcs: Vec<u32>,
    pc_lists: Vec<Vec<usize>>,
    region: PreparedRegion,
    eps: f64,
    exact_boundary: bool,
    forbid_zero: bool,
    check_coprime: bool,
    collect_embeddings: bool,
}

fn upow_checked(base: u128, e: u8) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Largest r with r^e ≤ x.
fn iroot(x: u128, e: u8) -> u128 {
    if e <= 1 {
        return x;
    }
    if x == 0 {
        return 0;
    }
    let mut g = (x as f64).powf(1.0 / e as f64).floor() as u128;
    while upow_checked(g + 1, e).map_or(false, |p| p <= x) {
        g += 1;
    }
    while g > 0 && upow_checked(g, e).map_or(true, |p| p > x) {
        g -= 1;
    }
    g
}

fn build_problem(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    gs: Option<&GrowthSpec>,
    opts: &EnumOptions,
    mult: Vec<i64>,
    forbid_zero: bool,
    check_coprime: bool,
) -> Result<Option<Problem>> {
    let m = pd.m;
    let t = pd.t;
    let pr = prepare_region(region, gs);

    // caps on each height value over the shifted window
    let mut caps = Vec::with_capacity(t);
    let mut any_feasible = false;
    for k in 0..t {
        let mut e = vec![0i64; t];
        e[k] = 1;
        match sup_over_window(&pr, &e)? {
            None => caps.push(0u128),
            Some(s) => {
                any_feasible = true;
                let cap_f = ((s + opts.eps).exp() * (1.0 + 1e-6) + 1.0).floor();
                if cap_f >= 2f64.powi(127) {
                    return Err(Error::UnsupportedScale(format!(
                        "height cap exp({s:.3}) exceeds the 128-bit engine"
                    )));
                }
                caps.push(cap_f as u128);
            }
        }
    }
    if !any_feasible {
        return Ok(None);
    }

    // uniform coordinate bound, then per-coordinate variable bounds
    let bounds = coordinate_bounds(pd, sb, region, gs)?;
    let mut var_bound = Vec::with_capacity(m);
    for (rho, b) in bounds.iter().enumerate() {
        let scaled = b * opts.bound_scale * (1.0 + 1e-12) + 1e-9;
        if scaled >= 2f64.powi(62) {
            return Err(Error::UnsupportedScale(format!(
                "coordinate bound {scaled:.3e} exceeds the enumeration range"
            )));
        }
        var_bound.push(scaled.floor() as i64 / mult[rho]);
    }

    // flatten monomials and check the 128-bit width guard
    let mut monos = Vec::new();
    let mut monos_by_k = Vec::with_capacity(t);
    for (k, mk) in sb.monomials.iter().enumerate() {
        let mut idxs = Vec::with_capacity(mk.len());
        for exps in mk {
            let mut support = 0u32;
            let mut bits = 0.0f64;
            let mut e8 = Vec::with_capacity(m);
            for (rho, &e) in exps.iter().enumerate() {
                if e > 0 {
                    support |= 1 << rho;
                    let actual = (var_bound[rho] * mult[rho]).max(1) as f64;
                    bits += e as f64 * actual.log2();
                }
                if !(0..=255).contains(&e) {
                    return Err(Error::UnsupportedScale(format!(
                        "monomial exponent {e} out of engine range"
                    )));
                }
                e8.push(e as u8);
            }
            if bits > 126.0 {
                return Err(Error::UnsupportedScale(format!(
                    "monomial values may need {bits:.0} bits; the engine has 128"
                )));
            }
            idxs.push(monos.len());
            monos.push(Mono { k, support, exps: e8 });
        }
        monos_by_k.push(idxs);
    }
    let mut per_coord = vec![Vec::new(); m];
    let mut occurrences = vec![0usize; m];
    for (i, mo) in monos.iter().enumerate() {
        for rho in 0..m {
            if mo.support & (1 << rho) != 0 {
                per_coord[rho].push(i);
                occurrences[rho] += 1;
            }
        }
    }

    let pcs_sets = primitive_collections(f);
    let pcs: Vec<u32> = pcs_sets.iter().map(|c| c.mask()).collect();
    let pc_lists: Vec<Vec<usize>> = pcs_sets.iter().map(|c| c.indices().to_vec()).collect();

    Ok(Some(Problem {
        m,
        t,
        monos,
        per_coord,
        occurrences,
        monos_by_k,
        caps,
        var_bound,
        mult,
        pcs,
        pc_lists,
        region: pr,
        eps: opts.eps,
        exact_boundary: opts.exact_boundary,
        forbid_zero,
        check_coprime,
        collect_embeddings: opts.collect_embeddings,
    }))
}

struct Budget {
    counter: AtomicU64,
    limit: u64,
}

#[derive(Default)]
struct Partial {
    torsor: u64,
    torus: u64,
    embeds: Option<HashSet<Vec<Vec<i128>>>>,
}

struct CompEntry {
    mono: usize,
    rest: u128,
    exp: u8,
}

#[derive(Default)]
struct Undo {
    kmax: Vec<(usize, u128)>,
    live_dec: Vec<usize>,
    zeroed: bool,
    weighted: bool,
}

/// gcd with a fast path for values that fit in a machine word.
fn gcd_u(a: u128, b: u128) -> u128 {
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        num_integer::gcd(a as u64, b as u64) as u128
    } else {
        a.gcd(&b)
    }
}

struct Searcher<'p> {
    p: &'p Problem,
    budget: &'p Budget,
    pending_nodes: u64,
    values: Vec<i128>,
    assigned: u32,
    zero_mask: u32,
    live: Vec<u32>,
    kmax: Vec<u128>,
    comp_bufs: Vec<Vec<CompEntry>>,
    undo_bufs: Vec<Undo>,
    hbuf: Vec<u128>,
    hf: Vec<f64>,
    /// Heights and the acceptance conditions only see |y_ρ|, so when nothing
    /// needs actual signs the search walks v ≥ 0 and books each candidate
    /// with multiplicity 2^(nonzero coordinates), tracked here.
    fold_signs: bool,
    sign_weight: u64,
    out: Partial,
}

const FLUSH_EVERY: u64 = 4096;

impl<'p> Searcher<'p> {
    fn new(p: &'p Problem, budget: &'p Budget) -> Self {
        let live: Vec<u32> = p.monos_by_k.iter().map(|v| v.len() as u32).collect();
        Searcher {
            p,
            budget,
            pending_nodes: 0,
            values: vec![0; p.m],
            assigned: 0,
            zero_mask: 0,
            live,
            kmax: vec![0; p.t],
            comp_bufs: (0..p.m).map(|_| Vec::new()).collect(),
            undo_bufs: (0..p.m).map(|_| Undo::default()).collect(),
            hbuf: vec![0; p.t],
            hf: vec![0.0; p.t],
            fold_signs: !p.collect_embeddings,
            sign_weight: 1,
            out: Partial::default(),
        }
    }

    fn bump(&mut self) -> Result<()> {
        self.pending_nodes += 1;
        if self.pending_nodes >= FLUSH_EVERY {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.pending_nodes > 0 {
            let total = self
                .budget
                .counter
                .fetch_add(self.pending_nodes, Ordering::Relaxed)
                + self.pending_nodes;
            self.pending_nodes = 0;
            if total > self.budget.limit {
                return Err(Error::NodeBudget { budget: self.budget.limit });
            }
        }
        Ok(())
    }

    fn rest_product(&self, others: u32, exps: &[u8]) -> u128 {
        let mut r: u128 = 1;
        let mut mask = others;
        while mask != 0 {
            let rho = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            let a = self.values[rho].unsigned_abs();
            for _ in 0..exps[rho] {
                r *= a;
            }
        }
        r
    }

    /// Choose the next coordinate: smallest derived variable range, then the
    /// most newly-completed monomials, then the most monomial occurrences,
    /// then the lowest index.
    fn select(&self) -> (usize, i64) {
        let mut best: Option<(usize, i64, usize)> = None;
        for rho in 0..self.p.m {
            let bit = 1u32 << rho;
            if self.assigned & bit != 0 {
                continue;
            }
            let mut range = self.p.var_bound[rho];
            let mut completions = 0usize;
            for &i in &self.p.per_coord[rho] {
                let mo = &self.p.monos[i];
                let others = mo.support & !bit;
                if others & !self.assigned != 0 {
                    continue;
                }
                completions += 1;
                if others & self.zero_mask != 0 {
                    continue;
                }
                let rest = self.rest_product(others, &mo.exps);
                let cap = self.p.caps[mo.k];
                let limit = if rest == 0 {
                    u128::MAX
                } else {
                    iroot(cap / rest, mo.exps[rho])
                };
                let var_limit = (limit / self.p.mult[rho] as u128).min(i64::MAX as u128) as i64;
                range = range.min(var_limit);
            }
            let better = match best {
                None => true,
                Some((brho, brange, bcomp)) => {
                    (range, std::cmp::Reverse(completions), std::cmp::Reverse(self.p.occurrences[rho]), rho)
                        < (brange, std::cmp::Reverse(bcomp), std::cmp::Reverse(self.p.occurrences[brho]), brho)
                }
            };
            if better {
                best = Some((rho, range, completions));
            }
        }
        let (rho, range, _) = best.expect("select called with all coordinates assigned");
        (rho, range)
    }

    fn fill_completions(&self, rho: usize, buf: &mut Vec<CompEntry>) {
        buf.clear();
        let bit = 1u32 << rho;
        for &i in &self.p.per_coord[rho] {
            let mo = &self.p.monos[i];
            let others = mo.support & !bit;
            if others & !self.assigned != 0 || others & self.zero_mask != 0 {
                continue;
            }
            buf.push(CompEntry {
                mono: i,
                rest: self.rest_product(others, &mo.exps),
                exp: mo.exps[rho],
            });
        }
    }

    /// Apply one assignment; false means the branch is dead (caller must
    /// still unapply).
    fn apply(&mut self, rho: usize, v: i64, comp: &[CompEntry], depth: usize) -> bool {
        let bit = 1u32 << rho;
        self.assigned |= bit;
        self.values[rho] = v as i128 * self.p.mult[rho] as i128;
        if v == 0 {
            self.zero_mask |= bit;
            self.undo_bufs[depth].zeroed = true;
            for &pc in &self.p.pcs {
                if pc & !self.zero_mask == 0 {
                    return false;
                }
            }
            let prior_zero = self.zero_mask & !bit;
            for idx in 0..self.p.per_coord[rho].len() {
                let i = self.p.per_coord[rho][idx];
                let mo = &self.p.monos[i];
                if mo.support & prior_zero == 0 {
                    let k = mo.k;
                    self.live[k] -= 1;
                    self.undo_bufs[depth].live_dec.push(k);
                    if self.live[k] == 0 {
                        return false;
                    }
                }
            }
        } else {
            if self.fold_signs {
                self.sign_weight *= 2;
                self.undo_bufs[depth].weighted = true;
            }
            let a = self.values[rho].unsigned_abs();
            for c in comp {
                let mut val = c.rest;
                for _ in 0..c.exp {
                    val *= a;
                }
                let k = self.p.monos[c.mono].k;
                debug_assert!(val <= self.p.caps[k]);
                if val > self.kmax[k] {
                    self.undo_bufs[depth].kmax.push((k, self.kmax[k]));
                    self.kmax[k] = val;
                }
            }
        }
        true
    }

    fn unapply(&mut self, rho: usize, depth: usize) {
        let bit = 1u32 << rho;
        let undo = &mut self.undo_bufs[depth];
        while let Some((k, old)) = undo.kmax.pop() {
            self.kmax[k] = old;
        }
        while let Some(k) = undo.live_dec.pop() {
            self.live[k] += 1;
        }
        if undo.zeroed {
            self.zero_mask &= !bit;
            undo.zeroed = false;
        }
        if undo.weighted {
            self.sign_weight /= 2;
            undo.weighted = false;
        }
        self.assigned &= !bit;
    }

    fn dfs(&mut self) -> Result<()> {
        let depth = self.assigned.count_ones() as usize;
        let (rho, range) = self.select();
        if depth + 1 == self.p.m {
            return self.leaf_loop(rho, range);
        }
        let mut comp = std::mem::take(&mut self.comp_bufs[depth]);
        self.fill_completions(rho, &mut comp);
        let low = if self.fold_signs { 0 } else { -range };
        let mut res = Ok(());
        for v in low..=range {
            if v == 0 && self.p.forbid_zero {
                continue;
            }
            if let e @ Err(_) = self.bump() {
                res = e;
                break;
            }
            let proceed = self.apply(rho, v, &comp, depth);
            if proceed {
                if let e @ Err(_) = self.dfs() {
                    self.unapply(rho, depth);
                    res = e;
                    break;
                }
            }
            self.unapply(rho, depth);
        }
        self.comp_bufs[depth] = comp;
        res
    }

    fn leaf_loop(&mut self, rho: usize, range: i64) -> Result<()> {
        let depth = self.p.m - 1;
        let mut comp = std::mem::take(&mut self.comp_bufs[depth]);
        self.fill_completions(rho, &mut comp);
        let bit = 1u32 << rho;
        let full: u32 = if self.p.m == 32 { u32::MAX } else { (1 << self.p.m) - 1 };
        let low = if self.fold_signs { 0 } else { -range };
        let mut res = Ok(());
        for v in low..=range {
            if v == 0 && self.p.forbid_zero {
                continue;
            }
            if let e @ Err(_) = self.bump() {
                res = e;
                break;
            }
            if v == 0 {
                let zm = self.zero_mask | bit;
                if zm == full {
                    continue;
                }
                if self.p.pcs.iter().any(|&pc| pc & !zm == 0) {
                    continue;
                }
                // every monomial through rho dies; remaining maxima must be
                // positive for each class
                if self.kmax.iter().any(|&x| x == 0) {
                    continue;
                }
                self.values[rho] = 0;
                self.hbuf.copy_from_slice(&self.kmax);
                self.accept_candidate(zm, self.sign_weight);
            } else {
                self.values[rho] = v as i128 * self.p.mult[rho] as i128;
                let a = self.values[rho].unsigned_abs();
                self.hbuf.copy_from_slice(&self.kmax);
                for c in &comp {
                    let mut val = c.rest;
                    for _ in 0..c.exp {
                        val *= a;
                    }
                    let k = self.p.monos[c.mono].k;
                    if val > self.hbuf[k] {
                        self.hbuf[k] = val;
                    }
                }
                if self.hbuf.iter().any(|&x| x == 0) {
                    continue;
                }
                let w = if self.fold_signs { self.sign_weight * 2 } else { 1 };
                self.accept_candidate(self.zero_mask, w);
            }
        }
        self.comp_bufs[depth] = comp;
        res
    }

    fn accept_candidate(&mut self, zero_mask: u32, weight: u64) {
        for k in 0..self.p.t {
            self.hf[k] = (self.hbuf[k] as f64).ln();
        }
        let accepted = if self.p.exact_boundary {
            let exact: Vec<BigInt> = self.hbuf.iter().map(|&x| BigInt::from(x)).collect();
            window_accepts(&self.p.region, &self.hf, Some(&exact), self.p.eps, true)
        } else {
            window_accepts(&self.p.region, &self.hf, None, self.p.eps, false)
        };
        if !accepted {
            return;
        }
        if self.p.check_coprime {
            for pc in &self.p.pc_lists {
                let mut g: u128 = 0;
                for &rho in pc {
                    g = gcd_u(g, self.values[rho].unsigned_abs());
                    if g == 1 {
                        break;
                    }
                }
                if g != 1 {
                    return;
                }
            }
        }
        self.out.torsor += weight;
        if zero_mask == 0 {
            self.out.torus += weight;
        }
        if self.p.collect_embeddings {
            let tuple = self.normalized_embedding();
            self.out.embeds.get_or_insert_with(HashSet::new).insert(tuple);
        }
    }

    fn normalized_embedding(&self) -> Vec<Vec<i128>> {
        let mut out = Vec::with_capacity(self.p.t);
        for idxs in &self.p.monos_by_k {
            let mut tuple: Vec<i128> = idxs
                .iter()
                .map(|&i| {
                    let mo = &self.p.monos[i];
                    let mut val: i128 = 1;
                    let mut mask = mo.support;
                    while mask != 0 {
                        let rho = mask.trailing_zeros() as usize;
                        mask &= mask - 1;
                        for _ in 0..mo.exps[rho] {
                            val *= self.values[rho];
                        }
                    }
                    val
                })
                .collect();
            let mut g: u128 = 0;
            for &v in &tuple {
                g = g.gcd(&v.unsigned_abs());
            }
            if g > 1 {
                for v in &mut tuple {
                    *v /= g as i128;
                }
            }
            if let Some(first) = tuple.iter().find(|&&v| v != 0) {
                if *first < 0 {
                    for v in &mut tuple {
                        *v = -*v;
                    }
                }
            }
            out.push(tuple);
        }
        out
    }
}

fn run_enumeration(p: &Problem, budget_limit: u64) -> Result<(Partial, u64)> {
    let budget = Budget { counter: AtomicU64::new(0), limit: budget_limit };
    let probe = Searcher::new(p, &budget);
    let (rho0, range0) = probe.select();
    let low0 = if probe.fold_signs { 0 } else { -range0 };
    drop(probe);
    let roots: Vec<i64> = (low0..=range0)
        .filter(|&v| !(v == 0 && p.forbid_zero))
        .collect();
    let results: Vec<Result<Partial>> = roots
        .par_iter()
        .map(|&v| {
            let mut s = Searcher::new(p, &budget);
            s.bump()?;
            let mut comp = std::mem::take(&mut s.comp_bufs[0]);
            s.fill_completions(rho0, &mut comp);
            let proceed = s.apply(rho0, v, &comp, 0);
            s.comp_bufs[0] = comp;
            if proceed {
                s.dfs()?;
            }
            s.flush()?;
            Ok(s.out)
        })
        .collect();
    let mut total = Partial::default();
    for r in results {
        let part = r?;
        total.torsor += part.torsor;
        total.torus += part.torus;
        if let Some(set) = part.embeds {
            total.embeds.get_or_insert_with(HashSet::new).extend(set);
        }
    }
    Ok((total, budget.counter.load(Ordering::Relaxed)))
}

fn empty_report(collect: bool) -> CountReport {
    CountReport {
        torsor_count: 0,
        torus_count: 0,
        boundary_count: 0,
        rational_count: 0,
        nodes: 0,
        box_volume: 0.0,
        distinct_embeddings: if collect { Some(0) } else { None },
    }
}

/// Exact point counts over the window: depth-first enumeration of the
/// integer box given by `coordinate_bounds`, pruned by completed-monomial
/// caps, filtered by the coprimality conditions and window membership.
pub fn enumerate_points(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    gs: Option<&GrowthSpec>,
    opts: &EnumOptions,
) -> Result<CountReport> {
    let mult = vec![1i64; pd.m];
    let problem = match build_problem(f, pd, sb, region, gs, opts, mult, false, true)? {
        None => return Ok(empty_report(opts.collect_embeddings)),
        Some(p) => p,
    };
    let (partial, nodes) = run_enumeration(&problem, opts.node_budget)?;
    let two_t = 1u64 << pd.t;
    if partial.torsor % two_t != 0 {
        return Err(Error::Internal(format!(
            "torsor count {} is not divisible by 2^{} — sign orbits are broken",
            partial.torsor, pd.t
        )));
    }
    if partial.torus > partial.torsor {
        return Err(Error::Internal("torus count exceeds torsor count".into()));
    }
    let box_volume = problem
        .var_bound
        .iter()
        .map(|&b| 2.0 * b as f64 + 1.0)
        .product();
    Ok(CountReport {
        torsor_count: partial.torsor,
        torus_count: partial.torus,
        boundary_count: partial.torsor - partial.torus,
        rational_count: partial.torsor / two_t,
        nodes,
        box_volume,
        distinct_embeddings: partial.embeds.map(|s| s.len() as u64).or(if opts.collect_embeddings {
            Some(0)
        } else {
            None
        }),
    })
}

/// Number of lattice points with d_ρ | y_ρ, every coordinate nonzero, and
/// heights in the window (no coprimality filter): the summands of the
/// Möbius inversion identity.
pub fn count_sublattice(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    d: &[i64],
    region: &CompiledRegion,
    gs: Option<&GrowthSpec>,
    opts: &EnumOptions,
) -> Result<u64> {
    if d.len() != pd.m || d.iter().any(|&x| x < 1) {
        return Err(Error::InvalidConfig(format!(
            "multipliers must be {} positive integers",
            pd.m
        )));
    }
    let problem = match build_problem(f, pd, sb, region, gs, opts, d.to_vec(), true, false)? {
        None => return Ok(0),
        Some(p) => p,
    };
    let (partial, _) = run_enumeration(&problem, opts.node_budget)?;
    Ok(partial.torsor)
}

/// Orbit of y under the sign action of the units of the Picard torus: the
/// sign vector s ∈ {±1}^t multiplies y_ρ by ∏_i s_i^{c_i} where c is the
/// class of the ρ-th ray divisor.
pub fn unit_orbit(pd: &PicardData, y: &[BigInt]) -> Result<BTreeSet<Vec<BigInt>>> {
    check_point(pd.m, y)?;
    let mut orbit = BTreeSet::new();
    for s in 0..(1u32 << pd.t) {
        let mut img = Vec::with_capacity(pd.m);
        for (rho, v) in y.iter().enumerate() {
            let mut parity = 0u32;
            for (i, &c) in pd.ray_classes[rho].iter().enumerate() {
                if s & (1 << i) != 0 {
                    parity ^= (c & 1) as u32;
                }
            }
            img.push(if parity == 1 { -v } else { v.clone() });
        }
        orbit.insert(img);
    }
    Ok(orbit)
}

/// The projective coordinates of the image point: for each basis class the
/// monomial values, divided by their gcd, with the first nonzero entry made
/// positive.
pub fn embed(sb: &SectionBasis, y: &[BigInt]) -> Result<Vec<Vec<BigInt>>> {
    let m = sb.monomials[0][0].len();
    check_point(m, y)?;
    let mut out = Vec::with_capacity(sb.t());
    for (k, mk) in sb.monomials.iter().enumerate() {
        let mut tuple: Vec<BigInt> = mk.iter().map(|e| mono_value_big(e, y)).collect();
        let mut g = BigInt::zero();
        for v in &tuple {
            g = g.gcd(v);
        }
        if g.is_zero() {
            return Err(Error::InvalidPoint(format!(
                "all monomials of basis class {k} vanish; not a torsor point"
            )));
        }
        if !g.is_one() {
            for v in &mut tuple {
                *v /= &g;
            }
        }
        if let Some(first) = tuple.iter().find(|v| !v.is_zero()) {
            if first.is_negative() {
                for v in &mut tuple {
                    *v = -(v.clone());
                }
            }
        }
        out.push(tuple);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::builtin_fan;
    use crate::picard::{ample_basis, compute_picard, validate_direction};
    use crate::ratgeom::rat;
    use crate::region::{box_region, compile_region, BoundSpec, Constraint, Region};
    use crate::sections::build_section_basis;
    use num_traits::ToPrimitive;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    struct Setup {
        f: Fan,
        pd: PicardData,
        sb: SectionBasis,
    }

    fn setup(name: &str) -> Setup {
        let f = builtin_fan(name).unwrap().fan;
        let pd = compute_picard(&f).unwrap();
        let ab = ample_basis(&pd, None).unwrap();
        let sb = build_section_basis(&pd, ab).unwrap();
        Setup { f, pd, sb }
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// [log lo_num, log hi_num) boxes on every basis class, exact bounds.
    fn window(s: &Setup, lo: i64, hi: i64) -> CompiledRegion {
        let bounds: Vec<_> = (0..s.sb.t())
            .map(|_| (BoundSpec::from_log_rat(rat(lo)), BoundSpec::from_log_rat(rat(hi))))
            .collect();
        let r = box_region(&s.pd, &s.sb.basis, &bounds).unwrap();
        compile_region(&s.pd, &s.sb.basis, &r).unwrap()
    }

    fn closed_window(s: &Setup, lo: i64, hi: i64) -> CompiledRegion {
        let constraints = s
            .sb
            .basis
            .classes
            .iter()
            .map(|class| Constraint {
                divisor: crate::picard::lift_class(&s.pd, class).unwrap(),
                min: Some(BoundSpec::from_log_rat(rat(lo))),
                max: Some(BoundSpec::from_log_rat(rat(hi))),
                min_inclusive: true,
                max_inclusive: true,
            })
            .collect();
        let r = Region { polyhedra: vec![constraints] };
        compile_region(&s.pd, &s.sb.basis, &r).unwrap()
    }

    #[test]
    fn membership_examples() {
        let p2 = setup("P2");
        assert!(is_integral_torsor_point(&p2.f, &big(&[2, 4, 3])).unwrap());
        assert!(!is_integral_torsor_point(&p2.f, &big(&[2, 4, 6])).unwrap());
        assert!(!is_torsor_point_via_sections(&p2.sb, &big(&[2, 4, 6])).unwrap());
        let f1 = setup("F1");
        assert!(!is_integral_torsor_point(&f1.f, &big(&[2, 3, 4, 9])).unwrap());
        let p1 = setup("P1");
        assert!(is_integral_torsor_point(&p1.f, &big(&[3, 5])).unwrap());
        assert!(is_torsor_point_via_sections(&p1.sb, &big(&[3, 5])).unwrap());
        assert!(is_integral_torsor_point(&p1.f, &big(&[1, 0])).unwrap());
        assert!(is_integral_torsor_point(&p2.f, &big(&[0, 0, 7])).is_err() == false);
        assert!(!is_integral_torsor_point(&p2.f, &big(&[0, 0, 7])).unwrap());
        assert!(is_integral_torsor_point(&p1.f, &big(&[0, 0])).is_err());
    }

    #[test]
    fn membership_characterizations_agree() {
        let mut rng = StdRng::seed_from_u64(7);
        for name in ["P1", "P2", "P1xP1", "F1", "F2", "dP8"] {
            let s = setup(name);
            let m = s.pd.m;
            for _ in 0..2000 {
                let y: Vec<BigInt> = (0..m)
                    .map(|_| BigInt::from(rng.random_range(-30i64..=30)))
                    .collect();
                if y.iter().all(|v| v.is_zero()) {
                    continue;
                }
                let a = is_integral_torsor_point(&s.f, &y).unwrap();
                let b = is_torsor_point_via_sections(&s.sb, &y).unwrap();
                assert_eq!(a, b, "{name}: {y:?}");
            }
        }
    }

    #[test]
    fn height_examples() {
        let p1 = setup("P1");
        let mh = multi_height(&p1.sb, &big(&[3, 5])).unwrap();
        assert!((mh.h[0] - 5f64.ln()).abs() < 1e-12);
        assert_eq!(mh.witnesses[0].1, BigInt::from(5));

        let p2 = setup("P2");
        let mh = multi_height(&p2.sb, &big(&[1, 1, 1])).unwrap();
        assert_eq!(mh.h, vec![0.0]);

        // product of lines: factor heights recovered by integer combinations
        let q = setup("P1xP1");
        let mh = multi_height(&q.sb, &big(&[1, 2, 3, 1])).unwrap();
        let coords_a = q.sb.basis.coords(&[1, 0]);
        let coords_b = q.sb.basis.coords(&[0, 1]);
        let pair = |c: &[i64]| c.iter().zip(&mh.h).map(|(&x, h)| x as f64 * h).sum::<f64>();
        assert!((pair(&coords_a) - 2f64.ln()).abs() < 1e-12);
        assert!((pair(&coords_b) - 3f64.ln()).abs() < 1e-12);

        // heights must reject points outside the torsor closure
        assert!(multi_height(&q.sb, &big(&[1, 0, 0, 1])).is_err() == false);
        assert!(multi_height(&q.sb, &big(&[1, 1, 0, 0])).is_err());
    }

    #[test]
    fn real_heights_match_integer_heights() {
        let mut rng = StdRng::seed_from_u64(11);
        for name in ["P2", "F1"] {
            let s = setup(name);
            for _ in 0..200 {
                let y: Vec<BigInt> = (0..s.pd.m)
                    .map(|_| BigInt::from(rng.random_range(1i64..=40)))
                    .collect();
                let exact = multi_height(&s.sb, &y).unwrap();
                let yf: Vec<f64> = y.iter().map(|v| v.to_f64().unwrap()).collect();
                let real = multi_height_real(&s.sb, &yf).unwrap();
                for (a, b) in exact.h.iter().zip(&real) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn scaling_covariance_on_real_points() {
        let mut rng = StdRng::seed_from_u64(13);
        for name in ["P1", "P1xP1", "F1"] {
            let s = setup(name);
            let t = s.pd.t;
            for _ in 0..100 {
                let y: Vec<f64> = (0..s.pd.m)
                    .map(|_| {
                        let v: f64 = rng.random_range(0.2f64..8.0);
                        if rng.random_bool(0.5) {
                            -v
                        } else {
                            v
                        }
                    })
                    .collect();
                let a: Vec<f64> = (0..t).map(|_| rng.random_range(-1.5f64..1.5)).collect();
                let h0 = multi_height_real(&s.sb, &y).unwrap();
                let scaled: Vec<f64> = y
                    .iter()
                    .enumerate()
                    .map(|(rho, v)| {
                        let coords = s.sb.basis.coords(&s.pd.ray_classes[rho]);
                        let expo: f64 = coords.iter().zip(&a).map(|(&c, ai)| c as f64 * ai).sum();
                        v * expo.exp()
                    })
                    .collect();
                let h1 = multi_height_real(&s.sb, &scaled).unwrap();
                for k in 0..t {
                    assert!(
                        (h1[k] - h0[k] - a[k]).abs() < 1e-9,
                        "{name}: shift mismatch {} vs {}",
                        h1[k] - h0[k],
                        a[k]
                    );
                }
            }
        }
    }

    #[test]
    fn window_membership_and_inclusivity() {
        let p1 = setup("P1");
        let cr = window(&p1, 1, 10);
        let dir = validate_direction(&p1.pd, &[rat(1), rat(1)]).unwrap();

        let mh = multi_height(&p1.sb, &big(&[3, 5])).unwrap();
        let pr = prepare_region(&cr, None);
        assert!(in_region(&mh, &pr, 1e-9, false));
        let gs = GrowthSpec::new(dir, 10.0).unwrap();
        let pr10 = prepare_region(&cr, Some(&gs));
        assert!(!in_region(&mh, &pr10, 1e-9, false));

        // value exactly on the upper endpoint: excluded by default, included
        // when the flag is set, and exact mode agrees both ways
        let mh10 = multi_height(&p1.sb, &big(&[10, 7])).unwrap();
        assert!(!in_region(&mh10, &pr, 1e-9, false));
        assert!(!in_region(&mh10, &pr, 1e-9, true));
        let closed = closed_window(&p1, 1, 10);
        let prc = prepare_region(&closed, None);
        assert!(in_region(&mh10, &prc, 1e-9, false));
        assert!(in_region(&mh10, &prc, 1e-9, true));

        // exact mode overrides a float tie that inclusivity alone would
        // misread: h sits within eps of the bound but the exact value is
        // strictly below 10
        let mh9 = multi_height(&p1.sb, &big(&[9, 2])).unwrap();
        let mut pr_tight = prepare_region(&cr, None);
        for c in &mut pr_tight.polyhedra[0] {
            if let Some(hi) = &mut c.hi {
                hi.value = 9f64.ln(); // float says boundary, exact says 9 < 10? no: bound is exact 10
            }
        }
        assert!(in_region(&mh9, &pr_tight, 1e-9, true));
        assert!(!in_region(&mh9, &pr_tight, 1e-9, false));
    }

    #[test]
    fn coordinate_bound_examples() {
        let p1 = setup("P1");
        let cr = window(&p1, 1, 2);
        let dir = validate_direction(&p1.pd, &[rat(1), rat(1)]).unwrap();
        let gs = GrowthSpec::new(dir, 10.0).unwrap();
        let b = coordinate_bounds(&p1.pd, &p1.sb, &cr, Some(&gs)).unwrap();
        assert_eq!(b.len(), 2);
        for x in &b {
            assert!((x - 20.0).abs() < 1e-6, "{x}");
        }

        let p2 = setup("P2");
        let cr = closed_window(&p2, 1, 1);
        let dir = validate_direction(&p2.pd, &[rat(1), rat(1), rat(1)]).unwrap();
        let gs = GrowthSpec::new(dir, 5.0).unwrap();
        let b = coordinate_bounds(&p2.pd, &p2.sb, &cr, Some(&gs)).unwrap();
        for x in &b {
            assert!((x - 5.0).abs() < 1e-6, "{x}");
        }
        let b = coordinate_bounds(&p2.pd, &p2.sb, &cr, None).unwrap();
        for x in &b {
            assert!((x - 1.0).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn real_shell_bounds_exceed_integer_bounds() {
        // on the line the two notions agree
        let p1 = setup("P1");
        let cr = window(&p1, 1, 2);
        let b = real_coordinate_bounds(&p1.f, &p1.pd, &p1.sb, &cr, None).unwrap();
        assert_eq!(b.len(), 2);
        for x in &b {
            assert!((x - 2.0).abs() < 1e-9, "{x}");
        }

        // on the quadric an ample-basis box mixes the factors: a real point
        // may trade a large first-factor coordinate against a small
        // second-factor one, which no nonzero integral point can do
        let q = setup("P1xP1");
        let bounds: Vec<_> = (0..q.sb.t())
            .map(|_| {
                (
                    BoundSpec::from_log_rat(rat(1)),
                    BoundSpec::from_log_rat(crate::ratgeom::rat_frac(5, 2)),
                )
            })
            .collect();
        let r = box_region(&q.pd, &q.sb.basis, &bounds).unwrap();
        let cr = compile_region(&q.pd, &q.sb.basis, &r).unwrap();
        let real = real_coordinate_bounds(&q.f, &q.pd, &q.sb, &cr, None).unwrap();
        let expect = [6.25, 6.25, 2.5, 2.5];
        for (x, e) in real.iter().zip(expect) {
            assert!((x - e).abs() < 1e-9, "{x} vs {e}");
        }
        let int = coordinate_bounds(&q.pd, &q.sb, &cr, None).unwrap();
        for x in &int {
            assert!((x - 2.5).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn line_counts_in_a_decade_window() {
        let p1 = setup("P1");
        let cr = window(&p1, 1, 10);
        let rep = enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &EnumOptions::default())
            .unwrap();
        assert_eq!(rep.torsor_count, 224);
        assert_eq!(rep.torus_count, 220);
        assert_eq!(rep.boundary_count, 4);
        assert_eq!(rep.rational_count, 112);
        assert!(rep.nodes > 0);
        assert_eq!(rep.box_volume, 441.0);
    }

    #[test]
    fn unit_height_points_on_the_line() {
        let p1 = setup("P1");
        let cr = closed_window(&p1, 1, 1);
        let rep = enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &EnumOptions::default())
            .unwrap();
        assert_eq!(rep.torsor_count, 8);
        assert_eq!(rep.rational_count, 4);
    }

    #[test]
    fn plane_counts_up_to_height_three() {
        let p2 = setup("P2");
        let cr = closed_window(&p2, 1, 3);
        let mut opts = EnumOptions::default();
        opts.collect_embeddings = true;
        let rep = enumerate_points(&p2.f, &p2.pd, &p2.sb, &cr, None, &opts).unwrap();
        assert_eq!(rep.torsor_count, 290);
        assert_eq!(rep.rational_count, 145);
        assert_eq!(rep.distinct_embeddings, Some(145));
    }

    #[test]
    fn quadric_and_blowup_unit_windows() {
        let q = setup("P1xP1");
        let cr = window(&q, 1, 2);
        let mut opts = EnumOptions::default();
        opts.collect_embeddings = true;
        let rep = enumerate_points(&q.f, &q.pd, &q.sb, &cr, None, &opts).unwrap();
        assert_eq!(
            (rep.torsor_count, rep.torus_count, rep.rational_count),
            (64, 16, 16)
        );
        assert_eq!(rep.distinct_embeddings, Some(16));

        let f1 = setup("F1");
        let cr = window(&f1, 1, 2);
        let rep = enumerate_points(&f1.f, &f1.pd, &f1.sb, &cr, None, &opts).unwrap();
        assert_eq!(
            (rep.torsor_count, rep.torus_count, rep.rational_count),
            (64, 16, 16)
        );
        assert_eq!(rep.distinct_embeddings, Some(16));
    }

    #[test]
    fn moving_window_counts_match_brute_force() {
        // frozen by an independent brute-force pass over the integer box
        let q = setup("P1xP1");
        let dir =
            validate_direction(&q.pd, &[rat(1), rat(1), rat(1), rat(1)]).unwrap();
        let cr = window(&q, 1, 2);
        let gs = GrowthSpec::new(dir, 2.0).unwrap();
        let rep =
            enumerate_points(&q.f, &q.pd, &q.sb, &cr, Some(&gs), &EnumOptions::default()).unwrap();
        assert_eq!(
            (rep.torsor_count, rep.torus_count, rep.rational_count),
            (192, 192, 48)
        );

        let f1 = setup("F1");
        let dir =
            validate_direction(&f1.pd, &[rat(1), rat(1), rat(1), rat(2)]).unwrap();
        let cr = window(&f1, 1, 2);
        let gs = GrowthSpec::new(dir, 2.0).unwrap();
        let rep = enumerate_points(&f1.f, &f1.pd, &f1.sb, &cr, Some(&gs), &EnumOptions::default())
            .unwrap();
        assert_eq!(
            (rep.torsor_count, rep.torus_count, rep.rational_count),
            (224, 224, 56)
        );
    }

    #[test]
    fn enlarged_boxes_change_nothing() {
        for name in ["P1", "P2", "P1xP1", "F1"] {
            let s = setup(name);
            let cr = window(&s, 1, 3);
            let base =
                enumerate_points(&s.f, &s.pd, &s.sb, &cr, None, &EnumOptions::default()).unwrap();
            let mut opts = EnumOptions::default();
            opts.bound_scale = 2.0;
            let wide = enumerate_points(&s.f, &s.pd, &s.sb, &cr, None, &opts).unwrap();
            assert_eq!(base.torsor_count, wide.torsor_count, "{name}");
            assert_eq!(base.torus_count, wide.torus_count, "{name}");
        }
    }

    #[test]
    fn windows_tile_without_double_counting() {
        let p1 = setup("P1");
        let parts: u64 = [(1, 4), (4, 16)]
            .iter()
            .map(|&(lo, hi)| {
                let cr = window(&p1, lo, hi);
                enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &EnumOptions::default())
                    .unwrap()
                    .rational_count
            })
            .sum();
        let whole = enumerate_points(
            &p1.f,
            &p1.pd,
            &p1.sb,
            &window(&p1, 1, 16),
            None,
            &EnumOptions::default(),
        )
        .unwrap()
        .rational_count;
        assert_eq!(parts, whole);
    }

    #[test]
    fn sublattice_counts() {
        let p1 = setup("P1");
        let cr = window(&p1, 1, 10);
        let opts = EnumOptions::default();
        // all-ones: the torus-restricted count without coprimality
        let n11 = count_sublattice(&p1.f, &p1.pd, &p1.sb, &[1, 1], &cr, None, &opts).unwrap();
        assert_eq!(n11, 324); // (2·9)²
        let n22 = count_sublattice(&p1.f, &p1.pd, &p1.sb, &[2, 2], &cr, None, &opts).unwrap();
        assert_eq!(n22, 64); // (2·4)²
        let n5 = count_sublattice(&p1.f, &p1.pd, &p1.sb, &[5, 5], &cr, None, &opts).unwrap();
        assert_eq!(n5, 4);
        // a multiplier beyond the coordinate bound kills the count
        let n = count_sublattice(&p1.f, &p1.pd, &p1.sb, &[16, 1], &cr, None, &opts).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn mobius_inversion_recovers_the_torus_count() {
        use crate::mobius::mobius_table;
        let p1 = setup("P1");
        let cr = window(&p1, 1, 10);
        let opts = EnumOptions::default();
        let table = mobius_table(&p1.f).unwrap();
        let mut total: i64 = 0;
        for e in 1..=9u64 {
            let mu = table.value(&[e, e]).unwrap();
            if mu == 0 {
                continue;
            }
            let n =
                count_sublattice(&p1.f, &p1.pd, &p1.sb, &[e as i64, e as i64], &cr, None, &opts)
                    .unwrap();
            total += mu * n as i64;
        }
        let rep =
            enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &EnumOptions::default()).unwrap();
        assert_eq!(total, rep.torus_count as i64);
    }

    #[test]
    fn node_budget_aborts() {
        let p1 = setup("P1");
        let cr = window(&p1, 1, 10);
        let mut opts = EnumOptions::default();
        opts.node_budget = 10;
        let err = enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &opts).unwrap_err();
        assert!(matches!(err, Error::NodeBudget { budget: 10 }));
        assert!(err.is_budget_or_tolerance());
    }

    #[test]
    fn oversized_windows_are_rejected() {
        let p1 = setup("P1");
        let bounds = vec![(BoundSpec::from_f64(0.0), BoundSpec::from_f64(200.0))];
        let r = box_region(&p1.pd, &p1.sb.basis, &bounds).unwrap();
        let cr = compile_region(&p1.pd, &p1.sb.basis, &r).unwrap();
        let err = enumerate_points(&p1.f, &p1.pd, &p1.sb, &cr, None, &EnumOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedScale(_)));
    }

    #[test]
    fn sign_orbits() {
        let p1 = setup("P1");
        let orbit = unit_orbit(&p1.pd, &big(&[3, 5])).unwrap();
        let expect: BTreeSet<Vec<BigInt>> =
            [big(&[3, 5]), big(&[-3, -5])].into_iter().collect();
        assert_eq!(orbit, expect);

        let p2 = setup("P2");
        let orbit = unit_orbit(&p2.pd, &big(&[1, 1, 1])).unwrap();
        assert_eq!(orbit.len(), 2);
        assert!(orbit.contains(&big(&[-1, -1, -1])));

        let f1 = setup("F1");
        let orbit = unit_orbit(&f1.pd, &big(&[1, 2, 3, 5])).unwrap();
        assert_eq!(orbit.len(), 4);
        // heights are constant along the orbit
        let h0 = multi_height(&f1.sb, &big(&[1, 2, 3, 5])).unwrap();
        for y in &orbit {
            let h = multi_height(&f1.sb, y).unwrap();
            assert_eq!(h.witnesses[0].1, h0.witnesses[0].1);
            assert_eq!(h.witnesses[1].1, h0.witnesses[1].1);
        }
    }

    #[test]
    fn embeddings_normalize_signs_and_scale() {
        let s = setup("P2");
        let e = embed(&s.sb, &big(&[2, 3, 5])).unwrap();
        assert_eq!(e, vec![vec![BigInt::from(5), BigInt::from(3), BigInt::from(2)]]);

        let p1 = setup("P1");
        let a = embed(&p1.sb, &big(&[3, 5])).unwrap();
        let b = embed(&p1.sb, &big(&[-3, -5])).unwrap();
        assert_eq!(a, b);

        let q = setup("P1xP1");
        let e = embed(&q.sb, &big(&[1, 2, 3, 1])).unwrap();
        assert_eq!(e.len(), 2);
        for tuple in &e {
            let mut g = BigInt::zero();
            for v in tuple {
                g = g.gcd(v);
            }
            assert!(g.is_one());
        }
    }
}
