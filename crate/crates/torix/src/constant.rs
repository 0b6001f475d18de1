//! The prediction side of the comparison: the window volume ν against the
//! exponential class measure, the torsor shell volume, the archimedean
//! density obtained from the volume identity, the Euler product over all
//! primes with a rigorous tail enclosure, and the assembled leading-constant
//! report.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fan::{fan_hash, min_collection_size, Fan};
use crate::mobius::{local_density, mobius_table};
use crate::picard::{AmpleBasis, GrowthDirection, PicardData};
use crate::ratgeom::{
    big_ratio_to_f64, fm_feasible, lp_max, lp_min, rat, rat_frac, rat_to_f64, LpOutcome, Rat,
};
use crate::region::{
    box_region, compile_region, poly_ineqs, BoundSpec, CompiledConstraint, CompiledRegion,
};
use crate::sections::SectionBasis;
use crate::torsor::{multi_height_real, real_coordinate_bounds, window_contains};

/// A value with a one-standard-error bar; exact quantities carry σ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, sigma: 0.0 }
    }

    /// Scale by an exactly known constant.
    pub fn scale(&self, c: f64) -> Estimate {
        Estimate { value: self.value * c, sigma: self.sigma * c.abs() }
    }

    /// Quotient with independent errors combined in quadrature.
    pub fn div(&self, other: &Estimate) -> Estimate {
        let value = self.value / other.value;
        let sigma = (self.sigma / other.value)
            .hypot(self.value * other.sigma / (other.value * other.value));
        Estimate { value, sigma: sigma.abs() }
    }

    /// Whether two estimates agree within `k` combined standard errors.
    pub fn agrees(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.sigma.hypot(other.sigma)
    }
}

/// Samples per generator stream.  Every batch reseeds the generator on its
/// own stream, so estimates are byte-identical for any thread count.
const MC_BATCH: u64 = 8192;

/// Seed salt separating the ν sampler from the volume sampler.
const SALT_NU: u64 = 0x6e75_5f77_696e_646f;
/// Seed salt for the independent check window.
const SALT_CHECK: u64 = 0x9e37_79b9_7f4a_7c15;

/// Mean of `eval` over the box `∏ [lo_i, hi_i]`, times the box volume, with
/// its standard error.  Deterministic: fixed-size batches on per-batch
/// streams, reduced in batch order.
fn mc_integral<F: Fn(&[f64]) -> f64 + Sync>(
    lo: &[f64],
    hi: &[f64],
    samples: u64,
    seed: u64,
    eval: F,
) -> Estimate {
    let dim = lo.len();
    let boxvol: f64 = lo.iter().zip(hi).map(|(&a, &b)| b - a).product();
    if samples == 0 || boxvol == 0.0 {
        return Estimate::exact(0.0);
    }
    let batches = samples.div_ceil(MC_BATCH);
    let parts: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let count = MC_BATCH.min(samples - batch * MC_BATCH);
            let mut x = vec![0.0f64; dim];
            let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
            for _ in 0..count {
                for (xi, (&a, &b)) in x.iter_mut().zip(lo.iter().zip(hi)) {
                    *xi = a + (b - a) * rng.random::<f64>();
                }
                let v = eval(&x);
                sum += v;
                sumsq += v * v;
            }
            (sum, sumsq)
        })
        .collect();
    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    for (s, s2) in parts {
        sum += s;
        sumsq += s2;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    Estimate { value: boxvol * mean, sigma: boxvol * (var / n).sqrt() }
}

/// How to integrate the class measure over a window.
#[derive(Clone, Copy, Debug)]
pub enum NuMethod {
    /// Exact product formula.  Every polyhedron must be an axis box in the
    /// dual coordinates of one independent family of constraint functionals.
    ClosedFormBox,
    /// Hit-or-miss sampling of the weighted indicator over the bounding box.
    MonteCarlo { samples: u64, seed: u64 },
}

/// One side of a window on a canonical functional: float position plus the
/// positive rational whose log it is, when known exactly.
type Side = (f64, Option<Rat>);

/// A two-sided window on one canonical constraint functional.
#[derive(Clone, Debug)]
struct BoxAxis {
    coords: Vec<i64>,
    lo: Option<Side>,
    hi: Option<Side>,
}

fn merge_lo(cur: &mut Option<Side>, new: Option<Side>) {
    if let Some(n) = new {
        match cur {
            Some(c) if n.0 <= c.0 => {}
            _ => *cur = Some(n),
        }
    }
}

fn merge_hi(cur: &mut Option<Side>, new: Option<Side>) {
    if let Some(n) = new {
        match cur {
            Some(c) if n.0 >= c.0 => {}
            _ => *cur = Some(n),
        }
    }
}

/// Group one polyhedron's constraints by functional, orienting each so its
/// first nonzero coefficient is positive (a bound `r` on the reversed side
/// negates to `-log r = log(1/r)`).
fn box_axes(poly: &[CompiledConstraint]) -> Result<Vec<BoxAxis>> {
    let mut axes: Vec<BoxAxis> = Vec::new();
    for c in poly {
        let sign = match c.coords.iter().find(|&&x| x != 0) {
            Some(&x) if x > 0 => 1,
            Some(_) => -1,
            None => {
                return Err(Error::InvalidRegion(
                    "closed form: a constraint functional is identically zero".into(),
                ))
            }
        };
        let canon: Vec<i64> = c.coords.iter().map(|&x| sign * x).collect();
        let conv = |b: &Option<BoundSpec>| -> Option<Side> {
            b.as_ref().map(|s| {
                if sign > 0 {
                    (s.value, s.exact.clone())
                } else {
                    (-s.value, s.exact.as_ref().map(|r| rat(1) / r))
                }
            })
        };
        let (lo, hi) = if sign > 0 {
            (conv(&c.min), conv(&c.max))
        } else {
            (conv(&c.max), conv(&c.min))
        };
        match axes.iter_mut().find(|a| a.coords == canon) {
            Some(axis) => {
                merge_lo(&mut axis.lo, lo);
                merge_hi(&mut axis.hi, hi);
            }
            None => axes.push(BoxAxis { coords: canon, lo, hi }),
        }
    }
    axes.sort_by(|a, b| a.coords.cmp(&b.coords));
    Ok(axes)
}

/// Determinant by fraction-free-enough Gaussian elimination over the
/// rationals (the matrices here are tiny).
fn det_rat(rows: &[Vec<Rat>]) -> Rat {
    let n = rows.len();
    let mut a: Vec<Vec<Rat>> = rows.to_vec();
    let mut det = rat(1);
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return rat(0);
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &a[col][col];
            for k in col..n {
                let delta = &factor * &a[col][k];
                a[r][k] -= delta;
            }
        }
    }
    det
}

/// Product integral of exp(Σ_j w'_j a'_j) over the box ∏ [lo_j, hi_j] in the
/// functional coordinates, divided by |det|; per-axis closed form
/// (e^{w'β} − e^{w'α})/w', with w' = 0 degenerating to β − α.  Exact rational
/// endpoints survive whenever w' is an integer.
fn intervals_value(intervals: &[(Side, Side)], wprime: &[Rat], absdet: &Rat) -> f64 {
    let mut exact: Option<Rat> = Some(rat(1));
    let mut approx = 1.0f64;
    for (j, ((lov, loe), (hiv, hie))) in intervals.iter().enumerate() {
        if hiv <= lov {
            return 0.0;
        }
        let wj = &wprime[j];
        let (fval, fex): (f64, Option<Rat>) = if wj.is_zero() {
            (hiv - lov, None)
        } else {
            let wf = rat_to_f64(wj);
            let fv = ((wf * hiv).exp() - (wf * lov).exp()) / wf;
            let fe = match (loe, hie) {
                (Some(rl), Some(rh)) if wj.is_integer() => wj
                    .to_integer()
                    .to_i32()
                    .map(|k| (rh.pow(k) - rl.pow(k)) / wj),
                _ => None,
            };
            (fv, fe)
        };
        approx *= fex.as_ref().map_or(fval, rat_to_f64);
        exact = match (exact, fex) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
    }
    match exact {
        Some(e) => rat_to_f64(&(e / absdet)),
        None => approx / rat_to_f64(absdet),
    }
}

fn intersect_intervals(a: &[(Side, Side)], b: &[(Side, Side)]) -> Vec<(Side, Side)> {
    a.iter()
        .zip(b)
        .map(|((alo, ahi), (blo, bhi))| {
            let lo = if blo.0 > alo.0 { blo.clone() } else { alo.clone() };
            let hi = if bhi.0 < ahi.0 { bhi.clone() } else { ahi.clone() };
            (lo, hi)
        })
        .collect()
}

fn positively_overlaps(a: &[(Side, Side)], b: &[(Side, Side)]) -> bool {
    intersect_intervals(a, b).iter().all(|((lo, _), (hi, _))| hi > lo)
}

fn closed_form_region(pd: &PicardData, ab: &AmpleBasis, region: &CompiledRegion) -> Result<Estimate> {
    let t = region.t;
    let w: Vec<i64> = ab.coords(&pd.anticanonical);
    let all_axes: Vec<Vec<BoxAxis>> = region
        .polyhedra
        .iter()
        .map(|p| box_axes(p))
        .collect::<Result<_>>()?;
    let family: Vec<Vec<i64>> = all_axes[0].iter().map(|a| a.coords.clone()).collect();
    if family.len() != t {
        return Err(Error::InvalidRegion(format!(
            "closed form: the window constrains {} independent functionals, expected {t}",
            family.len()
        )));
    }
    for axes in &all_axes {
        if axes.len() != t || axes.iter().zip(&family).any(|(a, f)| &a.coords != f) {
            return Err(Error::InvalidRegion(
                "closed form: polyhedra are boxes over different functional families".into(),
            ));
        }
        if let Some(a) = axes.iter().find(|a| a.lo.is_none() || a.hi.is_none()) {
            return Err(Error::InvalidRegion(format!(
                "closed form: functional {:?} is bounded on one side only",
                a.coords
            )));
        }
    }
    // Solve Mᵀ w' = w so that ⟨ω⁻¹, ·⟩ = Σ_j w'_j · (functional j); |det M|
    // rescales Lebesgue measure between the two coordinate systems.
    let mt: Vec<Vec<Rat>> = (0..t)
        .map(|i| (0..t).map(|j| rat(family[j][i])).collect())
        .collect();
    let wr: Vec<Rat> = w.iter().map(|&x| rat(x)).collect();
    let wprime = crate::ratgeom::solve_square(&mt, &wr).ok_or_else(|| {
        Error::InvalidRegion("closed form: constraint functionals are linearly dependent".into())
    })?;
    let mrows: Vec<Vec<Rat>> = family
        .iter()
        .map(|row| row.iter().map(|&x| rat(x)).collect())
        .collect();
    let absdet = det_rat(&mrows).abs();

    let boxes: Vec<Vec<(Side, Side)>> = all_axes
        .iter()
        .map(|axes| {
            axes.iter()
                .map(|a| (a.lo.clone().unwrap(), a.hi.clone().unwrap()))
                .collect()
        })
        .collect();
    let n = boxes.len();
    let total = if n <= 4 {
        // inclusion–exclusion; every intersection of boxes is again a box
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut iv: Option<Vec<(Side, Side)>> = None;
            for (i, b) in boxes.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    iv = Some(match iv {
                        None => b.clone(),
                        Some(cur) => intersect_intervals(&cur, b),
                    });
                }
            }
            let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * intervals_value(&iv.unwrap(), &wprime, &absdet);
        }
        total
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if positively_overlaps(&boxes[i], &boxes[j]) {
                    return Err(Error::InvalidRegion(
                        "closed form: more than 4 polyhedra with positive-volume overlaps; \
                         make them disjoint or use Monte Carlo"
                            .into(),
                    ));
                }
            }
        }
        boxes
            .iter()
            .map(|b| intervals_value(b, &wprime, &absdet))
            .sum()
    };
    Ok(Estimate::exact(total.max(0.0)))
}

fn monte_carlo_region(
    pd: &PicardData,
    ab: &AmpleBasis,
    region: &CompiledRegion,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo needs at least 2 samples, got {samples}"
        )));
    }
    let t = region.t;
    let w: Vec<f64> = ab
        .coords(&pd.anticanonical)
        .iter()
        .map(|&x| x as f64)
        .collect();
    let mut lo = vec![f64::INFINITY; t];
    let mut hi = vec![f64::NEG_INFINITY; t];
    let mut nonempty = false;
    for poly in &region.polyhedra {
        let ineqs = poly_ineqs(poly);
        if !fm_feasible(&ineqs, t) {
            continue;
        }
        nonempty = true;
        for k in 0..t {
            let mut obj = vec![rat(0); t];
            obj[k] = rat(1);
            for (minimize, target) in [(true, &mut lo), (false, &mut hi)] {
                let outcome = if minimize {
                    lp_min(&ineqs, t, &obj)
                } else {
                    lp_max(&ineqs, t, &obj)
                };
                match outcome {
                    LpOutcome::Infeasible => {}
                    LpOutcome::Unbounded => {
                        return Err(Error::Internal(
                            "window certified bounded but a coordinate is unbounded".into(),
                        ))
                    }
                    LpOutcome::Value(v) => {
                        let f = rat_to_f64(&v);
                        target[k] = if minimize { target[k].min(f) } else { target[k].max(f) };
                    }
                }
            }
        }
    }
    if !nonempty {
        return Ok(Estimate::exact(0.0));
    }
    Ok(mc_integral(&lo, &hi, samples, seed, |h| {
        'poly: for poly in &region.polyhedra {
            for c in poly {
                let x = c.pair_h(h);
                if let Some(b) = &c.min {
                    if x < b.value {
                        continue 'poly;
                    }
                }
                if let Some(b) = &c.max {
                    if x > b.value {
                        continue 'poly;
                    }
                }
            }
            return h.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().exp();
        }
        0.0
    }))
}

/// ∫ over the window of exp⟨ω⁻¹, y⟩ dy, with Lebesgue measure normalized to
/// the dual class lattice (unit cubes in the basis-pairing coordinates).
pub fn nu_region(
    pd: &PicardData,
    ab: &AmpleBasis,
    region: &CompiledRegion,
    method: NuMethod,
) -> Result<Estimate> {
    match method {
        NuMethod::ClosedFormBox => closed_form_region(pd, ab, region),
        NuMethod::MonteCarlo { samples, seed } => {
            monte_carlo_region(pd, ab, region, samples, seed)
        }
    }
}

/// Closed form when the window is a compatible family of boxes, Monte Carlo
/// otherwise.
pub fn nu_region_auto(
    pd: &PicardData,
    ab: &AmpleBasis,
    region: &CompiledRegion,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    match closed_form_region(pd, ab, region) {
        Ok(e) => Ok(e),
        Err(Error::InvalidRegion(_)) => monte_carlo_region(pd, ab, region, samples, seed),
        Err(e) => Err(e),
    }
}

/// Monte-Carlo Lebesgue volume of the shell {y ∈ R^m : every height is
/// defined and the height vector lies in the window}, sampled uniformly in
/// the box given by the real-shell coordinate bounds at B = 1.
pub fn torsor_region_volume(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo needs at least 2 samples, got {samples}"
        )));
    }
    let bounds = real_coordinate_bounds(f, pd, sb, region, None)?;
    if bounds.iter().all(|&b| b == 0.0) {
        return Err(Error::InvalidRegion(
            "window is empty: the sampling box has zero volume".into(),
        ));
    }
    let pr = crate::region::prepare_region(region, None);
    let lo: Vec<f64> = bounds.iter().map(|&b| -b).collect();
    Ok(mc_integral(&lo, &bounds, samples, seed, |y| {
        match multi_height_real::<f64>(sb, y) {
            Ok(h) if window_contains(&pr, &h, 0.0) => 1.0,
            _ => 0.0,
        }
    }))
}

/// Canonical form for deciding whether two compiled windows are the same.
fn window_fingerprint(
    region: &CompiledRegion,
) -> Vec<Vec<(Vec<i64>, Option<u64>, Option<u64>, bool, bool)>> {
    let mut polys: Vec<_> = region
        .polyhedra
        .iter()
        .map(|poly| {
            let mut cs: Vec<_> = poly
                .iter()
                .map(|c| {
                    (
                        c.coords.clone(),
                        c.min.as_ref().map(|b| b.value.to_bits()),
                        c.max.as_ref().map(|b| b.value.to_bits()),
                        c.min_inclusive,
                        c.max_inclusive,
                    )
                })
                .collect();
            cs.sort();
            cs
        })
        .collect();
    polys.sort();
    polys
}

/// A box window guaranteed to differ from the given one, for the
/// region-independence check.
fn alt_check_region(
    pd: &PicardData,
    ab: &AmpleBasis,
    region: &CompiledRegion,
) -> Result<CompiledRegion> {
    for hi in [rat_frac(5, 2), rat(3)] {
        let windows: Vec<(BoundSpec, BoundSpec)> = (0..ab.t())
            .map(|_| (BoundSpec::from_log_rat(rat(1)), BoundSpec::from_log_rat(hi.clone())))
            .collect();
        let candidate = compile_region(pd, ab, &box_region(pd, ab, &windows)?)?;
        if window_fingerprint(&candidate) != window_fingerprint(region) {
            return Ok(candidate);
        }
    }
    Err(Error::Internal(
        "no check window distinct from the input window".into(),
    ))
}

/// ν, shell volume, and archimedean density μ_∞ = volume / (2^t ν), with the
/// mandatory region-independence check: the same μ_∞ recomputed on an
/// independent window must agree within 3 combined standard errors.
fn density_components(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    samples: u64,
    seed: u64,
) -> Result<(Estimate, Estimate, Estimate)> {
    let ab = &sb.basis;
    let nu = nu_region_auto(pd, ab, region, samples, seed ^ SALT_NU)?;
    if !(nu.value > 0.0) {
        return Err(Error::InvalidRegion(
            "window has empty interior: nu = 0".into(),
        ));
    }
    let vol = torsor_region_volume(f, pd, sb, region, samples, seed)?;
    let scale = (2f64).powi(pd.t as i32).recip();
    let mu = vol.div(&nu).scale(scale);

    let alt = alt_check_region(pd, ab, region)?;
    let nu2 = nu_region(pd, ab, &alt, NuMethod::ClosedFormBox)?;
    let vol2 = torsor_region_volume(f, pd, sb, &alt, samples, seed ^ SALT_CHECK)?;
    let mu2 = vol2.div(&nu2).scale(scale);
    if !mu.agrees(&mu2, 3.0) {
        return Err(Error::Inconsistent(format!(
            "archimedean density depends on the window: {:.6} ± {:.2e} here vs {:.6} ± {:.2e} \
             on the check window",
            mu.value, mu.sigma, mu2.value, mu2.sigma
        )));
    }
    Ok((nu, vol, mu))
}

/// μ_∞ alone; see `density_components` for the consistency guarantee.
pub fn real_density(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    density_components(f, pd, sb, region, samples, seed).map(|(_, _, mu)| mu)
}

/// Finite Euler product with a rigorous multiplicative tail enclosure.
#[derive(Clone, Debug)]
pub struct EulerProduct {
    /// Product of the local densities over all primes ≤ p_max.
    pub value: f64,
    /// The omitted tail lies in [tail.0, tail.1] (multiplicative).
    pub tail: (f64, f64),
    pub p_max: u64,
}

fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        out.push(p as u64);
        let mut q = p * p;
        while q <= n {
            composite[q] = true;
            q += p;
        }
    }
    out
}

/// Numerator Σ_j c_j p^{m−j} of the local density over the denominator p^m.
fn factor_numerator(c: &[i64], p: u64) -> BigInt {
    let pb = BigInt::from(p);
    let mut n = BigInt::zero();
    for &cj in c {
        n = n * &pb + BigInt::from(cj);
    }
    n
}

/// ∏_{p ≤ p_max} of the local density, computed exactly as a ratio of big
/// integers and converted to a float once at the end.  The tail over p >
/// p_max has |log| ≤ S = (Σ_{j≥2} |c_j|)·Σ_{p>p_max} p^{−2} ≤ (Σ|c_j|)/(p_max−1),
/// giving the enclosure [e^{−S}, e^{S}].
pub fn euler_product(f: &Fan, p_max: u64) -> Result<EulerProduct> {
    if p_max < 11 {
        return Err(Error::InvalidConfig(format!(
            "p_max must be at least 11, got {p_max}"
        )));
    }
    if p_max > 100_000_000 {
        return Err(Error::InvalidConfig(format!(
            "p_max above 10^8 is not supported, got {p_max}"
        )));
    }
    let table = mobius_table(f)?;
    let c = table.density_poly();
    let m = f.m();
    if c[0] != 1 || c[1] != 0 {
        return Err(Error::Internal(format!(
            "local density polynomial must start 1 + 0/p + …, got {c:?}"
        )));
    }
    let primes = primes_up_to(p_max);
    // small factors double-checked against the independently verified local
    // densities (which themselves assert the point-count identity)
    for &p in primes.iter().take_while(|&&p| p <= 100) {
        let factor = Rat::new(factor_numerator(&c, p), BigInt::from(p).pow(m as u32));
        if factor != local_density(f, p)? {
            return Err(Error::Internal(format!(
                "Euler factor at p = {p} disagrees with the local density"
            )));
        }
    }
    let chunks: Vec<(BigInt, BigInt)> = primes
        .par_chunks(512)
        .map(|chunk| {
            let mut num = BigInt::one();
            let mut den = BigInt::one();
            for &p in chunk {
                let n = factor_numerator(&c, p);
                debug_assert!(n.is_positive(), "local density must be positive at p = {p}");
                num *= n;
                den *= BigInt::from(p).pow(m as u32);
            }
            (num, den)
        })
        .collect();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (a, b) in chunks {
        num *= a;
        den *= b;
    }
    let value = big_ratio_to_f64(&num, &den);
    let s_coef: i64 = c.iter().skip(2).map(|&x| x.abs()).sum();
    let s = s_coef as f64 / (p_max - 1) as f64;
    Ok(EulerProduct { value, tail: ((-s).exp(), s.exp()), p_max })
}

/// Report configuration; counts are unaffected by any of it.
#[derive(Clone, Debug)]
pub struct PredictConfig {
    pub samples: u64,
    pub seed: u64,
    pub p_max: u64,
    /// Slack in the error-exponent diagnostic; must lie in (0, 1 − 1/f).
    pub epsilon: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig { samples: 1_000_000, seed: 0, p_max: 100_000, epsilon: 0.05 }
    }
}

/// Everything on the prediction side, with provenance.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub nu: Estimate,
    pub torsor_volume: Estimate,
    pub real_density: Estimate,
    pub euler: EulerProduct,
    /// real_density · euler.value (tail enclosure kept separately).
    pub tamagawa: Estimate,
    /// ⟨ω⁻¹, u⟩: growth exponent of the point count.
    pub growth_exponent: Rat,
    /// min_ρ ⟨[D_ρ], u⟩: the slowest-growing coordinate direction.
    pub min_pairing: Rat,
    /// Smallest primitive-collection size.
    pub f_min: usize,
    pub epsilon: f64,
    /// (1 − 1/f − ε) · min_ρ ⟨[D_ρ], u⟩: expected decay rate of the relative
    /// error of the prediction.
    pub error_exponent: f64,
    pub samples: u64,
    pub seed: u64,
    pub fan_hash: String,
}

impl DensityReport {
    /// Predicted point count at scale B: ν · τ · B^⟨ω⁻¹,u⟩.
    pub fn prediction(&self, b: f64) -> f64 {
        self.nu.value * self.tamagawa.value * b.powf(rat_to_f64(&self.growth_exponent))
    }

    /// Three-standard-error band around the prediction with the Euler tail
    /// enclosure propagated multiplicatively.
    pub fn prediction_interval(&self, b: f64) -> (f64, f64) {
        let g = b.powf(rat_to_f64(&self.growth_exponent));
        let nu_lo = (self.nu.value - 3.0 * self.nu.sigma).max(0.0);
        let nu_hi = self.nu.value + 3.0 * self.nu.sigma;
        let mu_lo = (self.real_density.value - 3.0 * self.real_density.sigma).max(0.0);
        let mu_hi = self.real_density.value + 3.0 * self.real_density.sigma;
        (
            nu_lo * mu_lo * self.euler.value * self.euler.tail.0 * g,
            nu_hi * mu_hi * self.euler.value * self.euler.tail.1 * g,
        )
    }
}

/// Assemble the full prediction report for a window and growth direction.
pub fn predict(
    f: &Fan,
    pd: &PicardData,
    sb: &SectionBasis,
    region: &CompiledRegion,
    dir: &GrowthDirection,
    cfg: &PredictConfig,
) -> Result<DensityReport> {
    if cfg.samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 Monte Carlo samples, got {}",
            cfg.samples
        )));
    }
    let f_min = min_collection_size(f)?;
    let eps_cap = 1.0 - 1.0 / f_min as f64;
    if !(cfg.epsilon > 0.0 && cfg.epsilon < eps_cap) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0, {eps_cap}), got {}",
            cfg.epsilon
        )));
    }
    let (nu, torsor_volume, real_density) =
        density_components(f, pd, sb, region, cfg.samples, cfg.seed)?;
    let euler = euler_product(f, cfg.p_max)?;
    let tamagawa = real_density.scale(euler.value);
    if !(tamagawa.value > 0.0) {
        return Err(Error::Inconsistent(
            "Tamagawa estimate is zero; increase the sample count".into(),
        ));
    }
    let growth_exponent = dir.omega_pairing();
    let min_pairing = dir
        .pairings
        .iter()
        .min()
        .cloned()
        .ok_or_else(|| Error::Internal("growth direction with no ray pairings".into()))?;
    let error_exponent =
        (1.0 - 1.0 / f_min as f64 - cfg.epsilon) * rat_to_f64(&min_pairing);
    Ok(DensityReport {
        nu,
        torsor_volume,
        real_density,
        euler,
        tamagawa,
        growth_exponent,
        min_pairing,
        f_min,
        epsilon: cfg.epsilon,
        error_exponent,
        samples: cfg.samples,
        seed: cfg.seed,
        fan_hash: fan_hash(f),
    })
}
