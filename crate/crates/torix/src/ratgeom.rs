//! Exact rational linear geometry: inequality systems, Fourier–Motzkin
//! elimination, linear programs, and vertex enumeration.
//!
//! All geometry questions the library asks (is a cone intersection exactly a
//! shared face, is a region bounded, what is the supremum of a linear form
//! over a polyhedron) are answered here over `BigRational`, so no tolerance
//! ever enters a yes/no geometric decision.  Problem sizes are tiny — a
//! handful of variables, dozens of inequalities — so the quadratic blowup of
//! Fourier–Motzkin is irrelevant.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Linear inequality `coeffs . x >= rhs`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Ineq {
    pub coeffs: Vec<Rat>,
    pub rhs: Rat,
}

impl Ineq {
    pub fn new(coeffs: Vec<Rat>, rhs: Rat) -> Self {
        Ineq { coeffs, rhs }
    }

    pub fn from_i64(coeffs: &[i64], rhs: i64) -> Self {
        Ineq { coeffs: coeffs.iter().map(|&c| rat(c)).collect(), rhs: rat(rhs) }
    }

    pub fn holds(&self, x: &[Rat]) -> bool {
        dot(&self.coeffs, x) >= self.rhs
    }

    /// Scale to a canonical representative (largest |coefficient| becomes 1)
    /// so that duplicates produced by elimination collapse.
    fn normalized(&self) -> Ineq {
        let max = self.coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(Rat::zero);
        if max.is_zero() {
            return self.clone();
        }
        Ineq {
            coeffs: self.coeffs.iter().map(|c| c / &max).collect(),
            rhs: &self.rhs / &max,
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero) && !self.rhs.is_positive()
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_i64(a: &[i64], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, y)| y * Rat::from_integer(BigInt::from(x))).sum()
}

/// Eliminate variable `var` from the system, returning consequences over the
/// remaining variables (the `var` column of every output row is zero).
fn eliminate_var(ineqs: &[Ineq], var: usize) -> Vec<Ineq> {
    let mut lower = Vec::new(); // coefficient > 0: gives a lower bound on x_var
    let mut upper = Vec::new(); // coefficient < 0: gives an upper bound
    let mut keep = BTreeSet::new();
    for q in ineqs {
        let c = &q.coeffs[var];
        if c.is_zero() {
            if !q.is_trivial() {
                keep.insert(q.normalized());
            }
        } else if c.is_positive() {
            lower.push(q);
        } else {
            upper.push(q);
        }
    }
    for lo in &lower {
        for hi in &upper {
            let cl = lo.coeffs[var].clone(); // > 0
            let ch = -hi.coeffs[var].clone(); // > 0
            let coeffs: Vec<Rat> = lo
                .coeffs
                .iter()
                .zip(&hi.coeffs)
                .map(|(a, b)| a * &ch + b * &cl)
                .collect();
            let rhs = &lo.rhs * &ch + &hi.rhs * &cl;
            let q = Ineq { coeffs, rhs };
            debug_assert!(q.coeffs[var].is_zero());
            if !q.is_trivial() {
                keep.insert(q.normalized());
            }
        }
    }
    keep.into_iter().collect()
}

/// Exact feasibility of `{x : q.coeffs . x >= q.rhs for all q}`.
pub fn fm_feasible(ineqs: &[Ineq], dim: usize) -> bool {
    let mut sys: Vec<Ineq> = ineqs.to_vec();
    for var in 0..dim {
        sys = eliminate_var(&sys, var);
    }
    // Only constant rows remain: 0 >= rhs must hold.
    sys.iter().all(|q| !q.rhs.is_positive())
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Value(Rat),
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rat> {
        match self {
            LpOutcome::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Exact supremum of `objective . x` over the feasible set, computed by
/// adjoining `t = objective . x` and eliminating every original variable.
pub fn lp_max(ineqs: &[Ineq], dim: usize, objective: &[Rat]) -> LpOutcome {
    assert_eq!(objective.len(), dim);
    let mut sys: Vec<Ineq> = Vec::with_capacity(ineqs.len() + 2);
    for q in ineqs {
        let mut c = q.coeffs.clone();
        c.push(Rat::zero());
        sys.push(Ineq::new(c, q.rhs.clone()));
    }
    // t - objective . x >= 0 and objective . x - t >= 0
    let mut up: Vec<Rat> = objective.iter().map(|c| -c.clone()).collect();
    up.push(Rat::one());
    sys.push(Ineq::new(up, Rat::zero()));
    let mut lo: Vec<Rat> = objective.to_vec();
    lo.push(-Rat::one());
    sys.push(Ineq::new(lo, Rat::zero()));

    for var in 0..dim {
        sys = eliminate_var(&sys, var);
    }

    let mut best_upper: Option<Rat> = None;
    let mut best_lower: Option<Rat> = None;
    for q in &sys {
        let c = &q.coeffs[dim];
        if c.is_zero() {
            if q.rhs.is_positive() {
                return LpOutcome::Infeasible;
            }
        } else if c.is_positive() {
            let b = &q.rhs / c;
            if best_lower.as_ref().map_or(true, |cur| b > *cur) {
                best_lower = Some(b);
            }
        } else {
            let b = &q.rhs / c;
            if best_upper.as_ref().map_or(true, |cur| b < *cur) {
                best_upper = Some(b);
            }
        }
    }
    match (best_lower, best_upper) {
        (Some(l), Some(u)) if l > u => LpOutcome::Infeasible,
        (_, Some(u)) => LpOutcome::Value(u),
        (_, None) => LpOutcome::Unbounded,
    }
}

pub fn lp_min(ineqs: &[Ineq], dim: usize, objective: &[Rat]) -> LpOutcome {
    let neg: Vec<Rat> = objective.iter().map(|c| -c.clone()).collect();
    match lp_max(ineqs, dim, &neg) {
        LpOutcome::Value(v) => LpOutcome::Value(-v),
        other => other,
    }
}

/// Does the recession cone `{r : q.coeffs . r >= 0}` contain a nonzero ray?
/// Equivalently, is the feasible set unbounded (when nonempty)?
pub fn recession_unbounded(ineqs: &[Ineq], dim: usize) -> bool {
    let cone: Vec<Ineq> = ineqs
        .iter()
        .map(|q| Ineq::new(q.coeffs.clone(), Rat::zero()))
        .collect();
    for i in 0..dim {
        for sign in [1i64, -1] {
            let mut sys = cone.clone();
            let mut c = vec![Rat::zero(); dim];
            c[i] = rat(sign);
            sys.push(Ineq::new(c, Rat::one()));
            if fm_feasible(&sys, dim) {
                return true;
            }
        }
    }
    false
}

/// Solve the square system `a x = b` by exact Gaussian elimination; `None`
/// when the matrix is singular.
pub fn solve_square(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, pivot);
        let p = m[k][k].clone();
        for j in k..=n {
            m[k][j] = &m[k][j] / &p;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in k..=n {
                    m[i][j] = &m[i][j] - &f * &m[k][j];
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// All vertices of the (assumed pointed) polyhedron, as exact points.
/// Every size-`dim` subset of constraints is intersected; solutions that
/// satisfy the whole system are kept.  Use `recession_unbounded` first if
/// boundedness matters.
pub fn polytope_vertices(ineqs: &[Ineq], dim: usize) -> Vec<Vec<Rat>> {
    let m = ineqs.len();
    let mut verts: BTreeSet<Vec<Rat>> = BTreeSet::new();
    if dim == 0 || m < dim {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let a: Vec<Vec<Rat>> = idx.iter().map(|&i| ineqs[i].coeffs.clone()).collect();
        let b: Vec<Rat> = idx.iter().map(|&i| ineqs[i].rhs.clone()).collect();
        if let Some(x) = solve_square(&a, &b) {
            if ineqs.iter().all(|q| q.holds(&x)) {
                verts.insert(x);
            }
        }
        // next combination in lexicographic order
        let mut i = dim;
        loop {
            if i == 0 {
                return verts.into_iter().collect();
            }
            i -= 1;
            if idx[i] != i + m - dim {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Integer points of the (bounded) feasible set, in lexicographic order.
/// Bounds come from exact per-coordinate linear programs.
pub fn lattice_points(ineqs: &[Ineq], dim: usize) -> crate::error::Result<Vec<Vec<i64>>> {
    use crate::error::Error;
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut obj = vec![Rat::zero(); dim];
        obj[i] = Rat::one();
        let max = match lp_max(ineqs, dim, &obj) {
            LpOutcome::Value(v) => v,
            LpOutcome::Infeasible => return Ok(Vec::new()),
            LpOutcome::Unbounded => {
                return Err(Error::Internal(format!(
                    "lattice point enumeration on a set unbounded in coordinate {i}"
                )))
            }
        };
        let min = match lp_min(ineqs, dim, &obj) {
            LpOutcome::Value(v) => v,
            LpOutcome::Infeasible => return Ok(Vec::new()),
            LpOutcome::Unbounded => {
                return Err(Error::Internal(format!(
                    "lattice point enumeration on a set unbounded in coordinate {i}"
                )))
            }
        };
        hi.push(max.floor().to_integer());
        lo.push(min.ceil().to_integer());
    }
    let lo: Vec<i64> = lo
        .iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Internal("lattice box too large".into())))
        .collect::<crate::error::Result<_>>()?;
    let hi: Vec<i64> = hi
        .iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Internal("lattice box too large".into())))
        .collect::<crate::error::Result<_>>()?;

    let mut out = Vec::new();
    let mut point = lo.clone();
    if dim == 0 {
        return Ok(if fm_feasible(ineqs, 0) { vec![Vec::new()] } else { Vec::new() });
    }
    if (0..dim).any(|i| lo[i] > hi[i]) {
        return Ok(Vec::new());
    }
    'outer: loop {
        let xr: Vec<Rat> = point.iter().map(|&c| rat(c)).collect();
        if ineqs.iter().all(|q| q.holds(&xr)) {
            out.push(point.clone());
        }
        let mut i = dim;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if point[i] < hi[i] {
                point[i] += 1;
                for j in i + 1..dim {
                    point[j] = lo[j];
                }
                break;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Bridges from exact big-integer data to floating point.
// ---------------------------------------------------------------------------

/// `num / den` as `f64`, safe for operands far beyond the `f64` range.
/// Both are shifted down together until they fit comfortably.
pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    assert!(!den.is_zero(), "zero denominator");
    let bits = num.bits().max(den.bits());
    if bits <= 900 {
        let n = num.to_f64().expect("finite");
        let d = den.to_f64().expect("finite");
        return n / d;
    }
    let shift = bits - 900;
    let n = (num >> shift).to_f64().expect("finite");
    let d = (den >> shift).to_f64().expect("finite");
    n / d
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    big_ratio_to_f64(x.numer(), x.denom())
}

/// Natural log of a positive big integer, accurate to f64 precision even for
/// numbers far beyond the f64 range.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "ln of non-positive integer");
    let bits = x.bits();
    if bits <= 900 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let m = (x >> shift).to_f64().expect("finite");
    m.ln() + shift as f64 * std::f64::consts::LN_2
}
