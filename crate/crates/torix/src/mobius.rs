//! The Möbius function of the coprimality condition cutting the integral
//! torsor points out of the lattice, and the exact local densities it
//! produces.
//!
//! The condition "no prime divides all coordinates of some primitive
//! collection" factors over primes, so the whole function is determined by
//! one inclusion–exclusion table over the collections: for a set of rays A,
//! the local value is Σ (−1)^#F over families F of distinct collections with
//! union A.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fan::{count_points_mod_p, primitive_collections, Fan, RaySet};
use crate::ratgeom::Rat;

/// Largest number of primitive collections the inclusion–exclusion sweep
/// will enumerate families over.
pub const MAX_COLLECTIONS: usize = 20;

/// The per-prime Möbius table of a fan: all sets of rays with nonzero local
/// value, and that value.  Identical for every prime.
#[derive(Clone, Debug)]
pub struct MobiusLocalTable {
    m: usize,
    /// Nonzero entries only; always contains the empty set with value 1.
    pub entries: BTreeMap<RaySet, i64>,
}

/// Build the local table by summing (−1)^#F over every nonempty family F of
/// distinct primitive collections, accumulated at the family's union.
pub fn mobius_table(f: &Fan) -> Result<MobiusLocalTable> {
    let pcs = primitive_collections(f);
    if pcs.len() > MAX_COLLECTIONS {
        return Err(Error::UnsupportedScale(format!(
            "fan has {} primitive collections; at most {MAX_COLLECTIONS} are supported",
            pcs.len()
        )));
    }
    let pc_masks: Vec<u32> = pcs.iter().map(RaySet::mask).collect();
    let mut acc: BTreeMap<u32, i64> = BTreeMap::new();
    acc.insert(0, 1);
    for fam in 1u32..(1u32 << pc_masks.len()) {
        let mut union = 0u32;
        let mut rest = fam;
        while rest != 0 {
            union |= pc_masks[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        let sign = if fam.count_ones() % 2 == 1 { -1 } else { 1 };
        *acc.entry(union).or_insert(0) += sign;
    }
    let entries = acc
        .into_iter()
        .filter(|&(_, v)| v != 0)
        .map(|(mask, v)| (RaySet::from_mask(mask), v))
        .collect();
    Ok(MobiusLocalTable { m: f.m(), entries })
}

impl MobiusLocalTable {
    /// Local value at a set of rays (0 when absent from the table).
    pub fn local(&self, a: &RaySet) -> i64 {
        self.entries.get(a).copied().unwrap_or(0)
    }

    fn local_mask(&self, mask: u32) -> i64 {
        self.local(&RaySet::from_mask(mask))
    }

    /// Smallest size of a nonempty set with nonzero value.
    pub fn min_support(&self) -> Option<usize> {
        self.entries
            .keys()
            .filter(|a| !a.is_empty())
            .map(RaySet::len)
            .min()
    }

    /// Coefficients c_j of the local density as a polynomial Σ c_j x^j in
    /// x = 1/p: c_j sums the local values over sets of size j.
    pub fn density_poly(&self) -> Vec<i64> {
        let mut c = vec![0i64; self.m + 1];
        for (a, v) in &self.entries {
            c[a.len()] += v;
        }
        c
    }

    /// Möbius value at a vector of positive moduli: zero unless every entry
    /// is squarefree, otherwise the product over primes p of the local value
    /// at {ρ : p | d_ρ}.
    pub fn value(&self, d: &[u64]) -> Result<i64> {
        if d.len() != self.m {
            return Err(Error::InvalidConfig(format!(
                "modulus vector has length {}, expected {}",
                d.len(),
                self.m
            )));
        }
        if let Some(rho) = d.iter().position(|&x| x == 0) {
            return Err(Error::InvalidConfig(format!(
                "modulus at coordinate {rho} must be positive"
            )));
        }
        let mut supports: BTreeMap<u64, u32> = BTreeMap::new();
        for (rho, &dv) in d.iter().enumerate() {
            let mut x = dv;
            let mut p = 2u64;
            while p * p <= x {
                if x % p == 0 {
                    x /= p;
                    if x % p == 0 {
                        return Ok(0);
                    }
                    *supports.entry(p).or_default() |= 1 << rho;
                }
                p += 1;
            }
            if x > 1 {
                *supports.entry(x).or_default() |= 1 << rho;
            }
        }
        let mut prod = 1i64;
        for &mask in supports.values() {
            prod *= self.local_mask(mask);
            if prod == 0 {
                return Ok(0);
            }
        }
        Ok(prod)
    }
}

/// Convenience wrapper over a freshly built table.
pub fn mobius_local(f: &Fan, a: &RaySet) -> Result<i64> {
    Ok(mobius_table(f)?.local(a))
}

/// Convenience wrapper over a freshly built table.
pub fn mobius_value(f: &Fan, d: &[u64]) -> Result<i64> {
    mobius_table(f)?.value(d)
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Density of p-adic integer vectors satisfying the collection-wise
/// coprimality condition: Σ over the table of μ(A)·p^(−#A), exactly.
///
/// The same density must equal (1 − 1/p)^t · #X(F_p) / p^n; the equality of
/// the two independently computed rationals is asserted on every call, and a
/// violation is reported as an internal error (it would mean the Möbius
/// table and the cone census disagree).
pub fn local_density(f: &Fan, p: u64) -> Result<Rat> {
    if !is_prime(p) {
        return Err(Error::InvalidConfig(format!("{p} is not prime")));
    }
    let table = mobius_table(f)?;
    let pb = BigInt::from(p);
    let mut sum = Rat::zero();
    for (a, v) in &table.entries {
        sum += Rat::new(BigInt::from(*v), pb.pow(a.len() as u32));
    }

    let t = f.picard_rank() as u32;
    let n = f.dim as u32;
    let points = count_points_mod_p(f, &num_bigint::BigUint::from(p))?;
    let frac = Rat::new(BigInt::from(p) - BigInt::one(), pb.clone()).pow(t as i32)
        * Rat::new(BigInt::from(points), pb.pow(n));
    if sum != frac {
        return Err(Error::Internal(format!(
            "local density mismatch at p = {p}: inclusion–exclusion gives {sum}, \
             point count gives {frac}"
        )));
    }
    Ok(sum)
}
