//! Monomial bases of the line bundles in the chosen ample basis: for a class
//! L, the exponent vectors of all monomials of that class, i.e. nonnegative
//! integer divisor vectors projecting to L.
//!
//! These exponent sets are the heart of the height function: the height of a
//! point in direction L_k is the log of the largest monomial value from M_k.

use crate::error::{Error, Result};
use crate::picard::{class_of, lift_class, AmpleBasis, PicardData};
use crate::ratgeom::{lattice_points, rat, Ineq};

/// All exponent vectors of class `L`: nonnegative c ∈ Z^m with π(c) = L.
/// The fiber of π over L is a translate of the character lattice, so the
/// vectors are enumerated as lattice points of the polytope
/// `{x : ⟨u_ρ, x⟩ ≥ −c0_ρ}` for any fixed lift c0 of L, then mapped back.
/// Result is lexicographically sorted and independent of the lift.
pub fn monomial_basis(pd: &PicardData, class: &[i64]) -> Result<Vec<Vec<i64>>> {
    let c0 = lift_class(pd, class)?;
    monomials_from_lift(pd, &c0)
}

fn monomials_from_lift(pd: &PicardData, c0: &[i64]) -> Result<Vec<Vec<i64>>> {
    let n = pd.n;
    let ineqs: Vec<Ineq> = (0..pd.m)
        .map(|r| {
            let coeffs = (0..n).map(|j| rat(pd.beta_star[(r, j)])).collect();
            Ineq::new(coeffs, rat(-c0[r]))
        })
        .collect();
    let points = lattice_points(&ineqs, n)?;
    let mut out: Vec<Vec<i64>> = points
        .into_iter()
        .map(|x| {
            let shift = pd.beta_star.mul_vec(&x);
            (0..pd.m).map(|r| c0[r] + shift[r]).collect()
        })
        .collect();
    debug_assert!(out.iter().all(|c| c.iter().all(|&e| e >= 0)));
    out.sort();
    Ok(out)
}

/// A class is effective exactly when it has at least one monomial.
pub fn is_effective(pd: &PicardData, class: &[i64]) -> Result<bool> {
    Ok(!monomial_basis(pd, class)?.is_empty())
}

/// The ample basis together with the monomial basis of each member.
#[derive(Clone, Debug)]
pub struct SectionBasis {
    pub basis: AmpleBasis,
    /// `monomials[k]` lists the exponent vectors of the k-th basis class,
    /// each of length m, lexicographically sorted.
    pub monomials: Vec<Vec<Vec<i64>>>,
}

impl SectionBasis {
    pub fn t(&self) -> usize {
        self.basis.t()
    }

    /// Number of monomials per basis class.
    pub fn counts(&self) -> Vec<usize> {
        self.monomials.iter().map(Vec::len).collect()
    }
}

/// Compute the monomial bases for every class of the ample basis and check
/// the structural facts the rest of the pipeline relies on.
pub fn build_section_basis(pd: &PicardData, basis: AmpleBasis) -> Result<SectionBasis> {
    let mut monomials = Vec::with_capacity(basis.t());
    for (k, class) in basis.classes.iter().enumerate() {
        let mk = monomial_basis(pd, class)?;
        if mk.len() < pd.n + 1 {
            return Err(Error::Internal(format!(
                "ample class #{k} {class:?} has only {} monomial(s); expected at least {}",
                mk.len(),
                pd.n + 1
            )));
        }
        for c in &mk {
            let back = class_of(pd, c)?;
            if &back != class {
                return Err(Error::Internal(format!(
                    "monomial {c:?} projects to {back:?}, expected {class:?}"
                )));
            }
        }
        monomials.push(mk);
    }
    Ok(SectionBasis { basis, monomials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::builtin_fan;
    use crate::picard::{ample_basis, compute_picard};

    fn setup(name: &str) -> (PicardData, AmpleBasis) {
        let pd = compute_picard(&builtin_fan(name).unwrap().fan).unwrap();
        let ab = ample_basis(&pd, None).unwrap();
        (pd, ab)
    }

    #[test]
    fn plane_and_line_monomials() {
        let (pd, _) = setup("P2");
        assert_eq!(
            monomial_basis(&pd, &[1]).unwrap(),
            vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]
        );
        // degree 2: all monomials of total degree 2 in three variables
        assert_eq!(monomial_basis(&pd, &[2]).unwrap().len(), 6);

        let (pd, _) = setup("P1");
        assert_eq!(monomial_basis(&pd, &[1]).unwrap(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn bidegree_monomials_factor() {
        let (pd, _) = setup("P1xP1");
        let m11 = monomial_basis(&pd, &[1, 1]).unwrap();
        assert_eq!(m11.len(), 4); // 2 × 2, one factor per ruling
        assert_eq!(
            m11,
            vec![
                vec![0, 1, 0, 1],
                vec![0, 1, 1, 0],
                vec![1, 0, 0, 1],
                vec![1, 0, 1, 0]
            ]
        );
        assert_eq!(monomial_basis(&pd, &[1, 2]).unwrap().len(), 6);
    }

    #[test]
    fn blown_up_plane_monomials() {
        let (pd, _) = setup("F1");
        let m = monomial_basis(&pd, &[1, 1]).unwrap();
        assert_eq!(
            m,
            vec![
                vec![0, 0, 1, 1],
                vec![0, 1, 2, 0],
                vec![1, 0, 0, 1],
                vec![1, 1, 1, 0],
                vec![2, 1, 0, 0]
            ]
        );
        assert_eq!(monomial_basis(&pd, &[1, 2]).unwrap().len(), 9);
    }

    #[test]
    fn non_effective_classes_have_no_monomials() {
        let (pd, _) = setup("P2");
        assert!(monomial_basis(&pd, &[-1]).unwrap().is_empty());
        assert!(!is_effective(&pd, &[-1]).unwrap());
        assert!(is_effective(&pd, &[0]).unwrap());
        let (pd, _) = setup("F1");
        // the negative of an effective class
        assert!(!is_effective(&pd, &[-1, -1]).unwrap());
    }

    #[test]
    fn result_is_independent_of_the_lift() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        for name in ["P2", "P1xP1", "F1", "dP6"] {
            let (pd, ab) = setup(name);
            for class in &ab.classes {
                let c0 = lift_class(&pd, class).unwrap();
                let base = monomials_from_lift(&pd, &c0).unwrap();
                for _ in 0..5 {
                    let x: Vec<i64> = (0..pd.n).map(|_| rng.random_range(-4..5)).collect();
                    let shift = pd.beta_star.mul_vec(&x);
                    let moved: Vec<i64> =
                        c0.iter().zip(&shift).map(|(&a, &b)| a + b).collect();
                    assert_eq!(monomials_from_lift(&pd, &moved).unwrap(), base, "{name}");
                }
            }
        }
    }

    #[test]
    fn sums_of_monomials_are_monomials_of_the_sum() {
        for name in ["P2", "P1xP1", "F1"] {
            let (pd, ab) = setup(name);
            let a = &ab.classes[0];
            let b = ab.classes.last().unwrap();
            let ma = monomial_basis(&pd, a).unwrap();
            let mb = monomial_basis(&pd, b).unwrap();
            let sum_class: Vec<i64> = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
            let msum = monomial_basis(&pd, &sum_class).unwrap();
            for ca in &ma {
                for cb in &mb {
                    let s: Vec<i64> = ca.iter().zip(cb).map(|(&x, &y)| x + y).collect();
                    assert!(msum.contains(&s), "{name}: {s:?} missing");
                }
            }
        }
    }

    #[test]
    fn counts_match_a_brute_force_polytope_scan() {
        for name in ["P2", "P1xP1", "F1", "dP7"] {
            let (pd, ab) = setup(name);
            for class in &ab.classes {
                let c0 = lift_class(&pd, class).unwrap();
                let mut brute = 0usize;
                for x1 in -25i64..=25 {
                    for x2 in -25i64..=25 {
                        let x = [x1, x2];
                        if (0..pd.m).all(|r| {
                            let pair: i64 =
                                (0..2).map(|j| pd.beta_star[(r, j)] * x[j]).sum();
                            pair >= -c0[r]
                        }) {
                            brute += 1;
                        }
                    }
                }
                let got = monomial_basis(&pd, class).unwrap().len();
                assert_eq!(got, brute, "{name} class {class:?}");
            }
        }
    }

    #[test]
    fn section_bases_of_builtins() {
        let (pd, ab) = setup("P2");
        let sb = build_section_basis(&pd, ab).unwrap();
        assert_eq!(sb.counts(), vec![3]);

        let (pd, ab) = setup("P1");
        let sb = build_section_basis(&pd, ab).unwrap();
        assert_eq!(sb.counts(), vec![2]);

        let (pd, ab) = setup("P1xP1");
        let sb = build_section_basis(&pd, ab).unwrap();
        assert_eq!(sb.counts(), vec![4, 6]);

        let (pd, ab) = setup("F1");
        let sb = build_section_basis(&pd, ab).unwrap();
        assert_eq!(sb.counts(), vec![5, 9]);

        for name in crate::fan::BUILTIN_NAMES {
            let (pd, ab) = setup(name);
            let sb = build_section_basis(&pd, ab).unwrap();
            for r in sb.counts() {
                assert!(r >= pd.n + 1, "{name}");
            }
        }
    }

    #[test]
    fn every_ray_is_either_missed_or_peelable() {
        // for each ray and each basis class: some monomial omits the ray, or
        // the class minus that ray class is still effective
        for name in crate::fan::BUILTIN_NAMES {
            let (pd, ab) = setup(name);
            let sb = build_section_basis(&pd, ab).unwrap();
            for (k, mk) in sb.monomials.iter().enumerate() {
                for rho in 0..pd.m {
                    let missed = mk.iter().any(|c| c[rho] == 0);
                    if !missed {
                        let reduced: Vec<i64> = sb.basis.classes[k]
                            .iter()
                            .zip(&pd.ray_classes[rho])
                            .map(|(&a, &b)| a - b)
                            .collect();
                        assert!(
                            is_effective(&pd, &reduced).unwrap(),
                            "{name}: class #{k} always uses ray {rho} but cannot peel it"
                        );
                    }
                }
            }
        }
    }
}
