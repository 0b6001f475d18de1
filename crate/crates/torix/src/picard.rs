//! The divisor class group of a smooth complete toric variety, realized as an
//! explicit quotient: `0 → M → Z^rays → Pic(X) → 0`.
//!
//! The basis of the quotient lattice is pinned by the Smith normal form of
//! the ray matrix (largest-pivot rule, ties to the lowest index), so every
//! class vector in reports and region documents means the same thing across
//! runs and machines.  Positivity of classes is decided integer-exactly by
//! pairing against the wall relations (one curve class per shared facet).

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::fan::{walls, Fan};
use crate::linalg::{inverse_unimodular, smith_normal_form, IMat};
use crate::ratgeom::{rat, Rat};

/// The exact-sequence data of a fan, in the canonical quotient basis.
#[derive(Clone, Debug)]
pub struct PicardData {
    /// Number of rays.
    pub m: usize,
    /// Dimension of the fan.
    pub n: usize,
    /// Picard rank, `m - n`.
    pub t: usize,
    /// m×n matrix whose ρ-th row is the ray u_ρ; as a map it sends a lattice
    /// character to its pairing with every ray.
    pub beta_star: IMat,
    /// t×m projection onto the class lattice Z^t.
    pub proj: IMat,
    /// m×t section of `proj`: `lift.mul_vec(class)` is a divisor vector with
    /// that class (`proj · lift = identity`).
    pub lift: IMat,
    /// Classes of the coordinate divisors: `ray_classes[ρ] = proj · e_ρ`.
    pub ray_classes: Vec<Vec<i64>>,
    /// Sum of all ray classes (the anticanonical class).
    pub anticanonical: Vec<i64>,
    /// One primitive curve relation per wall of the fan, in wall order:
    /// integer vectors r with `Σ_ρ r_ρ u_ρ = 0`, positive on the two rays
    /// outside the shared facet and supported on the two adjacent cones.
    pub wall_relations: Vec<Vec<i64>>,
}

/// Build the Picard data of a validated fan.
pub fn compute_picard(f: &Fan) -> Result<PicardData> {
    let m = f.m();
    let n = f.dim;
    let t = m - n;
    let beta_star = f.ray_matrix();
    let s = smith_normal_form(&beta_star);
    if s.rank < n {
        return Err(Error::Internal(format!(
            "rays span a sublattice of rank {} < {n}; fan cannot be complete",
            s.rank
        )));
    }
    if let Some(&d) = s.d.iter().find(|&&d| d != 0 && d != 1) {
        return Err(Error::Torsion(d));
    }
    // In the coordinates w = U·v on Z^m, the image of the ray-matrix columns
    // is spanned by the first n basis vectors, so the quotient is read off
    // the last t coordinates.
    let proj = s.u.row_block(n, m);
    let lift = {
        let u_inv = s.u_inv;
        let mut l = IMat::zeros(m, t);
        for i in 0..m {
            for j in 0..t {
                l[(i, j)] = u_inv[(i, n + j)];
            }
        }
        l
    };
    let ray_classes: Vec<Vec<i64>> = (0..m).map(|r| proj.col(r)).collect();
    let mut anticanonical = vec![0i64; t];
    for c in &ray_classes {
        for j in 0..t {
            anticanonical[j] += c[j];
        }
    }
    let wall_relations = wall_relations(f)?;
    Ok(PicardData {
        m,
        n,
        t,
        beta_star,
        proj,
        lift,
        ray_classes,
        anticanonical,
        wall_relations,
    })
}

/// Class of a divisor vector (length m) in the canonical basis of Z^t.
pub fn class_of(pd: &PicardData, coeffs: &[i64]) -> Result<Vec<i64>> {
    if coeffs.len() != pd.m {
        return Err(Error::InvalidConfig(format!(
            "divisor vector has length {}, expected {}",
            coeffs.len(),
            pd.m
        )));
    }
    Ok(pd.proj.mul_vec(coeffs))
}

/// A divisor vector with the given class (the canonical section of `proj`).
pub fn lift_class(pd: &PicardData, class: &[i64]) -> Result<Vec<i64>> {
    if class.len() != pd.t {
        return Err(Error::InvalidConfig(format!(
            "class vector has length {}, expected {}",
            class.len(),
            pd.t
        )));
    }
    Ok(pd.lift.mul_vec(class))
}

/// If `v` is an integer combination of the ray-matrix columns, return the
/// coefficients; otherwise `None`.  Verified by re-multiplication, so this is
/// an exactness check independent of `class_of`.
pub fn divisor_preimage(pd: &PicardData, v: &[i64]) -> Option<Vec<i64>> {
    assert_eq!(v.len(), pd.m);
    let s = smith_normal_form(&pd.beta_star);
    let w = s.u.mul_vec(v);
    // solvable iff the quotient coordinates vanish (invariant factors are 1)
    if w[pd.n..].iter().any(|&x| x != 0) {
        return None;
    }
    let x = s.v.mul_vec(&w[..pd.n]);
    if pd.beta_star.mul_vec(&x) == v { Some(x) } else { None }
}

/// One relation per wall: for adjacent max cones σ, σ′ sharing facet τ, the
/// ray of σ′ outside τ is an integer combination of σ's rays; moving
/// everything to one side gives the unique primitive relation positive on
/// both outside rays.
pub fn wall_relations(f: &Fan) -> Result<Vec<Vec<i64>>> {
    let m = f.m();
    let mut out = Vec::new();
    for wall in walls(f)? {
        let (a, b) = wall.cones;
        let ca = &f.max_cones[a];
        let cb = &f.max_cones[b];
        let outside_b = cb
            .iter()
            .find(|&i| !wall.facet.contains(i))
            .ok_or_else(|| Error::Internal("wall facet equal to a max cone".into()))?;
        let dual_a = f.cone_dual_rows(ca)?;
        let coeffs = dual_a.mul_vec(&f.rays[outside_b]);
        let mut r = vec![0i64; m];
        r[outside_b] = 1;
        for (pos, ray) in ca.iter().enumerate() {
            r[ray] -= coeffs[pos];
        }
        // sanity: the two rays outside the facet carry positive entries
        let outside_a = ca.iter().find(|&i| !wall.facet.contains(i)).unwrap();
        if r[outside_a] <= 0 || r[outside_b] <= 0 {
            return Err(Error::InvalidFan(format!(
                "cones {a} and {b} are on the same side of facet {}",
                wall.facet
            )));
        }
        debug_assert!(f.ray_matrix().transpose().mul_vec(&r).iter().all(|&x| x == 0));
        out.push(r);
    }
    Ok(out)
}

fn wall_pairings(pd: &PicardData, class: &[i64]) -> Result<Vec<i64>> {
    let c = lift_class(pd, class)?;
    Ok(pd
        .wall_relations
        .iter()
        .map(|r| r.iter().zip(&c).map(|(&a, &b)| a * b).sum())
        .collect())
}

/// Nonnegative pairing with every wall relation.  Independent of the chosen
/// divisor representative, because relations annihilate the ray-matrix image.
pub fn is_nef(pd: &PicardData, class: &[i64]) -> Result<bool> {
    Ok(wall_pairings(pd, class)?.iter().all(|&x| x >= 0))
}

/// Strictly positive pairing with every wall relation.
pub fn is_ample(pd: &PicardData, class: &[i64]) -> Result<bool> {
    Ok(wall_pairings(pd, class)?.iter().all(|&x| x > 0))
}

/// An ample Z-basis of the class lattice, with its exact inverse for
/// changing coordinates.
#[derive(Clone, Debug)]
pub struct AmpleBasis {
    /// t ample classes forming a Z-basis, in selection order.
    pub classes: Vec<Vec<i64>>,
    /// t×t matrix whose columns are the basis classes.
    pub matrix: IMat,
    /// Exact integer inverse of `matrix`.
    pub inv: IMat,
}

impl AmpleBasis {
    pub fn t(&self) -> usize {
        self.classes.len()
    }

    /// Integer coordinates of a class in this basis.
    pub fn coords(&self, class: &[i64]) -> Vec<i64> {
        self.inv.mul_vec(class)
    }

    /// The class with the given basis coordinates.
    pub fn combine(&self, coords: &[i64]) -> Vec<i64> {
        self.matrix.mul_vec(coords)
    }
}

/// Deterministic greedy search for an ample basis: integer classes are
/// enumerated by increasing sup-norm, then lexicographically; an ample class
/// is kept whenever the kept family stays saturated (extendable to a
/// Z-basis, i.e. all Smith invariant factors equal 1).  Success doubles as a
/// projectivity certificate for the fan.
pub fn ample_basis(pd: &PicardData, norm_bound: Option<i64>) -> Result<AmpleBasis> {
    let t = pd.t;
    let bound = norm_bound.unwrap_or(10 * t as i64).max(1);
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(t);
    'norms: for norm in 1..=bound {
        // walk [-norm, norm]^t in lexicographic order, keeping only points
        // whose sup-norm is exactly `norm` (smaller ones were already seen)
        let mut cur = vec![-norm; t];
        loop {
            if cur.iter().any(|&x| x.abs() == norm)
                && is_ample(pd, &cur)?
                && extends_saturated(&chosen, &cur, t)
            {
                chosen.push(cur.clone());
                if chosen.len() == t {
                    break 'norms;
                }
            }
            let mut advanced = false;
            for i in (0..t).rev() {
                if cur[i] < norm {
                    cur[i] += 1;
                    for x in cur.iter_mut().skip(i + 1) {
                        *x = -norm;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    if chosen.len() != t {
        return Err(Error::ProjectivityNotCertified { bound });
    }
    let mut matrix = IMat::zeros(t, t);
    for (j, c) in chosen.iter().enumerate() {
        for i in 0..t {
            matrix[(i, j)] = c[i];
        }
    }
    let inv = inverse_unimodular(&matrix)
        .map_err(|_| Error::Internal("saturated family of size t is not a basis".into()))?;
    Ok(AmpleBasis { classes: chosen, matrix, inv })
}

fn extends_saturated(chosen: &[Vec<i64>], candidate: &[i64], t: usize) -> bool {
    let k = chosen.len() + 1;
    let mut m = IMat::zeros(t, k);
    for (j, c) in chosen.iter().enumerate() {
        for i in 0..t {
            m[(i, j)] = c[i];
        }
    }
    for i in 0..t {
        m[(i, k - 1)] = candidate[i];
    }
    let s = smith_normal_form(&m);
    s.rank == k && s.d.iter().take(k).all(|&d| d == 1)
}

/// A growth direction, given by its (positive) pairings with the ray classes.
#[derive(Clone, Debug)]
pub struct GrowthDirection {
    /// Pairing with each ray class; all strictly positive.
    pub pairings: Vec<Rat>,
    /// The induced functional on the class lattice Z^t.
    pub class_dual: Vec<Rat>,
}

impl GrowthDirection {
    /// Pairing with an arbitrary class vector.
    pub fn pair_class(&self, class: &[i64]) -> Rat {
        class
            .iter()
            .zip(&self.class_dual)
            .map(|(&c, d)| d * rat(c))
            .sum()
    }

    /// Pairing with the anticanonical class (the growth exponent of the
    /// point count); equals the sum of all ray pairings.
    pub fn omega_pairing(&self) -> Rat {
        self.pairings.iter().cloned().sum()
    }
}

/// Check that the given ray pairings are strictly positive and constant on
/// divisor classes (annihilate the ray-matrix columns), and compute the
/// induced functional on Z^t.
pub fn validate_direction(pd: &PicardData, pairings: &[Rat]) -> Result<GrowthDirection> {
    if pairings.len() != pd.m {
        return Err(Error::InvalidDirection(format!(
            "expected {} pairings (one per ray), got {}",
            pd.m,
            pairings.len()
        )));
    }
    if let Some((rho, c)) = pairings.iter().enumerate().find(|(_, c)| !c.is_positive()) {
        return Err(Error::InvalidDirection(format!(
            "pairing with ray class {rho} is {c}, but the direction must be interior \
             (all ray pairings strictly positive)"
        )));
    }
    for j in 0..pd.n {
        let s: Rat = (0..pd.m)
            .map(|r| rat(pd.beta_star[(r, j)]) * &pairings[r])
            .sum();
        if !s.is_zero() {
            return Err(Error::InvalidDirection(format!(
                "pairings do not descend to divisor classes: lattice coordinate {j} \
                 pairs to {s}, expected 0"
            )));
        }
    }
    let mut class_dual = Vec::with_capacity(pd.t);
    for j in 0..pd.t {
        let v: Rat = (0..pd.m).map(|r| rat(pd.lift[(r, j)]) * &pairings[r]).sum();
        class_dual.push(v);
    }
    let dir = GrowthDirection { pairings: pairings.to_vec(), class_dual };
    debug_assert!(pd
        .ray_classes
        .iter()
        .zip(&dir.pairings)
        .all(|(c, p)| &dir.pair_class(c) == p));
    Ok(dir)
}
