//! Small exact integer matrices and the Smith normal form.
//!
//! Matrices here are desk scale (at most a dozen rows), so everything is a
//! dense row-major `i64` buffer with exact arithmetic.  Overflow checks are
//! enabled workspace-wide; the entries that occur in practice are tiny.

use crate::error::{Error, Result};

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i64>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        IMat { rows: r, cols: c, data: rows.concat() }
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Sub-block of full rows `lo..hi`.
    pub fn row_block(&self, lo: usize, hi: usize) -> IMat {
        IMat {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> IMat {
        let mut t = IMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination in `i128`.
    pub fn det(&self) -> i64 {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return 1;
        }
        let mut a: Vec<Vec<i128>> = (0..n)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                    return 0;
                };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
                a[i][k] = 0;
            }
            prev = a[k][k];
        }
        let d = sign * a[n - 1][n - 1];
        i64::try_from(d).expect("determinant exceeds i64")
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            let t = self[(i, c)];
            self[(i, c)] = self[(j, c)];
            self[(j, c)] = t;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            let t = self[(r, i)];
            self[(r, i)] = self[(r, j)];
            self[(r, j)] = t;
        }
    }

    /// row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: i64) {
        if c == 0 {
            return;
        }
        for k in 0..self.cols {
            self[(i, k)] += c * self[(j, k)];
        }
    }

    /// col_i += c * col_j
    fn add_col(&mut self, i: usize, j: usize, c: i64) {
        if c == 0 {
            return;
        }
        for k in 0..self.rows {
            self[(k, i)] += c * self[(k, j)];
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            self[(i, k)] = -self[(i, k)];
        }
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unimodular decomposition `u * a * v = diag(d)` with tracked inverses.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IMat,
    pub u_inv: IMat,
    pub v: IMat,
    pub v_inv: IMat,
    /// Diagonal entries, length `min(rows, cols)`, each nonnegative and
    /// dividing the next; zeros trail.
    pub d: Vec<i64>,
    pub rank: usize,
}

/// Smith normal form with a deterministic pivot rule: at each step the pivot
/// starts as the largest-magnitude entry of the working submatrix (ties to the
/// lowest row-major index); Euclidean remainders are then swapped into the
/// pivot position until it divides its row, column and the rest of the block.
pub fn smith_normal_form(a0: &IMat) -> Smith {
    let (m, n) = (a0.rows, a0.cols);
    let mut a = a0.clone();
    let mut u = IMat::identity(m);
    let mut u_inv = IMat::identity(m);
    let mut v = IMat::identity(n);
    let mut v_inv = IMat::identity(n);

    // Row op on `a` mirrors onto `u`; the inverse op applies to `u_inv` on the
    // column side (and symmetrically for column ops and `v`).
    macro_rules! row_add {
        ($i:expr, $j:expr, $c:expr) => {{
            a.add_row($i, $j, $c);
            u.add_row($i, $j, $c);
            u_inv.add_col($j, $i, -$c);
        }};
    }
    macro_rules! col_add {
        ($i:expr, $j:expr, $c:expr) => {{
            a.add_col($i, $j, $c);
            v.add_col($i, $j, $c);
            v_inv.add_row($j, $i, -$c);
        }};
    }

    let k_max = m.min(n);
    for k in 0..k_max {
        // Initial pivot: largest |entry|, ties broken by lowest (row, col).
        let mut pivot: Option<(usize, usize, i64)> = None;
        for i in k..m {
            for j in k..n {
                let val = a[(i, j)].abs();
                if val != 0 && pivot.map_or(true, |(_, _, b)| val > b) {
                    pivot = Some((i, j, val));
                }
            }
        }
        let Some((pi, pj, _)) = pivot else { break };
        a.swap_rows(k, pi);
        u.swap_rows(k, pi);
        u_inv.swap_cols(k, pi);
        a.swap_cols(k, pj);
        v.swap_cols(k, pj);
        v_inv.swap_rows(k, pj);

        loop {
            if a[(k, k)] < 0 {
                a.negate_row(k);
                u.negate_row(k);
                for r in 0..m {
                    u_inv[(r, k)] = -u_inv[(r, k)];
                }
            }
            let p = a[(k, k)];
            debug_assert!(p > 0);

            // A column entry with a nonzero remainder becomes the new, smaller pivot.
            if let Some(i) = (k + 1..m).find(|&i| a[(i, k)].rem_euclid(p) != 0) {
                let q = a[(i, k)].div_euclid(p);
                row_add!(i, k, -q);
                a.swap_rows(k, i);
                u.swap_rows(k, i);
                u_inv.swap_cols(k, i);
                continue;
            }
            if let Some(j) = (k + 1..n).find(|&j| a[(k, j)].rem_euclid(p) != 0) {
                let q = a[(k, j)].div_euclid(p);
                col_add!(j, k, -q);
                a.swap_cols(k, j);
                v.swap_cols(k, j);
                v_inv.swap_rows(k, j);
                continue;
            }

            // Everything in the pivot row/column is divisible: clear it.
            for i in k + 1..m {
                let q = a[(i, k)] / p;
                row_add!(i, k, -q);
            }
            for j in k + 1..n {
                let q = a[(k, j)] / p;
                col_add!(j, k, -q);
            }

            // The pivot must divide the remaining block; if not, fold the
            // offending row into the pivot row and keep reducing.
            let mut offender = None;
            'scan: for i in k + 1..m {
                for j in k + 1..n {
                    if a[(i, j)] % p != 0 {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => row_add!(k, i, 1),
                None => break,
            }
        }
    }

    let d: Vec<i64> = (0..k_max).map(|k| a[(k, k)]).collect();
    let rank = d.iter().filter(|&&x| x != 0).count();
    Smith { u, u_inv, v, v_inv, d, rank }
}

/// Exact inverse of a unimodular (determinant ±1) integer matrix.
pub fn inverse_unimodular(m: &IMat) -> Result<IMat> {
    assert_eq!(m.rows, m.cols);
    let s = smith_normal_form(m);
    if s.d.iter().any(|&x| x != 1) {
        return Err(Error::Internal(format!(
            "matrix is not unimodular (invariant factors {:?})",
            s.d
        )));
    }
    // u m v = I  =>  m^-1 = v u
    Ok(s.v.mul(&s.u))
}
