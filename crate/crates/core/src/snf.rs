//! Exact integer matrices and Smith normal form.
//!
//! Pivoting picks the entry of smallest nonzero magnitude, which keeps
//! coefficient growth tame without modular tricks; the matrices that show up
//! here are small. Transform matrices are optional so homology computations
//! can skip them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A dense integer matrix with arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_triples(rows: usize, cols: usize, triples: &[(usize, usize, i64)]) -> Self {
        let mut m = Self::zero(rows, cols);
        for &(i, j, v) in triples {
            m[(i, j)] = BigInt::from(v);
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, v: impl Into<BigInt>) {
        self[(i, j)] = v.into();
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn mul(&self, other: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntegerMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let prod = a * b;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        out
    }

    /// Sparse triples `(row, col, value)` in row-major order.
    pub fn triples(&self) -> Vec<(usize, usize, BigInt)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_zero() {
                    out.push((i, j, self[(i, j)].clone()));
                }
            }
        }
        out
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss). Exact.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let swap = (k + 1..n).find(|&i| !m[(i, k)].is_zero());
                match swap {
                    Some(i) => {
                        for j in 0..n {
                            let a = m[(k, j)].clone();
                            let b = m[(i, j)].clone();
                            m[(k, j)] = b;
                            m[(i, j)] = a;
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = num / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of a Smith normal form computation: `a = u * d * v`.
pub struct SmithNormalForm {
    pub d: IntegerMatrix,
    pub u: Option<IntegerMatrix>,
    pub v: Option<IntegerMatrix>,
}

impl SmithNormalForm {
    /// Nonzero diagonal entries d1 | d2 | ...
    pub fn divisors(&self) -> Vec<BigInt> {
        let n = self.d.rows.min(self.d.cols);
        (0..n)
            .map(|i| self.d[(i, i)].clone())
            .filter(|v| !v.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.divisors().len()
    }
}

struct Reducer {
    a: IntegerMatrix,
    u: Option<IntegerMatrix>,
    v: Option<IntegerMatrix>,
}

impl Reducer {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.a.cols {
            let t = self.a[(i, c)].clone();
            self.a[(i, c)] = self.a[(j, c)].clone();
            self.a[(j, c)] = t;
        }
        if let Some(u) = &mut self.u {
            // column swap on U keeps A = U * D * V
            for r in 0..u.rows {
                let t = u[(r, i)].clone();
                u[(r, i)] = u[(r, j)].clone();
                u[(r, j)] = t;
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.a.rows {
            let t = self.a[(r, i)].clone();
            self.a[(r, i)] = self.a[(r, j)].clone();
            self.a[(r, j)] = t;
        }
        if let Some(v) = &mut self.v {
            for c in 0..v.cols {
                let t = v[(i, c)].clone();
                v[(i, c)] = v[(j, c)].clone();
                v[(j, c)] = t;
            }
        }
    }

    /// row[i] -= q * row[k], compensated in U by col[k] += q * col[i].
    fn add_row(&mut self, i: usize, k: usize, q: &BigInt) {
        for c in 0..self.a.cols {
            let delta = q * &self.a[(k, c)];
            self.a[(i, c)] -= delta;
        }
        if let Some(u) = &mut self.u {
            for r in 0..u.rows {
                let delta = q * &u[(r, i)];
                u[(r, k)] += delta;
            }
        }
    }

    fn add_col(&mut self, j: usize, k: usize, q: &BigInt) {
        for r in 0..self.a.rows {
            let delta = q * &self.a[(r, k)];
            self.a[(r, j)] -= delta;
        }
        if let Some(v) = &mut self.v {
            for c in 0..v.cols {
                let delta = q * &v[(j, c)];
                v[(k, c)] += delta;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.a.cols {
            let t = -self.a[(i, c)].clone();
            self.a[(i, c)] = t;
        }
        if let Some(u) = &mut self.u {
            for r in 0..u.rows {
                let t = -u[(r, i)].clone();
                u[(r, i)] = t;
            }
        }
    }
}

/// Smith normal form with unimodular transforms: `a = u * d * v`, `d` diagonal
/// with each entry dividing the next.
pub fn smith_normal_form(a: &IntegerMatrix) -> SmithNormalForm {
    smith_normal_form_opts(a, true)
}

pub fn smith_normal_form_opts(a: &IntegerMatrix, transforms: bool) -> SmithNormalForm {
    let mut r = Reducer {
        a: a.clone(),
        u: transforms.then(|| IntegerMatrix::identity(a.rows)),
        v: transforms.then(|| IntegerMatrix::identity(a.cols)),
    };
    let n = a.rows.min(a.cols);
    let mut k = 0;
    while k < n {
        // smallest nonzero magnitude in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..r.a.rows {
            for j in k..r.a.cols {
                if !r.a[(i, j)].is_zero()
                    && pivot
                        .map(|(pi, pj)| r.a[(i, j)].abs() < r.a[(pi, pj)].abs())
                        .unwrap_or(true)
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        r.swap_rows(k, pi);
        r.swap_cols(k, pj);
        // clear row and column k
        let mut dirty = true;
        while dirty {
            dirty = false;
            for i in k + 1..r.a.rows {
                if !r.a[(i, k)].is_zero() {
                    let q = r.a[(i, k)].div_floor(&r.a[(k, k)]);
                    r.add_row(i, k, &q);
                    if !r.a[(i, k)].is_zero() {
                        // remainder got smaller than the pivot; promote it
                        r.swap_rows(k, i);
                        dirty = true;
                    }
                }
            }
            for j in k + 1..r.a.cols {
                if !r.a[(k, j)].is_zero() {
                    let q = r.a[(k, j)].div_floor(&r.a[(k, k)]);
                    r.add_col(j, k, &q);
                    if !r.a[(k, j)].is_zero() {
                        r.swap_cols(k, j);
                        dirty = true;
                    }
                }
            }
        }
        if r.a[(k, k)].is_negative() {
            r.negate_row(k);
        }
        k += 1;
    }
    // enforce the divisibility chain
    loop {
        let mut fixed = true;
        for i in 0..n.saturating_sub(1) {
            let a_i = r.a[(i, i)].clone();
            let a_n = r.a[(i + 1, i + 1)].clone();
            if a_n.is_zero() || a_i.is_zero() {
                continue;
            }
            if !(&a_n % &a_i).is_zero() {
                // fold d[i+1] into row i and re-reduce the 2x2 block
                let one = BigInt::one();
                r.add_col(i, i + 1, &(-&one));
                // local Euclid on the 2x2 block
                let mut dirty = true;
                while dirty {
                    dirty = false;
                    if !r.a[(i + 1, i)].is_zero() {
                        let q = r.a[(i + 1, i)].div_floor(&r.a[(i, i)]);
                        r.add_row(i + 1, i, &q);
                        if !r.a[(i + 1, i)].is_zero() {
                            r.swap_rows(i, i + 1);
                            dirty = true;
                        }
                    }
                    if !r.a[(i, i + 1)].is_zero() {
                        let q = r.a[(i, i + 1)].div_floor(&r.a[(i, i)]);
                        r.add_col(i + 1, i, &q);
                        if !r.a[(i, i + 1)].is_zero() {
                            r.swap_cols(i, i + 1);
                            dirty = true;
                        }
                    }
                }
                if r.a[(i, i)].is_negative() {
                    r.negate_row(i);
                }
                if r.a[(i + 1, i + 1)].is_negative() {
                    r.negate_row(i + 1);
                }
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }
    SmithNormalForm {
        d: r.a,
        u: r.u,
        v: r.v,
    }
}

/// Rank of an integer matrix (over the rationals).
pub fn rank(a: &IntegerMatrix) -> usize {
    smith_normal_form_opts(a, false).rank()
}

/// Checks `a = u * d * v` and that `u`, `v` are unimodular (determinant
/// checked only up to 8x8; beyond that the product identity is the check).
pub fn verify_snf(a: &IntegerMatrix, snf: &SmithNormalForm) -> Result<()> {
    let (u, v) = match (&snf.u, &snf.v) {
        (Some(u), Some(v)) => (u, v),
        _ => {
            return Err(Error::SideConditionViolated(
                "transforms were not computed".into(),
            ))
        }
    };
    if u.mul(&snf.d).mul(v) != *a {
        return Err(Error::SideConditionViolated(
            "u*d*v does not reproduce the input".into(),
        ));
    }
    let divisors = snf.divisors();
    for w in divisors.windows(2) {
        if !(&w[1] % &w[0]).is_zero() {
            return Err(Error::SideConditionViolated(
                "diagonal divisibility broken".into(),
            ));
        }
    }
    if u.rows <= 8 && !u.determinant().abs().is_one() {
        return Err(Error::SideConditionViolated("u is not unimodular".into()));
    }
    if v.rows <= 8 && !v.determinant().abs().is_one() {
        return Err(Error::SideConditionViolated("v is not unimodular".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_values(d: &IntegerMatrix) -> Vec<i64> {
        (0..d.rows.min(d.cols))
            .map(|i| i64::try_from(&d[(i, i)]).unwrap())
            .collect()
    }

    #[test]
    fn identity_two() {
        let a = IntegerMatrix::identity(2);
        let snf = smith_normal_form(&a);
        assert_eq!(diag_values(&snf.d), vec![1, 1]);
        verify_snf(&a, &snf).unwrap();
    }

    #[test]
    fn single_entry_two() {
        let a = IntegerMatrix::from_triples(1, 1, &[(0, 0, 2)]);
        let snf = smith_normal_form(&a);
        assert_eq!(diag_values(&snf.d), vec![2]);
        verify_snf(&a, &snf).unwrap();
    }

    #[test]
    fn three_cycle_edge_boundary() {
        // d1 of the 3-cycle graph: rank 2 over Q, no torsion.
        let a = IntegerMatrix::from_triples(
            3,
            3,
            &[
                (0, 0, -1),
                (1, 0, 1),
                (1, 1, -1),
                (2, 1, 1),
                (2, 2, 1),
                (0, 2, -1),
            ],
        );
        let snf = smith_normal_form(&a);
        assert_eq!(diag_values(&snf.d), vec![1, 1, 0]);
        verify_snf(&a, &snf).unwrap();
    }

    #[test]
    fn known_divisors() {
        let a = IntegerMatrix::from_triples(2, 2, &[(0, 0, 2), (0, 1, 4), (1, 0, 4), (1, 1, 2)]);
        let snf = smith_normal_form(&a);
        assert_eq!(diag_values(&snf.d), vec![2, 6]);
        verify_snf(&a, &snf).unwrap();
    }

    proptest! {
        #[test]
        fn snf_reconstructs_and_divides(
            entries in proptest::collection::vec(-9i64..=9, 16)
        ) {
            let mut a = IntegerMatrix::zero(4, 4);
            for (k, v) in entries.iter().enumerate() {
                a.set(k / 4, k % 4, *v);
            }
            let snf = smith_normal_form(&a);
            prop_assert!(verify_snf(&a, &snf).is_ok());
            // off-diagonal zero
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        prop_assert!(snf.d[(i, j)].is_zero());
                    }
                }
            }
        }

        #[test]
        fn snf_invariant_under_permutation(
            entries in proptest::collection::vec(-5i64..=5, 12),
            rowperm in 0usize..6,
        ) {
            let mut a = IntegerMatrix::zero(3, 4);
            for (k, v) in entries.iter().enumerate() {
                a.set(k / 4, k % 4, *v);
            }
            let perms = [[0usize,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
            let p = perms[rowperm];
            let mut b = IntegerMatrix::zero(3, 4);
            for i in 0..3 {
                for j in 0..4 {
                    b[(i, j)] = a[(p[i], j)].clone();
                }
            }
            let da = diag_values(&smith_normal_form(&a).d);
            let db = diag_values(&smith_normal_form(&b).d);
            prop_assert_eq!(da, db);
        }
    }
}
