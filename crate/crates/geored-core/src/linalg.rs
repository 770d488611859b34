//! Exact linear algebra over the rationals.
//!
//! Elimination runs fraction-free (Bareiss) on integer-scaled rows and only divides once, during
//! back-substitution to reduced row echelon form.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::symbolic::{Expr, Q};

pub type Matrix = Vec<Vec<Q>>;

fn integer_row(row: &[Q]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
}

/// Reduced row echelon form and pivot columns.
pub fn rref(rows: &[Vec<Q>], ncols: usize) -> (Matrix, Vec<usize>) {
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| integer_row(r)).collect();
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..nrows {
            for j in c + 1..ncols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    let mut q: Matrix = m
        .into_iter()
        .take(r)
        .map(|row| row.into_iter().map(Q::from_integer).collect())
        .collect();
    for (i, &c) in pivots.iter().enumerate().rev() {
        let inv = q[i][c].recip();
        for x in q[i].iter_mut() {
            *x *= &inv;
        }
        for k in 0..i {
            if q[k][c].is_zero() {
                continue;
            }
            let f = q[k][c].clone();
            for j in c..ncols {
                let t = &q[i][j] * &f;
                q[k][j] -= t;
            }
        }
    }
    (q, pivots)
}

pub fn rank(rows: &[Vec<Q>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Basis of `{v : rows · v = 0}`.
pub fn nullspace(rows: &[Vec<Q>], ncols: usize) -> Matrix {
    let (r, pivots) = rref(rows, ncols);
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = alloc::vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -r[i][free].clone();
        }
        out.push(v);
    }
    out
}

/// One solution of `a · x = b`, if any.
pub fn solve(a: &[Vec<Q>], b: &[Q], ncols: usize) -> Option<Vec<Q>> {
    let aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = alloc::vec![Q::zero(); ncols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = r[i][ncols].clone();
    }
    Some(x)
}

pub fn inverse(a: &[Vec<Q>]) -> Option<Matrix> {
    let n = a.len();
    let aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, 2 * n);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(r.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn mat_vec(a: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn transpose(a: &[Vec<Q>], ncols: usize) -> Matrix {
    (0..ncols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Linear subspace of `Q^n` with an echelon basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    pub ambient: usize,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| (0..ambient).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        Subspace { ambient, basis }
    }

    /// Span of arbitrary (possibly dependent) vectors.
    pub fn span(ambient: usize, vectors: &[Vec<Q>]) -> Self {
        let (basis, _) = rref(vectors, ambient);
        Subspace { ambient, basis }
    }

    /// Kernel of the map with the given rows.
    pub fn kernel(ambient: usize, rows: &[Vec<Q>]) -> Self {
        Subspace::span(ambient, &nullspace(rows, ambient))
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    /// Rows whose common kernel is `self`.
    pub fn annihilator(&self) -> Matrix {
        nullspace(&self.basis, self.ambient)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut v = self.basis.clone();
        v.extend(other.basis.iter().cloned());
        Subspace::span(self.ambient, &v)
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let mut eqs = self.annihilator();
        eqs.extend(other.annihilator());
        Subspace::kernel(self.ambient, &eqs)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        self.sum(other).rank() == self.rank()
    }

    pub fn contains_vector(&self, v: &[Q]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rank(&rows, self.ambient) == self.rank()
    }

    /// `rank A = rank B = rank (A ∪ B)`.
    pub fn equals(&self, other: &Subspace) -> bool {
        self.rank() == other.rank() && self.sum(other).rank() == self.rank()
    }

    /// Image under a linear map given by its rows (`target_dim` rows of length `ambient`).
    pub fn map(&self, rows: &[Vec<Q>], target_dim: usize) -> Subspace {
        let imgs: Matrix = self.basis.iter().map(|v| mat_vec(rows, v)).collect();
        Subspace::span(target_dim, &imgs)
    }

    /// First basis vector not lying in `other`, as a witness.
    pub fn witness_outside(&self, other: &Subspace) -> Option<Vec<Q>> {
        self.basis.iter().find(|v| !other.contains_vector(v)).cloned()
    }
}

/// Gauss-Jordan over expressions: solves `a · x = rhs[·][c]` for every right-hand column `c`.
///
/// Pivots prefer constant entries, then the smallest expression. Returns `None` when a column has
/// no pivot (the system is underdetermined) or a leftover row is inconsistent.
pub fn solve_expr(mut a: Vec<Vec<Expr>>, mut rhs: Vec<Vec<Expr>>, ncols: usize) -> Option<Vec<Vec<Expr>>> {
    let nrhs = rhs.first().map_or(0, Vec::len);
    let mut pivot_rows: Vec<usize> = Vec::with_capacity(ncols);
    let mut used = alloc::vec![false; a.len()];
    for c in 0..ncols {
        let pick = (0..a.len())
            .filter(|&i| !used[i] && !a[i][c].is_zero())
            .min_by_key(|&i| (a[i][c].as_constant().is_none(), a[i][c].size()))?;
        used[pick] = true;
        let inv = a[pick][c].recip().ok()?;
        for j in 0..ncols {
            a[pick][j] = &a[pick][j] * &inv;
        }
        for j in 0..nrhs {
            rhs[pick][j] = &rhs[pick][j] * &inv;
        }
        for i in 0..a.len() {
            if i == pick || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in 0..ncols {
                if !a[pick][j].is_zero() {
                    a[i][j] = &a[i][j] - &(&f * &a[pick][j]);
                }
            }
            for j in 0..nrhs {
                if !rhs[pick][j].is_zero() {
                    rhs[i][j] = &rhs[i][j] - &(&f * &rhs[pick][j]);
                }
            }
        }
        pivot_rows.push(pick);
    }
    for i in (0..a.len()).filter(|&i| !used[i]) {
        if rhs[i].iter().any(|e| !e.is_zero()) {
            return None;
        }
    }
    Some((0..nrhs).map(|j| pivot_rows.iter().map(|&r| rhs[r][j].clone()).collect()).collect())
}

/// Sign-normalized copy (first nonzero entry positive) for stable display.
pub fn normalize_sign(v: &[Q]) -> Vec<Q> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => v.iter().map(|y| -y.clone()).collect(),
        _ => v.to_vec(),
    }
}
