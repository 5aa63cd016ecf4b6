//! Exact linear algebra over the rationals (and integer rank by fraction-free elimination).

use num::{BigInt, BigRational, One, Signed, Zero};

use super::matrix::{IntMatrix, RatMatrix};

/// Reduced row echelon form; returns the reduced matrix and its pivot columns.
pub fn rref(m: &RatMatrix) -> (RatMatrix, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(r, p);
        let inv = a[(r, c)].recip();
        for j in c..cols {
            a[(r, j)] = &a[(r, j)] * &inv;
        }
        for i in 0..rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let factor = a[(i, c)].clone();
            for j in c..cols {
                let sub = &factor * &a[(r, j)];
                a[(i, j)] = &a[(i, j)] - sub;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(m: &RatMatrix) -> usize {
    rref(m).1.len()
}

/// Rank of an integer matrix by Bareiss fraction-free elimination.
pub fn rank_int(m: &IntMatrix) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let v = &a[(r, c)] * &a[(i, j)] - &a[(i, c)] * &a[(r, j)];
                a[(i, j)] = v / &prev;
            }
            a[(i, c)] = BigInt::zero();
        }
        prev = a[(r, c)].clone();
        r += 1;
    }
    r
}

/// One solution of `a x = b`, or `None` when the system is inconsistent.
pub fn solve(a: &RatMatrix, b: &[BigRational]) -> Option<Vec<BigRational>> {
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.len(), "right-hand side length mismatch");
    let aug = RatMatrix::from_fn(rows, cols + 1, |i, j| {
        if j < cols {
            a[(i, j)].clone()
        } else {
            b[i].clone()
        }
    });
    let (red, pivots) = rref(&aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![BigRational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = red[(r, cols)].clone();
    }
    Some(x)
}

/// Basis of the right kernel `{x : a x = 0}`.
pub fn nullspace(a: &RatMatrix) -> Vec<Vec<BigRational>> {
    let cols = a.ncols();
    let (red, pivots) = rref(a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -red[(r, f)].clone();
            }
            v
        })
        .collect()
}

/// Indices of a maximal set of linearly independent columns (leftmost greedy choice).
pub fn independent_columns(a: &RatMatrix) -> Vec<usize> {
    rref(a).1
}

pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "inverse of a non-square matrix");
    let aug = RatMatrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            a[(i, j)].clone()
        } else if j - n == i {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    });
    let (red, pivots) = rref(&aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(RatMatrix::from_fn(n, n, |i, j| red[(i, n + j)].clone()))
}

/// A left inverse `l` with `l · a = I` for a matrix of full column rank.
///
/// The returned map agrees with the unique preimage on the column space of `a`.
pub fn left_inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let (rows, cols) = a.shape();
    let chosen = independent_columns(&a.transpose());
    if chosen.len() < cols {
        return None;
    }
    let square = a.select_rows(&chosen);
    let inv = inverse(&square)?;
    let mut out = RatMatrix::zeros(cols, rows);
    for i in 0..cols {
        for (k, &r) in chosen.iter().enumerate() {
            out[(i, r)] = inv[(i, k)].clone();
        }
    }
    Some(out)
}

/// Least common multiple of the denominators of a rational vector.
pub fn common_denominator(v: &[BigRational]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, q| num::integer::lcm(acc, q.denom().abs()))
}
