//! Smith normal form over the integers with transformation matrices.

use num::{BigInt, Integer, One, Signed, Zero};

use super::matrix::IntMatrix;

/// `u · m · v = d` with `u`, `v` unimodular and `d` diagonal, `d[i] | d[i+1]`, all `d[i] >= 0`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

impl Smith {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.d[(i, i)].clone()).collect()
    }

    /// Invariant factors strictly greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal().into_iter().filter(|x| !x.is_one()).collect()
    }

    /// An integer solution of `m x = b`, if one exists.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        let y = self.u.mul_vec(b);
        let mut w = vec![BigInt::zero(); self.v.nrows()];
        for (i, yi) in y.iter().enumerate() {
            if i < self.rank {
                let (q, r) = yi.div_rem(&self.d[(i, i)]);
                if !r.is_zero() {
                    return None;
                }
                w[i] = q;
            } else if !yi.is_zero() {
                return None;
            }
        }
        Some(self.v.mul_vec(&w))
    }
}

fn row_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    for j in 0..m.ncols() {
        let s = q * &m[(source, j)];
        if !s.is_zero() {
            m[(target, j)] -= s;
        }
    }
}

fn col_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    for i in 0..m.nrows() {
        let s = q * &m[(i, source)];
        if !s.is_zero() {
            m[(i, target)] -= s;
        }
    }
}

fn min_abs_entry(d: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..d.nrows() {
        for j in t..d.ncols() {
            let x = &d[(i, j)];
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < d[(bi, bj)].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

pub fn smith_normal_form(m: &IntMatrix) -> Smith {
    let (rows, cols) = m.shape();
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut rank = 0;

    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = min_abs_entry(&d, t) else {
            break;
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            let mut dirty = false;
            for i in (t + 1)..rows {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = d[(i, t)].div_floor(&d[(t, t)]);
                row_axpy(&mut d, i, t, &q);
                row_axpy(&mut u, i, t, &q);
                dirty |= !d[(i, t)].is_zero();
            }
            for j in (t + 1)..cols {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = d[(t, j)].div_floor(&d[(t, t)]);
                col_axpy(&mut d, j, t, &q);
                col_axpy(&mut v, j, t, &q);
                dirty |= !d[(t, j)].is_zero();
            }
            if dirty {
                // A smaller remainder appeared in row or column t; move it to the pivot.
                let (pi, pj) = min_abs_line(&d, t);
                d.swap_rows(t, pi);
                u.swap_rows(t, pi);
                d.swap_cols(t, pj);
                v.swap_cols(t, pj);
                continue;
            }
            let offender = ((t + 1)..rows).find(|&i| {
                ((t + 1)..cols).any(|j| !d[(i, j)].is_multiple_of(&d[(t, t)]))
            });
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    row_axpy(&mut d, t, i, &minus_one);
                    row_axpy(&mut u, t, i, &minus_one);
                }
                None => break,
            }
        }

        if d[(t, t)].is_negative() {
            for j in 0..cols {
                d[(t, j)] = -d[(t, j)].clone();
            }
            for j in 0..rows {
                u[(t, j)] = -u[(t, j)].clone();
            }
        }
        rank += 1;
    }
    Smith { u, d, v, rank }
}

/// Minimal nonzero entry restricted to row `t` and column `t` at or beyond the pivot.
fn min_abs_line(d: &IntMatrix, t: usize) -> (usize, usize) {
    let mut best = (t, t);
    let mut val: Option<BigInt> = None;
    let mut consider = |i: usize, j: usize| {
        let x = d[(i, j)].abs();
        if !x.is_zero() && val.as_ref().is_none_or(|v| &x < v) {
            val = Some(x);
            best = (i, j);
        }
    };
    for i in t..d.nrows() {
        consider(i, t);
    }
    for j in t..d.ncols() {
        consider(t, j);
    }
    best
}

/// Nonzero invariant factors (including ones).
pub fn invariant_factors(m: &IntMatrix) -> Vec<BigInt> {
    smith_normal_form(m).diagonal()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(m: &IntMatrix) -> Smith {
        let s = smith_normal_form(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d);
        for i in 0..s.d.nrows() {
            for j in 0..s.d.ncols() {
                if i != j {
                    assert!(s.d[(i, j)].is_zero());
                }
            }
        }
        let diag = s.diagonal();
        for w in diag.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]));
        }
        assert!(diag.iter().all(|x| x.is_positive()));
        s
    }

    fn det_abs(m: &IntMatrix) -> BigInt {
        smith_normal_form(m).diagonal().iter().fold(BigInt::one(), |a, b| a * b)
    }

    #[test]
    fn identity_is_fixed() {
        let s = check(&IntMatrix::identity(2));
        assert_eq!(s.d, IntMatrix::identity(2));
    }

    #[test]
    fn two_by_two_example() {
        let s = check(&IntMatrix::from_i64(&[&[2, 4], &[6, 10]]));
        assert_eq!(s.diagonal(), vec![BigInt::from(2), BigInt::from(2)]);
    }

    #[test]
    fn divisibility_fixup() {
        let s = check(&IntMatrix::from_i64(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.diagonal(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn unimodular_transforms() {
        let s = check(&IntMatrix::from_i64(&[&[4, 6, 2], &[1, 0, 3], &[2, 2, 2]]));
        assert!(det_abs(&s.u).is_one());
        assert!(det_abs(&s.v).is_one());
    }

    #[test]
    fn integer_solve() {
        let m = IntMatrix::from_i64(&[&[2, 0], &[0, 2]]);
        let s = smith_normal_form(&m);
        assert!(s.solve(&[BigInt::from(1), BigInt::from(0)]).is_none());
        let x = s.solve(&[BigInt::from(4), BigInt::from(-2)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![BigInt::from(4), BigInt::from(-2)]);
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-6i64..7, c), r)
        })
    }

    proptest! {
        #[test]
        fn snf_is_valid(rows in small_matrix()) {
            let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
            check(&IntMatrix::from_i64(&refs));
        }

        #[test]
        fn invariant_under_permutation(rows in small_matrix(), seed in any::<u64>()) {
            let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
            let m = IntMatrix::from_i64(&refs);
            let mut rp: Vec<usize> = (0..m.nrows()).collect();
            let mut cp: Vec<usize> = (0..m.ncols()).collect();
            let mut s = seed;
            for p in [&mut rp, &mut cp] {
                for i in (1..p.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    p.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            let permuted = m.select_rows(&rp).select_columns(&cp);
            prop_assert_eq!(invariant_factors(&m), invariant_factors(&permuted));
        }

        #[test]
        fn rank_matches_bareiss(rows in small_matrix()) {
            let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
            let m = IntMatrix::from_i64(&refs);
            prop_assert_eq!(smith_normal_form(&m).rank, super::super::exact::rank_int(&m));
        }
    }
}
