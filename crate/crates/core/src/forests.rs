//! Spanning trees and co-trees of a CW complex, their torsion orders, and the
//! weighted sections built from them.

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::complex::{Chain, CwComplex, IntChain, RatChain};
use crate::error::{Error, Result};
use crate::linalg::{exact, smith_normal_form, IntMatrix, RatMatrix};

/// `S ⊆ X_d` with `H_d(T) = 0` and `β_{d−1}(T) = β_{d−1}(X)`.
#[derive(Clone, Debug)]
pub struct SpanningTree {
    pub cells: Vec<usize>,
    pub theta: BigInt,
    /// Exact `ς_T` as a `|X_d| × |X_{d−1}|` matrix, zero outside the rows of `T`.
    pub section: RatMatrix,
    pub section_f64: DMatrix<f64>,
}

/// `L ⊆ X_{d−1}` whose cycles map isomorphically onto `H_{d−1}(X; Q)`.
#[derive(Clone, Debug)]
pub struct SpanningCoTree {
    pub cells: Vec<usize>,
    pub a: BigInt,
    /// Exact projection of `C_{d−1}` onto chains supported on `L` along `B_{d−1}`.
    pub projection: RatMatrix,
    pub projection_f64: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct ForestCatalog {
    pub dimension: usize,
    pub trees: Vec<SpanningTree>,
    pub cotrees: Vec<SpanningCoTree>,
    pub delta: BigInt,
    boundary: IntMatrix,
}

/// All `r`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

fn product(xs: &[BigInt]) -> BigInt {
    xs.iter().fold(BigInt::one(), |a, b| a * b)
}

fn complement(n: usize, s: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !s.contains(i)).collect()
}

pub fn enumerate_spanning_trees(c: &CwComplex) -> Vec<SpanningTree> {
    let b = c.top_boundary();
    let (n, m) = b.shape();
    let r = exact::rank_int(b);
    combinations(m, r)
        .into_iter()
        .filter_map(|s| {
            let bs = b.select_columns(&s);
            if exact::rank_int(&bs) != r {
                return None;
            }
            let smith = smith_normal_form(&bs);
            let theta = product(&smith.torsion());
            let left = exact::left_inverse(&bs.to_rational()).expect("independent columns have a left inverse");
            let mut section = RatMatrix::zeros(m, n);
            for (k, &alpha) in s.iter().enumerate() {
                for j in 0..n {
                    section[(alpha, j)] = left[(k, j)].clone();
                }
            }
            let section_f64 = section.to_f64();
            Some(SpanningTree { cells: s, theta, section, section_f64 })
        })
        .collect()
}

pub fn enumerate_spanning_cotrees(c: &CwComplex) -> Vec<SpanningCoTree> {
    let d = c.dimension();
    let b = c.top_boundary();
    let n = b.nrows();
    let r = exact::rank_int(b);
    let lower = (d >= 2).then(|| c.boundary(d - 1));
    let lower_rank = lower.map_or(0, exact::rank_int);
    let image_basis: Vec<usize> = exact::independent_columns(&b.to_rational());
    combinations(n, n - r)
        .into_iter()
        .filter_map(|l| {
            if let Some(lo) = lower {
                if exact::rank_int(&lo.select_columns(&l)) != lower_rank {
                    return None;
                }
            }
            let rest = complement(n, &l);
            let relative = b.select_rows(&rest);
            if exact::rank_int(&relative) != rest.len() {
                return None;
            }
            let a = product(&smith_normal_form(&relative).diagonal());
            // [I_L | basis of B_{d−1}] is invertible; the L-coordinates give the projection.
            let mut frame = RatMatrix::zeros(n, n);
            for (k, &j) in l.iter().enumerate() {
                frame[(j, k)] = BigRational::one();
            }
            for (k, &col) in image_basis.iter().enumerate() {
                for i in 0..n {
                    frame[(i, l.len() + k)] = BigRational::from_integer(b[(i, col)].clone());
                }
            }
            let inv = exact::inverse(&frame).expect("co-tree frame is invertible");
            let mut projection = RatMatrix::zeros(n, n);
            for (k, &j) in l.iter().enumerate() {
                for i in 0..n {
                    projection[(j, i)] = inv[(k, i)].clone();
                }
            }
            let projection_f64 = projection.to_f64();
            Some(SpanningCoTree { cells: l, a, projection, projection_f64 })
        })
        .collect()
}

/// `δ = ∏_{L,T} a_L θ_T`.
pub fn delta_invariant(catalog: &ForestCatalog) -> BigInt {
    let t: Vec<BigInt> = catalog.trees.iter().map(|t| t.theta.clone()).collect();
    let l: Vec<BigInt> = catalog.cotrees.iter().map(|l| l.a.clone()).collect();
    product(&t) * product(&l)
}

fn ln_big(x: &BigInt) -> f64 {
    x.to_f64().map_or(f64::INFINITY, f64::ln)
}

/// Normalized weights from log-weights, shifted by the maximum.
pub fn softmax(logw: &[f64]) -> Vec<f64> {
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn subset_sum(cells: &[usize], x: &[f64]) -> f64 {
    cells.iter().map(|&i| x[i]).sum()
}

fn unique_minimum<'a, T>(items: &'a [T], key: impl Fn(&T) -> f64, name: impl Fn(&T) -> String) -> Result<&'a T> {
    let sums: Vec<f64> = items.iter().map(&key).collect();
    let best = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let hits: Vec<usize> = (0..items.len()).filter(|&i| sums[i] == best).collect();
    match hits.as_slice() {
        [i] => Ok(&items[*i]),
        [] => Err(Error::WeightsNotGeneric("no finite minimum".into())),
        _ => Err(Error::WeightsNotGeneric(format!(
            "tie at {best} between {}",
            hits.iter().map(|&i| name(&items[i])).collect::<Vec<_>>().join(" and ")
        ))),
    }
}

impl ForestCatalog {
    pub fn build(c: &CwComplex) -> Self {
        let trees = enumerate_spanning_trees(c);
        let cotrees = enumerate_spanning_cotrees(c);
        let mut cat =
            Self { dimension: c.dimension(), trees, cotrees, delta: BigInt::one(), boundary: c.top_boundary().clone() };
        cat.delta = delta_invariant(&cat);
        cat
    }

    pub fn n_faces(&self) -> usize {
        self.boundary.nrows()
    }

    pub fn n_cells(&self) -> usize {
        self.boundary.ncols()
    }

    /// `2 ln θ_T − β Σ_{α∈T} W_α`.
    pub fn tree_log_weights(&self, w: &[f64], beta: f64) -> Vec<f64> {
        self.trees.iter().map(|t| 2.0 * ln_big(&t.theta) - beta * subset_sum(&t.cells, w)).collect()
    }

    /// `2 ln a_L − β Σ_{b∈L} E_b`.
    pub fn cotree_log_weights(&self, e: &[f64], beta: f64) -> Vec<f64> {
        self.cotrees.iter().map(|l| 2.0 * ln_big(&l.a) - beta * subset_sum(&l.cells, e)).collect()
    }

    pub fn tree_probabilities(&self, w: &[f64], beta: f64) -> Vec<f64> {
        softmax(&self.tree_log_weights(w, beta))
    }

    pub fn cotree_probabilities(&self, e: &[f64], beta: f64) -> Vec<f64> {
        softmax(&self.cotree_log_weights(e, beta))
    }

    /// The Kirchhoff section `Σ_T q_T ς_T` as a `|X_d| × |X_{d−1}|` matrix.
    pub fn kirchhoff_matrix(&self, w: &[f64], beta: f64) -> DMatrix<f64> {
        let q = self.tree_probabilities(w, beta);
        let mut out = DMatrix::zeros(self.n_cells(), self.n_faces());
        for (t, qt) in self.trees.iter().zip(q) {
            if qt > 0.0 {
                out += &t.section_f64 * qt;
            }
        }
        out
    }

    /// The Boltzmann projection `Σ_L p_L ψ_L` as a `|X_{d−1}| × |X_{d−1}|` matrix.
    pub fn boltzmann_matrix(&self, e: &[f64], beta: f64) -> DMatrix<f64> {
        let p = self.cotree_probabilities(e, beta);
        let mut out = DMatrix::zeros(self.n_faces(), self.n_faces());
        for (l, pl) in self.cotrees.iter().zip(p) {
            if pl > 0.0 {
                out += &l.projection_f64 * pl;
            }
        }
        out
    }

    pub fn minimal_tree(&self, w: &[f64]) -> Result<&SpanningTree> {
        unique_minimum(&self.trees, |t| subset_sum(&t.cells, w), |t| format!("{:?}", t.cells))
    }

    pub fn minimal_cotree(&self, e: &[f64]) -> Result<&SpanningCoTree> {
        unique_minimum(&self.cotrees, |l| subset_sum(&l.cells, e), |l| format!("{:?}", l.cells))
    }

    fn boundary_residual(&self, b: &[f64]) -> f64 {
        let Some(t) = self.trees.first() else {
            return b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        };
        let bv = DVector::from_column_slice(b);
        let x = &t.section_f64 * &bv;
        (self.boundary.to_f64() * x - bv).amax()
    }

    /// `𝒜(b)` for a real boundary `b`.
    pub fn kirchhoff_section(&self, w: &[f64], beta: f64, b: &[f64]) -> Result<Vec<f64>> {
        let scale = 1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if self.boundary_residual(b) > 1e-9 * scale {
            return Err(Error::NotBoundary { dim: self.dimension - 1 });
        }
        let out = self.kirchhoff_matrix(w, beta) * DVector::from_column_slice(b);
        Ok(out.iter().copied().collect())
    }

    /// The Boltzmann cycle `ρ^B` in the class of the integer cycle `x`.
    pub fn boltzmann(&self, c: &CwComplex, e: &[f64], beta: f64, x: &IntChain) -> Result<Vec<f64>> {
        if !c.is_cycle(x)? {
            return Err(Error::NotCycle);
        }
        let xv = DVector::from_iterator(x.coeffs.len(), x.coeffs.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)));
        Ok((self.boltzmann_matrix(e, beta) * xv).iter().copied().collect())
    }
}

/// `ς_T(b)`: the unique chain on `T` bounding `b`.
pub fn sigma_t(c: &CwComplex, tree: &SpanningTree, b: &RatChain) -> Result<RatChain> {
    let d = c.dimension();
    if b.dim != d - 1 || b.coeffs.len() != c.cells(d - 1).len() {
        return Err(Error::Dimension(format!("ς_T expects a {}-chain", d - 1)));
    }
    let x = Chain::new(d, tree.section.mul_vec(&b.coeffs));
    if c.boundary_apply(&x)? != *b {
        return Err(Error::NotBoundary { dim: d - 1 });
    }
    Ok(x)
}

/// `ψ_L(x)`: the cycle supported on `L` homologous to `x` over the rationals.
pub fn psi_l(c: &CwComplex, cotree: &SpanningCoTree, x: &RatChain) -> Result<RatChain> {
    let d = c.dimension();
    if x.dim != d - 1 || x.coeffs.len() != c.cells(d - 1).len() {
        return Err(Error::Dimension(format!("ψ_L expects a {}-chain", d - 1)));
    }
    if !c.is_cycle(x)? {
        return Err(Error::NotCycle);
    }
    Ok(Chain::new(d - 1, cotree.projection.mul_vec(&x.coeffs)))
}

/// Whether `x − y` is a rational boundary.
pub fn homologous(c: &CwComplex, x: &RatChain, y: &RatChain) -> bool {
    let diff: Vec<BigRational> = x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a - b).collect();
    if diff.iter().all(Zero::is_zero) {
        return true;
    }
    exact::solve(&c.top_boundary().to_rational(), &diff).is_some()
}
