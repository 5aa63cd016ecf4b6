//! Finite CW complexes given combinatorially: ordered cells per dimension, integer
//! boundary matrices, and signed atom decompositions of the top incidence numbers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg};

use nalgebra::DMatrix;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{exact, smith_normal_form, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ring {
    Integer,
    Rational,
    Real,
}

pub trait Coefficient:
    Clone + PartialEq + Zero + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    const RING: Ring;
    fn from_incidence(b: &BigInt) -> Self;
}

impl Coefficient for BigInt {
    const RING: Ring = Ring::Integer;
    fn from_incidence(b: &BigInt) -> Self {
        b.clone()
    }
}

impl Coefficient for BigRational {
    const RING: Ring = Ring::Rational;
    fn from_incidence(b: &BigInt) -> Self {
        BigRational::from_integer(b.clone())
    }
}

impl Coefficient for f64 {
    const RING: Ring = Ring::Real;
    fn from_incidence(b: &BigInt) -> Self {
        b.to_f64().unwrap_or(f64::NAN)
    }
}

/// A `k`-chain with one coefficient per `k`-cell, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<T> {
    pub dim: usize,
    pub coeffs: Vec<T>,
}

pub type IntChain = Chain<BigInt>;
pub type RatChain = Chain<BigRational>;
pub type RealChain = Chain<f64>;

impl<T: Coefficient> Chain<T> {
    pub fn new(dim: usize, coeffs: Vec<T>) -> Self {
        Self { dim, coeffs }
    }

    pub fn zero(c: &CwComplex, dim: usize) -> Self {
        Self { dim, coeffs: vec![T::zero(); c.cells(dim).len()] }
    }

    pub fn ring(&self) -> Ring {
        T::RING
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Build from `(cell id, coefficient)` pairs; repeated ids accumulate.
    pub fn from_named<S: AsRef<str>>(
        c: &CwComplex,
        dim: usize,
        terms: impl IntoIterator<Item = (S, T)>,
    ) -> Result<Self> {
        let mut out = Self::zero(c, dim);
        for (id, x) in terms {
            let i = c.cell_index(dim, id.as_ref())?;
            out.coeffs[i] = out.coeffs[i].clone() + x;
        }
        Ok(out)
    }

    /// Nonzero terms keyed by cell id.
    pub fn to_named(&self, c: &CwComplex) -> Vec<(String, T)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| (c.cells(self.dim)[i].clone(), x.clone()))
            .collect()
    }
}

impl IntChain {
    pub fn basis(c: &CwComplex, dim: usize, id: &str) -> Result<Self> {
        Self::from_named(c, dim, [(id, BigInt::one())])
    }

    pub fn to_rational(&self) -> RatChain {
        Chain::new(self.dim, self.coeffs.iter().map(|x| BigRational::from_integer(x.clone())).collect())
    }

    pub fn to_real(&self) -> RealChain {
        Chain::new(self.dim, self.coeffs.iter().map(f64::from_incidence).collect())
    }

    /// `Σ |⟨z, b⟩|`.
    pub fn norm(&self) -> BigInt {
        self.coeffs.iter().map(Signed::abs).sum()
    }
}

impl RealChain {
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().map(|x| x.abs()).sum()
    }
}

impl<T: fmt::Display + Zero> fmt::Display for Chain<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| format!("{x}·[{}:{i}]", self.dim))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// Signs of the atoms realizing each nonzero top-dimensional incidence, keyed by `(α, face)`.
pub type Atoms = BTreeMap<(usize, usize), Vec<i8>>;

#[derive(Clone, PartialEq, Eq)]
pub struct CwComplex {
    name: String,
    cells: Vec<Vec<String>>,
    boundary: Vec<IntMatrix>,
    atoms: Atoms,
    index: Vec<HashMap<String, usize>>,
}

impl fmt::Debug for CwComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<usize> = self.cells.iter().map(Vec::len).collect();
        f.debug_struct("CwComplex").field("name", &self.name).field("cells", &counts).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub message: String,
}

impl Violation {
    fn new(kind: &str, message: String) -> Self {
        Self { kind: kind.to_string(), message }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologySummary {
    pub dimension: usize,
    pub betti: usize,
    pub torsion_factors: Vec<BigInt>,
    pub torsion_order: BigInt,
}

/// A set of cells per dimension, checked to be closed under taking boundary support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subcomplex {
    cells: Vec<BTreeSet<usize>>,
}

impl Subcomplex {
    pub fn new(c: &CwComplex, cells: Vec<BTreeSet<usize>>) -> Result<Self> {
        if cells.len() != c.dimension() + 1 {
            return Err(Error::Dimension(format!(
                "subcomplex has {} levels, complex has {}",
                cells.len(),
                c.dimension() + 1
            )));
        }
        for k in 1..=c.dimension() {
            let b = c.boundary(k);
            for &alpha in &cells[k] {
                for j in 0..b.nrows() {
                    if !b[(j, alpha)].is_zero() && !cells[k - 1].contains(&j) {
                        return Err(Error::InvalidSubcomplex {
                            cell: c.cells(k)[alpha].clone(),
                            face: c.cells(k - 1)[j].clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { cells })
    }

    /// Resolve per-dimension id lists.
    pub fn from_ids<S: AsRef<str>>(c: &CwComplex, ids: &[Vec<S>]) -> Result<Self> {
        let mut cells = vec![BTreeSet::new(); c.dimension() + 1];
        for (k, level) in ids.iter().enumerate() {
            if k > c.dimension() {
                return Err(Error::Dimension(format!("subcomplex level {k} exceeds dimension")));
            }
            for id in level {
                cells[k].insert(c.cell_index(k, id.as_ref())?);
            }
        }
        Self::new(c, cells)
    }

    /// `X^{(k−1)} ∪ extra`, with `extra ⊆ X_k`.
    pub fn skeleton_with(c: &CwComplex, k: usize, extra: &[usize]) -> Result<Self> {
        let mut cells = vec![BTreeSet::new(); c.dimension() + 1];
        for (j, level) in cells.iter_mut().enumerate().take(k) {
            *level = (0..c.cells(j).len()).collect();
        }
        cells[k] = extra.iter().copied().collect();
        Self::new(c, cells)
    }

    pub fn full(c: &CwComplex) -> Self {
        Self { cells: (0..=c.dimension()).map(|k| (0..c.cells(k).len()).collect()).collect() }
    }

    pub fn contains(&self, k: usize, i: usize) -> bool {
        self.cells.get(k).is_some_and(|s| s.contains(&i))
    }
}

impl CwComplex {
    /// Assemble a complex from per-dimension cell lists and boundary matrices `B_1..B_d`.
    ///
    /// Shapes and id uniqueness are not enforced here; see [`CwComplex::validate`].
    pub fn new(name: impl Into<String>, cells: Vec<Vec<String>>, boundary: Vec<IntMatrix>) -> Result<Self> {
        if cells.len() < 2 {
            return Err(Error::Dimension("a complex needs dimension at least 1".into()));
        }
        if boundary.len() != cells.len() - 1 {
            return Err(Error::Dimension(format!(
                "expected {} boundary matrices, got {}",
                cells.len() - 1,
                boundary.len()
            )));
        }
        for (k, b) in boundary.iter().enumerate() {
            if b.shape() != (cells[k].len(), cells[k + 1].len()) {
                return Err(Error::Dimension(format!(
                    "B_{} has shape {:?}, expected {:?}",
                    k + 1,
                    b.shape(),
                    (cells[k].len(), cells[k + 1].len())
                )));
            }
        }
        let index = cells
            .iter()
            .map(|level| {
                let mut m = HashMap::new();
                for (i, id) in level.iter().enumerate() {
                    m.entry(id.clone()).or_insert(i);
                }
                m
            })
            .collect();
        let mut c = Self { name: name.into(), cells, boundary, atoms: Atoms::new(), index };
        c.atoms = c.default_atom_map();
        Ok(c)
    }

    /// Build from named incidence entries `(cell, face, coeff)`.
    pub fn from_entries(
        name: impl Into<String>,
        cells: Vec<Vec<String>>,
        entries: &[(&str, &str, i64)],
    ) -> Result<Self> {
        let d = cells.len().saturating_sub(1);
        let mut boundary: Vec<IntMatrix> =
            (1..=d).map(|k| IntMatrix::zeros(cells[k - 1].len(), cells[k].len())).collect();
        let probe = Self::new("", cells.clone(), boundary.clone())?;
        for &(cell, face, coeff) in entries {
            let (k, a, j) = probe.resolve_incidence(cell, face)?;
            boundary[k - 1][(j, a)] += BigInt::from(coeff);
        }
        Self::new(name, cells, boundary)
    }

    /// Locate `(k, α, j)` such that `cell ∈ X_k` and `face ∈ X_{k−1}`.
    pub fn resolve_incidence(&self, cell: &str, face: &str) -> Result<(usize, usize, usize)> {
        let hits: Vec<(usize, usize, usize)> = (1..=self.dimension())
            .filter_map(|k| Some((k, *self.index[k].get(cell)?, *self.index[k - 1].get(face)?)))
            .collect();
        match hits.as_slice() {
            [one] => Ok(*one),
            [] if self.index.iter().all(|m| !m.contains_key(cell)) => Err(Error::UnknownCell(cell.into())),
            [] => Err(Error::UnknownCell(face.into())),
            _ => Err(Error::AmbiguousCell(format!("{cell}/{face}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn cells(&self, k: usize) -> &[String] {
        &self.cells[k]
    }

    pub fn all_cells(&self) -> &[Vec<String>] {
        &self.cells
    }

    pub fn cell_index(&self, k: usize, id: &str) -> Result<usize> {
        self.index
            .get(k)
            .and_then(|m| m.get(id))
            .copied()
            .ok_or_else(|| Error::UnknownCell(format!("{id} (dimension {k})")))
    }

    /// `B_k`, of shape `|X_{k−1}| × |X_k|`, for `1 ≤ k ≤ d`.
    pub fn boundary(&self, k: usize) -> &IntMatrix {
        &self.boundary[k - 1]
    }

    pub fn top_boundary(&self) -> &IntMatrix {
        self.boundary(self.dimension())
    }

    pub fn boundary_f64(&self, k: usize) -> DMatrix<f64> {
        self.boundary(k).to_f64()
    }

    fn boundary_or_empty(&self, k: usize) -> IntMatrix {
        if k >= 1 && k <= self.dimension() {
            self.boundary(k).clone()
        } else if k == 0 {
            IntMatrix::zeros(0, self.cells[0].len())
        } else {
            IntMatrix::zeros(self.cells[self.dimension()].len(), 0)
        }
    }

    pub fn atoms(&self) -> &Atoms {
        &self.atoms
    }

    pub fn atoms_for(&self, alpha: usize, face: usize) -> &[i8] {
        self.atoms.get(&(alpha, face)).map_or(&[], Vec::as_slice)
    }

    /// Replace the atom decomposition; entries for zero incidences are dropped if empty.
    pub fn with_atoms(mut self, atoms: Atoms) -> Self {
        self.atoms = atoms.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        self
    }

    fn default_atom_map(&self) -> Atoms {
        let b = self.top_boundary();
        let mut atoms = Atoms::new();
        for alpha in 0..b.ncols() {
            for j in 0..b.nrows() {
                let x = &b[(j, alpha)];
                if x.is_zero() {
                    continue;
                }
                let n = x.abs().to_usize().expect("incidence number too large for atoms");
                let s: i8 = if x.is_positive() { 1 } else { -1 };
                atoms.insert((alpha, j), vec![s; n]);
            }
        }
        atoms
    }

    /// The complex with `|b|` copies of `sign(b)` as the atoms of each top incidence `b`.
    pub fn default_atoms(&self) -> Self {
        let mut c = self.clone();
        c.atoms = c.default_atom_map();
        c
    }

    /// All violated invariants; empty when the complex is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, level) in self.cells.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for id in level {
                if !seen.insert(id) {
                    out.push(Violation::new("duplicate-cell", format!("cell `{id}` repeated in dimension {k}")));
                }
            }
        }
        for k in 2..=self.dimension() {
            let prod = self.boundary(k - 1).mul(self.boundary(k));
            for i in 0..prod.nrows() {
                for j in 0..prod.ncols() {
                    if !prod[(i, j)].is_zero() {
                        out.push(Violation::new(
                            "boundary-squared",
                            format!(
                                "∂∂ ≠ 0: coefficient {} of `{}` in ∂∂`{}`",
                                prod[(i, j)],
                                self.cells[k - 2][i],
                                self.cells[k][j]
                            ),
                        ));
                    }
                }
            }
        }
        let d = self.dimension();
        let b = self.top_boundary();
        for alpha in 0..b.ncols() {
            for j in 0..b.nrows() {
                let signs = self.atoms_for(alpha, j);
                if let Some(bad) = signs.iter().find(|s| s.abs() != 1) {
                    out.push(Violation::new(
                        "atom-sign",
                        format!("atom sign {bad} for (`{}`, `{}`)", self.cells[d][alpha], self.cells[d - 1][j]),
                    ));
                }
                let sum: i64 = signs.iter().map(|&s| i64::from(s)).sum();
                if BigInt::from(sum) != b[(j, alpha)] {
                    out.push(Violation::new(
                        "atom-sum",
                        format!(
                            "atoms of (`{}`, `{}`) sum to {sum}, incidence is {}",
                            self.cells[d][alpha],
                            self.cells[d - 1][j],
                            b[(j, alpha)]
                        ),
                    ));
                }
            }
        }
        for &(alpha, j) in self.atoms.keys() {
            if alpha >= b.ncols() || j >= b.nrows() {
                out.push(Violation::new("atom-index", format!("atom entry ({alpha}, {j}) out of range")));
            }
        }
        out
    }

    pub fn boundary_apply<T: Coefficient>(&self, x: &Chain<T>) -> Result<Chain<T>> {
        let k = x.dim;
        if k == 0 || k > self.dimension() || x.coeffs.len() != self.cells[k].len() {
            return Err(Error::Dimension(format!("boundary of a {k}-chain")));
        }
        let b = self.boundary(k);
        let mut out = Chain::<T>::zero(self, k - 1);
        for (alpha, xa) in x.coeffs.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for j in 0..b.nrows() {
                let e = &b[(j, alpha)];
                if !e.is_zero() {
                    out.coeffs[j] = out.coeffs[j].clone() + T::from_incidence(e) * xa.clone();
                }
            }
        }
        Ok(out)
    }

    /// Adjoint of the boundary in the standard inner product: a `k`-chain to a `(k+1)`-chain.
    pub fn coboundary_apply<T: Coefficient>(&self, x: &Chain<T>) -> Result<Chain<T>> {
        let k = x.dim;
        if k >= self.dimension() || x.coeffs.len() != self.cells[k].len() {
            return Err(Error::Dimension(format!("coboundary of a {k}-chain")));
        }
        let b = self.boundary(k + 1);
        let mut out = Chain::<T>::zero(self, k + 1);
        for (alpha, slot) in out.coeffs.iter_mut().enumerate() {
            for (j, xj) in x.coeffs.iter().enumerate() {
                let e = &b[(j, alpha)];
                if !e.is_zero() && !xj.is_zero() {
                    *slot = slot.clone() + T::from_incidence(e) * xj.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn is_cycle<T: Coefficient>(&self, x: &Chain<T>) -> Result<bool> {
        if x.dim == 0 {
            return Ok(x.coeffs.len() == self.cells[0].len());
        }
        Ok(self.boundary_apply(x)?.is_zero())
    }

    /// Integral homology `H_k(X)` or `H_k(X, L)`.
    pub fn homology(&self, k: usize, relative_to: Option<&Subcomplex>) -> Result<HomologySummary> {
        if k > self.dimension() {
            return Err(Error::Dimension(format!("H_{k} of a {}-complex", self.dimension())));
        }
        let keep = |j: usize| -> Vec<usize> {
            (0..self.cells.get(j).map_or(0, Vec::len))
                .filter(|&i| relative_to.is_none_or(|l| !l.contains(j, i)))
                .collect()
        };
        let restrict = |m: IntMatrix, rows: &[usize], cols: &[usize]| m.select_rows(rows).select_columns(cols);

        let here = keep(k);
        let below = if k > 0 { keep(k - 1) } else { Vec::new() };
        let above = if k < self.dimension() { keep(k + 1) } else { Vec::new() };
        let bk = restrict(self.boundary_or_empty(k), &below, &here);
        let bk1 = if k < self.dimension() {
            restrict(self.boundary(k + 1).clone(), &here, &above)
        } else {
            IntMatrix::zeros(here.len(), 0)
        };
        let rank_k = exact::rank_int(&bk);
        let smith = smith_normal_form(&bk1);
        let torsion_factors = smith.torsion();
        let torsion_order = torsion_factors.iter().fold(BigInt::one(), |a, b| a * b);
        Ok(HomologySummary {
            dimension: k,
            betti: here.len() - rank_k - smith.rank,
            torsion_factors,
            torsion_order,
        })
    }

    /// The `k`-skeleton as a complex of dimension `k`, with default atoms.
    pub fn skeleton(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dimension() {
            return Err(Error::Dimension(format!("skeleton {k} of a {}-complex", self.dimension())));
        }
        Self::new(
            format!("{}-skeleton{k}", self.name),
            self.cells[..=k].to_vec(),
            self.boundary[..k].to_vec(),
        )
    }
}
