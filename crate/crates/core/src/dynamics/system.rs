//! A complex, its forest catalog, a protocol, and a fixed homology class, bundled with
//! the reduced coordinates on the boundary space used by the deterministic layer.

use nalgebra::{DMatrix, DVector};
use num::ToPrimitive;

use super::operators::{biased_coboundary, build_operators, BiasedOperators};
use crate::complex::{CwComplex, IntChain};
use crate::error::{Error, Result};
use crate::forests::ForestCatalog;
use crate::linalg::exact;
use crate::protocol::{DrivingProtocol, WeightSystem};

#[derive(Clone, Debug)]
pub struct DrivenSystem {
    pub complex: CwComplex,
    pub catalog: ForestCatalog,
    pub protocol: DrivingProtocol,
    pub z0: IntChain,
    b: DMatrix<f64>,
    /// Columns of `B_d` forming a basis of the boundary space (`n × r`).
    frame: DMatrix<f64>,
    /// Exact left inverse of `frame` (`r × n`).
    coords: DMatrix<f64>,
    /// `ψ_L(z₀)` for every co-tree, in catalog order.
    psi: Vec<DVector<f64>>,
}

impl DrivenSystem {
    pub fn new(c: &CwComplex, catalog: &ForestCatalog, p: &DrivingProtocol, z0: &IntChain) -> Result<Self> {
        let d = c.dimension();
        if z0.dim != d - 1 || z0.coeffs.len() != c.cells(d - 1).len() {
            return Err(Error::Dimension(format!("initial state must be a {}-chain", d - 1)));
        }
        if !c.is_cycle(z0)? {
            return Err(Error::NotCycle);
        }
        let bi = c.top_boundary();
        let basis = exact::independent_columns(&bi.to_rational());
        let frame_exact = bi.select_columns(&basis).to_rational();
        let coords = exact::left_inverse(&frame_exact).expect("independent columns have a left inverse").to_f64();
        let z = DVector::from_iterator(z0.coeffs.len(), z0.coeffs.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)));
        let psi = catalog.cotrees.iter().map(|l| &l.projection_f64 * &z).collect();
        Ok(Self {
            complex: c.clone(),
            catalog: catalog.clone(),
            protocol: p.clone(),
            z0: z0.clone(),
            b: bi.to_f64(),
            frame: frame_exact.to_f64(),
            coords,
            psi,
        })
    }

    pub fn with_protocol(&self, p: DrivingProtocol) -> Self {
        Self { protocol: p, ..self.clone() }
    }

    pub fn tau(&self) -> f64 {
        self.protocol.tau_d
    }

    pub fn beta(&self) -> f64 {
        self.protocol.beta
    }

    /// Dimension of the boundary space `B_{d−1}`.
    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn boundary(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn weights(&self, t: f64) -> WeightSystem {
        self.protocol.evaluate(t)
    }

    pub fn operators(&self, t: f64) -> BiasedOperators {
        build_operators(&self.complex, &self.weights(t), self.beta())
    }

    pub fn dstar(&self, t: f64) -> DMatrix<f64> {
        biased_coboundary(&self.b, &self.weights(t), self.beta())
    }

    pub fn psi(&self) -> &[DVector<f64>] {
        &self.psi
    }

    /// `ρ^B(t)` in the class of `z₀`.
    pub fn boltzmann(&self, t: f64) -> DVector<f64> {
        let ws = self.weights(t);
        let p = self.catalog.cotree_probabilities(&ws.e, self.beta());
        let mut out = DVector::zeros(self.b.nrows());
        for (pl, psi) in p.iter().zip(&self.psi) {
            if *pl > 0.0 {
                out += psi * *pl;
            }
        }
        out
    }

    /// `dρ^B/dt = β Σ_L p_L (S̄ − S_L) ψ_L` with `S_L = Σ_{b∈L} Ė_b`.
    pub fn boltzmann_rate(&self, t: f64) -> DVector<f64> {
        let ws = self.weights(t);
        let de = self.protocol.evaluate_derivative(t).e;
        let p = self.catalog.cotree_probabilities(&ws.e, self.beta());
        let s: Vec<f64> = self.catalog.cotrees.iter().map(|l| l.cells.iter().map(|&b| de[b]).sum()).collect();
        let mean: f64 = p.iter().zip(&s).map(|(a, b)| a * b).sum();
        let mut out = DVector::zeros(self.b.nrows());
        for ((pl, sl), psi) in p.iter().zip(&s).zip(&self.psi) {
            let coef = self.beta() * pl * (mean - sl);
            if coef != 0.0 {
                out += psi * coef;
            }
        }
        out
    }

    /// The Kirchhoff section `𝒜(t)` as a matrix.
    pub fn kirchhoff(&self, t: f64) -> DMatrix<f64> {
        self.catalog.kirchhoff_matrix(&self.weights(t).w, self.beta())
    }

    /// `K(t) = Λ H(t) P`, the generator restricted to boundaries in frame coordinates.
    pub fn reduced_generator(&self, t: f64) -> DMatrix<f64> {
        let dstar = self.dstar(t);
        &self.coords * &self.b * (dstar * &self.frame)
    }

    /// `Λ ρ̇^B(t)`.
    pub fn forcing(&self, t: f64) -> DVector<f64> {
        &self.coords * self.boltzmann_rate(t)
    }

    pub fn lift(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.frame * u
    }

    /// Frame coordinates of a boundary.
    pub fn coordinates(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coords * x
    }

    /// `‖x − PΛx‖_∞`, which vanishes exactly on boundaries.
    pub fn boundary_defect(&self, x: &DVector<f64>) -> f64 {
        (x - &self.frame * (&self.coords * x)).amax()
    }

    /// Upper-triangular factor `C` with `‖Pu‖_E = ‖Cu‖` at the weights of time `t`.
    pub fn energy_factor(&self, t: f64) -> DMatrix<f64> {
        let ws = self.weights(t);
        let beta = self.beta();
        let scaled = DMatrix::from_fn(self.frame.nrows(), self.frame.ncols(), |i, j| {
            (beta * ws.e[i] / 2.0).exp() * self.frame[(i, j)]
        });
        scaled.qr().r()
    }

    /// Smallest eigenvalue of `H(t)` on `B_{d−1}` (self-adjoint in `⟨,⟩_E`).
    pub fn gap_at(&self, t: f64) -> f64 {
        let r = self.rank();
        if r == 0 {
            return f64::INFINITY;
        }
        let ws = self.weights(t);
        let beta = self.beta();
        let c = self.energy_factor(t);
        // S' = e^{−βW/2} Bᵀ e^{βE} P, so that Pᵀe^{βE}HP = S'ᵀS'.
        let sp = DMatrix::from_fn(self.b.ncols(), r, |alpha, j| {
            let mut acc = 0.0;
            for f in 0..self.b.nrows() {
                let x = self.b[(f, alpha)] * self.frame[(f, j)];
                if x != 0.0 {
                    acc += x * (beta * (ws.e[f] - ws.w[alpha] / 2.0)).exp();
                }
            }
            acc
        });
        // Eigenvalues of C^{-T} S'ᵀ S' C^{-1} = squared singular values of S' C^{-1}.
        let ct = c.transpose();
        let Some(x) = ct.solve_lower_triangular(&sp.transpose()) else {
            return f64::NAN;
        };
        let sv = x.singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        smin * smin
    }
}
