//! Time evolution of the expectation, monodromy, periodic solutions, and currents.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ode::{integrate, integrate_grid, LinearSystem, OdeOptions};
use super::operators::build_operators;
use super::system::DrivenSystem;
use crate::complex::CwComplex;
use crate::error::{Error, Result};
use crate::protocol::DrivingProtocol;
use crate::quadrature::{dyadic_grid, max_abs_diff, simpson_pair};

/// `q' = −τ_D H(t) q` on all of `C_{d−1}`.
struct FullSpace<'a> {
    complex: &'a CwComplex,
    protocol: &'a DrivingProtocol,
}

impl LinearSystem for FullSpace<'_> {
    fn dim(&self) -> usize {
        self.complex.cells(self.complex.dimension() - 1).len()
    }

    fn matrix(&self, t: f64) -> DMatrix<f64> {
        let ws = self.protocol.evaluate(t);
        build_operators(self.complex, &ws, self.protocol.beta).h * (-self.protocol.tau_d)
    }
}

/// Boundary part in frame coordinates: `u' = −τ_D K(t) u`, with `−Λρ̇^B` on forced columns.
struct Reduced<'a> {
    sys: &'a DrivenSystem,
    forced_from: usize,
}

impl LinearSystem for Reduced<'_> {
    fn dim(&self) -> usize {
        self.sys.rank()
    }

    fn matrix(&self, t: f64) -> DMatrix<f64> {
        self.sys.reduced_generator(t) * (-self.sys.tau())
    }

    fn forcing(&self, t: f64, cols: usize) -> Option<DMatrix<f64>> {
        if self.forced_from >= cols {
            return None;
        }
        let g = self.sys.forcing(t);
        let mut f = DMatrix::zeros(self.dim(), cols);
        for j in self.forced_from..cols {
            f.set_column(j, &(-&g));
        }
        Some(f)
    }
}

/// Solution of the dynamical equation from `z_init` at `t0` to `t1`.
pub fn evolve(
    c: &CwComplex,
    p: &DrivingProtocol,
    z_init: &[f64],
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>> {
    let sys = FullSpace { complex: c, protocol: p };
    if z_init.len() != sys.dim() {
        return Err(Error::Dimension(format!("initial chain has {} entries, expected {}", z_init.len(), sys.dim())));
    }
    if t1 < t0 {
        return Err(Error::Malformed("evolve needs t0 ≤ t1".into()));
    }
    let y0 = DMatrix::from_column_slice(z_init.len(), 1, z_init);
    let (y, _) = integrate(&sys, y0, t0, t1, opts)?;
    Ok(y.column(0).iter().copied().collect())
}

/// The propagator `U(t1, t0)` on `C_{d−1}`.
pub fn monodromy(c: &CwComplex, p: &DrivingProtocol, t0: f64, t1: f64, opts: &OdeOptions) -> Result<DMatrix<f64>> {
    let sys = FullSpace { complex: c, protocol: p };
    let n = sys.dim();
    Ok(integrate(&sys, DMatrix::identity(n, n), t0, t1, opts)?.0)
}

/// `min_t` of the smallest eigenvalue of `H(t)` on boundaries over `samples` uniform times.
pub fn spectral_gap(sys: &DrivenSystem, samples: usize) -> Result<f64> {
    let gap = (0..samples.max(1)).map(|i| sys.gap_at(i as f64 / samples.max(1) as f64)).fold(f64::INFINITY, f64::min);
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::NonPositiveGap(gap));
    }
    Ok(gap)
}

/// `τ₀ = β max|Ė|_∞ / (2λ)`, above which the boundary monodromy contracts.
pub fn threshold(sys: &DrivenSystem, gap: f64) -> f64 {
    sys.beta() * sys.protocol.max_energy_rate() / (2.0 * gap)
}

/// `ln ‖U(1, 0)|_B‖_E`, accumulated over `pieces` subintervals to avoid underflow.
///
/// Each factor is measured from the `E(t_i)` norm to the `E(t_{i+1})` norm, so the sum
/// bounds the logarithm of the full operator norm from above.
pub fn log_monodromy_norm(sys: &DrivenSystem, pieces: usize, opts: &OdeOptions) -> Result<f64> {
    let r = sys.rank();
    if r == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let red = Reduced { sys, forced_from: r };
    // Pure relative control: the factors decay far below any fixed atol.
    let opts = OdeOptions { atol: 0.0, column_scale: None, ..opts.clone() };
    let mut total = 0.0;
    for i in 0..pieces {
        let (a, b) = (i as f64 / pieces as f64, (i + 1) as f64 / pieces as f64);
        let (m, _) = integrate(&red, DMatrix::identity(r, r), a, b, &opts)?;
        let ca = sys.energy_factor(a);
        let cb = sys.energy_factor(b);
        let inv = ca.try_inverse().ok_or_else(|| Error::Integration { t: a, reason: "singular frame".into() })?;
        let op = cb * m * inv;
        let norm = op.singular_values().iter().copied().fold(0.0, f64::max);
        total += norm.ln();
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicDiagnostics {
    /// `‖ρ(1) − ρ(0)‖_∞`.
    pub residual: f64,
    pub gap: f64,
    pub tau0: f64,
    pub above_threshold: bool,
    /// Condition estimate of `I − U(1,0)` on boundaries.
    pub condition: f64,
    /// Largest boundary defect of `ρ(t) − z₀` over the grid.
    pub class_defect: f64,
    /// `max_t ‖D* ρ^B‖_∞ / (‖D*‖_∞ ‖ρ^B‖_∞)`, which vanishes in exact arithmetic.
    pub harmonic_residual: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct PeriodicSolution {
    pub times: Vec<f64>,
    pub boltzmann: Vec<DVector<f64>>,
    /// `ξ(t) = ρ(t) − ρ^B(t)`, a boundary.
    pub xi: Vec<DVector<f64>>,
    pub coords: Vec<DVector<f64>>,
    pub diagnostics: PeriodicDiagnostics,
}

impl PeriodicSolution {
    pub fn rho(&self, i: usize) -> DVector<f64> {
        &self.boltzmann[i] + &self.xi[i]
    }

    /// `max_t ‖ρ(t) − ρ^B(t)‖_∞`.
    pub fn max_deviation(&self) -> f64 {
        self.xi.iter().map(|x| x.amax()).fold(0.0, f64::max)
    }
}

/// Typical size of the boundary part, used to scale absolute tolerances.
fn forced_scale(sys: &DrivenSystem) -> f64 {
    let r = sys.rank();
    let mut s: f64 = 0.0;
    for i in 0..64 {
        let t = i as f64 / 64.0;
        let g = sys.forcing(t);
        let m = DMatrix::identity(r, r) + sys.reduced_generator(t) * sys.tau();
        let q = m.lu().solve(&g).unwrap_or(g);
        s = s.max(q.amax());
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// The unique 1-periodic solution in the class of `z₀`, sampled on `2^level + 1` points.
pub fn periodic_solution(sys: &DrivenSystem, level: u32, opts: &OdeOptions) -> Result<PeriodicSolution> {
    let r = sys.rank();
    let grid = dyadic_grid(level);
    let gap = spectral_gap(sys, 256).unwrap_or(f64::NAN);
    let tau0 = threshold(sys, gap);
    let scale = forced_scale(sys);
    let mut opts = opts.clone();

    let (coords, condition, steps) = if r == 0 {
        (vec![DVector::zeros(0); grid.len()], 1.0, 0)
    } else {
        // One pass for [Φ | F] from [I | 0], then the periodic pass from u(0).
        let red = Reduced { sys, forced_from: r };
        let mut y0 = DMatrix::zeros(r, r + 1);
        y0.view_mut((0, 0), (r, r)).fill_with_identity();
        let mut col_scale = vec![1.0; r];
        col_scale.push(scale);
        opts.column_scale = Some(col_scale);
        let (y1, s1) = integrate(&red, y0, 0.0, 1.0, &opts)?;
        let phi = y1.view((0, 0), (r, r)).into_owned();
        let forced = y1.column(r).into_owned();
        let m = DMatrix::identity(r, r) - phi;
        let sv = m.singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition < 1e12) {
            return Err(Error::BelowAdiabaticThreshold { tau: sys.tau(), tau0, condition });
        }
        let u0 = m.lu().solve(&forced).ok_or(Error::BelowAdiabaticThreshold { tau: sys.tau(), tau0, condition })?;
        let single = Reduced { sys, forced_from: 0 };
        opts.column_scale = Some(vec![scale]);
        let (ys, s2) = integrate_grid(&single, DMatrix::from_column_slice(r, 1, u0.as_slice()), &grid, &opts)?;
        let coords: Vec<DVector<f64>> = ys.into_iter().map(|y| y.column(0).into_owned()).collect();
        (coords, condition, s1.accepted + s1.rejected + s2.accepted + s2.rejected)
    };

    let z0 = sys.z0.to_real();
    let z0 = DVector::from_column_slice(&z0.coeffs);
    let boltzmann: Vec<DVector<f64>> = grid.iter().map(|&t| sys.boltzmann(t)).collect();
    let xi: Vec<DVector<f64>> = coords.iter().map(|u| sys.lift(u)).collect();
    let last = grid.len() - 1;
    let residual = (&boltzmann[last] + &xi[last] - &boltzmann[0] - &xi[0]).amax();
    let class_defect =
        boltzmann.iter().zip(&xi).map(|(b, x)| sys.boundary_defect(&(b + x - &z0))).fold(0.0, f64::max);
    let harmonic_residual = grid
        .iter()
        .zip(&boltzmann)
        .map(|(&t, b)| {
            let ds = sys.dstar(t);
            let scale = ds.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * b.amax();
            if scale > 0.0 {
                (ds * b).amax() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    Ok(PeriodicSolution {
        times: grid,
        boltzmann,
        xi,
        coords,
        diagnostics: PeriodicDiagnostics {
            residual,
            gap,
            tau0,
            above_threshold: sys.tau() > tau0,
            condition,
            class_defect,
            harmonic_residual,
            steps,
        },
    })
}

/// `J(t_i) = τ_D D*(t_i) ρ(t_i)`, with `D*ρ^B = 0` used exactly.
pub fn current_density(sys: &DrivenSystem, sol: &PeriodicSolution, i: usize) -> DVector<f64> {
    sys.dstar(sol.times[i]) * &sol.xi[i] * sys.tau()
}

/// `ρ̇(t_i) = ρ̇^B(t_i) + P u̇(t_i)`, from the equation of motion.
pub fn rho_rate(sys: &DrivenSystem, sol: &PeriodicSolution, i: usize) -> DVector<f64> {
    let t = sol.times[i];
    let du = -(sys.reduced_generator(t) * &sol.coords[i]) * sys.tau() - sys.forcing(t);
    sys.boltzmann_rate(t) + sys.lift(&du)
}

#[derive(Clone, Debug, Serialize)]
pub struct AverageCurrent {
    pub q: Vec<f64>,
    /// `‖∂Q‖_∞`.
    pub boundary_residual: f64,
    /// Difference between Simpson on the final grid and on every other point.
    pub richardson: f64,
    pub level: u32,
    pub periodic: PeriodicDiagnostics,
}

/// `Q = ∫₀¹ J dt`, refining the grid from `level` up to `max_level` until the
/// Richardson difference is below `tol·(1 + ‖Q‖_∞)`.
pub fn average_current(
    sys: &DrivenSystem,
    level: u32,
    max_level: u32,
    tol: f64,
    opts: &OdeOptions,
) -> Result<(AverageCurrent, PeriodicSolution)> {
    let mut k = level.max(2);
    loop {
        let sol = periodic_solution(sys, k, opts)?;
        let j: Vec<Vec<f64>> =
            (0..sol.times.len()).map(|i| current_density(sys, &sol, i).iter().copied().collect()).collect();
        let (q, coarse) = simpson_pair(&j);
        let richardson = max_abs_diff(&q, &coarse);
        let scale = 1.0 + q.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if richardson <= tol * scale || k >= max_level {
            let bq = sys.boundary() * DVector::from_column_slice(&q);
            let out = AverageCurrent {
                boundary_residual: bq.amax(),
                q,
                richardson,
                level: k,
                periodic: sol.diagnostics.clone(),
            };
            return Ok((out, sol));
        }
        k += 1;
    }
}
