//! Adiabatic current `Q^B` and its low-temperature quantization.

use nalgebra::DVector;
use num::{BigInt, BigRational, One, Signed, Zero};

use super::system::DrivenSystem;
use crate::complex::RatChain;
use crate::error::Result;
use crate::forests::{psi_l, sigma_t, ForestCatalog};
use crate::linalg::rational_to_f64;
use crate::protocol::{segment, SegmentKind, WeightSystem};
use crate::quadrature::{refine, Refined};

/// `Q^B = −∫₀¹ 𝒜(t) ρ̇^B(t) dt` with dyadic refinement from `start` to `max_level`.
pub fn adiabatic_current(sys: &DrivenSystem, start: u32, max_level: u32, tol: f64) -> Refined {
    refine(
        |t| {
            let a = sys.kirchhoff(t) * sys.boltzmann_rate(t);
            a.iter().map(|x| -x).collect()
        },
        start,
        max_level,
        tol,
    )
}

/// Entrywise distances `max|𝒜_β − ς_{T^μ}|` and `max|ρ^B_β − ψ_{L^μ}|` at one weight system.
pub fn low_temperature_distances(catalog: &ForestCatalog, ws: &WeightSystem, beta: f64) -> Result<(f64, f64)> {
    let tree = catalog.minimal_tree(&ws.w)?;
    let cotree = catalog.minimal_cotree(&ws.e)?;
    let a = (catalog.kirchhoff_matrix(&ws.w, beta) - &tree.section_f64).amax();
    let b = (catalog.boltzmann_matrix(&ws.e, beta) - &cotree.projection_f64).amax();
    Ok((a, b))
}

#[derive(Clone, Debug)]
pub struct LedgerEntry {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
    /// `T^μ` at the segment midpoint (type V only).
    pub tree: Option<Vec<usize>>,
    /// `L^μ` at the two endpoints.
    pub cotree_start: Vec<usize>,
    pub cotree_end: Vec<usize>,
    /// `−ς_{T^μ}(ψ_{L^μ(end)} − ψ_{L^μ(start)})(z₀)`, zero on type U.
    pub contribution: RatChain,
}

#[derive(Clone, Debug)]
pub struct Quantization {
    pub entries: Vec<LedgerEntry>,
    pub total: RatChain,
    pub delta: BigInt,
    /// Whether every coefficient of `δ·total` is an integer.
    pub in_lattice: bool,
    /// Inverse temperature of the numeric comparison.
    pub probe_beta: f64,
    pub numeric: Vec<f64>,
    /// `‖Q^B_{probe} − total‖₁`.
    pub distance: f64,
    pub warnings: Vec<String>,
}

/// Exact low-temperature limit of `Q^B` as a sum over type-V segments, compared with
/// the numeric adiabatic current at `probe_beta`.
pub fn quantized_current(sys: &DrivenSystem, probe_beta: f64) -> Result<Quantization> {
    let c = &sys.complex;
    let cat = &sys.catalog;
    let d = c.dimension();
    let decomposition = segment(&sys.protocol)?;
    let z0 = sys.z0.to_rational();
    let mut total = RatChain::zero(c, d);
    let mut entries = Vec::with_capacity(decomposition.segments.len());
    for s in &decomposition.segments {
        let l_start = cat.minimal_cotree(&sys.protocol.evaluate(s.start).e)?;
        let l_end = cat.minimal_cotree(&sys.protocol.evaluate(s.end).e)?;
        let (tree, contribution) = match s.kind {
            SegmentKind::U => (None, RatChain::zero(c, d)),
            SegmentKind::V => {
                let mid = 0.5 * (s.start + s.end);
                let t = cat.minimal_tree(&sys.protocol.evaluate(mid).w)?;
                let a = psi_l(c, l_start, &z0)?;
                let b = psi_l(c, l_end, &z0)?;
                let diff = RatChain::new(d - 1, a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| y - x).collect());
                let x = sigma_t(c, t, &diff)?;
                (Some(t.cells.clone()), RatChain::new(d, x.coeffs.into_iter().map(|v| -v).collect()))
            }
        };
        for (acc, x) in total.coeffs.iter_mut().zip(&contribution.coeffs) {
            *acc += x;
        }
        entries.push(LedgerEntry {
            start: s.start,
            end: s.end,
            kind: s.kind,
            tree,
            cotree_start: l_start.cells.clone(),
            cotree_end: l_end.cells.clone(),
            contribution,
        });
    }
    let delta = cat.delta.clone();
    let scale = BigRational::from_integer(delta.clone());
    let in_lattice = total.coeffs.iter().all(|x| (x * &scale).denom().is_one());

    let probe = sys.with_protocol(sys.protocol.clone().with_beta(probe_beta));
    let q = adiabatic_current(&probe, 10, 20, 1e-10);
    let distance = q.value.iter().zip(&total.coeffs).map(|(a, b)| (a - rational_to_f64(b)).abs()).sum();
    let mut warnings = decomposition.warnings;
    if q.richardson > 1e-6 {
        warnings.push(format!("adiabatic quadrature not converged: Richardson difference {:e}", q.richardson));
    }
    Ok(Quantization { entries, total, delta, in_lattice, probe_beta, numeric: q.value, distance, warnings })
}

/// `max_t ‖ρ̇^B(t)‖_∞` over `samples` uniform points of `[a, b]`.
pub fn max_boltzmann_rate(sys: &DrivenSystem, a: f64, b: f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| sys.boltzmann_rate(a + (b - a) * i as f64 / samples as f64).amax())
        .fold(0.0, f64::max)
}

/// Whether an exact chain has all coefficients in `Z`.
pub fn is_integral(x: &RatChain) -> bool {
    x.coeffs.iter().all(|v| v.denom().is_one())
}

/// `‖x‖₁` of an exact chain, as a float.
pub fn l1(x: &RatChain) -> f64 {
    x.coeffs.iter().map(|v| rational_to_f64(&v.abs())).sum()
}

/// Nonzero coefficients of an exact chain.
pub fn support(x: &RatChain) -> Vec<usize> {
    x.coeffs.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i).collect()
}

/// Real vector of an exact chain.
pub fn to_dvector(x: &RatChain) -> DVector<f64> {
    DVector::from_iterator(x.coeffs.len(), x.coeffs.iter().map(rational_to_f64))
}
