//! Weight systems, periodic driving protocols, and the U/V segmentation of a loop.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::complex::CwComplex;
use crate::error::{Error, Result};

/// Static energies `E` on `X_{d−1}` and barriers `W` on `X_d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSystem {
    pub e: Vec<f64>,
    pub w: Vec<f64>,
}

/// Periodic cubic Hermite interpolant through samples at `i/N`, `0 ≤ i < N`, with
/// central-difference slopes; value and slope match across the seam by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpline {
    samples: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Malformed("a periodic spline needs at least 3 samples".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Malformed("spline samples must be finite".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.samples.len();
        let s = t.rem_euclid(1.0) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }

    fn slope(&self, i: usize) -> f64 {
        let n = self.samples.len();
        (self.samples[(i + 1) % n] - self.samples[(i + n - 1) % n]) / 2.0
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let (i, u) = self.locate(t);
        let (y0, y1) = (self.samples[i], self.samples[(i + 1) % n]);
        let (m0, m1) = (self.slope(i), self.slope((i + 1) % n));
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let (i, u) = self.locate(t);
        let (y0, y1) = (self.samples[i], self.samples[(i + 1) % n]);
        let (m0, m1) = (self.slope(i), self.slope((i + 1) % n));
        let u2 = u * u;
        let per_index = (6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * m1;
        per_index * n as f64
    }
}

/// One scalar 1-periodic component of a protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    Constant(f64),
    /// `offset + amplitude · sin(2π(harmonic · t + phase))`.
    Harmonic { offset: f64, amplitude: f64, harmonic: u32, phase: f64 },
    Spline(PeriodicSpline),
}

impl Drive {
    pub fn sine(offset: f64, amplitude: f64) -> Self {
        Drive::Harmonic { offset, amplitude, harmonic: 1, phase: 0.0 }
    }

    /// `offset + amplitude · cos 2πt`.
    pub fn cosine(offset: f64, amplitude: f64) -> Self {
        Drive::Harmonic { offset, amplitude, harmonic: 1, phase: 0.25 }
    }

    pub fn negated(&self) -> Self {
        match self {
            Drive::Constant(x) => Drive::Constant(-x),
            Drive::Harmonic { offset, amplitude, harmonic, phase } => {
                Drive::Harmonic { offset: -offset, amplitude: -amplitude, harmonic: *harmonic, phase: *phase }
            }
            Drive::Spline(s) => Drive::Spline(PeriodicSpline { samples: s.samples.iter().map(|x| -x).collect() }),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Drive::Constant(x) => *x,
            Drive::Harmonic { offset, amplitude, harmonic, phase } => {
                let arg = (f64::from(*harmonic) * t.rem_euclid(1.0) + phase).rem_euclid(1.0);
                offset + amplitude * (TAU * arg).sin()
            }
            Drive::Spline(s) => s.value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Drive::Constant(_) => 0.0,
            Drive::Harmonic { amplitude, harmonic, phase, .. } => {
                let h = f64::from(*harmonic);
                let arg = (h * t.rem_euclid(1.0) + phase).rem_euclid(1.0);
                amplitude * TAU * h * (TAU * arg).cos()
            }
            Drive::Spline(s) => s.derivative(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Drive::Constant(_) => true,
            Drive::Harmonic { amplitude, harmonic, .. } => *amplitude == 0.0 || *harmonic == 0,
            Drive::Spline(s) => s.samples.iter().all(|&x| x == s.samples[0]),
        }
    }

    /// Upper bound on `|d/dt|` over the period.
    pub fn max_abs_derivative(&self) -> f64 {
        match self {
            Drive::Constant(_) => 0.0,
            Drive::Harmonic { amplitude, harmonic, .. } => (amplitude * TAU * f64::from(*harmonic)).abs(),
            Drive::Spline(_) => (0..4096).map(|i| self.derivative(i as f64 / 4096.0).abs()).fold(0.0, f64::max),
        }
    }
}

/// A loop `t ↦ (E(t), W(t))` together with the driving time `τ_D` and inverse temperature `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingProtocol {
    pub tau_d: f64,
    pub beta: f64,
    pub e: Vec<Drive>,
    pub w: Vec<Drive>,
}

impl DrivingProtocol {
    /// Assign one drive per named cell of `X_{d−1}` and `X_d`; every such cell must be covered.
    pub fn from_named<S: AsRef<str>>(
        c: &CwComplex,
        tau_d: f64,
        beta: f64,
        terms: impl IntoIterator<Item = (S, Drive)>,
    ) -> Result<Self> {
        let d = c.dimension();
        let mut e: Vec<Option<Drive>> = vec![None; c.cells(d - 1).len()];
        let mut w: Vec<Option<Drive>> = vec![None; c.cells(d).len()];
        for (id, drive) in terms {
            let id = id.as_ref();
            let lo = c.cell_index(d - 1, id).ok();
            let hi = c.cell_index(d, id).ok();
            match (lo, hi) {
                (Some(i), None) => e[i] = Some(drive),
                (None, Some(i)) => w[i] = Some(drive),
                (Some(_), Some(_)) => return Err(Error::AmbiguousCell(id.to_string())),
                (None, None) => return Err(Error::UnknownCell(id.to_string())),
            }
        }
        let collect = |v: Vec<Option<Drive>>, k: usize| -> Result<Vec<Drive>> {
            v.into_iter()
                .enumerate()
                .map(|(i, x)| x.ok_or_else(|| Error::Malformed(format!("no drive for cell `{}`", c.cells(k)[i]))))
                .collect()
        };
        let p = Self { tau_d, beta, e: collect(e, d - 1)?, w: collect(w, d)? };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tau_d >= 0.0 && self.tau_d.is_finite()) {
            return Err(Error::Malformed(format!("τ_D must be nonnegative, got {}", self.tau_d)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Malformed(format!("β must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_tau_d(mut self, tau_d: f64) -> Self {
        self.tau_d = tau_d;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn evaluate(&self, t: f64) -> WeightSystem {
        WeightSystem {
            e: self.e.iter().map(|x| x.value(t)).collect(),
            w: self.w.iter().map(|x| x.value(t)).collect(),
        }
    }

    pub fn evaluate_derivative(&self, t: f64) -> WeightSystem {
        WeightSystem {
            e: self.e.iter().map(|x| x.derivative(t)).collect(),
            w: self.w.iter().map(|x| x.derivative(t)).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.e.iter().chain(&self.w).all(Drive::is_constant)
    }

    /// `max_t ‖Ė(t)‖_∞`.
    pub fn max_energy_rate(&self) -> f64 {
        self.e.iter().map(Drive::max_abs_derivative).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PointClass {
    pub u: bool,
    pub v: bool,
}

impl PointClass {
    pub fn is_good(self) -> bool {
        self.u || self.v
    }
}

/// Argsort of `x` when its values are pairwise distinct.
pub fn strict_order(x: &[f64]) -> Option<Vec<usize>> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    idx.windows(2).all(|w| x[w[0]] < x[w[1]]).then_some(idx)
}

pub fn is_injective(x: &[f64]) -> bool {
    strict_order(x).is_some()
}

/// Smallest gap between sorted distinct values, if any two values are closer than `tol`.
pub fn near_tie(x: &[f64], tol: f64) -> Option<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let gap = v.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    (gap < tol).then_some(gap)
}

/// `U` when `E` is one-to-one, `V` when `W` is one-to-one.
pub fn classify_point(ws: &WeightSystem) -> PointClass {
    PointClass { u: is_injective(&ws.e), v: is_injective(&ws.w) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    U,
    V,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentDecomposition {
    pub segments: Vec<Segment>,
    /// Number of grid intervals used for the final classification.
    pub resolution: usize,
    pub warnings: Vec<String>,
}

fn classify_grid(p: &DrivingProtocol, n: usize) -> Result<Vec<SegmentKind>> {
    let points: Vec<WeightSystem> = (0..=n).map(|i| p.evaluate(i as f64 / n as f64)).collect();
    let e_order: Vec<Option<Vec<usize>>> = points.iter().map(|ws| strict_order(&ws.e)).collect();
    let w_order: Vec<Option<Vec<usize>>> = points.iter().map(|ws| strict_order(&ws.w)).collect();
    for i in 0..=n {
        if e_order[i].is_none() && w_order[i].is_none() {
            return Err(Error::BadParameter {
                t: i as f64 / n as f64,
                reason: "neither E nor W is one-to-one".into(),
            });
        }
    }
    if e_order[0].is_none() {
        return Err(Error::BadParameter {
            t: 0.0,
            reason: "E is not one-to-one at the base point; shift the phase of the loop".into(),
        });
    }
    let same = |o: &[Option<Vec<usize>>], i: usize| o[i].is_some() && o[i] == o[i + 1];
    (0..n)
        .map(|i| {
            if same(&e_order, i) {
                Ok(SegmentKind::U)
            } else if same(&w_order, i) {
                Ok(SegmentKind::V)
            } else {
                Err(Error::BadParameter {
                    t: (i as f64 + 0.5) / n as f64,
                    reason: "both orderings change within one grid interval".into(),
                })
            }
        })
        .collect()
}

fn amalgamate(kinds: &[SegmentKind]) -> Vec<Segment> {
    let n = kinds.len() as f64;
    let mut out: Vec<Segment> = Vec::new();
    for (i, &k) in kinds.iter().enumerate() {
        let (a, b) = (i as f64 / n, (i + 1) as f64 / n);
        match out.last_mut() {
            Some(s) if s.kind == k => s.end = b,
            _ => out.push(Segment { start: a, end: b, kind: k }),
        }
    }
    out
}

/// Split `[0, 1]` into maximal type-U / type-V segments, refining a dyadic grid from
/// `2^min_level` up to `2^max_level` until the type sequence is stable.
pub fn segment_with(p: &DrivingProtocol, min_level: u32, max_level: u32) -> Result<SegmentDecomposition> {
    let mut warnings = Vec::new();
    let mut previous: Option<Vec<SegmentKind>> = None;
    let mut last = None;
    for k in min_level..=max_level {
        let n = 1usize << k;
        let segs = amalgamate(&classify_grid(p, n)?);
        let kinds: Vec<SegmentKind> = segs.iter().map(|s| s.kind).collect();
        let stable = previous.as_ref() == Some(&kinds);
        previous = Some(kinds);
        last = Some((segs, n));
        if stable {
            break;
        }
        if k == max_level {
            warnings.push(format!("segment types not stable at resolution 2^{max_level}"));
        }
    }
    let (segments, resolution) = last.expect("at least one refinement level");
    for s in &segments {
        for t in [s.start, s.end] {
            let ws = p.evaluate(t);
            if let Some(g) = near_tie(&ws.e, 1e-12) {
                warnings.push(format!("near tie in E at t = {t}: gap {g:e}"));
            }
        }
    }
    Ok(SegmentDecomposition { segments, resolution, warnings })
}

pub fn segment(p: &DrivingProtocol) -> Result<SegmentDecomposition> {
    segment_with(p, 6, 14)
}
