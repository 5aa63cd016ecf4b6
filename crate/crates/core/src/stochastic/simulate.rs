//! Trajectories of the Markov chain of cycles and their empirical first moment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::graph::{StateNode, TransitionEdge, TransitionRules};
use super::thinning::{Thinning, ThinningStats};
use crate::protocol::DrivingProtocol;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<StateNode>,
    pub edges: Vec<TransitionEdge>,
    pub jump_times: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    /// Set when a jump would have left the norm cap; the trajectory stops there.
    pub truncated: bool,
    pub stats: ThinningStats,
}

impl Trajectory {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> &StateNode {
        let k = self.jump_times.partition_point(|&s| s <= t);
        &self.states[k]
    }
}

/// Total exit rate and per-edge rates `τ_D e^{β(E_f − W_α)}`.
fn edge_rates(p: &DrivingProtocol, edges: &[TransitionEdge], t: f64, out: &mut Vec<f64>) -> f64 {
    let ws = p.evaluate(t);
    out.clear();
    let mut total = 0.0;
    for e in edges {
        let k = p.tau_d * (p.beta * (ws.e[e.face] - ws.w[e.alpha])).exp();
        out.push(k);
        total += k;
    }
    total
}

fn total_rate(p: &DrivingProtocol, edges: &[TransitionEdge], t: f64) -> f64 {
    let ws = p.evaluate(t);
    edges.iter().map(|e| p.tau_d * (p.beta * (ws.e[e.face] - ws.w[e.alpha])).exp()).sum()
}

/// One trajectory on `[0, t_end]` from the random stream `(seed, stream)`.
pub fn simulate_stream(
    rules: &TransitionRules,
    p: &DrivingProtocol,
    z0: &StateNode,
    t_end: f64,
    seed: u64,
    stream: u64,
    max_norm: i64,
) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let thinning = Thinning::default();
    let mut stats = ThinningStats::default();
    let mut traj = Trajectory {
        states: vec![z0.clone()],
        edges: Vec::new(),
        jump_times: Vec::new(),
        seed,
        stream,
        truncated: false,
        stats,
    };
    let mut t = 0.0;
    let mut rates = Vec::new();
    loop {
        let z = traj.states.last().expect("nonempty");
        let edges = rules.neighbors(z);
        if edges.is_empty() {
            break;
        }
        let Some(s) = thinning.first_event(&mut rng, t, t_end, |u| total_rate(p, &edges, u), &mut stats) else {
            break;
        };
        let total = edge_rates(p, &edges, s, &mut rates);
        let mut pick = rng.random::<f64>() * total;
        let mut k = rates.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if pick < *r {
                k = i;
                break;
            }
            pick -= r;
        }
        let edge = edges[k].clone();
        if edge.target.norm() > max_norm {
            traj.truncated = true;
            break;
        }
        t = s;
        traj.states.push(edge.target.clone());
        traj.edges.push(edge);
        traj.jump_times.push(s);
    }
    traj.stats = stats;
    traj
}

pub fn simulate(
    rules: &TransitionRules,
    p: &DrivingProtocol,
    z0: &StateNode,
    t_end: f64,
    seed: u64,
    max_norm: i64,
) -> Trajectory {
    simulate_stream(rules, p, z0, t_end, seed, 0, max_norm)
}

/// `n` trajectories on streams `0..n`, in stream order.
pub fn simulate_ensemble(
    rules: &TransitionRules,
    p: &DrivingProtocol,
    z0: &StateNode,
    t_end: f64,
    seed: u64,
    streams: std::ops::Range<u64>,
    max_norm: i64,
) -> Vec<Trajectory> {
    streams.into_par_iter().map(|i| simulate_stream(rules, p, z0, t_end, seed, i, max_norm)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalMoment {
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub used: usize,
    pub excluded: usize,
}

impl EmpiricalMoment {
    pub fn excluded_fraction(&self) -> f64 {
        let n = self.used + self.excluded;
        if n == 0 {
            0.0
        } else {
            self.excluded as f64 / n as f64
        }
    }
}

/// Coefficientwise sample mean and standard error of the state at each grid time,
/// over non-truncated trajectories, accumulated in trajectory order.
pub fn empirical_expectation(dim: usize, trajectories: &[Trajectory], grid: &[f64]) -> EmpiricalMoment {
    let kept: Vec<&Trajectory> = trajectories.iter().filter(|t| !t.truncated).collect();
    let n = kept.len();
    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for tr in &kept {
            for (i, &x) in tr.state_at(t).cycle.iter().enumerate() {
                let x = x as f64;
                sum[i] += x;
                sq[i] += x * x;
            }
        }
        let m: Vec<f64> = sum.iter().map(|s| if n > 0 { s / n as f64 } else { f64::NAN }).collect();
        let se = sq
            .iter()
            .zip(&m)
            .map(|(q, mu)| {
                if n < 2 {
                    0.0
                } else {
                    let var = ((q - n as f64 * mu * mu) / (n - 1) as f64).max(0.0);
                    (var / n as f64).sqrt()
                }
            })
            .collect();
        mean.push(m);
        stderr.push(se);
    }
    EmpiricalMoment { times: grid.to_vec(), mean, stderr, used: n, excluded: trajectories.len() - n }
}
