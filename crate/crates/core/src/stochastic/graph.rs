//! Elementary transitions and breadth-first exploration of the cycle-incidence graph.

use std::collections::{HashMap, VecDeque};

use num::{BigInt, ToPrimitive, Zero};

use crate::complex::{CwComplex, IntChain};
use crate::error::{Error, Result};
use crate::linalg::{smith_normal_form, Smith};

/// An integer `(d−1)`-cycle in the class of the initial state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateNode {
    pub cycle: Vec<i64>,
}

impl StateNode {
    pub fn new(cycle: Vec<i64>) -> Self {
        Self { cycle }
    }

    pub fn from_chain(z: &IntChain) -> Result<Self> {
        let cycle = z
            .coeffs
            .iter()
            .map(|x| x.to_i64().ok_or_else(|| Error::Malformed("state coefficient exceeds 64 bits".into())))
            .collect::<Result<_>>()?;
        Ok(Self { cycle })
    }

    /// `‖z‖ = Σ_b |⟨z, b⟩|`.
    pub fn norm(&self) -> i64 {
        self.cycle.iter().map(|x| x.abs()).sum()
    }

    pub fn to_chain(&self, dim: usize) -> IntChain {
        IntChain::new(dim, self.cycle.iter().map(|&x| BigInt::from(x)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionEdge {
    pub alpha: usize,
    pub face: usize,
    pub atom: usize,
    /// Sign `(−1)^χ` of the atom.
    pub sign: i8,
    pub target: StateNode,
}

/// Top boundary columns as `i64`, cached for repeated neighbor queries.
#[derive(Clone, Debug)]
pub struct TransitionRules {
    dim: usize,
    /// `∂α` for each top cell.
    columns: Vec<Vec<i64>>,
    /// For each face, the `(α, atom signs)` pairs with nonzero incidence, in `α` order.
    incident: Vec<Vec<(usize, Vec<i8>)>>,
    smith: Smith,
}

impl TransitionRules {
    pub fn new(c: &CwComplex) -> Self {
        let b = c.top_boundary();
        let (n, m) = b.shape();
        let columns = (0..m)
            .map(|a| (0..n).map(|f| b[(f, a)].to_i64().expect("incidence fits in 64 bits")).collect())
            .collect();
        let incident = (0..n)
            .map(|f| {
                (0..m)
                    .filter(|&a| !b[(f, a)].is_zero())
                    .map(|a| (a, c.atoms_for(a, f).to_vec()))
                    .collect()
            })
            .collect();
        Self { dim: c.dimension() - 1, columns, incident, smith: smith_normal_form(b) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Top cells `α` and faces `f` for which a transition could leave `z`.
    pub fn neighbors(&self, z: &StateNode) -> Vec<TransitionEdge> {
        let mut out = Vec::new();
        for (f, &zf) in z.cycle.iter().enumerate() {
            if zf == 0 {
                continue;
            }
            for (alpha, atoms) in &self.incident[f] {
                let col = &self.columns[*alpha];
                for (k, &s) in atoms.iter().enumerate() {
                    let shift = i64::from(s).checked_mul(zf).expect("state overflow");
                    let target: Vec<i64> = z
                        .cycle
                        .iter()
                        .zip(col)
                        .map(|(&x, &b)| x.checked_sub(shift.checked_mul(b).expect("state overflow")).expect("state overflow"))
                        .collect();
                    out.push(TransitionEdge { alpha: *alpha, face: f, atom: k, sign: s, target: StateNode::new(target) });
                }
            }
        }
        out
    }

    /// Whether `z − z₀` is an integer boundary.
    pub fn same_class(&self, z: &StateNode, z0: &StateNode) -> bool {
        let diff: Vec<BigInt> = z.cycle.iter().zip(&z0.cycle).map(|(a, b)| BigInt::from(a - b)).collect();
        self.smith.solve(&diff).is_some()
    }
}

/// `neighbors` for a complex and a state.
pub fn neighbors(c: &CwComplex, z: &StateNode) -> Vec<TransitionEdge> {
    TransitionRules::new(c).neighbors(z)
}

#[derive(Clone, Debug)]
pub struct ExploredGraph {
    pub states: Vec<StateNode>,
    /// `(source index, target index, edge)`; targets beyond the norm cap are not listed.
    pub edges: Vec<(usize, usize, TransitionEdge)>,
    pub truncated: bool,
}

impl ExploredGraph {
    pub fn index_of(&self, z: &StateNode) -> Option<usize> {
        self.states.iter().position(|s| s == z)
    }
}

/// Breadth-first closure of `neighbors` from `z0`, stopping at `max_states` states and not
/// entering states of norm above `max_norm`.
pub fn explore(c: &CwComplex, z0: &StateNode, max_states: usize, max_norm: i64) -> ExploredGraph {
    let rules = TransitionRules::new(c);
    let mut index: HashMap<StateNode, usize> = HashMap::new();
    let mut states = vec![z0.clone()];
    index.insert(z0.clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut edges = Vec::new();
    let mut truncated = false;
    while let Some(i) = queue.pop_front() {
        for e in rules.neighbors(&states[i]) {
            if e.target.norm() > max_norm {
                truncated = true;
                continue;
            }
            let j = match index.get(&e.target) {
                Some(&j) => j,
                None if states.len() >= max_states => {
                    truncated = true;
                    continue;
                }
                None => {
                    let j = states.len();
                    states.push(e.target.clone());
                    index.insert(e.target.clone(), j);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i, j, e));
        }
    }
    ExploredGraph { states, edges, truncated }
}
