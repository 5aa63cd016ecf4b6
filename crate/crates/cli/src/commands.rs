//! Subcommand implementations.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num::BigInt;
use serde_json::{json, Map, Value};

use hypercurrent_core::builtin;
use hypercurrent_core::dynamics::adiabatic::{adiabatic_current, quantized_current};
use hypercurrent_core::dynamics::ode::OdeOptions;
use hypercurrent_core::dynamics::periodic::{average_current, current_density, evolve, periodic_solution};
use hypercurrent_core::forests::ForestCatalog;
use hypercurrent_core::io::{canonical_json, dump_complex, read_complex, ProtocolFile};
use hypercurrent_core::stochastic::{empirical_expectation, simulate_ensemble, StateNode, TransitionRules};
use hypercurrent_core::{CwComplex, DrivingProtocol, Error, IntChain, Subcomplex, WeightSystem};

use crate::output::{big_json, csv_row, rational_json, sha256_hex, Sink};
use crate::{Cli, Command, InputArgs};

/// 2 for failures of the numerical regime, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(err) if err.is_numerical() => 2,
        _ => 1,
    }
}

struct Inputs {
    complex: CwComplex,
    protocol: Option<DrivingProtocol>,
    z0: Option<IntChain>,
    from_example: bool,
}

fn read(path: &Path, sink: &mut Sink) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    sink.add_input(path, &bytes);
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn load(args: &InputArgs, sink: &mut Sink) -> Result<Inputs> {
    let (complex, example_protocol) = match (&args.example, &args.complex) {
        (Some(name), _) => {
            let (c, p) = builtin::example(name)?;
            (c, Some(p))
        }
        (None, Some(path)) => (read_complex(&read(path, sink)?)?, None),
        (None, None) => bail!("no input: pass --example NAME or --complex FILE"),
    };
    let mut z0 = None;
    let mut protocol = match &args.protocol {
        Some(path) => {
            let f = ProtocolFile::parse(&read(path, sink)?)?;
            z0 = f.initial_state(&complex)?;
            Some(f.build(&complex)?)
        }
        None => example_protocol,
    };
    if let Some(p) = protocol.as_mut() {
        if let Some(t) = args.tau_d {
            p.tau_d = t;
        }
        if let Some(b) = args.beta {
            p.beta = b;
        }
        p.check()?;
        let canonical = canonical_json(&ProtocolFile::from_protocol(&complex, p, None));
        sink.protocol_hash = Some(sha256_hex(canonical.as_bytes()));
    }
    if let Some(spec) = &args.z0 {
        z0 = Some(parse_chain(&complex, spec)?);
    }
    Ok(Inputs { complex, protocol, z0, from_example: args.example.is_some() })
}

fn parse_chain(c: &CwComplex, spec: &str) -> Result<IntChain> {
    let d = c.dimension();
    let terms = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|term| {
            let (id, v) = term.split_once('=').ok_or_else(|| anyhow!("expected cell=coefficient, got `{term}`"))?;
            let v: i64 = v.trim().parse().with_context(|| format!("bad coefficient in `{term}`"))?;
            Ok((id.trim().to_string(), BigInt::from(v)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntChain::from_named(c, d - 1, terms)?)
}

impl Inputs {
    fn protocol(&self) -> Result<&DrivingProtocol> {
        self.protocol.as_ref().ok_or_else(|| anyhow!("this subcommand needs a protocol: pass --protocol FILE"))
    }

    fn initial_state(&self) -> IntChain {
        self.z0.clone().unwrap_or_else(|| builtin::default_z0(&self.complex))
    }

    fn system(&self) -> Result<hypercurrent_core::dynamics::DrivenSystem> {
        let cat = ForestCatalog::build(&self.complex);
        Ok(hypercurrent_core::dynamics::DrivenSystem::new(&self.complex, &cat, self.protocol()?, &self.initial_state())?)
    }
}

fn named<T: Clone>(c: &CwComplex, k: usize, values: &[T], f: impl Fn(&T) -> Value) -> Value {
    let mut m = Map::new();
    for (id, v) in c.cells(k).iter().zip(values) {
        m.insert(id.clone(), f(v));
    }
    Value::Object(m)
}

fn names(c: &CwComplex, k: usize, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| c.cells(k)[i].clone()).collect()
}

pub fn run(cli: &Cli) -> Result<u8> {
    let sub = match &cli.command {
        Command::Example { .. } => "example",
        Command::Validate => "validate",
        Command::Homology { .. } => "homology",
        Command::Forests { .. } => "forests",
        Command::Boltzmann { .. } => "boltzmann",
        Command::Expect { .. } => "expect",
        Command::Current { .. } => "current",
        Command::Quantize { .. } => "quantize",
        Command::Simulate { .. } => "simulate",
    };
    let mut sink = Sink::new(cli.input.out.clone(), sub, cli.input.seed)?;
    let code = match &cli.command {
        Command::Example { name, dump, dump_protocol } => example(cli, name.as_deref(), *dump, *dump_protocol, &mut sink)?,
        cmd => {
            let inputs = load(&cli.input, &mut sink)?;
            match cmd {
                Command::Validate => validate(&inputs, &mut sink)?,
                Command::Homology { relative } => homology(&inputs, relative.as_deref(), &mut sink)?,
                Command::Forests { skeleton, weights, at } => forests(&inputs, *skeleton, weights.as_deref(), *at, &mut sink)?,
                Command::Boltzmann { t, samples } => boltzmann(&inputs, *t, *samples, &mut sink)?,
                Command::Expect { level } => expect(&inputs, *level, &mut sink)?,
                Command::Current { level, max_level, tol, adiabatic, format } => {
                    current(&inputs, *level, *max_level, *tol, *adiabatic, format, &mut sink)?
                }
                Command::Quantize { probe_beta } => quantize(&inputs, *probe_beta, &mut sink)?,
                Command::Simulate { n_traj, t_end, max_norm, grid, compare } => {
                    simulate(&inputs, cli.input.seed, *n_traj, *t_end, *max_norm, *grid, *compare, &mut sink)?
                }
                Command::Example { .. } => unreachable!(),
            }
        }
    };
    sink.finish()?;
    Ok(code)
}

fn example(cli: &Cli, name: Option<&str>, dump: bool, dump_protocol: bool, sink: &mut Sink) -> Result<u8> {
    let name = name.or(cli.input.example.as_deref()).ok_or_else(|| anyhow!("example needs a name"))?;
    let (c, p) = builtin::example(name)?;
    if dump {
        let v: Value = serde_json::from_str(&dump_complex(&c))?;
        sink.json("complex.json", v)?;
    }
    if dump_protocol {
        let z0 = builtin::default_z0(&c);
        sink.json("protocol.json", serde_json::to_value(ProtocolFile::from_protocol(&c, &p, Some(&z0)))?)?;
    }
    if !dump && !dump_protocol {
        let counts: Vec<usize> = c.all_cells().iter().map(Vec::len).collect();
        sink.json(
            "example.json",
            json!({"name": c.name(), "dimension": c.dimension(), "cell_counts": counts, "cells": c.all_cells()}),
        )?;
    }
    Ok(0)
}

fn validate(inputs: &Inputs, sink: &mut Sink) -> Result<u8> {
    let violations: Vec<Value> =
        inputs.complex.validate().iter().map(|v| json!({"kind": v.kind, "message": v.message})).collect();
    let valid = violations.is_empty();
    sink.json("validate.json", json!({"valid": valid, "violations": violations, "protocol": inputs.protocol.is_some()}))?;
    Ok(if valid { 0 } else { 1 })
}

fn homology(inputs: &Inputs, relative: Option<&[String]>, sink: &mut Sink) -> Result<u8> {
    let c = &inputs.complex;
    let sub = match relative {
        None => None,
        Some(ids) => {
            let mut cells = vec![BTreeSet::new(); c.dimension() + 1];
            for id in ids {
                let hits: Vec<(usize, usize)> =
                    (0..=c.dimension()).filter_map(|k| c.cell_index(k, id).ok().map(|i| (k, i))).collect();
                match hits.as_slice() {
                    [(k, i)] => {
                        cells[*k].insert(*i);
                    }
                    [] => return Err(Error::UnknownCell(id.clone()).into()),
                    _ => return Err(Error::AmbiguousCell(id.clone()).into()),
                }
            }
            Some(Subcomplex::new(c, cells)?)
        }
    };
    let groups = (0..=c.dimension())
        .map(|k| {
            let h = c.homology(k, sub.as_ref())?;
            Ok(json!({
                "k": k,
                "betti": h.betti,
                "torsion": h.torsion_factors.iter().map(big_json).collect::<Vec<_>>(),
                "torsion_order": big_json(&h.torsion_order),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    sink.json("homology.json", json!({"complex": c.name(), "relative": relative.is_some(), "groups": groups}))?;
    Ok(0)
}

fn parse_weights(c: &CwComplex, text: &str) -> Result<WeightSystem> {
    let m: std::collections::BTreeMap<String, f64> =
        serde_json::from_str(text).map_err(|e| anyhow!("weights file: {e}"))?;
    let d = c.dimension();
    let pick = |k: usize| -> Result<Vec<f64>> {
        c.cells(k).iter().map(|id| m.get(id).copied().ok_or_else(|| anyhow!("no weight for cell `{id}`"))).collect()
    };
    Ok(WeightSystem { e: pick(d - 1)?, w: pick(d)? })
}

fn catalog_json(c: &CwComplex, cat: &ForestCatalog, ws: Option<&WeightSystem>) -> Value {
    let d = c.dimension();
    let trees: Vec<Value> = cat
        .trees
        .iter()
        .map(|t| {
            let mut v = json!({"cells": names(c, d, &t.cells), "theta": big_json(&t.theta)});
            if let Some(ws) = ws {
                v["weight"] = json!(t.cells.iter().map(|&i| ws.w[i]).sum::<f64>());
            }
            v
        })
        .collect();
    let cotrees: Vec<Value> = cat
        .cotrees
        .iter()
        .map(|l| {
            let mut v = json!({"cells": names(c, d - 1, &l.cells), "a": big_json(&l.a)});
            if let Some(ws) = ws {
                v["weight"] = json!(l.cells.iter().map(|&i| ws.e[i]).sum::<f64>());
            }
            v
        })
        .collect();
    let mut out = json!({
        "dimension": d,
        "tree_count": trees.len(),
        "cotree_count": cotrees.len(),
        "trees": trees,
        "cotrees": cotrees,
        "delta": big_json(&cat.delta),
    });
    if let Some(ws) = ws {
        out["minimal_tree"] = match cat.minimal_tree(&ws.w) {
            Ok(t) => json!(names(c, d, &t.cells)),
            Err(e) => json!({"error": e.to_string()}),
        };
        out["minimal_cotree"] = match cat.minimal_cotree(&ws.e) {
            Ok(l) => json!(names(c, d - 1, &l.cells)),
            Err(e) => json!({"error": e.to_string()}),
        };
    }
    out
}

fn forests(inputs: &Inputs, skeleton: Option<usize>, weights: Option<&Path>, at: Option<f64>, sink: &mut Sink) -> Result<u8> {
    let c = &inputs.complex;
    let ws = match (weights, at) {
        (Some(path), _) => Some(parse_weights(c, &read(path, sink)?)?),
        (None, Some(t)) => Some(inputs.protocol()?.evaluate(t)),
        (None, None) => None,
    };
    let cat = ForestCatalog::build(c);
    let mut out = catalog_json(c, &cat, ws.as_ref());
    out["complex"] = json!(c.name());
    if let Some(k) = skeleton {
        if k == 0 || k > c.dimension() {
            bail!("--skeleton must lie in 1..={}", c.dimension());
        }
        let s = c.skeleton(k)?;
        out["skeleton"] = catalog_json(&s, &ForestCatalog::build(&s), None);
    }
    sink.json("forests.json", out)?;
    Ok(0)
}

fn boltzmann(inputs: &Inputs, t: f64, samples: Option<usize>, sink: &mut Sink) -> Result<u8> {
    let sys = inputs.system()?;
    let c = &inputs.complex;
    let d = c.dimension();
    match samples {
        None => {
            let rho: Vec<f64> = sys.boltzmann(t).iter().copied().collect();
            sink.json("boltzmann.json", json!({"t": t, "rho": named(c, d - 1, &rho, |x| json!(x))}))?;
        }
        Some(n) => {
            let n = n.max(1);
            let rows: Vec<String> = (0..=n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    csv_row(std::iter::once(t).chain(sys.boltzmann(t).iter().copied()))
                })
                .collect();
            sink.csv("boltzmann.csv", &header("t", c.cells(d - 1), ""), &rows)?;
        }
    }
    Ok(0)
}

fn header(first: &str, cells: &[String], prefix: &str) -> Vec<String> {
    std::iter::once(first.to_string()).chain(cells.iter().map(|id| format!("{prefix}{id}"))).collect()
}

fn expect(inputs: &Inputs, level: u32, sink: &mut Sink) -> Result<u8> {
    let sys = inputs.system()?;
    let sol = periodic_solution(&sys, level, &OdeOptions::default())?;
    let rows: Vec<String> = (0..sol.times.len())
        .map(|i| csv_row(std::iter::once(sol.times[i]).chain(sol.rho(i).iter().copied())))
        .collect();
    let c = &inputs.complex;
    sink.csv("expect.csv", &header("t", c.cells(c.dimension() - 1), ""), &rows)?;
    let diag = serde_json::to_value(&sol.diagnostics)?;
    if !sol.diagnostics.above_threshold {
        sink.warnings.push(format!(
            "τ_D = {} does not exceed the sufficient threshold τ₀ = {:.4e}",
            sys.tau(),
            sol.diagnostics.tau0
        ));
    }
    eprintln!("{}", canonical_json(&diag).trim_end());
    sink.extra = json!({"diagnostics": diag, "max_deviation": sol.max_deviation()});
    Ok(0)
}

fn current(
    inputs: &Inputs,
    level: u32,
    max_level: u32,
    tol: f64,
    adiabatic: bool,
    format: &str,
    sink: &mut Sink,
) -> Result<u8> {
    let sys = inputs.system()?;
    let c = &inputs.complex;
    let d = c.dimension();
    let (q, sol) = average_current(&sys, level, max_level.max(level), tol, &OdeOptions::default())?;
    let rows: Vec<String> = (0..sol.times.len())
        .map(|i| csv_row(std::iter::once(sol.times[i]).chain(current_density(&sys, &sol, i).iter().copied())))
        .collect();
    let head = header("t", c.cells(d), "J_");
    if q.richardson > tol * (1.0 + q.q.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
        sink.warnings.push(format!("quadrature not converged at level {}: Richardson {:e}", q.level, q.richardson));
    }
    if !q.periodic.above_threshold {
        sink.warnings.push(format!("τ_D below the sufficient threshold τ₀ = {:.4e}", q.periodic.tau0));
    }
    match format {
        "csv" => sink.csv("current.csv", &head, &rows)?,
        "json" => {
            let mut out = json!({
                "complex": c.name(),
                "tau_D": sys.tau(),
                "beta": sys.beta(),
                "Q": named(c, d, &q.q, |x| json!(x)),
                "Q_vector": q.q,
                "Q_l1": q.q.iter().map(|x| x.abs()).sum::<f64>(),
                "boundary_residual": q.boundary_residual,
                "richardson": q.richardson,
                "level": q.level,
                "periodic": serde_json::to_value(&q.periodic)?,
            });
            if adiabatic {
                let qb = adiabatic_current(&sys, level, 20, tol);
                out["adiabatic"] = json!({
                    "Q": named(c, d, &qb.value, |x| json!(x)),
                    "Q_vector": qb.value,
                    "richardson": qb.richardson,
                    "level": qb.level,
                });
            }
            sink.json("current.json", out)?;
            if sink.has_dir() {
                sink.csv("current_density.csv", &head, &rows)?;
            }
        }
        other => bail!("unknown format `{other}` (expected json or csv)"),
    }
    Ok(0)
}

fn quantize(inputs: &Inputs, probe_beta: f64, sink: &mut Sink) -> Result<u8> {
    let sys = inputs.system()?;
    let c = &inputs.complex;
    let d = c.dimension();
    let ledger = quantized_current(&sys, probe_beta)?;
    let segments: Vec<Value> = ledger
        .entries
        .iter()
        .map(|e| {
            json!({
                "start": e.start,
                "end": e.end,
                "kind": format!("{:?}", e.kind),
                "tree": e.tree.as_ref().map(|t| names(c, d, t)),
                "cotree_start": names(c, d - 1, &e.cotree_start),
                "cotree_end": names(c, d - 1, &e.cotree_end),
                "contribution": named(c, d, &e.contribution.coeffs, rational_json),
            })
        })
        .collect();
    sink.warnings.extend(ledger.warnings.iter().cloned());
    sink.json(
        "quantize.json",
        json!({
            "complex": c.name(),
            "segments": segments,
            "total": named(c, d, &ledger.total.coeffs, rational_json),
            "total_vector": ledger.total.coeffs.iter().map(rational_json).collect::<Vec<_>>(),
            "delta": big_json(&ledger.delta),
            "in_lattice": ledger.in_lattice,
            "probe_beta": ledger.probe_beta,
            "numeric": named(c, d, &ledger.numeric, |x| json!(x)),
            "distance_l1": ledger.distance,
            "from_example": inputs.from_example,
        }),
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    inputs: &Inputs,
    seed: u64,
    n_traj: u64,
    t_end: f64,
    max_norm: i64,
    grid: usize,
    compare: bool,
    sink: &mut Sink,
) -> Result<u8> {
    let c = &inputs.complex;
    let d = c.dimension();
    let p = inputs.protocol()?;
    let z0 = inputs.initial_state();
    if !c.is_cycle(&z0)? {
        return Err(Error::NotCycle.into());
    }
    let rules = TransitionRules::new(c);
    let start = StateNode::from_chain(&z0)?;
    let trajectories = simulate_ensemble(&rules, p, &start, t_end, seed, 0..n_traj, max_norm);
    let grid = grid.max(1);
    let times: Vec<f64> = (0..=grid).map(|i| t_end * i as f64 / grid as f64).collect();
    let m = empirical_expectation(c.cells(d - 1).len(), &trajectories, &times);
    let z = z0.to_real().coeffs;
    let ode: Option<Vec<Vec<f64>>> = if compare {
        Some(times.iter().map(|&t| evolve(c, p, &z, 0.0, t, &OdeOptions::default())).collect::<Result<_, _>>()?)
    } else {
        None
    };
    let cells = c.cells(d - 1);
    let mut head = header("t", cells, "mean_");
    head.extend(cells.iter().map(|id| format!("se_{id}")));
    if ode.is_some() {
        head.extend(cells.iter().map(|id| format!("ode_{id}")));
    }
    let rows: Vec<String> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut v = vec![t];
            v.extend(&m.mean[i]);
            v.extend(&m.stderr[i]);
            if let Some(o) = &ode {
                v.extend(&o[i]);
            }
            csv_row(v)
        })
        .collect();
    sink.csv("simulate.csv", &head, &rows)?;
    let violations: u64 = trajectories.iter().map(|t| t.stats.bound_violations).sum();
    if m.excluded > 0 {
        sink.warnings.push(format!("{} of {} trajectories truncated at norm {max_norm}", m.excluded, n_traj));
    }
    if violations > 0 {
        sink.warnings.push(format!("thinning bound exceeded at {violations} proposals"));
    }
    sink.extra = json!({
        "seed": seed,
        "streams": [0, n_traj],
        "n_traj": n_traj,
        "used": m.used,
        "excluded": m.excluded,
        "excluded_fraction": m.excluded_fraction(),
        "t_end": t_end,
        "max_norm": max_norm,
        "thinning_bound_violations": violations,
    });
    Ok(0)
}
