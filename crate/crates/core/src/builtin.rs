//! Built-in example complexes and their default driving protocols.

use num::BigInt;

use crate::complex::{Chain, CwComplex, IntChain};
use crate::error::{Error, Result};
use crate::protocol::{Drive, DrivingProtocol};

fn ids(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// One vertex `v`, two 1-cells `f1, f2`, two 2-cells `e1, e2` with `∂e1 = ∂e2 = f1 − f2`.
pub fn wedge_spheres() -> CwComplex {
    CwComplex::from_entries(
        "wedge-spheres-d2",
        vec![ids(&["v"]), ids(&["f1", "f2"]), ids(&["e1", "e2"])],
        &[("e1", "f1", 1), ("e1", "f2", -1), ("e2", "f1", 1), ("e2", "f2", -1)],
    )
    .expect("wedge complex is well formed")
}

/// The torus as a 2×2 subdivided square with opposite sides identified.
///
/// Horizontal edges `a*` run `v02 → v01` and `b*` run `v11 → v12`; vertical edges
/// `c*` run `v02 → v12` and `d*` run `v01 → v11`. Faces are oriented counterclockwise.
pub fn torus() -> CwComplex {
    let edges: [(&str, &str, &str); 8] = [
        ("a1", "v02", "v01"),
        ("a2", "v02", "v01"),
        ("b1", "v11", "v12"),
        ("b2", "v11", "v12"),
        ("c1", "v02", "v12"),
        ("c2", "v02", "v12"),
        ("d1", "v01", "v11"),
        ("d2", "v01", "v11"),
    ];
    let faces: [(&str, [(&str, i64); 4]); 4] = [
        ("A", [("d1", 1), ("b2", 1), ("c1", -1), ("a2", 1)]),
        ("B", [("d2", -1), ("a2", -1), ("c2", 1), ("b2", -1)]),
        ("C", [("c1", 1), ("b1", -1), ("d1", -1), ("a1", -1)]),
        ("D", [("c2", -1), ("a1", 1), ("d2", 1), ("b1", 1)]),
    ];
    let mut entries = Vec::new();
    for (e, tail, head) in edges {
        entries.push((e, head, 1));
        entries.push((e, tail, -1));
    }
    for (f, bd) in &faces {
        for &(e, s) in bd {
            entries.push((*f, e, s));
        }
    }
    CwComplex::from_entries(
        "torus",
        vec![
            ids(&["v01", "v02", "v11", "v12"]),
            ids(&["a1", "a2", "b1", "b2", "c1", "c2", "d1", "d2"]),
            ids(&["A", "B", "C", "D"]),
        ],
        &entries,
    )
    .expect("torus complex is well formed")
}

/// The cycle graph on `n ≥ 2` vertices `v0..v{n−1}` with edges `e{i}: v{i} → v{i+1 mod n}`.
pub fn cycle_graph(n: usize) -> CwComplex {
    assert!(n >= 2, "cycle graph needs at least two vertices");
    let verts: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut entries: Vec<(&str, &str, i64)> = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        entries.push((&edges[i], &verts[j], 1));
        entries.push((&edges[i], &verts[i], -1));
    }
    CwComplex::from_entries(format!("cycle-graph-{n}"), vec![verts.clone(), edges.clone()], &entries)
        .expect("cycle graph is well formed")
}

/// The driven loop of the wedge example: `W1 = −a·sin 2πt = −W2`, and
/// `E1 = (c−1)/2 − (c+1)/2·cos 2πt = −E2`, so `E1(0) = −1` and `E1(½) = c`.
pub fn wedge_protocol(c: &CwComplex, tau_d: f64, beta: f64, a: f64, top: f64) -> Result<DrivingProtocol> {
    let e1 = Drive::cosine((top - 1.0) / 2.0, -(top + 1.0) / 2.0);
    let w1 = Drive::sine(0.0, -a);
    DrivingProtocol::from_named(
        c,
        tau_d,
        beta,
        [("f1", e1.clone()), ("f2", e1.negated()), ("e1", w1.clone()), ("e2", w1.negated())],
    )
}

/// Pump on a cycle graph moving one unit of charge from `v0` to `v⌊n/2⌋` and back.
pub fn cycle_pump(c: &CwComplex, tau_d: f64, beta: f64) -> Result<DrivingProtocol> {
    let n = c.cells(0).len();
    let m = n / 2;
    let mut terms = Vec::new();
    for i in 0..n {
        let drive = if i == 0 {
            Drive::cosine(0.0, -1.0)
        } else if i == m {
            Drive::cosine(0.0, 1.0)
        } else {
            Drive::Constant(2.0 + 0.5 * i as f64)
        };
        terms.push((format!("v{i}"), drive));
    }
    for i in 0..n {
        let sign = if i < m { -1.0 } else { 1.0 };
        terms.push((format!("e{i}"), Drive::sine(0.0, sign * (1.0 + i as f64 / n as f64))));
    }
    DrivingProtocol::from_named(c, tau_d, beta, terms)
}

/// A time-independent protocol with pairwise distinct weights on both levels.
pub fn constant_protocol(c: &CwComplex, tau_d: f64, beta: f64) -> Result<DrivingProtocol> {
    let d = c.dimension();
    let mut terms = Vec::new();
    for (i, id) in c.cells(d - 1).iter().enumerate() {
        terms.push((id.clone(), Drive::Constant(-1.0 + 0.37 * i as f64)));
    }
    for (i, id) in c.cells(d).iter().enumerate() {
        terms.push((id.clone(), Drive::Constant(0.5 - 0.29 * i as f64)));
    }
    DrivingProtocol::from_named(c, tau_d, beta, terms)
}

/// Default initial cycle for each example.
pub fn default_z0(c: &CwComplex) -> IntChain {
    let d = c.dimension();
    let terms: Vec<(&str, BigInt)> = match c.name() {
        "wedge-spheres-d2" => vec![("f1", 1.into())],
        "torus" => vec![("a1", 1.into()), ("a2", (-1).into())],
        _ => vec![(c.cells(d - 1)[0].as_str(), 1.into())],
    };
    Chain::from_named(c, d - 1, terms).expect("default cycle refers to existing cells")
}

/// Resolve `wedge-spheres-d2`, `torus`, or `cycle-graph-<n>` into a complex and protocol.
pub fn example(name: &str) -> Result<(CwComplex, DrivingProtocol)> {
    match name {
        "wedge-spheres-d2" => {
            let c = wedge_spheres();
            let p = wedge_protocol(&c, 200.0, 6.0, 1.0, 1.5)?;
            Ok((c, p))
        }
        "torus" => {
            let c = torus();
            let p = constant_protocol(&c, 50.0, 2.0)?;
            Ok((c, p))
        }
        _ => {
            let n = name
                .strip_prefix("cycle-graph-")
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&n| n >= 3)
                .ok_or_else(|| Error::UnknownExample(name.to_string()))?;
            let c = cycle_graph(n);
            let p = cycle_pump(&c, 50.0, 2.0)?;
            Ok((c, p))
        }
    }
}
