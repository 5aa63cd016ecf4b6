//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num::{BigInt, BigRational, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use hypercurrent_core::builtin;
use hypercurrent_core::dynamics::adiabatic::{adiabatic_current, low_temperature_distances, quantized_current};
use hypercurrent_core::dynamics::ode::OdeOptions;
use hypercurrent_core::dynamics::periodic::{average_current, periodic_solution};
use hypercurrent_core::dynamics::DrivenSystem;
use hypercurrent_core::forests::{delta_invariant, homologous, psi_l, ForestCatalog};
use hypercurrent_core::linalg::rational_to_f64;
use hypercurrent_core::protocol::{segment, SegmentKind};
use hypercurrent_core::stochastic::{empirical_expectation, explore, simulate_ensemble, StateNode, TransitionRules};
use hypercurrent_core::{CwComplex, DrivingProtocol, WeightSystem};

type Outcome = Result<String, String>;

fn cli(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_hypercurrent")).args(args).output().expect("run binary");
    let code = out.status.code().unwrap_or(-1);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Orthonormal bases of `ker M` and `im M` from the eigen-decomposition of `MᵀM` and `MMᵀ`.
fn kernel(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let e = SymmetricEigen::new(m.transpose() * m);
    let tol = 1e-9 * e.eigenvalues.amax().max(1.0);
    (0..e.eigenvalues.len()).filter(|&i| e.eigenvalues[i].abs() <= tol).map(|i| e.eigenvectors.column(i).into()).collect()
}

fn image(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let e = SymmetricEigen::new(m * m.transpose());
    let tol = 1e-9 * e.eigenvalues.amax().max(1.0);
    (0..e.eigenvalues.len()).filter(|&i| e.eigenvalues[i].abs() > tol).map(|i| e.eigenvectors.column(i).into()).collect()
}

fn off_image(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let mut r = x.clone();
    for u in image(m) {
        r -= &u * u.dot(x);
    }
    r.amax()
}

/// `D* = e^{−βW} Bᵀ e^{βE}` from its definition.
fn dstar(b: &DMatrix<f64>, ws: &WeightSystem, beta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(b.ncols(), b.nrows(), |a, f| b[(f, a)] * (beta * (ws.e[f] - ws.w[a])).exp())
}

/// Preimage of a boundary `y` orthogonal to `ker B` in `⟨,⟩_W`: `x = e^{−βW}Bᵀ(B e^{−βW} Bᵀ)⁺ y`.
fn kirchhoff_oracle(b: &DMatrix<f64>, w: &[f64], beta: f64, y: &DVector<f64>) -> DVector<f64> {
    let winv = DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|x| (-beta * x).exp())));
    let g = b * &winv * b.transpose();
    let eps = 1e-12 * g.amax();
    let pinv = g.pseudo_inverse(eps).unwrap();
    winv * b.transpose() * pinv * y
}

/// The cycle `z₀ − B y` orthogonal to boundaries in `⟨,⟩_E`.
fn boltzmann_oracle(b: &DMatrix<f64>, e: &[f64], beta: f64, z0: &DVector<f64>) -> DVector<f64> {
    let ee = DMatrix::from_diagonal(&DVector::from_iterator(e.len(), e.iter().map(|x| (beta * x).exp())));
    let g = b.transpose() * &ee * b;
    let eps = 1e-12 * g.amax();
    let pinv = g.pseudo_inverse(eps).unwrap();
    z0 - b * (pinv * (b.transpose() * &ee * z0))
}

fn random_weights(rng: &mut ChaCha8Rng, c: &CwComplex) -> WeightSystem {
    let d = c.dimension();
    WeightSystem {
        e: (0..c.cells(d - 1).len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        w: (0..c.cells(d).len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

fn system(c: &CwComplex, p: &DrivingProtocol) -> DrivenSystem {
    let cat = ForestCatalog::build(c);
    DrivenSystem::new(c, &cat, p, &builtin::default_z0(c)).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (code, full) = cli(&["forests", "--example", "torus"]);
    check(code == 0, format!("forests exited with {code}"))?;
    let (code, skel) = cli(&["forests", "--example", "torus", "--skeleton", "1"]);
    check(code == 0, format!("forests --skeleton 1 exited with {code}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    let got = (
        full["tree_count"].as_u64(),
        skel["skeleton"]["tree_count"].as_u64(),
        skel["cotree_count"].as_u64(),
        skel["skeleton"]["cotree_count"].as_u64(),
    );
    check(got == (Some(4), Some(32), Some(32), Some(4)), format!("counts {got:?}"))?;
    check(elapsed < 10.0, format!("runtime {elapsed:.2}s"))?;
    Ok(format!("trees 4; 1-skeleton trees 32; co-trees 32; vertex co-trees 4"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (code, q) = cli(&["quantize", "--example", "wedge-spheres-d2"]);
    check(code == 0, format!("quantize exited with {code}"))?;
    let total = (q["total"]["e1"].as_i64(), q["total"]["e2"].as_i64());
    let sign = match total {
        (Some(1), Some(-1)) => 1.0,
        (Some(-1), Some(1)) => -1.0,
        other => return Err(format!("ledger total {other:?}")),
    };
    check(q["delta"].as_i64() == Some(1), format!("delta {}", q["delta"]))?;
    let (code, cur) = cli(&["current", "--example", "wedge-spheres-d2", "--beta", "40", "--tau-d", "3200"]);
    check(code == 0, format!("current exited with {code}"))?;
    let e1 = cur["Q"]["e1"].as_f64().ok_or("missing Q")?;
    let e2 = cur["Q"]["e2"].as_f64().ok_or("missing Q")?;
    let dist = (e1 - sign).abs() + (e2 + sign).abs();
    let elapsed = start.elapsed().as_secs_f64();
    check(dist <= 5e-2, format!("ℓ¹ distance {dist:e}"))?;
    check(elapsed < 120.0, format!("runtime {elapsed:.1}s"))?;
    Ok(format!("ledger {}(e1 - e2), delta 1, Q = ({e1:.6}, {e2:.6}), distance {dist:.2e}", if sign > 0.0 { "+" } else { "-" }))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [builtin::wedge_spheres(), builtin::torus()] {
        let p = builtin::constant_protocol(&c, 50.0, 2.0).unwrap();
        check(segment(&p).is_ok(), format!("{}: constant protocol is not good", c.name()))?;
        let (q, _) = average_current(&system(&c, &p), 6, 10, 1e-10, &OdeOptions::default()).map_err(|e| e.to_string())?;
        let l1: f64 = q.q.iter().map(|x| x.abs()).sum();
        check(l1 <= 1e-8, format!("{}: ‖Q‖₁ = {l1:e}", c.name()))?;
        worst = worst.max(l1);
    }
    Ok(format!("max ‖Q‖₁ = {worst:.1e} on wedge and torus"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let beta = 1.5;
    let mut worst = [0.0f64; 5];
    for c in [builtin::wedge_spheres(), builtin::torus()] {
        let name = c.name().to_string();
        let cat = ForestCatalog::build(&c);
        let bi = c.top_boundary().clone();
        let b = bi.to_f64();
        let z0 = builtin::default_z0(&c);
        let z0r = z0.to_rational();
        let z0f = DVector::from_column_slice(&z0.to_real().coeffs);
        // Exact: ∂ ς_T(∂x) = ∂x on a spanning set of boundaries, and ψ_L(z₀) ~ z₀.
        let br = bi.to_rational();
        for t in &cat.trees {
            for a in 0..br.ncols() {
                let col = br.column(a);
                let x = t.section.mul_vec(&col);
                check(br.mul_vec(&x) == col, format!("{name}: ∂ς_T ≠ id for tree {:?}", t.cells))?;
            }
        }
        for l in &cat.cotrees {
            let p = psi_l(&c, l, &z0r).map_err(|e| e.to_string())?;
            check(homologous(&c, &p, &z0r), format!("{name}: ψ_L(z0) leaves the class"))?;
            let supported = p.coeffs.iter().enumerate().all(|(i, v)| v.is_zero() || l.cells.contains(&i));
            check(supported, format!("{name}: ψ_L(z0) not supported on L"))?;
        }
        let cycles = kernel(&b);
        for _ in 0..20 {
            let ws = random_weights(&mut rng, &c);
            let kir = cat.kirchhoff_matrix(&ws.w, beta);
            let rho = DVector::from_column_slice(&cat.boltzmann(&c, &ws.e, beta, &z0).map_err(|e| e.to_string())?);
            let x = DVector::from_iterator(b.ncols(), (0..b.ncols()).map(|_| rng.random_range(-1.0..1.0)));
            let y = &b * x;
            let ay = &kir * &y;
            // ⟨𝒜b, z⟩_W over a basis of d-cycles, relative to the weighted magnitudes.
            for z in &cycles {
                let (mut s, mut m) = (0.0, 0.0);
                for i in 0..ay.len() {
                    let wgt = (beta * ws.w[i]).exp();
                    s += wgt * ay[i] * z[i];
                    m += wgt * (ay[i] * z[i]).abs();
                }
                worst[0] = worst[0].max(s.abs() / m.max(1e-300));
            }
            worst[0] = worst[0].max((&ay - kirchhoff_oracle(&b, &ws.w, beta, &y)).amax() / (1.0 + ay.amax()));
            // ⟨ρ^B, ∂α⟩_E for every top cell.
            for a in 0..b.ncols() {
                let (mut s, mut m) = (0.0, 0.0);
                for f in 0..b.nrows() {
                    let wgt = (beta * ws.e[f]).exp();
                    s += wgt * rho[f] * b[(f, a)];
                    m += wgt * (rho[f] * b[(f, a)]).abs();
                }
                worst[1] = worst[1].max(s.abs() / m.max(1e-300));
            }
            worst[2] = worst[2].max((&rho - boltzmann_oracle(&b, &ws.e, beta, &z0f)).amax());
            worst[3] = worst[3].max(off_image(&b, &(&rho - &z0f)));
            let ds = dstar(&b, &ws, beta);
            let h = &b * &ds;
            let scale = h.amax() * rho.amax();
            worst[4] = worst[4].max((h * &rho).amax() / scale);
        }
    }
    let labels = ["⟨𝒜b,z⟩_W and 𝒜 oracle", "⟨ρ^B,∂α⟩_E", "ρ^B oracle", "class of ρ^B", "Hρ^B"];
    for (l, w) in labels.iter().zip(worst) {
        check(w <= 1e-10, format!("{l}: {w:e}"))?;
    }
    Ok(format!("exact ∂ς_T = id and ψ_L classes; worst float residual {:.1e} over 40 weight draws", worst.iter().fold(0.0f64, |a, &b| a.max(b))))
}

/// Fixed-step RK4 for `q' = −τ H(t) q` with `H` assembled from the boundary matrix.
fn rk4_oracle(c: &CwComplex, p: &DrivingProtocol, z: &DVector<f64>, t1: f64, steps: usize) -> DVector<f64> {
    let b = c.top_boundary().to_f64();
    let rhs = |t: f64, q: &DVector<f64>| -> DVector<f64> {
        let h = &b * dstar(&b, &p.evaluate(t), p.beta);
        -(h * q) * p.tau_d
    };
    let dt = t1 / steps as f64;
    let mut q = z.clone();
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = rhs(t, &q);
        let k2 = rhs(t + dt / 2.0, &(&q + &k1 * (dt / 2.0)));
        let k3 = rhs(t + dt / 2.0, &(&q + &k2 * (dt / 2.0)));
        let k4 = rhs(t + dt, &(&q + &k3 * dt));
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    q
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (c, p) = builtin::example("wedge-spheres-d2").unwrap();
    let p = p.with_tau_d(5.0).with_beta(1.0);
    let z0 = builtin::default_z0(&c);
    let rules = TransitionRules::new(&c);
    let start_state = StateNode::from_chain(&z0).map_err(|e| e.to_string())?;
    let n = 10_000;
    let trajectories = simulate_ensemble(&rules, &p, &start_state, 1.0, 20_250_101, 0..n, 50);
    let times = [0.25, 0.5, 1.0];
    let m = empirical_expectation(2, &trajectories, &times);
    check(m.excluded_fraction() < 1e-3, format!("truncation fraction {}", m.excluded_fraction()))?;
    let z = DVector::from_column_slice(&z0.to_real().coeffs);
    let mut worst: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let oracle = rk4_oracle(&c, &p, &z, t, 20_000);
        let ode = hypercurrent_core::dynamics::evolve(&c, &p, &z0.to_real().coeffs, 0.0, t, &OdeOptions::default())
            .map_err(|e| e.to_string())?;
        for k in 0..2 {
            check((ode[k] - oracle[k]).abs() < 1e-8, format!("ODE vs RK4 at t={t}: {} vs {}", ode[k], oracle[k]))?;
            let se = m.stderr[i][k];
            let zscore = (m.mean[i][k] - oracle[k]).abs() / se;
            check(zscore <= 4.0, format!("t={t}, coefficient {k}: mean {} vs {} ({zscore:.2} SE)", m.mean[i][k], oracle[k]))?;
            worst = worst.max(zscore);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 300.0, format!("runtime {elapsed:.1}s"))?;
    Ok(format!("max |mean - ODE| = {worst:.2} SE, truncated {} of {n} ({elapsed:.1}s)", m.excluded))
}

fn criterion_6() -> Outcome {
    let c = builtin::wedge_spheres();
    let mut devs = Vec::new();
    let mut worst_residual: f64 = 0.0;
    for tau in [100.0, 200.0, 400.0, 800.0] {
        let p = builtin::wedge_protocol(&c, tau, 2.0, 1.0, 1.5).unwrap();
        let sol = periodic_solution(&system(&c, &p), 10, &OdeOptions::default()).map_err(|e| e.to_string())?;
        worst_residual = worst_residual.max(sol.diagnostics.residual);
        devs.push(sol.max_deviation());
    }
    let ratios: Vec<f64> = devs.windows(2).map(|w| w[0] / w[1]).collect();
    check(ratios.iter().all(|&r| r >= 1.5), format!("deviation ratios {ratios:?}"))?;
    check(worst_residual < 1e-7, format!("periodicity residual {worst_residual:e}"))?;
    Ok(format!("ratios per doubling {:?}, residual {worst_residual:.1e}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()))
}

fn criterion_7() -> Outcome {
    let betas = [5.0, 10.0, 20.0, 40.0];
    let (c, p) = builtin::example("wedge-spheres-d2").unwrap();
    let cat = ForestCatalog::build(&c);
    let mut points: Vec<(CwComplex, ForestCatalog, WeightSystem)> =
        [0.1, 0.3, 0.45, 0.6, 0.9].iter().map(|&t| (c.clone(), cat.clone(), p.evaluate(t))).collect();
    let torus = builtin::torus();
    let tcat = ForestCatalog::build(&torus);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    while points.len() < 10 {
        let ws = random_weights(&mut rng, &torus);
        // Keep draws whose minimal forests are unique with a resolvable margin.
        let margin = |sums: Vec<f64>| {
            let mut s = sums;
            s.sort_by(f64::total_cmp);
            s[1] - s[0]
        };
        let mt = margin(tcat.trees.iter().map(|t| t.cells.iter().map(|&i| ws.w[i]).sum()).collect());
        let ml = margin(tcat.cotrees.iter().map(|l| l.cells.iter().map(|&i| ws.e[i]).sum()).collect());
        if mt > 0.05 && ml > 0.05 && mt < 0.6 && ml < 0.6 {
            points.push((torus.clone(), tcat.clone(), ws));
        }
    }
    for (cx, ct, ws) in &points {
        let d: Vec<(f64, f64)> =
            betas.iter().map(|&b| low_temperature_distances(ct, ws, b)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let dec = |f: fn(&(f64, f64)) -> f64| d.windows(2).all(|w| f(&w[1]) < f(&w[0]));
        check(dec(|x| x.0), format!("{}: Kirchhoff distances {d:?}", cx.name()))?;
        check(dec(|x| x.1), format!("{}: Boltzmann distances {d:?}", cx.name()))?;
    }
    // Central half of each U segment of the wedge loop.
    let segs = segment(&p).map_err(|e| e.to_string())?;
    let rate = |beta: f64, a: f64, b: f64| {
        let s = system(&c, &p.clone().with_beta(beta));
        (0..=400).map(|i| s.boltzmann_rate(a + (b - a) * i as f64 / 400.0).amax()).fold(0.0, f64::max)
    };
    let mut ratio: f64 = 0.0;
    for s in segs.segments.iter().filter(|s| s.kind == SegmentKind::U) {
        let q = (s.end - s.start) / 4.0;
        let (a, b) = (s.start + q, s.end - q);
        let (r10, r40) = (rate(10.0, a, b), rate(40.0, a, b));
        check(r40 <= 0.1 * r10, format!("U segment [{a:.3}, {b:.3}]: {r40:e} vs {r10:e}"))?;
        ratio = ratio.max(r40 / r10);
    }
    Ok(format!("distances decrease at {} sample points; max ρ̇^B ratio β=40/β=10 on U segments {ratio:.1e}", points.len()))
}

fn random_graph(rng: &mut ChaCha8Rng, idx: usize) -> (CwComplex, Vec<(usize, usize)>) {
    let n = rng.random_range(4..9);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..rng.random_range(1..n) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| if rng.random_bool(0.5) { (a, b) } else { (b, a) }).collect();
    let verts: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let names: Vec<String> = (0..edges.len()).map(|i| format!("g{i}")).collect();
    let mut entries = Vec::new();
    for (k, &(tail, head)) in edges.iter().enumerate() {
        entries.push((names[k].as_str(), verts[head].as_str(), 1));
        entries.push((names[k].as_str(), verts[tail].as_str(), -1));
    }
    let c = CwComplex::from_entries(format!("graph{idx}"), vec![verts.clone(), names.clone()], &entries).unwrap();
    (c, edges)
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in 0..5 {
        let (c, edges) = random_graph(&mut rng, g);
        let n = c.cells(0).len();
        let cat = ForestCatalog::build(&c);
        check(delta_invariant(&cat) == BigInt::one(), format!("graph {g}: δ = {}", delta_invariant(&cat)))?;
        let start = rng.random_range(0..n);
        let gamma = explore(&c, &StateNode::new(unit(n, start)), 10_000, 1_000);
        check(!gamma.truncated, format!("graph {g}: exploration truncated"))?;
        let states: BTreeSet<Vec<i64>> = gamma.states.iter().map(|s| s.cycle.clone()).collect();
        let verts: BTreeSet<Vec<i64>> = (0..n).map(|i| unit(n, i)).collect();
        check(states == verts, format!("graph {g}: states are not the vertices"))?;
        let got: BTreeSet<(Vec<i64>, Vec<i64>, usize)> = gamma
            .edges
            .iter()
            .map(|(s, t, e)| (gamma.states[*s].cycle.clone(), gamma.states[*t].cycle.clone(), e.alpha))
            .collect();
        let want: BTreeSet<(Vec<i64>, Vec<i64>, usize)> = edges
            .iter()
            .enumerate()
            .flat_map(|(k, &(a, b))| [(unit(n, a), unit(n, b), k), (unit(n, b), unit(n, a), k)])
            .collect();
        check(got == want && gamma.edges.len() == 2 * edges.len(), format!("graph {g}: Γ differs from DX"))?;
    }
    let c4 = builtin::cycle_graph(4);
    let p = builtin::cycle_pump(&c4, 50.0, 2.0).unwrap();
    let ledger = quantized_current(&system(&c4, &p), 40.0).map_err(|e| e.to_string())?;
    let v = ledger.entries.iter().filter(|e| e.kind == SegmentKind::V).count();
    check(v == 2, format!("pump has {v} type-V segments"))?;
    check(ledger.total.coeffs.iter().all(|x| x.denom().is_one()), "ledger is not integral")?;
    check(ledger.delta == BigInt::one(), "δ ≠ 1 on the 4-cycle")?;
    check(!ledger.total.is_zero(), "pump ledger vanishes")?;
    let numeric = adiabatic_current(&system(&c4, &p.with_beta(40.0)), 10, 20, 1e-10);
    let dist: f64 =
        numeric.value.iter().zip(&ledger.total.coeffs).map(|(a, b)| (a - rational_to_f64(b)).abs()).sum();
    check(dist <= 5e-2, format!("numeric Q^B at β=40 is {dist:e} from the ledger"))?;
    let total: Vec<String> = ledger.total.coeffs.iter().map(BigRational::to_string).collect();
    Ok(format!("Γ = DX and δ = 1 on 5 random graphs; 4-cycle pump ledger [{}], distance {dist:.1e}", total.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("torus forest counts", criterion_1),
        ("wedge quantization", criterion_2),
        ("constant protocol carries no current", criterion_3),
        ("sections and orthogonality", criterion_4),
        ("trajectory mean vs expectation dynamics", criterion_5),
        ("adiabatic convergence", criterion_6),
        ("low-temperature limits", criterion_7),
        ("graphs", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| label.contains(x.as_str()) || name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        match f() {
            Ok(msg) => println!("{label} PASS  {name}: {msg} [{:.2}s]", t.elapsed().as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("{label} FAIL  {name}: {msg} [{:.2}s]", t.elapsed().as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
