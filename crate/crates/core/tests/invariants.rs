use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use hypercurrent_core::builtin;
use hypercurrent_core::dynamics::{build_operators, evolve};
use hypercurrent_core::dynamics::ode::OdeOptions;
use hypercurrent_core::forests::{homologous, sigma_t, ForestCatalog};
use hypercurrent_core::stochastic::{StateNode, TransitionRules};
use hypercurrent_core::{CwComplex, IntChain, RatChain, WeightSystem};

fn complexes() -> Vec<CwComplex> {
    vec![builtin::wedge_spheres(), builtin::torus(), builtin::cycle_graph(5)]
}

fn weights(c: &CwComplex, raw: &[f64]) -> WeightSystem {
    let d = c.dimension();
    let (ne, nw) = (c.cells(d - 1).len(), c.cells(d).len());
    WeightSystem { e: raw[..ne].to_vec(), w: raw[ne..ne + nw].to_vec() }
}

/// Largest component of `x` orthogonal to the column space of `b`.
fn off_image(b: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let svd = b.clone().svd(true, false);
    let u = svd.u.unwrap();
    let tol = 1e-9 * svd.singular_values.max();
    let mut r = x.clone();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let col = u.column(i);
            r -= col * col.dot(x);
        }
    }
    r.amax()
}

fn raw_weights() -> impl Strategy<Value = (usize, Vec<f64>, f64)> {
    (0usize..3, prop::collection::vec(-1.0f64..1.0, 16), 0.2f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_maps_into_boundaries((which, raw, beta) in raw_weights()) {
        let c = &complexes()[which];
        let ws = weights(c, &raw);
        let ops = build_operators(c, &ws, beta);
        let b = c.top_boundary().to_f64();
        for j in 0..ops.h.ncols() {
            let col: DVector<f64> = ops.h.column(j).into();
            prop_assert!(off_image(&b, &col) <= 1e-9 * (1.0 + col.amax()));
        }
    }

    #[test]
    fn kirchhoff_is_a_section_and_probabilities_sum_to_one((which, raw, beta) in raw_weights()) {
        let c = &complexes()[which];
        let ws = weights(c, &raw);
        let cat = ForestCatalog::build(c);
        let b = c.top_boundary().to_f64();
        let k = cat.kirchhoff_matrix(&ws.w, beta);
        let bk = &b * &k;
        for j in 0..b.ncols() {
            let y: DVector<f64> = b.column(j).into();
            prop_assert!((&bk * &y - &y).amax() <= 1e-10);
        }
        let s: f64 = cat.tree_probabilities(&ws.w, beta).iter().sum();
        let l: f64 = cat.cotree_probabilities(&ws.e, beta).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12 && (l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boltzmann_depends_only_on_the_class(
        (which, raw, beta) in raw_weights(),
        shift in prop::collection::vec(-3i64..4, 8),
    ) {
        let c = &complexes()[which];
        let ws = weights(c, &raw);
        let cat = ForestCatalog::build(c);
        let z0 = builtin::default_z0(c);
        let bi = c.top_boundary();
        let moved: Vec<i64> = (0..bi.nrows())
            .map(|f| {
                let base: i64 = z0.coeffs[f].clone().try_into().unwrap();
                base + (0..bi.ncols()).map(|a| i64::try_from(bi[(f, a)].clone()).unwrap() * shift[a]).sum::<i64>()
            })
            .collect();
        let z1 = StateNode::new(moved).to_chain(c.dimension() - 1);
        let r0 = cat.boltzmann(c, &ws.e, beta, &z0).unwrap();
        let r1 = cat.boltzmann(c, &ws.e, beta, &z1).unwrap();
        for (a, b) in r0.iter().zip(&r1) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn tree_sections_invert_the_boundary(which in 0usize..3, x in prop::collection::vec(-5i64..6, 8)) {
        let c = &complexes()[which];
        let cat = ForestCatalog::build(c);
        let d = c.dimension();
        let top = IntChain::new(d, x[..c.cells(d).len()].iter().map(|&v| v.into()).collect()).to_rational();
        let b: RatChain = c.boundary_apply(&top).unwrap();
        for t in &cat.trees {
            let s = sigma_t(c, t, &b).unwrap();
            prop_assert_eq!(c.boundary_apply(&s).unwrap(), b.clone());
        }
    }

    #[test]
    fn random_walks_stay_in_class(which in 0usize..3, picks in prop::collection::vec(0usize..64, 12)) {
        let c = &complexes()[which];
        let rules = TransitionRules::new(c);
        let z0 = StateNode::from_chain(&builtin::default_z0(c)).unwrap();
        let mut z = z0.clone();
        for p in picks {
            let out = rules.neighbors(&z);
            if out.is_empty() || z.norm() > 40 {
                break;
            }
            z = out[p % out.len()].target.clone();
            prop_assert!(rules.same_class(&z, &z0));
            let zc = z.to_chain(c.dimension() - 1);
            prop_assert!(homologous(c, &zc.to_rational(), &z0.to_chain(c.dimension() - 1).to_rational()));
        }
    }
}

#[test]
fn evolution_preserves_the_class() {
    let (c, p) = builtin::example("wedge-spheres-d2").unwrap();
    let p = p.with_tau_d(5.0).with_beta(1.0);
    let b = c.top_boundary().to_f64();
    let z0 = builtin::default_z0(&c).to_real().coeffs;
    let x0 = DVector::from_column_slice(&z0);
    for t in [0.1, 0.4, 1.0] {
        let z = evolve(&c, &p, &z0, 0.0, t, &OdeOptions::default()).unwrap();
        let diff = DVector::from_column_slice(&z) - &x0;
        assert!(off_image(&b, &diff) < 1e-10, "t = {t}");
    }
    let torus = builtin::torus();
    let p = builtin::constant_protocol(&torus, 3.0, 1.0).unwrap();
    let z0 = builtin::default_z0(&torus).to_real().coeffs;
    let z = evolve(&torus, &p, &z0, 0.0, 1.0, &OdeOptions::default()).unwrap();
    let diff = DVector::from_column_slice(&z) - DVector::from_column_slice(&z0);
    assert!(off_image(&torus.top_boundary().to_f64(), &diff) < 1e-10);
}
