//! Biased coboundary and dynamical operator for a fixed weight system.

use nalgebra::{DMatrix, DVector};

use crate::complex::CwComplex;
use crate::protocol::WeightSystem;

#[derive(Clone, Debug)]
pub struct BiasedOperators {
    /// `D* = e^{−βW} ∂* e^{βE}`, of shape `|X_d| × |X_{d−1}|`.
    pub dstar: DMatrix<f64>,
    /// `H = ∂ D*` on `C_{d−1}`.
    pub h: DMatrix<f64>,
}

/// `D*` from the top boundary matrix.
pub fn biased_coboundary(b: &DMatrix<f64>, ws: &WeightSystem, beta: f64) -> DMatrix<f64> {
    let (n, m) = b.shape();
    DMatrix::from_fn(m, n, |alpha, f| {
        let x = b[(f, alpha)];
        if x == 0.0 {
            0.0
        } else {
            x * (beta * (ws.e[f] - ws.w[alpha])).exp()
        }
    })
}

pub fn build_operators(c: &CwComplex, ws: &WeightSystem, beta: f64) -> BiasedOperators {
    let b = c.top_boundary().to_f64();
    let dstar = biased_coboundary(&b, ws, beta);
    let h = &b * &dstar;
    BiasedOperators { dstar, h }
}

/// `e^{βE/2} H e^{−βE/2}`, which is symmetric positive semidefinite.
pub fn symmetrized(ops: &BiasedOperators, ws: &WeightSystem, beta: f64) -> DMatrix<f64> {
    let n = ops.h.nrows();
    DMatrix::from_fn(n, n, |i, j| ops.h[(i, j)] * (beta * (ws.e[i] - ws.e[j]) / 2.0).exp())
}

/// `⟨x, y⟩_E = Σ e^{βE_b} x_b y_b`.
pub fn inner_e(x: &DVector<f64>, y: &DVector<f64>, e: &[f64], beta: f64) -> f64 {
    x.iter().zip(y.iter()).zip(e).map(|((a, b), eb)| (beta * eb).exp() * a * b).sum()
}

/// `⟨x, y⟩_W = Σ e^{βW_α} x_α y_α`.
pub fn inner_w(x: &DVector<f64>, y: &DVector<f64>, w: &[f64], beta: f64) -> f64 {
    inner_e(x, y, w, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn zero_weights(c: &CwComplex) -> WeightSystem {
        let d = c.dimension();
        WeightSystem { e: vec![0.0; c.cells(d - 1).len()], w: vec![0.0; c.cells(d).len()] }
    }

    #[test]
    fn wedge_unbiased() {
        let c = builtin::wedge_spheres();
        let ops = build_operators(&c, &zero_weights(&c), 1.0);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        assert_eq!(ops.h, expected);
    }

    #[test]
    fn two_vertex_path_is_graph_laplacian() {
        let c = CwComplex::from_entries(
            "path",
            vec![vec!["p".into(), "q".into()], vec!["a".into()]],
            &[("a", "q", 1), ("a", "p", -1)],
        )
        .unwrap();
        let ops = build_operators(&c, &zero_weights(&c), 1.0);
        assert_eq!(ops.h, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn unbiased_is_up_laplacian() {
        let c = builtin::torus();
        let b = c.top_boundary().to_f64();
        let ops = build_operators(&c, &zero_weights(&c), 3.0);
        assert!((ops.h - &b * b.transpose()).amax() < 1e-14);
    }

    #[test]
    fn symmetrized_form_is_symmetric() {
        let c = builtin::torus();
        let p = builtin::constant_protocol(&c, 1.0, 1.5).unwrap();
        let ws = p.evaluate(0.3);
        let ops = build_operators(&c, &ws, 1.5);
        let s = symmetrized(&ops, &ws, 1.5);
        assert!((&s - s.transpose()).amax() <= 1e-10 * s.amax());
    }
}
