//! Composite Simpson quadrature on dyadic grids of `[0, 1]`.

/// Uniform grid with `2^level + 1` points on `[0, 1]`.
pub fn dyadic_grid(level: u32) -> Vec<f64> {
    let n = 1usize << level;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Composite Simpson weights for `n + 1` points on `[0, 1]`, `n` even.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Simpson's rule needs an even number of intervals");
    let h = 1.0 / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Integrate vector samples on a uniform grid, accumulating in index order.
pub fn simpson(samples: &[Vec<f64>]) -> Vec<f64> {
    let n = samples.len() - 1;
    let w = simpson_weights(n);
    let dim = samples[0].len();
    let mut out = vec![0.0; dim];
    for (wi, s) in w.iter().zip(samples) {
        for (o, x) in out.iter_mut().zip(s) {
            *o += wi * x;
        }
    }
    out
}

/// Simpson on the full grid and on every other point; returns `(fine, coarse)`.
pub fn simpson_pair(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let fine = simpson(samples);
    let coarse_samples: Vec<Vec<f64>> = samples.iter().step_by(2).cloned().collect();
    let coarse = if coarse_samples.len() >= 3 { simpson(&coarse_samples) } else { fine.clone() };
    (fine, coarse)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub value: Vec<f64>,
    /// Difference between the last two levels.
    pub richardson: f64,
    pub level: u32,
}

/// Refine the dyadic level until successive Simpson values agree to `tol·(1 + ‖value‖_∞)`.
pub fn refine<F>(mut integrand: F, start: u32, max_level: u32, tol: f64) -> Refined
where
    F: FnMut(f64) -> Vec<f64>,
{
    let mut level = start.max(2);
    let mut samples: Vec<Vec<f64>> = dyadic_grid(level).into_iter().map(&mut integrand).collect();
    loop {
        let (fine, coarse) = simpson_pair(&samples);
        let richardson = max_abs_diff(&fine, &coarse);
        let scale = 1.0 + fine.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if richardson <= tol * scale || level >= max_level {
            return Refined { value: fine, richardson, level };
        }
        level += 1;
        let n = 1usize << level;
        let mut next = Vec::with_capacity(n + 1);
        for (i, s) in samples.into_iter().enumerate() {
            if i > 0 {
                next.push(integrand((2 * i - 1) as f64 / n as f64));
            }
            next.push(s);
        }
        samples = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_on_cubics() {
        let s: Vec<Vec<f64>> = dyadic_grid(2).iter().map(|&t| vec![t * t * t, 1.0]).collect();
        let v = simpson(&s);
        assert!((v[0] - 0.25).abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_resolves_a_peak() {
        let width = 1e-3;
        let f = |t: f64| vec![(-(t - 0.3f64).powi(2) / (2.0 * width * width)).exp()];
        let r = refine(f, 8, 16, 1e-10);
        let exact = width * (2.0 * PI).sqrt();
        assert!((r.value[0] - exact).abs() < 1e-9, "{} vs {exact}", r.value[0]);
        assert!(r.level > 8);
    }
}
