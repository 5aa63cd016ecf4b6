//! Event times of inhomogeneous Poisson processes by windowed thinning.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Clone, Copy, Debug)]
pub struct Thinning {
    /// Windows are `[k·width, (k+1)·width)` in absolute time.
    pub width: f64,
    /// Multiplier on the sampled maximum of the rate over a window.
    pub safety: f64,
    /// Interior sample points per window, in addition to its ends.
    pub probes: usize,
}

impl Default for Thinning {
    fn default() -> Self {
        Self { width: 1.0 / 64.0, safety: 1.05, probes: 8 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThinningStats {
    pub proposals: u64,
    /// Accepted points where the rate exceeded the window bound.
    pub bound_violations: u64,
}

impl Thinning {
    fn bound<F: Fn(f64) -> f64>(&self, rate: &F, a: f64, b: f64) -> f64 {
        let n = self.probes + 1;
        let m = (0..=n).map(|i| rate(a + (b - a) * i as f64 / n as f64)).fold(0.0, f64::max);
        m * self.safety
    }

    /// First event after `t0` and before `t_end`, or `None`.
    pub fn first_event<R, F>(&self, rng: &mut R, t0: f64, t_end: f64, rate: F, stats: &mut ThinningStats) -> Option<f64>
    where
        R: Rng + ?Sized,
        F: Fn(f64) -> f64,
    {
        let mut t = t0;
        while t < t_end {
            let k = (t / self.width).floor();
            let mut b = ((k + 1.0) * self.width).min(t_end);
            if b <= t {
                b = (t + self.width).min(t_end);
            }
            let bound = self.bound(&rate, t, b);
            if bound <= 0.0 {
                t = b;
                continue;
            }
            loop {
                let e: f64 = Exp1.sample(rng);
                t += e / bound;
                if t >= b {
                    t = b;
                    break;
                }
                stats.proposals += 1;
                let r = rate(t);
                if r > bound {
                    stats.bound_violations += 1;
                }
                if rng.random::<f64>() * bound < r {
                    return Some(t);
                }
            }
        }
        None
    }
}
