//! Exponential-supermartingale tail bound.
//!
//! For `α > 0`, `exp(αE_t − c_α t)` is a supermartingale when
//! `c_α ≥ sup_K [α b + ½α² (β_x² + β_z²)]`, which gives
//! `Pr[E_T ≥ ε²] ≤ exp(−α ε² + T c_α)`. The supremum over the compact
//! domain is found by a ball-filtered grid followed by projected
//! Nelder–Mead refinement from the best grid points; the bound is then
//! minimized over `α` by golden-section search in `ln α` (the exponent is
//! convex in `α`, hence unimodal in `ln α`).

use rayon::prelude::*;
use serde::Serialize;

use super::joint::{e_drift_diffusion, JointState, Vec6};
use crate::params::Rates;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Grid points per axis over `[−1, 1]`.
    pub grid_points: usize,
    /// Grid points refined by Nelder–Mead.
    pub refine_starts: usize,
    pub refine_iters: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub golden_iters: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_points: 9,
            refine_starts: 100,
            refine_iters: 400,
            alpha_min: 1e-3,
            alpha_max: 1e3,
            golden_iters: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub c_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupermartingaleBound {
    pub bound: f64,
    /// Minimizing `α` of the unclamped exponent.
    pub alpha: f64,
    /// `(α, c_α)` at every α the optimizer evaluated, sorted by α.
    pub c_alpha_curve: Vec<AlphaPoint>,
    /// `sup_K b`, in the rate units of the supplied [`Rates`].
    pub max_drift: f64,
    pub argmax: JointState,
}

/// Precomputed `(b, β²)` over the ball-filtered grid.
#[derive(Debug, Clone)]
pub struct DriftLandscape {
    rates: Rates,
    eta_true: f64,
    eta_a: f64,
    points: Vec<(JointState, f64, f64)>,
    settings: SearchSettings,
}

fn project(v: &Vec6) -> JointState {
    let mut x = JointState::from_vec6(v);
    x.project();
    x
}

/// Minimal Nelder–Mead on `R^6`; `f` is evaluated at projected points, so
/// exploration outside `K` is harmless.
fn nelder_mead<F: Fn(&Vec6) -> f64>(f: F, start: &Vec6, step: f64, iters: usize) -> (Vec6, f64) {
    let n = 6;
    let mut simplex: Vec<(Vec6, f64)> = (0..=n)
        .map(|i| {
            let mut v = *start;
            if i > 0 {
                v[i - 1] += if v[i - 1] > 0.0 { -step } else { step };
            }
            (v, f(&v))
        })
        .collect();
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() < 1e-13 {
            break;
        }
        let centroid = simplex[..n].iter().fold(Vec6::zeros(), |acc, s| acc + s.0) / n as f64;
        let worst = simplex[n];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = centroid + (centroid - worst.0) * 2.0;
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract = centroid + (worst.0 - centroid) * 0.5;
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = best + (s.0 - best) * 0.5;
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

impl DriftLandscape {
    pub fn new(rates: &Rates, eta_true: f64, eta_a: f64, settings: SearchSettings) -> Self {
        let g = settings.grid_points.max(2);
        let axis: Vec<f64> = (0..g).map(|i| -1.0 + 2.0 * i as f64 / (g - 1) as f64).collect();
        let mut ball: Vec<[f64; 3]> = Vec::new();
        for &x in &axis {
            for &y in &axis {
                for &z in &axis {
                    if x * x + y * y + z * z <= 1.0 + 1e-12 {
                        ball.push([x, y, z]);
                    }
                }
            }
        }
        let points = ball
            .par_iter()
            .flat_map_iter(|r| {
                ball.iter().map(move |h| {
                    let x = JointState::from_vec6(&Vec6::new(r[0], r[1], r[2], h[0], h[1], h[2]));
                    let mut x = x;
                    x.project();
                    let e = e_drift_diffusion(&x, rates, eta_true, eta_a);
                    (x, e.b, e.beta_x * e.beta_x + e.beta_z * e.beta_z)
                })
            })
            .collect();
        Self { rates: *rates, eta_true, eta_a, points, settings }
    }

    pub fn grid_size(&self) -> usize {
        self.points.len()
    }

    fn eval(&self, x: &JointState, alpha: f64) -> f64 {
        let e = e_drift_diffusion(x, &self.rates, self.eta_true, self.eta_a);
        alpha * e.b + 0.5 * alpha * alpha * (e.beta_x * e.beta_x + e.beta_z * e.beta_z)
    }

    /// Maximizes `g(α; X) = α b + ½ α² q` (or `b` alone when `alpha` is
    /// `None`) over `K`.
    fn sup(&self, alpha: Option<f64>) -> (f64, JointState) {
        let score = |b: f64, q: f64| match alpha {
            Some(a) => a * b + 0.5 * a * a * q,
            None => b,
        };
        let mut idx: Vec<(usize, f64)> =
            self.points.iter().enumerate().map(|(i, p)| (i, score(p.1, p.2))).collect();
        // Descending score, ties by index for determinism.
        idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let starts = self.settings.refine_starts.min(idx.len());
        let objective = |v: &Vec6| {
            let x = project(v);
            match alpha {
                Some(a) => -self.eval(&x, a),
                None => -e_drift_diffusion(&x, &self.rates, self.eta_true, self.eta_a).b,
            }
        };
        let step = 1.0 / (self.settings.grid_points.max(2) - 1) as f64;
        let refined: Vec<(f64, JointState)> = idx[..starts]
            .par_iter()
            .map(|&(i, _)| {
                let start = self.points[i].0.to_vec6();
                let (v, f) = nelder_mead(objective, &start, step, self.settings.refine_iters);
                (-f, project(&v))
            })
            .collect();
        let (best_i, best_s) = idx[0];
        let mut best = (best_s, self.points[best_i].0);
        for (s, x) in refined {
            if s > best.0 {
                best = (s, x);
            }
        }
        best
    }

    /// `c_α` and its maximizer.
    pub fn c_alpha(&self, alpha: f64) -> (f64, JointState) {
        self.sup(Some(alpha))
    }

    /// `sup_K b` and its maximizer.
    pub fn max_drift(&self) -> (f64, JointState) {
        self.sup(None)
    }

    /// Optimized bound on `Pr[E_T ≥ ε²]`, clamped to 1.
    pub fn bound(&self, epsilon: f64, t_final: f64) -> SupermartingaleBound {
        let a2 = epsilon * epsilon;
        let mut curve = Vec::new();
        let mut exponent = |ln_a: f64| {
            let alpha = ln_a.exp();
            let (c, _) = self.c_alpha(alpha);
            curve.push(AlphaPoint { alpha, c_alpha: c });
            -alpha * a2 + t_final * c
        };
        let (mut lo, mut hi) = (self.settings.alpha_min.ln(), self.settings.alpha_max.ln());
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut m1 = hi - phi * (hi - lo);
        let mut m2 = lo + phi * (hi - lo);
        let mut f1 = exponent(m1);
        let mut f2 = exponent(m2);
        for _ in 0..self.settings.golden_iters {
            if f1 <= f2 {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - phi * (hi - lo);
                f1 = exponent(m1);
            } else {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + phi * (hi - lo);
                f2 = exponent(m2);
            }
        }
        let f_lo = exponent(self.settings.alpha_min.ln());
        let f_hi = exponent(self.settings.alpha_max.ln());
        let (mut best_ln, mut best_f) = if f1 <= f2 { (m1, f1) } else { (m2, f2) };
        for (ln_a, f) in
            [(self.settings.alpha_min.ln(), f_lo), (self.settings.alpha_max.ln(), f_hi)]
        {
            if f < best_f {
                best_ln = ln_a;
                best_f = f;
            }
        }
        curve.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        curve.dedup_by(|a, b| a.alpha == b.alpha);
        let (max_drift, argmax) = self.max_drift();
        SupermartingaleBound {
            bound: best_f.exp().min(1.0),
            alpha: best_ln.exp(),
            c_alpha_curve: curve,
            max_drift,
            argmax,
        }
    }
}

/// One-shot convenience over a fresh landscape.
pub fn supermartingale_bound(
    rates: &Rates,
    eta_true: f64,
    eta_a: f64,
    epsilon: f64,
    t_final: f64,
) -> SupermartingaleBound {
    DriftLandscape::new(rates, eta_true, eta_a, SearchSettings::default()).bound(epsilon, t_final)
}
