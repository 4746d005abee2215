//! Closed-form certification quantities.
//!
//! A routed state with `S > s` has its Bloch vector inside the cylinder
//! `x² + y² > s²`, which bounds `|z| < sqrt(1 − s²)`. Everything below
//! follows from that geometry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::state::Bloch;

/// Longitudinal bound `δ = sqrt(1 − s²)`.
#[inline]
fn polar_width(s: f64) -> f64 {
    (1.0 - s * s).max(0.0).sqrt()
}

/// Worst-case min-entropy in bits of a z-basis readout of a state with
/// coherence above `s_th`: `−log2((1 + sqrt(1 − s²))/2)`.
pub fn min_entropy_bound(s_th: f64) -> f64 {
    -(0.5 * (1.0 + polar_width(s_th))).log2()
}

/// Born-probability interval `((1 − δ)/2, (1 + δ)/2)` for outcome 0.
pub fn pz_interval(s_th: f64) -> (f64, f64) {
    let d = polar_width(s_th);
    (0.5 * (1.0 - d), 0.5 * (1.0 + d))
}

/// `−log2 max_i max(P_z, 1 − P_z)` over accepted z components.
pub fn empirical_min_entropy(accepted_z: &[f64]) -> Result<f64> {
    if accepted_z.is_empty() {
        return Err(Error::EmptyAcceptedSet);
    }
    let worst = accepted_z
        .iter()
        .map(|z| {
            let p = 0.5 * (1.0 + z);
            p.max(1.0 - p)
        })
        .fold(0.5, f64::max);
    Ok(-worst.log2())
}

/// Empirical min-entropy of the states whose true coherence exceeds `s_th`.
pub fn empirical_min_entropy_at(truth: &[Bloch], s_th: f64) -> Result<(f64, usize)> {
    let z: Vec<f64> = truth.iter().filter(|r| r.x.hypot(r.y) > s_th).map(|r| r.z).collect();
    Ok((empirical_min_entropy(&z)?, z.len()))
}

/// Fidelity of the heralded Bell pair from one emitter with coherence `s`.
pub fn bell_fidelity(s: f64) -> f64 {
    0.5 * (1.0 + s)
}

/// Two-emitter input fidelity `f_gate² ((1 + s_th)/2)²`.
pub fn input_fidelity(s_th: f64, f_gate: f64) -> f64 {
    f_gate * f_gate * bell_fidelity(s_th).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComposablePoint {
    pub s_th: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub h_min: f64,
    pub f_mm: f64,
    /// Confidence of the min-entropy statement, `1 − δ`.
    pub h_confidence: f64,
    /// Confidence of the fidelity statement, `(1 − δ)²`.
    pub f_confidence: f64,
}

pub fn composable_point(s_th: f64, epsilon: f64, delta: f64) -> Result<ComposablePoint> {
    let s = s_th - epsilon;
    if !(0.0..=1.0).contains(&s) || epsilon < 0.0 {
        return Err(Error::MarginExceedsThreshold { s_th, epsilon });
    }
    Ok(ComposablePoint {
        s_th,
        epsilon,
        delta,
        h_min: min_entropy_bound(s),
        f_mm: input_fidelity(s, 1.0),
        h_confidence: 1.0 - delta,
        f_confidence: (1.0 - delta).powi(2),
    })
}

/// Typical conditional coherence `sqrt(2ηγ / (3(ηγ + γ_dec)))`.
pub fn s_typ(p: &SimParams) -> f64 {
    let d = p.derived();
    let eg = p.eta_true * d.gamma_meas;
    (2.0 * eg / (3.0 * (eg + d.gamma_dec))).sqrt()
}

/// `ξ = 4γ s² / Γb`.
pub fn xi(p: &SimParams, s_value: f64) -> f64 {
    let d = p.derived();
    4.0 * d.gamma_meas * s_value * s_value / d.big_gamma_b
}

/// Predicted optimal `η_a/η_true = 1/(1 + ξ)`.
pub fn optimal_eta_ratio(p: &SimParams, s_value: f64) -> f64 {
    1.0 / (1.0 + xi(p, s_value))
}

/// `(n η_h / T, n η_h² / T)` per second: single-emitter and two-node
/// heralded rates for a decision time `T` in µs.
pub fn network_rates(n_modules: usize, eta_h: f64, t_decision_us: f64) -> (f64, f64) {
    let n = n_modules as f64;
    let per_us = n * eta_h / t_decision_us;
    (per_us * 1e6, per_us * eta_h * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn min_entropy_values() {
        assert_abs_diff_eq!(min_entropy_bound(0.95), 0.608, epsilon = 1e-3);
        assert_abs_diff_eq!(min_entropy_bound(0.99), 0.8096, epsilon = 1e-3);
        assert_abs_diff_eq!(min_entropy_bound(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(min_entropy_bound(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn min_entropy_is_increasing() {
        let mut last = min_entropy_bound(0.0);
        for k in 1..=100 {
            let h = min_entropy_bound(k as f64 / 100.0);
            assert!(h > last);
            last = h;
        }
    }

    #[test]
    fn born_interval() {
        assert_eq!(pz_interval(1.0), (0.5, 0.5));
        assert_eq!(pz_interval(0.0), (0.0, 1.0));
        let (lo, hi) = pz_interval(0.8);
        assert_abs_diff_eq!(lo, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn empirical_entropy() {
        assert_eq!(empirical_min_entropy(&[0.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(empirical_min_entropy(&[0.6]).unwrap(), 0.3219, epsilon = 1e-4);
        assert_eq!(empirical_min_entropy(&[]), Err(Error::EmptyAcceptedSet));
    }

    #[test]
    fn fidelities() {
        assert_abs_diff_eq!(bell_fidelity(0.7), 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(input_fidelity(0.7, 1.0), 0.7225, epsilon = 1e-12);
        assert_abs_diff_eq!(input_fidelity(0.9, 0.97), 0.903 * 0.9409, epsilon = 1e-3);
        for s in [0.1, 0.5, 0.93] {
            assert_eq!(input_fidelity(s, 0.5), 0.25 * input_fidelity(s, 1.0));
        }
    }

    #[test]
    fn composable_reduces_without_margin() {
        let c = composable_point(0.8, 0.0, 0.01).unwrap();
        assert_eq!(c.h_min, min_entropy_bound(0.8));
        assert_eq!(c.f_mm, input_fidelity(0.8, 1.0));
        assert!(matches!(
            composable_point(0.05, 0.1, 0.0),
            Err(Error::MarginExceedsThreshold { .. })
        ));
    }

    #[test]
    fn scaling_law() {
        let p = SimParams::reference();
        assert_abs_diff_eq!(s_typ(&p), 0.7638, epsilon = 1e-4);
        assert_abs_diff_eq!(xi(&p, s_typ(&p)), 1.436, epsilon = 1e-3);
        assert_abs_diff_eq!(optimal_eta_ratio(&p, 0.67), 0.4751, epsilon = 1e-4);
        let q = SimParams { gamma_x: 0.0, gamma_z: 0.0, ..p };
        assert_eq!(optimal_eta_ratio(&q, 0.67), 1.0);
    }

    #[test]
    fn rates() {
        let (single, two) = network_rates(10, 0.1, 10.0);
        assert_eq!(single, 1e5);
        assert_abs_diff_eq!(two, 1e4, epsilon = 1e-9);
        assert_eq!(network_rates(10, 0.0, 1.0), (0.0, 0.0));
    }
}
