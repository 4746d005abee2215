//! Coherence scoring, routing and ensemble gating metrics.

use serde::Serialize;
use std::f64::consts::PI;

use crate::ensemble::TerminalPair;
use crate::error::{Error, Result};
use crate::state::{Bloch, QubitState};

/// Below this equatorial length the azimuth is treated as undefined.
pub const PHASE_MIN_COHERENCE: f64 = 1e-9;

/// `S = sqrt(x² + y²) = 2|ρ01|`.
pub fn coherence_score(s: &QubitState) -> f64 {
    coherence_of(&s.bloch())
}

#[inline]
pub fn coherence_of(r: &Bloch) -> f64 {
    r.x.hypot(r.y)
}

/// `Tr ρ² = (1 + |r|²)/2`.
pub fn purity(s: &QubitState) -> f64 {
    purity_of(&s.bloch())
}

#[inline]
pub fn purity_of(r: &Bloch) -> f64 {
    0.5 * (1.0 + r.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Coherent port.
    A,
    /// Fallback port.
    B,
}

/// Strict threshold: a score equal to `s_th` goes to B.
#[inline]
pub fn route(s_score: f64, s_th: f64) -> Route {
    if s_score > s_th {
        Route::A
    } else {
        Route::B
    }
}

/// Azimuth `φ = atan2(y, x)` and the state rotated by `R_z(−φ)`.
pub fn equatorial_phase(s: &QubitState) -> Result<(f64, QubitState)> {
    let (phi, r) = equatorial_phase_of(&s.bloch())?;
    Ok((phi, QubitState::from_bloch_unchecked(&r)))
}

pub fn equatorial_phase_of(r: &Bloch) -> Result<(f64, Bloch)> {
    let s = coherence_of(r);
    if s <= PHASE_MIN_COHERENCE {
        return Err(Error::PhaseUndefined(s));
    }
    let mut phi = r.y.atan2(r.x);
    // atan2 returns −π on the negative real axis with a −0 imaginary part.
    if phi <= -PI {
        phi = PI;
    }
    Ok((phi, Bloch::new(s, 0.0, r.z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GatingMetrics {
    pub s_th: f64,
    /// Fraction of trajectories with `S_true(T) > s_th`.
    pub heralding_efficiency: f64,
    /// Fraction where the estimate and the truth route differently.
    pub mismatch_rate: f64,
    /// Mean `S_est(T) − S_true(T)`; the same at every threshold.
    pub mean_bias: f64,
    pub mean_repairs: f64,
    pub accepted_count: usize,
}

pub fn gating_sweep(pairs: &[TerminalPair], s_th_grid: &[f64]) -> Result<Vec<GatingMetrics>> {
    if pairs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = pairs.len() as f64;
    let scores: Vec<(f64, f64)> =
        pairs.iter().map(|p| (coherence_of(&p.truth), coherence_of(&p.estimate))).collect();
    let mean_bias = scores.iter().map(|(t, e)| e - t).sum::<f64>() / n;
    let mean_repairs = pairs.iter().map(|p| p.repairs as f64).sum::<f64>() / n;
    Ok(s_th_grid
        .iter()
        .map(|&s_th| {
            let accepted = scores.iter().filter(|(t, _)| route(*t, s_th) == Route::A).count();
            let mismatched =
                scores.iter().filter(|(t, e)| route(*t, s_th) != route(*e, s_th)).count();
            GatingMetrics {
                s_th,
                heralding_efficiency: accepted as f64 / n,
                mismatch_rate: mismatched as f64 / n,
                mean_bias,
                mean_repairs,
                accepted_count: accepted,
            }
        })
        .collect())
}

/// Heralding efficiency of terminal truth states alone.
pub fn heralding_efficiency(truth: &[Bloch], s_th: f64) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = truth.iter().filter(|r| route(coherence_of(r), s_th) == Route::A).count();
    Ok(n as f64 / truth.len() as f64)
}
