//! Terminal-time overcertification statistics and the streaming observer
//! that gathers the error-process data for the OU fit.

use serde::Serialize;

use super::joint::{e_drift_diffusion, error_value, JointState};
use super::ou::OuAccumulator;
use crate::ensemble::{StepObserver, TerminalPair};
use crate::error::{Error, Result};
use crate::gating::{coherence_of, purity_of};
use crate::params::{Rates, SimParams};
use crate::state::Bloch;

pub const MIN_PAIRS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OvercertStats {
    pub n: usize,
    /// `Pr[Ŝ(T) > S(T)]`.
    pub p_s_over: f64,
    /// `Pr[𝒫̂(T) > 𝒫(T)]`.
    pub p_purity_over: f64,
    /// `p_s_over / p_purity_over`; infinite when no purity exceedance occurs.
    pub amplification: f64,
    /// `(ε, Pr[Ŝ > S + ε])`.
    pub tail_curve: Vec<(f64, f64)>,
    /// Event counts behind `tail_curve`.
    pub tail_counts: Vec<usize>,
}

pub fn overcert_stats(pairs: &[TerminalPair], eps_grid: &[f64]) -> Result<OvercertStats> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::InsufficientSamples { needed: MIN_PAIRS, got: pairs.len() });
    }
    let n = pairs.len() as f64;
    let gaps: Vec<f64> =
        pairs.iter().map(|p| coherence_of(&p.estimate) - coherence_of(&p.truth)).collect();
    let s_over = gaps.iter().filter(|&&g| g > 0.0).count();
    let pur_over = pairs.iter().filter(|p| purity_of(&p.estimate) > purity_of(&p.truth)).count();
    let tail_counts: Vec<usize> =
        eps_grid.iter().map(|&e| gaps.iter().filter(|&&g| g > e).count()).collect();
    let p_s_over = s_over as f64 / n;
    let p_purity_over = pur_over as f64 / n;
    Ok(OvercertStats {
        n: pairs.len(),
        p_s_over,
        p_purity_over,
        amplification: if pur_over == 0 { f64::INFINITY } else { p_s_over / p_purity_over },
        tail_curve: eps_grid.iter().zip(&tail_counts).map(|(&e, &c)| (e, c as f64 / n)).collect(),
        tail_counts,
    })
}

/// Mean polar alignment `|z|/|r|` of truth and estimate over trajectories
/// whose true coherence exceeds `s_th`. Returns `(truth, estimate, count)`.
pub fn polar_alignment(pairs: &[TerminalPair], s_th: f64) -> (f64, f64, usize) {
    let ratio = |r: &Bloch| {
        let n = r.norm();
        if n > 0.0 {
            r.z.abs() / n
        } else {
            0.0
        }
    };
    let acc: Vec<&TerminalPair> = pairs.iter().filter(|p| coherence_of(&p.truth) > s_th).collect();
    let k = acc.len().max(1) as f64;
    let t = acc.iter().map(|p| ratio(&p.truth)).sum::<f64>() / k;
    let e = acc.iter().map(|p| ratio(&p.estimate)).sum::<f64>() / k;
    (t, e, acc.len())
}

/// Streams `E` increments of one estimator into an [`OuAccumulator`] and
/// tracks the largest drift `b` seen along the ensemble.
pub struct ErrorProcessObserver {
    estimator: usize,
    burn_in_steps: usize,
    drift_stride: usize,
    rates: Rates,
    eta_true: f64,
    eta_a: f64,
    prev: Option<f64>,
    pub acc: OuAccumulator,
    pub max_visited_drift: f64,
}

impl ErrorProcessObserver {
    /// `estimator` indexes the filter list passed to the ensemble. The
    /// visited-state drift is evaluated every `drift_stride` steps.
    pub fn new(
        p: &SimParams,
        estimator: usize,
        eta_a: f64,
        burn_in: f64,
        drift_stride: usize,
    ) -> Self {
        Self {
            estimator,
            burn_in_steps: (burn_in / p.dt()).round() as usize,
            drift_stride: drift_stride.max(1),
            rates: p.rates(),
            eta_true: p.eta_true,
            eta_a,
            prev: None,
            acc: OuAccumulator::new(p.dt()),
            max_visited_drift: f64::NEG_INFINITY,
        }
    }
}

impl StepObserver for ErrorProcessObserver {
    fn observe(&mut self, step: usize, truth: &Bloch, estimates: &[Bloch]) {
        let x = JointState::new(*truth, estimates[self.estimator]);
        let e = error_value(&x);
        if step == 0 {
            self.prev = None;
        }
        if let Some(prev) = self.prev {
            if step > self.burn_in_steps {
                self.acc.push(prev, e - prev);
            }
        }
        self.prev = Some(e);
        if step.is_multiple_of(self.drift_stride) {
            let b = e_drift_diffusion(&x, &self.rates, self.eta_true, self.eta_a).b;
            self.max_visited_drift = self.max_visited_drift.max(b);
        }
    }

    fn merge(&mut self, later: Self) {
        self.acc.merge(&later.acc);
        self.max_visited_drift = self.max_visited_drift.max(later.max_visited_drift);
    }
}
