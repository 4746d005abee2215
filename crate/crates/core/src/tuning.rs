//! Empirical search for the assumed efficiency of a filter.

use serde::Serialize;

use crate::ensemble::{run_pairs, TerminalPair};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorKind};
use crate::gating::{coherence_of, gating_sweep};
use crate::params::SimParams;

/// Mismatch headroom over the matched filter allowed for a candidate.
pub const MISMATCH_SLACK: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    /// `η_a / η_true`.
    pub ratio: f64,
    pub eta_assumed: f64,
    pub mean_bias: f64,
    pub mismatch_rate: f64,
    pub mean_repairs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSweep {
    pub points: Vec<RatioPoint>,
    /// Mismatch of the matched filter (`ratio = 1`).
    pub matched_mismatch: f64,
    /// Index into `points` of the selected ratio.
    pub best: usize,
    /// Ensemble mean of the terminal true coherence.
    pub mean_s_true: f64,
}

impl RatioSweep {
    pub fn best_ratio(&self) -> f64 {
        self.points[self.best].ratio
    }
}

/// `n` evenly spaced ratios over `[0.1, 1.0]`, ending exactly at 1.
pub fn ratio_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| 0.1 + 0.9 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Runs one ensemble with a filter per ratio (plus the matched filter when the
/// grid lacks it) and picks the ratio with the smallest `|bias|` among those
/// whose mismatch at `p.s_th` is within [`MISMATCH_SLACK`] of the matched one.
pub fn ratio_sweep(p: &SimParams, kind: EstimatorKind, ratios: &[f64]) -> Result<RatioSweep> {
    if ratios.is_empty() {
        return Err(Error::InvalidParameter { name: "ratios", reason: "empty grid".into() });
    }
    let mut configs: Vec<EstimatorConfig> =
        ratios.iter().map(|r| EstimatorConfig::new(kind, r * p.eta_true)).collect();
    let matched_idx = match ratios.iter().position(|&r| r == 1.0) {
        Some(i) => i,
        None => {
            configs.push(EstimatorConfig::new(kind, p.eta_true));
            configs.len() - 1
        }
    };
    let pairs = run_pairs(p, &configs)?;
    let mean_s_true =
        pairs.iter().map(|s| coherence_of(&s.truth)).sum::<f64>() / pairs.len() as f64;
    let metrics = (0..configs.len())
        .map(|k| {
            let tp: Vec<TerminalPair> = pairs.iter().map(|s| s.terminal(k)).collect();
            Ok(gating_sweep(&tp, &[p.s_th])?[0])
        })
        .collect::<Result<Vec<_>>>()?;
    let matched_mismatch = metrics[matched_idx].mismatch_rate;
    let points: Vec<RatioPoint> = ratios
        .iter()
        .zip(&metrics)
        .map(|(&ratio, m)| RatioPoint {
            ratio,
            eta_assumed: ratio * p.eta_true,
            mean_bias: m.mean_bias,
            mismatch_rate: m.mismatch_rate,
            mean_repairs: m.mean_repairs,
        })
        .collect();
    let limit = matched_mismatch + MISMATCH_SLACK;
    let best = points
        .iter()
        .enumerate()
        .filter(|(_, q)| q.mismatch_rate <= limit)
        .min_by(|a, b| a.1.mean_bias.abs().total_cmp(&b.1.mean_bias.abs()))
        .map(|(i, _)| i)
        // Nothing qualifies only when the grid omits ratio 1.
        .unwrap_or_else(|| {
            points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.mismatch_rate.total_cmp(&b.1.mismatch_rate))
                .map(|(i, _)| i)
                .unwrap_or(0)
        });
    Ok(RatioSweep { points, matched_mismatch, best, mean_s_true })
}
