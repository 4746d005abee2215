//! Lockstep truth-plus-filters ensembles.
//!
//! Each trajectory advances the ground truth and every configured filter on
//! the same record increment, so nothing but terminal summaries (and whatever
//! an observer chooses to keep) is stored. Trajectories are processed in
//! fixed-size chunks whose results are merged in index order, so outputs do
//! not depend on the number of worker threads.

use rayon::prelude::*;

use crate::dynamics::{MeasurementRecord, TruthIntegrator, INITIAL_BLOCH};
use crate::error::Result;
use crate::estimators::{EstimatorConfig, EstimatorDiagnostics, Filter};
use crate::params::SimParams;
use crate::rng::NoiseStream;
use crate::state::{Bloch, QubitState};

/// Trajectories per work unit. Part of the determinism contract: changing it
/// changes floating-point summation order in observers.
pub const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSummary {
    pub bloch: Bloch,
    pub diagnostics: EstimatorDiagnostics,
}

/// Terminal-time outcome of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub traj_id: usize,
    pub seed: u64,
    pub truth: Bloch,
    pub truth_diverged: bool,
    pub estimates: Vec<EstimateSummary>,
}

impl PairSummary {
    /// Truth against estimator `k`.
    pub fn terminal(&self, k: usize) -> TerminalPair {
        let e = &self.estimates[k];
        TerminalPair {
            truth: self.truth,
            estimate: e.bloch,
            repairs: e.diagnostics.psd_repairs,
            diverged: self.truth_diverged || e.diagnostics.diverged,
        }
    }
}

/// The minimal per-trajectory data the gating and bounds statistics need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalPair {
    pub truth: Bloch,
    pub estimate: Bloch,
    pub repairs: usize,
    pub diverged: bool,
}

/// Sees every record step of every trajectory.
pub trait StepObserver: Send + Sized {
    /// Called at every grid point `step` (0 is the initial state) with the
    /// truth and the estimates in configuration order.
    fn observe(&mut self, step: usize, truth: &Bloch, estimates: &[Bloch]);

    fn end_trajectory(&mut self, _summary: &PairSummary) {}

    /// Absorbs an observer that saw later trajectories.
    fn merge(&mut self, later: Self);
}

impl StepObserver for () {
    fn observe(&mut self, _: usize, _: &Bloch, _: &[Bloch]) {}
    fn merge(&mut self, _: Self) {}
}

fn run_one<O: StepObserver>(
    p: &SimParams,
    configs: &[EstimatorConfig],
    index: usize,
    obs: &mut O,
) -> Result<PairSummary> {
    let mut noise = NoiseStream::for_trajectory(p.base_seed, index);
    let seed = noise.seed();
    let mut truth = TruthIntegrator::new(p, INITIAL_BLOCH);
    let mut filters =
        configs.iter().map(|c| Filter::new(c, p, &INITIAL_BLOCH)).collect::<Result<Vec<_>>>()?;
    let mut failed = vec![false; filters.len()];
    let mut est: Vec<Bloch> = filters.iter().map(Filter::bloch).collect();
    let mut truth_diverged = false;
    obs.observe(0, &truth.bloch(), &est);
    for step in 1..p.n_steps {
        let (j_x, j_z) = if truth_diverged {
            noise.increments(p.dt())
        } else {
            match truth.advance(&mut noise) {
                Ok(j) => j,
                Err(_) => {
                    truth_diverged = true;
                    noise.increments(p.dt())
                }
            }
        };
        for (k, f) in filters.iter_mut().enumerate() {
            if !failed[k] && f.step(j_x, j_z).is_err() {
                failed[k] = true;
            }
            est[k] = f.bloch();
        }
        obs.observe(step, &truth.bloch(), &est);
    }
    let estimates = filters
        .iter()
        .zip(&failed)
        .map(|(f, &diverged)| EstimateSummary {
            bloch: f.bloch(),
            diagnostics: EstimatorDiagnostics { diverged, ..f.diagnostics() },
        })
        .collect();
    let summary =
        PairSummary { traj_id: index, seed, truth: truth.bloch(), truth_diverged, estimates };
    obs.end_trajectory(&summary);
    Ok(summary)
}

/// Runs trajectories `0..p.n_traj` with the given filters and observer.
pub fn run_ensemble<O, F>(
    p: &SimParams,
    configs: &[EstimatorConfig],
    make_observer: F,
) -> Result<(Vec<PairSummary>, O)>
where
    O: StepObserver,
    F: Fn() -> O + Sync,
{
    for c in configs {
        c.validate()?;
    }
    let n_chunks = p.n_traj.div_ceil(CHUNK);
    let chunks: Vec<Result<(Vec<PairSummary>, O)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut obs = make_observer();
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(p.n_traj);
            let mut out = Vec::with_capacity(hi - lo);
            for i in lo..hi {
                out.push(run_one(p, configs, i, &mut obs)?);
            }
            Ok((out, obs))
        })
        .collect();
    let mut all = Vec::with_capacity(p.n_traj);
    let mut merged: Option<O> = None;
    for chunk in chunks {
        let (out, obs) = chunk?;
        all.extend(out);
        match merged.as_mut() {
            None => merged = Some(obs),
            Some(m) => m.merge(obs),
        }
    }
    Ok((all, merged.unwrap_or_else(make_observer)))
}

/// Terminal summaries only.
pub fn run_pairs(p: &SimParams, configs: &[EstimatorConfig]) -> Result<Vec<PairSummary>> {
    Ok(run_ensemble(p, configs, || ())?.0)
}

/// Full time series of one trajectory and one filter on a shared record.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    pub times: Vec<f64>,
    pub true_states: Vec<QubitState>,
    pub est_states: Vec<QubitState>,
    pub record: MeasurementRecord,
    pub repairs: usize,
    pub zakai_weight: Option<f64>,
    pub diverged: bool,
}

pub fn simulate_pair(p: &SimParams, cfg: &EstimatorConfig, index: usize) -> Result<TrajectoryPair> {
    let truth = crate::dynamics::simulate_trajectory(p, index);
    let (est_states, diag) = crate::estimators::run_estimator(&truth.record, cfg, p)?;
    Ok(TrajectoryPair {
        times: p.times(),
        true_states: truth.qubit_states(),
        est_states,
        repairs: diag.psd_repairs,
        zakai_weight: (cfg.kind == crate::estimators::EstimatorKind::Zakai)
            .then_some(diag.weight_log),
        diverged: truth.diverged || diag.diverged,
        record: truth.record,
    })
}
