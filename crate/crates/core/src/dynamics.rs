//! Ground-truth conditional dynamics in Bloch form.
//!
//! For a qubit the stochastic master equation closes on the Bloch vector:
//!
//! ```text
//! dr = a(r) dt + b_x(r) dW_x + b_z(r) dW_z
//! a  = (−Δy − Γx x,  Δx − Ωx z − Γy y,  Ωx y − (2γx + γrel) z + γrel)
//! b_k = 2 sqrt(η γk) (e_k − r_k r)
//! ```
//!
//! Integrated with Euler–Maruyama and radially projected back into the ball
//! whenever a step overshoots `|r| = 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{Rates, SimParams};
use crate::rng::NoiseStream;
use crate::state::{density_from_bloch, project_to_ball, Bloch, QubitState};

/// Every run starts in |+⟩.
pub const INITIAL_BLOCH: Bloch = Bloch::new(1.0, 0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDrift {
    pub a: Bloch,
    pub b_x: Bloch,
    pub b_z: Bloch,
}

/// Deterministic (η-independent) part of the Bloch drift.
#[inline]
pub fn deterministic_drift(r: &Bloch, rates: &Rates) -> Bloch {
    let d = rates.derived();
    Bloch::new(
        -rates.delta * r.y - d.big_gamma_x * r.x,
        rates.delta * r.x - rates.omega_x * r.z - d.big_gamma_y * r.y,
        rates.omega_x * r.y - d.gamma_longitudinal * r.z + rates.gamma_rel,
    )
}

/// Backaction columns `(b_x, b_z)` at efficiency `eta`.
#[inline]
pub fn backaction(r: &Bloch, rates: &Rates, eta: f64) -> (Bloch, Bloch) {
    let kx = 2.0 * (eta * rates.gamma_x).sqrt();
    let kz = 2.0 * (eta * rates.gamma_z).sqrt();
    let b_x = Bloch::new(kx * (1.0 - r.x * r.x), -kx * r.x * r.y, -kx * r.x * r.z);
    let b_z = Bloch::new(-kz * r.x * r.z, -kz * r.y * r.z, kz * (1.0 - r.z * r.z));
    (b_x, b_z)
}

pub fn bloch_drift(r: &Bloch, rates: &Rates, eta: f64) -> BlochDrift {
    let (b_x, b_z) = backaction(r, rates, eta);
    BlochDrift { a: deterministic_drift(r, rates), b_x, b_z }
}

/// Signal amplitude `sqrt(4 η γk)` of channel k in the homodyne current.
#[inline]
pub fn signal_gain(eta: f64, gamma: f64) -> f64 {
    (4.0 * eta * gamma).sqrt()
}

/// One Euler–Maruyama step followed by ball projection.
///
/// Returns `None` if the result is not finite, otherwise the new vector and
/// whether projection was needed.
#[inline]
pub fn euler_bloch_step(
    r: &Bloch,
    dw_x: f64,
    dw_z: f64,
    rates: &Rates,
    eta: f64,
    dt: f64,
) -> Option<(Bloch, bool)> {
    let drift = bloch_drift(r, rates, eta);
    let mut next = r + drift.a * dt + drift.b_x * dw_x + drift.b_z * dw_z;
    if !(next.x.is_finite() && next.y.is_finite() && next.z.is_finite()) {
        return None;
    }
    let projected = project_to_ball(&mut next);
    Some((next, projected))
}

/// [`euler_bloch_step`] on a [`QubitState`].
pub fn sme_step(
    s: &QubitState,
    dw_x: f64,
    dw_z: f64,
    rates: &Rates,
    eta: f64,
    dt: f64,
) -> Result<QubitState> {
    let (next, _) = euler_bloch_step(&s.bloch(), dw_x, dw_z, rates, eta, dt)
        .ok_or(Error::NumericalDivergence { step: 0 })?;
    Ok(QubitState::from_bloch_unchecked(&next))
}

/// Per-step integrated homodyne currents `J_k = I_k dt` on the record grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub dt: f64,
    pub j_x: Vec<f64>,
    pub j_z: Vec<f64>,
}

impl MeasurementRecord {
    pub fn len(&self) -> usize {
        self.j_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j_x.is_empty()
    }
}

/// Streaming ground-truth integrator producing one record increment per call.
///
/// With `truth_substeps = m` the state is advanced on a grid `m` times finer
/// than the record and each record increment sums the `m` fine currents.
#[derive(Debug, Clone)]
pub struct TruthIntegrator {
    rates: Rates,
    eta: f64,
    h: f64,
    substeps: usize,
    gain_x: f64,
    gain_z: f64,
    r: Bloch,
    projections: usize,
    step: usize,
}

impl TruthIntegrator {
    pub fn new(p: &SimParams, r0: Bloch) -> Self {
        let rates = p.rates();
        let substeps = p.truth_substeps.max(1);
        Self {
            rates,
            eta: p.eta_true,
            h: p.dt() / substeps as f64,
            substeps,
            gain_x: signal_gain(p.eta_true, rates.gamma_x),
            gain_z: signal_gain(p.eta_true, rates.gamma_z),
            r: r0,
            projections: 0,
            step: 0,
        }
    }

    pub fn bloch(&self) -> Bloch {
        self.r
    }

    /// Number of fine steps that needed ball projection so far.
    pub fn projections(&self) -> usize {
        self.projections
    }

    /// Advances one record step and returns `(J_x, J_z)`.
    pub fn advance(&mut self, noise: &mut NoiseStream) -> Result<(f64, f64)> {
        let (mut j_x, mut j_z) = (0.0, 0.0);
        for _ in 0..self.substeps {
            let (dw_x, dw_z) = noise.increments(self.h);
            j_x += self.gain_x * self.r.x * self.h + dw_x;
            j_z += self.gain_z * self.r.z * self.h + dw_z;
            let (next, projected) =
                euler_bloch_step(&self.r, dw_x, dw_z, &self.rates, self.eta, self.h)
                    .ok_or(Error::NumericalDivergence { step: self.step })?;
            self.r = next;
            self.projections += usize::from(projected);
        }
        self.step += 1;
        Ok((j_x, j_z))
    }
}

/// A full ground-truth run on the record grid.
#[derive(Debug, Clone)]
pub struct TruthTrajectory {
    pub index: usize,
    pub seed: u64,
    pub states: Vec<Bloch>,
    pub record: MeasurementRecord,
    pub projections: usize,
    pub diverged: bool,
}

impl TruthTrajectory {
    pub fn terminal(&self) -> Bloch {
        *self.states.last().expect("trajectory has at least one state")
    }

    pub fn qubit_states(&self) -> Vec<QubitState> {
        self.states.iter().map(QubitState::from_bloch_unchecked).collect()
    }
}

pub fn simulate_trajectory(p: &SimParams, index: usize) -> TruthTrajectory {
    let mut noise = NoiseStream::for_trajectory(p.base_seed, index);
    let seed = noise.seed();
    let n = p.n_steps;
    let mut integ = TruthIntegrator::new(p, INITIAL_BLOCH);
    let mut states = Vec::with_capacity(n);
    let mut j_x = Vec::with_capacity(n - 1);
    let mut j_z = Vec::with_capacity(n - 1);
    states.push(integ.bloch());
    let mut diverged = false;
    for _ in 1..n {
        if !diverged {
            match integ.advance(&mut noise) {
                Ok((a, b)) => {
                    j_x.push(a);
                    j_z.push(b);
                }
                Err(_) => diverged = true,
            }
        }
        if diverged {
            // Frozen at the last finite state; the record carries pure noise.
            let (a, b) = noise.increments(p.dt());
            j_x.push(a);
            j_z.push(b);
        }
        states.push(integ.bloch());
    }
    TruthTrajectory {
        index,
        seed,
        states,
        record: MeasurementRecord { dt: p.dt(), j_x, j_z },
        projections: integ.projections(),
        diverged,
    }
}

/// Builds the record from a fine-grid true trajectory and the increments that
/// generated it: `J_k[i] = Σ_fine (sqrt(4 η γk) ⟨σk⟩ h + dW_k)`.
///
/// `true_traj` has `(n_steps − 1)·m + 1` states and the increment slices
/// `(n_steps − 1)·m` entries, with `m = truth_substeps`.
pub fn synthesize_record(
    true_traj: &[Bloch],
    dw_x: &[f64],
    dw_z: &[f64],
    p: &SimParams,
) -> Result<MeasurementRecord> {
    let m = p.truth_substeps.max(1);
    let fine = (p.n_steps - 1) * m;
    for len in [dw_x.len(), dw_z.len()] {
        if len != fine {
            return Err(Error::LengthMismatch { expected: fine, got: len });
        }
    }
    if true_traj.len() != fine + 1 {
        return Err(Error::LengthMismatch { expected: fine + 1, got: true_traj.len() });
    }
    let rates = p.rates();
    let h = p.dt() / m as f64;
    let gx = signal_gain(p.eta_true, rates.gamma_x);
    let gz = signal_gain(p.eta_true, rates.gamma_z);
    let mut j_x = vec![0.0; p.n_steps - 1];
    let mut j_z = vec![0.0; p.n_steps - 1];
    for k in 0..fine {
        j_x[k / m] += gx * true_traj[k].x * h + dw_x[k];
        j_z[k / m] += gz * true_traj[k].z * h + dw_z[k];
    }
    Ok(MeasurementRecord { dt: p.dt(), j_x, j_z })
}

/// All `n_traj` ground-truth runs, in index order. Memory grows as
/// `n_traj × n_steps`; use [`crate::ensemble`] for large ensembles.
pub fn simulate_ensemble(p: &SimParams) -> Vec<TruthTrajectory> {
    (0..p.n_traj).into_par_iter().map(|i| simulate_trajectory(p, i)).collect()
}

/// Lindblad (record-averaged) Bloch trajectory on the record grid, by RK4.
pub fn unconditional_states(p: &SimParams) -> Vec<Bloch> {
    let rates = p.rates();
    let dt = p.dt();
    let f = |r: &Bloch| deterministic_drift(r, &rates);
    let mut r = INITIAL_BLOCH;
    let mut out = Vec::with_capacity(p.n_steps);
    out.push(r);
    for _ in 1..p.n_steps {
        let k1 = f(&r);
        let k2 = f(&(r + k1 * (0.5 * dt)));
        let k3 = f(&(r + k2 * (0.5 * dt)));
        let k4 = f(&(r + k3 * dt));
        r += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
        out.push(r);
    }
    out
}

/// Unconditional coherence `S_uncond(t) = sqrt(x² + y²)` on the record grid.
pub fn unconditional_evolve(p: &SimParams) -> Vec<f64> {
    unconditional_states(p).iter().map(|r| r.x.hypot(r.y)).collect()
}

/// Splits each increment over `h` into two over `h/2` by Brownian-bridge
/// sampling, preserving their sums.
pub fn refine_increments(coarse: &[f64], h: f64, noise: &mut NoiseStream) -> Vec<f64> {
    let s = (h / 4.0).sqrt();
    let mut fine = Vec::with_capacity(2 * coarse.len());
    for &dw in coarse {
        let first = 0.5 * dw + s * noise.standard_normal();
        fine.push(first);
        fine.push(dw - first);
    }
    fine
}

/// Stateless convenience: `QubitState` trajectory for given increments.
pub fn integrate_states(
    r0: &Bloch,
    dw_x: &[f64],
    dw_z: &[f64],
    rates: &Rates,
    eta: f64,
    h: f64,
) -> Result<Vec<Bloch>> {
    if dw_x.len() != dw_z.len() {
        return Err(Error::LengthMismatch { expected: dw_x.len(), got: dw_z.len() });
    }
    let mut r = density_from_bloch(r0)?.bloch();
    let mut out = Vec::with_capacity(dw_x.len() + 1);
    out.push(r);
    for (step, (&a, &b)) in dw_x.iter().zip(dw_z).enumerate() {
        r = euler_bloch_step(&r, a, b, rates, eta, h).ok_or(Error::NumericalDivergence { step })?.0;
        out.push(r);
    }
    Ok(out)
}
