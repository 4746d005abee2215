//! Physical and numerical parameters.
//!
//! Rates are stored in the units they are quoted in (multiples of 2π MHz for
//! the reference parameter set) and converted to angular rates by
//! [`SimParams::rate_scale`] before any dynamics are integrated. Times are in
//! the unit of `t_final` (µs for the reference set). Rate-valued diagnostics
//! (fitted OU rates, drift maxima) are converted back to quoted units by the
//! callers that report them.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Transverse Rabi drive Ωx.
    pub omega_x: f64,
    /// Detuning Δ.
    pub delta: f64,
    /// σx measurement rate γx.
    pub gamma_x: f64,
    /// σz measurement rate γz.
    pub gamma_z: f64,
    /// Energy relaxation rate γrel.
    pub gamma_rel: f64,
    /// Pure dephasing rate γφ.
    pub gamma_phi: f64,
    /// Multiplier turning quoted rates into angular rates (2π when rates are
    /// quoted in units of 2π MHz, 1 for plain rate numbers).
    pub rate_scale: f64,
    /// Detector efficiency used to generate measurement records.
    pub eta_true: f64,
    /// Routing threshold S_th.
    pub s_th: f64,
    /// Decision time T.
    pub t_final: f64,
    /// Number of grid points including t = 0.
    pub n_steps: usize,
    pub n_traj: usize,
    pub base_seed: u64,
    /// Ground-truth Euler substeps per record step.
    pub truth_substeps: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SimParams {
    /// The reference parameter set (rates in units of 2π MHz, T = 10 µs).
    pub fn reference() -> Self {
        Self {
            omega_x: 1.0,
            delta: 0.5,
            gamma_x: 0.1,
            gamma_z: 0.1,
            gamma_rel: 0.01,
            gamma_phi: 0.01,
            rate_scale: TAU,
            eta_true: 0.7,
            s_th: 0.7,
            t_final: 10.0,
            n_steps: 2001,
            n_traj: 3000,
            base_seed: 20_240_917,
            truth_substeps: 4,
        }
    }

    /// Record time step `t_final / (n_steps - 1)`; zero for a degenerate grid.
    pub fn dt(&self) -> f64 {
        if self.n_steps < 2 {
            0.0
        } else {
            self.t_final / (self.n_steps - 1) as f64
        }
    }

    /// Grid times `t_i = i dt`.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_steps).map(|i| i as f64 * dt).collect()
    }

    /// Angular rates used by the dynamics.
    pub fn rates(&self) -> Rates {
        let s = self.rate_scale;
        Rates {
            omega_x: s * self.omega_x,
            delta: s * self.delta,
            gamma_x: s * self.gamma_x,
            gamma_z: s * self.gamma_z,
            gamma_rel: s * self.gamma_rel,
            gamma_phi: s * self.gamma_phi,
        }
    }

    /// Composite rates in quoted units.
    pub fn derived(&self) -> DerivedRates {
        DerivedRates::new(self.gamma_x, self.gamma_z, self.gamma_rel, self.gamma_phi)
    }

    pub fn with_eta_true(mut self, eta: f64) -> Self {
        self.eta_true = eta;
        self
    }

    pub fn with_n_traj(mut self, n: usize) -> Self {
        self.n_traj = n;
        self
    }
}

/// Angular rates fed to the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub omega_x: f64,
    pub delta: f64,
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub gamma_rel: f64,
    pub gamma_phi: f64,
}

impl Rates {
    /// All rates and drives zero: a frozen qubit.
    pub fn frozen() -> Self {
        Self {
            omega_x: 0.0,
            delta: 0.0,
            gamma_x: 0.0,
            gamma_z: 0.0,
            gamma_rel: 0.0,
            gamma_phi: 0.0,
        }
    }

    pub fn derived(&self) -> DerivedRates {
        DerivedRates::new(self.gamma_x, self.gamma_z, self.gamma_rel, self.gamma_phi)
    }
}

/// Component-specific dephasing rates and totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    /// Γx = 2γz + 2γφ + γrel/2, the decay rate of x.
    pub big_gamma_x: f64,
    /// Γy = 2γx + 2γz + 2γφ + γrel/2, the decay rate of y.
    pub big_gamma_y: f64,
    /// Γb = (Γx + Γy)/2.
    pub big_gamma_b: f64,
    /// Population decay rate of z, 2γx + γrel.
    pub gamma_longitudinal: f64,
    /// γ = γx + γz.
    pub gamma_meas: f64,
    /// γ_dec = γrel + γφ.
    pub gamma_dec: f64,
}

impl DerivedRates {
    fn new(gamma_x: f64, gamma_z: f64, gamma_rel: f64, gamma_phi: f64) -> Self {
        let big_gamma_x = 2.0 * gamma_z + 2.0 * gamma_phi + 0.5 * gamma_rel;
        let big_gamma_y = 2.0 * gamma_x + big_gamma_x;
        Self {
            big_gamma_x,
            big_gamma_y,
            big_gamma_b: 0.5 * (big_gamma_x + big_gamma_y),
            gamma_longitudinal: 2.0 * gamma_x + gamma_rel,
            gamma_meas: gamma_x + gamma_z,
            gamma_dec: gamma_rel + gamma_phi,
        }
    }
}

/// Checks every knob and returns the parameters unchanged when valid.
pub fn validate_params(p: SimParams) -> Result<SimParams> {
    let rates = [
        ("omega_x", p.omega_x),
        ("delta", p.delta),
        ("gamma_x", p.gamma_x),
        ("gamma_z", p.gamma_z),
        ("gamma_rel", p.gamma_rel),
        ("gamma_phi", p.gamma_phi),
    ];
    for (name, value) in rates {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::RateNegative { name, value });
        }
    }
    if !(p.rate_scale.is_finite() && p.rate_scale > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rate_scale",
            reason: format!("must be positive, got {}", p.rate_scale),
        });
    }
    if !(p.eta_true > 0.0 && p.eta_true <= 1.0) {
        return Err(Error::EfficiencyOutOfRange(p.eta_true));
    }
    if !(0.0..=1.0).contains(&p.s_th) {
        return Err(Error::ThresholdOutOfRange(p.s_th));
    }
    if p.n_steps < 2 || !(p.t_final.is_finite() && p.t_final > 0.0) {
        return Err(Error::NonPositiveDt { t_final: p.t_final, n_steps: p.n_steps });
    }
    if p.n_traj == 0 {
        return Err(Error::InvalidParameter {
            name: "n_traj",
            reason: "at least one trajectory is required".into(),
        });
    }
    if p.truth_substeps == 0 {
        return Err(Error::InvalidParameter {
            name: "truth_substeps",
            reason: "at least one substep is required".into(),
        });
    }
    Ok(p)
}
