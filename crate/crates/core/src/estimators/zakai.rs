//! Unnormalized linear (Zakai) filter.
//!
//! The linear update `dρ̃ = L(ρ̃) dt + Σ_k sqrt(η_a γk)(σk ρ̃ + ρ̃ σk) J_k` is
//! discretized in Kraus form,
//!
//! ```text
//! ρ̃' = M ρ̃ M† + dt [γrel σ₋ρ̃σ₊ + γφ σzρ̃σz + Σ_k (1 − η_a) γk σkρ̃σk]
//! M  = I − iH dt − ½K dt + Σ_k sqrt(η_a γk) σk J_k
//! ```
//!
//! with `K = Σ L†L`. It agrees with the linear update to first order (using
//! `J_k² ≈ dt`) and is completely positive for any record, so the readout
//! `ρ̃ / Tr ρ̃` never needs repairing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Rates;
use crate::state::{identity, pauli_components, sigma_minus, sigma_x, sigma_z, Bloch, Mat2};

/// Largest `|ln Tr ρ̃|` tolerated between renormalizations.
pub const LOG_WEIGHT_LIMIT: f64 = 30.0;

#[inline]
fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// One unnormalized step.
pub fn zakai_step(
    rho_unnorm: &Mat2,
    j_x: f64,
    j_z: f64,
    rates: &Rates,
    eta_a: f64,
    dt: f64,
) -> Mat2 {
    let sx = sigma_x();
    let sz = sigma_z();
    let sm = sigma_minus();
    let ham = sx * re(0.5 * rates.omega_x) + sz * re(0.5 * rates.delta);
    let k = sm.adjoint() * sm * re(rates.gamma_rel)
        + identity() * re(rates.gamma_phi + rates.gamma_x + rates.gamma_z);
    let m = identity() - ham * Complex64::new(0.0, dt) - k * re(0.5 * dt)
        + sx * re((eta_a * rates.gamma_x).sqrt() * j_x)
        + sz * re((eta_a * rates.gamma_z).sqrt() * j_z);
    let rho = rho_unnorm;
    let jump = sm * rho * sm.adjoint() * re(rates.gamma_rel)
        + sz * rho * sz * re(rates.gamma_phi + (1.0 - eta_a) * rates.gamma_z)
        + sx * rho * sx * re((1.0 - eta_a) * rates.gamma_x);
    let next = m * rho * m.adjoint() + jump * re(dt);
    // Exact Hermitian symmetrization keeps round-off from accumulating.
    (next + next.adjoint()) * re(0.5)
}

#[derive(Debug, Clone)]
pub struct ZakaiFilter {
    pub(crate) rho: Mat2,
    pub(crate) rates: Rates,
    pub(crate) eta_a: f64,
    pub(crate) dt: f64,
    pub(crate) renorm_period: usize,
    pub(crate) since_renorm: usize,
    /// Accumulated `ln Tr ρ̃` over all renormalizations.
    pub(crate) weight_log: f64,
}

impl ZakaiFilter {
    pub fn new(r0: &Bloch, rates: Rates, eta_a: f64, dt: f64, renorm_period: usize) -> Self {
        Self {
            rho: super::direct::unnormalized(1.0, r0),
            rates,
            eta_a,
            dt,
            renorm_period: renorm_period.max(1),
            since_renorm: 0,
            weight_log: 0.0,
        }
    }

    pub fn step(&mut self, j_x: f64, j_z: f64) -> Result<()> {
        self.rho = zakai_step(&self.rho, j_x, j_z, &self.rates, self.eta_a, self.dt);
        self.since_renorm += 1;
        let log_tr = self.rho.trace().re.ln();
        if log_tr > LOG_WEIGHT_LIMIT {
            return Err(Error::WeightOverflow(log_tr));
        }
        if !(log_tr >= -LOG_WEIGHT_LIMIT) {
            return Err(Error::WeightUnderflow(log_tr));
        }
        if self.since_renorm >= self.renorm_period {
            self.rho /= re(self.rho.trace().re);
            self.weight_log += log_tr;
            self.since_renorm = 0;
        }
        Ok(())
    }

    /// Current trace of the unnormalized matrix.
    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn weight_log(&self) -> f64 {
        self.weight_log + self.trace().ln()
    }

    pub fn bloch(&self) -> Bloch {
        pauli_components(&self.rho) / self.trace()
    }
}
