//! Normalized SME filter in matrix form with eigenvalue-clipping repair.

use num_complex::Complex64;

use crate::dynamics::signal_gain;
use crate::error::{Error, Result};
use crate::params::Rates;
use crate::state::{
    matrix_from_components, pauli_components, sigma_minus, sigma_x, sigma_z, Bloch, Mat2,
    QubitState,
};

/// Eigenvalue threshold below which a repair is counted.
pub const REPAIR_TOL: f64 = 1e-12;

#[inline]
fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `L ρ L† − ½{L†L, ρ}`.
#[inline]
fn dissipator(l: &Mat2, rho: &Mat2) -> Mat2 {
    let ld = l.adjoint();
    let ldl = ld * l;
    l * rho * ld - (ldl * rho + rho * ldl) * re(0.5)
}

/// `c ρ + ρ c† − Tr[(c + c†) ρ] ρ` for Hermitian `c`.
#[inline]
fn innovation(c: &Mat2, rho: &Mat2) -> Mat2 {
    let e = ((c * rho).trace() * re(2.0)).re;
    c * rho + rho * c - rho * re(e)
}

/// Full deterministic generator: Hamiltonian plus all dissipators.
pub fn lindblad_generator(rho: &Mat2, rates: &Rates) -> Mat2 {
    let h = sigma_x() * re(0.5 * rates.omega_x) + sigma_z() * re(0.5 * rates.delta);
    let minus_i = Complex64::new(0.0, -1.0);
    (h * rho - rho * h) * minus_i
        + dissipator(&sigma_minus(), rho) * re(rates.gamma_rel)
        + dissipator(&sigma_z(), rho) * re(rates.gamma_phi + rates.gamma_z)
        + dissipator(&sigma_x(), rho) * re(rates.gamma_x)
}

/// Projects a (nearly) Hermitian matrix onto unit-trace PSD matrices by
/// clipping negative eigenvalues and renormalizing the trace.
pub fn psd_repair(h: &Mat2) -> Result<(QubitState, bool)> {
    let sym = (h + h.adjoint()) * re(0.5);
    let trace = sym.trace().re;
    let r = pauli_components(&sym);
    let len = r.norm();
    // Eigenvalues (t ± |r|)/2 along ±r̂.
    let lam_hi = 0.5 * (trace + len);
    let lam_lo = 0.5 * (trace - len);
    let repaired = lam_lo < -REPAIR_TOL || (trace - 1.0).abs() > REPAIR_TOL;
    let hi = lam_hi.max(0.0);
    let lo = lam_lo.max(0.0);
    let total = hi + lo;
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroTrace);
    }
    let bloch = if len > 0.0 { r * ((hi - lo) / (total * len)) } else { Bloch::zeros() };
    Ok((QubitState::from_bloch_unchecked(&bloch), repaired))
}

/// One Euler–Maruyama step of the normalized SME at efficiency `eta_a`,
/// driven by the innovations of the record increment, then PSD repair.
pub fn direct_sme_step(
    est: &QubitState,
    j_x: f64,
    j_z: f64,
    rates: &Rates,
    eta_a: f64,
    dt: f64,
) -> Result<(QubitState, bool)> {
    let rho = est.rho();
    let r = est.bloch();
    let dw_x = j_x - signal_gain(eta_a, rates.gamma_x) * r.x * dt;
    let dw_z = j_z - signal_gain(eta_a, rates.gamma_z) * r.z * dt;
    let next = rho
        + lindblad_generator(rho, rates) * re(dt)
        + innovation(&sigma_x(), rho) * re((eta_a * rates.gamma_x).sqrt() * dw_x)
        + innovation(&sigma_z(), rho) * re((eta_a * rates.gamma_z).sqrt() * dw_z);
    if next.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NumericalDivergence { step: 0 });
    }
    psd_repair(&next)
}

/// Stateful wrapper used by the ensemble driver.
#[derive(Debug, Clone)]
pub struct DirectSme {
    pub(crate) state: QubitState,
    pub(crate) rates: Rates,
    pub(crate) eta_a: f64,
    pub(crate) dt: f64,
    pub(crate) repairs: usize,
}

impl DirectSme {
    pub fn new(r0: &Bloch, rates: Rates, eta_a: f64, dt: f64) -> Self {
        Self { state: QubitState::from_bloch_unchecked(r0), rates, eta_a, dt, repairs: 0 }
    }

    pub fn step(&mut self, j_x: f64, j_z: f64) -> Result<()> {
        let (next, repaired) =
            direct_sme_step(&self.state, j_x, j_z, &self.rates, self.eta_a, self.dt)?;
        self.state = next;
        self.repairs += usize::from(repaired);
        Ok(())
    }

    pub fn state(&self) -> &QubitState {
        &self.state
    }
}

/// Rebuilds a matrix from trace and Bloch components; used by tests and the
/// unnormalized filter.
pub(crate) fn unnormalized(trace: f64, r: &Bloch) -> Mat2 {
    matrix_from_components(trace, r)
}
