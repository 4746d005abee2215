//! Extended Kalman filter on the Bloch vector with ball projection.
//!
//! The deterministic Bloch drift is affine, so its Jacobian is constant and
//! the prediction is exact up to Euler discretization. The observation model
//! is `J_k = sqrt(4 η_a γk) r_k dt + noise` with noise variance `dt`. No
//! process noise is injected.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, SymmetricEigen};

use crate::dynamics::{deterministic_drift, signal_gain};
use crate::error::{Error, Result};
use crate::params::Rates;
use crate::state::{project_to_ball, Bloch};

pub type Cov = Matrix3<f64>;

pub const EIGEN_FLOOR: f64 = 1e-12;
pub const COV_LIMIT: f64 = 1e6;

/// Jacobian of [`deterministic_drift`].
pub fn drift_jacobian(rates: &Rates) -> Matrix3<f64> {
    let d = rates.derived();
    Matrix3::new(
        -d.big_gamma_x,
        -rates.delta,
        0.0,
        rates.delta,
        -d.big_gamma_y,
        -rates.omega_x,
        0.0,
        rates.omega_x,
        -d.gamma_longitudinal,
    )
}

/// Symmetrizes and floors eigenvalues at [`EIGEN_FLOOR`].
pub fn condition_covariance(cov: &Cov) -> Result<Cov> {
    let sym = (cov + cov.transpose()) * 0.5;
    let shifted = sym - Cov::identity() * EIGEN_FLOOR;
    let fast_ok = shifted.cholesky().is_some() && sym.trace() <= COV_LIMIT;
    if fast_ok {
        return Ok(sym);
    }
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    if !max.is_finite() || max > COV_LIMIT {
        return Err(Error::CovarianceBlowup(max));
    }
    let floored = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let v = eig.eigenvectors;
    let out = v * Matrix3::from_diagonal(&floored) * v.transpose();
    Ok((out + out.transpose()) * 0.5)
}

/// Kalman measurement update for the linear model `y = H r + v`,
/// `v ~ N(0, R)`. Returns the posterior mean and covariance.
pub fn kalman_update(
    r: &Bloch,
    cov: &Cov,
    y: &nalgebra::Vector2<f64>,
    h: &Matrix2x3<f64>,
    noise: &Matrix2<f64>,
) -> Option<(Bloch, Cov)> {
    let innov = y - h * r;
    let s = h * cov * h.transpose() + noise;
    let s_inv = s.try_inverse()?;
    let gain = cov * h.transpose() * s_inv;
    let post = r + gain * innov;
    let post_cov = (Cov::identity() - gain * h) * cov;
    Some((post, post_cov))
}

/// One predict-update cycle. Returns `(r', P', projected)`.
pub fn ekf_step(
    r_est: &Bloch,
    cov: &Cov,
    j_x: f64,
    j_z: f64,
    rates: &Rates,
    eta_a: f64,
    dt: f64,
) -> Result<(Bloch, Cov, bool)> {
    let f = Cov::identity() + drift_jacobian(rates) * dt;
    let r_pred = r_est + deterministic_drift(r_est, rates) * dt;
    let cov_pred = f * cov * f.transpose();
    let h = Matrix2x3::new(
        signal_gain(eta_a, rates.gamma_x) * dt,
        0.0,
        0.0,
        0.0,
        0.0,
        signal_gain(eta_a, rates.gamma_z) * dt,
    );
    let y = nalgebra::Vector2::new(j_x, j_z);
    let (mut r, cov_post) = kalman_update(&r_pred, &cov_pred, &y, &h, &(Matrix2::identity() * dt))
        .ok_or(Error::CovarianceBlowup(f64::INFINITY))?;
    if !(r.x.is_finite() && r.y.is_finite() && r.z.is_finite()) {
        return Err(Error::NumericalDivergence { step: 0 });
    }
    let projected = project_to_ball(&mut r);
    Ok((r, condition_covariance(&cov_post)?, projected))
}

#[derive(Debug, Clone)]
pub struct Ekf {
    pub(crate) r: Bloch,
    pub(crate) cov: Cov,
    pub(crate) rates: Rates,
    pub(crate) eta_a: f64,
    pub(crate) dt: f64,
    pub(crate) projections: usize,
}

impl Ekf {
    pub fn new(r0: &Bloch, cov_init: f64, rates: Rates, eta_a: f64, dt: f64) -> Self {
        Self { r: *r0, cov: Cov::identity() * cov_init, rates, eta_a, dt, projections: 0 }
    }

    pub fn step(&mut self, j_x: f64, j_z: f64) -> Result<()> {
        let (r, cov, projected) =
            ekf_step(&self.r, &self.cov, j_x, j_z, &self.rates, self.eta_a, self.dt)?;
        self.r = r;
        self.cov = cov;
        self.projections += usize::from(projected);
        Ok(())
    }

    pub fn bloch(&self) -> Bloch {
        self.r
    }

    pub fn covariance(&self) -> &Cov {
        &self.cov
    }
}
