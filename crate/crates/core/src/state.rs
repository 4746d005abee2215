//! Qubit density matrices and their Bloch-vector view.
//!
//! Basis convention: |0⟩ is the σz eigenstate with eigenvalue +1, so
//! `ρ = (I + xσx + yσy + zσz)/2` has `ρ00 = (1 + z)/2` and `ρ01 = (x − iy)/2`.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Bloch = Vector3<f64>;
pub type Mat2 = Matrix2<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_SLACK: f64 = 1e-9;
/// Largest Bloch length accepted by [`density_from_bloch`].
pub const BALL_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, ONE)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// σ₋ = |0⟩⟨1|, which relaxes toward z = +1.
pub fn sigma_minus() -> Mat2 {
    Mat2::new(ZERO, ONE, ZERO, ZERO)
}

/// Tr[σ_j h] for each Pauli matrix, valid for any 2×2 matrix.
pub fn pauli_components(h: &Mat2) -> Bloch {
    // Tr[σx h] = h01 + h10, Tr[σy h] = i(h01 − h10), Tr[σz h] = h00 − h11.
    let x = (h[(0, 1)] + h[(1, 0)]).re;
    let y = (I * (h[(0, 1)] - h[(1, 0)])).re;
    let z = (h[(0, 0)] - h[(1, 1)]).re;
    Bloch::new(x, y, z)
}

/// `(t I + xσx + yσy + zσz)/2`.
pub fn matrix_from_components(trace: f64, r: &Bloch) -> Mat2 {
    let half = 0.5;
    Mat2::new(
        Complex64::new(half * (trace + r.z), 0.0),
        Complex64::new(half * r.x, -half * r.y),
        Complex64::new(half * r.x, half * r.y),
        Complex64::new(half * (trace - r.z), 0.0),
    )
}

/// A Hermitian, unit-trace, positive semidefinite 2×2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    rho: Mat2,
}

impl QubitState {
    /// Validates Hermiticity, unit trace and positivity (within [`PSD_SLACK`]).
    pub fn new(rho: Mat2) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("non-Hermitian by {herm:e}")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > HERMITIAN_TOL || trace.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        let r = pauli_components(&rho).norm();
        if 0.5 * (1.0 - r) < -PSD_SLACK {
            return Err(Error::InvalidDensity(format!("negative eigenvalue, |r| = {r}")));
        }
        Ok(Self { rho })
    }

    /// Builds a state from a Bloch vector already known to lie in the ball.
    pub(crate) fn from_bloch_unchecked(r: &Bloch) -> Self {
        Self { rho: matrix_from_components(1.0, r) }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_bloch_unchecked(&Bloch::zeros())
    }

    /// |+⟩ = (|0⟩ + |1⟩)/√2, Bloch vector (1, 0, 0).
    pub fn plus() -> Self {
        Self::from_bloch_unchecked(&Bloch::new(1.0, 0.0, 0.0))
    }

    pub fn rho(&self) -> &Mat2 {
        &self.rho
    }

    pub fn bloch(&self) -> Bloch {
        pauli_components(&self.rho)
    }
}

/// Bloch vector `r_j = Tr[σ_j ρ]`.
pub fn bloch_from_density(s: &QubitState) -> Bloch {
    s.bloch()
}

/// Inverse map; vectors slightly outside the ball (up to [`BALL_TOL`]) are
/// pulled back onto the sphere.
pub fn density_from_bloch(r: &Bloch) -> Result<QubitState> {
    let n = r.norm();
    if !n.is_finite() || n > 1.0 + BALL_TOL {
        return Err(Error::BlochOutOfBall(n));
    }
    let r = if n > 1.0 { r / n } else { *r };
    Ok(QubitState::from_bloch_unchecked(&r))
}

/// Radially scales `r` into the closed unit ball. Returns whether it moved.
pub fn project_to_ball(r: &mut Bloch) -> bool {
    let n = r.norm();
    if n > 1.0 {
        *r /= n;
        true
    } else {
        false
    }
}
