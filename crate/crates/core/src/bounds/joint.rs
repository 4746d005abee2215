//! The joint true/estimate diffusion and the squared-coherence error process.

use nalgebra::{Vector3, Vector6};

use crate::dynamics::{backaction, bloch_drift, deterministic_drift};
use crate::params::Rates;
use crate::state::{project_to_ball, Bloch};

pub type Vec6 = Vector6<f64>;

/// A point `X = (r, r̂)` of the domain `K` (two closed unit balls).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub r: Bloch,
    pub r_hat: Bloch,
}

impl JointState {
    pub fn new(r: Bloch, r_hat: Bloch) -> Self {
        Self { r, r_hat }
    }

    pub fn from_vec6(v: &Vec6) -> Self {
        Self { r: Vector3::new(v[0], v[1], v[2]), r_hat: Vector3::new(v[3], v[4], v[5]) }
    }

    pub fn to_vec6(&self) -> Vec6 {
        Vec6::new(self.r.x, self.r.y, self.r.z, self.r_hat.x, self.r_hat.y, self.r_hat.z)
    }

    pub fn in_domain(&self) -> bool {
        self.r.norm() <= 1.0 && self.r_hat.norm() <= 1.0
    }

    /// Radially projects each half into its ball.
    pub fn project(&mut self) -> bool {
        let a = project_to_ball(&mut self.r);
        let b = project_to_ball(&mut self.r_hat);
        a || b
    }
}

/// `E = (x̂² + ŷ²) − (x² + y²)`.
#[inline]
pub fn error_value(x: &JointState) -> f64 {
    x.r_hat.x * x.r_hat.x + x.r_hat.y * x.r_hat.y - x.r.x * x.r.x - x.r.y * x.r.y
}

/// `∇E = (−2x, −2y, 0, 2x̂, 2ŷ, 0)`.
#[inline]
pub fn error_gradient(x: &JointState) -> Vec6 {
    Vec6::new(-2.0 * x.r.x, -2.0 * x.r.y, 0.0, 2.0 * x.r_hat.x, 2.0 * x.r_hat.y, 0.0)
}

/// Diagonal of `∇²E`.
pub const ERROR_HESSIAN_DIAG: [f64; 6] = [-2.0, -2.0, 0.0, 2.0, 2.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCoefficients {
    pub a: Vec6,
    pub b_x: Vec6,
    pub b_z: Vec6,
}

/// Drift and the two diffusion columns of the joint SDE driven by the true
/// Wiener increments. The estimate sees the record through innovations
/// `dŴ_k = 2(sqrt(η γk) r_k − sqrt(η_a γk) r̂_k) dt + dW_k`.
pub fn joint_sde_coefficients(
    x: &JointState,
    rates: &Rates,
    eta_true: f64,
    eta_a: f64,
) -> JointCoefficients {
    let t = bloch_drift(&x.r, rates, eta_true);
    let (hb_x, hb_z) = backaction(&x.r_hat, rates, eta_a);
    let sx = 2.0
        * ((eta_true * rates.gamma_x).sqrt() * x.r.x - (eta_a * rates.gamma_x).sqrt() * x.r_hat.x);
    let sz = 2.0
        * ((eta_true * rates.gamma_z).sqrt() * x.r.z - (eta_a * rates.gamma_z).sqrt() * x.r_hat.z);
    let ha = deterministic_drift(&x.r_hat, rates) + hb_x * sx + hb_z * sz;
    let join = |u: Bloch, v: Bloch| Vec6::new(u.x, u.y, u.z, v.x, v.y, v.z);
    JointCoefficients { a: join(t.a, ha), b_x: join(t.b_x, hb_x), b_z: join(t.b_z, hb_z) }
}

/// Itô decomposition `dE = b dt + β_x dW_x + β_z dW_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EDrift {
    pub b: f64,
    pub beta_x: f64,
    pub beta_z: f64,
    /// `∇E · (deterministic drift of both halves)`.
    pub restoring: f64,
    /// `∇E ·` record-substitution drift of the estimate.
    pub coupling: f64,
    /// `½ Σ_k B_kᵀ ∇²E B_k`.
    pub ito: f64,
}

#[inline]
fn hess_quad(v: &Vec6) -> f64 {
    ERROR_HESSIAN_DIAG.iter().zip(v.iter()).map(|(h, c)| h * c * c).sum()
}

pub fn e_drift_diffusion(x: &JointState, rates: &Rates, eta_true: f64, eta_a: f64) -> EDrift {
    let c = joint_sde_coefficients(x, rates, eta_true, eta_a);
    let g = error_gradient(x);
    let det_t = deterministic_drift(&x.r, rates);
    let det_h = deterministic_drift(&x.r_hat, rates);
    let det = Vec6::new(det_t.x, det_t.y, det_t.z, det_h.x, det_h.y, det_h.z);
    let restoring = g.dot(&det);
    let total_drift = g.dot(&c.a);
    let ito = 0.5 * (hess_quad(&c.b_x) + hess_quad(&c.b_z));
    EDrift {
        b: total_drift + ito,
        beta_x: g.dot(&c.b_x),
        beta_z: g.dot(&c.b_z),
        restoring,
        coupling: total_drift - restoring,
        ito,
    }
}

/// One Euler–Maruyama step of the joint SDE with ball projection.
pub fn joint_euler_step(
    x: &JointState,
    dw_x: f64,
    dw_z: f64,
    rates: &Rates,
    eta_true: f64,
    eta_a: f64,
    dt: f64,
) -> JointState {
    let c = joint_sde_coefficients(x, rates, eta_true, eta_a);
    let v = x.to_vec6() + c.a * dt + c.b_x * dw_x + c.b_z * dw_z;
    let mut next = JointState::from_vec6(&v);
    next.project();
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gating::coherence_of;
    use crate::params::SimParams;
    use crate::rng::NoiseStream;
    use approx::assert_abs_diff_eq;

    fn rates() -> Rates {
        SimParams::reference().rates()
    }

    #[test]
    fn error_value_examples() {
        let r = Bloch::new(0.3, 0.2, 0.1);
        assert_eq!(error_value(&JointState::new(r, r)), 0.0);
        let x = JointState::new(Bloch::new(0.0, 0.0, 1.0), Bloch::new(1.0, 0.0, 0.0));
        assert_eq!(error_value(&x), 1.0);
        let mut noise = NoiseStream::from_seed(8);
        for _ in 0..100 {
            let mut v = || 0.5 * (2.0 * noise.uniform() - 1.0);
            let x = JointState::new(Bloch::new(v(), v(), v()), Bloch::new(v(), v(), v()));
            let want = coherence_of(&x.r_hat).powi(2) - coherence_of(&x.r).powi(2);
            assert_abs_diff_eq!(error_value(&x), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = JointState::new(Bloch::new(0.3, -0.4, 0.2), Bloch::new(0.5, 0.1, -0.3));
        let g = error_gradient(&x);
        let h = 1e-6;
        for i in 0..6 {
            let mut up = x.to_vec6();
            let mut dn = x.to_vec6();
            up[i] += h;
            dn[i] -= h;
            let fd = (error_value(&JointState::from_vec6(&up))
                - error_value(&JointState::from_vec6(&dn)))
                / (2.0 * h);
            assert_abs_diff_eq!(g[i], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn locked_filter_duplicates_truth_rows() {
        let r = Bloch::new(0.4, 0.3, -0.2);
        let c = joint_sde_coefficients(&JointState::new(r, r), &rates(), 0.7, 0.7);
        for i in 0..3 {
            assert_abs_diff_eq!(c.a[i], c.a[i + 3], epsilon = 1e-14);
            assert_abs_diff_eq!(c.b_x[i], c.b_x[i + 3], epsilon = 1e-14);
            assert_abs_diff_eq!(c.b_z[i], c.b_z[i + 3], epsilon = 1e-14);
        }
        let d = e_drift_diffusion(&JointState::new(r, r), &rates(), 0.7, 0.7);
        assert_abs_diff_eq!(d.ito, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.b, 0.0, epsilon = 1e-14);
        assert!(d.beta_x.is_finite() && d.beta_z.is_finite());
    }

    #[test]
    fn restoring_terms_have_closed_form() {
        let rt = rates();
        let d = rt.derived();
        let x = JointState::new(Bloch::new(0.2, -0.5, 0.3), Bloch::new(0.6, 0.1, -0.4));
        let e = e_drift_diffusion(&x, &rt, 0.7, 0.7);
        let (r, h) = (x.r, x.r_hat);
        // The Ω coupling enters as −2Ωx(ŷẑ − yz) with the rotation sense used
        // here; the opposite sense (y → −y) flips its sign.
        let want = -2.0 * d.big_gamma_x * (h.x * h.x - r.x * r.x)
            - 2.0 * d.big_gamma_y * (h.y * h.y - r.y * r.y)
            - 2.0 * rt.omega_x * (h.y * h.z - r.y * r.z);
        assert_abs_diff_eq!(e.restoring, want, epsilon = 1e-12);
    }

    #[test]
    fn ito_forcing_is_negative_for_conservative_filter() {
        let rt = rates();
        let r = Bloch::new(0.5, 0.3, 0.4);
        let (eta, eta_a) = (0.7, 0.35);
        let e = e_drift_diffusion(&JointState::new(r, r), &rt, eta, eta_a);
        let s2 = r.x * r.x + r.y * r.y;
        let form = 4.0
            * (eta_a - eta)
            * (rt.gamma_x * ((1.0 - r.x * r.x).powi(2) + r.x * r.x * r.y * r.y)
                + rt.gamma_z * s2 * r.z * r.z);
        assert_abs_diff_eq!(e.ito, form, epsilon = 1e-12);
        assert!(e.ito < 0.0);
    }

    #[test]
    fn gradient_vanishes_on_the_axis() {
        let x = JointState::new(Bloch::new(0.0, 0.0, 0.5), Bloch::new(0.0, 0.0, -0.2));
        let e = e_drift_diffusion(&x, &rates(), 0.7, 0.35);
        assert_eq!(e.beta_x, 0.0);
        assert_eq!(e.beta_z, 0.0);
    }

    #[test]
    fn drift_matches_monte_carlo_increment() {
        // Small-step Monte Carlo estimate of E[dE]/h at a fixed interior point.
        let p = SimParams::reference();
        let rt = p.rates();
        let x = JointState::new(Bloch::new(0.5, 0.2, 0.1), Bloch::new(0.4, -0.1, 0.2));
        let e = e_drift_diffusion(&x, &rt, 0.7, 0.35);
        let h = 1e-3;
        let m = 4_000_000;
        let e0 = error_value(&x);
        let mut noise = NoiseStream::from_seed(21);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..m {
            let (a, b) = noise.increments(h);
            // Antithetic pairs cancel the martingale part exactly.
            let up = joint_euler_step(&x, a, b, &rt, 0.7, 0.35, h);
            let dn = joint_euler_step(&x, -a, -b, &rt, 0.7, 0.35, h);
            let v = (0.5 * (error_value(&up) + error_value(&dn)) - e0) / h;
            sum += v;
            sum_sq += v * v;
        }
        let n = m as f64;
        let mean = sum / n;
        let se = ((sum_sq / n - mean * mean) / n).sqrt();
        // Euler discretization bias of a quadratic functional: ½ h aᵀ∇²E a.
        let a = joint_sde_coefficients(&x, &rt, 0.7, 0.35).a;
        let bias: f64 =
            0.5 * h * ERROR_HESSIAN_DIAG.iter().zip(a.iter()).map(|(d, c)| d * c * c).sum::<f64>();
        let tol = 5.0 * se + bias.abs() + 1e-3;
        assert!((mean - e.b).abs() < tol, "MC {mean} vs b {} (tol {tol})", e.b);
    }
}
