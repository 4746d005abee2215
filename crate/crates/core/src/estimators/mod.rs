//! State estimators that consume a measurement record at an assumed
//! efficiency.
//!
//! All filters start from the true initial state and read the same record;
//! they differ in how they keep the estimate physical.

pub mod direct;
pub mod ekf;
pub mod zakai;

use serde::{Deserialize, Serialize};

use crate::dynamics::{MeasurementRecord, INITIAL_BLOCH};
use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::state::{Bloch, QubitState};

pub use direct::{direct_sme_step, psd_repair, DirectSme};
pub use ekf::{ekf_step, Ekf};
pub use zakai::{zakai_step, ZakaiFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    DirectSme,
    Zakai,
    Ekf,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::DirectSme => "direct_sme",
            Self::Zakai => "zakai",
            Self::Ekf => "ekf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct_sme" | "direct" => Some(Self::DirectSme),
            "zakai" => Some(Self::Zakai),
            "ekf" => Some(Self::Ekf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub eta_assumed: f64,
    /// Steps between trace renormalizations (Zakai only).
    pub renorm_period: usize,
    /// Initial covariance scale, `P0 = cov_init · I` (EKF only).
    pub cov_init: f64,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind, eta_assumed: f64) -> Self {
        Self { kind, eta_assumed, renorm_period: 50, cov_init: 0.01 }
    }

    pub fn direct(eta_assumed: f64) -> Self {
        Self::new(EstimatorKind::DirectSme, eta_assumed)
    }

    pub fn zakai(eta_assumed: f64) -> Self {
        Self::new(EstimatorKind::Zakai, eta_assumed)
    }

    pub fn ekf(eta_assumed: f64) -> Self {
        Self::new(EstimatorKind::Ekf, eta_assumed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_assumed > 0.0 && self.eta_assumed <= 1.0) {
            return Err(Error::EfficiencyOutOfRange(self.eta_assumed));
        }
        if self.renorm_period == 0 {
            return Err(Error::InvalidParameter {
                name: "renorm_period",
                reason: "must be at least one step".into(),
            });
        }
        if !(self.cov_init.is_finite() && self.cov_init >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "cov_init",
                reason: format!("must be non-negative, got {}", self.cov_init),
            });
        }
        Ok(())
    }
}

/// The six filter configurations benchmarked against the ground truth.
pub fn benchmark_configs() -> Vec<EstimatorConfig> {
    vec![
        EstimatorConfig::direct(0.7),
        EstimatorConfig::direct(0.35),
        EstimatorConfig::direct(0.3),
        EstimatorConfig::zakai(0.7),
        EstimatorConfig::ekf(0.7),
        EstimatorConfig::ekf(1.0),
    ]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EstimatorDiagnostics {
    pub psd_repairs: usize,
    /// Accumulated log trace of the unnormalized state (Zakai only).
    pub weight_log: f64,
    /// Ball projections (EKF only).
    pub projections: usize,
    pub diverged: bool,
}

/// Any of the three filters behind one interface.
#[derive(Debug, Clone)]
pub enum Filter {
    Direct(DirectSme),
    Zakai(ZakaiFilter),
    Ekf(Ekf),
}

impl Filter {
    pub fn new(cfg: &EstimatorConfig, p: &SimParams, r0: &Bloch) -> Result<Self> {
        cfg.validate()?;
        let rates = p.rates();
        let dt = p.dt();
        let eta = cfg.eta_assumed;
        Ok(match cfg.kind {
            EstimatorKind::DirectSme => Self::Direct(DirectSme::new(r0, rates, eta, dt)),
            EstimatorKind::Zakai => {
                Self::Zakai(ZakaiFilter::new(r0, rates, eta, dt, cfg.renorm_period))
            }
            EstimatorKind::Ekf => Self::Ekf(Ekf::new(r0, cfg.cov_init, rates, eta, dt)),
        })
    }

    pub fn step(&mut self, j_x: f64, j_z: f64) -> Result<()> {
        match self {
            Self::Direct(f) => f.step(j_x, j_z),
            Self::Zakai(f) => f.step(j_x, j_z),
            Self::Ekf(f) => f.step(j_x, j_z),
        }
    }

    pub fn bloch(&self) -> Bloch {
        match self {
            Self::Direct(f) => f.state().bloch(),
            Self::Zakai(f) => f.bloch(),
            Self::Ekf(f) => f.bloch(),
        }
    }

    pub fn diagnostics(&self) -> EstimatorDiagnostics {
        match self {
            Self::Direct(f) => {
                EstimatorDiagnostics { psd_repairs: f.repairs, ..Default::default() }
            }
            Self::Zakai(f) => {
                EstimatorDiagnostics { weight_log: f.weight_log(), ..Default::default() }
            }
            Self::Ekf(f) => {
                EstimatorDiagnostics { projections: f.projections, ..Default::default() }
            }
        }
    }
}

/// Filters a stored record from the shared initial state.
///
/// A step failure freezes the estimate at its last value and sets
/// `diverged`; the returned trajectory always has `record.len() + 1` states.
pub fn run_estimator(
    record: &MeasurementRecord,
    cfg: &EstimatorConfig,
    p: &SimParams,
) -> Result<(Vec<QubitState>, EstimatorDiagnostics)> {
    let mut filter = Filter::new(cfg, p, &INITIAL_BLOCH)?;
    let mut out = Vec::with_capacity(record.len() + 1);
    out.push(QubitState::from_bloch_unchecked(&filter.bloch()));
    let mut diverged = false;
    for (&j_x, &j_z) in record.j_x.iter().zip(&record.j_z) {
        if !diverged && filter.step(j_x, j_z).is_err() {
            diverged = true;
        }
        out.push(QubitState::from_bloch_unchecked(&filter.bloch()));
    }
    let mut diag = filter.diagnostics();
    diag.diverged = diverged;
    Ok((out, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate_trajectory;

    fn short() -> SimParams {
        SimParams { n_steps: 401, t_final: 2.0, ..SimParams::reference() }
    }

    #[test]
    fn estimators_are_deterministic() {
        let p = short();
        let t = simulate_trajectory(&p, 2);
        for cfg in benchmark_configs() {
            let (a, da) = run_estimator(&t.record, &cfg, &p).unwrap();
            let (b, db) = run_estimator(&t.record, &cfg, &p).unwrap();
            assert_eq!(a, b);
            assert_eq!(da, db);
            assert_eq!(a.len(), p.n_steps);
        }
    }

    #[test]
    fn readouts_are_physical() {
        let p = short();
        for i in 0..5 {
            let t = simulate_trajectory(&p, i);
            for cfg in benchmark_configs() {
                let (states, d) = run_estimator(&t.record, &cfg, &p).unwrap();
                assert!(!d.diverged);
                for s in &states {
                    assert!(s.bloch().norm() <= 1.0 + 1e-9);
                    assert!((s.rho().trace().re - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zakai_needs_no_repairs() {
        let p = short();
        let t = simulate_trajectory(&p, 0);
        let (_, d) = run_estimator(&t.record, &EstimatorConfig::zakai(0.7), &p).unwrap();
        assert_eq!(d.psd_repairs, 0);
        assert!(d.weight_log.is_finite());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = short();
        let t = simulate_trajectory(&p, 0);
        let err = run_estimator(&t.record, &EstimatorConfig::direct(1.5), &p).unwrap_err();
        assert_eq!(err, Error::EfficiencyOutOfRange(1.5));
    }

    #[test]
    fn kind_labels_round_trip() {
        for k in [EstimatorKind::DirectSme, EstimatorKind::Zakai, EstimatorKind::Ekf] {
            assert_eq!(EstimatorKind::parse(k.label()), Some(k));
        }
    }
}
