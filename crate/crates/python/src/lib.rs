//! Python bindings. Bloch vectors cross the boundary as `(x, y, z)` tuples and
//! time series as lists.

use cohgate::bounds::{self, JointState, OuParams};
use cohgate::ensemble::{self, TerminalPair};
use cohgate::estimators::{EstimatorConfig, EstimatorKind};
use cohgate::state::matrix_from_components;
use cohgate::{certify, dynamics, estimators, gating, Bloch, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Vec3 = (f64, f64, f64);
/// `(states, j_x, j_z, diverged)`.
type Trajectory = (Vec<Vec3>, Vec<f64>, Vec<f64>, bool);
/// `(truth, estimates, repairs)` of one trajectory.
type EnsembleRow = (Vec3, Vec<Vec3>, Vec<usize>);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NumericalDivergence { .. }
        | Error::ZeroTrace
        | Error::WeightUnderflow(_)
        | Error::WeightOverflow(_)
        | Error::CovarianceBlowup(_)
        | Error::NonRestoringDrift(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn bloch((x, y, z): Vec3) -> Bloch {
    Bloch::new(x, y, z)
}

fn tuple(r: &Bloch) -> Vec3 {
    (r.x, r.y, r.z)
}

fn kind(name: &str) -> PyResult<EstimatorKind> {
    EstimatorKind::parse(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown estimator `{name}`")))
}

/// Physical and numerical parameters; defaults are the reference set.
#[pyclass(name = "SimParams", get_all, set_all, from_py_object)]
#[derive(Clone)]
pub struct PySimParams {
    omega_x: f64,
    delta: f64,
    gamma_x: f64,
    gamma_z: f64,
    gamma_rel: f64,
    gamma_phi: f64,
    rate_scale: f64,
    eta_true: f64,
    s_th: f64,
    t_final: f64,
    n_steps: usize,
    n_traj: usize,
    base_seed: u64,
    truth_substeps: usize,
}

impl From<cohgate::SimParams> for PySimParams {
    fn from(p: cohgate::SimParams) -> Self {
        Self {
            omega_x: p.omega_x,
            delta: p.delta,
            gamma_x: p.gamma_x,
            gamma_z: p.gamma_z,
            gamma_rel: p.gamma_rel,
            gamma_phi: p.gamma_phi,
            rate_scale: p.rate_scale,
            eta_true: p.eta_true,
            s_th: p.s_th,
            t_final: p.t_final,
            n_steps: p.n_steps,
            n_traj: p.n_traj,
            base_seed: p.base_seed,
            truth_substeps: p.truth_substeps,
        }
    }
}

impl PySimParams {
    fn sim(&self) -> cohgate::SimParams {
        cohgate::SimParams {
            omega_x: self.omega_x,
            delta: self.delta,
            gamma_x: self.gamma_x,
            gamma_z: self.gamma_z,
            gamma_rel: self.gamma_rel,
            gamma_phi: self.gamma_phi,
            rate_scale: self.rate_scale,
            eta_true: self.eta_true,
            s_th: self.s_th,
            t_final: self.t_final,
            n_steps: self.n_steps,
            n_traj: self.n_traj,
            base_seed: self.base_seed,
            truth_substeps: self.truth_substeps,
        }
    }
}

#[pymethods]
impl PySimParams {
    /// Keyword arguments override individual fields of the reference set.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p: Self = cohgate::SimParams::reference().into();
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                match key.as_str() {
                    "omega_x" => p.omega_x = v.extract()?,
                    "delta" => p.delta = v.extract()?,
                    "gamma_x" => p.gamma_x = v.extract()?,
                    "gamma_z" => p.gamma_z = v.extract()?,
                    "gamma_rel" => p.gamma_rel = v.extract()?,
                    "gamma_phi" => p.gamma_phi = v.extract()?,
                    "rate_scale" => p.rate_scale = v.extract()?,
                    "eta_true" => p.eta_true = v.extract()?,
                    "s_th" => p.s_th = v.extract()?,
                    "t_final" => p.t_final = v.extract()?,
                    "n_steps" => p.n_steps = v.extract()?,
                    "n_traj" => p.n_traj = v.extract()?,
                    "base_seed" => p.base_seed = v.extract()?,
                    "truth_substeps" => p.truth_substeps = v.extract()?,
                    _ => return Err(PyValueError::new_err(format!("unknown parameter `{key}`"))),
                }
            }
        }
        Ok(p)
    }

    fn validate(&self) -> PyResult<()> {
        cohgate::validate_params(self.sim()).map(|_| ()).map_err(to_py)
    }

    fn dt(&self) -> f64 {
        self.sim().dt()
    }

    fn times(&self) -> Vec<f64> {
        self.sim().times()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.sim())
    }
}

/// One ground-truth trajectory: `(states, j_x, j_z, diverged)`.
#[pyfunction]
fn simulate_trajectory(p: &PySimParams, index: usize) -> PyResult<Trajectory> {
    cohgate::validate_params(p.sim()).map_err(to_py)?;
    let t = dynamics::simulate_trajectory(&p.sim(), index);
    let states = t.states.iter().map(tuple).collect();
    Ok((states, t.record.j_x, t.record.j_z, t.diverged))
}

/// Filters a record: `(states, psd_repairs, diverged)`.
#[pyfunction]
#[pyo3(signature = (p, j_x, j_z, estimator = "direct_sme", eta_assumed = 0.35))]
fn run_estimator(
    p: &PySimParams,
    j_x: Vec<f64>,
    j_z: Vec<f64>,
    estimator: &str,
    eta_assumed: f64,
) -> PyResult<(Vec<Vec3>, usize, bool)> {
    let record = dynamics::MeasurementRecord { dt: p.sim().dt(), j_x, j_z };
    let cfg = EstimatorConfig::new(kind(estimator)?, eta_assumed);
    let (states, d) = estimators::run_estimator(&record, &cfg, &p.sim()).map_err(to_py)?;
    Ok((states.iter().map(|s| tuple(&s.bloch())).collect(), d.psd_repairs, d.diverged))
}

/// Unconditional coherence on the record grid.
#[pyfunction]
fn unconditional_evolve(p: &PySimParams) -> Vec<f64> {
    dynamics::unconditional_evolve(&p.sim())
}

/// Terminal `(truth, [estimates], [repairs])` per trajectory for the given
/// `(estimator, eta_assumed)` list.
#[pyfunction]
fn run_ensemble(
    py: Python<'_>,
    p: &PySimParams,
    configs: Vec<(String, f64)>,
) -> PyResult<Vec<EnsembleRow>> {
    let cfgs = configs
        .iter()
        .map(|(k, eta)| Ok(EstimatorConfig::new(kind(k)?, *eta)))
        .collect::<PyResult<Vec<_>>>()?;
    let params = cohgate::validate_params(p.sim()).map_err(to_py)?;
    let pairs = py.detach(|| ensemble::run_pairs(&params, &cfgs)).map_err(to_py)?;
    Ok(pairs
        .iter()
        .map(|s| {
            (
                tuple(&s.truth),
                s.estimates.iter().map(|e| tuple(&e.bloch)).collect(),
                s.estimates.iter().map(|e| e.diagnostics.psd_repairs).collect(),
            )
        })
        .collect())
}

/// `(heralding_eff, mismatch_rate, mean_bias)` per threshold.
#[pyfunction]
fn gating_sweep(
    truth: Vec<Vec3>,
    estimate: Vec<Vec3>,
    thresholds: Vec<f64>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    if truth.len() != estimate.len() {
        return Err(to_py(Error::LengthMismatch { expected: truth.len(), got: estimate.len() }));
    }
    let pairs: Vec<TerminalPair> = truth
        .iter()
        .zip(&estimate)
        .map(|(t, e)| TerminalPair {
            truth: bloch(*t),
            estimate: bloch(*e),
            repairs: 0,
            diverged: false,
        })
        .collect();
    let m = gating::gating_sweep(&pairs, &thresholds).map_err(to_py)?;
    Ok(m.iter().map(|g| (g.heralding_efficiency, g.mismatch_rate, g.mean_bias)).collect())
}

#[pyfunction]
fn coherence(r: Vec3) -> f64 {
    gating::coherence_of(&bloch(r))
}

#[pyfunction]
fn purity(r: Vec3) -> f64 {
    gating::purity_of(&bloch(r))
}

/// True when the photon is routed to the certified port.
#[pyfunction]
fn route(s_score: f64, s_th: f64) -> bool {
    gating::route(s_score, s_th) == gating::Route::A
}

#[pyfunction]
fn equatorial_phase(r: Vec3) -> PyResult<(f64, Vec3)> {
    let (phi, c) = gating::equatorial_phase_of(&bloch(r)).map_err(to_py)?;
    Ok((phi, tuple(&c)))
}

/// Repairs a Hermitian 2x2 matrix given as `(trace, x, y, z)` Pauli
/// components; returns the repaired Bloch vector and whether it changed.
#[pyfunction]
fn psd_repair(trace: f64, r: Vec3) -> PyResult<(Vec3, bool)> {
    let h = matrix_from_components(trace, &bloch(r));
    let (s, repaired) = estimators::psd_repair(&h).map_err(to_py)?;
    Ok((tuple(&s.bloch()), repaired))
}

#[pyfunction]
fn min_entropy_bound(s_th: f64) -> f64 {
    certify::min_entropy_bound(s_th)
}

#[pyfunction]
fn pz_interval(s_th: f64) -> (f64, f64) {
    certify::pz_interval(s_th)
}

#[pyfunction]
#[pyo3(signature = (s_th, f_gate = 1.0))]
fn input_fidelity(s_th: f64, f_gate: f64) -> f64 {
    certify::input_fidelity(s_th, f_gate)
}

/// `(h_min, f_mm)` at a composable operating point.
#[pyfunction]
fn composable_point(s_th: f64, epsilon: f64, delta: f64) -> PyResult<(f64, f64)> {
    let c = certify::composable_point(s_th, epsilon, delta).map_err(to_py)?;
    Ok((c.h_min, c.f_mm))
}

#[pyfunction]
fn s_typ(p: &PySimParams) -> f64 {
    certify::s_typ(&p.sim())
}

#[pyfunction]
fn optimal_eta_ratio(p: &PySimParams, s_value: f64) -> f64 {
    certify::optimal_eta_ratio(&p.sim(), s_value)
}

#[pyfunction]
fn network_rates(n_modules: usize, eta_h: f64, t_decision_us: f64) -> (f64, f64) {
    certify::network_rates(n_modules, eta_h, t_decision_us)
}

/// Stationary OU tail `Pr[E ≥ ε²]`.
#[pyfunction]
fn ou_tail(mu: f64, e_bar: f64, sigma_e: f64, epsilon: f64) -> f64 {
    bounds::ou_tail(&OuParams::new(mu, e_bar, sigma_e), epsilon)
}

/// Drift and diffusion of `E` at a joint state, in the angular rate units
/// the dynamics use: `(b, beta_x, beta_z)`.
#[pyfunction]
fn error_drift(p: &PySimParams, r: Vec3, r_hat: Vec3, eta_a: f64) -> (f64, f64, f64) {
    let x = JointState::new(bloch(r), bloch(r_hat));
    let e = bounds::e_drift_diffusion(&x, &p.sim().rates(), p.sim().eta_true, eta_a);
    (e.b, e.beta_x, e.beta_z)
}

/// `(bound, alpha, max_drift)` with `max_drift` in quoted rate units.
#[pyfunction]
fn supermartingale_bound(
    py: Python<'_>,
    p: &PySimParams,
    eta_a: f64,
    epsilon: f64,
) -> (f64, f64, f64) {
    let params = p.sim();
    let b = py.detach(|| {
        bounds::supermartingale_bound(
            &params.rates(),
            params.eta_true,
            eta_a,
            epsilon,
            params.t_final,
        )
    });
    (b.bound, b.alpha, b.max_drift / params.rate_scale)
}

#[pymodule]
fn pycohgate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimParams>()?;
    m.add_function(wrap_pyfunction!(simulate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(run_estimator, m)?)?;
    m.add_function(wrap_pyfunction!(unconditional_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(gating_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(coherence, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(route, m)?)?;
    m.add_function(wrap_pyfunction!(equatorial_phase, m)?)?;
    m.add_function(wrap_pyfunction!(psd_repair, m)?)?;
    m.add_function(wrap_pyfunction!(min_entropy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(pz_interval, m)?)?;
    m.add_function(wrap_pyfunction!(input_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(composable_point, m)?)?;
    m.add_function(wrap_pyfunction!(s_typ, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_eta_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(network_rates, m)?)?;
    m.add_function(wrap_pyfunction!(ou_tail, m)?)?;
    m.add_function(wrap_pyfunction!(error_drift, m)?)?;
    m.add_function(wrap_pyfunction!(supermartingale_bound, m)?)?;
    Ok(())
}
