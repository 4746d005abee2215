//! Run configuration: flat `key = value` files or JSON, plus flag overrides.

use std::path::Path;

use cohgate::bounds::OuParams;
use cohgate::estimators::{EstimatorConfig, EstimatorKind};
use cohgate::{validate_params, SimParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Every recognised key. Absent keys take the reference values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    omega_x: Option<f64>,
    delta: Option<f64>,
    gamma_x: Option<f64>,
    gamma_z: Option<f64>,
    gamma_rel: Option<f64>,
    gamma_phi: Option<f64>,
    rate_scale: Option<f64>,
    eta_true: Option<f64>,
    eta_assumed: Option<f64>,
    s_th: Option<f64>,
    t_final: Option<f64>,
    n_steps: Option<usize>,
    n_traj: Option<usize>,
    base_seed: Option<u64>,
    truth_substeps: Option<usize>,
    estimator: Option<EstimatorKind>,
    burn_in: Option<f64>,
    n_modules: Option<usize>,
    ou_mu: Option<f64>,
    ou_e_bar: Option<f64>,
    ou_sigma_e: Option<f64>,
}

/// Fully resolved configuration. Its JSON form is the normalized config
/// that is hashed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sim: SimParams,
    pub estimator: EstimatorKind,
    pub eta_assumed: f64,
    /// Time discarded from each path before the OU regression.
    pub burn_in: f64,
    /// Emitter modules multiplexed behind one router.
    pub n_modules: usize,
    /// OU parameters (quoted units) used by `certify-tables`.
    pub ou_mu: f64,
    pub ou_e_bar: f64,
    pub ou_sigma_e: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimParams::reference(),
            estimator: EstimatorKind::DirectSme,
            eta_assumed: 0.35,
            burn_in: 2.0,
            n_modules: 10,
            ou_mu: 1.20,
            ou_e_bar: -0.157,
            ou_sigma_e: 0.142,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
}

fn scalar(raw: &str) -> Value {
    if let Ok(i) = raw.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return Value::from(i);
    }
    match raw.parse::<f64>() {
        Ok(f) if f.is_finite() => Value::from(f),
        _ => Value::from(raw),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
fn parse_key_values(text: &str) -> Result<Map<String, Value>, CliError> {
    let mut map = Map::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim();
        if map.insert(key.to_string(), scalar(value.trim())).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(map)
}

fn parse_text(text: &str) -> Result<RawConfig, CliError> {
    let map = if text.trim_start().starts_with('{') {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Config("JSON config must be an object".into())),
            Err(e) => return Err(CliError::Config(format!("invalid JSON: {e}"))),
        }
    } else {
        parse_key_values(text)?
    };
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self, CliError> {
        let raw = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_text(&text)?
            }
            None => RawConfig::default(),
        };
        Self::resolve(raw, overrides)
    }

    #[cfg(test)]
    pub fn from_text(text: &str, overrides: Overrides) -> Result<Self, CliError> {
        Self::resolve(parse_text(text)?, overrides)
    }

    fn resolve(raw: RawConfig, overrides: Overrides) -> Result<Self, CliError> {
        let d = Self::default();
        let s = d.sim;
        let sim = SimParams {
            omega_x: raw.omega_x.unwrap_or(s.omega_x),
            delta: raw.delta.unwrap_or(s.delta),
            gamma_x: raw.gamma_x.unwrap_or(s.gamma_x),
            gamma_z: raw.gamma_z.unwrap_or(s.gamma_z),
            gamma_rel: raw.gamma_rel.unwrap_or(s.gamma_rel),
            gamma_phi: raw.gamma_phi.unwrap_or(s.gamma_phi),
            rate_scale: raw.rate_scale.unwrap_or(s.rate_scale),
            eta_true: raw.eta_true.unwrap_or(s.eta_true),
            s_th: raw.s_th.unwrap_or(s.s_th),
            t_final: raw.t_final.unwrap_or(s.t_final),
            n_steps: raw.n_steps.unwrap_or(s.n_steps),
            n_traj: overrides.n_traj.or(raw.n_traj).unwrap_or(s.n_traj),
            base_seed: overrides.seed.or(raw.base_seed).unwrap_or(s.base_seed),
            truth_substeps: raw.truth_substeps.unwrap_or(s.truth_substeps),
        };
        let cfg = Self {
            sim: validate_params(sim)?,
            estimator: raw.estimator.unwrap_or(d.estimator),
            eta_assumed: raw.eta_assumed.unwrap_or(d.eta_assumed),
            burn_in: raw.burn_in.unwrap_or(d.burn_in),
            n_modules: raw.n_modules.unwrap_or(d.n_modules),
            ou_mu: raw.ou_mu.unwrap_or(d.ou_mu),
            ou_e_bar: raw.ou_e_bar.unwrap_or(d.ou_e_bar),
            ou_sigma_e: raw.ou_sigma_e.unwrap_or(d.ou_sigma_e),
        };
        cfg.estimator_config().validate()?;
        if !(cfg.burn_in >= 0.0 && cfg.burn_in < cfg.sim.t_final) {
            return Err(CliError::Config(format!(
                "burn_in must lie in [0, t_final), got {}",
                cfg.burn_in
            )));
        }
        if !(cfg.ou_mu > 0.0 && cfg.ou_sigma_e > 0.0) {
            return Err(CliError::Config("ou_mu and ou_sigma_e must be positive".into()));
        }
        if cfg.n_modules == 0 {
            return Err(CliError::Config("n_modules must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig::new(self.estimator, self.eta_assumed)
    }

    pub fn ou_params(&self) -> OuParams {
        OuParams::new(self.ou_mu, self.ou_e_bar, self.ou_sigma_e)
    }

    pub fn normalized_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized JSON, lowercase hex.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.normalized_json().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
