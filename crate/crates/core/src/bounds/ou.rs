//! Linear-drift (Ornstein–Uhlenbeck) model of the error process.
//!
//! Samples `(E_t, dE_t)` are streamed into a fine histogram on `[−1, 1]`.
//! The fit regroups it into coarse bins over the central 98% of the mass,
//! regresses the per-bin mean drift on the per-bin mean `E` by weighted
//! least squares, and takes the diffusion from the residual quadratic
//! variation of all samples.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const FINE_BINS: usize = 8000;
pub const COARSE_BINS: usize = 40;
pub const MIN_BIN_SAMPLES: u64 = 100;
pub const MIN_SAMPLES: u64 = 10_000;
/// Mass excluded from each tail when choosing the fit range.
pub const TAIL_MASS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuParams {
    pub mu: f64,
    pub e_bar: f64,
    pub sigma_e: f64,
    /// `ν = μ Ē`, the drift at `E = 0`.
    pub nu: f64,
}

impl OuParams {
    pub fn new(mu: f64, e_bar: f64, sigma_e: f64) -> Self {
        Self { mu, e_bar, sigma_e, nu: mu * e_bar }
    }

    /// Re-expresses rates measured against time in angular units in the
    /// units the physical rates are quoted in (`scale` = angular/quoted).
    pub fn in_quoted_units(&self, scale: f64) -> Self {
        Self::new(self.mu / scale, self.e_bar, self.sigma_e / scale.sqrt())
    }

    /// Stationary variance `σ²/(2μ)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma_e * self.sigma_e / (2.0 * self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuFit {
    pub params: OuParams,
    pub r_squared: f64,
    pub samples: u64,
    pub bins: usize,
    pub fit_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Cell {
    n: u64,
    sum_e: f64,
    sum_d: f64,
    sum_d2: f64,
}

/// Streaming sufficient statistics for the drift regression.
#[derive(Debug, Clone, PartialEq)]
pub struct OuAccumulator {
    dt: f64,
    cells: Vec<Cell>,
    n: u64,
    sum_e: f64,
    sum_e2: f64,
    sum_d: f64,
    sum_d2: f64,
    sum_ed: f64,
}

impl OuAccumulator {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            cells: vec![Cell::default(); FINE_BINS],
            n: 0,
            sum_e: 0.0,
            sum_e2: 0.0,
            sum_d: 0.0,
            sum_d2: 0.0,
            sum_ed: 0.0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> u64 {
        self.n
    }

    #[inline]
    fn cell_of(e: f64) -> usize {
        let u = (e + 1.0) * 0.5 * FINE_BINS as f64;
        (u.max(0.0) as usize).min(FINE_BINS - 1)
    }

    /// Adds one increment `d = E(t + dt) − E(t)` observed at `e = E(t)`.
    #[inline]
    pub fn push(&mut self, e: f64, d: f64) {
        let c = &mut self.cells[Self::cell_of(e)];
        c.n += 1;
        c.sum_e += e;
        c.sum_d += d;
        c.sum_d2 += d * d;
        self.n += 1;
        self.sum_e += e;
        self.sum_e2 += e * e;
        self.sum_d += d;
        self.sum_d2 += d * d;
        self.sum_ed += e * d;
    }

    /// Adds every increment of a path sampled every `dt`, skipping the first
    /// `burn_in_steps` points.
    pub fn push_path(&mut self, path: &[f64], burn_in_steps: usize) {
        for w in path.windows(2).skip(burn_in_steps) {
            self.push(w[0], w[1] - w[0]);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.n += b.n;
            a.sum_e += b.sum_e;
            a.sum_d += b.sum_d;
            a.sum_d2 += b.sum_d2;
        }
        self.n += other.n;
        self.sum_e += other.sum_e;
        self.sum_e2 += other.sum_e2;
        self.sum_d += other.sum_d;
        self.sum_d2 += other.sum_d2;
        self.sum_ed += other.sum_ed;
    }

    /// Fine-cell boundaries enclosing the central `1 − 2·TAIL_MASS` of mass.
    fn central_range(&self) -> (usize, usize) {
        let lo_mass = (TAIL_MASS * self.n as f64).floor() as u64;
        let hi_mass = self.n - lo_mass;
        let mut acc = 0;
        let mut lo = 0;
        let mut hi = FINE_BINS;
        for (i, c) in self.cells.iter().enumerate() {
            if acc <= lo_mass && acc + c.n > lo_mass {
                lo = i;
            }
            acc += c.n;
            if acc >= hi_mass {
                hi = i + 1;
                break;
            }
        }
        (lo, hi)
    }

    fn coarse_bins(&self) -> Result<(Vec<Cell>, usize, usize)> {
        if self.n < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_SAMPLES as usize,
                got: self.n as usize,
            });
        }
        let (lo, hi) = self.central_range();
        let width = hi - lo;
        if width < COARSE_BINS {
            return Err(Error::InsufficientSamples { needed: COARSE_BINS, got: width });
        }
        // Equal-width coarse bins on the fine grid.
        let mut bins = Vec::with_capacity(COARSE_BINS);
        for b in 0..COARSE_BINS {
            let a = lo + b * width / COARSE_BINS;
            let z = lo + (b + 1) * width / COARSE_BINS;
            let mut c = Cell::default();
            for f in &self.cells[a..z] {
                c.n += f.n;
                c.sum_e += f.sum_e;
                c.sum_d += f.sum_d;
                c.sum_d2 += f.sum_d2;
            }
            if c.n < MIN_BIN_SAMPLES {
                return Err(Error::InsufficientSamples {
                    needed: MIN_BIN_SAMPLES as usize,
                    got: c.n as usize,
                });
            }
            bins.push(c);
        }
        Ok((bins, lo, hi))
    }

    /// Per coarse bin: `(mean E, mean dE/dt, samples)`.
    pub fn drift_profile(&self) -> Result<Vec<(f64, f64, u64)>> {
        let (bins, _, _) = self.coarse_bins()?;
        Ok(bins
            .iter()
            .map(|c| {
                let n = c.n as f64;
                (c.sum_e / n, c.sum_d / n / self.dt, c.n)
            })
            .collect())
    }

    pub fn fit(&self) -> Result<OuFit> {
        let (bins, lo, hi) = self.coarse_bins()?;
        let dt = self.dt;
        // Per-bin mean E, mean drift dE/dt and weight n / Var(dE/dt).
        let pts: Vec<(f64, f64, f64)> = bins
            .iter()
            .map(|c| {
                let n = c.n as f64;
                let mean_d = c.sum_d / n;
                let var_d = (c.sum_d2 / n - mean_d * mean_d).max(f64::MIN_POSITIVE);
                (c.sum_e / n, mean_d / dt, n / (var_d / (dt * dt)))
            })
            .collect();
        let sw: f64 = pts.iter().map(|p| p.2).sum();
        let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
        let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let mu = -slope;
        if !(mu > 0.0) {
            return Err(Error::NonRestoringDrift(mu));
        }
        let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        // Residual quadratic variation Σ (dE − (c0 + c1 E) dt)² / (n dt).
        let (c0, c1) = (intercept, slope);
        let n = self.n as f64;
        let rss = self.sum_d2 - 2.0 * dt * (c0 * self.sum_d + c1 * self.sum_ed)
            + dt * dt * (c0 * c0 * n + 2.0 * c0 * c1 * self.sum_e + c1 * c1 * self.sum_e2);
        let sigma_e = (rss.max(0.0) / (n * dt)).sqrt();
        let to_e = |i: usize| -1.0 + 2.0 * i as f64 / FINE_BINS as f64;
        Ok(OuFit {
            params: OuParams::new(mu, intercept / mu, sigma_e),
            r_squared,
            samples: self.n,
            bins: COARSE_BINS,
            fit_range: (to_e(lo), to_e(hi)),
        })
    }
}

/// Fits a set of `E(t)` paths sampled every `dt`, discarding the first
/// `burn_in` time units of each.
pub fn fit_ou(e_series: &[Vec<f64>], dt: f64, burn_in: f64) -> Result<OuFit> {
    let skip = (burn_in / dt).round() as usize;
    let mut acc = OuAccumulator::new(dt);
    for path in e_series {
        acc.push_path(path, skip);
    }
    acc.fit()
}

/// Stationary Gaussian tail `Pr[E ≥ ε²] = ½ erfc((ε² − Ē)/sqrt(σ²/μ))`.
pub fn ou_tail(ou: &OuParams, epsilon: f64) -> f64 {
    let a = epsilon * epsilon;
    0.5 * erfc((a - ou.e_bar) / (ou.sigma_e * ou.sigma_e / ou.mu).sqrt())
}
