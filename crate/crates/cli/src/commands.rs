//! One function per subcommand. Each writes its data products into the
//! output directory; the caller adds the manifest.

use cohgate::bounds::{
    ou_tail, overcert_stats, polar_alignment, DriftLandscape, ErrorProcessObserver, SearchSettings,
    MIN_PAIRS,
};
use cohgate::certify::{
    bell_fidelity, composable_point, empirical_min_entropy_at, input_fidelity, min_entropy_bound,
    network_rates, optimal_eta_ratio, pz_interval, s_typ, xi,
};
use cohgate::dynamics::unconditional_states;
use cohgate::ensemble::{
    run_ensemble, run_pairs, simulate_pair, PairSummary, StepObserver, TerminalPair,
};
use cohgate::estimators::benchmark_configs;
use cohgate::gating::{
    coherence_of, equatorial_phase_of, gating_sweep, heralding_efficiency, purity_of, route, Route,
};
use cohgate::tuning::{ratio_grid, ratio_sweep};
use cohgate::Bloch;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, OutDir};
use crate::row;

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "traj_id",
    "seed",
    "s_true",
    "z_true",
    "purity_true",
    "s_est",
    "z_est",
    "purity_est",
    "phase_est",
    "accepted_true",
    "accepted_est",
    "psd_repairs",
    "diverged",
];
pub const METRICS_HEADER: [&str; 6] =
    ["estimator", "eta_assumed", "mean_bias", "mismatch_rate", "mean_repairs", "heralding_eff"];
pub const OVERCERT_HEADER: [&str; 4] = ["epsilon", "empirical", "ou_bound", "sm_bound"];

/// Trajectories whose full time series `demo` writes out.
const SAMPLE_TRAJECTORIES: usize = 5;
/// Grid stride of the sampled time series.
const SAMPLE_STRIDE: usize = 10;
const HISTOGRAM_BINS: usize = 50;

fn threshold_grid() -> Vec<f64> {
    (1..=19).map(|k| 0.05 * k as f64).collect()
}

fn trajectory_rows(pairs: &[PairSummary], k: usize, s_th: f64) -> Vec<Vec<Cell>> {
    pairs
        .iter()
        .map(|s| {
            let e = &s.estimates[k];
            let (st, se) = (coherence_of(&s.truth), coherence_of(&e.bloch));
            let phase = equatorial_phase_of(&e.bloch).map(|v| v.0).unwrap_or(f64::NAN);
            row![
                s.traj_id,
                s.seed,
                st,
                s.truth.z,
                purity_of(&s.truth),
                se,
                e.bloch.z,
                purity_of(&e.bloch),
                phase,
                route(st, s_th) == Route::A,
                route(se, s_th) == Route::A,
                e.diagnostics.psd_repairs,
                s.truth_diverged || e.diagnostics.diverged,
            ]
        })
        .collect()
}

fn terminal_pairs(pairs: &[PairSummary], k: usize) -> Vec<TerminalPair> {
    pairs.iter().map(|s| s.terminal(k)).collect()
}

/// `(step, truth, estimate)`.
type Sample = (usize, Bloch, Bloch);

/// Keeps the strided time series of the first few trajectories.
#[derive(Default)]
struct Sampler {
    current: Vec<Sample>,
    kept: Vec<(usize, Vec<Sample>)>,
}

impl StepObserver for Sampler {
    fn observe(&mut self, step: usize, truth: &Bloch, estimates: &[Bloch]) {
        if step == 0 {
            self.current.clear();
        }
        if step.is_multiple_of(SAMPLE_STRIDE) {
            self.current.push((step, *truth, estimates[0]));
        }
    }

    fn end_trajectory(&mut self, summary: &PairSummary) {
        if summary.traj_id < SAMPLE_TRAJECTORIES {
            self.kept.push((summary.traj_id, std::mem::take(&mut self.current)));
        }
    }

    fn merge(&mut self, later: Self) {
        self.kept.extend(later.kept);
    }
}

pub fn demo(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let (pairs, sampler) = run_ensemble(p, &[cfg.estimator_config()], Sampler::default)?;
    out.csv("trajectories.csv", &TRAJECTORY_HEADER, trajectory_rows(&pairs, 0, p.s_th))?;

    let dt = p.dt();
    let mut rows = Vec::new();
    for (id, series) in &sampler.kept {
        for (step, t, e) in series {
            rows.push(row![*id, *step as f64 * dt, coherence_of(t), t.z, coherence_of(e), e.z]);
        }
    }
    out.csv("samples.csv", &["traj_id", "t", "s_true", "z_true", "s_est", "z_est"], rows)?;

    let rows = unconditional_states(p)
        .iter()
        .enumerate()
        .map(|(i, r)| row![i as f64 * dt, coherence_of(r), r.x, r.y, r.z])
        .collect();
    out.csv("unconditional.csv", &["t", "s_uncond", "x", "y", "z"], rows)?;

    let mut counts = [0usize; HISTOGRAM_BINS];
    for s in &pairs {
        let b = (coherence_of(&s.truth) * HISTOGRAM_BINS as f64) as usize;
        counts[b.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let w = 1.0 / HISTOGRAM_BINS as f64;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| row![i as f64 * w, (i + 1) as f64 * w, c, c as f64 / pairs.len() as f64])
        .collect();
    out.csv("s_histogram.csv", &["bin_lo", "bin_hi", "count", "fraction"], rows)
}

pub fn estimators(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let configs = benchmark_configs();
    let pairs = run_pairs(p, &configs)?;
    let mut rows = Vec::new();
    for (k, c) in configs.iter().enumerate() {
        let m = gating_sweep(&terminal_pairs(&pairs, k), &[p.s_th])?[0];
        rows.push(row![
            c.kind.label(),
            c.eta_assumed,
            m.mean_bias,
            m.mismatch_rate,
            m.mean_repairs,
            m.heralding_efficiency,
        ]);
    }
    out.csv("metrics.csv", &METRICS_HEADER, rows)?;

    let mut rows = Vec::new();
    for c in &configs {
        let pair = simulate_pair(p, c, 0)?;
        for (i, (t, e)) in pair.true_states.iter().zip(&pair.est_states).enumerate() {
            rows.push(row![
                c.kind.label(),
                c.eta_assumed,
                pair.times[i],
                coherence_of(&t.bloch()),
                coherence_of(&e.bloch()),
            ]);
        }
    }
    out.csv("overlay.csv", &["estimator", "eta_assumed", "t", "s_true", "s_est"], rows)
}

pub fn qrng(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let pairs = run_pairs(p, &[])?;
    let truth: Vec<Bloch> = pairs.iter().map(|s| s.truth).collect();
    let mut grid = threshold_grid();
    grid.push(0.99);
    let mut rows = Vec::new();
    for &s_th in &grid {
        let (lo, hi) = pz_interval(s_th);
        let accepted: Vec<f64> = truth
            .iter()
            .filter(|r| route(coherence_of(r), s_th) == Route::A)
            .map(|r| 0.5 * (1.0 + r.z))
            .collect();
        let (h_emp, count) = empirical_min_entropy_at(&truth, s_th).unwrap_or((f64::NAN, 0));
        let obs_lo = accepted.iter().copied().fold(f64::NAN, f64::min);
        let obs_hi = accepted.iter().copied().fold(f64::NAN, f64::max);
        rows.push(row![
            s_th,
            count,
            heralding_efficiency(&truth, s_th)?,
            min_entropy_bound(s_th),
            h_emp,
            lo,
            hi,
            obs_lo,
            obs_hi,
        ]);
    }
    out.csv(
        "qrng.csv",
        &[
            "s_th",
            "accepted",
            "heralding_eff",
            "h_min_bound",
            "h_min_empirical",
            "pz_lo",
            "pz_hi",
            "pz_obs_min",
            "pz_obs_max",
        ],
        rows,
    )?;
    let rows = pairs
        .iter()
        .map(|s| row![s.traj_id, coherence_of(&s.truth), s.truth.z, s.truth.norm()])
        .collect();
    out.csv("bloch.csv", &["traj_id", "s_true", "z_true", "radius"], rows)
}

pub fn gate_sweep(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let configs = benchmark_configs();
    let pairs = run_pairs(p, &configs)?;
    let grid = threshold_grid();
    let mut rows = Vec::new();
    for (k, c) in configs.iter().enumerate() {
        let tp = terminal_pairs(&pairs, k);
        for m in gating_sweep(&tp, &grid)? {
            let est_acc =
                tp.iter().filter(|q| route(coherence_of(&q.estimate), m.s_th) == Route::A);
            let (n_est, both) = est_acc.fold((0usize, 0usize), |(n, b), q| {
                (n + 1, b + (route(coherence_of(&q.truth), m.s_th) == Route::A) as usize)
            });
            let precision = if n_est == 0 { f64::NAN } else { both as f64 / n_est as f64 };
            rows.push(row![
                c.kind.label(),
                c.eta_assumed,
                m.s_th,
                m.heralding_efficiency,
                n_est as f64 / tp.len() as f64,
                m.mismatch_rate,
                precision,
            ]);
        }
    }
    out.csv(
        "gate_sweep.csv",
        &[
            "estimator",
            "eta_assumed",
            "s_th",
            "heralding_eff",
            "est_accept_rate",
            "mismatch_rate",
            "conditional_routing",
        ],
        rows,
    )?;
    let rows = pairs
        .iter()
        .filter(|s| route(coherence_of(&s.truth), p.s_th) == Route::A)
        .map(|s| {
            let phase = equatorial_phase_of(&s.truth).map(|v| v.0).unwrap_or(f64::NAN);
            row![s.traj_id, phase, coherence_of(&s.truth)]
        })
        .collect();
    out.csv("phase.csv", &["traj_id", "phase_true", "s_true"], rows)
}

#[derive(Serialize)]
struct OvercertSummary {
    n_traj: usize,
    estimator: &'static str,
    eta_assumed: f64,
    p_s_over: f64,
    p_purity_over: f64,
    amplification: f64,
    ou_mu: f64,
    ou_e_bar: f64,
    ou_sigma_e: f64,
    ou_nu: f64,
    ou_r_squared: f64,
    ou_samples: u64,
    ou_tail_zero: f64,
    max_drift: f64,
    max_visited_drift: f64,
    polar_ratio_true: f64,
    polar_ratio_est: f64,
    polar_count: usize,
}

pub fn overcert(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    if p.n_traj < MIN_PAIRS {
        return Err(CliError::Config(format!(
            "overcert needs at least {MIN_PAIRS} trajectories, got {}",
            p.n_traj
        )));
    }
    let est = cfg.estimator_config();
    let (pairs, obs) = run_ensemble(p, &[est], || {
        ErrorProcessObserver::new(p, 0, est.eta_assumed, cfg.burn_in, 10)
    })?;
    let tp = terminal_pairs(&pairs, 0);
    let eps: Vec<f64> = (0..=12).map(|k| 0.025 * k as f64).collect();
    let stats = overcert_stats(&tp, &eps)?;
    let fit = obs.acc.fit()?;
    let ou = fit.params.in_quoted_units(p.rate_scale);
    let land =
        DriftLandscape::new(&p.rates(), p.eta_true, est.eta_assumed, SearchSettings::default());
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for &(e, emp) in &stats.tail_curve {
        let b = land.bound(e, p.t_final);
        if e == 0.1 {
            curve = b.c_alpha_curve.clone();
        }
        rows.push(row![e, emp, ou_tail(&ou, e), b.bound]);
    }
    out.csv("overcert.csv", &OVERCERT_HEADER, rows)?;

    let scale = p.rate_scale;
    let rows =
        obs.acc.drift_profile()?.into_iter().map(|(e, d, n)| row![e, d / scale, n]).collect();
    out.csv("drift_profile.csv", &["e_mean", "drift_mean", "samples"], rows)?;
    let rows = pairs
        .iter()
        .map(|s| {
            let e = &s.estimates[0].bloch;
            row![s.traj_id, coherence_of(e).powi(2) - coherence_of(&s.truth).powi(2)]
        })
        .collect();
    out.csv("e_terminal.csv", &["traj_id", "e_terminal"], rows)?;
    let rows = curve.iter().map(|a| row![a.alpha, a.c_alpha / scale]).collect();
    out.csv("c_alpha.csv", &["alpha", "c_alpha"], rows)?;
    let rows = tp
        .iter()
        .filter(|q| coherence_of(&q.truth) > p.s_th)
        .map(|q| {
            let polar = |r: &Bloch| if r.norm() > 0.0 { r.z.abs() / r.norm() } else { 0.0 };
            row![polar(&q.truth), polar(&q.estimate), purity_of(&q.truth), purity_of(&q.estimate)]
        })
        .collect();
    out.csv("geometric.csv", &["polar_true", "polar_est", "purity_true", "purity_est"], rows)?;

    let (pt, pe, count) = polar_alignment(&tp, p.s_th);
    let summary = OvercertSummary {
        n_traj: stats.n,
        estimator: est.kind.label(),
        eta_assumed: est.eta_assumed,
        p_s_over: stats.p_s_over,
        p_purity_over: stats.p_purity_over,
        amplification: stats.amplification,
        ou_mu: ou.mu,
        ou_e_bar: ou.e_bar,
        ou_sigma_e: ou.sigma_e,
        ou_nu: ou.nu,
        ou_r_squared: fit.r_squared,
        ou_samples: fit.samples,
        ou_tail_zero: ou_tail(&ou, 0.0),
        max_drift: land.max_drift().0 / scale,
        max_visited_drift: obs.max_visited_drift / scale,
        polar_ratio_true: pt,
        polar_ratio_est: pe,
        polar_count: count,
    };
    out.json("overcert_summary.json", &summary)
}

#[derive(Serialize)]
struct RatioSummary {
    estimator: &'static str,
    best_ratio: f64,
    matched_mismatch: f64,
    mean_s_true: f64,
    s_typ: f64,
    xi_mean_s: f64,
    formula_ratio_mean_s: f64,
    xi_s_typ: f64,
    formula_ratio_s_typ: f64,
}

pub fn rstar(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let sweep = ratio_sweep(p, cfg.estimator, &ratio_grid(12))?;
    let rows = sweep
        .points
        .iter()
        .map(|q| row![q.ratio, q.eta_assumed, q.mean_bias, q.mismatch_rate, q.mean_repairs])
        .collect();
    out.csv(
        "rstar.csv",
        &["ratio", "eta_assumed", "mean_bias", "mismatch_rate", "mean_repairs"],
        rows,
    )?;
    let st = s_typ(p);
    let summary = RatioSummary {
        estimator: cfg.estimator.label(),
        best_ratio: sweep.best_ratio(),
        matched_mismatch: sweep.matched_mismatch,
        mean_s_true: sweep.mean_s_true,
        s_typ: st,
        xi_mean_s: xi(p, sweep.mean_s_true),
        formula_ratio_mean_s: optimal_eta_ratio(p, sweep.mean_s_true),
        xi_s_typ: xi(p, st),
        formula_ratio_s_typ: optimal_eta_ratio(p, st),
    };
    out.json("rstar_summary.json", &summary)
}

#[derive(Serialize)]
struct NetworkSummary {
    n_modules: usize,
    s_th: f64,
    heralding_eff: f64,
    t_decision_us: f64,
    single_rate_per_s: f64,
    two_node_rate_per_s: f64,
}

pub fn certify_tables(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.sim;
    let ou = cfg.ou_params();
    let mut rows = Vec::new();
    for (s_th, eps) in [(0.70, 0.05), (0.70, 0.10), (0.90, 0.05), (0.90, 0.10), (0.95, 0.05)] {
        let c = composable_point(s_th, eps, ou_tail(&ou, eps))?;
        rows.push(row![
            c.s_th,
            c.epsilon,
            c.delta,
            c.h_min,
            c.f_mm,
            c.h_confidence,
            c.f_confidence
        ]);
    }
    out.csv(
        "composable.csv",
        &["s_th", "epsilon", "delta", "h_min", "f_mm", "h_confidence", "f_confidence"],
        rows,
    )?;

    let truth: Vec<Bloch> = run_pairs(p, &[])?.iter().map(|s| s.truth).collect();
    let mut rows = Vec::new();
    for s_th in [0.50, 0.70, 0.90, 0.95] {
        let eta_h = heralding_efficiency(&truth, s_th)?;
        let (_, two) = network_rates(cfg.n_modules, eta_h, p.t_final);
        rows.push(row![s_th, bell_fidelity(s_th), input_fidelity(s_th, 1.0), eta_h, two]);
    }
    out.csv("entanglement.csv", &["s_th", "f_i", "f_input", "eta_h", "r_two_node"], rows)?;

    let eta_h = heralding_efficiency(&truth, p.s_th)?;
    let (single, two) = network_rates(cfg.n_modules, eta_h, p.t_final);
    out.json(
        "network.json",
        &NetworkSummary {
            n_modules: cfg.n_modules,
            s_th: p.s_th,
            heralding_eff: eta_h,
            t_decision_us: p.t_final,
            single_rate_per_s: single,
            two_node_rate_per_s: two,
        },
    )
}
