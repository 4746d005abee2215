//! Exit criteria for the primary component. Prints one line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use cohgate::bounds::{
    ou_tail, overcert_stats, DriftLandscape, ErrorProcessObserver, SearchSettings,
};
use cohgate::certify::{
    bell_fidelity, composable_point, empirical_min_entropy_at, input_fidelity, min_entropy_bound,
    network_rates, optimal_eta_ratio, s_typ,
};
use cohgate::dynamics::unconditional_evolve;
use cohgate::ensemble::{run_ensemble, run_pairs, PairSummary, StepObserver, TerminalPair};
use cohgate::estimators::{benchmark_configs, EstimatorConfig, EstimatorKind};
use cohgate::gating::{coherence_of, gating_sweep, heralding_efficiency, purity_of, GatingMetrics};
use cohgate::tuning::{ratio_grid, ratio_sweep};
use cohgate::{Bloch, Rates, SimParams};

const DESK_N: usize = 3000;
const OVERCERT_N: usize = 100_000;

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failed.push(id);
        }
        println!(
            "criterion {id:>2} [{}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn within(v: f64, centre: f64, tol: f64) -> bool {
    (v - centre).abs() <= tol
}

fn between(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

/// Counts trajectories whose truth ever leaves the closed unit ball.
#[derive(Default)]
struct BallCheck {
    current_bad: bool,
    bad: usize,
    worst: f64,
}

impl StepObserver for BallCheck {
    fn observe(&mut self, step: usize, truth: &Bloch, _: &[Bloch]) {
        if step == 0 {
            self.current_bad = false;
        }
        let len2 = truth.x * truth.x + truth.y * truth.y + truth.z * truth.z;
        self.worst = self.worst.max(len2);
        if len2 > 1.0 + 1e-9 {
            self.current_bad = true;
        }
    }

    fn end_trajectory(&mut self, _: &PairSummary) {
        self.bad += self.current_bad as usize;
    }

    fn merge(&mut self, later: Self) {
        self.bad += later.bad;
        self.worst = self.worst.max(later.worst);
    }
}

fn metrics(pairs: &[PairSummary], k: usize, s_th: f64) -> GatingMetrics {
    let tp: Vec<TerminalPair> = pairs.iter().map(|s| s.terminal(k)).collect();
    gating_sweep(&tp, &[s_th]).unwrap()[0]
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    let p = SimParams::reference().with_n_traj(DESK_N);
    let quoted = p.rate_scale;

    // 1
    let t = Instant::now();
    let s_uncond = *unconditional_evolve(&p).last().unwrap();
    let fast = t.elapsed().as_secs_f64() < 1.0;
    report.line(
        1,
        "unconditional collapse",
        between(s_uncond, 0.01, 0.03) && fast,
        format!("S_uncond(T) = {s_uncond:.4}, runtime under 1 s: {fast}"),
        t,
    );

    // One desk-scale ensemble serves criteria 2 to 6.
    let t = Instant::now();
    let cfgs = benchmark_configs();
    let (pairs, ball) = run_ensemble(&p, &cfgs, BallCheck::default).unwrap();
    let truth: Vec<Bloch> = pairs.iter().map(|s| s.truth).collect();
    let mean_s = truth.iter().map(coherence_of).sum::<f64>() / truth.len() as f64;
    let st = s_typ(&p);
    report.line(
        2,
        "conditional persistence",
        within(mean_s, 0.67, 0.03) && within(st, 0.764, 0.001),
        format!("mean S_true(T) = {mean_s:.4}, s_typ = {st:.4}"),
        t,
    );

    let t = Instant::now();
    let targets = [(0.7, 0.52, 0.04), (0.9, 0.07, 0.02), (0.5, 0.80, 0.03), (0.95, 0.02, 0.01)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (s_th, want, tol) in targets {
        let h = heralding_efficiency(&truth, s_th).unwrap();
        ok &= within(h, want, tol);
        detail.push(format!("eta_h({s_th}) = {h:.4}"));
    }
    report.line(3, "heralding", ok, detail.join(", "), t);

    let t = Instant::now();
    report.line(
        4,
        "Bloch diagnostic",
        ball.bad == 0,
        format!(
            "{} of {} trajectories leave the ball, max |r|^2 = {:.12}",
            ball.bad, p.n_traj, ball.worst
        ),
        t,
    );

    let t = Instant::now();
    let (h95, h99) = (min_entropy_bound(0.95), min_entropy_bound(0.99));
    let mut dominated = true;
    let mut checked = 0;
    let grid: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).chain([0.99]).collect();
    for &s_th in &grid {
        if let Ok((h, count)) = empirical_min_entropy_at(&truth, s_th) {
            if count >= 30 {
                checked += 1;
                dominated &= h >= min_entropy_bound(s_th);
            }
        }
    }
    report.line(
        5,
        "QRNG min-entropy",
        within(h95, 0.61, 0.005) && within(h99, 0.81, 0.005) && dominated,
        format!(
            "H(0.95) = {h95:.4}, H(0.99) = {h99:.4}, empirical >= bound at {checked} thresholds: {dominated}"
        ),
        t,
    );

    let t = Instant::now();
    let m: Vec<GatingMetrics> = (0..cfgs.len()).map(|k| metrics(&pairs, k, p.s_th)).collect();
    let ekf_ok = cfgs
        .iter()
        .zip(&m)
        .filter(|(c, _)| c.kind == EstimatorKind::Ekf)
        .all(|(_, m)| between(m.mean_bias, -0.75, -0.50));
    let zakai_ok = cfgs
        .iter()
        .zip(&m)
        .filter(|(c, _)| c.kind == EstimatorKind::Zakai)
        .all(|(_, m)| m.mean_repairs == 0.0);
    let ok = between(m[0].mean_repairs, 4.0, 10.0)
        && m[1].mean_repairs <= 0.2
        && between(m[1].mean_bias, -0.18, -0.08)
        && ekf_ok
        && zakai_ok;
    let detail = cfgs
        .iter()
        .zip(&m)
        .map(|(c, m)| {
            format!(
                "{} {}: bias {:+.4} repairs {:.3}",
                c.kind.label(),
                c.eta_assumed,
                m.mean_bias,
                m.mean_repairs
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    report.line(6, "estimator hierarchy", ok, detail, t);

    // 7
    let t = Instant::now();
    let purities: Vec<Vec<f64>> = [0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&eta| {
            let q = p.with_eta_true(eta);
            run_pairs(&q, &[]).unwrap().iter().map(|s| purity_of(&s.truth)).collect()
        })
        .collect();
    let means: Vec<f64> = purities.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let mut ok = true;
    let mut sigmas = Vec::new();
    for w in purities.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        let n = d.len() as f64;
        let md = d.iter().sum::<f64>() / n;
        let se = (d.iter().map(|x| (x - md).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        ok &= md > 0.0 && md >= 3.0 * se;
        sigmas.push(md / se);
    }
    report.line(
        7,
        "purity monotonicity",
        ok,
        format!("mean purity {:.4?} over eta 0.3/0.5/0.7/0.9, steps {:.1?} sigma", means, sigmas),
        t,
    );

    // 8
    let t = Instant::now();
    let q = p.with_n_traj(OVERCERT_N);
    let eta_a = 0.35;
    let (opairs, obs) = run_ensemble(&q, &[EstimatorConfig::direct(eta_a)], || {
        ErrorProcessObserver::new(&q, 0, eta_a, 2.0, 10)
    })
    .unwrap();
    let tp: Vec<TerminalPair> = opairs.iter().map(|s| s.terminal(0)).collect();
    let stats = overcert_stats(&tp, &[0.0]).unwrap();
    let fit = obs.acc.fit().unwrap();
    let ou = fit.params.in_quoted_units(quoted);
    let tail0 = ou_tail(&ou, 0.0);
    let ok = within(stats.p_s_over, 0.036, 0.006)
        && within(stats.p_purity_over, 0.0008, 0.0006)
        && between(stats.amplification, 25.0, 70.0)
        && between(ou.mu, 0.9, 1.5)
        && between(ou.e_bar, -0.20, -0.12)
        && between(ou.sigma_e, 0.11, 0.18)
        && between(tail0, 0.035, 0.055)
        && tail0 >= stats.p_s_over;
    report.line(
        8,
        "overcertification",
        ok,
        format!(
            "N = {}, Pr[S_est>S] = {:.4}%, Pr[P_est>P] = {:.4}%, amplification {:.1}, OU mu = {:.3}, E_bar = {:.4}, sigma_E = {:.4} (R^2 {:.4}), ou_tail(0) = {:.4}%",
            stats.n,
            100.0 * stats.p_s_over,
            100.0 * stats.p_purity_over,
            stats.amplification,
            ou.mu,
            ou.e_bar,
            ou.sigma_e,
            fit.r_squared,
            100.0 * tail0
        ),
        t,
    );

    // 9
    let t = Instant::now();
    let land = DriftLandscape::new(&p.rates(), p.eta_true, eta_a, SearchSettings::default());
    let (b_max, argmax) = land.max_drift();
    let b_quoted = b_max / quoted;
    let eps_grid: Vec<f64> = (0..=6).map(|k| 0.05 * k as f64).collect();
    let vacuous = eps_grid.iter().all(|&e| land.bound(e, p.t_final).bound == 1.0);
    let frozen =
        DriftLandscape::new(&Rates::frozen(), p.eta_true, eta_a, SearchSettings::default());
    let fb = frozen.bound(0.2, p.t_final);
    let frozen_ok = (fb.bound - (-fb.alpha * 0.04f64).exp()).abs() <= 1e-15 && fb.bound < 1e-15;
    report.line(
        9,
        "supermartingale",
        within(b_quoted, 0.74, 0.08) && vacuous && frozen_ok,
        format!(
            "max_K b = {:.4} at r = ({:.3}, {:.3}, {:.3}), r_hat = ({:.3}, {:.3}, {:.3}); visited max b = {:.4}; bound = 1 on eps in [0, 0.3]: {vacuous}; frozen bound {:.2e}",
            b_quoted,
            argmax.r.x,
            argmax.r.y,
            argmax.r.z,
            argmax.r_hat.x,
            argmax.r_hat.y,
            argmax.r_hat.z,
            obs.max_visited_drift / quoted,
            fb.bound
        ),
        t,
    );

    // 10
    let t = Instant::now();
    let sweep = ratio_sweep(&p, EstimatorKind::DirectSme, &ratio_grid(12)).unwrap();
    let best = sweep.best_ratio();
    let formula = optimal_eta_ratio(&p, 0.67);
    report.line(
        10,
        "r* sweep",
        within(best, 0.52, 0.10) && within(formula, 0.475, 0.005),
        format!(
            "selected ratio {best:.3} (bias {:+.4}, mismatch {:.4}, matched mismatch {:.4}), formula r*(0.67) = {formula:.4}",
            sweep.points[sweep.best].mean_bias,
            sweep.points[sweep.best].mismatch_rate,
            sweep.matched_mismatch
        ),
        t,
    );

    // 11
    let t = Instant::now();
    let composable = [
        (0.70, 0.05, 0.18, 0.68),
        (0.70, 0.10, 0.15, 0.64),
        (0.90, 0.05, 0.39, 0.86),
        (0.90, 0.10, 0.32, 0.81),
        (0.95, 0.05, 0.48, 0.90),
    ];
    let mut ok = composable.iter().all(|&(s, e, h, f)| {
        let c = composable_point(s, e, 0.0).unwrap();
        within(c.h_min, h, 0.01) && within(c.f_mm, f, 0.01)
    });
    let entanglement =
        [(0.50, 0.750, 0.563), (0.70, 0.850, 0.722), (0.90, 0.950, 0.903), (0.95, 0.975, 0.951)];
    ok &= entanglement.iter().all(|&(s, fi, fin)| {
        within(bell_fidelity(s), fi, 0.001) && within(input_fidelity(s, 1.0), fin, 0.001)
    });
    let (rate, _) = network_rates(10, 0.10, 10.0);
    ok &= rate == 1e5;
    report.line(
        11,
        "certification tables",
        ok,
        format!("5 composable rows, 4 fidelity rows, network rate {rate}/s"),
        t,
    );

    // 12
    let t = Instant::now();
    let round_trip = common::round_trip_gap(10_000, 1);
    let repair = common::psd_repair_oracle_gap(10_000, 2);
    let kalman = common::kalman_oracle_gap(10_000, 3);
    let pipe = SimParams { truth_substeps: 1, ..SimParams::reference() };
    let ks = common::pipeline_ks(&pipe, eta_a, 10_000);
    let conv = SimParams { t_final: 2.0, n_steps: 101, ..SimParams::reference() };
    let (rms, order) = common::self_convergence(&conv, 400);
    report.line(
        12,
        "property suites",
        round_trip < 1e-14 && repair < 1e-12 && kalman < 1e-9 && ks <= 0.02 && order >= 0.5,
        format!(
            "round trip {round_trip:.1e}, PSD repair gap {repair:.1e}, Kalman gap {kalman:.1e}, KS {ks:.4}, strong order {order:.3} (rms {rms:.5?})"
        ),
        t,
    );

    if report.failed.is_empty() {
        println!("all criteria pass");
    } else {
        println!("failing criteria: {:?}", report.failed);
        std::process::exit(1);
    }
}
