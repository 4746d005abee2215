#![allow(dead_code)]

use cohgate::bounds::{error_value, joint_euler_step, JointState};
use cohgate::dynamics::{euler_bloch_step, refine_increments, signal_gain, INITIAL_BLOCH};
use cohgate::estimators::{direct_sme_step, ekf::kalman_update, psd_repair};
use cohgate::rng::NoiseStream;
use cohgate::state::Mat2;
use cohgate::{density_from_bloch, Bloch, QubitState, SimParams};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, SymmetricEigen, Vector2};
use num_complex::Complex64;

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Terminal `E` from (a) truth Euler steps plus the matrix-form direct filter
/// on the synthesized record and (b) the joint 6-D Euler scheme, driven by the
/// same Wiener increments. Returns the KS distance between the two samples.
pub fn pipeline_ks(p: &SimParams, eta_a: f64, n: usize) -> f64 {
    let rates = p.rates();
    let dt = p.dt();
    let (gx, gz) = (signal_gain(p.eta_true, rates.gamma_x), signal_gain(p.eta_true, rates.gamma_z));
    let mut e_pipe = Vec::with_capacity(n);
    let mut e_joint = Vec::with_capacity(n);
    for i in 0..n {
        let mut noise = NoiseStream::for_trajectory(p.base_seed, i);
        let mut r = INITIAL_BLOCH;
        let mut est = QubitState::plus();
        let mut x = JointState::new(INITIAL_BLOCH, INITIAL_BLOCH);
        for _ in 1..p.n_steps {
            let (dwx, dwz) = noise.increments(dt);
            let jx = gx * r.x * dt + dwx;
            let jz = gz * r.z * dt + dwz;
            r = euler_bloch_step(&r, dwx, dwz, &rates, p.eta_true, dt).unwrap().0;
            est = direct_sme_step(&est, jx, jz, &rates, eta_a, dt).unwrap().0;
            x = joint_euler_step(&x, dwx, dwz, &rates, p.eta_true, eta_a, dt);
        }
        e_pipe.push(error_value(&JointState::new(r, est.bloch())));
        e_joint.push(error_value(&x));
    }
    ks_distance(&e_pipe, &e_joint)
}

/// RMS terminal Bloch error against a `dt/16` reference at `dt`, `dt/2`,
/// `dt/4`, `dt/8`, and the least-squares order estimated from them.
pub fn self_convergence(p: &SimParams, paths: usize) -> (Vec<f64>, f64) {
    let rates = p.rates();
    let dt = p.dt();
    let steps = p.n_steps - 1;
    let levels = 4;
    let mut sq = vec![0.0; levels];
    for i in 0..paths {
        let mut noise = NoiseStream::for_trajectory(p.base_seed ^ 0x5eed, i);
        let mut wx = Vec::with_capacity(steps);
        let mut wz = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (a, b) = noise.increments(dt);
            wx.push(a);
            wz.push(b);
        }
        let mut all = vec![(wx, wz)];
        let mut h = dt;
        for _ in 0..levels {
            let (px, pz) = all.last().unwrap();
            let fx = refine_increments(px, h, &mut noise);
            let fz = refine_increments(pz, h, &mut noise);
            all.push((fx, fz));
            h /= 2.0;
        }
        let terminal = |k: usize| {
            let h = dt / f64::powi(2.0, k as i32);
            let (wx, wz) = &all[k];
            let mut r = INITIAL_BLOCH;
            for (a, b) in wx.iter().zip(wz) {
                r = euler_bloch_step(&r, *a, *b, &rates, p.eta_true, h).unwrap().0;
            }
            r
        };
        let reference = terminal(levels);
        for (k, s) in sq.iter_mut().enumerate() {
            *s += (terminal(k) - reference).norm_squared();
        }
    }
    let rms: Vec<f64> = sq.iter().map(|s| (s / paths as f64).sqrt()).collect();
    // Slope of ln err against ln h over the three coarsest levels.
    let pts: Vec<(f64, f64)> =
        (0..3).map(|k| ((dt / f64::powi(2.0, k as i32)).ln(), rms[k].ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (rms, num / den)
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Random Hermitian matrix with trace near one and possibly negative
/// eigenvalues.
pub fn random_hermitian(noise: &mut NoiseStream) -> Mat2 {
    let mut u = || 2.0 * noise.uniform() - 1.0;
    let a = 0.5 + 0.6 * u();
    let d = 1.0 - a + 0.2 * u();
    let off = Complex64::new(0.8 * u(), 0.8 * u());
    Matrix2::new(c(a), off, off.conj(), c(d))
}

/// Eigen-clipping by a general Hermitian eigensolver.
pub fn clip_oracle(h: &Mat2) -> Mat2 {
    let eig = SymmetricEigen::new(*h);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.iter().sum();
    let v = eig.eigenvectors;
    let mut out = Mat2::zeros();
    for k in 0..2 {
        let col = v.column(k);
        out += col * col.adjoint() * c(clipped[k] / total);
    }
    out
}

/// Largest deviation between `psd_repair` and an eigensolver over `n`
/// random Hermitian matrices.
pub fn psd_repair_oracle_gap(n: usize, seed: u64) -> f64 {
    let mut noise = NoiseStream::from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let h = random_hermitian(&mut noise);
        let (got, _) = psd_repair(&h).unwrap();
        let eig = SymmetricEigen::new(h);
        let want = if eig.eigenvalues.min() < -1e-12 || (h.trace().re - 1.0).abs() > 1e-12 {
            clip_oracle(&h)
        } else {
            h
        };
        worst = worst.max((got.rho() - want).norm());
    }
    worst
}

/// Largest deviation between the Kalman update and its information form.
pub fn kalman_oracle_gap(n: usize, seed: u64) -> f64 {
    let mut noise = NoiseStream::from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let mut u = || 2.0 * noise.uniform() - 1.0;
        let r = Bloch::new(0.5 * u(), 0.5 * u(), 0.5 * u());
        let a = Matrix3::from_fn(|_, _| 0.3 * u());
        let cov = a * a.transpose() + Matrix3::identity() * 0.05;
        let h = Matrix2x3::from_fn(|_, _| u());
        let noise_cov = Matrix2::new(0.5 + 0.2 * u(), 0.0, 0.0, 0.5 + 0.2 * u());
        let y = Vector2::new(u(), u());
        let (r_k, p_k) = kalman_update(&r, &cov, &y, &h, &noise_cov).unwrap();
        let r_inv = noise_cov.try_inverse().unwrap();
        let info = cov.try_inverse().unwrap() + h.transpose() * r_inv * h;
        let p_i = info.try_inverse().unwrap();
        let r_i = p_i * (cov.try_inverse().unwrap() * r + h.transpose() * r_inv * y);
        worst = worst.max((r_k - r_i).norm()).max((p_k - p_i).norm());
    }
    worst
}

/// Largest Bloch round-trip error over random vectors in the ball.
pub fn round_trip_gap(n: usize, seed: u64) -> f64 {
    let mut noise = NoiseStream::from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let mut u = || 2.0 * noise.uniform() - 1.0;
        let mut r = Bloch::new(u(), u(), u());
        if r.norm() > 1.0 {
            r /= r.norm();
        }
        let s = density_from_bloch(&r).unwrap();
        worst = worst.max((s.bloch() - r).norm());
        let again = QubitState::new(*s.rho()).unwrap();
        worst = worst.max((again.rho() - s.rho()).norm());
    }
    worst
}
