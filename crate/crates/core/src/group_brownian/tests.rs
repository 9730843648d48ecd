use super::*;
use crate::error::Error;
use crate::fourier_basis::{generator_constants, BasisSet};
use crate::rng::NoiseStream;
use crate::spectral::{random_solenoidal, DriftPath};
use crate::torus::{distance, periodic_delta};

fn basis(d: usize, n: usize) -> BasisSet<f64> {
    BasisSet::with_default_r(d, n, true).unwrap()
}

fn frozen() -> FlowConfig<f64> {
    FlowConfig::viscous(basis(2, 3), 0.0, 0.01, 1).unwrap()
}

#[test]
fn increments_are_standard_normal_and_reproducible() {
    let modes = NoiseModes::new(&basis(2, 2));
    let stream = NoiseStream::new(9, 0);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|s| modes.sample(1.0, &stream, s).unwrap().dx[3][1])
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    assert!((var - 1.0).abs() < 0.05);
    let a = modes.sample(0.3, &stream, 17).unwrap();
    assert_eq!(a, modes.sample(0.3, &stream, 17).unwrap());
    assert_ne!(a, modes.sample(0.3, &stream, 18).unwrap());
    assert_eq!(a.dy.len(), 2);
    assert!(matches!(modes.sample(0.0, &stream, 0), Err(Error::Parameter(_))));
    let without = NoiseModes::new(&BasisSet::<f64>::with_default_r(2, 2, false).unwrap());
    assert!(without.sample(0.3, &stream, 0).unwrap().dy.is_empty());
}

#[test]
fn noise_is_shared_across_truncations() {
    let fine = NoiseModes::new(&basis(2, 4));
    let coarse = NoiseModes::new(&basis(2, 2));
    let idx = fine.restriction(&coarse).unwrap();
    let stream = NoiseStream::new(3, 5);
    let f = fine.sample(0.1, &stream, 2).unwrap();
    let c = coarse.sample(0.1, &stream, 2).unwrap();
    assert_eq!(f.restrict(&idx, true), c);
    assert!(coarse.restriction(&fine).is_err());
}

#[test]
fn euler_step_trivial_cases() {
    let cfg = frozen();
    let e0 = ParticleEnsemble::uniform(2, 50, 4);
    let inc = cfg.sample_increment(0, 0).unwrap();
    assert_eq!(euler_step(&e0, &NoDrift, &inc, &cfg).unwrap().positions, e0.positions);
    let moved = euler_step(&e0, &ConstantDrift(vec![1.0, 0.0]), &inc, &cfg).unwrap();
    for (p, q) in e0.points().zip(moved.points()) {
        assert!((periodic_delta(q[0], p[0]) - 0.01).abs() < 1e-14);
        assert!(periodic_delta(q[1], p[1]).abs() < 1e-15);
    }
    let big = FlowConfig::viscous(basis(2, 3), 0.0, 0.1, 1).unwrap();
    let inc = big.sample_increment(0, 0).unwrap();
    let moved = euler_step(&e0, &ConstantDrift(vec![1.0, 0.0]), &inc, &big).unwrap();
    for (p, q) in e0.points().zip(moved.points()) {
        assert!((periodic_delta(q[0], p[0]) - 0.1).abs() < 1e-14);
    }
    assert!(moved.positions.iter().all(|&x| (0.0..std::f64::consts::TAU).contains(&x)));
    let wrong = FlowConfig::viscous(basis(2, 3), 0.0, 0.2, 1).unwrap();
    let inc = wrong.sample_increment(0, 0).unwrap();
    assert!(matches!(euler_step(&e0, &NoDrift, &inc, &cfg), Err(Error::Parameter(_))));
}

#[test]
fn one_step_is_a_martingale() {
    let cfg = FlowConfig::unscaled(basis(2, 4), 0.01, 21).unwrap();
    let e0 = ParticleEnsemble::new(2, &[vec![1.0, 2.0]]).unwrap();
    let m = 10_000;
    let ends: Vec<Vec<f64>> = (0..m)
        .map(|p| {
            let inc = cfg.sample_increment(p, 0).unwrap();
            euler_step(&e0, &NoDrift, &inc, &cfg).unwrap().point(0).to_vec()
        })
        .collect();
    for a in 0..2 {
        let disp: Vec<f64> = ends.iter().map(|q| periodic_delta(q[a], e0.point(0)[a])).collect();
        let mean = disp.iter().sum::<f64>() / m as f64;
        let sd = (disp.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sd / (m as f64).sqrt());
    }
}

#[test]
fn viscous_flow_has_variance_two_nu_t() {
    let nu = 0.1;
    let cfg = FlowConfig::viscous(basis(2, 4), nu, 0.01, 5).unwrap();
    let e0 = ParticleEnsemble::new(2, &[vec![0.5, 0.5]]).unwrap();
    let t = 0.2;
    let m = 10_000;
    let disp: Vec<[f64; 2]> = (0..m)
        .map(|p| {
            let run = simulate_flow_path(&cfg, &NoDrift, t, &e0, p).unwrap();
            let mut acc = [0.0; 2];
            for w in run.trajectory.windows(2) {
                for (a, x) in acc.iter_mut().enumerate() {
                    *x += periodic_delta(w[1].point(0)[a], w[0].point(0)[a]);
                }
            }
            acc
        })
        .collect();
    for a in 0..2 {
        let ms: Vec<f64> = disp.iter().map(|x| x[a] * x[a]).collect();
        let mean = ms.iter().sum::<f64>() / m as f64;
        let sd = (ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
        let exact = 2.0 * nu * t;
        assert!((mean - exact).abs() <= 4.0 * sd / (m as f64).sqrt(), "{mean} vs {exact}");
    }
}

#[test]
fn flows_are_deterministic_and_coherent() {
    let cfg = FlowConfig::unscaled(basis(2, 3), 0.01, 8).unwrap();
    let e0 = ParticleEnsemble::new(2, &[vec![1.0, 1.0], vec![1.0, 1.0], vec![3.0, 0.2]]).unwrap();
    let a = simulate_flow(&cfg, &NoDrift, 0.1, &e0).unwrap();
    let b = simulate_flow(&cfg, &NoDrift, 0.1, &e0).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.trajectory.len(), 11);
    let last = a.trajectory.last().unwrap();
    assert_eq!(last.point(0), last.point(1));
    assert_ne!(last.point(0), e0.point(0));
    let still = simulate_flow(&frozen(), &NoDrift, 0.1, &e0).unwrap();
    assert!(still.trajectory.iter().all(|s| s.positions == e0.positions));
    assert!(simulate_flow(&cfg, &NoDrift, 0.105, &e0).is_err());
}

fn smooth_path(t_final: f64) -> DriftPath<f64> {
    let u = random_solenoidal::<f64>(2, 16, 2, 0.5, 31);
    let w = random_solenoidal::<f64>(2, 16, 2, 0.5, 32);
    DriftPath::from_fn(t_final, 40, |t| u.axpy(t, &w)).unwrap()
}

fn round_trip_error(cfg: &FlowConfig<f64>, drift: &PathDrift<f64>, t: f64) -> f64 {
    let e0 = ParticleEnsemble::uniform(2, 64, 2);
    let run = simulate_flow(cfg, drift, t, &e0).unwrap();
    let back = simulate_inverse_flow(cfg, drift, t, &run.noise, run.trajectory.last().unwrap())
        .unwrap();
    let end = back.last().unwrap();
    e0.points()
        .zip(end.points())
        .map(|(p, q)| distance(p, q))
        .fold(0.0, f64::max)
}

#[test]
fn inverse_flow_undoes_the_forward_flow() {
    let t = 0.5;
    let drift = PathDrift::new(&smooth_path(t)).unwrap();
    let coarse = round_trip_error(&FlowConfig::viscous(basis(2, 3), 0.0, 0.01, 3).unwrap(), &drift, t);
    let fine = round_trip_error(&FlowConfig::viscous(basis(2, 3), 0.0, 0.005, 3).unwrap(), &drift, t);
    assert!(coarse < 0.05 && fine < coarse);
    let ratio = coarse / fine;
    assert!((1.7..2.3).contains(&ratio), "first-order ratio {ratio}");

    let noisy = |dt| round_trip_error(&FlowConfig::viscous(basis(2, 3), 0.05, dt, 3).unwrap(), &drift, t);
    assert!(noisy(0.0025) < noisy(0.01));

    let still = frozen();
    let e0 = ParticleEnsemble::uniform(2, 10, 1);
    let run = simulate_flow(&still, &NoDrift, 0.1, &e0).unwrap();
    let back = simulate_inverse_flow(&still, &NoDrift, 0.1, &run.noise, &e0).unwrap();
    assert_eq!(back.last().unwrap().positions, e0.positions);
    let mut short = run.noise.clone();
    short.increments.pop();
    assert!(matches!(
        simulate_inverse_flow(&still, &NoDrift, 0.1, &short, &e0),
        Err(Error::MissingNoise(_))
    ));
}

#[test]
fn flows_preserve_the_uniform_measure() {
    let cfg = FlowConfig::viscous(basis(2, 4), 0.1, 0.02, 12).unwrap();
    let drift = PathDrift::new(&smooth_path(0.4)).unwrap();
    let e0 = ParticleEnsemble::uniform(2, 20_000, 6);
    let run = simulate_flow(&cfg, &drift, 0.4, &e0).unwrap();
    let end = run.trajectory.last().unwrap();
    assert!(uniformity_chi_square(end, 8).unwrap().passes(0.01));
    let back = simulate_inverse_flow(&cfg, &drift, 0.4, &run.noise, end).unwrap();
    assert!(uniformity_chi_square(back.last().unwrap(), 8).unwrap().passes(0.01));
    // a compressive map is detected
    let mut squeezed = e0.clone();
    squeezed.positions.iter_mut().step_by(2).for_each(|x| *x *= 0.9);
    assert!(!uniformity_chi_square(&squeezed, 8).unwrap().passes(0.01));
}

#[test]
fn ensemble_mean_displacement_vanishes_at_every_time() {
    let cfg = FlowConfig::unscaled(basis(2, 4), 0.01, 2).unwrap();
    let e0 = ParticleEnsemble::new(2, &vec![vec![1.0, 4.0]; 5_000]).unwrap();
    let traj = simulate_independent(&cfg, &NoDrift, 0.1, &e0).unwrap();
    assert_eq!(traj.len(), 11);
    for snap in &traj[1..] {
        let (mean, se) = mean_displacement(&e0, snap).unwrap();
        for a in 0..2 {
            assert!(se[a] > 0.0 && mean[a].abs() <= 4.0 * se[a]);
        }
    }
    // particle p of the independent ensemble is realization p of the flow
    let single = ParticleEnsemble::new(2, &[vec![1.0, 4.0]]).unwrap();
    let run = simulate_flow_path(&cfg, &NoDrift, 0.1, &single, 7).unwrap();
    assert_eq!(traj[10].point(7), run.trajectory[10].point(0));
}

#[test]
fn generator_of_constants_is_zero() {
    let cfg = FlowConfig::unscaled(basis(2, 3), 1e-3, 1).unwrap();
    let thetas = sample_points::<f64>(2, 4, 1);
    for cv in [false, true] {
        let est = estimate_generator(&cfg, &NoDrift, &[TestFunction::constant(2, 3.0)], &thetas, 200, cv)
            .unwrap();
        assert!(est[0].iter().all(|e| e.estimate == 0.0 && e.std_error == 0.0));
    }
    assert!(matches!(
        estimate_generator(&cfg, &NoDrift, &[TestFunction::constant(2, 1.0)], &thetas, 99, false),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn unscaled_generator_is_c_laplacian() {
    let b = basis(2, 4);
    let c = generator_constants(&b).c[0];
    let cfg = FlowConfig::unscaled(b, 1e-3, 77).unwrap();
    let thetas = sample_points::<f64>(2, 3, 2);
    let f = TestFunction::cos_axis(2, 0);
    let est = richardson_generator(&cfg, &NoDrift, &[f], &thetas, 20_000, true).unwrap();
    for e in &est[0] {
        let exact = -c * e.theta[0].cos();
        assert!((e.target - exact).abs() < 1e-14);
        assert!(e.z_score() <= 3.0, "{e:?}");
        assert!(e.std_error < 0.02);
    }
}

#[test]
fn drifted_generator_adds_transport() {
    let nu = 0.3;
    let cfg = FlowConfig::viscous(basis(2, 4), nu, 1e-3, 19).unwrap();
    let drift = ConstantDrift(vec![1.0, 0.0]);
    let thetas = sample_points::<f64>(2, 3, 3);
    let f = TestFunction::sin_axis(2, 0);
    let est = richardson_generator(&cfg, &drift, &[f], &thetas, 20_000, true).unwrap();
    for e in &est[0] {
        let exact = e.theta[0].cos() - nu * e.theta[0].sin();
        assert!((e.target - exact).abs() < 1e-12);
        assert!(e.z_score() <= 3.0, "{e:?}");
    }
}

#[test]
fn test_functions_have_exact_derivatives() {
    let f = TestFunction::<f64>::sin_sum(3, 0, 2);
    let t = [0.3, -1.1, 2.0];
    assert!((f.value(&t) - (0.3f64 + 2.0).sin()).abs() < 1e-15);
    let h = 1e-5;
    for a in 0..3 {
        let mut p = t;
        let mut m = t;
        p[a] += h;
        m[a] -= h;
        let fd = (f.value(&p) - f.value(&m)) / (2.0 * h);
        assert!((fd - f.gradient(&t)[a]).abs() < 1e-9);
        let gd = (f.gradient(&p)[a] - f.gradient(&m)[a]) / (2.0 * h);
        assert!((gd - f.hessian(&t)[a][a]).abs() < 1e-9);
    }
}

#[test]
fn ito_correction_vanishes() {
    for d in [2, 3] {
        let b = basis(d, 6);
        let pts = sample_points::<f64>(d, 100, 5);
        assert!(ito_stratonovich_gap(&b, &pts) <= 1e-12);
        assert!(ito_stratonovich_gap(&perturb_polarizations(&b, 0.01), &pts) > 1e-4);
    }
    let single = basis(2, 1).truncated(1);
    let m = single.modes.iter().find(|m| m.k.components() == [1, 0]).unwrap();
    assert_eq!(m.eps, vec![0.0, 1.0]);
    assert_eq!(ito_stratonovich_gap(&single, &[vec![1.0, 1.0]]), 0.0);
}

#[test]
fn coupling_of_identical_truncations_is_zero() {
    let b = basis(2, 4);
    let (m, se) = coupling_moment(&b, &b, 0.1, 0.01, 100, 1).unwrap();
    assert_eq!((m, se), (0.0, 0.0));
}

#[test]
fn dyadic_coupling_decreases() {
    let params = CouplingParams {
        d: 2,
        r: 5.0,
        levels: vec![1, 2, 3],
        t_final: 0.2,
        dt: 0.02,
        samples: 200,
        seed: 4,
        include_translation: true,
        mode_limit: DEFAULT_MODE_LIMIT,
    };
    let rep = dyadic_coupling_test(&params).unwrap();
    assert!(rep.strictly_decreasing, "{rep:?}");
    assert!(rep.log2_slope < 0.0);
    let too_big = CouplingParams {
        levels: vec![1, 9],
        ..params
    };
    assert!(matches!(dyadic_coupling_test(&too_big), Err(Error::TooManyModes { .. })));
}

#[test]
fn hoelder_exponent_of_frozen_flow_is_one() {
    let layout = HoelderLayout::<f64>::new(2, 8, 4, 0.5, 3).unwrap();
    let est = hoelder_test(&frozen(), &NoDrift, &layout, &[0.0, 0.1], 3).unwrap();
    for e in &est {
        assert!((e.exponent - 1.0).abs() < 1e-10, "{e:?}");
    }
    let noisy = FlowConfig::unscaled(basis(2, 4), 0.01, 3).unwrap();
    let est = hoelder_test(&noisy, &NoDrift, &layout, &[0.0, 0.05, 0.2], 4).unwrap();
    assert!((est[0].exponent - 1.0).abs() < 1e-10);
    assert_eq!(est[1].pairs, 32);
    assert!(est[2].exponent.is_finite());
    assert!(matches!(
        HoelderLayout::<f64>::new(2, 8, 2, 0.5, 3),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn noise_record_round_trip() {
    let cfg = FlowConfig::unscaled(basis(2, 2), 0.05, 6).unwrap();
    let e0 = ParticleEnsemble::uniform(2, 3, 1);
    let run = simulate_flow(&cfg, &NoDrift, 0.2, &e0).unwrap();
    let mut buf = Vec::new();
    write_noise_record(&mut buf, &run.noise).unwrap();
    let nl = buf.iter().position(|&b| b == b'\n').unwrap();
    let modes = cfg.modes().signed_mode_count();
    assert_eq!(buf.len() - nl - 1, (2 * modes + 2) * 4 * 8);
    let back: NoiseRecord<f64> = read_noise_record(&buf[..]).unwrap();
    assert_eq!(back, run.noise);
    assert!(read_noise_record::<f64, _>(&buf[..buf.len() - 1]).is_err());

    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &run.trajectory).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,particle,theta1,theta2\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 3);
}

#[test]
fn path_drift_interpolates_linearly() {
    let path = smooth_path(1.0);
    let drift = PathDrift::new(&path).unwrap();
    let theta = [0.7, 2.1];
    let mut got = [0.0; 2];
    drift.velocity(0.3125, &theta, &mut got);
    let u0 = path.fields[0].eval_at(&theta);
    let u1 = path.fields[40].eval_at(&theta);
    for a in 0..2 {
        // the path is affine in time, so interpolation is exact
        let exact = u0[a] + 0.3125 * (u1[a] - u0[a]);
        assert!((got[a] - exact).abs() < 1e-13);
    }
}

#[test]
fn three_dimensional_flow_runs_in_single_precision() {
    let b = BasisSet::<f32>::with_default_r(3, 2, true).unwrap();
    let cfg = FlowConfig::viscous(b, 0.1, 0.01, 1).unwrap();
    let e0 = ParticleEnsemble::<f32>::uniform(3, 20, 2);
    let run = simulate_flow(&cfg, &NoDrift, 0.05, &e0).unwrap();
    assert_eq!(run.trajectory.len(), 6);
    assert!(run.trajectory[5].positions.iter().all(|x| x.is_finite()));
}
