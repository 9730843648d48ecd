//! Acceptance suite. Each test writes one `criterion N: PASS|FAIL ...` line to
//! the real stdout, so the lines show up even when test output is captured.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::io::Write;
use std::path::Path;

use chalpha::fourier_basis::{
    frame_deviation, generator_constants, log_bound_study, log_radii, orthogonality_defect, BasisSet,
};
use chalpha::group_brownian::{
    dyadic_coupling_test, ito_stratonovich_gap, richardson_generator, sample_points, ConstantDrift, CouplingParams,
    FlowConfig, NoDrift, ParticleEnsemble, TestFunction, DEFAULT_MODE_LIMIT,
};
use chalpha::rng::mix;
use chalpha::spectral::{random_solenoidal, DriftPath, Equation, Solver, SolverConfig, SpectralField, SpectralGrid};
use chalpha::variational::{
    constrained_minimize, criticality_check, fd_study, h1_path_distance, minimization_oracle, pairing,
    random_drift_path, variation_battery, OracleConfig, VariationClass,
};

use chalpha_cli::commands::{bumped_path, critical_path};

fn report(n: usize, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n:>2}: {verdict} {name}: {detail}").unwrap();
    out.flush().unwrap();
}

#[test]
fn criterion_01_basis_identities() {
    let mut worst_orth: f64 = 0.0;
    let mut worst_frame: f64 = 0.0;
    let mut off2: f64 = 0.0;
    let mut off3: f64 = 0.0;
    for d in [2, 3] {
        for n in 1..=16 {
            let b = BasisSet::<f64>::with_default_r(d, n, true).unwrap();
            worst_orth = worst_orth.max(orthogonality_defect(&b));
            worst_frame = worst_frame.max(frame_deviation(&b));
            let off = generator_constants(&b).off_diagonal_max;
            if d == 2 {
                off2 = off2.max(off);
            } else {
                off3 = off3.max(off);
            }
        }
    }
    let pass = worst_orth <= 1e-12 && worst_frame <= 1e-12 && off2 <= 1e-10 && off3.is_finite();
    report(
        1,
        "basis identities",
        pass,
        format!("max |k.eps| or ||eps|-1| {worst_orth:.2e}, frame {worst_frame:.2e}, off-diagonal d=2 {off2:.2e}, d=3 {off3:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_ito_stratonovich_gap() {
    let mut gap: f64 = 0.0;
    for d in [2, 3] {
        let b = BasisSet::<f64>::with_default_r(d, 16, true).unwrap();
        gap = gap.max(ito_stratonovich_gap(&b, &sample_points(d, 100, 2026)));
    }
    let pass = gap <= 1e-12;
    report(2, "Ito-Stratonovich gap", pass, format!("max contraction {gap:.2e} over 100 points, N=16, d=2,3"));
    assert!(pass);
}

fn generator_setup() -> (FlowConfig<f64>, Vec<TestFunction<f64>>, Vec<Vec<f64>>) {
    let basis = BasisSet::<f64>::build(2, 8, 5.0, true).unwrap();
    let config = FlowConfig::unscaled(basis, 1e-3, 2026).unwrap();
    let fs = vec![
        TestFunction::cos_axis(2, 0),
        TestFunction::sin_sum(2, 0, 1),
        TestFunction::constant(2, 1.0),
    ];
    let thetas = ParticleEnsemble::<f64>::lattice(2, 4).points().map(|p| p.to_vec()).collect();
    (config, fs, thetas)
}

const GENERATOR_SAMPLES: usize = 100_000;

#[test]
fn criterion_03_generator() {
    let (config, fs, thetas) = generator_setup();
    let est = richardson_generator(&config, &NoDrift, &fs, &thetas, GENERATOR_SAMPLES, false).unwrap();
    let max_z = est.iter().flatten().map(|e| e.z_score()).fold(0.0, f64::max);
    let max_se = est.iter().flatten().map(|e| e.std_error).fold(0.0, f64::max);
    let pass = max_z <= 3.0;
    report(
        3,
        "generator",
        pass,
        format!("max z {max_z:.2} over 3 functions x 16 points, max SE {max_se:.3}, c = {:.6}", config.constants().c[0]),
    );
    assert!(pass);
}

#[test]
fn criterion_04_drifted_generator() {
    let (config, fs, thetas) = generator_setup();
    let u = vec![0.7, -0.4];
    let drift = ConstantDrift(u.clone());
    let with = richardson_generator(&config, &drift, &fs, &thetas, GENERATOR_SAMPLES, false).unwrap();
    let without = richardson_generator(&config, &NoDrift, &fs, &thetas, GENERATOR_SAMPLES, false).unwrap();
    let max_z = with.iter().flatten().map(|e| e.z_score()).fold(0.0, f64::max);
    // transport part alone: drifted minus undrifted against u.grad f
    let mut max_tz: f64 = 0.0;
    for (f, (a, b)) in fs.iter().zip(with.iter().zip(&without)) {
        for (x, y) in a.iter().zip(b) {
            let g = f.gradient(&x.theta);
            let transport = u[0] * g[0] + u[1] * g[1];
            let err = (x.extrapolated - y.extrapolated - transport).abs();
            let se = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
            if err > 0.0 {
                max_tz = max_tz.max(err / se);
            }
        }
    }
    let pass = max_z <= 3.0 && max_tz <= 3.0;
    report(
        4,
        "drifted generator",
        pass,
        format!("max z {max_z:.2} against the full target, {max_tz:.2} on the transport term alone"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_log_bound() {
    let mut directions = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
    for v in sample_points::<f64>(2, 4, 5) {
        directions.push(v.iter().map(|x| x - std::f64::consts::PI).collect());
    }
    let radii = log_radii(1e-3, FRAC_PI_4 - 1e-3, 40);
    let study = log_bound_study(&directions, &radii, 4, 64).unwrap();
    let pass = study.violations == 0 && study.c1.is_finite() && study.c1 > 0.0;
    report(
        5,
        "log bound",
        pass,
        format!("C1 = {:.4}, {} points checked, {} violations", study.c1, study.rows.len(), study.violations),
    );
    assert!(pass);
}

#[test]
fn criterion_06_dyadic_coupling() {
    let rep = dyadic_coupling_test(&CouplingParams {
        d: 2,
        r: 5.0,
        levels: vec![1, 2, 3, 4],
        t_final: 0.5,
        dt: 1e-2,
        samples: 1000,
        seed: 2026,
        include_translation: true,
        mode_limit: DEFAULT_MODE_LIMIT,
    })
    .unwrap();
    let moments: Vec<String> = rep.levels.iter().map(|l| format!("{:.3e}", l.moment)).collect();
    let pass = rep.strictly_decreasing && rep.log2_slope < 0.0;
    report(
        6,
        "dyadic coupling",
        pass,
        format!("moments [{}], log2 slope {:.3}", moments.join(", "), rep.log2_slope),
    );
    assert!(pass);
}

fn solver(d: usize, eq: Equation, nu: f64, dt: f64, n: usize) -> Solver<f64> {
    Solver::new(d, SolverConfig::new(eq, nu, dt, n)).unwrap()
}

fn decay_rate_error() -> f64 {
    let nu = 0.1;
    let mut worst: f64 = 0.0;
    // small 1-D wave and a finite-amplitude 2-D shear, which the nonlinearity leaves alone
    let g1 = SpectralGrid::<f64>::new(1, 32).unwrap();
    let u1 = SpectralField::from_fn(&g1, |p| vec![1e-6 * p[0].sin()]);
    let g2 = SpectralGrid::<f64>::new(2, 32).unwrap();
    let u2 = SpectralField::from_fn(&g2, |p| {
        let c = (2.0 * p[0] + p[1]).cos();
        vec![c / 5f64.sqrt(), -2.0 * c / 5f64.sqrt()]
    });
    for (d, eq, u0, k) in [
        (1, Equation::ViscousCh1d, u1, vec![1i64]),
        (2, Equation::ViscousChNd, u2.clone(), vec![2, 1]),
        (2, Equation::LerayAlpha, u2, vec![2, 1]),
    ] {
        let path = solver(d, eq, nu, 0.01, 32).solve(&u0, 1.0, 10).unwrap();
        let k2 = k.iter().map(|c| c * c).sum::<i64>() as f64;
        let c0 = u0.coeff(0, &k);
        for (t, u) in path.times.iter().zip(&path.fields).skip(1) {
            let rate = -(u.coeff(0, &k) / c0).norm().ln() / t;
            worst = worst.max((rate - nu * k2).abs());
        }
    }
    worst
}

fn inviscid_h1_drift() -> f64 {
    let g = SpectralGrid::<f64>::new(1, 256).unwrap();
    let u0 = SpectralField::from_fn(&g, |p| vec![0.3 * p[0].sin() + 0.1 * (2.0 * p[0]).cos()]);
    let path = solver(1, Equation::ViscousCh1d, 0.0, 2e-3, 256).solve(&u0, 1.0, 10).unwrap();
    let h0 = path.fields[0].h1_norm_sq().sqrt();
    path.fields
        .iter()
        .map(|u| (u.h1_norm_sq().sqrt() - h0).abs() / h0)
        .fold(0.0, f64::max)
}

fn self_convergence_order(d: usize, eq: Equation) -> f64 {
    let n = if d == 1 { 64 } else { 32 };
    let u0 = if d == 1 {
        let g = SpectralGrid::<f64>::new(1, n).unwrap();
        SpectralField::from_fn(&g, |p| vec![p[0].sin() + 0.2 * (3.0 * p[0]).cos()])
    } else {
        random_solenoidal::<f64>(d, n, 3, 1.0, 5)
    };
    let finals: Vec<SpectralField<f64>> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| solver(d, eq, 0.05, dt, n).solve(&u0, 0.2, 1).unwrap().fields.pop().unwrap())
        .collect();
    let e1 = finals[0].sub(&finals[1]).h1_norm_sq().sqrt();
    let e2 = finals[1].sub(&finals[2]).h1_norm_sq().sqrt();
    (e1 / e2).log2()
}

fn divergence_every_step() -> f64 {
    let mut worst: f64 = 0.0;
    for eq in [Equation::ViscousChNd, Equation::LerayAlpha] {
        let s = solver(2, eq, 0.01, 5e-3, 64);
        let mut u = s.prepare(&random_solenoidal::<f64>(2, 64, 4, 1.0, 2)).unwrap();
        for _ in 0..100 {
            u = s.step(&u).unwrap();
            worst = worst.max(u.divergence_max());
        }
    }
    worst
}

#[test]
fn criterion_07_pde_solver() {
    let rate = decay_rate_error();
    let drift = inviscid_h1_drift();
    let order = [
        (1, Equation::ViscousCh1d),
        (2, Equation::ViscousChNd),
        (2, Equation::LerayAlpha),
    ]
    .iter()
    .map(|&(d, eq)| self_convergence_order(d, eq))
    .fold(f64::INFINITY, f64::min);
    let div = divergence_every_step();
    let pass = rate <= 1e-4 && drift <= 1e-5 && order >= 1.9 && div <= 1e-12;
    report(
        7,
        "PDE solver",
        pass,
        format!("(a) rate error {rate:.2e} (b) H1 drift {drift:.2e} (c) min order {order:.3} (d) max div {div:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_first_variation_identity() {
    let (t_final, nu, pairs) = (1.0, 0.05, 20);
    let battery = variation_battery::<f64>(2, pairs, 2, t_final, 2026).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for class in [VariationClass::Ch, VariationClass::Leray] {
        let mut max_gap: f64 = 0.0;
        let mut orders = Vec::new();
        let mut max_fd_gap: f64 = 0.0;
        for (i, v) in battery.iter().enumerate() {
            let u = random_drift_path::<f64>(2, 16, 3, t_final, 64, mix(&[2026, i as u64])).unwrap();
            let terms = pairing(&u, v, nu, class).unwrap();
            max_gap = max_gap.max((terms.first_variation - terms.weak_pairing).abs() / terms.scale);
            if i < 2 {
                let study = fd_study(
                    &u,
                    v,
                    nu,
                    class,
                    terms.first_variation,
                    &[0.01, 0.005, 0.0025],
                    OracleConfig {
                        grid_size: 16,
                        substeps: 2,
                    },
                )
                .unwrap();
                let extrapolated = study.extrapolated.unwrap_or(f64::NAN);
                let fd_gap = (extrapolated - terms.first_variation).abs() / terms.scale;
                max_fd_gap = max_fd_gap.max(fd_gap);
                pass &= fd_gap <= 1e-6;
                let order = study.observed_order.unwrap_or(f64::NAN);
                pass &= (order - 2.0).abs() <= 0.1;
                orders.push(format!("{order:.3}"));
            }
        }
        pass &= max_gap <= 1e-6;
        details.push(format!(
            "{}: max gap {max_gap:.2e}, FD orders [{}], extrapolated FD gap {max_fd_gap:.2e}",
            class.name(),
            orders.join(", ")
        ));
    }
    report(8, "first variation identity", pass, details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_09_criticality() {
    let (nu, dt, t_final, grid) = (0.05, 1.0 / 128.0, 0.25, 64);
    let class = VariationClass::Ch;
    let battery = variation_battery::<f64>(2, 6, 2, t_final, 7).unwrap();
    let run = |grid: usize, dt: f64| {
        let u = critical_path(class, 2, grid, nu, dt, t_final, 1.0, 4, 11).unwrap();
        let r = criticality_check(&u, &battery, nu, class, dt).unwrap();
        (u, r)
    };
    let (u, coarse) = run(grid, dt);
    let (_, fine) = run(2 * grid, dt / 2.0);
    let control = criticality_check(&bumped_path(&u, 0.1, 13, 2).unwrap(), &battery, nu, class, dt).unwrap();
    let ratio = coarse.tolerance / fine.tolerance;
    let pass = coarse.pass && fine.pass && ratio >= 2.0 && !control.pass;
    report(
        9,
        "criticality",
        pass,
        format!(
            "coarse {:.2e} <= {:.2e}, fine {:.2e} <= {:.2e}, tolerance ratio {ratio:.2}, control {:.2e} > {:.2e}",
            coarse.max_first_variation,
            coarse.tolerance,
            fine.max_first_variation,
            fine.tolerance,
            control.max_first_variation,
            control.tolerance
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_minimization() {
    let (c, t_final) = (1.0, 1.0);
    let mut worst_dist: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut worst_constraint: f64 = 0.0;
    for s in 0..5u64 {
        let a = random_solenoidal::<f64>(2, 16, 3, 1.0, mix(&[s, 1]));
        let g = chalpha::spectral::random_field::<f64>(2, 16, 3, mix(&[s, 2]));
        let z = DriftPath::from_fn(t_final, 10, |t| {
            a.scaled(1.0 + (std::f64::consts::PI * t / t_final).sin()).add(&g.scaled(t / t_final))
        })
        .unwrap();
        let result = constrained_minimize(&z, c, None).unwrap();
        let oracle = minimization_oracle(&z, c, None).unwrap();
        let size = h1_path_distance(&oracle.minimizer, &oracle.minimizer.scaled(0.0));
        worst_dist = worst_dist.max(h1_path_distance(&result.minimizer, &oracle.minimizer) / size);
        worst_kkt = worst_kkt.max(result.kkt_residual);
        worst_constraint = worst_constraint.max((result.constraint_value - c).abs());
    }
    let pass = worst_dist <= 1e-8 && worst_kkt <= 1e-10 && worst_constraint <= 1e-10;
    report(
        10,
        "constrained minimization",
        pass,
        format!("relative H1 distance {worst_dist:.2e}, KKT {worst_kkt:.2e}, constraint gap {worst_constraint:.2e}"),
    );
    assert!(pass);
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    files
}

#[test]
fn criterion_11_reproducibility() {
    let commands: [&[&str]; 11] = [
        &["basis-report"],
        &["simulate-flow", "--particles", "200", "--t-final", "0.2", "--bins", "2"],
        &["estimate-generator", "--samples", "200", "--grid-per-axis", "2", "--n-max", "3"],
        &["dyadic-test", "--levels", "1,2", "--samples", "50", "--t-final", "0.1"],
        &["hoelder-test", "--bases", "8", "--realizations", "2", "--times", "0,0.2"],
        &["solve-pde", "--grid", "16", "--max-mode", "2", "--t-final", "0.0625", "--record-every", "2"],
        &["energy-report", "--grid", "16", "--max-mode", "2", "--t-final", "0.0625"],
        &["check-variation", "--battery", "2", "--fd-count", "1", "--steps", "16"],
        &["criticality", "--grid", "16", "--max-mode", "2", "--battery", "2", "--t-final", "0.0625"],
        &["minimize-action"],
        &["v-bound", "--points", "8", "--random-directions", "1"],
    ];
    let root = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let runs: Vec<BTreeMap<String, Vec<u8>>> = ["a", "b"]
            .iter()
            .map(|tag| {
                let dir = root.path().join(format!("{i:02}{tag}"));
                let mut argv = vec!["chalpha", "--seed", "17", "--out", dir.to_str().unwrap()];
                argv.extend_from_slice(args);
                chalpha_cli::run_args(argv);
                artifacts(&dir)
            })
            .collect();
        files += runs[0].len();
        if runs[0].is_empty() || runs[0] != runs[1] {
            mismatched.push(args[0]);
        }
    }
    let pass = mismatched.is_empty();
    report(
        11,
        "reproducibility",
        pass,
        format!("{} commands, {files} artifacts compared, mismatched: {mismatched:?}", commands.len()),
    );
    assert!(pass);
}
