use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::spectral::{random_solenoidal, DriftPath, Equation, Solver, SolverConfig, SpectralField};

/// Smooth divergence-free path `cos(t) a + sin(2t) b` with modes `|k_a| ≤ 3`.
fn analytic_path(n: usize, t_final: f64, steps: usize, seed: u64) -> DriftPath<f64> {
    let a = random_solenoidal::<f64>(2, n, 3, 1.0, seed);
    let b = random_solenoidal::<f64>(2, n, 2, 0.5, seed + 1);
    DriftPath::from_fn(t_final, steps, |t| a.scaled(t.cos()).axpy((2.0 * t).sin(), &b)).unwrap()
}

#[test]
fn integration_by_parts_identity_holds() {
    let u = analytic_path(16, 1.0, 64, 5);
    let battery = variation_battery::<f64>(2, 4, 2, 1.0, 11).unwrap();
    for class in [VariationClass::Ch, VariationClass::Leray] {
        for v in &battery {
            let p = pairing(&u, v, 0.05, class).unwrap();
            let gap = (p.first_variation - p.weak_pairing).abs();
            assert!(p.scale > 0.0);
            assert!(gap <= 1e-6 * p.scale, "{class:?}: gap {gap:e}, scale {}", p.scale);
        }
    }
}

#[test]
fn zero_drift_has_zero_first_variation() {
    let u = DriftPath::from_fn(1.0, 16, |_| SpectralField::<f64>::zeros(2, 8)).unwrap();
    let v = &variation_battery::<f64>(2, 1, 1, 1.0, 2).unwrap()[0];
    let p = pairing(&u, v, 0.1, VariationClass::Ch).unwrap();
    assert_eq!(p.first_variation, 0.0);
    assert_eq!(p.weak_pairing, 0.0);
}

#[test]
fn finite_difference_oracle_converges_at_second_order() {
    let u = analytic_path(16, 0.5, 24, 21);
    let v = &variation_battery::<f64>(2, 1, 1, 0.5, 4).unwrap()[0];
    let nu = 0.1;
    for class in [VariationClass::Ch, VariationClass::Leray] {
        let terms = pairing(&u, v, nu, class).unwrap();
        let reference = terms.first_variation;
        let study = fd_study(
            &u,
            v,
            nu,
            class,
            reference,
            &[0.01, 0.005, 0.0025],
            OracleConfig {
                grid_size: 16,
                substeps: 2,
            },
        )
        .unwrap();
        let extrapolated = study.extrapolated.unwrap();
        assert!(
            (extrapolated - reference).abs() <= 1e-6 * terms.scale,
            "{class:?}: {:?}",
            study
        );
        let order = study.observed_order.unwrap();
        assert!((1.7..=2.3).contains(&order), "{class:?}: order {order}");
    }
}

#[test]
fn ramp_variation_is_rejected() {
    let shape = random_solenoidal::<f64>(2, 8, 1, 1.0, 3);
    let err = VariationField::new(
        1.0,
        vec![VariationTerm {
            profile: TimeProfile::Ramp,
            shape,
        }],
    )
    .unwrap_err();
    assert!(matches!(err, Error::EndpointVariation(_)));
}

#[test]
fn compressible_variation_is_rejected() {
    let mut shape = SpectralField::<f64>::zeros(2, 8);
    shape.set_coeff(0, &[1, 0], num_complex::Complex::new(0.5, 0.0));
    shape.set_coeff(0, &[-1, 0], num_complex::Complex::new(0.5, 0.0));
    let err = VariationField::new(
        1.0,
        vec![VariationTerm {
            profile: TimeProfile::Sine(1),
            shape,
        }],
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotSolenoidal(_)));
}

#[test]
fn under_resolved_grid_is_refused() {
    let u = analytic_path(16, 1.0, 8, 1);
    let v = &variation_battery::<f64>(2, 1, 10, 1.0, 2).unwrap()[0];
    assert!(matches!(pairing(&u, v, 0.1, VariationClass::Ch), Err(Error::Parameter(_))));
}

#[test]
fn empty_battery_is_an_error() {
    let u = analytic_path(16, 1.0, 8, 1);
    let err = criticality_check(&u, &[], 0.1, VariationClass::Ch, 0.1).unwrap_err();
    assert!(matches!(err, Error::EmptyBattery));
}

#[test]
fn solver_output_is_nearly_critical_and_perturbation_is_not() {
    let (nu, t_final, dt) = (0.05, 0.25, 1.0 / 256.0);
    let u0 = random_solenoidal::<f64>(2, 32, 3, 1.0, 8);
    let solver = Solver::new(2, SolverConfig::new(Equation::ViscousChNd, nu, dt, 32)).unwrap();
    let u = solver.solve(&u0, t_final, 1).unwrap();
    let battery = variation_battery::<f64>(2, 3, 2, t_final, 77).unwrap();
    let report = criticality_check(&u, &battery, nu, VariationClass::Ch, dt).unwrap();
    assert!(report.pass, "normalized {}", report.normalized());

    let w = random_solenoidal::<f64>(2, 32, 2, 1.0, 99);
    let bumped = DriftPath::new(
        u.times.clone(),
        u.fields
            .iter()
            .zip(&u.times)
            .map(|(f, &t)| f.axpy(0.1 * (std::f64::consts::PI * t / t_final).sin(), &w))
            .collect(),
    )
    .unwrap();
    let control = criticality_check(&bumped, &battery, nu, VariationClass::Ch, dt).unwrap();
    assert!(!control.pass);
}

fn constraint_path(seed: u64) -> DriftPath<f64> {
    let a = random_solenoidal::<f64>(2, 16, 3, 1.0, seed);
    let g = crate::spectral::random_field::<f64>(2, 16, 2, seed + 7);
    DriftPath::from_fn(1.0, 10, |t| a.scaled(1.0 + t).add(&g.scaled(t * t))).unwrap()
}

#[test]
fn minimizer_matches_closed_form() {
    let z = constraint_path(3);
    let c = 2.0;
    let cg = constrained_minimize(&z, c, None).unwrap();
    let oracle = minimization_oracle(&z, c, None).unwrap();
    let dist = h1_path_distance(&cg.minimizer, &oracle.minimizer);
    let size = h1_path_distance(&oracle.minimizer, &minimization_oracle(&z, 0.0, None).unwrap().minimizer);
    assert!(dist <= 1e-8 * size, "{dist:e} vs {size:e}");
    assert!(cg.kkt_residual <= 1e-10, "{:e}", cg.kkt_residual);
    assert!((cg.action - oracle.action).abs() <= 1e-10 * oracle.action);
    assert!((cg.constraint_value - c).abs() <= 1e-10 * c);
    assert!((cg.multiplier - oracle.multiplier).abs() <= 1e-8 * oracle.multiplier.abs());
}

#[test]
fn feasible_probes_never_beat_the_minimizer() {
    let z = constraint_path(4);
    let c = 1.5;
    let best = constrained_minimize(&z, c, Some(3)).unwrap();
    for seed in 0..8 {
        let probe = DriftPath::from_fn(1.0, 10, |t: f64| {
            random_solenoidal::<f64>(2, 16, 3, 1.0, 100 + seed).scaled(1.0 + t.sin())
        })
        .unwrap();
        let g = constraint_value(&probe, &z);
        if g.abs() < 1e-8 {
            continue;
        }
        let feasible = probe.scaled(c / g);
        assert!(action(&feasible) >= best.action * (1.0 - 1e-12));
    }
}

#[test]
fn degenerate_constraints() {
    let z = constraint_path(5);
    let trivial = constrained_minimize(&z, -1.0, None).unwrap();
    assert_eq!(trivial.action, 0.0);
    let grad = {
        let mut f = SpectralField::<f64>::zeros(2, 8);
        f.set_coeff(0, &[1, 0], num_complex::Complex::new(0.5, 0.0));
        f.set_coeff(0, &[-1, 0], num_complex::Complex::new(0.5, 0.0));
        DriftPath::from_fn(1.0, 4, |_| f.clone()).unwrap()
    };
    assert!(matches!(constrained_minimize(&grad, 1.0, None), Err(Error::Infeasible(_))));
    assert!(matches!(minimization_oracle(&grad, 1.0, None), Err(Error::Infeasible(_))));
}

#[test]
fn single_precision_identity() {
    let a = random_solenoidal::<f32>(2, 16, 2, 1.0, 1);
    let u = DriftPath::from_fn(1.0f32, 32, |t| a.scaled(t.cos())).unwrap();
    let v = &variation_battery::<f32>(2, 1, 1, 1.0, 2).unwrap()[0];
    let p = pairing(&u, v, 0.1, VariationClass::Ch).unwrap();
    assert!((p.first_variation - p.weak_pairing).abs() <= 1e-3 * p.scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simpson_weights_sum_to_length(n in 2usize..40, h in 0.01f64..1.0) {
        let total: f64 = simpson_weights(n, h).iter().sum();
        prop_assert!((total - h * (n - 1) as f64).abs() < 1e-12 * (1.0 + h * n as f64));
    }

    #[test]
    fn battery_vanishes_at_both_ends(seed in 0u64..1000, t_final in 0.1f64..3.0) {
        let v = &variation_battery::<f64>(2, 1, 2, t_final, seed).unwrap()[0];
        let mut out = [1.0; 2];
        for t in [0.0, t_final] {
            v.value(t, &[0.4, 1.7], &mut out);
            prop_assert_eq!(out, [0.0, 0.0]);
        }
    }

    #[test]
    fn pairing_is_linear_in_the_variation(s in -3.0f64..3.0) {
        let u = analytic_path(16, 1.0, 16, 9);
        let v = &variation_battery::<f64>(2, 1, 1, 1.0, 6).unwrap()[0];
        let base = pairing(&u, v, 0.1, VariationClass::Ch).unwrap();
        let sc = pairing(&u, &v.scaled(s), 0.1, VariationClass::Ch).unwrap();
        prop_assert!((sc.first_variation - s * base.first_variation).abs() <= 1e-10 * (1.0 + base.scale));
    }
}
