use super::*;
use crate::spectral::random::{random_field, random_solenoidal};
use std::f64::consts::PI;

/// Fourth-order periodic central differences on a uniform 1-D grid.
fn fd1(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let at = |o: isize| v[((i as isize + o).rem_euclid(n as isize)) as usize];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        })
        .collect()
}

fn fd2(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let at = |o: isize| v[((i as isize + o).rem_euclid(n as isize)) as usize];
            (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h)
        })
        .collect()
}

/// Applies a 1-D stencil along `axis` of a row-major `n × n` array.
fn along(v: &[f64], n: usize, axis: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for line in 0..n {
        let idx = |j: usize| if axis == 0 { j * n + line } else { line * n + j };
        let seg: Vec<f64> = (0..n).map(|j| v[idx(j)]).collect();
        for (j, x) in op(&seg).into_iter().enumerate() {
            out[idx(j)] = x;
        }
    }
    out
}

#[test]
fn constant_and_zero_inputs() {
    let ps = PseudoSpectral::<f64>::new(1, 32, 2.0 / 3.0).unwrap();
    let g = ps.grid();
    let u = SpectralField::from_fn(g, |_| vec![0.7]);
    assert!(ps.ch_rhs_1d(&u, 0.1).unwrap().max_abs() < 1e-15);
    let ps2 = PseudoSpectral::<f64>::new(2, 16, 2.0 / 3.0).unwrap();
    let z = SpectralField::zeros(2, 16);
    assert_eq!(ps2.ch_rhs_nd(&z, 0.3).unwrap().max_abs(), 0.0);
    assert_eq!(ps2.leray_alpha_rhs(&z, 0.3).unwrap().max_abs(), 0.0);
}

#[test]
fn dimension_errors() {
    let ps = PseudoSpectral::<f64>::new(2, 16, 2.0 / 3.0).unwrap();
    let u = random_solenoidal::<f64>(2, 16, 2, 1.0, 1);
    assert!(matches!(ps.ch_rhs_1d(&u, 0.1), Err(Error::Dimension { .. })));
    let bad = random_field::<f64>(2, 16, 2, 1);
    assert!(matches!(ps.ch_rhs_nd(&bad, 0.1), Err(Error::NotSolenoidal(_))));
}

#[test]
fn linear_symbol_gives_exponential_decay() {
    // (1 + k²) ∂_t û = -ν k² (1 + k²) û  ⇒  ∂_t û = -ν k² û
    let ps = PseudoSpectral::<f64>::new(1, 32, 2.0 / 3.0).unwrap();
    let nu = 0.2;
    for k in 1..5i64 {
        let u = SpectralField::from_fn(ps.grid(), |p| vec![1e-8 * (k as f64 * p[0]).sin()]);
        let dm = viscous_term(&u, nu);
        let du = dm.helmholtz_invert();
        let rate = du.coeff(0, &[k]) / u.coeff(0, &[k]);
        assert!((rate.re + nu * (k * k) as f64).abs() < 1e-12);
        assert!(rate.im.abs() < 1e-12);
    }
}

#[test]
fn one_dimensional_rhs_matches_finite_differences() {
    let nu = 0.05;
    let n = 32;
    let fine = 1024;
    let h = 2.0 * PI / fine as f64;
    let ufn = |x: f64| x.sin() + 0.3 * (2.0 * x).cos();
    let xs: Vec<f64> = (0..fine).map(|i| i as f64 * h).collect();
    let u: Vec<f64> = xs.iter().map(|&x| ufn(x)).collect();
    let u1 = fd1(&u, h);
    let u2 = fd2(&u, h);
    let u3 = fd1(&u2, h);
    let m: Vec<f64> = u.iter().zip(&u2).map(|(a, b)| a - b).collect();
    let m2 = fd2(&m, h);
    let oracle: Vec<f64> = (0..fine)
        .map(|i| nu * m2[i] - 3.0 * u[i] * u1[i] + 2.0 * u1[i] * u2[i] + u[i] * u3[i])
        .collect();

    let ps = PseudoSpectral::<f64>::new(1, n, 2.0 / 3.0).unwrap();
    let uf = SpectralField::from_fn(ps.grid(), |p| vec![ufn(p[0])]);
    let rhs = ps.ch_rhs_1d(&uf, nu).unwrap().to_physical(ps.grid());
    let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let stride = fine / n;
    for j in 0..n {
        let err = (rhs[0][j] - oracle[j * stride]).abs() / scale;
        assert!(err <= 1e-6, "j={j}: rel err {err:e}");
    }
    // closed form for u = sin: -3 sin 2θ - 2ν sin θ
    let s = SpectralField::from_fn(ps.grid(), |p| vec![p[0].sin()]);
    let r = ps.ch_rhs_1d(&s, nu).unwrap().to_physical(ps.grid());
    for (j, p) in ps.grid().points().iter().enumerate() {
        let exact = -3.0 * (2.0 * p[0]).sin() - 2.0 * nu * p[0].sin();
        assert!((r[0][j] - exact).abs() < 1e-12, "{} vs {exact}", r[0][j]);
    }
}

/// Real-space oracle for the two nonlinear terms on a fine `nf × nf` grid.
struct Oracle2d {
    nf: usize,
    advection: [Vec<f64>; 2],
    stretching: [Vec<f64>; 2],
}

fn oracle_2d(u: &SpectralField<f64>, nf: usize) -> Oracle2d {
    let h = 2.0 * PI / nf as f64;
    let sp = u.sparse();
    let mut vel = [vec![0.0; nf * nf], vec![0.0; nf * nf]];
    let mut out = vec![0.0; 2];
    for a in 0..nf {
        for b in 0..nf {
            sp.eval_into(&[a as f64 * h, b as f64 * h], &mut out);
            vel[0][a * nf + b] = out[0];
            vel[1][a * nf + b] = out[1];
        }
    }
    let d1 = |v: &[f64], ax: usize| along(v, nf, ax, |s| fd1(s, h));
    let d2 = |v: &[f64], ax: usize| along(v, nf, ax, |s| fd2(s, h));
    let lap: Vec<Vec<f64>> = vel
        .iter()
        .map(|v| {
            let a = d2(v, 0);
            let b = d2(v, 1);
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        })
        .collect();
    let m: Vec<Vec<f64>> = (0..2)
        .map(|i| vel[i].iter().zip(&lap[i]).map(|(a, b)| a - b).collect())
        .collect();
    let mut advection = [vec![0.0; nf * nf], vec![0.0; nf * nf]];
    let mut stretching = [vec![0.0; nf * nf], vec![0.0; nf * nf]];
    for i in 0..2 {
        for l in 0..2 {
            let dm = d1(&m[i], l);
            for p in 0..nf * nf {
                advection[i][p] -= vel[l][p] * dm[p];
            }
        }
        for j in 0..2 {
            let du = d1(&vel[j], i);
            for p in 0..nf * nf {
                stretching[i][p] += du[p] * lap[j][p];
            }
        }
    }
    Oracle2d {
        nf,
        advection,
        stretching,
    }
}

fn compare_on_coarse(ps: &PseudoSpectral<f64>, field: &SpectralField<f64>, oracle: &[&[f64]; 2], nf: usize) -> f64 {
    let n = ps.grid().size();
    let phys = field.to_physical(ps.grid());
    let stride = nf / n;
    let scale = oracle
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for i in 0..2 {
                let o = oracle[i][(a * stride) * nf + b * stride];
                worst = worst.max((phys[i][a * n + b] - o).abs() / scale);
            }
        }
    }
    worst
}

#[test]
fn nd_nonlinear_single_mode_matches_oracle() {
    let eps = 0.3;
    let ps = PseudoSpectral::<f64>::new(2, 16, 2.0 / 3.0).unwrap();
    let u = SpectralField::from_fn(ps.grid(), |p| vec![0.0, eps * p[0].cos()]);
    let orc = oracle_2d(&u, 512);
    let total: [Vec<f64>; 2] = [0, 1].map(|i| {
        orc.advection[i]
            .iter()
            .zip(&orc.stretching[i])
            .map(|(a, b)| a + b)
            .collect()
    });
    let f = ps.ch_nonlinear_nd(&u).unwrap().field;
    let err = compare_on_coarse(&ps, &f, &[&total[0], &total[1]], orc.nf);
    assert!(err <= 1e-6, "rel err {err:e}");
    // the single shear mode is a steady state up to viscosity: P F = 0
    assert!(f.leray_project().max_abs() < 1e-15);
}

#[test]
fn nd_nonlinear_random_field_matches_oracle() {
    let ps = PseudoSpectral::<f64>::new(2, 16, 2.0 / 3.0).unwrap();
    let u = random_solenoidal::<f64>(2, 16, 2, 0.8, 42);
    let orc = oracle_2d(&u, 512);
    let total: [Vec<f64>; 2] = [0, 1].map(|i| {
        orc.advection[i]
            .iter()
            .zip(&orc.stretching[i])
            .map(|(a, b)| a + b)
            .collect()
    });
    let f = ps.ch_nonlinear_nd(&u).unwrap().field;
    let err = compare_on_coarse(&ps, &f, &[&total[0], &total[1]], orc.nf);
    assert!(err <= 1e-6, "CH rel err {err:e}");
    let fl = ps.leray_alpha_nonlinear(&u).unwrap().field;
    let err = compare_on_coarse(&ps, &fl, &[&orc.advection[0], &orc.advection[1]], orc.nf);
    assert!(err <= 1e-6, "Leray-alpha rel err {err:e}");

    // difference of the full right-hand sides is the projected stretching term
    let nu = 0.1;
    let diff = ps.ch_rhs_nd(&u, nu).unwrap().sub(&ps.leray_alpha_rhs(&u, nu).unwrap());
    let n = 16;
    let stride = 512 / n;
    let sampled: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            (0..n * n)
                .map(|p| orc.stretching[i][(p / n) * stride * 512 + (p % n) * stride])
                .collect()
        })
        .collect();
    let mut st = SpectralField::from_physical(ps.grid(), &sampled).unwrap();
    st.truncate(ps.cutoff());
    let st = st.leray_project();
    assert!(diff.sub(&st).max_abs() <= 1e-6 * st.max_abs().max(1e-3));
}

#[test]
fn nd_output_solenoidal_and_dealiased() {
    let ps = PseudoSpectral::<f64>::new(2, 32, 2.0 / 3.0).unwrap();
    let u = random_solenoidal::<f64>(2, 32, 6, 1.0, 5);
    for eq in [Equation::ViscousChNd, Equation::LerayAlpha] {
        let r = ps.rhs(eq, &u, 0.05).unwrap();
        assert!(r.divergence_max() <= 1e-13 * r.max_abs().max(1.0), "{:e}", r.divergence_max());
        assert_eq!(r.max_above_cutoff(ps.cutoff()), 0.0);
        assert!(r.hermitian_defect() <= 1e-13);
    }
}

#[test]
fn pressure_recovers_removed_gradient() {
    let ps = PseudoSpectral::<f64>::new(2, 16, 2.0 / 3.0).unwrap();
    let u = random_solenoidal::<f64>(2, 16, 3, 1.0, 9);
    let f = ps.ch_nonlinear_nd(&u).unwrap().field;
    let (_, grad) = f.leray_split();
    let p = ps.pressure(Equation::ViscousChNd, &u).unwrap();
    for idx in 0..f.len() {
        let k = f.wavevector(idx);
        for c in 0..2 {
            // -∇p̂ = -i k p̂
            let expect = -num_complex::Complex::new(0.0, k[c] as f64) * p[idx];
            assert!((grad.components()[c][idx] - expect).norm() < 1e-13);
        }
    }
}

#[test]
fn equation_names_round_trip() {
    for e in [Equation::ViscousCh1d, Equation::ViscousChNd, Equation::LerayAlpha] {
        assert_eq!(Equation::parse(e.name()).unwrap(), e);
    }
    assert!(Equation::parse("euler").is_err());
    assert_eq!(dealias_cutoff(64, 2.0 / 3.0), 21);
}
