use serde::{Deserialize, Serialize};

use super::identities::{action, time_weights};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::spectral::{DriftPath, SpectralField};

/// Minimizer of `½ ∫ ||u||²_{H¹} dt` over divergence-free paths with `∫ ⟨u, z⟩ dt ≥ c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeResult<F> {
    pub minimizer: DriftPath<F>,
    pub action: F,
    /// Lagrange multiplier `λ` with `(1 - Δ) u = λ P z`.
    pub multiplier: F,
    pub constraint_value: F,
    /// `||Hu - λa|| / ||Hu||` in coefficient space; zero for the trivial minimizer.
    pub kkt_residual: F,
    pub iterations: usize,
}

/// Closed-form minimizer `u* = λ (1 - Δ)⁻¹ P z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleMinimizer<F> {
    pub minimizer: DriftPath<F>,
    pub multiplier: F,
    pub action: F,
}

/// `∫ ⟨u, z⟩_{L²} dt` with the same time quadrature as the action.
pub fn constraint_value<F: Real>(u: &DriftPath<F>, z: &DriftPath<F>) -> F {
    time_weights(u)
        .iter()
        .zip(u.fields.iter().zip(&z.fields))
        .fold(F::zero(), |a, (&w, (x, y))| a + w * x.l2_inner(y))
}

/// Time-integrated `H¹` distance `(∫ ||u - w||²_{H¹} dt)^{1/2}`.
pub fn h1_path_distance<F: Real>(u: &DriftPath<F>, w: &DriftPath<F>) -> F {
    time_weights(u)
        .iter()
        .zip(u.fields.iter().zip(&w.fields))
        .fold(F::zero(), |a, (&wt, (x, y))| a + wt * x.sub(y).h1_norm_sq())
        .sqrt()
}

fn prepared<F: Real>(z: &DriftPath<F>, truncation: Option<i64>) -> Result<Vec<SpectralField<F>>> {
    if z.len() < 2 {
        return Err(Error::Parameter("constraint path needs at least two samples".into()));
    }
    if let Some(k) = truncation {
        if k < 1 {
            return Err(Error::Parameter("truncation must keep at least one shell".into()));
        }
    }
    Ok(z.fields
        .iter()
        .map(|f| {
            let mut p = f.leray_project();
            if let Some(k) = truncation {
                p.truncate(k);
            }
            p
        })
        .collect())
}

fn zero_path<F: Real>(z: &DriftPath<F>) -> DriftPath<F> {
    DriftPath {
        times: z.times.clone(),
        fields: z
            .fields
            .iter()
            .map(|f| {
                let mut o = SpectralField::zeros(f.dim(), f.grid_size());
                o.time = f.time;
                o
            })
            .collect(),
    }
}

/// Solves the quadratic program in closed form.
pub fn minimization_oracle<F: Real>(
    z: &DriftPath<F>,
    c: F,
    truncation: Option<i64>,
) -> Result<OracleMinimizer<F>> {
    let pz = prepared(z, truncation)?;
    if c <= F::zero() {
        return Ok(OracleMinimizer {
            minimizer: zero_path(z),
            multiplier: F::zero(),
            action: F::zero(),
        });
    }
    let weights = time_weights(z);
    let shapes: Vec<SpectralField<F>> = pz.iter().map(|f| f.helmholtz_invert()).collect();
    let denom = shapes
        .iter()
        .zip(&pz)
        .zip(&weights)
        .fold(F::zero(), |a, ((s, p), &w)| a + w * s.l2_inner(p));
    if !(denom > F::zero()) {
        return Err(Error::Infeasible("projected constraint field vanishes".into()));
    }
    let lambda = c / denom;
    let mut minimizer = zero_path(z);
    for (m, s) in minimizer.fields.iter_mut().zip(&shapes) {
        let t = m.time;
        *m = s.scaled(lambda);
        m.time = t;
    }
    Ok(OracleMinimizer {
        minimizer,
        multiplier: lambda,
        action: c * c / (denom + denom),
    })
}

/// Stacked Fourier coefficients, one block per time sample.
struct Coeffs<F> {
    blocks: Vec<Vec<F>>,
}

fn flatten<F: Real>(f: &SpectralField<F>) -> Vec<F> {
    f.components()
        .iter()
        .flat_map(|c| c.iter().flat_map(|z| [z.re, z.im]))
        .collect()
}

fn unflatten<F: Real>(template: &SpectralField<F>, data: &[F]) -> SpectralField<F> {
    let mut out = template.clone();
    let len = template.len();
    for (ci, comp) in out.components_mut().iter_mut().enumerate() {
        for (idx, z) in comp.iter_mut().enumerate() {
            let base = 2 * (ci * len + idx);
            z.re = data[base];
            z.im = data[base + 1];
        }
    }
    out
}

impl<F: Real> Coeffs<F> {
    fn dot(&self, other: &Self) -> F {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(F::zero(), |acc, (&x, &y)| acc + x * y)
    }

    fn axpy(&mut self, s: F, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    fn scaled(&self, s: F) -> Self {
        Coeffs {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&x| s * x).collect())
                .collect(),
        }
    }

    fn apply_diag(&self, diag: &Self) -> Self {
        Coeffs {
            blocks: self
                .blocks
                .iter()
                .zip(&diag.blocks)
                .map(|(b, h)| b.iter().zip(h).map(|(&x, &y)| x * y).collect())
                .collect(),
        }
    }
}

/// Projected conjugate gradients for the constrained minimization.
///
/// The Hessian of the action is diagonal in Fourier coefficients; iterations stay on
/// the constraint hyperplane by projecting residuals orthogonally to the constraint.
pub fn constrained_minimize<F: Real>(
    z: &DriftPath<F>,
    c: F,
    truncation: Option<i64>,
) -> Result<MinimizeResult<F>> {
    let pz = prepared(z, truncation)?;
    if c <= F::zero() {
        let minimizer = zero_path(z);
        return Ok(MinimizeResult {
            constraint_value: constraint_value(&minimizer, z),
            minimizer,
            action: F::zero(),
            multiplier: F::zero(),
            kkt_residual: F::zero(),
            iterations: 0,
        });
    }
    let weights = time_weights(z);
    let d = z.dim();
    let vol = two_pi::<F>().powi(d as i32);
    let a = Coeffs {
        blocks: pz
            .iter()
            .zip(&weights)
            .map(|(f, &w)| flatten(&f.scaled(w * vol)))
            .collect(),
    };
    let diag = Coeffs {
        blocks: pz
            .iter()
            .zip(&weights)
            .map(|(f, &w)| {
                // real and imaginary parts share the multiplier of their mode
                let len = f.len();
                let mut out = Vec::with_capacity(2 * d * len);
                for _ in 0..d {
                    for idx in 0..len {
                        let k2 = F::from_i64_lossy(f.wavevector(idx).iter().map(|x| x * x).sum());
                        let h = w * vol * (F::one() + k2);
                        out.push(h);
                        out.push(h);
                    }
                }
                out
            })
            .collect(),
    };
    let aa = a.dot(&a);
    if !(aa > F::zero()) {
        return Err(Error::Infeasible("projected constraint field vanishes".into()));
    }
    let project = |y: &Coeffs<F>| -> Coeffs<F> {
        let mut out = Coeffs {
            blocks: y.blocks.clone(),
        };
        out.axpy(-(a.dot(y) / aa), &a);
        out
    };
    let mut x = a.scaled(c / aa);
    let g0 = x.apply_diag(&diag);
    let mut r = project(&g0).scaled(-F::one());
    let r0 = g0.dot(&g0).sqrt();
    let tol = F::unit_roundoff() * F::lit(10.0) * r0;
    let mut p = Coeffs {
        blocks: r.blocks.clone(),
    };
    let mut rr = r.dot(&r);
    let max_iter = 2000;
    let mut iterations = 0;
    while rr.sqrt() > tol && iterations < max_iter {
        let hp = p.apply_diag(&diag);
        let php = p.dot(&hp);
        if !(php > F::zero()) {
            break;
        }
        let alpha = rr / php;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &project(&hp));
        let rr_new = r.dot(&r);
        let beta = rr_new / rr;
        rr = rr_new;
        p = {
            let mut np = Coeffs {
                blocks: r.blocks.clone(),
            };
            np.axpy(beta, &p);
            np
        };
        iterations += 1;
    }
    let hx = x.apply_diag(&diag);
    let multiplier_coeff = a.dot(&hx) / aa;
    let mut resid = Coeffs {
        blocks: hx.blocks.clone(),
    };
    resid.axpy(-multiplier_coeff, &a);
    let kkt_residual = resid.dot(&resid).sqrt() / hx.dot(&hx).sqrt();
    let mut minimizer = zero_path(z);
    for ((m, block), tpl) in minimizer.fields.iter_mut().zip(&x.blocks).zip(&pz) {
        let t = m.time;
        *m = unflatten(tpl, block);
        m.time = t;
    }
    Ok(MinimizeResult {
        action: action(&minimizer),
        constraint_value: constraint_value(&minimizer, z),
        multiplier: multiplier_coeff,
        kkt_residual,
        iterations,
        minimizer,
    })
}
