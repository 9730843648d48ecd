use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{determinant, invert, variation_flow};
use super::identities::{time_weights, VariationClass};
use super::variation::VariationField;
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::spectral::{DriftPath, SpectralField, SpectralGrid};

/// Discretization of the finite-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Points per axis of the reference grid carrying the perturbation flow.
    pub grid_size: usize,
    /// RK4 steps per time sample for the flow.
    pub substeps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_size: 32,
            substeps: 4,
        }
    }
}

/// `∂_axis` of each component on the grid; the Nyquist line is dropped.
fn physical_gradient<F: Real>(grid: &SpectralGrid<F>, field: &SpectralField<F>) -> Vec<Vec<Vec<F>>> {
    let (d, n) = (grid.dim(), grid.size());
    let half = (n / 2) as i64;
    field
        .components()
        .iter()
        .map(|c| {
            (0..d)
                .map(|axis| {
                    let coeffs: Vec<Complex<F>> = c
                        .iter()
                        .enumerate()
                        .map(|(idx, &z)| {
                            let k = grid.wavevector(idx)[axis];
                            if k.abs() == half {
                                Complex::new(F::zero(), F::zero())
                            } else {
                                z * Complex::new(F::zero(), F::from_i64_lossy(k))
                            }
                        })
                        .collect();
                    grid.inverse(&coeffs)
                })
                .collect()
        })
        .collect()
}

/// Action of the drift obtained by deforming `u` along `v` with amplitude `ε`.
///
/// For [`VariationClass::Ch`] the deformed drift is `W ∘ e_ε⁻¹` with
/// `W = ∂_t e_ε + ∂e_ε·u + νΔe_ε`; its `H¹` norm is computed by pulling back
/// through `e_ε`, so no interpolation is needed. For [`VariationClass::Leray`]
/// the deformed drift is `W` itself.
pub fn perturbed_action<F: Real>(
    u: &DriftPath<F>,
    v: &VariationField<F>,
    nu: F,
    epsilon: F,
    class: VariationClass,
    config: OracleConfig,
) -> Result<F> {
    let d = u.dim();
    if d != v.dim() {
        return Err(Error::Dimension {
            expected: d,
            found: v.dim(),
        });
    }
    let grid = SpectralGrid::<F>::new(d, config.grid_size)?;
    let flow = variation_flow(v, epsilon, &u.times, config.grid_size, config.substeps)?;
    let weights = time_weights(u);
    let cell = (two_pi::<F>() / F::from_usize_lossy(config.grid_size)).powi(d as i32);
    let npts = grid.len();
    let norms: Vec<F> = flow
        .maps
        .par_iter()
        .zip(&u.fields)
        .map(|(jet, uf)| -> Result<F> {
            let t = jet.time;
            let us = uf.sparse();
            let mut w = vec![vec![F::zero(); npts]; d];
            let mut val = vec![F::zero(); d];
            let mut jac = vec![F::zero(); d * d];
            let mut hess = vec![F::zero(); d * d * d];
            let mut uval = vec![F::zero(); d];
            for p in 0..npts {
                let e = &jet.points[p * d..(p + 1) * d];
                let de = &jet.jac[p * d * d..(p + 1) * d * d];
                let d2e = &jet.hess[p * d * d * d..(p + 1) * d * d * d];
                v.vdot_jet(t, e, &mut val, &mut jac, &mut hess);
                us.eval_into(&grid.point(p), &mut uval);
                for i in 0..d {
                    let mut s = epsilon * val[i];
                    for l in 0..d {
                        s += de[i * d + l] * uval[l] + nu * d2e[(i * d + l) * d + l];
                    }
                    w[i][p] = s;
                }
            }
            let wf = SpectralField::from_physical(&grid, &w)?;
            let grad = physical_gradient(&grid, &wf);
            let mut acc = F::zero();
            for p in 0..npts {
                let mut s = F::zero();
                for wi in &w {
                    s += wi[p] * wi[p];
                }
                match class {
                    VariationClass::Leray => {
                        for gi in &grad {
                            for ga in gi {
                                s += ga[p] * ga[p];
                            }
                        }
                        acc += s;
                    }
                    VariationClass::Ch => {
                        let de = &jet.jac[p * d * d..(p + 1) * d * d];
                        let inv = invert(d, de);
                        for gi in &grad {
                            for j in 0..d {
                                let mut g = F::zero();
                                for a in 0..d {
                                    g += gi[a][p] * inv[a * d + j];
                                }
                                s += g * g;
                            }
                        }
                        acc += s * determinant(d, de);
                    }
                }
            }
            Ok(acc * cell)
        })
        .collect::<Result<_>>()?;
    Ok(F::lit(0.5)
        * norms
            .iter()
            .zip(&weights)
            .fold(F::zero(), |a, (&x, &wt)| a + wt * x))
}

/// Central difference `(A(ε) - A(-ε)) / 2ε` of the perturbed action.
pub fn fd_derivative<F: Real>(
    u: &DriftPath<F>,
    v: &VariationField<F>,
    nu: F,
    epsilon: F,
    class: VariationClass,
    config: OracleConfig,
) -> Result<F> {
    let plus = perturbed_action(u, v, nu, epsilon, class, config)?;
    let minus = perturbed_action(u, v, nu, -epsilon, class, config)?;
    Ok((plus - minus) / (epsilon + epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdPoint<F> {
    pub epsilon: F,
    pub derivative: F,
    pub error: F,
}

/// Finite-difference ladder compared against an analytic first variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdStudy<F> {
    pub reference: F,
    pub points: Vec<FdPoint<F>>,
    /// Convergence order from the last two rungs; `None` if an error vanished.
    pub observed_order: Option<F>,
    /// Second-order Richardson value from the last two rungs.
    pub extrapolated: Option<F>,
}

impl<F: Real> FdStudy<F> {
    pub fn finest(&self) -> Option<&FdPoint<F>> {
        self.points.last()
    }
}

/// Runs [`fd_derivative`] over a decreasing `epsilons` ladder.
pub fn fd_study<F: Real>(
    u: &DriftPath<F>,
    v: &VariationField<F>,
    nu: F,
    class: VariationClass,
    reference: F,
    epsilons: &[F],
    config: OracleConfig,
) -> Result<FdStudy<F>> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > F::zero())) {
        return Err(Error::Parameter("epsilon ladder must be positive and non-empty".into()));
    }
    let points: Vec<FdPoint<F>> = epsilons
        .iter()
        .map(|&eps| {
            let derivative = fd_derivative(u, v, nu, eps, class, config)?;
            Ok(FdPoint {
                epsilon: eps,
                derivative,
                error: (derivative - reference).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let observed_order = match points.as_slice() {
        [.., a, b] if a.error > F::zero() && b.error > F::zero() => {
            Some((a.error / b.error).ln() / (a.epsilon / b.epsilon).ln())
        }
        _ => None,
    };
    let extrapolated = match points.as_slice() {
        [.., a, b] => {
            let q = (a.epsilon / b.epsilon).powi(2);
            Some(b.derivative + (b.derivative - a.derivative) / (q - F::one()))
        }
        _ => None,
    };
    Ok(FdStudy {
        reference,
        points,
        observed_order,
        extrapolated,
    })
}
