use rayon::prelude::*;

use super::variation::VariationField;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::SpectralGrid;

/// Second-order jet of `e_ε(t, ·)` sampled on a reference grid.
///
/// `jac[p*d*d + i*d + j] = ∂_j e^i` and `hess[p*d³ + (i*d + j)*d + l] = ∂_j ∂_l e^i`
/// at grid point `p`.
#[derive(Debug, Clone)]
pub struct MapJet<F> {
    pub time: F,
    pub points: Vec<F>,
    pub jac: Vec<F>,
    pub hess: Vec<F>,
}

/// Perturbation flow `∂_t e_ε = ε v̇(t, e_ε)`, `e_ε(0) = id`, with first and second derivatives.
#[derive(Debug, Clone)]
pub struct VariationFlow<F> {
    pub epsilon: F,
    pub grid_size: usize,
    pub substeps: usize,
    pub maps: Vec<MapJet<F>>,
    field: VariationField<F>,
    times: Vec<F>,
}

/// Right-hand side of the augmented jet system at one point.
fn jet_rhs<F: Real>(
    v: &VariationField<F>,
    eps: F,
    t: F,
    d: usize,
    state: &[F],
    out: &mut [F],
    scratch: &mut (Vec<F>, Vec<F>, Vec<F>),
) {
    let (val, dv, d2v) = scratch;
    let (e, rest) = state.split_at(d);
    let (jac, hess) = rest.split_at(d * d);
    v.vdot_jet(t, e, val, dv, d2v);
    let (oe, orest) = out.split_at_mut(d);
    let (oj, oh) = orest.split_at_mut(d * d);
    for i in 0..d {
        oe[i] = eps * val[i];
        for j in 0..d {
            let mut s = F::zero();
            for k in 0..d {
                s += dv[i * d + k] * jac[k * d + j];
            }
            oj[i * d + j] = eps * s;
            for l in 0..d {
                let mut s = F::zero();
                for k in 0..d {
                    s += dv[i * d + k] * hess[(k * d + j) * d + l];
                    for m in 0..d {
                        s += d2v[(i * d + k) * d + m] * jac[k * d + j] * jac[m * d + l];
                    }
                }
                oh[(i * d + j) * d + l] = eps * s;
            }
        }
    }
}

fn rk4<F: Real>(
    state: &mut [F],
    t: F,
    h: F,
    mut f: impl FnMut(F, &[F], &mut [F]),
) {
    let n = state.len();
    let mut k1 = vec![F::zero(); n];
    let mut k2 = vec![F::zero(); n];
    let mut k3 = vec![F::zero(); n];
    let mut k4 = vec![F::zero(); n];
    let mut tmp = vec![F::zero(); n];
    let half = h / F::lit(2.0);
    f(t, state, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + half * k1[i];
    }
    f(t + half, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + half * k2[i];
    }
    f(t + half, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    let sixth = h / F::lit(6.0);
    for i in 0..n {
        state[i] += sixth * (k1[i] + F::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
}

/// Integrates the perturbation flow on an `n`-point grid and records its jet at `times`.
///
/// `times` must start at 0 and increase; each interval is split into `substeps` RK4 steps.
pub fn variation_flow<F: Real>(
    v: &VariationField<F>,
    epsilon: F,
    times: &[F],
    grid_size: usize,
    substeps: usize,
) -> Result<VariationFlow<F>> {
    if times.first().copied() != Some(F::zero()) {
        return Err(Error::Parameter("perturbation flow starts at t = 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("flow times must increase".into()));
    }
    if substeps == 0 {
        return Err(Error::Parameter("substeps must be positive".into()));
    }
    let d = v.dim();
    let grid = SpectralGrid::<F>::new(d, grid_size)?;
    let width = d + d * d + d * d * d;
    let points = grid.points();
    let per_point: Vec<Vec<Vec<F>>> = points
        .par_iter()
        .map(|p| {
            let mut state = vec![F::zero(); width];
            state[..d].copy_from_slice(p);
            for i in 0..d {
                state[d + i * d + i] = F::one();
            }
            let mut scratch = (vec![F::zero(); d], vec![F::zero(); d * d], vec![F::zero(); d * d * d]);
            let mut snaps = Vec::with_capacity(times.len());
            snaps.push(state.clone());
            for w in times.windows(2) {
                let h = (w[1] - w[0]) / F::from_usize_lossy(substeps);
                for s in 0..substeps {
                    let t = w[0] + F::from_usize_lossy(s) * h;
                    rk4(&mut state, t, h, |t, y, out| {
                        jet_rhs(v, epsilon, t, d, y, out, &mut scratch)
                    });
                }
                snaps.push(state.clone());
            }
            snaps
        })
        .collect();
    let maps = times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut jet = MapJet {
                time: t,
                points: Vec::with_capacity(points.len() * d),
                jac: Vec::with_capacity(points.len() * d * d),
                hess: Vec::with_capacity(points.len() * d * d * d),
            };
            for snaps in &per_point {
                let s = &snaps[ti];
                jet.points.extend_from_slice(&s[..d]);
                jet.jac.extend_from_slice(&s[d..d + d * d]);
                jet.hess.extend_from_slice(&s[d + d * d..]);
            }
            jet
        })
        .collect();
    Ok(VariationFlow {
        epsilon,
        grid_size,
        substeps,
        maps,
        field: v.clone(),
        times: times.to_vec(),
    })
}

fn det<F: Real>(d: usize, m: &[F]) -> F {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
    }
}

/// Inverse of a `d × d` row-major matrix with `d ≤ 3`.
pub(crate) fn invert<F: Real>(d: usize, m: &[F]) -> Vec<F> {
    let dt = det(d, m);
    match d {
        1 => vec![dt.recip()],
        2 => vec![m[3] / dt, -m[1] / dt, -m[2] / dt, m[0] / dt],
        _ => {
            let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0 * 3 + c0] * m[r1 * 3 + c1] - m[r0 * 3 + c1] * m[r1 * 3 + c0];
            vec![
                c(1, 1, 2, 2) / dt,
                -c(0, 1, 2, 2) / dt,
                c(0, 1, 1, 2) / dt,
                -c(1, 0, 2, 2) / dt,
                c(0, 0, 2, 2) / dt,
                -c(0, 0, 1, 2) / dt,
                c(1, 0, 2, 1) / dt,
                -c(0, 0, 2, 1) / dt,
                c(0, 0, 1, 1) / dt,
            ]
        }
    }
}

pub(crate) fn determinant<F: Real>(d: usize, m: &[F]) -> F {
    det(d, m)
}

impl<F: Real> VariationFlow<F> {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    /// Applies `e_ε(t_i, ·)⁻¹` to `points` by integrating backward to time 0.
    pub fn inverse(&self, time_index: usize, points: &[F]) -> Vec<F> {
        let d = self.dim();
        let eps = self.epsilon;
        let field = &self.field;
        let mut out = points.to_vec();
        out.par_chunks_mut(d).for_each(|y| {
            let mut val = vec![F::zero(); d];
            let mut jac = vec![F::zero(); d * d];
            let mut hess = vec![F::zero(); d * d * d];
            for ti in (1..=time_index).rev() {
                let (t0, t1) = (self.times[ti - 1], self.times[ti]);
                let h = (t1 - t0) / F::from_usize_lossy(self.substeps);
                for s in 0..self.substeps {
                    let t = t1 - F::from_usize_lossy(s) * h;
                    rk4(y, t, -h, |t, x, o| {
                        field.vdot_jet(t, x, &mut val, &mut jac, &mut hess);
                        for i in 0..d {
                            o[i] = eps * val[i];
                        }
                    });
                }
            }
        });
        out
    }

    /// `max |det ∂e_ε - 1|` over all recorded times and grid points.
    pub fn volume_defect(&self) -> F {
        let d = self.dim();
        self.maps
            .iter()
            .flat_map(|m| m.jac.chunks(d * d).map(move |j| (det(d, j) - F::one()).abs()))
            .fold(F::zero(), F::max)
    }

    /// `max |e_ε⁻¹(e_ε(θ)) - θ|` at time index `ti`.
    pub fn inverse_defect(&self, ti: usize) -> F {
        let d = self.dim();
        let grid = SpectralGrid::<F>::new(d, self.grid_size).expect("grid validated on construction");
        let back = self.inverse(ti, &self.maps[ti].points);
        let mut worst = F::zero();
        for (p, q) in back.chunks(d).enumerate() {
            let x = grid.point(p);
            for a in 0..d {
                worst = worst.max((q[a] - x[a]).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::variation_battery;

    #[test]
    fn jet_matches_finite_differences_and_preserves_volume() {
        let t_final = 0.5;
        let v = &variation_battery::<f64>(2, 1, 2, t_final, 3).unwrap()[0];
        let times: Vec<f64> = (0..=4).map(|i| i as f64 * t_final / 4.0).collect();
        let eps = 0.1;
        let flow = variation_flow(v, eps, &times, 8, 16).unwrap();
        assert!(flow.volume_defect() < 1e-6, "{}", flow.volume_defect());
        assert!(flow.inverse_defect(2) < 1e-6);

        // Jacobian against a centered difference of the map through a shifted grid.
        let h = 1e-5;
        let shifted = |dx: f64| {
            let mut state = vec![0.0; 2];
            state[0] = 0.3 + dx;
            state[1] = 1.1;
            let mut val = vec![0.0; 2];
            let mut jac = vec![0.0; 4];
            let mut hess = vec![0.0; 8];
            for w in times[..3].windows(2) {
                let hh = (w[1] - w[0]) / 8.0;
                for s in 0..8 {
                    let t = w[0] + s as f64 * hh;
                    rk4(&mut state, t, hh, |t, x, o| {
                        v.vdot_jet(t, x, &mut val, &mut jac, &mut hess);
                        o[0] = eps * val[0];
                        o[1] = eps * val[1];
                    });
                }
            }
            state
        };
        let (p, m) = (shifted(h), shifted(-h));
        let fd = [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)];
        // same point integrated with the full jet
        let mut state = vec![0.0; 2 + 4 + 8];
        state[0] = 0.3;
        state[1] = 1.1;
        state[2] = 1.0;
        state[5] = 1.0;
        let mut scratch = (vec![0.0; 2], vec![0.0; 4], vec![0.0; 8]);
        for w in times[..3].windows(2) {
            let hh = (w[1] - w[0]) / 8.0;
            for s in 0..8 {
                let t = w[0] + s as f64 * hh;
                rk4(&mut state, t, hh, |t, y, o| jet_rhs(v, eps, t, 2, y, o, &mut scratch));
            }
        }
        assert!((state[2] - fd[0]).abs() < 1e-8);
        assert!((state[4] - fd[1]).abs() < 1e-8);
    }

    #[test]
    fn epsilon_derivative_is_the_variation() {
        let t_final = 1.0;
        let v = &variation_battery::<f64>(2, 1, 2, t_final, 9).unwrap()[0];
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * t_final / 8.0).collect();
        let h = 1e-4;
        let plus = variation_flow(v, h, &times, 4, 8).unwrap();
        let minus = variation_flow(v, -h, &times, 4, 8).unwrap();
        let grid = SpectralGrid::<f64>::new(2, 4).unwrap();
        for ti in [3, 5] {
            let t = times[ti];
            for p in 0..grid.len() {
                let x = grid.point(p);
                let mut vv = vec![0.0; 2];
                v.value(t, &x, &mut vv);
                for a in 0..2 {
                    let fd = (plus.maps[ti].points[2 * p + a] - minus.maps[ti].points[2 * p + a]) / (2.0 * h);
                    assert!((fd - vv[a]).abs() < 1e-6, "{fd} vs {}", vv[a]);
                }
            }
        }
    }
}
