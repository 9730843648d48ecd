use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::grid::{index_of, wavevector, SpectralGrid};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// A real vector field on `T^d` stored as Fourier amplitudes, one array per component.
///
/// `u(θ) = Σ_k û_k e^{ik·θ}`; a field of dimension 1 has a single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField<F> {
    d: usize,
    n: usize,
    pub time: F,
    comps: Vec<Vec<Complex<F>>>,
}

fn czero<F: Real>() -> Complex<F> {
    Complex::new(F::zero(), F::zero())
}

impl<F: Real> SpectralField<F> {
    pub fn zeros(d: usize, n: usize) -> Self {
        let len = n.pow(d as u32);
        Self {
            d,
            n,
            time: F::zero(),
            comps: vec![vec![czero(); len]; d],
        }
    }

    pub fn from_components(d: usize, n: usize, comps: Vec<Vec<Complex<F>>>) -> Result<Self> {
        let len = n.pow(d as u32);
        if comps.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: comps.len(),
            });
        }
        if comps.iter().any(|c| c.len() != len) {
            return Err(Error::Format("component length does not match grid".into()));
        }
        Ok(Self {
            d,
            n,
            time: F::zero(),
            comps,
        })
    }

    /// Transforms physical samples (one array per component) to Fourier space.
    pub fn from_physical(grid: &SpectralGrid<F>, values: &[Vec<F>]) -> Result<Self> {
        if values.len() != grid.dim() {
            return Err(Error::Dimension {
                expected: grid.dim(),
                found: values.len(),
            });
        }
        let comps = values.iter().map(|v| grid.forward(v)).collect();
        Self::from_components(grid.dim(), grid.size(), comps)
    }

    /// Samples an analytic field on the grid.
    pub fn from_fn(grid: &SpectralGrid<F>, f: impl Fn(&[F]) -> Vec<F>) -> Self {
        let pts = grid.points();
        let mut values = vec![Vec::with_capacity(pts.len()); grid.dim()];
        for p in &pts {
            for (c, v) in f(p).into_iter().enumerate() {
                values[c].push(v);
            }
        }
        Self::from_physical(grid, &values).expect("consistent sampling")
    }

    pub fn to_physical(&self, grid: &SpectralGrid<F>) -> Vec<Vec<F>> {
        self.comps.iter().map(|c| grid.inverse(c)).collect()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[Vec<Complex<F>>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex<F>>] {
        &mut self.comps
    }

    pub fn wavevector(&self, idx: usize) -> Vec<i64> {
        wavevector(self.d, self.n, idx)
    }

    /// Amplitude of component `c` at wave vector `k`.
    pub fn coeff(&self, c: usize, k: &[i64]) -> Complex<F> {
        self.comps[c][index_of(self.n, k)]
    }

    pub fn set_coeff(&mut self, c: usize, k: &[i64], v: Complex<F>) {
        let idx = index_of(self.n, k);
        self.comps[c][idx] = v;
    }

    fn same_shape(&self, other: &Self) {
        assert_eq!((self.d, self.n), (other.d, other.n), "field shape mismatch");
    }

    /// Applies a per-mode scalar multiplier `μ(k, |k|²)`.
    pub fn map_modes(&self, mu: impl Fn(&[i64], F) -> F) -> Self {
        let mut out = self.clone();
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            let k2 = F::from_i64_lossy(k.iter().map(|c| c * c).sum());
            let m = mu(&k, k2);
            for c in &mut out.comps {
                c[idx] = c[idx] * m;
            }
        }
        out
    }

    /// Same field on an `n`-point grid: shared modes are copied, the rest dropped or zero.
    ///
    /// Nyquist modes of either grid are discarded so the result stays real.
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zeros(self.d, n);
        let limit = (self.n.min(n) / 2) as i64;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            if k.iter().all(|&c| c.abs() < limit) {
                let j = index_of(n, &k);
                for (o, c) in out.comps.iter_mut().zip(&self.comps) {
                    o[j] = c[idx];
                }
            }
        }
        out.time = self.time;
        out
    }

    /// Momentum `m = (1 - Δ) u`.
    pub fn helmholtz_apply(&self) -> Self {
        self.map_modes(|_, k2| F::one() + k2)
    }

    /// Velocity `u = (1 - Δ)⁻¹ m`.
    pub fn helmholtz_invert(&self) -> Self {
        self.map_modes(|_, k2| (F::one() + k2).recip())
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|_, k2| -k2)
    }

    /// Leray projection `(I - kkᵀ/|k|²) û`; the mean mode is kept.
    pub fn leray_project(&self) -> Self {
        self.leray_split().0
    }

    /// Splits into the solenoidal part and the removed gradient part.
    pub fn leray_split(&self) -> (Self, Self) {
        let mut sol = self.clone();
        let mut grad = Self::zeros(self.d, self.n);
        grad.time = self.time;
        if self.d == 1 {
            // 1-D fields keep their mean only; the rest is a gradient.
            for idx in 1..self.len() {
                grad.comps[0][idx] = self.comps[0][idx];
                sol.comps[0][idx] = czero();
            }
            return (sol, grad);
        }
        for idx in 1..self.len() {
            let k = self.wavevector(idx);
            let kf: Vec<F> = k.iter().map(|&c| F::from_i64_lossy(c)).collect();
            let k2: F = kf.iter().map(|&x| x * x).sum();
            let mut dot = czero::<F>();
            for (c, &kc) in kf.iter().enumerate() {
                dot = dot + self.comps[c][idx] * kc;
            }
            let s = dot / k2;
            for (c, &kc) in kf.iter().enumerate() {
                let g = s * kc;
                grad.comps[c][idx] = g;
                sol.comps[c][idx] = self.comps[c][idx] - g;
            }
        }
        (sol, grad)
    }

    /// `max_k |k·û(k)|`.
    pub fn divergence_max(&self) -> F {
        let mut worst = F::zero();
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            let mut dot = czero::<F>();
            for (c, &kc) in k.iter().enumerate() {
                dot = dot + self.comps[c][idx] * F::from_i64_lossy(kc);
            }
            worst = worst.max(dot.norm());
        }
        worst
    }

    /// `max |û(k) - conj(û(-k))|`, zero for a real field.
    pub fn hermitian_defect(&self) -> F {
        let mut worst = F::zero();
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            let neg: Vec<i64> = k.iter().map(|c| -c).collect();
            let j = index_of(self.n, &neg);
            for c in &self.comps {
                worst = worst.max((c[idx] - c[j].conj()).norm());
            }
        }
        worst
    }

    /// Largest amplitude over all components and modes.
    pub fn max_abs(&self) -> F {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(F::zero(), F::max)
    }

    /// Largest amplitude at modes with some `|k_a|` above `cutoff`.
    pub fn max_above_cutoff(&self, cutoff: i64) -> F {
        let mut worst = F::zero();
        for idx in 0..self.len() {
            if self.wavevector(idx).iter().any(|c| c.abs() > cutoff) {
                for c in &self.comps {
                    worst = worst.max(c[idx].norm());
                }
            }
        }
        worst
    }

    /// Zeros every mode with some `|k_a| > cutoff`.
    pub fn truncate(&mut self, cutoff: i64) {
        for idx in 0..self.len() {
            if self.wavevector(idx).iter().any(|c| c.abs() > cutoff) {
                for c in &mut self.comps {
                    c[idx] = czero();
                }
            }
        }
    }

    /// Weighted Parseval sum `(2π)^d Σ_k μ(|k|²) Re(û_k · conj(ŵ_k))`.
    pub fn weighted_inner(&self, other: &Self, mu: impl Fn(F) -> F) -> F {
        self.same_shape(other);
        let vol = two_pi::<F>().powi(self.d as i32);
        let mut acc = F::zero();
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            let k2 = F::from_i64_lossy(k.iter().map(|c| c * c).sum());
            let mut s = F::zero();
            for (a, b) in self.comps.iter().zip(&other.comps) {
                s += (a[idx] * b[idx].conj()).re;
            }
            acc += mu(k2) * s;
        }
        vol * acc
    }

    /// `∫ u·w dθ`.
    pub fn l2_inner(&self, other: &Self) -> F {
        self.weighted_inner(other, |_| F::one())
    }

    /// `∫ u·w + ∇u:∇w dθ`.
    pub fn h1_inner(&self, other: &Self) -> F {
        self.weighted_inner(other, |k2| F::one() + k2)
    }

    pub fn l2_norm_sq(&self) -> F {
        self.l2_inner(self)
    }

    pub fn h1_norm_sq(&self) -> F {
        self.h1_inner(self)
    }

    /// `||∇u||²`.
    pub fn grad_norm_sq(&self) -> F {
        self.weighted_inner(self, |k2| k2)
    }

    /// `||Δu||²`.
    pub fn lap_norm_sq(&self) -> F {
        self.weighted_inner(self, |k2| k2 * k2)
    }

    pub fn scaled(&self, s: F) -> Self {
        let mut out = self.clone();
        for c in &mut out.comps {
            for v in c.iter_mut() {
                *v = *v * s;
            }
        }
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: F, other: &Self) -> Self {
        self.same_shape(other);
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y * s;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-F::one(), other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(F::one(), other)
    }

    /// Nonzero modes as a compact list for pointwise trigonometric evaluation.
    pub fn sparse(&self) -> SparseField<F> {
        let mut ks = Vec::new();
        let mut coefs = Vec::new();
        for idx in 0..self.len() {
            if self.comps.iter().any(|c| c[idx].norm() > F::zero()) {
                let k: Vec<F> = self
                    .wavevector(idx)
                    .iter()
                    .map(|&c| F::from_i64_lossy(c))
                    .collect();
                ks.push(k);
                coefs.push(self.comps.iter().map(|c| c[idx]).collect());
            }
        }
        SparseField {
            d: self.d,
            ks,
            coefs,
        }
    }

    /// Direct trigonometric evaluation at an arbitrary point.
    pub fn eval_at(&self, theta: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.d];
        self.sparse().eval_into(theta, &mut out);
        out
    }
}

/// Nonzero Fourier modes of a field, evaluated exactly at arbitrary points.
#[derive(Debug, Clone)]
pub struct SparseField<F> {
    d: usize,
    ks: Vec<Vec<F>>,
    coefs: Vec<Vec<Complex<F>>>,
}

impl<F: Real> SparseField<F> {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mode_count(&self) -> usize {
        self.ks.len()
    }

    /// Writes `Re Σ_k û_k e^{ik·θ}` into `out`.
    pub fn eval_into(&self, theta: &[F], out: &mut [F]) {
        out.iter_mut().for_each(|o| *o = F::zero());
        for (k, c) in self.ks.iter().zip(&self.coefs) {
            let arg = k.iter().zip(theta).fold(F::zero(), |a, (&ki, &t)| a + ki * t);
            let (s, co) = arg.sin_cos();
            for (o, v) in out.iter_mut().zip(c) {
                *o += v.re * co - v.im * s;
            }
        }
    }

    /// Adds `scale` times the field at `θ` into `out`.
    pub fn accumulate(&self, theta: &[F], scale: F, out: &mut [F]) {
        for (k, c) in self.ks.iter().zip(&self.coefs) {
            let arg = k.iter().zip(theta).fold(F::zero(), |a, (&ki, &t)| a + ki * t);
            let (s, co) = arg.sin_cos();
            for (o, v) in out.iter_mut().zip(c) {
                *o += scale * (v.re * co - v.im * s);
            }
        }
    }

    /// Value and Jacobian `∂_j u^i` at `θ`.
    pub fn eval_with_jacobian(&self, theta: &[F], val: &mut [F], jac: &mut [Vec<F>]) {
        val.iter_mut().for_each(|o| *o = F::zero());
        jac.iter_mut().flatten().for_each(|o| *o = F::zero());
        for (k, c) in self.ks.iter().zip(&self.coefs) {
            let arg = k.iter().zip(theta).fold(F::zero(), |a, (&ki, &t)| a + ki * t);
            let (s, co) = arg.sin_cos();
            for (i, v) in c.iter().enumerate() {
                val[i] += v.re * co - v.im * s;
                let dv = -(v.re * s + v.im * co);
                for (j, &kj) in k.iter().enumerate() {
                    jac[i][j] += dv * kj;
                }
            }
        }
    }

    /// Value, Jacobian `∂_j u^i` and Hessian `∂_j ∂_l u^i` at `θ`, flattened row-major.
    pub fn eval_jet(&self, theta: &[F], val: &mut [F], jac: &mut [F], hess: &mut [F]) {
        let d = self.d;
        val.iter_mut().for_each(|o| *o = F::zero());
        jac.iter_mut().for_each(|o| *o = F::zero());
        hess.iter_mut().for_each(|o| *o = F::zero());
        for (k, c) in self.ks.iter().zip(&self.coefs) {
            let arg = k.iter().zip(theta).fold(F::zero(), |a, (&ki, &t)| a + ki * t);
            let (s, co) = arg.sin_cos();
            for (i, v) in c.iter().enumerate() {
                let f0 = v.re * co - v.im * s;
                let f1 = -(v.re * s + v.im * co);
                val[i] += f0;
                for j in 0..d {
                    jac[i * d + j] += f1 * k[j];
                    for l in 0..d {
                        hess[(i * d + j) * d + l] -= f0 * k[j] * k[l];
                    }
                }
            }
        }
    }
}
