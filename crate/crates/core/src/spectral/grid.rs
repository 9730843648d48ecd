use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Signed wave number of FFT index `j` on an `n`-point axis (Nyquist maps to `+n/2`).
#[inline]
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Uniform tensor grid on `[0, 2π)^d` with `n` points per axis and its FFT plans.
///
/// Flat indices are row-major: axis 0 varies slowest.
pub struct SpectralGrid<F: Real> {
    d: usize,
    n: usize,
    fwd: Arc<dyn Fft<F>>,
    inv: Arc<dyn Fft<F>>,
}

impl<F: Real> std::fmt::Debug for SpectralGrid<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("d", &self.d)
            .field("n", &self.n)
            .finish()
    }
}

impl<F: Real> SpectralGrid<F> {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Parameter(format!("unsupported dimension {d}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            d,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> F {
        two_pi::<F>() / F::from_usize_lossy(self.n)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> Vec<F> {
        let h = self.spacing();
        multi_index(self.d, self.n, idx)
            .into_iter()
            .map(|i| F::from_usize_lossy(i) * h)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<F>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Signed wave vector of spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> Vec<i64> {
        wavevector(self.d, self.n, idx)
    }

    fn transform_axes(&self, buf: &mut [Complex<F>], plan: &Arc<dyn Fft<F>>) {
        let n = self.n;
        let total = self.len();
        let mut scratch = vec![Complex::new(F::zero(), F::zero()); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex::new(F::zero(), F::zero()); n];
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                for chunk in buf.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = buf[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        buf[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Fourier amplitudes `û_k = n^{-d} Σ u(θ) e^{-ik·θ}`.
    pub fn forward(&self, data: &[F]) -> Vec<Complex<F>> {
        assert_eq!(data.len(), self.len());
        let mut buf: Vec<Complex<F>> = data.iter().map(|&x| Complex::new(x, F::zero())).collect();
        self.transform_axes(&mut buf, &self.fwd);
        let scale = F::one() / F::from_usize_lossy(self.len());
        for v in &mut buf {
            *v = *v * scale;
        }
        buf
    }

    /// Real part of `Σ_k û_k e^{ik·θ}` on the grid.
    pub fn inverse(&self, coeffs: &[Complex<F>]) -> Vec<F> {
        assert_eq!(coeffs.len(), self.len());
        let mut buf = coeffs.to_vec();
        self.transform_axes(&mut buf, &self.inv);
        buf.into_iter().map(|c| c.re).collect()
    }
}

pub(crate) fn multi_index(d: usize, n: usize, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for a in (0..d).rev() {
        out[a] = idx % n;
        idx /= n;
    }
    out
}

pub(crate) fn wavevector(d: usize, n: usize, idx: usize) -> Vec<i64> {
    multi_index(d, n, idx)
        .into_iter()
        .map(|j| wavenumber(j, n))
        .collect()
}

/// Flat index of the wave vector `k` (components reduced modulo `n`).
pub(crate) fn index_of(n: usize, k: &[i64]) -> usize {
    let nn = n as i64;
    k.iter()
        .fold(0usize, |acc, &c| acc * n + (c.rem_euclid(nn)) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let g = SpectralGrid::<f64>::new(2, 8).unwrap();
        let data: Vec<f64> = g
            .points()
            .iter()
            .map(|p| (p[0] + 2.0 * p[1]).cos() + 0.5)
            .collect();
        let c = g.forward(&data);
        // cos(θ₁ + 2θ₂) = ½ e^{i(1,2)·θ} + ½ e^{-i(1,2)·θ}
        assert!((c[index_of(8, &[1, 2])].re - 0.5).abs() < 1e-14);
        assert!((c[index_of(8, &[-1, -2])].re - 0.5).abs() < 1e-14);
        assert!((c[0].re - 0.5).abs() < 1e-14);
        let back = g.inverse(&c);
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(g.wavevector(index_of(8, &[-3, 4])), vec![-3, 4]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpectralGrid::<f64>::new(2, 12).is_err());
        assert!(SpectralGrid::<f64>::new(4, 8).is_err());
    }
}
