//! Reproducible random smooth fields for tests, batteries and initial data.

use num_complex::Complex;

use super::field::SpectralField;
use crate::fourier_basis::canonical_representative;
use crate::rng::{mix, NoiseStream};
use crate::scalar::Real;

fn gaussian(stream: &NoiseStream, k: &[i64], slot: u64) -> (f64, f64) {
    let mut words: Vec<u64> = k.iter().map(|&c| c as u64).collect();
    words.push(slot);
    stream.normal_pair(0, mix(&words))
}

/// Real field with Gaussian amplitudes on every mode with `0 < max_a |k_a| ≤ max_mode`,
/// damped by `(1 + |k|²)^{-1}`. Not divergence free.
pub fn random_field<F: Real>(d: usize, n: usize, max_mode: i64, seed: u64) -> SpectralField<F> {
    assert!(3 * max_mode < n as i64, "modes must fit below the dealiasing cutoff");
    let stream = NoiseStream::new(seed, 0x7261_6e64);
    let mut f = SpectralField::zeros(d, n);
    let range = -max_mode..=max_mode;
    let mut k = vec![-max_mode; d];
    loop {
        if let Ok(rep) = canonical_representative(&k) {
            if rep.components() == k.as_slice() {
                let k2: i64 = k.iter().map(|c| c * c).sum();
                let damp = F::lit(1.0 / (1.0 + k2 as f64));
                let neg: Vec<i64> = k.iter().map(|c| -c).collect();
                for c in 0..d {
                    let (a, b) = gaussian(&stream, &k, c as u64);
                    let v = Complex::new(F::lit(a), F::lit(b)) * damp;
                    f.set_coeff(c, &k, v);
                    f.set_coeff(c, &neg, v.conj());
                }
            }
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return f;
            }
            axis -= 1;
            if k[axis] < *range.end() {
                k[axis] += 1;
                break;
            }
            k[axis] = -max_mode;
        }
    }
}

/// Divergence-free field with zero mean, normalized to `||u||_{L²} = amplitude · (2π)^{d/2}`.
pub fn random_solenoidal<F: Real>(
    d: usize,
    n: usize,
    max_mode: i64,
    amplitude: F,
    seed: u64,
) -> SpectralField<F> {
    let f = random_field::<F>(d, n, max_mode, seed).leray_project();
    let vol = F::TAU().powi(d as i32);
    let norm = (f.l2_norm_sq() / vol).sqrt();
    if norm > F::zero() {
        f.scaled(amplitude / norm)
    } else {
        f
    }
}
