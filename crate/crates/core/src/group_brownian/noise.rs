use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier_basis::BasisSet;
use crate::rng::{noise_key, translation_key, NoiseKey, NoiseStream};
use crate::scalar::Real;

/// Rotating modes of a basis sharing one wave vector class `±k`.
///
/// Each polarization carries two independent Brownian pairs, one attached to
/// `k` with vector `ε` and one attached to `-k` with vector `-ε`.
#[derive(Debug, Clone)]
pub(crate) struct NoiseClass<F> {
    pub k: Vec<i64>,
    pub kf: Vec<F>,
    /// `α_k⁻¹ ε^α` per polarization.
    pub amp: Vec<Vec<F>>,
}

/// Signed-mode layout of the Brownian increments driving a truncated flow.
///
/// Signed mode `(c, a, s)` (class, polarization, sign) has flat index
/// `2 (Σ_{c'<c} n_{c'} + a) + s`, with `s = 0` for `+k`.
#[derive(Debug, Clone)]
pub struct NoiseModes<F> {
    d: usize,
    classes: Vec<NoiseClass<F>>,
    keys: Vec<NoiseKey>,
    offsets: Vec<usize>,
    translation: bool,
}

impl<F: Real> NoiseModes<F> {
    pub fn new(basis: &BasisSet<F>) -> Self {
        let mut classes: Vec<NoiseClass<F>> = Vec::new();
        let mut keys = Vec::new();
        let mut offsets = Vec::new();
        let mut count = 0;
        for mode in &basis.modes {
            let k = mode.k.components();
            let new_class = classes.last().map_or(true, |c| c.k != k);
            if new_class {
                offsets.push(count);
                classes.push(NoiseClass {
                    k: k.to_vec(),
                    kf: k.iter().map(|&c| F::from_i64_lossy(c)).collect(),
                    amp: Vec::new(),
                });
            }
            let class = classes.last_mut().expect("class pushed");
            class
                .amp
                .push(mode.eps.iter().map(|&e| e * mode.weight).collect());
            keys.push(noise_key(k, mode.alpha_index));
            keys.push(noise_key(&mode.k.negated(), mode.alpha_index));
            count += 1;
        }
        Self {
            d: basis.d,
            classes,
            keys,
            offsets,
            translation: basis.include_translation,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of signed rotating modes, i.e. Brownian pairs `(x¹, x²)`.
    pub fn signed_mode_count(&self) -> usize {
        self.keys.len()
    }

    pub fn has_translation(&self) -> bool {
        self.translation
    }

    pub(crate) fn classes(&self) -> &[NoiseClass<F>] {
        &self.classes
    }

    /// Indices of `other`'s signed modes inside `self`; `other` must be a sub-truncation.
    pub fn restriction(&self, other: &NoiseModes<F>) -> Result<Vec<usize>> {
        let pos: HashMap<NoiseKey, usize> =
            self.keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        other
            .keys
            .iter()
            .map(|k| {
                pos.get(k).copied().ok_or_else(|| {
                    Error::Parameter("truncation is not contained in the finer one".into())
                })
            })
            .collect()
    }

    /// Draws the increments of step `step` from `stream`.
    pub fn sample(&self, dt: F, stream: &NoiseStream, step: u64) -> Result<NoiseIncrement<F>> {
        if !(dt > F::zero()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let sq = dt.sqrt();
        let dx = self
            .keys
            .iter()
            .map(|&key| {
                let (a, b) = stream.normal_pair(step, key);
                [F::lit(a) * sq, F::lit(b) * sq]
            })
            .collect();
        let dy = if self.translation {
            (0..self.d)
                .map(|i| F::lit(stream.normal_pair(step, translation_key(i)).0) * sq)
                .collect()
        } else {
            Vec::new()
        };
        Ok(NoiseIncrement { dt, dx, dy })
    }

    /// Collapses an increment into per-class coefficients of `cos(k·θ)` and `sin(k·θ)`.
    pub(crate) fn combine(&self, inc: &NoiseIncrement<F>, scaling: &[F]) -> CombinedNoise<F> {
        let d = self.d;
        let mut cos_coef = vec![F::zero(); self.classes.len() * d];
        let mut sin_coef = vec![F::zero(); self.classes.len() * d];
        for (c, class) in self.classes.iter().enumerate() {
            for (a, amp) in class.amp.iter().enumerate() {
                let m = 2 * (self.offsets[c] + a);
                let [p1, p2] = inc.dx[m];
                let [n1, n2] = inc.dx[m + 1];
                // +k with ε and -k with -ε: cos is even, sin is odd
                let ac = p1 - n1;
                let bs = p2 + n2;
                for i in 0..d {
                    cos_coef[c * d + i] += amp[i] * ac * scaling[i];
                    sin_coef[c * d + i] += amp[i] * bs * scaling[i];
                }
            }
        }
        let shift = if inc.dy.is_empty() {
            vec![F::zero(); d]
        } else {
            inc.dy.iter().zip(scaling).map(|(&y, &s)| y * s).collect()
        };
        CombinedNoise {
            d,
            cos_coef,
            sin_coef,
            shift,
        }
    }
}

/// Brownian increments over one time step, each component `N(0, dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseIncrement<F> {
    pub dt: F,
    /// `(dx¹, dx²)` per signed rotating mode.
    pub dx: Vec<[F; 2]>,
    /// Translation increment; empty without translation noise.
    pub dy: Vec<F>,
}

impl<F: Real> NoiseIncrement<F> {
    pub fn zero(modes: &NoiseModes<F>, dt: F) -> Self {
        Self {
            dt,
            dx: vec![[F::zero(); 2]; modes.signed_mode_count()],
            dy: if modes.has_translation() {
                vec![F::zero(); modes.dim()]
            } else {
                Vec::new()
            },
        }
    }

    /// Sub-increment on the signed modes listed in `indices`.
    pub fn restrict(&self, indices: &[usize], translation: bool) -> Self {
        Self {
            dt: self.dt,
            dx: indices.iter().map(|&i| self.dx[i]).collect(),
            dy: if translation { self.dy.clone() } else { Vec::new() },
        }
    }
}

/// Noise displacement field `θ ↦ Σ σ(θ) ΔW` of one step, ready for evaluation.
#[derive(Debug, Clone)]
pub(crate) struct CombinedNoise<F> {
    d: usize,
    cos_coef: Vec<F>,
    sin_coef: Vec<F>,
    shift: Vec<F>,
}

impl<F: Real> CombinedNoise<F> {
    /// Adds `sign` times the displacement at `θ` into `out`.
    #[inline]
    pub fn apply(&self, classes: &[NoiseClass<F>], theta: &[F], sign: F, out: &mut [F]) {
        let d = self.d;
        for (c, class) in classes.iter().enumerate() {
            let arg = class
                .kf
                .iter()
                .zip(theta)
                .fold(F::zero(), |a, (&k, &t)| a + k * t);
            let (s, co) = arg.sin_cos();
            for i in 0..d {
                out[i] += sign * (self.cos_coef[c * d + i] * co + self.sin_coef[c * d + i] * s);
            }
        }
        for i in 0..d {
            out[i] += sign * self.shift[i];
        }
    }
}
