//! Divergence-free Fourier basis on the flat torus.
//!
//! Rotating modes are indexed by one representative `k` per class `{k, -k}`
//! (first nonzero component positive) and carry `d - 1` unit polarization
//! vectors orthogonal to `k`. The noise amplitude of a mode is
//! `1 / α_k = (|k|² + 1)^(-r/4)`.
//!
//! Generator sums run over the full symmetric truncation `0 < |k| ≤ N`; since
//! only representatives are stored, every class enters them with multiplicity 2.

mod log_bound;

pub use log_bound::{
    log_bound_constant, log_bound_rhs, log_bound_study, log_radii, v_function, LogBoundRow,
    LogBoundStudy, VBound,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::dot_i64;

/// Lattice wave vector stored as its canonical representative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector(Vec<i64>);

impl WaveVector {
    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm<F: Real>(&self) -> F {
        F::from_i64_lossy(self.norm_sq()).sqrt()
    }

    pub fn negated(&self) -> Vec<i64> {
        self.0.iter().map(|c| -c).collect()
    }
}

/// Maps `k` to the representative of `{k, -k}` whose first nonzero component is positive.
pub fn canonical_representative(k: &[i64]) -> Result<WaveVector> {
    match k.iter().find(|&&c| c != 0) {
        None => Err(Error::ZeroWaveVector),
        Some(&c) if c > 0 => Ok(WaveVector(k.to_vec())),
        Some(_) => Ok(WaveVector(k.iter().map(|c| -c).collect())),
    }
}

/// `α_k² = (|k|² + 1)^(r/2)`.
pub fn alpha_k_squared<F: Real>(k: &[i64], r: F) -> F {
    let n2: i64 = k.iter().map(|c| c * c).sum();
    (F::from_i64_lossy(n2) + F::one()).powf(r / F::lit(2.0))
}

/// One rotating basis element `eps · {cos, sin}(k·θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMode<F> {
    pub k: WaveVector,
    /// Polarization index in `1..=d-1`.
    pub alpha_index: usize,
    pub eps: Vec<F>,
    /// Noise amplitude `1 / α_k`.
    pub weight: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSet<F> {
    pub d: usize,
    pub n_max: usize,
    pub r: F,
    pub include_translation: bool,
    pub modes: Vec<BasisMode<F>>,
}

/// Default spectral exponent `r = d + 3`.
pub fn default_r<F: Real>(d: usize) -> F {
    F::from_usize_lossy(d + 3)
}

/// Canonical representatives of every class with `0 < |k| ≤ n_max`, in lexicographic order.
pub fn lattice_classes(d: usize, n_max: usize) -> Vec<WaveVector> {
    let n = n_max as i64;
    let mut out = Vec::new();
    let mut k = vec![-n; d];
    loop {
        let n2: i64 = k.iter().map(|c| c * c).sum();
        if n2 > 0 && n2 <= n * n && k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(WaveVector(k.clone()));
        }
        // odometer increment
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if k[axis] < n {
                k[axis] += 1;
                break;
            }
            k[axis] = -n;
        }
    }
}

/// Orthonormal basis of `{x : k·x = 0}`.
///
/// `d = 2` uses `(-k₂, k₁)/|k|`; larger `d` takes columns `2..d` of the
/// Householder reflection sending `e₁` to `k/|k|`.
pub fn polarization_frame<F: Real>(k: &WaveVector) -> Vec<Vec<F>> {
    let d = k.dim();
    let norm: F = k.norm();
    let kc = k.components();
    match d {
        0 | 1 => Vec::new(),
        2 => vec![vec![
            -F::from_i64_lossy(kc[1]) / norm,
            F::from_i64_lossy(kc[0]) / norm,
        ]],
        _ => {
            let khat: Vec<F> = kc.iter().map(|&c| F::from_i64_lossy(c) / norm).collect();
            let mut w: Vec<F> = khat.iter().map(|&x| -x).collect();
            w[0] += F::one();
            let ww: F = w.iter().map(|&x| x * x).sum();
            (1..d)
                .map(|j| {
                    let mut col: Vec<F> = (0..d)
                        .map(|i| if i == j { F::one() } else { F::zero() })
                        .collect();
                    if ww > F::zero() {
                        let s = F::lit(2.0) * w[j] / ww;
                        for (ci, &wi) in col.iter_mut().zip(&w) {
                            *ci -= s * wi;
                        }
                    }
                    col
                })
                .collect()
        }
    }
}

impl<F: Real> BasisSet<F> {
    /// Builds every rotating mode with `0 < |k| ≤ n_max`.
    pub fn build(d: usize, n_max: usize, r: F, include_translation: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if n_max == 0 {
            return Err(Error::Parameter("truncation radius must be at least 1".into()));
        }
        let min = F::from_usize_lossy(d + 1);
        if !(r >= min) {
            return Err(Error::SpectralExponent {
                r: r.to_f64_lossy(),
                min: min.to_f64_lossy(),
            });
        }
        let mut modes = Vec::new();
        for k in lattice_classes(d, n_max) {
            let weight = alpha_k_squared::<F>(k.components(), r).sqrt().recip();
            for (a, eps) in polarization_frame::<F>(&k).into_iter().enumerate() {
                modes.push(BasisMode {
                    k: k.clone(),
                    alpha_index: a + 1,
                    eps,
                    weight,
                });
            }
        }
        Ok(Self {
            d,
            n_max,
            r,
            include_translation,
            modes,
        })
    }

    /// Basis with `r = d + 3`.
    pub fn with_default_r(d: usize, n_max: usize, include_translation: bool) -> Result<Self> {
        Self::build(d, n_max, default_r(d), include_translation)
    }

    /// Translation-only basis: the flow reduces to a standard torus Brownian motion.
    pub fn translation_only(d: usize) -> Self {
        Self {
            d,
            n_max: 0,
            r: default_r(d),
            include_translation: true,
            modes: Vec::new(),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn class_count(&self) -> usize {
        self.modes.len() / self.d.saturating_sub(1).max(1)
    }

    /// Restriction to modes with `|k| ≤ n_max`.
    pub fn truncated(&self, n_max: usize) -> Self {
        let n2 = (n_max * n_max) as i64;
        Self {
            d: self.d,
            n_max,
            r: self.r,
            include_translation: self.include_translation,
            modes: self
                .modes
                .iter()
                .filter(|m| m.k.norm_sq() <= n2)
                .cloned()
                .collect(),
        }
    }
}

/// Unit-amplitude field `eps·cos(k·θ)` or `eps·sin(k·θ)`.
pub fn eval_mode<F: Real>(mode: &BasisMode<F>, phase: Phase, theta: &[F]) -> Vec<F> {
    let arg = dot_i64(mode.k.components(), theta);
    let s = match phase {
        Phase::Cos => arg.cos(),
        Phase::Sin => arg.sin(),
    };
    mode.eps.iter().map(|&e| e * s).collect()
}

/// Analytic divergence of [`eval_mode`]: `∓(k·eps)·{sin, cos}(k·θ)`.
pub fn mode_divergence<F: Real>(mode: &BasisMode<F>, phase: Phase, theta: &[F]) -> F {
    let arg = dot_i64(mode.k.components(), theta);
    let keps = dot_i64(mode.k.components(), &mode.eps);
    match phase {
        Phase::Cos => -keps * arg.sin(),
        Phase::Sin => keps * arg.cos(),
    }
}

/// Second-order coefficients of the generator of the unscaled flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConstants<F> {
    /// `a_i = ½ Σ_{k≠0, α} α_k⁻² (ε_k^α)_i²`.
    pub a: Vec<F>,
    /// `c_i = a_i + ½` with translation noise, `a_i` without.
    pub c: Vec<F>,
    /// Full matrix `c_ij` including off-diagonal sums.
    pub matrix: Vec<Vec<F>>,
    /// `max_{i≠j} |c_ij|`; vanishes for symmetric truncations.
    pub off_diagonal_max: F,
}

pub fn generator_constants<F: Real>(basis: &BasisSet<F>) -> GeneratorConstants<F> {
    let d = basis.d;
    let mut matrix = vec![vec![F::zero(); d]; d];
    for mode in &basis.modes {
        // ½ · 2 (k and -k) · weight²
        let w2 = mode.weight * mode.weight;
        for i in 0..d {
            for j in 0..d {
                matrix[i][j] += w2 * mode.eps[i] * mode.eps[j];
            }
        }
    }
    let a: Vec<F> = (0..d).map(|i| matrix[i][i]).collect();
    let half = F::lit(0.5);
    let mut off = F::zero();
    for (i, row) in matrix.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i == j {
                if basis.include_translation {
                    *v += half;
                }
            } else {
                off = off.max(v.abs());
            }
        }
    }
    let c: Vec<F> = (0..d).map(|i| matrix[i][i]).collect();
    if d == 2 {
        debug_assert!(
            (c[0] - c[1]).abs() <= F::lit(1e-10) * c[0].abs().max(F::one()),
            "two-dimensional generator must be isotropic"
        );
    }
    GeneratorConstants {
        a,
        c,
        matrix,
        off_diagonal_max: off,
    }
}

/// Serializable digest of a basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSummary {
    pub d: usize,
    pub n_max: usize,
    pub r: f64,
    pub include_translation: bool,
    pub class_count: usize,
    pub mode_count: usize,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub off_diagonal_max: f64,
    pub max_orthogonality_defect: f64,
    pub max_frame_deviation: f64,
}

/// Largest `|k·eps|` and `||eps| - 1|` over the basis.
pub fn orthogonality_defect<F: Real>(basis: &BasisSet<F>) -> F {
    basis
        .modes
        .iter()
        .map(|m| {
            let keps = dot_i64(m.k.components(), &m.eps).abs();
            let n: F = m.eps.iter().map(|&e| e * e).sum::<F>().sqrt();
            keps.max((n - F::one()).abs())
        })
        .fold(F::zero(), F::max)
}

/// Largest deviation of `{k/|k|, eps^1..eps^{d-1}}` from an orthonormal frame.
pub fn frame_deviation<F: Real>(basis: &BasisSet<F>) -> F {
    let d = basis.d;
    if d < 2 {
        return F::zero();
    }
    let mut worst = F::zero();
    for chunk in basis.modes.chunks(d - 1) {
        let k = &chunk[0].k;
        let norm: F = k.norm();
        let mut frame: Vec<Vec<F>> = vec![k
            .components()
            .iter()
            .map(|&c| F::from_i64_lossy(c) / norm)
            .collect()];
        frame.extend(chunk.iter().map(|m| m.eps.clone()));
        for (a, u) in frame.iter().enumerate() {
            for (b, v) in frame.iter().enumerate() {
                let g: F = u.iter().zip(v).map(|(&x, &y)| x * y).sum();
                let target = if a == b { F::one() } else { F::zero() };
                worst = worst.max((g - target).abs());
            }
        }
    }
    worst
}

pub fn summarize<F: Real>(basis: &BasisSet<F>) -> BasisSummary {
    let gc = generator_constants(basis);
    BasisSummary {
        d: basis.d,
        n_max: basis.n_max,
        r: basis.r.to_f64_lossy(),
        include_translation: basis.include_translation,
        class_count: if basis.d > 1 { basis.class_count() } else { 0 },
        mode_count: basis.mode_count(),
        a: gc.a.iter().map(|x| x.to_f64_lossy()).collect(),
        c: gc.c.iter().map(|x| x.to_f64_lossy()).collect(),
        off_diagonal_max: gc.off_diagonal_max.to_f64_lossy(),
        max_orthogonality_defect: orthogonality_defect(basis).to_f64_lossy(),
        max_frame_deviation: frame_deviation(basis).to_f64_lossy(),
    }
}
