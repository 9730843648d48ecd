use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drift::Drift;
use super::flow::{one_step_unwrapped, FlowConfig};
use crate::error::{Error, Result};
use crate::fourier_basis::BasisSet;
use crate::rng::{mix, NoiseStream};
use crate::scalar::{two_pi, Real};
use crate::torus::dot_i64;

/// Smallest ensemble accepted by the Monte Carlo estimators.
pub const MIN_SAMPLES: usize = 100;

const CHUNK: usize = 512;

/// `f(θ) = A cos(k·θ + φ)`, with exact gradient and Hessian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction<F> {
    pub name: String,
    pub amplitude: F,
    pub k: Vec<F>,
    pub phase: F,
}

impl<F: Real> TestFunction<F> {
    pub fn new(name: impl Into<String>, amplitude: F, k: Vec<F>, phase: F) -> Self {
        Self {
            name: name.into(),
            amplitude,
            k,
            phase,
        }
    }

    /// `cos θ_i`.
    pub fn cos_axis(d: usize, i: usize) -> Self {
        let mut k = vec![F::zero(); d];
        k[i] = F::one();
        Self::new(format!("cos(theta{})", i + 1), F::one(), k, F::zero())
    }

    /// `sin θ_i`.
    pub fn sin_axis(d: usize, i: usize) -> Self {
        let mut k = vec![F::zero(); d];
        k[i] = F::one();
        Self::new(format!("sin(theta{})", i + 1), F::one(), k, -F::FRAC_PI_2())
    }

    /// `sin(θ_i + θ_j)`.
    pub fn sin_sum(d: usize, i: usize, j: usize) -> Self {
        let mut k = vec![F::zero(); d];
        k[i] = k[i] + F::one();
        k[j] = k[j] + F::one();
        Self::new(
            format!("sin(theta{}+theta{})", i + 1, j + 1),
            F::one(),
            k,
            -F::FRAC_PI_2(),
        )
    }

    pub fn constant(d: usize, value: F) -> Self {
        Self::new("const", value, vec![F::zero(); d], F::zero())
    }

    fn arg(&self, theta: &[F]) -> F {
        self.k.iter().zip(theta).fold(self.phase, |a, (&k, &t)| a + k * t)
    }

    pub fn value(&self, theta: &[F]) -> F {
        self.amplitude * self.arg(theta).cos()
    }

    pub fn gradient(&self, theta: &[F]) -> Vec<F> {
        let s = -self.amplitude * self.arg(theta).sin();
        self.k.iter().map(|&k| s * k).collect()
    }

    pub fn hessian(&self, theta: &[F]) -> Vec<Vec<F>> {
        let c = -self.amplitude * self.arg(theta).cos();
        self.k
            .iter()
            .map(|&ki| self.k.iter().map(|&kj| c * ki * kj).collect())
            .collect()
    }
}

/// Exact generator `Σ D_ij ∂²_ij f + u·∇f` of the simulated flow at time 0.
pub fn generator_target<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    f: &TestFunction<F>,
    theta: &[F],
) -> F {
    let dm = config.diffusion_matrix();
    let h = f.hessian(theta);
    let mut lf = F::zero();
    for i in 0..theta.len() {
        for j in 0..theta.len() {
            lf += dm[i][j] * h[i][j];
        }
    }
    if drift.is_active() {
        let mut u = vec![F::zero(); theta.len()];
        drift.velocity(F::zero(), theta, &mut u);
        let g = f.gradient(theta);
        lf += u.iter().zip(&g).fold(F::zero(), |a, (&x, &y)| a + x * y);
    }
    lf
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorEstimate<F> {
    pub theta: Vec<F>,
    pub estimate: F,
    pub std_error: F,
}

/// Monte Carlo estimate of `(E f(g(dt)(θ)) - f(θ)) / dt` from `m` independent
/// one-step realizations, for every function and point.
///
/// With `control_variate` the martingale part `∇f(θ)·σ(θ)ΔW`, which has mean
/// zero, is subtracted from each sample; the mean is unchanged and the
/// variance no longer grows like `1/dt`.
///
/// Returns `[function][point]`.
pub fn estimate_generator<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    fs: &[TestFunction<F>],
    thetas: &[Vec<F>],
    m: usize,
    control_variate: bool,
) -> Result<Vec<Vec<GeneratorEstimate<F>>>> {
    if m < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            found: m,
            required: MIN_SAMPLES,
        });
    }
    let d = config.dim();
    if let Some(t) = thetas.iter().find(|t| t.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: t.len(),
        });
    }
    let points: Vec<F> = thetas.iter().flatten().copied().collect();
    let np = thetas.len();
    let nf = fs.len();
    let f0: Vec<F> = fs
        .iter()
        .flat_map(|f| thetas.iter().map(move |t| f.value(t)))
        .collect();
    let grads: Vec<Vec<F>> = fs
        .iter()
        .flat_map(|f| thetas.iter().map(move |t| f.gradient(t)))
        .collect();
    let mut drift_disp = vec![F::zero(); np * d];
    if drift.is_active() {
        for (t, o) in thetas.iter().zip(drift_disp.chunks_exact_mut(d)) {
            drift.velocity(F::zero(), t, o);
            o.iter_mut().for_each(|v| *v = *v * config.dt);
        }
    }
    let dt = config.dt;
    let chunks: Vec<(usize, usize)> = (0..m)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(m)))
        .collect();
    let partial: Vec<Result<(Vec<F>, Vec<F>)>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = vec![F::zero(); nf * np];
            let mut sum_sq = vec![F::zero(); nf * np];
            let mut moved = vec![F::zero(); np * d];
            for path in lo..hi {
                let inc = config.sample_increment(path as u64, 0)?;
                let noise = config.modes().combine(&inc, &config.noise_scaling);
                one_step_unwrapped(&points, d, drift, &noise, config, &mut moved);
                for fi in 0..nf {
                    for p in 0..np {
                        let idx = fi * np + p;
                        let g = &moved[p * d..(p + 1) * d];
                        let mut x = fs[fi].value(g) - f0[idx];
                        if control_variate {
                            for a in 0..d {
                                let disp = g[a] - points[p * d + a] - drift_disp[p * d + a];
                                x -= grads[idx][a] * disp;
                            }
                        }
                        let x = x / dt;
                        sum[idx] += x;
                        sum_sq[idx] += x * x;
                    }
                }
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let mut sum = vec![F::zero(); nf * np];
    let mut sum_sq = vec![F::zero(); nf * np];
    for part in partial {
        let (s, q) = part?;
        for i in 0..nf * np {
            sum[i] += s[i];
            sum_sq[i] += q[i];
        }
    }
    let mf = F::from_usize_lossy(m);
    Ok((0..nf)
        .map(|fi| {
            (0..np)
                .map(|p| {
                    let idx = fi * np + p;
                    let mean = sum[idx] / mf;
                    let var = ((sum_sq[idx] / mf - mean * mean) * mf / (mf - F::one()))
                        .max(F::zero());
                    GeneratorEstimate {
                        theta: thetas[p].clone(),
                        estimate: mean,
                        std_error: (var / mf).sqrt(),
                    }
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RichardsonEstimate<F> {
    pub theta: Vec<F>,
    pub fine: F,
    pub coarse: F,
    /// `2 L_dt - L_2dt`, free of the first-order time-step bias.
    pub extrapolated: F,
    pub std_error: F,
    pub target: F,
}

impl<F: Real> RichardsonEstimate<F> {
    /// `|extrapolated - target|` in standard errors (0 when both vanish).
    pub fn z_score(&self) -> F {
        let err = (self.extrapolated - self.target).abs();
        if err == F::zero() {
            F::zero()
        } else {
            err / self.std_error
        }
    }
}

/// Estimates at `dt = config.dt` and `2 dt` with independent noise, extrapolated.
pub fn richardson_generator<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    fs: &[TestFunction<F>],
    thetas: &[Vec<F>],
    m: usize,
    control_variate: bool,
) -> Result<Vec<Vec<RichardsonEstimate<F>>>> {
    let fine = estimate_generator(config, drift, fs, thetas, m, control_variate)?;
    let coarse_cfg = config
        .with_dt(config.dt * F::lit(2.0))?
        .with_seed(mix(&[config.seed, 0x636f_6172_7365]));
    let coarse = estimate_generator(&coarse_cfg, drift, fs, thetas, m, control_variate)?;
    let two = F::lit(2.0);
    Ok(fs
        .iter()
        .zip(fine.iter().zip(&coarse))
        .map(|(f, (fr, cr))| {
            fr.iter()
                .zip(cr)
                .map(|(a, b)| RichardsonEstimate {
                    theta: a.theta.clone(),
                    fine: a.estimate,
                    coarse: b.estimate,
                    extrapolated: two * a.estimate - b.estimate,
                    std_error: (F::lit(4.0) * a.std_error * a.std_error
                        + b.std_error * b.std_error)
                        .sqrt(),
                    target: generator_target(config, drift, f, &a.theta),
                })
                .collect()
        })
        .collect())
}

/// Largest `|Σ_i α_k⁻¹ k_i ε_i sin(k·θ) cos(k·θ)|` over modes and points: the
/// contraction that separates the Itô and Stratonovich forms.
pub fn ito_stratonovich_gap<F: Real>(basis: &BasisSet<F>, thetas: &[Vec<F>]) -> F {
    let mut gap = F::zero();
    for mode in &basis.modes {
        let keps = dot_i64(mode.k.components(), &mode.eps);
        for t in thetas {
            let arg = dot_i64(mode.k.components(), t);
            let term = mode.weight * keps * arg.sin() * arg.cos();
            gap = gap.max(term.abs());
        }
    }
    gap
}

/// Copy of `basis` with `ε ← ε + δ k/|k|`, which is no longer divergence free.
pub fn perturb_polarizations<F: Real>(basis: &BasisSet<F>, delta: F) -> BasisSet<F> {
    let mut out = basis.clone();
    for mode in &mut out.modes {
        let norm: F = mode.k.norm();
        for (e, &k) in mode.eps.iter_mut().zip(mode.k.components()) {
            *e += delta * F::from_i64_lossy(k) / norm;
        }
    }
    out
}

/// `count` uniform points on the torus drawn from a dedicated stream.
pub fn sample_points<F: Real>(d: usize, count: usize, seed: u64) -> Vec<Vec<F>> {
    let stream = NoiseStream::new(mix(&[seed, 0x7074_73]), 0);
    (0..count)
        .map(|p| {
            (0..d)
                .map(|a| two_pi::<F>() * F::lit(stream.uniform(p as u64, a as u64)))
                .collect()
        })
        .collect()
}
