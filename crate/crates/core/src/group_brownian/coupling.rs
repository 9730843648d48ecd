use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drift::NoDrift;
use super::flow::{advance_in_place, FlowConfig};
use super::generator::{sample_points, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::fourier_basis::BasisSet;
use crate::scalar::Real;
use crate::torus::distance_sq;

/// Default refusal threshold on the number of signed modes of the finer truncation.
pub const DEFAULT_MODE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingParams<F> {
    pub d: usize,
    pub r: F,
    /// Levels `n`; level `n` compares `|k| ≤ 2ⁿ` with `|k| ≤ 2ⁿ⁺¹`.
    pub levels: Vec<usize>,
    pub t_final: F,
    pub dt: F,
    pub samples: usize,
    pub seed: u64,
    pub include_translation: bool,
    pub mode_limit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingLevel<F> {
    pub n: usize,
    pub signed_modes: usize,
    /// Monte Carlo `E sup_t |gⁿ(t)(θ) - gⁿ⁺¹(t)(θ)|²` in the torus metric.
    pub moment: F,
    pub std_error: F,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport<F> {
    pub levels: Vec<CouplingLevel<F>>,
    /// Least-squares slope of `log₂ moment` against `n`.
    pub log2_slope: F,
    pub strictly_decreasing: bool,
}

/// `E sup_{t ≤ T} |g_coarse(t)(θ) - g_fine(t)(θ)|²` with shared noise on the common modes.
///
/// Each realization starts from its own uniformly drawn `θ`.
pub fn coupling_moment<F: Real>(
    coarse: &BasisSet<F>,
    fine: &BasisSet<F>,
    t_final: F,
    dt: F,
    samples: usize,
    seed: u64,
) -> Result<(F, F)> {
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            found: samples,
            required: MIN_SAMPLES,
        });
    }
    let fine_cfg = FlowConfig::unscaled(fine.clone(), dt, seed)?;
    let coarse_cfg = FlowConfig::unscaled(coarse.clone(), dt, seed)?;
    let restriction = fine_cfg.modes().restriction(coarse_cfg.modes())?;
    let steps = fine_cfg.step_count(t_final)?;
    let d = fine.d;
    let starts = sample_points::<F>(d, samples, seed);
    let sups: Vec<Result<F>> = starts
        .par_iter()
        .enumerate()
        .map(|(p, theta)| {
            let mut a = theta.clone();
            let mut b = theta.clone();
            let mut sup = F::zero();
            for s in 0..steps {
                let t = F::from_usize_lossy(s) * dt;
                let inc = fine_cfg.sample_increment(p as u64, s as u64)?;
                let sub = inc.restrict(&restriction, coarse.include_translation);
                let nf = fine_cfg.modes().combine(&inc, &fine_cfg.noise_scaling);
                let nc = coarse_cfg.modes().combine(&sub, &coarse_cfg.noise_scaling);
                advance_in_place(&mut a, d, &NoDrift, t, &nc, &coarse_cfg);
                advance_in_place(&mut b, d, &NoDrift, t, &nf, &fine_cfg);
                sup = sup.max(distance_sq(&a, &b));
            }
            Ok(sup)
        })
        .collect();
    let mut values = Vec::with_capacity(samples);
    for s in sups {
        values.push(s?);
    }
    Ok(mean_and_se(&values))
}

pub(crate) fn mean_and_se<F: Real>(values: &[F]) -> (F, F) {
    let n = F::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<F>() / n;
    if values.len() < 2 {
        return (mean, F::zero());
    }
    let var = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<F>()
        / (n - F::one());
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope<F: Real>(xs: &[F], ys: &[F]) -> F {
    let n = F::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<F>() / n;
    let my = ys.iter().copied().sum::<F>() / n;
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

pub fn dyadic_coupling_test<F: Real>(params: &CouplingParams<F>) -> Result<CouplingReport<F>> {
    if params.levels.len() < 2 {
        return Err(Error::TooFewSamples {
            found: params.levels.len(),
            required: 2,
        });
    }
    let top = *params.levels.iter().max().expect("nonempty");
    if top >= 20 {
        return Err(Error::TooManyModes {
            count: usize::MAX,
            limit: params.mode_limit,
        });
    }
    let finest = BasisSet::build(params.d, 1 << (top + 1), params.r, params.include_translation)?;
    let signed = 2 * finest.mode_count();
    if signed > params.mode_limit {
        return Err(Error::TooManyModes {
            count: signed,
            limit: params.mode_limit,
        });
    }
    let mut levels = Vec::new();
    for &n in &params.levels {
        let fine = finest.truncated(1 << (n + 1));
        let coarse = finest.truncated(1 << n);
        let (moment, se) = coupling_moment(
            &coarse,
            &fine,
            params.t_final,
            params.dt,
            params.samples,
            params.seed,
        )?;
        levels.push(CouplingLevel {
            n,
            signed_modes: 2 * fine.mode_count(),
            moment,
            std_error: se,
        });
    }
    let xs: Vec<F> = levels.iter().map(|l| F::from_usize_lossy(l.n)).collect();
    let ys: Vec<F> = levels.iter().map(|l| l.moment.log2()).collect();
    let strictly_decreasing = levels.windows(2).all(|w| w[1].moment < w[0].moment);
    Ok(CouplingReport {
        log2_slope: ls_slope(&xs, &ys),
        levels,
        strictly_decreasing,
    })
}
