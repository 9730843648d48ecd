use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::{ls_slope, mean_and_se};
use super::drift::Drift;
use super::flow::{advance_in_place, FlowConfig, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::rng::{mix, NoiseStream};
use crate::scalar::{two_pi, Real};
use crate::torus::{distance, wrap};

/// Base points each followed by companions at dyadic separations `δ₀ 2^{-j}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoelderLayout<F> {
    pub bases: usize,
    pub separations: Vec<F>,
    /// Base `b` sits at index `b (S + 1)`, its companion at scale `j` at `b (S + 1) + 1 + j`.
    pub points: ParticleEnsemble<F>,
}

impl<F: Real> HoelderLayout<F> {
    pub fn new(d: usize, bases: usize, scales: usize, delta0: F, seed: u64) -> Result<Self> {
        if scales < 3 {
            return Err(Error::TooFewSamples {
                found: scales,
                required: 3,
            });
        }
        if bases == 0 {
            return Err(Error::TooFewSamples {
                found: 0,
                required: 1,
            });
        }
        if !(delta0 > F::zero() && delta0 < F::PI()) {
            return Err(Error::Parameter(format!(
                "largest separation must lie in (0, π), got {delta0}"
            )));
        }
        let stream = NoiseStream::new(mix(&[seed, 0x686f_656c]), 0);
        let half = F::lit(0.5);
        let separations: Vec<F> = (0..scales)
            .map(|j| delta0 * half.powi(j as i32))
            .collect();
        let mut points = Vec::with_capacity(bases * (scales + 1));
        for b in 0..bases {
            let base: Vec<F> = (0..d)
                .map(|a| two_pi::<F>() * F::lit(stream.uniform(b as u64, a as u64)))
                .collect();
            let mut dir: Vec<F> = (0..d)
                .map(|a| F::lit(stream.normal_pair(b as u64, a as u64).0))
                .collect();
            let norm = dir.iter().map(|&x| x * x).sum::<F>().sqrt();
            dir.iter_mut().for_each(|x| *x = *x / norm);
            points.push(base.clone());
            for &delta in &separations {
                points.push(
                    base.iter()
                        .zip(&dir)
                        .map(|(&x, &e)| wrap(x + delta * e))
                        .collect(),
                );
            }
        }
        Ok(Self {
            bases,
            separations,
            points: ParticleEnsemble::new(d, &points)?,
        })
    }

    fn stride(&self) -> usize {
        self.separations.len() + 1
    }

    /// Per-base slopes of `log |g(θ) - g(θ')|` against `log |θ - θ'|`.
    pub fn slopes(&self, moved: &ParticleEnsemble<F>) -> Result<Vec<F>> {
        if moved.len() != self.points.len() || moved.d != self.points.d {
            return Err(Error::Dimension {
                expected: self.points.len(),
                found: moved.len(),
            });
        }
        let xs: Vec<F> = self.separations.iter().map(|s| s.ln()).collect();
        let stride = self.stride();
        let mut out = Vec::with_capacity(self.bases);
        for b in 0..self.bases {
            let base = moved.point(b * stride);
            let ys: Vec<F> = (0..self.separations.len())
                .map(|j| {
                    distance(base, moved.point(b * stride + 1 + j))
                        .max(F::min_positive_value())
                        .ln()
                })
                .collect();
            out.push(ls_slope(&xs, &ys));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoelderEstimate<F> {
    pub time: F,
    pub exponent: F,
    pub std_error: F,
    /// Half-width of the reported confidence band, three standard errors.
    pub band: F,
    pub pairs: usize,
}

/// Pools per-base slopes into an exponent estimate.
pub fn hoelder_exponent_estimate<F: Real>(
    layout: &HoelderLayout<F>,
    moved: &[ParticleEnsemble<F>],
) -> Result<HoelderEstimate<F>> {
    let mut slopes = Vec::new();
    for m in moved {
        slopes.extend(layout.slopes(m)?);
    }
    if slopes.is_empty() {
        return Err(Error::TooFewSamples {
            found: 0,
            required: 1,
        });
    }
    let (exponent, se) = mean_and_se(&slopes);
    Ok(HoelderEstimate {
        time: moved[0].time,
        exponent,
        std_error: se,
        band: F::lit(3.0) * se,
        pairs: slopes.len(),
    })
}

/// Moves the layout by `realizations` independent flows and estimates the exponent at each time.
pub fn hoelder_test<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    layout: &HoelderLayout<F>,
    times: &[F],
    realizations: usize,
) -> Result<Vec<HoelderEstimate<F>>> {
    let mut targets = Vec::with_capacity(times.len());
    for &t in times {
        targets.push(if t == F::zero() { 0 } else { config.step_count(t)? });
    }
    let max_steps = targets.iter().copied().max().unwrap_or(0);
    let d = layout.points.d;
    let runs: Vec<Result<Vec<ParticleEnsemble<F>>>> = (0..realizations)
        .into_par_iter()
        .map(|path| {
            let mut snaps = vec![None; targets.len()];
            let mut cur = layout.points.clone();
            for (i, &s) in targets.iter().enumerate() {
                if s == 0 {
                    snaps[i] = Some(cur.clone());
                }
            }
            for s in 0..max_steps {
                let t = F::from_usize_lossy(s) * config.dt;
                let inc = config.sample_increment(path as u64, s as u64)?;
                let noise = config.modes().combine(&inc, &config.noise_scaling);
                advance_in_place(&mut cur.positions, d, drift, t, &noise, config);
                cur.time = F::from_usize_lossy(s + 1) * config.dt;
                for (i, &target) in targets.iter().enumerate() {
                    if target == s + 1 {
                        snaps[i] = Some(cur.clone());
                    }
                }
            }
            Ok(snaps.into_iter().map(|s| s.expect("every time reached")).collect())
        })
        .collect();
    let mut by_time: Vec<Vec<ParticleEnsemble<F>>> = vec![Vec::new(); times.len()];
    for run in runs {
        for (i, snap) in run?.into_iter().enumerate() {
            by_time[i].push(snap);
        }
    }
    by_time
        .iter()
        .map(|snaps| hoelder_exponent_estimate(layout, snaps))
        .collect()
}
