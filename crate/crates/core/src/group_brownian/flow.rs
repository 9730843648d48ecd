use rayon::prelude::*;

use super::drift::{Drift, ReversedDrift};
use super::noise::{CombinedNoise, NoiseIncrement, NoiseModes};
use crate::error::{Error, Result};
use crate::fourier_basis::{generator_constants, BasisSet, GeneratorConstants};
use crate::rng::{mix, NoiseStream};
use crate::scalar::{two_pi, Real};
use crate::torus::wrap;

/// Basis, noise scaling and time step of a simulated flow.
#[derive(Debug, Clone)]
pub struct FlowConfig<F> {
    pub basis: BasisSet<F>,
    /// Viscosity of a ν-scaled flow; `None` for the unscaled flow.
    pub nu: Option<F>,
    /// Per-axis multiplier of the noise, `√(ν / c_i)` for the ν-scaled flow.
    pub noise_scaling: Vec<F>,
    pub dt: F,
    pub seed: u64,
    constants: GeneratorConstants<F>,
    modes: NoiseModes<F>,
}

impl<F: Real> FlowConfig<F> {
    /// Flow driven by the raw basis noise.
    pub fn unscaled(basis: BasisSet<F>, dt: F, seed: u64) -> Result<Self> {
        let scaling = vec![F::one(); basis.d];
        Self::assemble(basis, None, scaling, dt, seed)
    }

    /// Flow whose generator is `ν Δ`: axis `i` is scaled by `√(ν / c_i)`.
    pub fn viscous(basis: BasisSet<F>, nu: F, dt: F, seed: u64) -> Result<Self> {
        if !(nu >= F::zero()) {
            return Err(Error::Parameter(format!("viscosity must be nonnegative, got {nu}")));
        }
        let consts = generator_constants(&basis);
        if nu > F::zero() && consts.c.iter().any(|&c| !(c > F::zero())) {
            return Err(Error::Parameter(
                "basis has a degenerate generator; cannot scale to ν".into(),
            ));
        }
        let scaling = consts
            .c
            .iter()
            .map(|&c| if nu > F::zero() { (nu / c).sqrt() } else { F::zero() })
            .collect();
        Self::assemble(basis, Some(nu), scaling, dt, seed)
    }

    fn assemble(
        basis: BasisSet<F>,
        nu: Option<F>,
        noise_scaling: Vec<F>,
        dt: F,
        seed: u64,
    ) -> Result<Self> {
        if !(dt > F::zero()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let constants = generator_constants(&basis);
        let modes = NoiseModes::new(&basis);
        Ok(Self {
            basis,
            nu,
            noise_scaling,
            dt,
            seed,
            constants,
            modes,
        })
    }

    pub fn with_dt(&self, dt: F) -> Result<Self> {
        if !(dt > F::zero()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, ..self.clone() })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.d
    }

    pub fn modes(&self) -> &NoiseModes<F> {
        &self.modes
    }

    pub fn constants(&self) -> &GeneratorConstants<F> {
        &self.constants
    }

    /// Second-order coefficients `s_i s_j c_ij` of the simulated generator.
    pub fn diffusion_matrix(&self) -> Vec<Vec<F>> {
        let s = &self.noise_scaling;
        self.constants
            .matrix
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, &c)| s[i] * s[j] * c).collect())
            .collect()
    }

    pub fn stream(&self, path: u64) -> NoiseStream {
        NoiseStream::new(self.seed, path)
    }

    pub fn sample_increment(&self, path: u64, step: u64) -> Result<NoiseIncrement<F>> {
        self.modes.sample(self.dt, &self.stream(path), step)
    }

    /// Number of `dt` steps covering `[0, t_final]` exactly.
    pub fn step_count(&self, t_final: F) -> Result<usize> {
        step_count(t_final, self.dt)
    }
}

pub(crate) fn step_count<F: Real>(t_final: F, dt: F) -> Result<usize> {
    if !(t_final > F::zero()) {
        return Err(Error::Parameter(format!("final time must be positive, got {t_final}")));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if (ratio - n).abs() > F::lit(1e-6) * n.max(F::one()) || n < F::one() {
        return Err(Error::Parameter(format!(
            "final time {t_final} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n.to_f64_lossy() as usize)
}

/// Material points `g(t)(θ_p)` of one flow realization.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParticleEnsemble<F> {
    pub d: usize,
    /// Row-major `M × d`, every coordinate in `[0, 2π)`.
    pub positions: Vec<F>,
    pub time: F,
}

impl<F: Real> ParticleEnsemble<F> {
    pub fn new(d: usize, points: &[Vec<F>]) -> Result<Self> {
        let mut positions = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: p.len(),
                });
            }
            positions.extend(p.iter().map(|&x| wrap(x)));
        }
        Ok(Self {
            d,
            positions,
            time: F::zero(),
        })
    }

    /// `m` i.i.d. uniform points.
    pub fn uniform(d: usize, m: usize, seed: u64) -> Self {
        let stream = NoiseStream::new(mix(&[seed, 0x756e_6966]), 0);
        let positions = (0..m * d)
            .map(|i| two_pi::<F>() * F::lit(stream.uniform(0, i as u64)))
            .collect();
        Self {
            d,
            positions,
            time: F::zero(),
        }
    }

    /// Tensor grid with `per_axis` points per axis, offset by half a cell.
    pub fn lattice(d: usize, per_axis: usize) -> Self {
        let h = two_pi::<F>() / F::from_usize_lossy(per_axis);
        let total = per_axis.pow(d as u32);
        let mut positions = Vec::with_capacity(total * d);
        for flat in 0..total {
            let mut rest = flat;
            let mut p = vec![F::zero(); d];
            for a in (0..d).rev() {
                p[a] = (F::from_usize_lossy(rest % per_axis) + F::lit(0.5)) * h;
                rest /= per_axis;
            }
            positions.extend(p);
        }
        Self {
            d,
            positions,
            time: F::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn point(&self, i: usize) -> &[F] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[F]> {
        self.positions.chunks_exact(self.d)
    }
}

fn check_config<F: Real>(
    ensemble: &ParticleEnsemble<F>,
    inc: &NoiseIncrement<F>,
    config: &FlowConfig<F>,
) -> Result<()> {
    if ensemble.d != config.dim() {
        return Err(Error::Dimension {
            expected: config.dim(),
            found: ensemble.d,
        });
    }
    if (inc.dt - config.dt).abs() > F::lit(1e-12) * config.dt.max(F::one()) {
        return Err(Error::Parameter(format!(
            "increment dt {} does not match flow dt {}",
            inc.dt, config.dt
        )));
    }
    if inc.dx.len() != config.modes().signed_mode_count() {
        return Err(Error::MissingNoise(format!(
            "increment has {} modes, flow has {}",
            inc.dx.len(),
            config.modes().signed_mode_count()
        )));
    }
    Ok(())
}

/// Moves every point by `sign (u(t, θ) dt + σ(θ) ΔW)` and reduces mod 2π.
fn advance<F: Real>(
    positions: &mut [F],
    d: usize,
    drift: &dyn Drift<F>,
    t: F,
    noise: &CombinedNoise<F>,
    config: &FlowConfig<F>,
    sign: F,
) {
    let dt = config.dt;
    let classes = config.modes().classes();
    let work = |p: &mut [F]| {
        let mut delta = vec![F::zero(); d];
        if drift.is_active() {
            drift.velocity(t, p, &mut delta);
            delta.iter_mut().for_each(|v| *v = *v * dt * sign);
        }
        noise.apply(classes, p, sign, &mut delta);
        for (x, dx) in p.iter_mut().zip(&delta) {
            *x = wrap(*x + *dx);
        }
    };
    if positions.len() >= 256 * d {
        positions.par_chunks_mut(d).for_each(work);
    } else {
        positions.chunks_mut(d).for_each(work);
    }
}

/// One Euler-Maruyama step in Itô form; no correction term is needed since `k·ε = 0`.
pub fn euler_step<F: Real>(
    ensemble: &ParticleEnsemble<F>,
    drift: &dyn Drift<F>,
    inc: &NoiseIncrement<F>,
    config: &FlowConfig<F>,
) -> Result<ParticleEnsemble<F>> {
    check_config(ensemble, inc, config)?;
    let noise = config.modes().combine(inc, &config.noise_scaling);
    let mut next = ensemble.clone();
    advance(
        &mut next.positions,
        ensemble.d,
        drift,
        ensemble.time,
        &noise,
        config,
        F::one(),
    );
    next.time = ensemble.time + config.dt;
    Ok(next)
}

/// Full increment sequence of one forward run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseRecord<F> {
    pub seed: u64,
    pub path: u64,
    pub dt: F,
    pub increments: Vec<NoiseIncrement<F>>,
}

impl<F: Real> NoiseRecord<F> {
    pub fn steps(&self) -> usize {
        self.increments.len()
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun<F> {
    /// Snapshot after every step, starting with the initial ensemble.
    pub trajectory: Vec<ParticleEnsemble<F>>,
    pub noise: NoiseRecord<F>,
}

/// Integrates realization 0 of the flow over `[0, t_final]`.
pub fn simulate_flow<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    t_final: F,
    ensemble0: &ParticleEnsemble<F>,
) -> Result<FlowRun<F>> {
    simulate_flow_path(config, drift, t_final, ensemble0, 0)
}

/// Integrates realization `path` of the flow over `[0, t_final]`.
pub fn simulate_flow_path<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    t_final: F,
    ensemble0: &ParticleEnsemble<F>,
    path: u64,
) -> Result<FlowRun<F>> {
    let steps = config.step_count(t_final)?;
    let mut current = ensemble0.clone();
    current.time = F::zero();
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(current.clone());
    let mut increments = Vec::with_capacity(steps);
    for s in 0..steps {
        let inc = config.sample_increment(path, s as u64)?;
        current = euler_step(&current, drift, &inc, config)?;
        current.time = F::from_usize_lossy(s + 1) * config.dt;
        trajectory.push(current.clone());
        increments.push(inc);
    }
    Ok(FlowRun {
        trajectory,
        noise: NoiseRecord {
            seed: config.seed,
            path,
            dt: config.dt,
            increments,
        },
    })
}

/// Runs the flow backwards from `ensemble_t` with drift `-u(T - s)` and the
/// recorded increments in reverse order, each with a minus sign.
///
/// Snapshot `j` of the result is at reverse time `s = j dt`, so the last one
/// approximates `g(T)⁻¹` applied to `ensemble_t`.
pub fn simulate_inverse_flow<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    t_final: F,
    record: &NoiseRecord<F>,
    ensemble_t: &ParticleEnsemble<F>,
) -> Result<Vec<ParticleEnsemble<F>>> {
    let steps = config.step_count(t_final)?;
    if record.steps() < steps {
        return Err(Error::MissingNoise(format!(
            "record holds {} steps, {} needed",
            record.steps(),
            steps
        )));
    }
    if (record.dt - config.dt).abs() > F::lit(1e-12) * config.dt.max(F::one()) {
        return Err(Error::MissingNoise(format!(
            "record dt {} differs from flow dt {}",
            record.dt, config.dt
        )));
    }
    // s ↦ -u(T - s) evaluated at the right end of each forward interval
    let reversed = ReversedDrift {
        inner: drift,
        t_final,
    };
    let mut current = ensemble_t.clone();
    current.time = F::zero();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(current.clone());
    for j in 0..steps {
        let inc = &record.increments[steps - 1 - j];
        check_config(&current, inc, config)?;
        let noise = config.modes().combine(inc, &config.noise_scaling);
        let mut next = current.clone();
        let d = next.d;
        let dt = config.dt;
        let classes = config.modes().classes();
        let t = current.time;
        next.positions.chunks_mut(d).for_each(|p| {
            let mut delta = vec![F::zero(); d];
            if reversed.is_active() {
                reversed.velocity(t, p, &mut delta);
                delta.iter_mut().for_each(|v| *v = *v * dt);
            }
            noise.apply(classes, p, -F::one(), &mut delta);
            for (x, dx) in p.iter_mut().zip(&delta) {
                *x = wrap(*x + *dx);
            }
        });
        next.time = F::from_usize_lossy(j + 1) * dt;
        out.push(next.clone());
        current = next;
    }
    Ok(out)
}

/// Positions of a single realization after one step from each point, without reduction.
pub(crate) fn one_step_unwrapped<F: Real>(
    points: &[F],
    d: usize,
    drift: &dyn Drift<F>,
    noise: &CombinedNoise<F>,
    config: &FlowConfig<F>,
    out: &mut [F],
) {
    let classes = config.modes().classes();
    for (p, o) in points.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        o.iter_mut().for_each(|v| *v = F::zero());
        if drift.is_active() {
            drift.velocity(F::zero(), p, o);
            o.iter_mut().for_each(|v| *v = *v * config.dt);
        }
        noise.apply(classes, p, F::one(), o);
        for (v, &x) in o.iter_mut().zip(p) {
            *v += x;
        }
    }
}

pub(crate) fn advance_in_place<F: Real>(
    positions: &mut [F],
    d: usize,
    drift: &dyn Drift<F>,
    t: F,
    noise: &CombinedNoise<F>,
    config: &FlowConfig<F>,
) {
    advance(positions, d, drift, t, noise, config, F::one());
}

/// Particle `p` follows its own realization `p`, so the particles are independent.
///
/// Returns the snapshot after every step, starting with `starts`.
pub fn simulate_independent<F: Real>(
    config: &FlowConfig<F>,
    drift: &dyn Drift<F>,
    t_final: F,
    starts: &ParticleEnsemble<F>,
) -> Result<Vec<ParticleEnsemble<F>>> {
    let steps = config.step_count(t_final)?;
    let d = starts.d;
    if d != config.dim() {
        return Err(Error::Dimension {
            expected: config.dim(),
            found: d,
        });
    }
    let paths: Vec<Result<Vec<F>>> = starts
        .points()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(p, start)| {
            let mut x = start.to_vec();
            let mut hist = Vec::with_capacity(steps * d);
            for s in 0..steps {
                let t = F::from_usize_lossy(s) * config.dt;
                let inc = config.sample_increment(p as u64, s as u64)?;
                let noise = config.modes().combine(&inc, &config.noise_scaling);
                advance(&mut x, d, drift, t, &noise, config, F::one());
                hist.extend_from_slice(&x);
            }
            Ok(hist)
        })
        .collect();
    let mut out = vec![starts.clone()];
    out[0].time = F::zero();
    let mut hists = Vec::with_capacity(paths.len());
    for h in paths {
        hists.push(h?);
    }
    for s in 0..steps {
        let positions = hists
            .iter()
            .flat_map(|h| h[s * d..(s + 1) * d].iter().copied())
            .collect();
        out.push(ParticleEnsemble {
            d,
            positions,
            time: F::from_usize_lossy(s + 1) * config.dt,
        });
    }
    Ok(out)
}
