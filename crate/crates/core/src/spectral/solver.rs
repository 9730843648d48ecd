//! Integrating-factor RK2 time stepping on the momentum `m̂ = (1 + |k|²) û`.
//!
//! The linear part `∂_t m̂ = -ν|k|² m̂` is integrated exactly through
//! `E = exp(-ν|k|² dt)`; the nonlinear tendency `N` enters a Heun stage:
//!
//! ```text
//! a       = E (m + dt N(m))
//! m_next  = E m + dt/2 (E N(m) + N(a))
//! ```

use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::path::DriftPath;
use super::rhs::{Equation, PseudoSpectral};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig<F> {
    pub equation: Equation,
    pub nu: F,
    pub dt: F,
    pub grid_size: usize,
    pub dealias_fraction: f64,
    /// Largest admissible `max|u| dt / dx`.
    pub cfl_limit: F,
}

impl<F: Real> SolverConfig<F> {
    pub fn new(equation: Equation, nu: F, dt: F, grid_size: usize) -> Self {
        Self {
            equation,
            nu,
            dt,
            grid_size,
            dealias_fraction: 2.0 / 3.0,
            cfl_limit: F::one(),
        }
    }
}

#[derive(Debug)]
pub struct Solver<F: Real> {
    ps: PseudoSpectral<F>,
    config: SolverConfig<F>,
    decay: Vec<F>,
}

impl<F: Real> Solver<F> {
    /// Solver for fields of dimension `d` (must be 1 for the 1-D equation, ≥ 2 otherwise).
    pub fn new(d: usize, config: SolverConfig<F>) -> Result<Self> {
        match (config.equation, d) {
            (Equation::ViscousCh1d, 1) => {}
            (Equation::ViscousCh1d, _) => {
                return Err(Error::Dimension {
                    expected: 1,
                    found: d,
                })
            }
            (_, 1) => {
                return Err(Error::Dimension {
                    expected: 2,
                    found: 1,
                })
            }
            _ => {}
        }
        if !(config.dt > F::zero()) {
            return Err(Error::Parameter("time step must be positive".into()));
        }
        if config.nu < F::zero() {
            return Err(Error::Parameter("viscosity must be nonnegative".into()));
        }
        let ps = PseudoSpectral::new(d, config.grid_size, config.dealias_fraction)?;
        let nu = config.nu;
        let dt = config.dt;
        let decay = SpectralField::<F>::zeros(d, config.grid_size);
        let decay: Vec<F> = (0..decay.len())
            .map(|idx| {
                let k2 = F::from_i64_lossy(decay.wavevector(idx).iter().map(|c| c * c).sum());
                (-nu * k2 * dt).exp()
            })
            .collect();
        Ok(Self { ps, config, decay })
    }

    pub fn config(&self) -> &SolverConfig<F> {
        &self.config
    }

    pub fn operators(&self) -> &PseudoSpectral<F> {
        &self.ps
    }

    /// Truncates to the dealiased band and, for `d ≥ 2`, projects onto divergence-free fields.
    pub fn prepare(&self, u0: &SpectralField<F>) -> Result<SpectralField<F>> {
        let g = self.ps.grid();
        if u0.dim() != g.dim() || u0.grid_size() != g.size() {
            return Err(Error::Dimension {
                expected: g.dim(),
                found: u0.dim(),
            });
        }
        let mut u = u0.clone();
        u.truncate(self.ps.cutoff());
        if u.dim() > 1 {
            u = u.leray_project();
        }
        u.time = u0.time;
        Ok(u)
    }

    fn apply_decay(&self, f: &SpectralField<F>) -> SpectralField<F> {
        let mut out = f.clone();
        for c in out.components_mut() {
            for (v, &e) in c.iter_mut().zip(&self.decay) {
                *v = *v * e;
            }
        }
        out
    }

    fn check_cfl(&self, max_speed: F, time: F) -> Result<()> {
        let dx = two_pi::<F>() / F::from_usize_lossy(self.config.grid_size);
        let courant = max_speed * self.config.dt / dx;
        if !courant.is_finite() || courant > self.config.cfl_limit {
            return Err(Error::Cfl {
                time: time.to_f64_lossy(),
                courant: courant.to_f64_lossy(),
                limit: self.config.cfl_limit.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Advances `u` by one time step.
    pub fn step(&self, u: &SpectralField<F>) -> Result<SpectralField<F>> {
        let dt = self.config.dt;
        let eq = self.config.equation;
        let m = u.helmholtz_apply();
        let n0 = self.ps.nonlinear(eq, u)?;
        self.check_cfl(n0.max_speed, u.time)?;
        let stage = self.apply_decay(&m.axpy(dt, &n0.field));
        let n1 = self.ps.nonlinear(eq, &stage.helmholtz_invert())?;
        let half = dt / F::lit(2.0);
        let m_next = self
            .apply_decay(&m.axpy(half, &n0.field))
            .axpy(half, &n1.field);
        let mut next = m_next.helmholtz_invert();
        next.time = u.time + dt;
        Ok(next)
    }

    /// Integrates to `t_final`, recording every `record_every`-th state (and the last).
    pub fn solve(
        &self,
        u0: &SpectralField<F>,
        t_final: F,
        record_every: usize,
    ) -> Result<DriftPath<F>> {
        let steps = self.step_count(t_final)?;
        let every = record_every.max(1);
        if steps % every != 0 {
            return Err(Error::Parameter(format!(
                "record interval {every} does not divide {steps} steps"
            )));
        }
        let mut u = self.prepare(u0)?;
        u.time = F::zero();
        let mut times = vec![F::zero()];
        let mut fields = vec![u.clone()];
        for s in 1..=steps {
            u = self.step(&u)?;
            u.time = F::from_usize_lossy(s) * self.config.dt;
            if s % every == 0 {
                times.push(u.time);
                fields.push(u.clone());
            }
        }
        DriftPath::new(times, fields)
    }

    /// Number of steps of size `dt` covering `[0, t_final]` exactly.
    pub fn step_count(&self, t_final: F) -> Result<usize> {
        if !(t_final > F::zero()) {
            return Err(Error::Parameter("final time must be positive".into()));
        }
        let ratio = t_final / self.config.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > F::lit(1e-6) || steps < F::one() {
            return Err(Error::Parameter(format!(
                "final time {t_final} is not a multiple of dt = {}",
                self.config.dt
            )));
        }
        Ok(steps.to_f64_lossy() as usize)
    }
}
