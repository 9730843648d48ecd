use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Time-indexed velocity fields `u(t, ·)` on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftPath<F> {
    pub times: Vec<F>,
    pub fields: Vec<SpectralField<F>>,
}

impl<F: Real> DriftPath<F> {
    pub fn new(times: Vec<F>, fields: Vec<SpectralField<F>>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::Format(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.len() > 1 {
            let dt = times[1] - times[0];
            if !(dt > F::zero()) {
                return Err(Error::Format("times must increase".into()));
            }
            let tol = F::lit(1e-9) * dt.max(F::one());
            for w in times.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > tol {
                    return Err(Error::Format("time grid is not uniform".into()));
                }
            }
        }
        let (d, n) = (fields[0].dim(), fields[0].grid_size());
        if fields.iter().any(|f| f.dim() != d || f.grid_size() != n) {
            return Err(Error::Format("fields on different grids".into()));
        }
        Ok(Self { times, fields })
    }

    /// Samples `f(t)` on `steps + 1` uniform times in `[0, t_final]`.
    pub fn from_fn(t_final: F, steps: usize, f: impl Fn(F) -> SpectralField<F>) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Parameter("need at least one time step".into()));
        }
        let dt = t_final / F::from_usize_lossy(steps);
        let times: Vec<F> = (0..=steps).map(|i| F::from_usize_lossy(i) * dt).collect();
        let fields = times
            .iter()
            .map(|&t| {
                let mut u = f(t);
                u.time = t;
                u
            })
            .collect();
        Self::new(times, fields)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    pub fn grid_size(&self) -> usize {
        self.fields[0].grid_size()
    }

    pub fn dt(&self) -> F {
        if self.times.len() < 2 {
            F::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn t_start(&self) -> F {
        self.times[0]
    }

    pub fn t_final(&self) -> F {
        *self.times.last().expect("nonempty")
    }

    /// Largest `|k·û|` over all snapshots.
    pub fn divergence_max(&self) -> F {
        self.fields
            .iter()
            .map(|f| f.divergence_max())
            .fold(F::zero(), F::max)
    }

    pub fn scaled(&self, s: F) -> Self {
        Self {
            times: self.times.clone(),
            fields: self.fields.iter().map(|f| f.scaled(s)).collect(),
        }
    }

    /// Pointwise `self + s * other` on a shared time grid.
    pub fn axpy(&self, s: F, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Format("paths on different time grids".into()));
        }
        Ok(Self {
            times: self.times.clone(),
            fields: self
                .fields
                .iter()
                .zip(&other.fields)
                .map(|(a, b)| {
                    let mut f = a.axpy(s, b);
                    f.time = a.time;
                    f
                })
                .collect(),
        })
    }
}
