use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{DriftPath, SparseField, SpectralField};

/// Velocity field `u(t, θ)` driving a Lagrangian flow.
pub trait Drift<F: Real>: Sync {
    fn velocity(&self, t: F, theta: &[F], out: &mut [F]);

    /// False only for the zero drift, which lets steppers skip the evaluation.
    fn is_active(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoDrift;

impl<F: Real> Drift<F> for NoDrift {
    fn velocity(&self, _t: F, _theta: &[F], out: &mut [F]) {
        out.iter_mut().for_each(|o| *o = F::zero());
    }

    fn is_active(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct ConstantDrift<F>(pub Vec<F>);

impl<F: Real> Drift<F> for ConstantDrift<F> {
    fn velocity(&self, _t: F, _theta: &[F], out: &mut [F]) {
        out.copy_from_slice(&self.0);
    }
}

/// Time-independent spectral field, evaluated by direct trigonometric sums.
#[derive(Debug, Clone)]
pub struct FrozenDrift<F>(pub SparseField<F>);

impl<F: Real> FrozenDrift<F> {
    pub fn new(u: &SpectralField<F>) -> Self {
        Self(u.sparse())
    }
}

impl<F: Real> Drift<F> for FrozenDrift<F> {
    fn velocity(&self, _t: F, theta: &[F], out: &mut [F]) {
        self.0.eval_into(theta, out);
    }
}

/// A [`DriftPath`] evaluated exactly in space and linearly interpolated in time.
#[derive(Debug, Clone)]
pub struct PathDrift<F> {
    t0: F,
    dt: F,
    fields: Vec<SparseField<F>>,
}

impl<F: Real> PathDrift<F> {
    pub fn new(path: &DriftPath<F>) -> Result<Self> {
        let scale = path
            .fields
            .iter()
            .map(|f| f.max_abs())
            .fold(F::one(), F::max);
        let div = path.divergence_max();
        if div > F::unit_roundoff().sqrt() * scale {
            return Err(Error::NotSolenoidal(div.to_f64_lossy()));
        }
        Ok(Self {
            t0: path.t_start(),
            dt: path.dt(),
            fields: path.fields.iter().map(|f| f.sparse()).collect(),
        })
    }
}

impl<F: Real> Drift<F> for PathDrift<F> {
    fn velocity(&self, t: F, theta: &[F], out: &mut [F]) {
        let last = self.fields.len() - 1;
        if last == 0 || !(self.dt > F::zero()) {
            self.fields[0].eval_into(theta, out);
            return;
        }
        let s = ((t - self.t0) / self.dt).max(F::zero());
        let j = s.floor().to_f64_lossy() as usize;
        if j >= last {
            self.fields[last].eval_into(theta, out);
            return;
        }
        let w = s - F::from_usize_lossy(j);
        out.iter_mut().for_each(|o| *o = F::zero());
        self.fields[j].accumulate(theta, F::one() - w, out);
        if w > F::zero() {
            self.fields[j + 1].accumulate(theta, w, out);
        }
    }
}

/// `s ↦ -u(T - s, ·)`, the drift of the time-reversed flow.
pub struct ReversedDrift<'a, F: Real> {
    pub inner: &'a dyn Drift<F>,
    pub t_final: F,
}

impl<F: Real> Drift<F> for ReversedDrift<'_, F> {
    fn velocity(&self, t: F, theta: &[F], out: &mut [F]) {
        self.inner.velocity(self.t_final - t, theta, out);
        out.iter_mut().for_each(|o| *o = -*o);
    }

    fn is_active(&self) -> bool {
        self.inner.is_active()
    }
}
