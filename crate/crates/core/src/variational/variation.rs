use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::mix;
use crate::scalar::Real;
use crate::spectral::{random_solenoidal, DriftPath, SparseField, SpectralField};

/// Temporal envelope of a variation term on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `sin(jπt/T)`, vanishing at both ends.
    Sine(u32),
    /// `t/T`; not admissible, kept for negative tests.
    Ramp,
}

impl TimeProfile {
    pub fn value<F: Real>(&self, t: F, t_final: F) -> F {
        match *self {
            TimeProfile::Sine(j) => {
                if t <= F::zero() || t >= t_final {
                    F::zero()
                } else {
                    (F::from_usize_lossy(j as usize) * F::PI() * t / t_final).sin()
                }
            }
            TimeProfile::Ramp => t / t_final,
        }
    }

    pub fn derivative<F: Real>(&self, t: F, t_final: F) -> F {
        match *self {
            TimeProfile::Sine(j) => {
                let w = F::from_usize_lossy(j as usize) * F::PI() / t_final;
                w * (w * t).cos()
            }
            TimeProfile::Ramp => t_final.recip(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationTerm<F> {
    pub profile: TimeProfile,
    pub shape: SpectralField<F>,
}

/// `v(t, θ) = Σ_j φ_j(t) w_j(θ)` with divergence-free shapes `w_j`.
///
/// Both `v` and `v̇` are available exactly at any time and point.
#[derive(Debug, Clone)]
pub struct VariationField<F> {
    pub t_final: F,
    terms: Vec<VariationTerm<F>>,
    sparse: Vec<SparseField<F>>,
}

impl<F: Real> VariationField<F> {
    pub fn new(t_final: F, terms: Vec<VariationTerm<F>>) -> Result<Self> {
        if !(t_final > F::zero()) {
            return Err(Error::Parameter("variation horizon must be positive".into()));
        }
        let first = terms
            .first()
            .ok_or_else(|| Error::Parameter("variation needs at least one term".into()))?;
        let d = first.shape.dim();
        let mut endpoint = F::zero();
        for term in &terms {
            if term.shape.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: term.shape.dim(),
                });
            }
            let scale = term.shape.max_abs().max(F::one());
            let div = term.shape.divergence_max();
            if div > F::unit_roundoff().sqrt() * scale {
                return Err(Error::NotSolenoidal(div.to_f64_lossy()));
            }
            let amp = term.shape.max_abs();
            let ends = term.profile.value(F::zero(), t_final).abs()
                + term.profile.value(t_final, t_final).abs();
            endpoint = endpoint.max(amp * ends);
        }
        if endpoint > F::zero() {
            return Err(Error::EndpointVariation(endpoint.to_f64_lossy()));
        }
        let sparse = terms.iter().map(|t| t.shape.sparse()).collect();
        Ok(Self {
            t_final,
            terms,
            sparse,
        })
    }

    pub fn dim(&self) -> usize {
        self.terms[0].shape.dim()
    }

    pub fn terms(&self) -> &[VariationTerm<F>] {
        &self.terms
    }

    /// Largest `|k_a|` over all shapes.
    pub fn band(&self) -> i64 {
        band_of(self.terms.iter().map(|t| &t.shape))
    }

    pub fn scaled(&self, s: F) -> Self {
        let terms: Vec<VariationTerm<F>> = self
            .terms
            .iter()
            .map(|t| VariationTerm {
                profile: t.profile,
                shape: t.shape.scaled(s),
            })
            .collect();
        let sparse = terms.iter().map(|t| t.shape.sparse()).collect();
        Self {
            t_final: self.t_final,
            terms,
            sparse,
        }
    }

    fn combine(&self, t: F, n: usize, coef: impl Fn(&TimeProfile) -> F) -> SpectralField<F> {
        let mut out = SpectralField::zeros(self.dim(), n);
        for term in &self.terms {
            let c = coef(&term.profile);
            if c != F::zero() {
                out = out.axpy(c, &term.shape.resized(n));
            }
        }
        out.time = t;
        out
    }

    /// `v(t, ·)` on an `n`-point grid.
    pub fn at(&self, t: F, n: usize) -> SpectralField<F> {
        self.combine(t, n, |p| p.value(t, self.t_final))
    }

    /// `v̇(t, ·)` on an `n`-point grid.
    pub fn vdot_at(&self, t: F, n: usize) -> SpectralField<F> {
        self.combine(t, n, |p| p.derivative(t, self.t_final))
    }

    pub fn value(&self, t: F, theta: &[F], out: &mut [F]) {
        out.iter_mut().for_each(|o| *o = F::zero());
        for (term, sp) in self.terms.iter().zip(&self.sparse) {
            sp.accumulate(theta, term.profile.value(t, self.t_final), out);
        }
    }

    /// Value, Jacobian and Hessian of `v̇(t, ·)` at `θ` (row-major, as [`SparseField::eval_jet`]).
    pub fn vdot_jet(&self, t: F, theta: &[F], val: &mut [F], jac: &mut [F], hess: &mut [F]) {
        let d = self.dim();
        val.iter_mut().for_each(|o| *o = F::zero());
        jac.iter_mut().for_each(|o| *o = F::zero());
        hess.iter_mut().for_each(|o| *o = F::zero());
        let mut v = vec![F::zero(); d];
        let mut j = vec![F::zero(); d * d];
        let mut h = vec![F::zero(); d * d * d];
        for (term, sp) in self.terms.iter().zip(&self.sparse) {
            let c = term.profile.derivative(t, self.t_final);
            sp.eval_jet(theta, &mut v, &mut j, &mut h);
            for (o, x) in val.iter_mut().zip(&v) {
                *o += c * *x;
            }
            for (o, x) in jac.iter_mut().zip(&j) {
                *o += c * *x;
            }
            for (o, x) in hess.iter_mut().zip(&h) {
                *o += c * *x;
            }
        }
    }
}

pub(crate) fn band_of<'a, F: Real + 'a>(fields: impl Iterator<Item = &'a SpectralField<F>>) -> i64 {
    let mut band = 0;
    for f in fields {
        for idx in 0..f.len() {
            if f.components().iter().any(|c| c[idx].norm() > F::zero()) {
                band = band.max(f.wavevector(idx).iter().map(|c| c.abs()).max().unwrap_or(0));
            }
        }
    }
    band
}

/// Reproducible battery of admissible variations with two sine harmonics each.
///
/// Shapes are random divergence-free fields with `|k_a| ≤ max_mode` and unit RMS.
pub fn variation_battery<F: Real>(
    d: usize,
    count: usize,
    max_mode: i64,
    t_final: F,
    seed: u64,
) -> Result<Vec<VariationField<F>>> {
    if max_mode < 1 {
        return Err(Error::Parameter("variation band must be at least 1".into()));
    }
    let mut n = 8;
    while (n as i64) <= 3 * max_mode {
        n *= 2;
    }
    (0..count)
        .map(|i| {
            let terms = (1..=2u32)
                .map(|j| VariationTerm {
                    profile: TimeProfile::Sine(j),
                    shape: random_solenoidal(d, n, max_mode, F::one(), mix(&[seed, i as u64, j as u64])),
                })
                .collect();
            VariationField::new(t_final, terms)
        })
        .collect()
}

/// Divergence-free test drift `cos(t) a + sin(2t) b` with random shapes of band `max_mode`.
pub fn random_drift_path<F: Real>(
    d: usize,
    n: usize,
    max_mode: i64,
    t_final: F,
    steps: usize,
    seed: u64,
) -> Result<DriftPath<F>> {
    if 3 * max_mode >= n as i64 {
        return Err(Error::Parameter(format!(
            "band {max_mode} does not fit a {n}-point grid"
        )));
    }
    let a = random_solenoidal::<F>(d, n, max_mode, F::one(), mix(&[seed, 0]));
    let b = random_solenoidal::<F>(d, n, max_mode, F::lit(0.5), mix(&[seed, 1]));
    DriftPath::from_fn(t_final, steps, |t| {
        a.scaled(t.cos()).axpy((t + t).sin(), &b)
    })
}
