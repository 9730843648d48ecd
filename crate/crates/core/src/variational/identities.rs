use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{simpson_weights, time_derivative};
use super::variation::{band_of, VariationField};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{DriftPath, PseudoSpectral, SpectralField};

/// Which perturbation class the variation is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationClass {
    /// Composition with the stochastic flow; yields viscous Camassa-Holm.
    Ch,
    /// Perturbation of the drift only; yields Leray-alpha.
    Leray,
}

impl VariationClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ch" => Ok(Self::Ch),
            "leray" => Ok(Self::Leray),
            other => Err(Error::Parameter(format!("unknown variation class {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ch => "ch",
            Self::Leray => "leray",
        }
    }
}

/// Quadrature weights for the path's time samples.
pub fn time_weights<F: Real>(u: &DriftPath<F>) -> Vec<F> {
    simpson_weights(u.len(), u.dt())
}

/// `½ ∫ ||u(t)||²_{H¹} dt`.
pub fn action<F: Real>(u: &DriftPath<F>) -> F {
    let w = time_weights(u);
    F::lit(0.5)
        * u.fields
            .iter()
            .zip(&w)
            .map(|(f, &wt)| wt * f.h1_norm_sq())
            .fold(F::zero(), |a, b| a + b)
}

/// Both sides of the integration-by-parts identity for one variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingTerms<F> {
    /// `∫ ⟨δw, m⟩ dt`: derivative of the action along the variation.
    pub first_variation: F,
    /// `-∫ ⟨ṁ - νΔm - N(u), v⟩ dt`: the equation tested against the variation.
    pub weak_pairing: F,
    /// `∫ ||δw|| ||m|| dt`, the natural size of either side.
    pub scale: F,
}

fn validate<F: Real>(u: &DriftPath<F>, v: &VariationField<F>) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    if u.dim() < 2 {
        return Err(Error::Parameter("variational identities need d ≥ 2".into()));
    }
    if u.len() < 3 {
        return Err(Error::Parameter("need at least three time samples".into()));
    }
    let t_final = u.t_final();
    if u.t_start() != F::zero() || (t_final - v.t_final).abs() > F::lit(1e-9) * t_final {
        return Err(Error::Parameter("drift and variation must share the interval [0, T]".into()));
    }
    let n = u.grid_size() as i64;
    let ku = band_of(u.fields.iter());
    let kv = v.band();
    if 2 * ku + kv >= n {
        return Err(Error::Parameter(format!(
            "grid of {n} points cannot resolve drift band {ku} against variation band {kv}"
        )));
    }
    let scale = u.fields.iter().fold(F::one(), |m, f| m.max(f.max_abs()));
    let div = u.divergence_max();
    if div > F::unit_roundoff().sqrt() * scale {
        return Err(Error::NotSolenoidal(div.to_f64_lossy()));
    }
    Ok(())
}

/// Evaluates the first variation, the weak pairing and their scale in one pass.
pub fn pairing<F: Real>(
    u: &DriftPath<F>,
    v: &VariationField<F>,
    nu: F,
    class: VariationClass,
) -> Result<PairingTerms<F>> {
    validate(u, v)?;
    let d = u.dim();
    let n = u.grid_size();
    let ops = PseudoSpectral::<F>::new(d, n, 1.0)?;
    let weights = time_weights(u);
    let momenta: Vec<SpectralField<F>> = u.fields.iter().map(|f| f.helmholtz_apply()).collect();
    let mdot = time_derivative(&momenta, u.dt());
    let terms: Vec<(F, F, F)> = (0..u.len())
        .into_par_iter()
        .map(|i| -> Result<(F, F, F)> {
            let t = u.times[i];
            let (ui, mi) = (&u.fields[i], &momenta[i]);
            let vi = v.at(t, n);
            let mut dw = v
                .vdot_at(t, n)
                .add(&ops.advection(ui, &vi)?)
                .add(&vi.laplacian().scaled(nu));
            let nonlinear = match class {
                VariationClass::Ch => {
                    dw = dw.sub(&ops.advection(&vi, ui)?);
                    ops.ch_nonlinear_nd(ui)?
                }
                VariationClass::Leray => ops.leray_alpha_nonlinear(ui)?,
            };
            let residual = mdot[i].sub(&mi.laplacian().scaled(nu)).sub(&nonlinear.field);
            Ok((
                dw.l2_inner(mi),
                -residual.l2_inner(&vi),
                (dw.l2_norm_sq() * mi.l2_norm_sq()).sqrt(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = PairingTerms {
        first_variation: F::zero(),
        weak_pairing: F::zero(),
        scale: F::zero(),
    };
    for ((a, b, c), &w) in terms.into_iter().zip(&weights) {
        out.first_variation += w * a;
        out.weak_pairing += w * b;
        out.scale += w * c;
    }
    Ok(out)
}

/// `∫ ⟨v̇ + (u·∇)v - (v·∇)u + νΔv, m⟩ dt`.
pub fn first_variation_ch<F: Real>(u: &DriftPath<F>, v: &VariationField<F>, nu: F) -> Result<F> {
    Ok(pairing(u, v, nu, VariationClass::Ch)?.first_variation)
}

/// `∫ ⟨v̇ + (u·∇)v + νΔv, m⟩ dt`.
pub fn first_variation_leray<F: Real>(u: &DriftPath<F>, v: &VariationField<F>, nu: F) -> Result<F> {
    Ok(pairing(u, v, nu, VariationClass::Leray)?.first_variation)
}

/// `-∫ ⟨ṁ - νΔm + u·∇m - Σ_j ∇u^j Δu^j, v⟩ dt`.
pub fn weak_pairing_ch<F: Real>(u: &DriftPath<F>, v: &VariationField<F>, nu: F) -> Result<F> {
    Ok(pairing(u, v, nu, VariationClass::Ch)?.weak_pairing)
}

/// `-∫ ⟨ṁ - νΔm + u·∇m, v⟩ dt`.
pub fn weak_pairing_leray<F: Real>(u: &DriftPath<F>, v: &VariationField<F>, nu: F) -> Result<F> {
    Ok(pairing(u, v, nu, VariationClass::Leray)?.weak_pairing)
}
