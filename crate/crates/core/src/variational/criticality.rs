use serde::{Deserialize, Serialize};

use super::identities::{pairing, VariationClass};
use super::variation::VariationField;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::DriftPath;

/// Constant in the criticality tolerance `C · dt² · scale`.
///
/// Pinned from two-dimensional runs with the integrating-factor solver and initial
/// RMS velocity up to 2, where `max |δA| / (dt² · scale)` stayed between 0.001 and 0.09
/// and did not move under a joint 2x refinement of `dt` and grid.
pub const CRITICALITY_TOL_COEFFICIENT: f64 = 0.25;

/// Outcome of testing a drift path against a battery of variations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport<F> {
    pub class: VariationClass,
    pub first_variations: Vec<F>,
    pub weak_pairings: Vec<F>,
    pub scales: Vec<F>,
    pub max_first_variation: F,
    pub max_scale: F,
    pub dt: F,
    pub tolerance: F,
    pub pass: bool,
}

impl<F: Real> CriticalityReport<F> {
    /// `max |δA| / (dt² · max scale)`: the quantity bounded by the tolerance constant.
    pub fn normalized(&self) -> F {
        let denom = self.dt * self.dt * self.max_scale;
        if denom > F::zero() {
            self.max_first_variation / denom
        } else {
            F::zero()
        }
    }
}

pub fn criticality_tolerance<F: Real>(dt: F, scale: F) -> F {
    F::lit(CRITICALITY_TOL_COEFFICIENT) * dt * dt * scale
}

/// Evaluates the first variation of the action at `u` along every element of `battery`.
///
/// `dt` is the time step used to produce `u`; the path should record every step.
pub fn criticality_check<F: Real>(
    u: &DriftPath<F>,
    battery: &[VariationField<F>],
    nu: F,
    class: VariationClass,
    dt: F,
) -> Result<CriticalityReport<F>> {
    if battery.is_empty() {
        return Err(Error::EmptyBattery);
    }
    let mut report = CriticalityReport {
        class,
        first_variations: Vec::with_capacity(battery.len()),
        weak_pairings: Vec::with_capacity(battery.len()),
        scales: Vec::with_capacity(battery.len()),
        max_first_variation: F::zero(),
        max_scale: F::zero(),
        dt,
        tolerance: F::zero(),
        pass: false,
    };
    for v in battery {
        let terms = pairing(u, v, nu, class)?;
        report.max_first_variation = report.max_first_variation.max(terms.first_variation.abs());
        report.max_scale = report.max_scale.max(terms.scale);
        report.first_variations.push(terms.first_variation);
        report.weak_pairings.push(terms.weak_pairing);
        report.scales.push(terms.scale);
    }
    report.tolerance = criticality_tolerance(dt, report.max_scale);
    report.pass = report.max_first_variation <= report.tolerance;
    Ok(report)
}
