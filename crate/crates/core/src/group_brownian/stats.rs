use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::coupling::mean_and_se;
use super::flow::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::torus::periodic_delta;

/// Per-axis mean displacement between two snapshots and its standard error.
///
/// Displacements use the shortest periodic difference, so they must stay below π.
pub fn mean_displacement<F: Real>(
    start: &ParticleEnsemble<F>,
    end: &ParticleEnsemble<F>,
) -> Result<(Vec<F>, Vec<F>)> {
    if start.len() != end.len() || start.d != end.d {
        return Err(Error::Dimension {
            expected: start.len(),
            found: end.len(),
        });
    }
    let d = start.d;
    let mut means = Vec::with_capacity(d);
    let mut ses = Vec::with_capacity(d);
    for a in 0..d {
        let disp: Vec<F> = start
            .points()
            .zip(end.points())
            .map(|(p, q)| periodic_delta(q[a], p[a]))
            .collect();
        let (m, se) = mean_and_se(&disp);
        means.push(m);
        ses.push(se);
    }
    Ok((means, ses))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Pearson test of the ensemble against the uniform measure on `bins^d` equal cells.
pub fn uniformity_chi_square<F: Real>(
    ensemble: &ParticleEnsemble<F>,
    bins: usize,
) -> Result<ChiSquareTest> {
    let d = ensemble.d;
    let cells = bins.pow(d as u32);
    if bins < 2 || ensemble.len() < 5 * cells {
        return Err(Error::TooFewSamples {
            found: ensemble.len(),
            required: 5 * cells.max(2),
        });
    }
    let mut counts = vec![0usize; cells];
    let width = two_pi::<F>() / F::from_usize_lossy(bins);
    for p in ensemble.points() {
        let mut idx = 0;
        for &x in p {
            let b = ((x / width).floor().to_f64_lossy() as usize).min(bins - 1);
            idx = idx * bins + b;
        }
        counts[idx] += 1;
    }
    let expected = ensemble.len() as f64 / cells as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}
