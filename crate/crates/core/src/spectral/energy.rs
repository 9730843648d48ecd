use std::io::Write;

use serde::{Deserialize, Serialize};

use super::path::DriftPath;
use crate::error::Result;
use crate::scalar::Real;

/// Discrete H¹ energy balance at one recorded time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyRow<F> {
    pub time: F,
    /// `½ ||u||²_{H¹}`.
    pub energy: F,
    /// `ν (||∇u||² + ||Δu||²)`.
    pub dissipation: F,
    /// `dE/dt + dissipation`, with `dE/dt` from second-order differences.
    pub residual: F,
}

pub fn energy_report<F: Real>(path: &DriftPath<F>, nu: F) -> Vec<EnergyRow<F>> {
    let half = F::lit(0.5);
    let energy: Vec<F> = path.fields.iter().map(|u| half * u.h1_norm_sq()).collect();
    let diss: Vec<F> = path
        .fields
        .iter()
        .map(|u| nu * (u.grad_norm_sq() + u.lap_norm_sq()))
        .collect();
    let n = energy.len();
    let dt = path.dt();
    let rate = |i: usize| -> F {
        if n < 2 {
            return F::zero();
        }
        if n == 2 {
            return (energy[1] - energy[0]) / dt;
        }
        let two = F::lit(2.0);
        if i == 0 {
            (-F::lit(3.0) * energy[0] + F::lit(4.0) * energy[1] - energy[2]) / (two * dt)
        } else if i == n - 1 {
            (F::lit(3.0) * energy[n - 1] - F::lit(4.0) * energy[n - 2] + energy[n - 3]) / (two * dt)
        } else {
            (energy[i + 1] - energy[i - 1]) / (two * dt)
        }
    };
    (0..n)
        .map(|i| EnergyRow {
            time: path.times[i],
            energy: energy[i],
            dissipation: diss[i],
            residual: rate(i) + diss[i],
        })
        .collect()
}

pub fn write_energy_csv<F: Real, W: Write>(rows: &[EnergyRow<F>], mut w: W) -> Result<()> {
    writeln!(w, "time,energy,dissipation,residual")?;
    for r in rows {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            r.time.to_f64_lossy(),
            r.energy.to_f64_lossy(),
            r.dissipation.to_f64_lossy(),
            r.residual.to_f64_lossy()
        )?;
    }
    Ok(())
}
