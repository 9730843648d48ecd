//! Noise records and trajectory tables.
//!
//! A noise record is a JSON header line terminated by `\n`, followed by
//! little-endian `f64` values, mode-major: for each signed mode all steps of
//! `(dx¹, dx²)`, then for each translation axis all steps of `dy`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::flow::{NoiseRecord, ParticleEnsemble};
use super::noise::NoiseIncrement;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NOISE_LAYOUT: &str = "little-endian f64, mode-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecordHeader {
    pub seed: u64,
    pub path: u64,
    pub dt: f64,
    pub steps: usize,
    pub mode_count: usize,
    pub translation_dims: usize,
    pub layout: String,
}

pub fn write_noise_record<F: Real, W: Write>(mut w: W, record: &NoiseRecord<F>) -> Result<()> {
    let steps = record.steps();
    let modes = record.increments.first().map_or(0, |i| i.dx.len());
    let dims = record.increments.first().map_or(0, |i| i.dy.len());
    let header = NoiseRecordHeader {
        seed: record.seed,
        path: record.path,
        dt: record.dt.to_f64_lossy(),
        steps,
        mode_count: modes,
        translation_dims: dims,
        layout: NOISE_LAYOUT.into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity((2 * modes + dims) * steps * 8);
    for m in 0..modes {
        for inc in &record.increments {
            for v in inc.dx[m] {
                bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
            }
        }
    }
    for a in 0..dims {
        for inc in &record.increments {
            bytes.extend_from_slice(&inc.dy[a].to_f64_lossy().to_le_bytes());
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_noise_record<F: Real, R: BufRead>(mut r: R) -> Result<NoiseRecord<F>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: NoiseRecordHeader = serde_json::from_str(line.trim_end())?;
    if h.layout != NOISE_LAYOUT {
        return Err(Error::Format(format!("unsupported layout {:?}", h.layout)));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = (2 * h.mode_count + h.translation_dims) * h.steps * 8;
    if bytes.len() != expected {
        return Err(Error::MissingNoise(format!(
            "payload has {} bytes, header announces {expected}",
            bytes.len()
        )));
    }
    let vals: Vec<F> = bytes
        .chunks_exact(8)
        .map(|b| F::lit(f64::from_le_bytes(b.try_into().expect("8 bytes"))))
        .collect();
    let dt = F::lit(h.dt);
    let mut increments: Vec<NoiseIncrement<F>> = (0..h.steps)
        .map(|_| NoiseIncrement {
            dt,
            dx: Vec::with_capacity(h.mode_count),
            dy: Vec::with_capacity(h.translation_dims),
        })
        .collect();
    for m in 0..h.mode_count {
        for (s, inc) in increments.iter_mut().enumerate() {
            let o = 2 * (m * h.steps + s);
            inc.dx.push([vals[o], vals[o + 1]]);
        }
    }
    let base = 2 * h.mode_count * h.steps;
    for a in 0..h.translation_dims {
        for (s, inc) in increments.iter_mut().enumerate() {
            inc.dy.push(vals[base + a * h.steps + s]);
        }
    }
    Ok(NoiseRecord {
        seed: h.seed,
        path: h.path,
        dt,
        increments,
    })
}

/// Rows `t, particle, θ₁, …, θ_d` for every snapshot.
pub fn write_trajectory_csv<F: Real, W: Write>(
    mut w: W,
    trajectory: &[ParticleEnsemble<F>],
) -> Result<()> {
    let d = trajectory.first().map_or(0, |e| e.d);
    let mut head = String::from("t,particle");
    for a in 1..=d {
        head.push_str(&format!(",theta{a}"));
    }
    writeln!(w, "{head}")?;
    for snap in trajectory {
        for (i, p) in snap.points().enumerate() {
            write!(w, "{:.17e},{i}", snap.time.to_f64_lossy())?;
            for x in p {
                write!(w, ",{:.17e}", x.to_f64_lossy())?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
