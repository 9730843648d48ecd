//! The auxiliary lattice sum `V(θ) = Σ_{k≠0} sin²(k·θ) / |k|^{d+3}` with a
//! rigorous tail enclosure, and the constant of the bound
//! `V(θ) ≤ C₁ |θ|² log(1/|θ|)` on `0 < |θ| < π/4`.

use serde::{Deserialize, Serialize};

use super::lattice_classes;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::dot_i64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VBound<F> {
    /// Partial sum over `0 < |k| ≤ K`.
    pub value: F,
    /// Upper bound on the omitted terms; `V ∈ [value, value + tail_bound]`.
    pub tail_bound: F,
}

impl<F: Real> VBound<F> {
    pub fn upper(&self) -> F {
        self.value + self.tail_bound
    }
}

fn surface_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * surface_area(d - 2) / (d - 2) as f64,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bound on `Σ_{|k|>K} |k|^{-(d+3)}` for `K > √d`.
///
/// Each lattice point owns the unit cube centred on it; on that cube
/// `|k| ≥ |x| - √d/2`, so the sum is dominated by
/// `S_d ∫_{K-√d/2}^∞ ρ^{d-1} (ρ - √d/2)^{-(d+3)} dρ`, evaluated in closed form.
fn integral_tail(d: usize, k_max: f64) -> f64 {
    let h = (d as f64).sqrt() / 2.0;
    let s0 = k_max - 2.0 * h;
    assert!(s0 > 0.0, "integral comparison needs K > sqrt(d)");
    let sum: f64 = (0..d)
        .map(|j| {
            let denom = (d + 2 - j) as f64;
            binomial(d - 1, j) * h.powi((d - 1 - j) as i32) * s0.powi(j as i32 - d as i32 - 2) / denom
        })
        .sum();
    surface_area(d) * sum
}

/// Truncated `V(θ)` with its tail enclosure.
pub fn v_function<F: Real>(theta: &[F], k_max: usize) -> VBound<F> {
    let d = theta.len();
    let p = (d + 3) as i32;
    // Direct shell `K < |k| ≤ K'` when the integral comparison is not yet valid.
    let k_int = if (k_max as f64) > (d as f64).sqrt() {
        k_max
    } else {
        (d as f64).sqrt().floor() as usize + 1
    };
    let mut value = F::zero();
    let mut shell = 0.0_f64;
    let lim2 = (k_max * k_max) as i64;
    for k in lattice_classes(d, k_int) {
        let n2 = k.norm_sq();
        let kn = (n2 as f64).sqrt();
        if n2 <= lim2 {
            let s = dot_i64(k.components(), theta).sin();
            // both k and -k
            value += F::lit(2.0) * s * s / F::lit(kn.powi(p));
        } else {
            shell += 2.0 / kn.powi(p);
        }
    }
    VBound {
        value,
        tail_bound: F::lit(shell + integral_tail(d, k_int as f64)),
    }
}

/// `|θ|² log(1/|θ|)`.
pub fn log_bound_rhs<F: Real>(theta: &[F]) -> F {
    let r2: F = theta.iter().map(|&x| x * x).sum();
    let r = r2.sqrt();
    r2 * (F::one() / r).ln()
}

/// Smallest `C₁` with `upper(V(θ)) ≤ C₁ |θ|² log(1/|θ|)` at every sample point.
///
/// Points must satisfy `0 < |θ| < π/4`.
pub fn log_bound_constant<F: Real>(points: &[Vec<F>], k_max: usize) -> F {
    points
        .iter()
        .map(|p| v_function(p, k_max).upper() / log_bound_rhs(p))
        .fold(F::zero(), F::max)
}

/// One evaluation of the enclosure against the fitted bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogBoundRow {
    pub radius: f64,
    pub direction: usize,
    pub value: f64,
    pub upper: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub fitted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogBoundStudy {
    pub d: usize,
    pub k_max: usize,
    /// `max upper(V) / (|θ|² log(1/|θ|))` over the fitting grid.
    pub c1: f64,
    pub rows: Vec<LogBoundRow>,
    /// Points (fitting or validation) whose enclosure exceeds `C₁ |θ|² log(1/|θ|)`.
    pub violations: usize,
}

/// Log-spaced radii in `[r_min, r_max]`, `count ≥ 2`.
pub fn log_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Fits `C₁` on `radii × directions` and checks it on a grid `refine` times finer in `log |θ|`.
pub fn log_bound_study(
    directions: &[Vec<f64>],
    radii: &[f64],
    refine: usize,
    k_max: usize,
) -> Result<LogBoundStudy> {
    let d = directions.first().map_or(0, |v| v.len());
    if d < 2 || directions.iter().any(|v| v.len() != d) {
        return Err(Error::Parameter("directions must share a dimension of at least 2".into()));
    }
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0 && r < std::f64::consts::FRAC_PI_4)) {
        return Err(Error::Parameter("radii must lie in (0, π/4)".into()));
    }
    let refine = refine.max(1);
    let mut fine = Vec::new();
    for w in radii.windows(2) {
        for j in 0..refine {
            let s = j as f64 / refine as f64;
            fine.push(((1.0 - s) * w[0].ln() + s * w[1].ln()).exp());
        }
    }
    fine.push(*radii.last().expect("non-empty"));
    let eval = |dir: usize, r: f64, fitted: bool| {
        let v = &directions[dir];
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta: Vec<f64> = v.iter().map(|x| r * x / norm).collect();
        let b = v_function(&theta, k_max);
        let rhs = log_bound_rhs(&theta);
        LogBoundRow {
            radius: r,
            direction: dir,
            value: b.value,
            upper: b.upper(),
            rhs,
            ratio: b.upper() / rhs,
            fitted,
        }
    };
    let mut rows = Vec::new();
    for dir in 0..directions.len() {
        for (i, &r) in fine.iter().enumerate() {
            rows.push(eval(dir, r, i % refine == 0));
        }
    }
    let c1 = rows.iter().filter(|r| r.fitted).map(|r| r.ratio).fold(0.0, f64::max);
    let violations = rows.iter().filter(|r| r.upper > c1 * r.rhs).count();
    Ok(LogBoundStudy {
        d,
        k_max,
        c1,
        rows,
        violations,
    })
}
