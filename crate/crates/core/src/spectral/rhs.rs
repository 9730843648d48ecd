//! Pseudo-spectral right-hand sides for the momentum `m = (1 - Δ) u`.
//!
//! Products are formed on the grid, transformed back and truncated with the
//! dealiasing cutoff, so modes above the cutoff are exactly zero afterwards.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `∂_t(u - u'') - ν(u - u'')'' = -3uu' + 2u'u'' + uu'''` on the circle.
    ViscousCh1d,
    /// Incompressible viscous Camassa-Holm (Navier-Stokes-alpha) on `T^d`.
    ViscousChNd,
    /// Leray-alpha: the same without `Σ_j ∇u^j Δu^j`.
    LerayAlpha,
}

impl Equation {
    pub fn name(&self) -> &'static str {
        match self {
            Equation::ViscousCh1d => "viscous_ch_1d",
            Equation::ViscousChNd => "viscous_ch_nd",
            Equation::LerayAlpha => "leray_alpha",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "viscous_ch_1d" | "ch1d" => Ok(Equation::ViscousCh1d),
            "viscous_ch_nd" | "ch" => Ok(Equation::ViscousChNd),
            "leray_alpha" | "leray" => Ok(Equation::LerayAlpha),
            other => Err(Error::Parameter(format!("unknown equation {other:?}"))),
        }
    }
}

/// Largest retained `|k_a|` under the dealiasing rule.
pub fn dealias_cutoff(n: usize, fraction: f64) -> i64 {
    (fraction * n as f64 / 2.0 + 1e-9).floor() as i64
}

/// Grid, transforms and dealiasing rule shared by all nonlinear evaluations.
#[derive(Debug)]
pub struct PseudoSpectral<F: Real> {
    grid: SpectralGrid<F>,
    cutoff: i64,
}

/// Nonlinear tendency together with the largest grid speed seen while forming it.
#[derive(Debug, Clone)]
pub struct Nonlinear<F> {
    pub field: SpectralField<F>,
    pub max_speed: F,
}

fn czero<F: Real>() -> Complex<F> {
    Complex::new(F::zero(), F::zero())
}

impl<F: Real> PseudoSpectral<F> {
    pub fn new(d: usize, n: usize, dealias_fraction: f64) -> Result<Self> {
        let grid = SpectralGrid::new(d, n)?;
        let cutoff = dealias_cutoff(n, dealias_fraction);
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) || cutoff < 1 {
            return Err(Error::Parameter(format!(
                "dealias fraction {dealias_fraction} leaves no resolved modes"
            )));
        }
        Ok(Self { grid, cutoff })
    }

    pub fn grid(&self) -> &SpectralGrid<F> {
        &self.grid
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    fn check_shape(&self, u: &SpectralField<F>) -> Result<()> {
        if u.dim() != self.grid.dim() || u.grid_size() != self.grid.size() {
            return Err(Error::Dimension {
                expected: self.grid.dim(),
                found: u.dim(),
            });
        }
        Ok(())
    }

    /// Coefficients of `∂^order/∂θ_axis^order` applied to one component.
    /// Odd derivatives drop the Nyquist mode.
    fn derivative(&self, coeffs: &[Complex<F>], axis: usize, order: u32) -> Vec<Complex<F>> {
        let n = self.grid.size();
        let half = (n / 2) as i64;
        let d = self.grid.dim();
        coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let k = super::grid::wavevector(d, n, idx)[axis];
                if order % 2 == 1 && k.abs() == half {
                    return czero();
                }
                let kf = F::from_i64_lossy(k);
                // (ik)^order
                let mut f = Complex::new(F::one(), F::zero());
                for _ in 0..order {
                    f = f * Complex::new(F::zero(), kf);
                }
                c * f
            })
            .collect()
    }

    fn physical_derivative(&self, coeffs: &[Complex<F>], axis: usize, order: u32) -> Vec<F> {
        self.grid.inverse(&self.derivative(coeffs, axis, order))
    }

    fn to_spectral_truncated(&self, values: Vec<Vec<F>>) -> SpectralField<F> {
        let mut f = SpectralField::from_physical(&self.grid, &values).expect("grid shape");
        f.truncate(self.cutoff);
        f
    }

    fn require_solenoidal(&self, u: &SpectralField<F>) -> Result<()> {
        let tol = F::epsilon().sqrt() * u.max_abs().max(F::one()) * F::from_usize_lossy(self.grid.size());
        let div = u.divergence_max();
        if div > tol {
            return Err(Error::NotSolenoidal(div.to_f64_lossy()));
        }
        Ok(())
    }

    /// `-3uu' + 2u'u'' + uu'''`, dealiased.
    pub fn ch_nonlinear_1d(&self, u: &SpectralField<F>) -> Result<Nonlinear<F>> {
        self.check_shape(u)?;
        if u.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                found: u.dim(),
            });
        }
        let c = &u.components()[0];
        let u0 = self.grid.inverse(c);
        let u1 = self.physical_derivative(c, 0, 1);
        let u2 = self.physical_derivative(c, 0, 2);
        let u3 = self.physical_derivative(c, 0, 3);
        let max_speed = u0.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        let three = F::lit(3.0);
        let two = F::lit(2.0);
        let vals: Vec<F> = (0..u0.len())
            .map(|i| -three * u0[i] * u1[i] + two * u1[i] * u2[i] + u0[i] * u3[i])
            .collect();
        Ok(Nonlinear {
            field: self.to_spectral_truncated(vec![vals]),
            max_speed,
        })
    }

    /// `(a·∇) b` formed on the grid and truncated at the cutoff.
    pub fn advection(&self, a: &SpectralField<F>, b: &SpectralField<F>) -> Result<SpectralField<F>> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        if a.dim() != b.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let len = self.grid.len();
        let av: Vec<Vec<F>> = a.components().iter().map(|c| self.grid.inverse(c)).collect();
        let out = b
            .components()
            .iter()
            .map(|bc| {
                let mut acc = vec![F::zero(); len];
                for (l, al) in av.iter().enumerate() {
                    let db = self.physical_derivative(bc, l, 1);
                    for p in 0..len {
                        acc[p] += al[p] * db[p];
                    }
                }
                acc
            })
            .collect();
        Ok(self.to_spectral_truncated(out))
    }

    /// `∂_t m̂ = -ν k² m̂ + N(u)` for the 1-D viscous Camassa-Holm equation.
    pub fn ch_rhs_1d(&self, u: &SpectralField<F>, nu: F) -> Result<SpectralField<F>> {
        let nl = self.ch_nonlinear_1d(u)?;
        Ok(nl.field.add(&viscous_term(u, nu)))
    }

    fn nonlinear_nd(&self, u: &SpectralField<F>, stretching: bool) -> Result<Nonlinear<F>> {
        self.check_shape(u)?;
        let d = u.dim();
        if d < 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: d,
            });
        }
        self.require_solenoidal(u)?;
        let m = u.helmholtz_apply();
        let uc = u.components();
        let vel: Vec<Vec<F>> = uc.iter().map(|c| self.grid.inverse(c)).collect();
        let len = self.grid.len();
        let mut max_speed = F::zero();
        for p in 0..len {
            let s: F = vel.iter().map(|v| v[p] * v[p]).sum();
            max_speed = max_speed.max(s.sqrt());
        }
        let mut out = vec![vec![F::zero(); len]; d];
        // -u·∇m
        for (i, oi) in out.iter_mut().enumerate() {
            for (l, vl) in vel.iter().enumerate() {
                let dm = self.physical_derivative(&m.components()[i], l, 1);
                for p in 0..len {
                    oi[p] -= vl[p] * dm[p];
                }
            }
        }
        if stretching {
            // Σ_j ∇u^j Δu^j
            let lap = u.laplacian();
            for j in 0..d {
                let lu = self.grid.inverse(&lap.components()[j]);
                for (i, oi) in out.iter_mut().enumerate() {
                    let du = self.physical_derivative(&uc[j], i, 1);
                    for p in 0..len {
                        oi[p] += du[p] * lu[p];
                    }
                }
            }
        }
        Ok(Nonlinear {
            field: self.to_spectral_truncated(out),
            max_speed,
        })
    }

    /// Unprojected `F(u) = -u·∇(u - Δu) + Σ_j ∇u^j Δu^j`.
    pub fn ch_nonlinear_nd(&self, u: &SpectralField<F>) -> Result<Nonlinear<F>> {
        self.nonlinear_nd(u, true)
    }

    /// Unprojected `-u·∇(u - Δu)`.
    pub fn leray_alpha_nonlinear(&self, u: &SpectralField<F>) -> Result<Nonlinear<F>> {
        self.nonlinear_nd(u, false)
    }

    /// Projected nonlinear tendency for `equation` (no viscous part).
    pub fn nonlinear(&self, equation: Equation, u: &SpectralField<F>) -> Result<Nonlinear<F>> {
        match equation {
            Equation::ViscousCh1d => self.ch_nonlinear_1d(u),
            Equation::ViscousChNd => {
                let mut nl = self.ch_nonlinear_nd(u)?;
                nl.field = nl.field.leray_project();
                Ok(nl)
            }
            Equation::LerayAlpha => {
                let mut nl = self.leray_alpha_nonlinear(u)?;
                nl.field = nl.field.leray_project();
                Ok(nl)
            }
        }
    }

    /// `∂_t m̂ = P F(u) + νΔm` for the viscous Camassa-Holm equation.
    pub fn ch_rhs_nd(&self, u: &SpectralField<F>, nu: F) -> Result<SpectralField<F>> {
        let nl = self.nonlinear(Equation::ViscousChNd, u)?;
        Ok(nl.field.add(&viscous_term(u, nu)))
    }

    /// `∂_t m̂ = P(-u·∇m) + νΔm` for the Leray-alpha equation.
    pub fn leray_alpha_rhs(&self, u: &SpectralField<F>, nu: F) -> Result<SpectralField<F>> {
        let nl = self.nonlinear(Equation::LerayAlpha, u)?;
        Ok(nl.field.add(&viscous_term(u, nu)))
    }

    pub fn rhs(&self, equation: Equation, u: &SpectralField<F>, nu: F) -> Result<SpectralField<F>> {
        match equation {
            Equation::ViscousCh1d => self.ch_rhs_1d(u, nu),
            Equation::ViscousChNd => self.ch_rhs_nd(u, nu),
            Equation::LerayAlpha => self.leray_alpha_rhs(u, nu),
        }
    }

    /// Pressure amplitudes `p̂` with `-∇p = (I - P) F(u)`; the mean is set to zero.
    pub fn pressure(&self, equation: Equation, u: &SpectralField<F>) -> Result<Vec<Complex<F>>> {
        let nl = match equation {
            Equation::ViscousCh1d => return Err(Error::Parameter("no pressure in 1-D".into())),
            Equation::ViscousChNd => self.ch_nonlinear_nd(u)?,
            Equation::LerayAlpha => self.leray_alpha_nonlinear(u)?,
        };
        let f = nl.field;
        let mut p = vec![czero(); f.len()];
        for (idx, slot) in p.iter_mut().enumerate().skip(1) {
            let k = f.wavevector(idx);
            let k2 = F::from_i64_lossy(k.iter().map(|c| c * c).sum());
            let mut dot = czero::<F>();
            for (c, &kc) in k.iter().enumerate() {
                dot = dot + f.components()[c][idx] * F::from_i64_lossy(kc);
            }
            // (I - P)F̂ = k (k·F̂)/|k|² = -i k p̂
            *slot = Complex::new(F::zero(), F::one()) * dot / k2;
        }
        Ok(p)
    }
}

/// `νΔm̂ = -ν|k|²(1 + |k|²) û`.
pub fn viscous_term<F: Real>(u: &SpectralField<F>, nu: F) -> SpectralField<F> {
    u.map_modes(|_, k2| -nu * k2 * (F::one() + k2))
}

#[cfg(test)]
mod tests;
