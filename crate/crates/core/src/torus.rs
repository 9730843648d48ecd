//! Helpers for points on the flat torus `[0, 2π)^d`.

use crate::scalar::{two_pi, Real};

/// Reduces a coordinate into `[0, 2π)`.
#[inline]
pub fn wrap<F: Real>(x: F) -> F {
    let p = two_pi::<F>();
    let mut y = x % p;
    if y < F::zero() {
        y += p;
    }
    // `x % p` can round up to exactly p for tiny negative x.
    if y >= p {
        y = F::zero();
    }
    y
}

/// Signed minimal-image difference `a - b` in `(-π, π]`.
#[inline]
pub fn periodic_delta<F: Real>(a: F, b: F) -> F {
    let p = two_pi::<F>();
    let half = F::PI();
    let mut d = (a - b) % p;
    if d > half {
        d -= p;
    } else if d <= -half {
        d += p;
    }
    d
}

/// Squared torus distance using the per-coordinate metric `min(|Δ|, 2π - |Δ|)`.
pub fn distance_sq<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = periodic_delta(x, y);
            d * d
        })
        .fold(F::zero(), |acc, v| acc + v)
}

pub fn distance<F: Real>(a: &[F], b: &[F]) -> F {
    distance_sq(a, b).sqrt()
}

#[inline]
pub fn dot_i64<F: Real>(k: &[i64], theta: &[F]) -> F {
    k.iter()
        .zip(theta)
        .fold(F::zero(), |acc, (&ki, &t)| acc + F::from_i64_lossy(ki) * t)
}
