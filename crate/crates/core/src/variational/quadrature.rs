use crate::scalar::Real;
use crate::spectral::SpectralField;

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
///
/// An odd number of intervals closes with the 3/8 rule on the last three;
/// two samples fall back to the trapezoid.
pub fn simpson_weights<F: Real>(n: usize, h: F) -> Vec<F> {
    let mut w = vec![F::zero(); n];
    match n {
        0 | 1 => return w,
        2 => {
            w[0] = h / F::lit(2.0);
            w[1] = h / F::lit(2.0);
            return w;
        }
        _ => {}
    }
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
    let third = h / F::lit(3.0);
    let mut j = 0;
    while j < simpson_end {
        w[j] += third;
        w[j + 1] += F::lit(4.0) * third;
        w[j + 2] += third;
        j += 2;
    }
    if simpson_end < intervals {
        let e = F::lit(3.0) * h / F::lit(8.0);
        let s = simpson_end;
        w[s] += e;
        w[s + 1] += F::lit(3.0) * e;
        w[s + 2] += F::lit(3.0) * e;
        w[s + 3] += e;
    }
    w
}

/// Finite-difference stencil `(index, weight)` for the first derivative at sample `i` of `n`.
///
/// Fourth order with one-sided ends when `n ≥ 5`, second order for `n ∈ {3, 4}`.
pub fn derivative_stencil<F: Real>(i: usize, n: usize, h: F) -> Vec<(usize, F)> {
    let scaled = |den: f64, taps: &[(usize, f64)]| -> Vec<(usize, F)> {
        taps.iter().map(|&(j, c)| (j, F::lit(c / den) / h)).collect()
    };
    match n {
        0 | 1 => Vec::new(),
        2 => scaled(1.0, &[(0, -1.0), (1, 1.0)]),
        3 | 4 => {
            if i == 0 {
                scaled(2.0, &[(0, -3.0), (1, 4.0), (2, -1.0)])
            } else if i == n - 1 {
                scaled(2.0, &[(n - 3, 1.0), (n - 2, -4.0), (n - 1, 3.0)])
            } else {
                scaled(2.0, &[(i - 1, -1.0), (i + 1, 1.0)])
            }
        }
        _ => {
            if i == 0 {
                scaled(12.0, &[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)])
            } else if i == 1 {
                scaled(12.0, &[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)])
            } else if i == n - 2 {
                scaled(
                    12.0,
                    &[(n - 5, -1.0), (n - 4, 6.0), (n - 3, -18.0), (n - 2, 10.0), (n - 1, 3.0)],
                )
            } else if i == n - 1 {
                scaled(
                    12.0,
                    &[(n - 5, 3.0), (n - 4, -16.0), (n - 3, 36.0), (n - 2, -48.0), (n - 1, 25.0)],
                )
            } else {
                scaled(12.0, &[(i - 2, 1.0), (i - 1, -8.0), (i + 1, 8.0), (i + 2, -1.0)])
            }
        }
    }
}

/// Time derivative of a sampled field sequence.
pub fn time_derivative<F: Real>(fields: &[SpectralField<F>], h: F) -> Vec<SpectralField<F>> {
    let n = fields.len();
    (0..n)
        .map(|i| {
            let mut acc = SpectralField::zeros(fields[i].dim(), fields[i].grid_size());
            for (j, w) in derivative_stencil(i, n, h) {
                acc = acc.axpy(w, &fields[j]);
            }
            acc.time = fields[i].time;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for n in [3usize, 4, 5, 6, 9, 10] {
            let h = 1.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let q: f64 = (0..n)
                .map(|i| {
                    let t = i as f64 * h;
                    w[i] * (t * t * t - 2.0 * t + 1.0)
                })
                .sum();
            assert!((q - 0.25).abs() < 1e-14, "n={n}: {q}");
        }
        assert_eq!(simpson_weights(2, 1.0), vec![0.5, 0.5]);
    }

    #[test]
    fn stencils_differentiate_quartics() {
        let n = 9;
        let h = 0.1;
        let f = |t: f64| t.powi(4) - t * t + 3.0 * t;
        let df = |t: f64| 4.0 * t.powi(3) - 2.0 * t + 3.0;
        for i in 0..n {
            let approx: f64 = derivative_stencil(i, n, h)
                .iter()
                .map(|&(j, w)| w * f(j as f64 * h))
                .sum();
            assert!((approx - df(i as f64 * h)).abs() < 1e-11, "i={i}");
        }
    }
}
