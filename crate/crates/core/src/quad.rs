//! Quadrature, differentiation and interpolation on uniform grids.

/// Cumulative integral `C[i] = ∫_{x_0}^{x_i} f` of samples on a uniform grid
/// with spacing `h`, fourth order in the interior.
///
/// Each cell uses the four-point rule
/// `h/24 (-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2})`, with the matching
/// one-sided rule on the first and last cells.
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    for i in 0..n - 1 {
        let cell = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
        } else {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + cell;
    }
    out
}

/// Leading-term estimate of `∫_{-∞}^{s_0} f(s) ds` from the first two samples,
/// assuming `f ~ C e^{κ s}` with `κ > 0` on the unresolved half-line.
///
/// Returns `None` when the samples are inconsistent with a decaying tail,
/// which signals a divergent integral.
pub fn head_tail(f0: f64, f1: f64, h: f64) -> Option<f64> {
    if f0 == 0.0 {
        return Some(0.0);
    }
    if f1 == 0.0 || (f0 > 0.0) != (f1 > 0.0) {
        return if f0.abs() < 1e-300 { Some(0.0) } else { None };
    }
    let kappa = (f1 / f0).ln() / h;
    if kappa <= 1e-3 {
        return None;
    }
    Some(f0 / kappa)
}

/// Mirror of [`head_tail`] for `∫_{s_n}^{∞}` from the last two samples.
pub fn end_tail(f_prev: f64, f_last: f64, h: f64) -> Option<f64> {
    head_tail(f_last, f_prev, h)
}

/// Composite Simpson rule; `f.len()` must be odd.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples");
    let mut acc = f[0] + f[n - 1];
    for (i, v) in f.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Sixth-order central first derivative at every node where the stencil
/// fits; `None` within three nodes of either end.
pub fn derivative6(f: &[f64], h: f64) -> Vec<Option<f64>> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i < 3 || i + 3 >= n {
                None
            } else {
                Some(
                    (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2]
                        + f[i + 3])
                        / (60.0 * h),
                )
            }
        })
        .collect()
}

/// Sixth-order central second derivative, same conventions as [`derivative6`].
pub fn second_derivative6(f: &[f64], h: f64) -> Vec<Option<f64>> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i < 3 || i + 3 >= n {
                None
            } else {
                Some(
                    (2.0 * f[i - 3] - 27.0 * f[i - 2] + 270.0 * f[i - 1] - 490.0 * f[i] + 270.0 * f[i + 1]
                        - 27.0 * f[i + 2]
                        + 2.0 * f[i + 3])
                        / (180.0 * h * h),
                )
            }
        })
        .collect()
}

/// Cubic Hermite interpolation on `[0, h]` at offset `t`.
#[inline]
pub fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> f64 {
    let u = t / h;
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * h * d0
        + (-2.0 * u3 + 3.0 * u2) * y1
        + (u3 - u2) * h * d1
}

/// Four-point Lagrange interpolation of uniformly spaced samples
/// (`x_i = x0 + i h`) at `x`.
pub fn lagrange4(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let pos = (x - x0) / h;
    if n < 4 {
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let t = pos - i as f64;
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let i = (pos.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = pos - i as f64;
    let (a, b, c, d) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    -t * (t - 1.0) * (t - 2.0) / 6.0 * a + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * b
        - (t + 1.0) * t * (t - 2.0) / 2.0 * c
        + (t + 1.0) * t * (t - 1.0) / 6.0 * d
}
