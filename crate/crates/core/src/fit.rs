//! Linear least squares with column equilibration.

use nalgebra::{DMatrix, DVector};

use crate::error::{GelfandError, Result};

/// Least-squares solution of `Σ_j c_j columns[j] ≈ rhs`.
///
/// Columns are scaled to unit Euclidean norm before the SVD solve so that
/// basis functions of very different magnitude do not lose precision.
/// Returns the coefficients and the residual 2-norm.
pub fn least_squares(columns: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rhs.len();
    let n = columns.len();
    if n == 0 || m < n || columns.iter().any(|c| c.len() != m) {
        return Err(GelfandError::InsufficientData(format!(
            "least squares needs at least {n} samples per column, got {m}"
        )));
    }
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(GelfandError::Singular("zero or non-finite basis column".into()));
    }
    let a = DMatrix::from_fn(m, n, |i, j| columns[j][i] / scales[j]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| GelfandError::Singular(e.to_string()))?;
    let resid = (&a * &x - &b).norm();
    let coeffs = x.iter().zip(&scales).map(|(v, s)| v / s).collect();
    Ok((coeffs, resid))
}

/// Straight-line fit `y ≈ c0 + c1 x`; returns `(c0, c1)`.
pub fn line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let xm = x.iter().sum::<f64>() / x.len().max(1) as f64;
    let shifted: Vec<f64> = x.iter().map(|v| v - xm).collect();
    let (c, _) = least_squares(&[vec![1.0; x.len()], shifted], y)?;
    Ok((c[0] - c[1] * xm, c[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.5 + 40.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.25 * v).collect();
        let (a, b) = line(&x, &y).unwrap();
        assert!((a - 3.0).abs() < 1e-10 && (b + 0.25).abs() < 1e-12);
    }

    #[test]
    fn badly_scaled_columns() {
        let s: Vec<f64> = (0..50).map(|i| 45.0 + 0.3 * i as f64).collect();
        let c0: Vec<f64> = s.iter().map(|v| (-4.0 * v).exp()).collect();
        let c1: Vec<f64> = s.iter().map(|v| v * (-4.0 * v).exp()).collect();
        let rhs: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let (c, r) = least_squares(&[c0, c1], &rhs).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-8 && (c[1] + 0.5).abs() < 1e-9, "{c:?}");
        assert!(r < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(least_squares(&[vec![1.0], vec![2.0]], &[1.0]).is_err());
    }
}
