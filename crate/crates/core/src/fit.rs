//! Small dense least-squares fits (Householder QR).

/// Coefficients and root-mean-square residual of a linear least-squares fit.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    pub rms_residual: f64,
}

/// Solves `min ||A c - y||` where `columns[j][i] = A[i][j]`.
///
/// Columns are rescaled to unit norm before factorization, which keeps
/// polynomial-plus-log bases on narrow windows well conditioned enough for
/// the fits used here.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> LinearFit {
    let n = y.len();
    let p = columns.len();
    assert!(p >= 1 && n >= p, "need at least as many samples as unknowns");
    assert!(columns.iter().all(|c| c.len() == n), "ragged design matrix");

    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    // Row-major working copy.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..p).map(|j| columns[j][i] / scales[j]).collect())
        .collect();
    let mut b = y.to_vec();

    for k in 0..p {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let dot: f64 = (k..n).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..n).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..n {
            b[i] -= f * v[i - k];
        }
    }

    let mut c = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = b[k];
        for j in k + 1..p {
            acc -= a[k][j] * c[j];
        }
        c[k] = if a[k][k] != 0.0 { acc / a[k][k] } else { 0.0 };
    }
    let rss: f64 = b[p..].iter().map(|x| x * x).sum();
    let coeffs = c.iter().zip(&scales).map(|(c, s)| c / s).collect();
    LinearFit {
        coeffs,
        rms_residual: (rss / n as f64).sqrt(),
    }
}

/// Slope of the ordinary least-squares line through `(x, y)`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let ones = vec![1.0; x.len()];
    least_squares(&[ones, x.to_vec()], y).coeffs[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_coefficients() {
        let x: Vec<f64> = (0..30).map(|i| 10.0 + i as f64 / 3.0).collect();
        let y: Vec<f64> = x.iter().map(|r| 1.5 - 2.0 * r - 0.5 * r.ln() + 0.3 / r).collect();
        let cols = vec![
            vec![1.0; x.len()],
            x.clone(),
            x.iter().map(|r| r.ln()).collect(),
            x.iter().map(|r| 1.0 / r).collect(),
        ];
        let fit = least_squares(&cols, &y);
        let want = [1.5, -2.0, -0.5, 0.3];
        for (c, w) in fit.coeffs.iter().zip(want) {
            assert!((c - w).abs() < 1e-7, "{c} vs {w}");
        }
        assert!(fit.rms_residual < 1e-10);
    }

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
