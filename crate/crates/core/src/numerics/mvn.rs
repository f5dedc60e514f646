use rand::Rng;
use rand_distr::StandardNormal;

use super::NumericsError;

/// Banded covariance `σ_ij = 1 - |i - j| * 0.25` used by the Gaussian designs.
pub fn study_covariance(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..k).map(|j| 1.0 - (i as f64 - j as f64).abs() * 0.25).collect())
        .collect()
}

/// Lower-triangular factor `L` with `L Lᵀ = cov`, tolerating zero pivots
/// (semi-definite input). Errors on asymmetric or indefinite matrices.
pub fn cholesky_psd(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NumericsError> {
    let k = cov.len();
    if cov.iter().any(|row| row.len() != k) {
        return Err(NumericsError::NotPsd);
    }
    let scale = cov.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..k {
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > tol || !cov[i][j].is_finite() {
                return Err(NumericsError::NotPsd);
            }
        }
    }
    let mut l = vec![vec![0.0; k]; k];
    for j in 0..k {
        let d = cov[j][j] - (0..j).map(|m| l[j][m] * l[j][m]).sum::<f64>();
        if d < -tol {
            return Err(NumericsError::NotPsd);
        }
        if d <= tol {
            // zero pivot: the rest of this column must vanish too
            for i in j + 1..k {
                let off = cov[i][j] - (0..j).map(|m| l[i][m] * l[j][m]).sum::<f64>();
                if off.abs() > 1e-9 * scale {
                    return Err(NumericsError::NotPsd);
                }
            }
            continue;
        }
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in j + 1..k {
            let off = cov[i][j] - (0..j).map(|m| l[i][m] * l[j][m]).sum::<f64>();
            l[i][j] = off / ljj;
        }
    }
    Ok(l)
}

/// `n` i.i.d. draws from `N(mean, cov)`, one row per draw.
pub fn sample_mvn<R: Rng + ?Sized>(
    n: usize,
    mean: &[f64],
    cov: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, NumericsError> {
    if cov.len() != mean.len() {
        return Err(NumericsError::DimensionMismatch {
            mean: mean.len(),
            cov: cov.len(),
        });
    }
    let l = cholesky_psd(cov)?;
    let k = mean.len();
    let mut z = vec![0.0; k];
    Ok((0..n)
        .map(|_| {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            (0..k)
                .map(|i| mean[i] + (0..=i).map(|m| l[i][m] * z[m]).sum::<f64>())
                .collect()
        })
        .collect())
}
