//! Small dense weighted least squares, enough for 3–5 parameter fits.

use super::EstimationError;
use crate::scalar::Real;

pub(crate) struct LinearFit<T> {
    pub coef: Vec<T>,
    /// `(Xᵀ W X)⁻¹`
    pub inv_normal: Vec<Vec<T>>,
}

impl<T: Real> LinearFit<T> {
    pub fn predict(&self, row: &[T]) -> T {
        row.iter()
            .zip(&self.coef)
            .fold(T::zero(), |acc, (&x, &c)| acc + x * c)
    }

    /// Covariance of the coefficients when observation `k` has variance
    /// `var[k]` and was fitted with weight `w[k]`:
    /// `A⁻¹ (Σ w² var x xᵀ) A⁻¹`.
    pub fn sandwich(&self, design: &[Vec<T>], w: &[T], var: &[T]) -> Vec<Vec<T>> {
        let p = self.coef.len();
        let mut meat = vec![vec![T::zero(); p]; p];
        for ((row, &wk), &vk) in design.iter().zip(w).zip(var) {
            let s = wk * wk * vk;
            for i in 0..p {
                for j in 0..p {
                    meat[i][j] = meat[i][j] + s * row[i] * row[j];
                }
            }
        }
        let left = matmul(&self.inv_normal, &meat);
        matmul(&left, &self.inv_normal)
    }
}

fn matmul<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![T::zero(); m]; n];
    for i in 0..n {
        for j in 0..m {
            out[i][j] = (0..b.len()).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

/// Solves `min Σ w_k (y_k - x_k·β)²` through the normal equations.
pub(crate) fn weighted_least_squares<T: Real>(
    design: &[Vec<T>],
    y: &[T],
    w: &[T],
) -> Result<LinearFit<T>, EstimationError> {
    let p = design.first().map_or(0, Vec::len);
    if design.len() < p || p == 0 {
        return Err(EstimationError::RankDeficient);
    }
    let mut a = vec![vec![T::zero(); p]; p];
    let mut rhs = vec![T::zero(); p];
    for ((row, &yk), &wk) in design.iter().zip(y).zip(w) {
        for i in 0..p {
            rhs[i] = rhs[i] + wk * row[i] * yk;
            for j in 0..p {
                a[i][j] = a[i][j] + wk * row[i] * row[j];
            }
        }
    }
    let inv = invert(a)?;
    let coef = (0..p)
        .map(|i| (0..p).fold(T::zero(), |acc, j| acc + inv[i][j] * rhs[j]))
        .collect();
    Ok(LinearFit {
        coef,
        inv_normal: inv,
    })
}

/// Gauss–Jordan inversion of a symmetric positive semi-definite matrix with
/// partial pivoting. Pivots below `1e-10 · max diag` count as rank loss.
fn invert<T: Real>(mut a: Vec<Vec<T>>) -> Result<Vec<Vec<T>>, EstimationError> {
    let n = a.len();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[i][i].abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(EstimationError::RankDeficient);
    }
    let threshold = scale * T::lit(1e-10).max(T::epsilon() * T::lit(1e4));
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() < threshold {
            return Err(EstimationError::RankDeficient);
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] = a[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != T::zero() {
                    for j in 0..n {
                        a[r][j] = a[r][j] - f * a[col][j];
                        inv[r][j] = inv[r][j] - f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}
