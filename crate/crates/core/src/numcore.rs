//! Small dense linear algebra, finite differences and log-log regression.
//!
//! Everything here works on matrices of dimension at most eight, so the
//! symmetric eigensolver is a plain cyclic Jacobi sweep.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigendecomposition `S = Q diag(λ) Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, ordered like `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SymEig {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        &self.eigenvectors * lambda * self.eigenvectors.transpose()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Result of a least-squares line through `(ln ε, ln metric)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn asymmetry(s: &DMatrix<f64>) -> f64 {
    (s - s.transpose()).norm()
}

/// Cyclic Jacobi eigendecomposition. The input must be square; only its
/// symmetric part is used.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymEig> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut a = (s + s.transpose()) * 0.5;
    let mut q = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - sn * akr;
                    a[(k, r)] = sn * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - sn * ark;
                    a[(r, k)] = sn * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - sn * qkr;
                    q[(k, r)] = sn * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |row, col| q[(row, order[col])]);
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Symmetric positive-definite square root.
pub fn spd_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s.nrows() != s.ncols() {
        return Err(Error::InvalidArgument("spd_sqrt needs a square matrix".into()));
    }
    if asymmetry(s) > 1e-12 * s.norm() {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (|S - S^T| = {:e})",
            asymmetry(s)
        )));
    }
    let eig = sym_eig(s)?;
    if eig.min_eigenvalue() <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.min_eigenvalue(),
        });
    }
    let root = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.sqrt()));
    let p = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

/// Central-difference step `ε_mach^(1/3) · max(1, ‖x‖∞)`.
pub fn default_step(x: &[f64]) -> f64 {
    let norm_inf = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    f64::EPSILON.cbrt() * norm_inf.max(1.0)
}

/// `J[i][j] = (f_i(x + h e_j) - f_i(x - h e_j)) / 2h`.
pub fn central_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let n = x.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let plus = eval_finite(&f, &probe)?;
        probe[j] = x[j] - h;
        let minus = eval_finite(&f, &probe)?;
        probe[j] = x[j];
        if plus.len() != minus.len() {
            return Err(Error::InvalidArgument("map changed output dimension".into()));
        }
        columns.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect());
    }
    let m = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |i, j| columns[j][i]))
}

fn eval_finite<F>(f: &F, point: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let value = f(point)?;
    if value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            point: point.to_vec(),
        });
    }
    Ok(value)
}

/// Least-squares slope of `ln metric` against `ln ε`.
pub fn loglog_fit(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    if let Some(&(e, m)) = pairs.iter().find(|(e, m)| !(*e > 0.0 && *m > 0.0) || !e.is_finite() || !m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "log-log fit needs positive finite values, got ({e}, {m})"
        )));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, m)| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("all ε values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        exponent: slope,
        intercept,
        r_squared,
    })
}

/// Solve `A x = b` by LU; `None` when `A` is numerically singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}
