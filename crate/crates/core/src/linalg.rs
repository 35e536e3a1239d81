//! Small dense linear-algebra kernels shared by the graph, dynamics and rate modules.
//!
//! Matrices here are desk scale (a few hundred rows at most), so everything is
//! dense and allocation-light rather than clever.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZgsError};

/// Off-diagonal Frobenius norm tolerance, relative to the input's Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
///
/// `values` are sorted ascending; column `k` of `vectors` is the unit
/// eigenvector belonging to `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Only the symmetric part `(A + Aᵀ)/2` is used.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    assert!(matrix.is_square(), "symmetric_eigen needs a square matrix");
    let n = matrix.nrows();
    let mut a = (matrix + matrix.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);

    let scale = a.norm();
    let threshold = JACOBI_TOL * scale;
    let mut converged = scale == 0.0 || off_diagonal_norm(&a) <= threshold;
    let mut sweeps = 0;

    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }

    if !converged {
        return Err(ZgsError::EigenNoConvergence {
            sweeps,
            off_norm: off_diagonal_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(matrix: &DMatrix<f64>) -> Result<(f64, f64)> {
    let eig = symmetric_eigen(matrix)?;
    Ok((eig.min(), eig.max()))
}

/// Solves `A x = rhs` for symmetric positive definite `A` by Cholesky.
/// Returns `None` if `A` is not numerically positive definite.
pub fn spd_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.clone().cholesky()?;
    Some(chol.solve(rhs))
}

/// Orthonormal basis of the complement of `(1,…,1)/√N`, as the last `N-1`
/// columns of the Householder reflector that maps `e₁` to `(1,…,1)/√N`.
pub fn consensus_complement_basis(n: usize) -> DMatrix<f64> {
    assert!(n >= 2, "complement basis needs N >= 2");
    let u = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, -u);
    v[0] += 1.0;
    let vv = v.dot(&v);
    let h = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, n - 1).into_owned()
}

/// `A^{-1/2}` of a symmetric positive definite matrix via its spectral
/// decomposition. Eigenvalues at or below `floor` are rejected.
pub fn spd_inverse_sqrt(a: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(a)?;
    if eig.min() <= floor {
        return Err(ZgsError::DegeneratePencil(format!(
            "reduced matrix has eigenvalue {:e} <= {:e}",
            eig.min(),
            floor
        )));
    }
    let d = DMatrix::from_diagonal(&eig.values.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.vectors * d * eig.vectors.transpose())
}

/// Largest absolute entry of `A - Aᵀ`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}
