//! Dense complex operators for the desk-scale exact-diagonalization oracle.
//!
//! Thin wrapper around `faer` dense matrices: Hermitian eigensolves, products
//! and the exact evolution operator via eigendecomposition.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par, Side};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseOperator {
    mat: Mat<c64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        DenseOperator {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator {
            mat: Mat::from_fn(dim, dim, |i, j| {
                if i == j {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn from_diagonal(diag: &[c64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.mat[(i, i)] = v;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.mat[(i, i)] = c64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: c64) {
        self.mat[(i, j)] = v;
    }

    pub fn add_entry(&mut self, i: usize, j: usize, v: c64) {
        self.mat[(i, j)] += v;
    }

    pub fn add_real_diagonal(&mut self, diag: &[f64]) {
        debug_assert_eq!(diag.len(), self.dim());
        for (i, &v) in diag.iter().enumerate() {
            self.mat[(i, i)] += c64::new(v, 0.0);
        }
    }

    pub fn add_scaled(&mut self, other: &DenseOperator, factor: c64) {
        debug_assert_eq!(self.dim(), other.dim());
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                self.mat[(i, j)] += factor * other.mat[(i, j)];
            }
        }
    }

    pub fn scale(&mut self, factor: c64) {
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                self.mat[(i, j)] *= factor;
            }
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        debug_assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        DenseOperator {
            mat: Mat::from_fn(n, n, |i, j| self.mat[(i, j)] - other.mat[(i, j)]),
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        debug_assert_eq!(self.dim(), other.dim());
        let mut out = Mat::zeros(self.dim(), self.dim());
        matmul(
            out.as_mut(),
            Accum::Replace,
            self.mat.as_ref(),
            other.mat.as_ref(),
            c64::new(1.0, 0.0),
            Par::rayon(0),
        );
        DenseOperator { mat: out }
    }

    pub fn adjoint(&self) -> DenseOperator {
        let n = self.dim();
        DenseOperator {
            mat: Mat::from_fn(n, n, |i, j| self.mat[(j, i)].conj()),
        }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                worst = worst.max(self.mat[(i, j)].norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        worst
    }

    /// Max-norm of `H − H†`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..=j {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Max-norm of `U†U − I`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let target = if i == j {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                };
                worst = worst.max((gram.mat[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Largest singular value, via the Gram matrix spectrum.
    pub fn operator_norm(&self) -> Result<f64> {
        let gram = self.adjoint().matmul(self);
        let eigs = gram.hermitian_eigenvalues_unchecked()?;
        Ok(eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    /// Real eigenvalues of a Hermitian operator, ascending. The caller is
    /// responsible for Hermiticity; see [`crate::numerics::spectrum`] for the
    /// checked version.
    pub fn hermitian_eigenvalues_unchecked(&self) -> Result<Vec<f64>> {
        let mut eigs = self
            .mat
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(eigs)
    }

    /// Full Hermitian eigendecomposition `H = U diag(λ) U†`.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DenseOperator)> {
        let evd = self
            .mat
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let n = self.dim();
        let vals: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
        let vecs = DenseOperator {
            mat: evd.U().to_owned(),
        };
        Ok((vals, vecs))
    }

    /// The exact evolution operator `exp(−i·H·t)` of a Hermitian `H`.
    pub fn evolution(&self, t: f64) -> Result<DenseOperator> {
        let (vals, u) = self.hermitian_eigen()?;
        let phases: Vec<c64> = vals
            .iter()
            .map(|&l| c64::new(0.0, -l * t).exp())
            .collect();
        // U · diag(phases) · U†
        let mut scaled = u.clone();
        for (j, &ph) in phases.iter().enumerate() {
            for i in 0..self.dim() {
                scaled.mat[(i, j)] *= ph;
            }
        }
        Ok(scaled.matmul(&u.adjoint()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let d = DenseOperator::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let eigs = d.hermitian_eigenvalues_unchecked().unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 2.0).abs() < 1e-12);
        assert!((eigs[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_of_diagonal_is_phases() {
        let h = DenseOperator::from_real_diagonal(&[0.0, std::f64::consts::PI]);
        let u = h.evolution(1.0).unwrap();
        assert!((u.get(0, 0) - c64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((u.get(1, 1) - c64::new(-1.0, 0.0)).norm() < 1e-10);
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let mut m = DenseOperator::zeros(2);
        m.set(0, 1, c64::new(1.0, 0.0));
        assert!(m.hermitian_defect() > 0.9);
        m.set(1, 0, c64::new(1.0, 0.0));
        assert_eq!(m.hermitian_defect(), 0.0);
    }

    #[test]
    fn operator_norm_of_scaled_identity() {
        let mut id = DenseOperator::identity(4);
        id.scale(c64::new(-2.5, 0.0));
        assert!((id.operator_norm().unwrap() - 2.5).abs() < 1e-12);
    }
}
