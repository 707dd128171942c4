use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DIAGONAL_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-8;

/// Symmetric, unit-diagonal, positive semidefinite matrix.
///
/// Slightly indefinite input (smallest eigenvalue down to `-1e-8`) is
/// repaired by clipping eigenvalues at zero and rescaling to unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Row-major `dim * dim` entries.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Argument(format!(
                "correlation matrix needs {} entries for dimension {dim}",
                dim * dim
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("correlation matrix has non-finite entries".into()));
        }
        for i in 0..dim {
            if (entries[i * dim + i] - 1.0).abs() > DIAGONAL_TOL {
                return Err(Error::Numeric(format!(
                    "diagonal entry {i} is {}, not 1",
                    entries[i * dim + i]
                )));
            }
            for j in 0..i {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::Numeric(format!("entries ({i},{j}) are not symmetric")));
                }
            }
        }
        let mut m = Self { dim, entries };
        m.symmetrize();
        if dim > 1 {
            let eig = SymmetricEigen::new(m.to_dmatrix());
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < PSD_TOL {
                return Err(Error::Numeric(format!(
                    "correlation matrix is not positive semidefinite (eigenvalue {min:e})"
                )));
            }
            if min < 0.0 {
                m = Self::repaired(eig);
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Argument("correlation rows must be square".into()));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let mut entries = vec![rho; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::new(dim, entries)
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (self.entries[i * d + j] + self.entries[j * d + i]);
                self.entries[i * d + j] = avg;
                self.entries[j * d + i] = avg;
            }
        }
    }

    fn repaired(eig: SymmetricEigen<f64, nalgebra::Dyn>) -> Self {
        let dim = eig.eigenvalues.len();
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let scale: Vec<f64> = (0..dim).map(|i| m[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = if i == j {
                    1.0
                } else {
                    (m[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
                };
            }
        }
        let mut out = Self { dim, entries };
        out.symmetrize();
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Principal submatrix on the given coordinates.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let d = keep.len();
        let mut entries = Vec::with_capacity(d * d);
        for &i in keep {
            for &j in keep {
                entries.push(self.get(i, j));
            }
        }
        Self { dim: d, entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CorrelationMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.1, 0.5, 0.5, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, 1.5, 1.5, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, 1.0, 1.0, 1.0]).is_ok());
        assert!(CorrelationMatrix::equicorrelated(3, -0.6).is_err());
        assert!(CorrelationMatrix::equicorrelated(3, -0.5).is_ok());
    }

    #[test]
    fn slightly_indefinite_input_is_repaired() {
        let eps = 1e-9;
        let rho = 1.0 + eps / 2.0;
        // eigenvalues 1 - rho < 0 at the 1e-10 scale
        let m = CorrelationMatrix::new(2, vec![1.0, rho, rho, 1.0]);
        // off-diagonal > 1 by 5e-10 exceeds nothing but the PSD check
        let m = m.unwrap();
        assert!(m.min_eigenvalue() >= -1e-12);
        assert_eq!(m.get(0, 0), 1.0);
        assert!(m.get(0, 1) <= 1.0);
    }
}
