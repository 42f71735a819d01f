//! Dense complex matrices at desk scale, with the few decompositions the
//! toolkit needs. Hermitian eigenvalues go through the real embedding
//! `[[X, -Y], [Y, X]]` of `X + iY`, whose symmetric spectrum repeats each
//! eigenvalue twice.

use crate::C64;
use nalgebra::DMatrix;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for i in 0..rows {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn hermitian_transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Multiplies row `i` by `weights[i]`.
    pub fn scale_rows(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.rows);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] *= weights[i];
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `A^H (w .* v)`: adjoint application against row weights.
    pub fn apply_adjoint_weighted(&self, weights: &[f64], v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].conj() * (weights[i] * v[i])).sum())
            .collect()
    }

    /// Gram matrix `A^H diag(w) A` (Hermitian positive semidefinite).
    pub fn weighted_gram(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.rows);
        let mut g = Self::zeros(self.cols, self.cols);
        for a in 0..self.cols {
            for b in a..self.cols {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..self.rows {
                    acc += self[(i, a)].conj() * self[(i, b)] * weights[i];
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        g
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut embed = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = self[(i, j)];
                embed[(i, j)] = v.re;
                embed[(i + n, j + n)] = v.re;
                embed[(i + n, j)] = v.im;
                embed[(i, j + n)] = -v.im;
            }
        }
        let mut eig: Vec<f64> = embed.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Every eigenvalue of the complex matrix shows up exactly twice.
        eig.into_iter().step_by(2).collect()
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = if self.rows >= self.cols {
            self.weighted_gram(&vec![1.0; self.rows])
        } else {
            self.hermitian_transpose().weighted_gram(&vec![1.0; self.cols])
        };
        let mut sv: Vec<f64> =
            gram.hermitian_eigenvalues().into_iter().map(|l| l.max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    /// Spectral norm.
    pub fn operator_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Max deviation from Hermitian symmetry.
    pub fn hermitian_residual(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut r = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermitian_eigenvalues_of_known_matrix() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(2.0, 0.0);
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, -1.0);
        m[(1, 1)] = C64::new(2.0, 0.0);
        let eig = m.hermitian_eigenvalues();
        assert_relative_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let mut m = CMat::zeros(3, 2);
        m[(0, 0)] = C64::new(0.0, 3.0);
        m[(1, 1)] = C64::new(-2.0, 0.0);
        let sv = m.singular_values();
        assert_relative_eq!(sv[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(sv[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_spectra_keep_multiplicity() {
        let mut m = CMat::identity(4).scale(C64::new(5.0, 0.0));
        m[(3, 3)] = C64::new(7.0, 0.0);
        let eig = m.hermitian_eigenvalues();
        assert_eq!(eig.len(), 4);
        assert_relative_eq!(eig[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(eig[2], 5.0, epsilon = 1e-12);
        assert_relative_eq!(eig[3], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_application_matches_gram() {
        let mut a = CMat::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                a[(i, j)] = C64::new(i as f64 + 0.5, j as f64 - 1.0);
            }
        }
        let w = vec![0.5, 1.5, 2.0];
        let f = vec![C64::new(1.0, -1.0), C64::new(0.3, 0.2)];
        let af = a.apply(&f);
        let back = a.apply_adjoint_weighted(&w, &af);
        let gram = a.weighted_gram(&w).apply(&f);
        for (x, y) in back.iter().zip(&gram) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
