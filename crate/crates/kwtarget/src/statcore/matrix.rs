//! Dense linear algebra on the small covariance matrices used by the
//! estimation models: Cholesky factorization, triangular solves, and
//! conditional (partitioned) multivariate-normal parameters.

use serde::{Deserialize, Serialize};

use super::StatError;

/// Relative tolerance for the symmetry check on SPD construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// Row-major square matrix of order `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mat_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = Matrix::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..self.n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Averages the matrix with its transpose to cancel floating-point drift.
    pub fn symmetrized(&self) -> Matrix {
        let mut s = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Solves `L x = b` for lower-triangular `L`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self[(i, j)] * x[j];
            }
            x[i] = s / self[(i, i)];
        }
        x
    }

    /// Solves `Lᵀ x = b` for lower-triangular `L`.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self[(j, i)] * x[j];
            }
            x[i] = s / self[(i, i)];
        }
        x
    }

    /// Inverts a lower-triangular matrix by forward substitution per column.
    pub fn invert_lower(&self) -> Matrix {
        let n = self.n;
        let mut inv = Matrix::zeros(n);
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let x = self.solve_lower(&e);
            for row in 0..n {
                inv[(row, col)] = x[row];
            }
        }
        inv
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Cholesky factorization `m = L Lᵀ` with `L` lower triangular.
///
/// Fails with [`StatError::NotPositiveDefinite`] when a pivot is not
/// strictly positive, which signals an invalid covariance matrix.
pub fn cholesky(m: &Matrix) -> Result<Matrix, StatError> {
    let n = m.order();
    let mut l = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(StatError::NotPositiveDefinite);
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Symmetric positive-definite matrix, validated on construction.
///
/// Construction symmetrizes the input (after checking the asymmetry is
/// within `1e-12` relative) and verifies positive definiteness through a
/// successful Cholesky factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdMatrix {
    m: Matrix,
}

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self, StatError> {
        let scale = m.max_abs().max(1.0);
        for i in 0..m.order() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(StatError::NotSymmetric);
                }
            }
        }
        let sym = m.symmetrized();
        cholesky(&sym)?;
        Ok(SpdMatrix { m: sym })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, StatError> {
        SpdMatrix::new(Matrix::from_rows(rows))
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix { m: Matrix::identity(n) }
    }

    /// Diagonal SPD matrix; all entries must be strictly positive.
    pub fn from_diag(values: &[f64]) -> Result<Self, StatError> {
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(StatError::NotPositiveDefinite);
        }
        Ok(SpdMatrix { m: Matrix::diag(values) })
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Lower-triangular Cholesky factor. Cannot fail: positive definiteness
    /// was proven at construction.
    pub fn cholesky_factor(&self) -> Matrix {
        cholesky(&self.m).expect("validated SPD matrix")
    }

    /// Inverse computed through the Cholesky factor, re-symmetrized.
    pub fn inverse(&self) -> SpdMatrix {
        let l = self.cholesky_factor();
        let linv = l.invert_lower();
        let inv = linv.transpose().mat_mul(&linv).symmetrized();
        SpdMatrix { m: inv }
    }

    /// Scales every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> SpdMatrix {
        assert!(c > 0.0, "scale factor must be positive");
        let mut m = self.m.clone();
        for i in 0..m.order() {
            for j in 0..m.order() {
                m[(i, j)] *= c;
            }
        }
        SpdMatrix { m }
    }
}

/// Multivariate normal parameters (mean vector and SPD covariance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvnParams {
    pub mean: Vec<f64>,
    pub cov: SpdMatrix,
}

impl MvnParams {
    pub fn new(mean: Vec<f64>, cov: SpdMatrix) -> Result<Self, StatError> {
        if mean.len() != cov.order() {
            return Err(StatError::DimensionMismatch {
                expected: cov.order(),
                actual: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(StatError::NonFinite);
        }
        Ok(MvnParams { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Conditional distribution of the unobserved block of a multivariate
/// normal given observed coordinates.
///
/// With index set `a` observed at `observed_vals` and complement `b`, the
/// result is the normal with mean
/// `θ_b + Σ_ba Σ_aa⁻¹ (x_a − θ_a)` and covariance
/// `Σ_bb − Σ_ba Σ_aa⁻¹ Σ_ab`, both taken from the partitioned-matrix
/// identities. The returned parameters are over the complement `b`, in
/// ascending index order.
pub fn conditional_mvn(
    p: &MvnParams,
    observed_idx: &[usize],
    observed_vals: &[f64],
) -> Result<MvnParams, StatError> {
    let n = p.dim();
    if observed_idx.is_empty()
        || observed_idx.len() != observed_vals.len()
        || observed_idx.iter().any(|&i| i >= n)
        || observed_idx.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(StatError::InvalidIndexSet);
    }
    let b_idx: Vec<usize> = (0..n).filter(|i| !observed_idx.contains(i)).collect();
    if b_idx.is_empty() {
        return Err(StatError::EmptyComplement);
    }

    let cov = p.cov.matrix();
    let na = observed_idx.len();
    let nb = b_idx.len();

    let mut sigma_aa = Matrix::zeros(na);
    for (r, &i) in observed_idx.iter().enumerate() {
        for (c, &j) in observed_idx.iter().enumerate() {
            sigma_aa[(r, c)] = cov[(i, j)];
        }
    }
    // Σ_ba stored as nb rows of length na.
    let sigma_ba: Vec<Vec<f64>> = b_idx
        .iter()
        .map(|&i| observed_idx.iter().map(|&j| cov[(i, j)]).collect())
        .collect();

    let l_aa = cholesky(&sigma_aa)?;
    let solve_aa = |rhs: &[f64]| -> Vec<f64> {
        let y = l_aa.solve_lower(rhs);
        l_aa.solve_lower_transpose(&y)
    };

    let resid: Vec<f64> = observed_idx
        .iter()
        .zip(observed_vals)
        .map(|(&i, &x)| x - p.mean[i])
        .collect();
    let w = solve_aa(&resid);

    let mean_b: Vec<f64> = b_idx
        .iter()
        .enumerate()
        .map(|(r, &i)| p.mean[i] + dot(&sigma_ba[r], &w))
        .collect();

    // Σ_bb − Σ_ba Σ_aa⁻¹ Σ_ab, column by column of Σ_ab.
    let mut cov_b = Matrix::zeros(nb);
    for (c, &j) in b_idx.iter().enumerate() {
        let col_ab: Vec<f64> = observed_idx.iter().map(|&i| cov[(i, j)]).collect();
        let u = solve_aa(&col_ab);
        for (r, &i) in b_idx.iter().enumerate() {
            cov_b[(r, c)] = cov[(i, j)] - dot(&sigma_ba[r], &u);
        }
    }

    MvnParams::new(mean_b, SpdMatrix::new(cov_b.symmetrized())?)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..a.order() {
            for j in 0..a.order() {
                d = d.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        d
    }

    #[test]
    fn cholesky_identity_is_identity() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(max_diff(&l, &Matrix::identity(3)), 0.0);
    }

    #[test]
    fn cholesky_hand_example() {
        let m = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = cholesky(&m).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((l[(0, 1)]).abs() < 1e-12);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((l[(1, 1)] - 2.0_f64.sqrt()).abs() < 1e-12);
        let recon = l.mat_mul(&l.transpose());
        assert!(max_diff(&recon, &m) <= 1e-10 * m.max_abs());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(cholesky(&m), Err(StatError::NotPositiveDefinite)));
    }

    #[test]
    fn spd_rejects_asymmetric() {
        let m = Matrix::from_rows(&[&[1.0, 0.5], &[0.2, 1.0]]);
        assert!(matches!(SpdMatrix::new(m), Err(StatError::NotSymmetric)));
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let s = SpdMatrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]])
            .unwrap();
        let prod = s.matrix().mat_mul(s.inverse().matrix());
        assert!(max_diff(&prod, &Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn conditional_mvn_schur_hand_case() {
        let p = MvnParams::new(
            vec![0.0, 0.0],
            SpdMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let cond = conditional_mvn(&p, &[0], &[1.0]).unwrap();
        assert!((cond.mean[0] - 0.5).abs() < 1e-12);
        assert!((cond.cov.matrix()[(0, 0)] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn conditional_mvn_block_diagonal_returns_marginal() {
        let p = MvnParams::new(
            vec![1.0, 2.0, 3.0],
            SpdMatrix::from_rows(&[&[2.0, 0.7, 0.0], &[0.7, 1.5, 0.0], &[0.0, 0.0, 4.0]])
                .unwrap(),
        )
        .unwrap();
        let cond = conditional_mvn(&p, &[2], &[9.0]).unwrap();
        assert!((cond.mean[0] - 1.0).abs() < 1e-12);
        assert!((cond.mean[1] - 2.0).abs() < 1e-12);
        assert!((cond.cov.matrix()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((cond.cov.matrix()[(0, 1)] - 0.7).abs() < 1e-12);
        assert!((cond.cov.matrix()[(1, 1)] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_mvn_all_observed_is_error() {
        let p = MvnParams::new(vec![0.0, 0.0, 0.0], SpdMatrix::identity(3)).unwrap();
        let r = conditional_mvn(&p, &[0, 1, 2], &[1.0, 1.0, 1.0]);
        assert!(matches!(r, Err(StatError::EmptyComplement)));
    }

    #[test]
    fn conditional_cov_ignores_observed_values() {
        let p = MvnParams::new(
            vec![0.0, 0.0, 0.0],
            SpdMatrix::from_rows(&[&[1.0, 0.4, 0.2], &[0.4, 1.0, 0.3], &[0.2, 0.3, 1.0]])
                .unwrap(),
        )
        .unwrap();
        let c1 = conditional_mvn(&p, &[1], &[5.0]).unwrap();
        let c2 = conditional_mvn(&p, &[1], &[-3.0]).unwrap();
        assert_eq!(c1.cov, c2.cov);
    }
}
