//! Eigensolvers.
//!
//! * [`tridiag_eigen`]: implicit-shift QL on a symmetric tridiagonal (Jacobi)
//!   matrix. Only the first row of the accumulated rotations is tracked, which
//!   is all a Gauss rule needs, so the cost is O(k²) for a k×k matrix.
//! * [`dense_eigen`]: cyclic Jacobi rotations on a dense symmetric matrix. It is
//!   slow and used only as a desk-scale oracle, independent of the QL path.
//! * [`block_antidiag_eigen`]: spectrum of `[[γI, B], [Bᵀ, γI]]` from the
//!   singular values of `B` (one-sided Jacobi SVD).

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, SlqError};
use crate::operators::LinearOperator;

/// Largest dimension the dense oracles accept by default.
pub const DEFAULT_ORACLE_CAP: usize = 2000;

const QL_MAX_SWEEPS_PER_EIGENVALUE: usize = 60;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric tridiagonal matrix: `alphas` on the diagonal, `betas` beside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(SlqError::InvalidArgument(
                "tridiagonal matrix needs at least one diagonal entry".into(),
            ));
        }
        if betas.len() + 1 != alphas.len() {
            return Err(SlqError::InvalidArgument(format!(
                "expected {} off-diagonal entries, got {}",
                alphas.len() - 1,
                betas.len()
            )));
        }
        if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
            return Err(SlqError::InvalidArgument(format!(
                "off-diagonal entry {b} is negative"
            )));
        }
        if alphas.iter().chain(&betas).any(|v| !v.is_finite()) {
            return Err(SlqError::NumericalFailure(
                "non-finite entry in tridiagonal matrix".into(),
            ));
        }
        Ok(Self { alphas, betas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn size(&self) -> usize {
        self.alphas.len()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let k = self.size();
        let mut t = DenseMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.betas[i];
                t[(i + 1, i)] = self.betas[i];
            }
        }
        t
    }

    /// Infinity norm, used as the scale for residual tolerances.
    pub fn norm_inf(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let left = if i > 0 { self.betas[i - 1] } else { 0.0 };
                let right = if i < self.betas.len() {
                    self.betas[i]
                } else {
                    0.0
                };
                self.alphas[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues in ascending order with the first component of each unit eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub first_components: Vec<f64>,
}

pub fn tridiag_eigen(t: &TridiagonalMatrix) -> Result<EigenDecomposition> {
    let (values, rows) = implicit_ql(t, 1)?;
    Ok(EigenDecomposition {
        values,
        first_components: rows.into_iter().next().expect("one tracked row"),
    })
}

/// Like [`tridiag_eigen`] but returns all eigenvectors as columns of a dense matrix.
pub fn tridiag_eigen_full(t: &TridiagonalMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let k = t.size();
    let (values, rows) = implicit_ql(t, k)?;
    let vectors = DenseMatrix::from_fn(k, k, |i, j| rows[i][j]);
    Ok((values, vectors))
}

/// QL with Wilkinson-type shifts. `tracked` rows of the eigenvector matrix are
/// accumulated; results come back sorted ascending (stable among ties).
fn implicit_ql(t: &TridiagonalMatrix, tracked: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.size();
    let mut d = t.alphas.clone();
    let mut e = t.betas.clone();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = (0..tracked)
        .map(|r| {
            let mut row = vec![0.0; n];
            row[r] = 1.0;
            row
        })
        .collect();

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= f64::EPSILON * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > QL_MAX_SWEEPS_PER_EIGENVALUE {
                return Err(SlqError::NumericalFailure(format!(
                    "tridiagonal QL did not converge for eigenvalue index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let rows = z
        .into_iter()
        .map(|row| order.iter().map(|&i| row[i]).collect())
        .collect();
    Ok((values, rows))
}

/// Full spectral decomposition `A = Q diag(values) Qᵀ` of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DenseMatrix,
}

pub fn dense_eigen(a: &DenseMatrix) -> Result<DenseEigen> {
    dense_eigen_capped(a, DEFAULT_ORACLE_CAP)
}

pub fn dense_eigen_capped(a: &DenseMatrix, cap: usize) -> Result<DenseEigen> {
    if !a.is_square() {
        return Err(SlqError::InvalidArgument(
            "dense_eigen needs a square matrix".into(),
        ));
    }
    let n = a.rows();
    if n > cap {
        return Err(SlqError::OracleTooLarge { n, cap });
    }
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.norm_frobenius();
    let mut converged = n <= 1 || scale == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    1.0f64.copysign(theta) / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(SlqError::NumericalFailure(
            "Jacobi eigensolver exceeded its sweep limit".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(DenseEigen { values, vectors })
}

/// `log det A`. Uses the stored spectrum when the operator has one and a dense
/// Cholesky factorization otherwise (subject to the oracle cap).
pub fn exact_logdet(a: &LinearOperator) -> Result<f64> {
    exact_logdet_capped(a, DEFAULT_ORACLE_CAP)
}

pub fn exact_logdet_capped(a: &LinearOperator, cap: usize) -> Result<f64> {
    if let Some(spectrum) = a.known_spectrum() {
        return spectrum
            .iter()
            .map(|&l| {
                if l > 0.0 {
                    Ok(l.ln())
                } else {
                    Err(SlqError::NotSpd(format!("eigenvalue {l} is not positive")))
                }
            })
            .sum();
    }
    let n = a.dim();
    if n > cap {
        return Err(SlqError::OracleTooLarge { n, cap });
    }
    cholesky_logdet(&a.to_dense())
}

/// `2 Σ log L_ii` from an in-place Cholesky factorization.
pub fn cholesky_logdet(a: &DenseMatrix) -> Result<f64> {
    let n = a.rows();
    let mut l = a.clone();
    let mut logdet = 0.0;
    for j in 0..n {
        let mut diag = l[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(SlqError::NotSpd(format!("Cholesky pivot {j} is {diag}")));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        logdet += 2.0 * ljj.ln();
        for i in (j + 1)..n {
            let mut v = l[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(logdet)
}

/// Singular values of `b`, descending, via one-sided Jacobi rotations.
pub fn singular_values(b: &DenseMatrix) -> Vec<f64> {
    // orthogonalize the columns of whichever orientation has fewer of them
    let work = if b.rows() >= b.cols() {
        b.clone()
    } else {
        b.transpose()
    };
    let k = work.cols();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| work.column(j)).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha: f64 = cols[i].iter().map(|x| x * x).sum();
                let beta: f64 = cols[j].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = 1.0f64.copysign(zeta) / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yj) = (*x, *y);
                    *x = c * xi - s * yj;
                    *y = s * xi + c * yj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma
}

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Eigenvalues (ascending) of `C = [[γ I_m, B], [Bᵀ, γ I_n]]`: `γ ± σ_i` for the
/// `r` numerically nonzero singular values and `γ` repeated `m + n - 2r` times.
pub fn block_antidiag_eigen(b: &DenseMatrix, gamma: f64) -> Vec<f64> {
    let sigma = singular_values(b);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma
        .iter()
        .take_while(|&&s| s > RANK_TOLERANCE * smax && s > 0.0)
        .count();
    let total = b.rows() + b.cols();
    let mut values = Vec::with_capacity(total);
    for &s in &sigma[..rank] {
        values.push(gamma - s);
        values.push(gamma + s);
    }
    values.extend(std::iter::repeat_n(gamma, total - 2 * rank));
    values.sort_by(f64::total_cmp);
    values
}

/// Materializes `[[γ I, B], [Bᵀ, γ I]]`.
pub fn block_antidiag_matrix(b: &DenseMatrix, gamma: f64) -> DenseMatrix {
    let (m, n) = (b.rows(), b.cols());
    DenseMatrix::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
        (true, true) | (false, false) => {
            if i == j {
                gamma
            } else {
                0.0
            }
        }
        (true, false) => b[(i, j - m)],
        (false, true) => b[(j, i - m)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_tridiagonal_sorts_and_indicates_position() {
        let t = TridiagonalMatrix::new(vec![3.0, 1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let e = tridiag_eigen(&t).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        // e₁ is the eigenvector of α₁ = 3, the largest
        assert_eq!(
            e.first_components.iter().map(|c| c * c).collect::<Vec<_>>(),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn two_by_two_by_hand() {
        let t = TridiagonalMatrix::new(vec![1.5, 1.5], vec![0.5]).unwrap();
        let e = tridiag_eigen(&t).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e.values[1], 2.0, epsilon = 1e-15);
        for c in &e.first_components {
            assert_relative_eq!(c * c, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn split_blocks_give_union_of_spectra() {
        let t = TridiagonalMatrix::new(vec![1.5, 1.5, 4.0, 4.0], vec![0.5, 0.0, 1.0]).unwrap();
        let e = tridiag_eigen(&t).unwrap();
        let want = [1.0, 2.0, 3.0, 5.0];
        for (g, w) in e.values.iter().zip(want) {
            assert_relative_eq!(*g, w, epsilon = 1e-14);
        }
        // e₁ lives in the first block, so the second block carries no weight
        assert!(e.first_components[2].abs() < 1e-15 && e.first_components[3].abs() < 1e-15);
    }

    #[test]
    fn full_eigenvectors_have_small_residual() {
        let t = TridiagonalMatrix::new(vec![2.0, -1.0, 0.5, 3.0, 1.0], vec![1.0, 0.3, 2.0, 0.7])
            .unwrap();
        let (vals, vecs) = tridiag_eigen_full(&t).unwrap();
        let dense = t.to_dense();
        for (k, &theta) in vals.iter().enumerate() {
            let y = vecs.column(k);
            let ty = dense.matvec(&y);
            let res: f64 = ty
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - theta * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-12 * t.norm_inf(), "residual {res}");
        }
        let first = tridiag_eigen(&t).unwrap().first_components;
        for k in 0..vals.len() {
            assert_relative_eq!(first[k].abs(), vecs[(0, k)].abs(), epsilon = 1e-14);
        }
    }

    #[test]
    fn malformed_tridiagonal_rejected() {
        assert!(TridiagonalMatrix::new(vec![], vec![]).is_err());
        assert!(TridiagonalMatrix::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(TridiagonalMatrix::new(vec![1.0, 2.0], vec![-0.1]).is_err());
    }

    #[test]
    fn dense_eigen_examples() {
        let e = dense_eigen(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0; 3]);

        let e = dense_eigen(&DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);

        let LinearOperator::Dense(h) =
            crate::operators::generate_householder_matrix(&[1.0, 2.0]).unwrap()
        else {
            panic!()
        };
        let e = dense_eigen(&h).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn dense_eigen_respects_cap() {
        let a = DenseMatrix::identity(5);
        assert!(matches!(
            dense_eigen_capped(&a, 4),
            Err(SlqError::OracleTooLarge { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn logdet_examples() {
        let id = LinearOperator::Dense(DenseMatrix::identity(4));
        assert_eq!(exact_logdet(&id).unwrap(), 0.0);

        let d = crate::operators::generate_decay_spectrum(4, 1.0, 0.99).unwrap();
        assert_relative_eq!(
            exact_logdet(&d).unwrap(),
            (0.99f64.powi(4) / 24.0).ln(),
            max_relative = 1e-14
        );

        let indefinite = LinearOperator::Dense(DenseMatrix::from_diagonal(&[1.0, -2.0]));
        assert!(matches!(
            exact_logdet(&indefinite),
            Err(SlqError::NotSpd(_))
        ));
    }

    #[test]
    fn block_antidiag_examples() {
        let one = DenseMatrix::from_rows(&[vec![1.0]]);
        assert_eq!(block_antidiag_eigen(&one, 0.0), vec![-1.0, 1.0]);

        let b = DenseMatrix::from_diagonal(&[2.0, 3.0]);
        let got = block_antidiag_eigen(&b, 5.0);
        for (g, w) in got.iter().zip([2.0, 3.0, 7.0, 8.0]) {
            assert_relative_eq!(*g, w, epsilon = 1e-14);
        }

        let zero = DenseMatrix::zeros(2, 3);
        assert_eq!(block_antidiag_eigen(&zero, 1.0), vec![1.0; 5]);
    }

    #[test]
    fn singular_values_of_wide_and_tall_agree() {
        let b = DenseMatrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]]);
        let s = singular_values(&b);
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s[0], 4.0, epsilon = 1e-15);
        assert_relative_eq!(s[1], 3.0, epsilon = 1e-15);
        assert_eq!(singular_values(&b.transpose()), s);
    }
}
