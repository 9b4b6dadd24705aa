//! m-step Lanczos iteration and the (m+1)-point Gauss rule it induces.
//!
//! Each step performs exactly one product `A v_k`, reused for `α_k` and the
//! three-term recurrence, so a run without breakdown costs `m + 1` matvecs.

use serde::{Deserialize, Serialize};

use crate::dense::{axpy, dot, norm2};
use crate::error::{Result, SlqError};
use crate::operators::LinearOperator;
use crate::tridiag_eig::{tridiag_eigen, TridiagonalMatrix};

/// `β ≤ BREAKDOWN_TOL · ‖A‖` ends the iteration early.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Nodes `θ_k` (ascending) and weights `τ_k` of a Gauss rule for a spectral measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Re-orthogonalize each new basis vector against all stored ones (twice).
    pub reorthogonalize: bool,
    /// Keep the Krylov basis and final residual vector in the result.
    pub keep_basis: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            reorthogonalize: true,
            keep_basis: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosResult {
    pub tridiagonal: TridiagonalMatrix,
    pub rule: QuadratureRule,
    /// Steps taken; the tridiagonal matrix is `(steps_completed + 1)` square.
    pub steps_completed: usize,
    pub breakdown: bool,
    pub mvm_count: usize,
    /// Orthonormal basis `v_1..v_{k}` when requested.
    pub basis: Option<Vec<Vec<f64>>>,
    /// Unnormalized `ṽ_{k+1} = A v_k − α_k v_k − β_{k−1} v_{k−1}` after the last step, when requested.
    pub residual: Option<Vec<f64>>,
}

/// Runs `m` Lanczos steps from the unit vector `v`, with full reorthogonalization.
pub fn lanczos(
    a: &LinearOperator,
    v: &[f64],
    m: usize,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let n = a.dim();
    if v.len() != n {
        return Err(SlqError::InvalidArgument(format!(
            "start vector has length {}, operator dimension is {n}",
            v.len()
        )));
    }
    if m >= n {
        return Err(SlqError::InvalidArgument(format!(
            "Lanczos steps m = {m} must be smaller than the dimension {n}"
        )));
    }
    let vnorm = norm2(v);
    if (vnorm - 1.0).abs() > 1e-12 {
        return Err(SlqError::InvalidArgument(format!(
            "start vector norm is {vnorm}, expected 1"
        )));
    }

    let tol = BREAKDOWN_TOL * a.norm_estimate().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(v.to_vec());
    let mut alphas = Vec::with_capacity(m + 1);
    let mut betas: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![0.0; n];
    let mut breakdown = false;
    let mut residual = Vec::new();

    for k in 0..=m {
        let vk = &basis[k];
        a.matvec_into(vk, &mut w);
        let alpha = dot(vk, &w);
        if !alpha.is_finite() {
            return Err(SlqError::NumericalFailure(format!(
                "non-finite α at step {}",
                k + 1
            )));
        }
        alphas.push(alpha);
        axpy(-alpha, vk, &mut w);
        if k > 0 {
            axpy(-betas[k - 1], &basis[k - 1], &mut w);
        }
        if opts.reorthogonalize {
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
        }
        if k == m {
            if opts.keep_basis {
                residual = w.clone();
            }
            break;
        }
        let beta = norm2(&w);
        if !beta.is_finite() {
            return Err(SlqError::NumericalFailure(format!(
                "non-finite β at step {}",
                k + 1
            )));
        }
        if beta <= tol {
            breakdown = true;
            if opts.keep_basis {
                residual = w.clone();
            }
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }

    let steps_completed = alphas.len() - 1;
    let mvm_count = alphas.len();
    let tridiagonal = TridiagonalMatrix::new(alphas, betas)?;
    let rule = quadrature_from_tridiagonal(&tridiagonal)?;
    Ok(LanczosResult {
        tridiagonal,
        rule,
        steps_completed,
        breakdown,
        mvm_count,
        basis: opts.keep_basis.then_some(basis),
        residual: opts.keep_basis.then_some(residual),
    })
}

/// Nodes are the eigenvalues of `T`, weights the squared first eigenvector components.
pub fn quadrature_from_tridiagonal(t: &TridiagonalMatrix) -> Result<QuadratureRule> {
    let eig = tridiag_eigen(t)?;
    Ok(QuadratureRule {
        nodes: eig.values,
        weights: eig.first_components.iter().map(|c| c * c).collect(),
    })
}
