//! When are Gauss–Lanczos nodes symmetric?
//!
//! If the spectrum of `A` is symmetric about `λ̄` and `μ₁ = Qᵀv` has symmetric
//! absolute values, the Jacobi matrix has constant diagonal `λ̄` and its
//! eigenvalues come in pairs `λ̄ ± σ`. This module measures both effects and
//! runs four reference cases. Asymmetry is reported, never raised as an error.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, SlqError};
use crate::lanczos::{lanczos, LanczosOptions, QuadratureRule};
use crate::operators::{
    estimate_spectrum_bounds, generate_householder_matrix, read_matrix_market, LinearOperator,
};
use crate::quadrature::{cdf_grid, eigen_coordinates, SpectralMeasure};
use crate::tridiag_eig::TridiagonalMatrix;

/// Default relative tolerance (scaled by `‖A‖`) for symmetry verdicts.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-8;

/// Samples in the `(t, μ(t))` grid written per case.
pub const MEASURE_GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub lambda_bar: f64,
    /// `max_k |α_k − λ̄|`
    pub diag_residual: f64,
    /// `max_k |θ_k + θ_{m+2−k} − 2λ̄|` over the sorted nodes
    pub node_residual: f64,
    /// `None` when the eigenvectors were out of reach of the dense oracle.
    pub sav_holds: Option<bool>,
    pub spectrum_symmetric: Option<bool>,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub rule: QuadratureRule,
    pub alphas: Vec<f64>,
    pub measure: Option<SpectralMeasure>,
}

/// `||v_i| − |v_{n+1−i}|| ≤ tol` for every mirrored pair.
pub fn has_symmetric_absolute_values(v: &[f64], tol: f64) -> bool {
    let n = v.len();
    (0..n / 2).all(|i| (v[i].abs() - v[n - 1 - i].abs()).abs() <= tol)
}

/// Center `λ̄ = (λ₁ + λ_n)/2` and whether `λ_i + λ_{n+1−i} = 2λ̄` within `tol`.
pub fn spectrum_is_symmetric(eigenvalues: &[f64], tol: f64) -> (bool, f64) {
    let Some((&first, &last)) = eigenvalues.first().zip(eigenvalues.last()) else {
        return (true, 0.0);
    };
    let center = 0.5 * (first + last);
    let n = eigenvalues.len();
    let symmetric =
        (0..n).all(|i| (eigenvalues[i] + eigenvalues[n - 1 - i] - 2.0 * center).abs() <= tol);
    (symmetric, center)
}

fn mirrored_residual(sorted: &[f64], center: f64) -> f64 {
    let k = sorted.len();
    (0..k)
        .map(|i| (sorted[i] + sorted[k - 1 - i] - 2.0 * center).abs())
        .fold(0.0, f64::max)
}

/// Runs `m` Lanczos steps from `v` and measures node and diagonal symmetry.
/// `rel_tol` is scaled by `‖A‖` for the spectrum and node checks.
pub fn symmetry_report(
    a: &LinearOperator,
    v: &[f64],
    m: usize,
    rel_tol: f64,
) -> Result<SymmetryReport> {
    let scale = a.norm_estimate().max(f64::MIN_POSITIVE);
    let tol = rel_tol * scale;
    let res = lanczos(a, v, m, &LanczosOptions::default())?;

    let (lambda_bar, sav, spec_sym, measure) = match eigen_coordinates(a, v) {
        Ok((values, coords)) => {
            let (sym, center) = spectrum_is_symmetric(&values, tol);
            let sav = has_symmetric_absolute_values(&coords, rel_tol);
            let measure = SpectralMeasure::new(values, coords.iter().map(|c| c * c).collect())?;
            (center, Some(sav), Some(sym), Some(measure))
        }
        Err(SlqError::OracleTooLarge { .. }) => {
            let steps = 300.min(a.dim() - 1).max(2);
            let b = estimate_spectrum_bounds(a, steps, 1.0)?;
            (0.5 * (b.lambda_min + b.lambda_max), None, None, None)
        }
        Err(e) => return Err(e),
    };

    let alphas = res.tridiagonal.alphas().to_vec();
    let diag_residual = alphas
        .iter()
        .map(|a| (a - lambda_bar).abs())
        .fold(0.0, f64::max);
    let node_residual = mirrored_residual(&res.rule.nodes, lambda_bar);
    let verdict = if node_residual <= tol {
        Verdict::Symmetric
    } else {
        Verdict::Asymmetric
    };
    Ok(SymmetryReport {
        lambda_bar,
        diag_residual,
        node_residual,
        sav_holds: sav,
        spectrum_symmetric: spec_sym,
        verdict,
        tolerance: tol,
        rule: res.rule,
        alphas,
        measure,
    })
}

/// Permutes a constant-diagonal tridiagonal matrix into `[[γI, B], [Bᵀ, γI]]`
/// by splitting odd and even indices. Returns `(B, γ)` with `γ` the mean diagonal.
pub fn tridiag_as_block_antidiag(t: &TridiagonalMatrix) -> (DenseMatrix, f64) {
    let k = t.size();
    let gamma = t.alphas().iter().sum::<f64>() / k as f64;
    let odd: Vec<usize> = (0..k).step_by(2).collect();
    let even: Vec<usize> = (1..k).step_by(2).collect();
    let betas = t.betas();
    let b = DenseMatrix::from_fn(odd.len(), even.len(), |i, j| {
        let (p, q) = (odd[i], even[j]);
        if p + 1 == q {
            betas[p]
        } else if q + 1 == p {
            betas[q]
        } else {
            0.0
        }
    });
    (b, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AppendixCase {
    /// `λ_i = i/50`, `v = 1/√50`
    One,
    /// `λ_i = 1/(51−i)`, `v = 1/√50`
    Two,
    /// `λ_i = i/50`, `v ∝ (1, …, 50)`
    Three,
    /// A sparse matrix read from disk, `v = (1,…,1,−1,…,−1)/√n`
    Four,
}

impl AppendixCase {
    pub const ALL: [AppendixCase; 4] = [
        AppendixCase::One,
        AppendixCase::Two,
        AppendixCase::Three,
        AppendixCase::Four,
    ];

    pub fn number(&self) -> u8 {
        match self {
            AppendixCase::One => 1,
            AppendixCase::Two => 2,
            AppendixCase::Three => 3,
            AppendixCase::Four => 4,
        }
    }

    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(AppendixCase::One),
            2 => Ok(AppendixCase::Two),
            3 => Ok(AppendixCase::Three),
            4 => Ok(AppendixCase::Four),
            _ => Err(SlqError::InvalidArgument(format!(
                "case must be 1..4, got {k}"
            ))),
        }
    }
}

pub const CASE_DIM: usize = 50;

/// Operator and start vector for cases 1–3 (`n = 50`, `A = HΛH`).
pub fn synthetic_case(case: AppendixCase) -> Result<(LinearOperator, Vec<f64>)> {
    let n = CASE_DIM;
    let linear: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let harmonic: Vec<f64> = (1..=n).map(|i| 1.0 / (n + 1 - i) as f64).collect();
    let flat = vec![1.0 / (n as f64).sqrt(); n];
    let ramp_norm = ((1..=n).map(|i| (i * i) as f64).sum::<f64>()).sqrt();
    let ramp: Vec<f64> = (1..=n).map(|i| i as f64 / ramp_norm).collect();
    let (eigenvalues, v) = match case {
        AppendixCase::One => (linear, flat),
        AppendixCase::Two => (harmonic, flat),
        AppendixCase::Three => (linear, ramp),
        AppendixCase::Four => {
            return Err(SlqError::InvalidArgument(
                "case 4 is read from a file".into(),
            ));
        }
    };
    Ok((generate_householder_matrix(&eigenvalues)?, v))
}

/// Start vector with the first half of the entries `+1` and the rest `−1`, normalized.
pub fn split_sign_vector(n: usize) -> Vec<f64> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n).map(|i| if i < n / 2 { s } else { -s }).collect()
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub case: AppendixCase,
    pub report: SymmetryReport,
}

#[derive(Debug, Clone, Default)]
pub struct AppendixRun {
    pub results: Vec<CaseResult>,
    pub skipped: Vec<String>,
}

pub fn run_case(
    case: AppendixCase,
    m: usize,
    matrix_path: Option<&Path>,
) -> Result<Option<CaseResult>> {
    let (a, v) = match case {
        AppendixCase::Four => {
            let Some(path) = matrix_path.filter(|p| p.exists()) else {
                return Ok(None);
            };
            let a = read_matrix_market(path)?;
            let v = split_sign_vector(a.dim());
            (a, v)
        }
        _ => synthetic_case(case)?,
    };
    let report = symmetry_report(&a, &v, m, DEFAULT_SYMMETRY_TOL)?;
    Ok(Some(CaseResult { case, report }))
}

/// Runs the requested cases; case 4 is skipped with a notice when no matrix file is available.
pub fn run_appendix_cases(
    cases: &[AppendixCase],
    m: usize,
    matrix_path: Option<&Path>,
) -> Result<AppendixRun> {
    let mut run = AppendixRun::default();
    for &case in cases {
        match run_case(case, m, matrix_path)? {
            Some(r) => run.results.push(r),
            None => run.skipped.push(format!(
                "case {}: matrix file not found{}; skipped",
                case.number(),
                matrix_path
                    .map(|p| format!(" at {}", p.display()))
                    .unwrap_or_default()
            )),
        }
    }
    Ok(run)
}

/// `case,node_index,theta,tau`
pub fn nodes_csv(case: &str, rule: &QuadratureRule) -> String {
    let mut out = String::from("case,node_index,theta,tau\n");
    for (k, (t, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let _ = writeln!(out, "{case},{},{t},{w}", k + 1);
    }
    out
}

/// `case,t,mu` on an equispaced grid spanning the support.
pub fn measure_csv(case: &str, measure: &SpectralMeasure, samples: usize) -> String {
    let mut out = String::from("case,t,mu\n");
    for (t, mu) in cdf_grid(measure, samples) {
        let _ = writeln!(out, "{case},{t},{mu}");
    }
    out
}

impl SymmetryReport {
    pub fn summary(&self) -> String {
        let flag = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        format!(
            "lambda_bar={:.6} diag_residual={:.3e} node_residual={:.3e} spectrum_symmetric={} sav={} verdict={}",
            self.lambda_bar,
            self.diag_residual,
            self.node_residual,
            flag(self.spectrum_symmetric),
            flag(self.sav_holds),
            match self.verdict {
                Verdict::Symmetric => "symmetric",
                Verdict::Asymmetric => "asymmetric",
            }
        )
    }
}
