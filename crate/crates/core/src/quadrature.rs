//! Spectral step measures, exact Riemann–Stieltjes sums, Gauss rule evaluation
//! and affine changes of variable.
//!
//! For a discrete measure an affine change of variable moves the support
//! points and leaves the masses alone; the quadrature error is the same number
//! on the physical and on the reference interval.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, SlqError};
use crate::lanczos::QuadratureRule;
use crate::operators::{HouseholderSpectral, LinearOperator};
use crate::tridiag_eig::{dense_eigen_capped, DEFAULT_ORACLE_CAP};

/// A scalar function with a name, for quadrature and exact integrals.
#[derive(Clone, Copy)]
pub struct ScalarFn<'a> {
    pub name: &'a str,
    pub f: &'a dyn Fn(f64) -> f64,
}

impl<'a> ScalarFn<'a> {
    pub fn new(name: &'a str, f: &'a dyn Fn(f64) -> f64) -> Self {
        Self { name, f }
    }

    pub fn log() -> ScalarFn<'static> {
        ScalarFn {
            name: "log",
            f: &f64::ln,
        }
    }

    /// Evaluates and maps a non-finite result to a domain error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let y = (self.f)(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(SlqError::Domain { point: t })
        }
    }
}

impl std::fmt::Debug for ScalarFn<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarFn({})", self.name)
    }
}

/// Point masses `[μ_j]²` at ascending support points `λ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.len() != masses.len() {
            return Err(SlqError::InvalidArgument(
                "points and masses differ in length".into(),
            ));
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            return Err(SlqError::InvalidArgument(
                "support points must be ascending".into(),
            ));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(SlqError::InvalidArgument(
                "masses must be nonnegative".into(),
            ));
        }
        Ok(Self { points, masses })
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// `h(t) = slope · t + intercept`, mapping the reference variable to the physical one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineMap {
    pub fn new(slope: f64, intercept: f64) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() || !intercept.is_finite() {
            return Err(SlqError::InvalidArgument(format!(
                "affine map slope {slope} is not invertible"
            )));
        }
        Ok(Self { slope, intercept })
    }

    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    /// The map taking `[-1, 1]` onto `[lo, hi]`.
    pub fn reference_to_physical(lo: f64, hi: f64) -> Result<Self> {
        Self::new((hi - lo) / 2.0, (hi + lo) / 2.0)
    }

    pub fn apply(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }

    pub fn inverse(&self, x: f64) -> f64 {
        (x - self.intercept) / self.slope
    }
}

/// Masses `(q_jᵀ v)²` over the eigenvalues of `a`. Diagonal and Householder
/// forms use their known eigenvectors; other forms go through the dense oracle.
pub fn measure_from_vector(a: &LinearOperator, v: &[f64]) -> Result<SpectralMeasure> {
    let (points, coords) = eigen_coordinates(a, v)?;
    SpectralMeasure::new(points, coords.iter().map(|c| c * c).collect())
}

/// Eigenvalues of `a` (ascending) and the coordinates `Qᵀ v` in the same order.
pub fn eigen_coordinates(a: &LinearOperator, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if v.len() != a.dim() {
        return Err(SlqError::InvalidArgument(
            "vector length does not match operator".into(),
        ));
    }
    let (values, coords): (Vec<f64>, Vec<f64>) = match a {
        LinearOperator::Diagonal(d) => (d.clone(), v.to_vec()),
        LinearOperator::Spectral(h) => {
            let mut hv = v.to_vec();
            HouseholderSpectral::reflect(&mut hv);
            (h.eigenvalues().to_vec(), hv)
        }
        LinearOperator::Dense(_) | LinearOperator::Sparse(_) => {
            let n = a.dim();
            if n > DEFAULT_ORACLE_CAP {
                return Err(SlqError::OracleTooLarge {
                    n,
                    cap: DEFAULT_ORACLE_CAP,
                });
            }
            let dense: DenseMatrix = a.to_dense();
            let eig = dense_eigen_capped(&dense, DEFAULT_ORACLE_CAP)?;
            let coords = eig.vectors.transpose().matvec(v);
            return Ok((eig.values, coords));
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| coords[i]).collect(),
    ))
}

/// Right-continuous step function: 0 below `λ_1`, cumulative mass of all points `≤ t`.
pub fn measure_cdf(mu: &SpectralMeasure, t: f64) -> f64 {
    let k = mu.points.partition_point(|&p| p <= t);
    mu.masses[..k].iter().sum()
}

/// `Σ_j mass_j f(λ_j)`.
pub fn exact_rs_integral(mu: &SpectralMeasure, f: ScalarFn<'_>) -> Result<f64> {
    mu.points
        .iter()
        .zip(&mu.masses)
        .map(|(&p, &m)| Ok(m * f.eval(p)?))
        .sum()
}

/// `Σ_k τ_k f(θ_k)`.
pub fn quadrature_eval(rule: &QuadratureRule, f: ScalarFn<'_>) -> Result<f64> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| Ok(w * f.eval(t)?))
        .sum()
}

/// Moves support points to `h⁻¹(λ_j)`; masses are carried along unchanged.
pub fn pushforward_measure(mu: &SpectralMeasure, h: &AffineMap) -> SpectralMeasure {
    let (points, masses) = pushforward_pairs(&mu.points, &mu.masses, h);
    SpectralMeasure { points, masses }
}

/// The same change of variable applied to a Gauss rule's nodes.
pub fn pushforward_rule(rule: &QuadratureRule, h: &AffineMap) -> QuadratureRule {
    let (nodes, weights) = pushforward_pairs(&rule.nodes, &rule.weights, h);
    QuadratureRule { nodes, weights }
}

fn pushforward_pairs(points: &[f64], masses: &[f64], h: &AffineMap) -> (Vec<f64>, Vec<f64>) {
    let mapped: Vec<f64> = points.iter().map(|&p| h.inverse(p)).collect();
    if h.slope > 0.0 {
        (mapped, masses.to_vec())
    } else {
        (
            mapped.into_iter().rev().collect(),
            masses.iter().rev().copied().collect(),
        )
    }
}

/// `(t, μ(t))` on `samples` equispaced points spanning the support.
pub fn cdf_grid(mu: &SpectralMeasure, samples: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = match (mu.points.first(), mu.points.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Vec::new(),
    };
    if samples <= 1 || lo == hi {
        return vec![(lo, measure_cdf(mu, lo))];
    }
    (0..samples)
        .map(|i| {
            let t = if i + 1 == samples {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            };
            (t, measure_cdf(mu, t))
        })
        .collect()
}
