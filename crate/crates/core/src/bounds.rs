//! Certified choices of the Lanczos step count `m` and query count `N`.
//!
//! Four rules are provided:
//!
//! * [`Theorem::UcsSymmetric`]: the original absolute-error rule. It assumes the
//!   Gauss nodes are symmetric and is kept for comparison only.
//! * [`Theorem::CorrectedAbsolute`]: absolute error `εn`, with the quadrature
//!   constant for asymmetric nodes, `4M_ρ/(1−ρ⁻¹)`.
//! * [`Theorem::Relative`]: relative error `ε|log det A|` for `λ_max < 1`,
//!   splitting the budget evenly between quadrature and trace estimation.
//! * [`Theorem::Optimized`]: the same guarantee with the split chosen to
//!   minimize the pre-ceiling product `m·N`.
//!
//! `m` and `N` are the smallest integers satisfying the stated lower bounds.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlqError};
use crate::operators::SpectrumBounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    UcsSymmetric,
    CorrectedAbsolute,
    Relative,
    Optimized,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::UcsSymmetric,
        Theorem::CorrectedAbsolute,
        Theorem::Relative,
        Theorem::Optimized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem::UcsSymmetric => "ucs_symmetric",
            Theorem::CorrectedAbsolute => "corrected_absolute",
            Theorem::Relative => "relative",
            Theorem::Optimized => "optimized",
        }
    }

    /// Whether the guarantee is relative to `|log det A|` (and needs `λ_max < 1`).
    pub fn is_relative(&self) -> bool {
        matches!(self, Theorem::Relative | Theorem::Optimized)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Theorem {
    type Err = SlqError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ucs_symmetric" | "ucs" => Ok(Theorem::UcsSymmetric),
            "corrected_absolute" | "corrected" => Ok(Theorem::CorrectedAbsolute),
            "relative" => Ok(Theorem::Relative),
            "optimized" => Ok(Theorem::Optimized),
            other => Err(SlqError::InvalidArgument(format!(
                "unknown theorem '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub bounds: SpectrumBounds,
    pub epsilon: f64,
    pub eta: f64,
    pub theorem: Theorem,
    /// Put an extra factor `n` inside the logarithm of the optimized `m` bound.
    #[serde(default)]
    pub include_n_factor: bool,
}

impl PlanRequest {
    pub fn new(bounds: SpectrumBounds, epsilon: f64, eta: f64, theorem: Theorem) -> Self {
        Self {
            bounds,
            epsilon,
            eta,
            theorem,
            include_n_factor: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SlqError::InvalidArgument(format!(
                "epsilon must be in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(SlqError::InvalidArgument(format!(
                "eta must be in (0,1), got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// A certified `(m, N)` pair with every intermediate constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPlan {
    pub theorem: Theorem,
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub m: u64,
    #[serde(rename = "N")]
    pub queries: u64,
    /// Real-valued lower bound whose ceiling is `m`.
    pub m_bound: f64,
    /// Real-valued lower bound whose ceiling is `N`.
    pub queries_bound: f64,
    pub rho: f64,
    pub m_rho: f64,
    pub k_rho: f64,
    pub alpha_star: Option<f64>,
    pub c: Option<f64>,
    pub mvm_total: u64,
    pub symmetric_nodes_only: bool,
    pub warnings: Vec<String>,
}

impl BoundPlan {
    /// Pre-ceiling cost `m_bound · N_bound`.
    pub fn cost_bound(&self) -> f64 {
        self.m_bound * self.queries_bound
    }
}

pub fn plan(req: &PlanRequest) -> Result<BoundPlan> {
    match req.theorem {
        Theorem::UcsSymmetric => plan_ucs_symmetric(req),
        Theorem::CorrectedAbsolute => plan_corrected_absolute(req),
        Theorem::Relative => plan_relative(req),
        Theorem::Optimized => plan_optimized(req),
    }
}

/// `ρ₁ = (√(2κ+1)+1)/(√(2κ+1)−1)`.
pub fn rho_absolute(kappa: f64) -> f64 {
    let s = (2.0 * kappa + 1.0).sqrt();
    (s + 1.0) / (s - 1.0)
}

/// `M_{ρ₁} = 5 log(2(κ+1))`.
pub fn m_rho_absolute(kappa: f64) -> f64 {
    5.0 * (2.0 * (kappa + 1.0)).ln()
}

/// `ρ₂ = (λmax + √(2λminλmax − λmin²))/(λmax − λmin)`.
pub fn rho_relative(lambda_min: f64, lambda_max: f64) -> f64 {
    (lambda_max + (2.0 * lambda_min * lambda_max - lambda_min * lambda_min).sqrt())
        / (lambda_max - lambda_min)
}

/// `M_{ρ₂} = √(log(λmin/2)² + π²)`.
pub fn m_rho_relative(lambda_min: f64) -> f64 {
    ((lambda_min / 2.0).ln().powi(2) + PI * PI).sqrt()
}

/// Quadrature error constant for asymmetric nodes, `4M_ρ/(1−ρ⁻¹)`.
pub fn asymmetric_error_constant(rho: f64, m_rho: f64) -> f64 {
    4.0 * m_rho / (1.0 - 1.0 / rho)
}

/// The symmetric-node constant `4M_ρ/(1−ρ⁻²)`.
pub fn symmetric_error_constant(rho: f64, m_rho: f64) -> f64 {
    4.0 * m_rho / (1.0 - rho.powi(-2))
}

/// `|I − I_m| ≤ 4M_ρ/(1−ρ⁻¹) · ρ^{−2m−2}` for an (m+1)-point rule.
pub fn quadrature_error_bound(rho: f64, m_rho: f64, m: usize) -> f64 {
    asymmetric_error_constant(rho, m_rho) * rho.powf(-2.0 * m as f64 - 2.0)
}

/// `log(κ^{1/n}/λmax)`, a per-entry lower bound on `|log det A|/n` when `λmax < 1`.
pub fn logdet_floor_per_entry(bounds: &SpectrumBounds) -> f64 {
    bounds.kappa.ln() / bounds.n as f64 - bounds.lambda_max.ln()
}

fn ceil_count(bound: f64, what: &str, warnings: &mut Vec<String>) -> Result<u64> {
    if !bound.is_finite() {
        return Err(SlqError::InvalidRegime(format!(
            "{what} bound is not finite ({bound})"
        )));
    }
    let c = bound.ceil();
    if c < 1.0 {
        warnings.push(format!("{what} bound {bound:.3e} is below 1; using 1"));
        return Ok(1);
    }
    if c >= u64::MAX as f64 {
        return Err(SlqError::InvalidRegime(format!(
            "{what} bound {bound:e} overflows"
        )));
    }
    Ok(c as u64)
}

fn finish(
    req: &PlanRequest,
    m_bound: f64,
    queries_bound: f64,
    rho: f64,
    m_rho: f64,
    k_rho: f64,
    alpha_star: Option<f64>,
    c: Option<f64>,
    mut warnings: Vec<String>,
) -> Result<BoundPlan> {
    let m = ceil_count(m_bound, "m", &mut warnings)?;
    let queries = ceil_count(queries_bound, "N", &mut warnings)?;
    if m as usize >= req.bounds.n {
        warnings.push(format!(
            "m = {m} reaches the dimension n = {}; Lanczos will be capped at n - 1 steps",
            req.bounds.n
        ));
    }
    let mvm_total = queries
        .checked_mul(m + 1)
        .ok_or_else(|| SlqError::InvalidRegime("MVM total overflows".into()))?;
    Ok(BoundPlan {
        theorem: req.theorem,
        n: req.bounds.n,
        lambda_min: req.bounds.lambda_min,
        lambda_max: req.bounds.lambda_max,
        kappa: req.bounds.kappa,
        epsilon: req.epsilon,
        eta: req.eta,
        m,
        queries,
        m_bound,
        queries_bound,
        rho,
        m_rho,
        k_rho,
        alpha_star,
        c,
        mvm_total,
        symmetric_nodes_only: req.theorem == Theorem::UcsSymmetric,
        warnings,
    })
}

/// `N ≥ (24/ε²)(log(1+κ))² log(2/η)`, shared by both absolute-error rules.
fn absolute_queries_bound(kappa: f64, epsilon: f64, eta: f64) -> f64 {
    (24.0 / (epsilon * epsilon)) * (1.0 + kappa).ln().powi(2) * (2.0 / eta).ln()
}

/// Absolute-error rule valid only for symmetric Gauss nodes:
/// `m ≥ (√(3κ)/4) log(K/ε)`, `K = 5κ log(2(κ+1))/√(2κ+1)`.
pub fn plan_ucs_symmetric(req: &PlanRequest) -> Result<BoundPlan> {
    req.validate()?;
    let kappa = req.bounds.kappa;
    let k = 5.0 * kappa * (2.0 * (kappa + 1.0)).ln() / (2.0 * kappa + 1.0).sqrt();
    let m_bound = (3.0 * kappa).sqrt() / 4.0 * (k / req.epsilon).ln();
    let queries_bound = absolute_queries_bound(kappa, req.epsilon, req.eta);
    let warnings = vec!["valid for symmetric quadrature nodes only".to_string()];
    finish(
        req,
        m_bound,
        queries_bound,
        rho_absolute(kappa),
        m_rho_absolute(kappa),
        k,
        None,
        None,
        warnings,
    )
}

/// Absolute error `εn` with the asymmetric-node constant:
/// `m ≥ log(K_{ρ₁}/ε)/(2 log ρ₁)`, `K_{ρ₁} = 8M_{ρ₁}/(ρ₁²−ρ₁)`.
pub fn plan_corrected_absolute(req: &PlanRequest) -> Result<BoundPlan> {
    req.validate()?;
    let kappa = req.bounds.kappa;
    let rho = rho_absolute(kappa);
    let m_rho = m_rho_absolute(kappa);
    let k_rho = 8.0 * m_rho / (rho * rho - rho);
    let m_bound = (k_rho / req.epsilon).ln() / (2.0 * rho.ln());
    let queries_bound = absolute_queries_bound(kappa, req.epsilon, req.eta);
    finish(
        req,
        m_bound,
        queries_bound,
        rho,
        m_rho,
        k_rho,
        None,
        None,
        Vec::new(),
    )
}

struct RelativeConstants {
    rho: f64,
    m_rho: f64,
    floor: f64,
    /// `C = 4M_{ρ₂}/(ε(ρ₂²−ρ₂) log(κ^{1/n}/λmax))`
    c: f64,
}

fn relative_constants(req: &PlanRequest) -> Result<RelativeConstants> {
    req.validate()?;
    let b = &req.bounds;
    if b.lambda_max >= 1.0 {
        return Err(SlqError::InvalidRegime(format!(
            "relative bounds need lambda_max < 1, got {}; rescale the operator first",
            b.lambda_max
        )));
    }
    if b.lambda_min >= b.lambda_max {
        return Err(SlqError::DegenerateSpectrum);
    }
    let floor = logdet_floor_per_entry(b);
    if !(floor > 0.0) {
        return Err(SlqError::InvalidRegime(format!(
            "log(kappa^(1/n)/lambda_max) = {floor} is not positive"
        )));
    }
    let rho = rho_relative(b.lambda_min, b.lambda_max);
    let m_rho = m_rho_relative(b.lambda_min);
    let c = 4.0 * m_rho / (req.epsilon * (rho * rho - rho) * floor);
    Ok(RelativeConstants {
        rho,
        m_rho,
        floor,
        c,
    })
}

fn relative_with_alpha(
    req: &PlanRequest,
    k: &RelativeConstants,
    alpha: f64,
    k_rho: f64,
    queries_bound: f64,
    alpha_star: Option<f64>,
    c: Option<f64>,
    mut warnings: Vec<String>,
) -> Result<BoundPlan> {
    let n_factor = if req.include_n_factor {
        req.bounds.n as f64
    } else {
        1.0
    };
    let m_bound = (n_factor * k_rho / (req.epsilon * k.floor)).ln() / (2.0 * k.rho.ln());
    if k.floor < 1e-8 {
        warnings.push(format!(
            "log(kappa^(1/n)/lambda_max) = {:.3e} is tiny; m bound is very large",
            k.floor
        ));
    }
    debug_assert!(alpha > 1.0);
    finish(
        req,
        m_bound,
        queries_bound,
        k.rho,
        k.m_rho,
        k_rho,
        alpha_star,
        c,
        warnings,
    )
}

/// Relative error `ε|log det A|` with an even split of the error budget:
/// `m ≥ log(K_{ρ₂}/(ε log(κ^{1/n}/λmax)))/(2 log ρ₂)`, `N ≥ (24/ε²) log(2/η)`.
pub fn plan_relative(req: &PlanRequest) -> Result<BoundPlan> {
    let k = relative_constants(req)?;
    let k_rho = 8.0 * k.m_rho / (k.rho * k.rho - k.rho);
    let queries_bound = (24.0 / (req.epsilon * req.epsilon)) * (2.0 / req.eta).ln();
    relative_with_alpha(req, &k, 2.0, k_rho, queries_bound, None, None, Vec::new())
}

/// The optimized-allocation plan for a caller-chosen split `α > 1`.
pub fn plan_optimized_with_alpha(req: &PlanRequest, alpha: f64) -> Result<BoundPlan> {
    if !(alpha > 1.0) {
        return Err(SlqError::InvalidArgument(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    let k = relative_constants(req)?;
    optimized_from_constants(req, &k, alpha, Vec::new())
}

fn optimized_from_constants(
    req: &PlanRequest,
    k: &RelativeConstants,
    alpha: f64,
    warnings: Vec<String>,
) -> Result<BoundPlan> {
    let k_rho = 4.0 * alpha * k.m_rho / (k.rho * k.rho - k.rho);
    let ratio = alpha / (alpha - 1.0);
    let queries_bound =
        (6.0 / (req.epsilon * req.epsilon)) * (ratio * ratio) * (2.0 / req.eta).ln();
    relative_with_alpha(
        req,
        k,
        alpha,
        k_rho,
        queries_bound,
        Some(alpha),
        Some(k.c),
        warnings,
    )
}

/// Relative guarantee with the error split `1/α + 1/β = 1` chosen to minimize
/// `log(Cα)(α/(α−1))²`. Falls back to `α = 2` when no interior minimizer exists.
pub fn plan_optimized(req: &PlanRequest) -> Result<BoundPlan> {
    let k = relative_constants(req)?;
    let (alpha, warnings) = match solve_alpha_star(k.c) {
        Ok(a) => (a, Vec::new()),
        Err(SlqError::NoInteriorMinimizer { c }) => (
            2.0,
            vec![format!(
                "no interior minimizer for C = {c:.6e}; using alpha = 2"
            )],
        ),
        Err(e) => return Err(e),
    };
    optimized_from_constants(req, &k, alpha, warnings)
}

/// `log(Cα) (α/(α−1))²`, proportional to the pre-ceiling `m·N`.
pub fn allocation_objective(c: f64, alpha: f64) -> f64 {
    let r = alpha / (alpha - 1.0);
    (c * alpha).ln() * r * r
}

/// Treats `|g(2)|` below this as the tangent (double-root) case.
const TANGENT_TOL: f64 = 1e-12;

/// Solves `α = 2 log α + 2 log C + 1` for the root that minimizes
/// [`allocation_objective`].
///
/// `g(α) = α − 2 log α − 2 log C − 1` is convex with its minimum at `α = 2`, and
/// the sign of the objective's derivative is the sign of `g`. The minimizer is
/// therefore the larger root, which exists iff `g(2) ≤ 0`, i.e. `C ≥ e^{1/2}/2`.
pub fn solve_alpha_star(c: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(SlqError::InvalidArgument(format!(
            "C must be positive and finite, got {c}"
        )));
    }
    let log_c = c.ln();
    let g = |a: f64| a - 2.0 * a.ln() - 2.0 * log_c - 1.0;
    let g_min = g(2.0);
    if g_min > TANGENT_TOL {
        return Err(SlqError::NoInteriorMinimizer { c });
    }
    if g_min >= -TANGENT_TOL {
        return Ok(2.0);
    }
    let mut lo = 2.0f64;
    let mut hi = (4.0 * log_c + 10.0).max(10.0);
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut a = hi;
    for _ in 0..200 {
        let ga = g(a);
        if ga.abs() <= 1e-14 * a {
            return Ok(a);
        }
        if ga > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let step = a - ga / (1.0 - 2.0 / a);
        a = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(a)
}

/// `ε = ε*|log det A|/n`, converting a relative target into the absolute `εn` form.
pub fn epsilon_from_relative_target(eps_star: f64, logdet: f64, n: usize) -> Result<f64> {
    if logdet == 0.0 {
        return Err(SlqError::UndefinedTarget);
    }
    if n == 0 {
        return Err(SlqError::InvalidArgument("n must be positive".into()));
    }
    Ok(eps_star * logdet.abs() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn req(lmin: f64, lmax: f64, n: usize, eps: f64, eta: f64, t: Theorem) -> PlanRequest {
        PlanRequest::new(SpectrumBounds::new(lmin, lmax, n).unwrap(), eps, eta, t)
    }

    #[test]
    fn ucs_kappa_one() {
        let p = plan_ucs_symmetric(&req(1.0, 1.0, 10, 0.5, 0.5, Theorem::UcsSymmetric)).unwrap();
        let k = 5.0 * 4f64.ln() / 3f64.sqrt();
        assert_relative_eq!(p.k_rho, k, max_relative = 1e-15);
        let m = (3f64.sqrt() / 4.0 * (2.0 * k).ln()).ceil() as u64;
        assert_eq!(p.m, m);
        assert!(p.symmetric_nodes_only);
    }

    #[test]
    fn ucs_queries_with_unit_log() {
        let eta = 2.0 / std::f64::consts::E;
        let p = plan_ucs_symmetric(&req(1.0, 4.0, 10, 0.3, eta, Theorem::UcsSymmetric)).unwrap();
        let want = 24.0 / 0.09 * 5f64.ln().powi(2);
        assert_relative_eq!(p.queries_bound, want, max_relative = 1e-14);
    }

    #[test]
    fn corrected_rho_at_kappa_one() {
        let p = plan_corrected_absolute(&req(2.0, 2.0, 10, 0.1, 0.1, Theorem::CorrectedAbsolute))
            .unwrap();
        assert_relative_eq!(p.rho, 2.0 + 3f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn relative_rejects_degenerate_and_bad_regimes() {
        assert_eq!(
            plan_relative(&req(0.5, 0.5, 10, 0.1, 0.1, Theorem::Relative)).unwrap_err(),
            SlqError::DegenerateSpectrum
        );
        assert!(matches!(
            plan_relative(&req(0.5, 1.5, 10, 0.1, 0.1, Theorem::Relative)),
            Err(SlqError::InvalidRegime(_))
        ));
        assert!(plan_relative(&req(0.5, 0.9, 10, 0.0, 0.1, Theorem::Relative)).is_err());
        assert!(plan_relative(&req(0.5, 0.9, 10, 0.1, 1.0, Theorem::Relative)).is_err());
    }

    #[test]
    fn alpha_star_analytic_roots() {
        let e = std::f64::consts::E;
        assert_relative_eq!(
            solve_alpha_star(((e - 3.0) / 2.0).exp()).unwrap(),
            e,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            solve_alpha_star(0.5f64.exp() / 2.0).unwrap(),
            2.0,
            epsilon = 1e-9
        );
        assert!(matches!(
            solve_alpha_star(0.5),
            Err(SlqError::NoInteriorMinimizer { .. })
        ));
        assert!(solve_alpha_star(-1.0).is_err());
    }

    #[test]
    fn optimized_at_alpha_two_matches_relative() {
        let r = req(0.0443, 0.99, 500, 0.1, 0.1, Theorem::Relative);
        let rel = plan_relative(&r).unwrap();
        let opt = plan_optimized_with_alpha(
            &PlanRequest {
                theorem: Theorem::Optimized,
                ..r
            },
            2.0,
        )
        .unwrap();
        assert_eq!(rel.m, opt.m);
        assert_eq!(rel.queries, opt.queries);
        assert_eq!(rel.m_bound, opt.m_bound);
        assert_eq!(rel.queries_bound, opt.queries_bound);
        assert_eq!(rel.k_rho, opt.k_rho);
        assert_eq!(rel.rho, opt.rho);
        assert_eq!(rel.mvm_total, opt.mvm_total);
    }

    #[test]
    fn n_factor_raises_m() {
        let mut r = req(0.0443, 0.99, 500, 0.1, 0.1, Theorem::Optimized);
        let without = plan_optimized(&r).unwrap();
        r.include_n_factor = true;
        let with = plan_optimized(&r).unwrap();
        assert_relative_eq!(
            with.m_bound - without.m_bound,
            500f64.ln() / (2.0 * without.rho.ln()),
            max_relative = 1e-12
        );
    }

    #[test]
    fn eps_conversion() {
        assert_relative_eq!(
            epsilon_from_relative_target(0.1, -500.0, 5000).unwrap(),
            0.01,
            max_relative = 1e-15
        );
        assert_eq!(epsilon_from_relative_target(0.3, -7.0, 7).unwrap(), 0.3);
        assert_eq!(
            epsilon_from_relative_target(0.1, 0.0, 7).unwrap_err(),
            SlqError::UndefinedTarget
        );
    }

    #[test]
    fn theorem_names_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.as_str().parse::<Theorem>().unwrap(), t);
        }
        assert!("bogus".parse::<Theorem>().is_err());
    }
}
