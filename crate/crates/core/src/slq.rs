//! Stochastic Lanczos quadrature for `tr f(A)`, with `log det A` as the main use.
//!
//! Query `i` draws its Rademacher vector from its own ChaCha8 stream
//! (key from the seed, stream id `i`), so results are independent of how the
//! queries are scheduled. Per-query values are summed in query order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{plan, BoundPlan, PlanRequest, Theorem};
use crate::dense::DenseMatrix;
use crate::error::{Result, SlqError};
use crate::lanczos::{lanczos, LanczosOptions};
use crate::operators::{rescale_to_unit, LinearOperator, SpectrumBounds};
use crate::quadrature::{quadrature_eval, ScalarFn};
use crate::tridiag_eig::{dense_eigen_capped, DEFAULT_ORACLE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlqFunction {
    /// `tr log A = log det A`
    #[default]
    Log,
    /// `tr A⁻¹`
    Inverse,
}

impl SlqFunction {
    pub fn scalar(&self) -> ScalarFn<'static> {
        match self {
            SlqFunction::Log => ScalarFn::log(),
            SlqFunction::Inverse => ScalarFn {
                name: "inverse",
                f: &f64::recip,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlqConfig {
    /// Lanczos steps per query (the rule has `m + 1` nodes).
    pub m: usize,
    /// Number of Rademacher queries `N`.
    #[serde(rename = "N")]
    pub queries: usize,
    pub seed: u64,
    pub reorthogonalize: bool,
    pub function: SlqFunction,
}

impl SlqConfig {
    pub fn new(m: usize, queries: usize, seed: u64) -> Self {
        Self {
            m,
            queries,
            seed,
            reorthogonalize: true,
            function: SlqFunction::Log,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    /// `n · I_m^{(i)}` for each query, before the scale correction.
    pub per_query: Vec<f64>,
    pub mvm_total: u64,
    pub plan: Option<BoundPlan>,
    pub scale_correction: f64,
    pub n: usize,
    /// Lanczos steps actually requested per query (after capping at `n − 1`).
    pub m: usize,
    #[serde(rename = "N")]
    pub queries: usize,
    pub seed: u64,
    pub breakdowns: usize,
    pub notes: Vec<String>,
}

impl EstimateResult {
    pub fn sample_variance(&self) -> f64 {
        let k = self.per_query.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.per_query.iter().sum::<f64>() / k as f64;
        self.per_query
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (k - 1) as f64
    }
}

/// The RNG stream used for query `index` under `seed`.
pub fn query_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random ±1 vector (unnormalized).
pub fn rademacher_signs(n: usize, rng: &mut impl RngCore) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bits = rng.next_u64();
        let take = (n - out.len()).min(64);
        out.extend((0..take).map(|b| if (bits >> b) & 1 == 1 { 1.0 } else { -1.0 }));
    }
    out
}

/// Rademacher vector scaled to unit norm, entries `±1/√n`.
pub fn rademacher_unit_vector(n: usize, rng: &mut impl RngCore) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SlqError::InvalidArgument("n must be at least 1".into()));
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok(rademacher_signs(n, rng)
        .into_iter()
        .map(|x| x * s)
        .collect())
}

/// `f(A)` for a dense symmetric matrix via the Jacobi oracle.
pub fn dense_matrix_function(a: &DenseMatrix, f: ScalarFn<'_>) -> Result<DenseMatrix> {
    let eig = dense_eigen_capped(a, DEFAULT_ORACLE_CAP)?;
    let fv: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| f.eval(l))
        .collect::<Result<_>>()?;
    let n = a.rows();
    let q = &eig.vectors;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q[(i, k)] * fv[k] * q[(j, k)]).sum()
    }))
}

/// `(1/N) Σ zᵢᵀ F zᵢ` with Rademacher `zᵢ`, where `F = f(A)` is given explicitly.
pub fn girard_hutchinson(f_of_a: &DenseMatrix, queries: usize, seed: u64) -> Result<f64> {
    if queries == 0 {
        return Err(SlqError::InvalidArgument("need at least one query".into()));
    }
    if f_of_a.rows() > DEFAULT_ORACLE_CAP {
        return Err(SlqError::OracleTooLarge {
            n: f_of_a.rows(),
            cap: DEFAULT_ORACLE_CAP,
        });
    }
    let n = f_of_a.rows();
    let mut total = 0.0;
    for i in 0..queries {
        let z = rademacher_signs(n, &mut query_rng(seed, i as u64));
        total += crate::dense::dot(&z, &f_of_a.matvec(&z));
    }
    Ok(total / queries as f64)
}

struct QueryOutcome {
    value: f64,
    mvm: usize,
    breakdown: bool,
}

fn run_query(a: &LinearOperator, cfg: &SlqConfig, m: usize, index: usize) -> Result<QueryOutcome> {
    let n = a.dim();
    let v = rademacher_unit_vector(n, &mut query_rng(cfg.seed, index as u64))?;
    let opts = LanczosOptions {
        reorthogonalize: cfg.reorthogonalize,
        keep_basis: false,
    };
    let res = lanczos(a, &v, m, &opts)?;
    let integral = quadrature_eval(&res.rule, cfg.function.scalar()).map_err(|e| match e {
        SlqError::Domain { point } => SlqError::NotSpd(format!(
            "query {index}: Ritz value {point} is outside the domain of {} (matrix not SPD, or too few steps)",
            cfg.function.scalar().name
        )),
        other => other,
    })?;
    Ok(QueryOutcome {
        value: n as f64 * integral,
        mvm: res.mvm_count,
        breakdown: res.breakdown,
    })
}

/// Runs all `N` queries and returns `(n/N) Σ I_m^{(i)}`.
pub fn slq_estimate(a: &LinearOperator, cfg: &SlqConfig) -> Result<EstimateResult> {
    if cfg.m == 0 || cfg.queries == 0 {
        return Err(SlqError::InvalidArgument(
            "m and N must both be at least 1".into(),
        ));
    }
    let n = a.dim();
    let m = cfg.m.min(n.saturating_sub(1));
    let mut notes = Vec::new();
    if m < cfg.m {
        notes.push(format!("m = {} capped at n - 1 = {m}", cfg.m));
    }

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<QueryOutcome>> = {
        use rayon::prelude::*;
        (0..cfg.queries)
            .into_par_iter()
            .map(|i| run_query(a, cfg, m, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<QueryOutcome>> =
        (0..cfg.queries).map(|i| run_query(a, cfg, m, i)).collect();

    let mut per_query = Vec::with_capacity(cfg.queries);
    let mut mvm_total = 0u64;
    let mut breakdowns = 0;
    for outcome in outcomes {
        let q = outcome?;
        per_query.push(q.value);
        mvm_total += q.mvm as u64;
        breakdowns += usize::from(q.breakdown);
    }
    let estimate = per_query.iter().sum::<f64>() / cfg.queries as f64;
    Ok(EstimateResult {
        estimate,
        per_query,
        mvm_total,
        plan: None,
        scale_correction: 0.0,
        n,
        m,
        queries: cfg.queries,
        seed: cfg.seed,
        breakdowns,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedRunOptions {
    pub seed: u64,
    /// Rescale to `λmax = headroom` when a relative rule needs `λmax < 1`.
    pub rescale: bool,
    pub headroom: f64,
    pub reorthogonalize: bool,
    pub include_n_factor: bool,
}

impl Default for PlannedRunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            rescale: true,
            headroom: 0.99,
            reorthogonalize: true,
            include_n_factor: false,
        }
    }
}

/// Plans `(m, N)` from the chosen rule and runs SLQ with it. Relative rules
/// rescale the operator first when allowed; the correction `n log(1/s)` is
/// added back to the estimate.
pub fn estimate_with_plan(
    a: &LinearOperator,
    bounds: &SpectrumBounds,
    epsilon: f64,
    eta: f64,
    theorem: Theorem,
    opts: &PlannedRunOptions,
) -> Result<EstimateResult> {
    if bounds.n != a.dim() {
        return Err(SlqError::InvalidArgument(format!(
            "bounds describe n = {}, operator has n = {}",
            bounds.n,
            a.dim()
        )));
    }
    if bounds.lambda_min == bounds.lambda_max {
        // every eigenvalue equals c, so A = cI and one node is exact
        let mut res = slq_estimate(a, &SlqConfig::new(1, 1, opts.seed))?;
        res.notes
            .push("degenerate spectrum: A = cI, evaluated exactly without a plan".into());
        return Ok(res);
    }

    let (operator, scaled_bounds, correction) = if theorem.is_relative() && bounds.lambda_max >= 1.0
    {
        if !opts.rescale {
            return Err(SlqError::InvalidRegime(format!(
                "theorem {theorem} needs lambda_max < 1 (got {}); enable rescaling",
                bounds.lambda_max
            )));
        }
        let r = rescale_to_unit(a, bounds, opts.headroom)?;
        (
            std::borrow::Cow::Owned(r.operator),
            r.bounds,
            r.log_correction,
        )
    } else {
        (std::borrow::Cow::Borrowed(a), *bounds, 0.0)
    };

    let mut req = PlanRequest::new(scaled_bounds, epsilon, eta, theorem);
    req.include_n_factor = opts.include_n_factor;
    let p = plan(&req)?;
    let to_usize = |v: u64, what: &str| {
        usize::try_from(v)
            .map_err(|_| SlqError::InvalidRegime(format!("{what} = {v} does not fit in memory")))
    };
    let cfg = SlqConfig {
        m: to_usize(p.m, "m")?,
        queries: to_usize(p.queries, "N")?,
        seed: opts.seed,
        reorthogonalize: opts.reorthogonalize,
        function: SlqFunction::Log,
    };
    let mut res = slq_estimate(&operator, &cfg)?;
    res.estimate += correction;
    res.scale_correction = correction;
    res.notes.extend(p.warnings.iter().cloned());
    res.plan = Some(p);
    Ok(res)
}
