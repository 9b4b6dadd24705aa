//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the page draws
//! the results on canvases. The `*_json` functions are the native-testable cores.

use serde::Serialize;
use slq_core::bounds::{plan, PlanRequest, Theorem};
use slq_core::diagnostics::{run_case, AppendixCase, Verdict};
use slq_core::operators::{decay_eigenvalues, generate_decay_spectrum, SpectrumBounds};
use slq_core::slq::{slq_estimate, SlqConfig};
use slq_core::tridiag_eig::exact_logdet;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct CurvePoint {
    eps_star: f64,
    m: u64,
    #[serde(rename = "N")]
    queries: u64,
    mvm: u64,
}

#[derive(Serialize)]
struct Curves {
    relative: Vec<CurvePoint>,
    optimized: Vec<CurvePoint>,
    alpha_star: Vec<f64>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// MVM counts of the relative and optimized plans for `ε* = 0.01..0.20`
/// on the spectrum `0.99/i^r`, `i = 1..n`.
pub fn plan_curves_json(n: usize, r: f64, eta: f64) -> Result<String, String> {
    if !(2..=1_000_000).contains(&n) {
        return Err("n must be between 2 and 10^6".into());
    }
    let bounds =
        SpectrumBounds::from_spectrum(&decay_eigenvalues(n, r, 0.99)).map_err(|e| e.to_string())?;
    let mut curves = Curves {
        relative: Vec::new(),
        optimized: Vec::new(),
        alpha_star: Vec::new(),
    };
    for i in 1..=20 {
        let eps_star = i as f64 / 100.0;
        for t in [Theorem::Relative, Theorem::Optimized] {
            let p = plan(&PlanRequest::new(bounds, eps_star, eta, t)).map_err(|e| e.to_string())?;
            let point = CurvePoint {
                eps_star,
                m: p.m,
                queries: p.queries,
                mvm: p.mvm_total,
            };
            match t {
                Theorem::Optimized => {
                    curves.alpha_star.push(p.alpha_star.unwrap_or(2.0));
                    curves.optimized.push(point);
                }
                _ => curves.relative.push(point),
            }
        }
    }
    to_json(&curves)
}

#[derive(Serialize)]
struct NodeView {
    case: u8,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    alphas: Vec<f64>,
    lambda_bar: f64,
    diag_residual: f64,
    node_residual: f64,
    sav_holds: Option<bool>,
    spectrum_symmetric: Option<bool>,
    symmetric: bool,
    eigenvalues: Vec<f64>,
    masses: Vec<f64>,
}

/// Gauss nodes after `m` Lanczos steps on reference case 1, 2 or 3.
pub fn ritz_nodes_json(case: u8, m: usize) -> Result<String, String> {
    let case = AppendixCase::from_number(case).map_err(|e| e.to_string())?;
    if case == AppendixCase::Four {
        return Err("case 4 needs a matrix file and is not available in the browser".into());
    }
    let r = run_case(case, m, None)
        .map_err(|e| e.to_string())?
        .ok_or("case did not run")?
        .report;
    let (eigenvalues, masses) = r
        .measure
        .map(|mu| (mu.points, mu.masses))
        .unwrap_or_default();
    to_json(&NodeView {
        case: case.number(),
        nodes: r.rule.nodes,
        weights: r.rule.weights,
        alphas: r.alphas,
        lambda_bar: r.lambda_bar,
        diag_residual: r.diag_residual,
        node_residual: r.node_residual,
        sav_holds: r.sav_holds,
        spectrum_symmetric: r.spectrum_symmetric,
        symmetric: r.verdict == Verdict::Symmetric,
        eigenvalues,
        masses,
    })
}

#[derive(Serialize)]
struct EstimateView {
    estimate: f64,
    exact: f64,
    rel_err: f64,
    mvm_total: u64,
    per_query: Vec<f64>,
}

/// SLQ on `diag(scale/i^r)` with a fixed seed.
pub fn estimate_decay_json(
    n: usize,
    r: f64,
    scale: f64,
    m: usize,
    queries: usize,
    seed: u64,
) -> Result<String, String> {
    if n > 200_000 || queries > 100_000 {
        return Err("n and N are limited to keep the page responsive".into());
    }
    let a = generate_decay_spectrum(n, r, scale).map_err(|e| e.to_string())?;
    let res = slq_estimate(&a, &SlqConfig::new(m, queries, seed)).map_err(|e| e.to_string())?;
    let exact = exact_logdet(&a).map_err(|e| e.to_string())?;
    to_json(&EstimateView {
        estimate: res.estimate,
        exact,
        rel_err: ((res.estimate - exact) / exact).abs(),
        mvm_total: res.mvm_total,
        per_query: res.per_query,
    })
}

#[wasm_bindgen]
pub fn plan_curves(n: usize, r: f64, eta: f64) -> Result<String, JsValue> {
    plan_curves_json(n, r, eta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn ritz_nodes(case: u8, m: usize) -> Result<String, JsValue> {
    ritz_nodes_json(case, m).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn estimate_decay(
    n: usize,
    r: f64,
    scale: f64,
    m: usize,
    queries: usize,
    seed: u64,
) -> Result<String, JsValue> {
    estimate_decay_json(n, r, scale, m, queries, seed).map_err(|e| JsValue::from_str(&e))
}
