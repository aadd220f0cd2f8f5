//! Browser demo: predicted cost and latency curves, chunk layouts, and a
//! Monte-Carlo error curve for the retrieval solvers on the mock backend.
//!
//! Every export takes plain numbers or JSON strings and returns JSON. The
//! `*_json` functions hold the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use algograph::backend::{MockBackend, MockProfile};
use algograph::cost::{subtask_cost_bound, Aggregation, CostFunctions, CostModel};
use algograph::metrics;
use algograph::seed::trial_seed;
use algograph::tasks::instance::{generate_haystack, generate_rag, longest_needle};
use algograph::tasks::plan::{plan_decomposition, DecompositionKind};
use algograph::tasks::rag::solve_rag;
use algograph::tasks::retrieval::solve_retrieval;
use algograph::tasks::{InstanceOptions, TaskKind};

/// Largest number of grid points in a cost curve.
const MAX_POINTS: usize = 400;
const MAX_N: usize = 1_000_000;
const MAX_TRIALS: usize = 500;

#[derive(Debug, Serialize)]
struct CurvePoint {
    m: usize,
    k: usize,
    depth: usize,
    cost: f64,
    latency: f64,
}

#[derive(Debug, Serialize)]
struct Best {
    m: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct Curve {
    decomposition: &'static str,
    points: Vec<CurvePoint>,
    best_cost: Best,
    best_latency: Best,
}

fn parse_task(task: &str) -> Result<TaskKind, String> {
    task.parse().map_err(|e: algograph::Error| e.to_string())
}

fn decomposition_name(kind: DecompositionKind) -> &'static str {
    match kind {
        DecompositionKind::Disjoint => "disjoint",
        DecompositionKind::OverlappingHalf => "overlapping",
    }
}

/// Candidate sub-task sizes: every `m` for small `n`, an even stride
/// otherwise, plus `n` itself. Overlapping plans use even sizes only.
fn size_grid(n: usize, kind: DecompositionKind) -> Vec<usize> {
    let step = n.div_ceil(MAX_POINTS).max(1);
    let mut grid: Vec<usize> = (1..=n / step).map(|i| i * step).chain([n]).collect();
    if kind == DecompositionKind::OverlappingHalf {
        grid = grid.into_iter().map(|m| m + m % 2).filter(|&m| m >= 2 && m <= n).collect();
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

pub fn cost_curve_json(task: &str, n: usize, p: &str, l_sys: u64, functions: &str) -> Result<String, String> {
    let task = parse_task(task)?;
    if n == 0 || n > MAX_N {
        return Err(format!("n must be in 1..={MAX_N}"));
    }
    let functions: CostFunctions = serde_json::from_str(functions).map_err(|e| e.to_string())?;
    functions.validate().map_err(|e| e.to_string())?;
    let model = CostModel {
        functions,
        l_sys,
        p: p.parse().map_err(|e: algograph::Error| e.to_string())?,
        m_bar: None,
    };
    let kind = task.decomposition();
    let grid = size_grid(n, kind);
    if grid.is_empty() {
        return Err(format!("no valid sub-task size for n = {n}"));
    }
    // RAG pays one aggregation call on top of the sub-tasks
    let extra = if task == TaskKind::Rag { model.aggregation_call() } else { 0.0 };
    let mut points = Vec::with_capacity(grid.len());
    for m in grid {
        let plan = plan_decomposition(n, m, kind).map_err(|e| e.to_string())?;
        let bound = |agg| subtask_cost_bound(n, m, kind, |m| task.decode_len(m), &model, agg).map_err(|e| e.to_string());
        points.push(CurvePoint {
            m,
            k: plan.k,
            depth: model.p.depth(plan.k),
            cost: bound(Aggregation::Sum)? + extra,
            latency: bound(Aggregation::Parallel)? + extra,
        });
    }
    // ties go to the larger m
    let best = |f: fn(&CurvePoint) -> f64| {
        let p = points.iter().rev().min_by(|a, b| f(a).total_cmp(&f(b))).expect("non-empty");
        Best { m: p.m, value: f(p) }
    };
    let curve = Curve {
        decomposition: decomposition_name(kind),
        best_cost: best(|p| p.cost),
        best_latency: best(|p| p.latency),
        points,
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Layout {
    decomposition: &'static str,
    n: usize,
    m: usize,
    k: usize,
    note: Option<String>,
    segments: Vec<[usize; 2]>,
}

pub fn chunk_plan_json(n: usize, m: usize, overlapping: bool) -> Result<String, String> {
    if n > MAX_N {
        return Err(format!("n must be at most {MAX_N}"));
    }
    let kind = if overlapping {
        DecompositionKind::OverlappingHalf
    } else {
        DecompositionKind::Disjoint
    };
    let plan = plan_decomposition(n, m, kind).map_err(|e| e.to_string())?;
    let layout = Layout {
        decomposition: decomposition_name(kind),
        n: plan.n,
        m: plan.m,
        k: plan.k,
        note: plan.note.clone(),
        segments: plan.segments.iter().map(|s| [s.start, s.len]).collect(),
    };
    serde_json::to_string(&layout).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct ErrorPoint {
    m: usize,
    k: usize,
    mean: f64,
    std_err: f64,
}

pub fn error_curve_json(task: &str, n: usize, grid: &str, profile: &str, trials: usize, seed: u64) -> Result<String, String> {
    let task = parse_task(task)?;
    if !matches!(task, TaskKind::Retrieval | TaskKind::Rag) {
        return Err("error curves are available for retrieval and rag".into());
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let grid: Vec<usize> = serde_json::from_str(grid).map_err(|e| e.to_string())?;
    let profile = MockProfile::builtin(profile).ok_or_else(|| format!("unknown mock profile `{profile}`"))?;
    let mock = MockBackend::new(profile);
    let min_m = 2 * longest_needle(task);
    let mut points = Vec::with_capacity(grid.len());
    for m in grid {
        if m < min_m || m > n {
            return Err(format!("m = {m} must be in {min_m}..={n}"));
        }
        let mut errors = Vec::with_capacity(trials);
        let mut k = 0;
        for t in 0..trials {
            let s = trial_seed(seed, n, m, t);
            let e = match task {
                TaskKind::Retrieval => {
                    let inst = generate_haystack(n, s, &InstanceOptions::default()).map_err(|e| e.to_string())?;
                    let sol = solve_retrieval(&inst, m, &mock, s).map_err(|e| e.to_string())?;
                    k = sol.plan.k;
                    metrics::retrieval_error(&sol.answer, &inst.truth)
                }
                _ => {
                    let inst = generate_rag(n, s).map_err(|e| e.to_string())?;
                    let sol = solve_rag(&inst, m, &mock, s).map_err(|e| e.to_string())?;
                    k = sol.plan.k;
                    metrics::rag_errors(&sol.answer, &inst.truth)
                        .map_err(|e| e.to_string())?
                        .digit_fraction_wrong
                }
            };
            errors.push(e);
        }
        let mean = errors.iter().sum::<f64>() / trials as f64;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / trials as f64;
        points.push(ErrorPoint {
            m,
            k,
            mean,
            std_err: (var / trials as f64).sqrt(),
        });
    }
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Predicted cost and latency for every candidate sub-task size.
/// `functions` is a JSON cost-function object such as
/// `{"kind":"compute-bound-linear","c_pre":1,"c_dec":1}`; `p` is an integer
/// or `"inf"`.
#[wasm_bindgen]
pub fn cost_curve(task: &str, n: usize, p: &str, l_sys: u64, functions: &str) -> Result<String, JsError> {
    js(cost_curve_json(task, n, p, l_sys, functions))
}

/// Segment layout of a decomposition as `[start, len]` pairs.
#[wasm_bindgen]
pub fn chunk_plan(n: usize, m: usize, overlapping: bool) -> Result<String, JsError> {
    js(chunk_plan_json(n, m, overlapping))
}

/// Mean error and standard error per sub-task size, from `trials` mock runs.
/// `grid` is a JSON array of sizes.
#[wasm_bindgen]
pub fn error_curve(task: &str, n: usize, grid: &str, profile: &str, trials: usize, seed: u64) -> Result<String, JsError> {
    js(error_curve_json(task, n, grid, profile, trials, seed))
}

/// Names of the built-in mock profiles.
#[wasm_bindgen]
pub fn mock_profiles() -> String {
    serde_json::to_string(&MockProfile::BUILTIN).expect("string array")
}
