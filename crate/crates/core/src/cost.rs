//! Cost model: per-call prefill/decode costs, latency under a bounded degree
//! of parallelism, closed-form sub-task bounds and optimal sub-task size.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::ExecutionTrace;
use crate::tasks::plan::{subtask_count, DecompositionKind};

/// Prefill and decode cost as functions of prompt length `l_pre` and
/// generated length `l_dec`, both in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostFunctions {
    /// Price per token: `c_pre * l_pre` and `c_dec * l_dec`.
    LinearApi { c_pre: f64, c_dec: f64 },
    /// Memory-bound latency: constant prefill, decode proportional to `l_dec`.
    MemoryBoundLatency { c_call: f64, c_dec: f64 },
    /// Compute-bound latency growing linearly in both lengths.
    ComputeBoundLinear { c_pre: f64, c_dec: f64 },
    /// Full-attention FLOPs: `c_pre * l_pre^2` and
    /// `c_dec * l_dec * (l_pre + l_dec)^2`.
    QuadraticFlops { c_pre: f64, c_dec: f64 },
}

impl Default for CostFunctions {
    fn default() -> Self {
        CostFunctions::ComputeBoundLinear { c_pre: 1.0, c_dec: 1.0 }
    }
}

impl CostFunctions {
    pub fn cost_pre(&self, l_pre: f64) -> f64 {
        match *self {
            CostFunctions::LinearApi { c_pre, .. } | CostFunctions::ComputeBoundLinear { c_pre, .. } => {
                c_pre * l_pre
            }
            CostFunctions::MemoryBoundLatency { c_call, .. } => c_call,
            CostFunctions::QuadraticFlops { c_pre, .. } => c_pre * l_pre * l_pre,
        }
    }

    pub fn cost_dec(&self, l_pre: f64, l_dec: f64) -> f64 {
        match *self {
            CostFunctions::LinearApi { c_dec, .. }
            | CostFunctions::ComputeBoundLinear { c_dec, .. }
            | CostFunctions::MemoryBoundLatency { c_dec, .. } => c_dec * l_dec,
            CostFunctions::QuadraticFlops { c_dec, .. } => {
                let ctx = l_pre + l_dec;
                c_dec * l_dec * ctx * ctx
            }
        }
    }

    /// Upper bound on the cost of one call: prefill plus decode.
    pub fn cost_single_call(&self, l_pre: f64, l_dec: f64) -> f64 {
        self.cost_pre(l_pre) + self.cost_dec(l_pre, l_dec)
    }

    pub fn validate(&self) -> Result<()> {
        let constants = match *self {
            CostFunctions::LinearApi { c_pre, c_dec }
            | CostFunctions::ComputeBoundLinear { c_pre, c_dec }
            | CostFunctions::QuadraticFlops { c_pre, c_dec } => [c_pre, c_dec],
            CostFunctions::MemoryBoundLatency { c_call, c_dec } => [c_call, c_dec],
        };
        if constants.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!("cost constants must be finite and nonnegative: {self:?}")))
        }
    }
}

pub fn cost_single_call(l_pre: f64, l_dec: f64, f: &CostFunctions) -> f64 {
    f.cost_single_call(l_pre, l_dec)
}

/// Maximum number of simultaneous LLM calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parallelism {
    Finite(usize),
    Unbounded,
}

impl Parallelism {
    pub const SEQUENTIAL: Parallelism = Parallelism::Finite(1);

    /// Number of sequential waves needed for `k` calls, `ceil(k / p)`.
    pub fn depth(&self, k: usize) -> usize {
        match *self {
            Parallelism::Finite(p) => k.div_ceil(p.max(1)),
            Parallelism::Unbounded => usize::from(k > 0),
        }
    }

    /// Column-name suffix: `4` or `inf`.
    pub fn label(&self) -> String {
        match self {
            Parallelism::Finite(p) => p.to_string(),
            Parallelism::Unbounded => "inf".into(),
        }
    }
}

impl fmt::Display for Parallelism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Parallelism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "unbounded" => Ok(Parallelism::Unbounded),
            other => match other.parse::<usize>() {
                Ok(p) if p >= 1 => Ok(Parallelism::Finite(p)),
                _ => Err(Error::invalid(format!("parallelism must be >= 1 or \"inf\", got `{other}`"))),
            },
        }
    }
}

impl Serialize for Parallelism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Parallelism::Finite(p) => s.serialize_u64(*p as u64),
            Parallelism::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Parallelism {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(v) => v.to_string().parse(),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// End-to-end latency of independent calls under ideal parallelism.
///
/// Calls are taken in order and split into `ceil(k / p)` consecutive groups of
/// `p`; each group costs its slowest member.
pub fn latency_parallel(latencies: &[f64], p: Parallelism) -> f64 {
    match p {
        Parallelism::Unbounded => latencies.iter().copied().fold(0.0, f64::max),
        Parallelism::Finite(p) => latencies
            .chunks(p.max(1))
            .map(|g| g.iter().copied().fold(0.0, f64::max))
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub functions: CostFunctions,
    /// Upper bound on the system-prompt length, in tokens.
    pub l_sys: u64,
    pub p: Parallelism,
    /// Largest sub-task size fitting the context window.
    pub m_bar: Option<usize>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            functions: CostFunctions::default(),
            l_sys: 0,
            p: Parallelism::Finite(4),
            m_bar: None,
        }
    }
}

impl CostModel {
    /// Bound on one sub-task call of size `m` generating `l_dec` tokens.
    pub fn per_call(&self, m: usize, l_dec: f64) -> f64 {
        let l_pre = self.l_sys as f64 + m as f64;
        self.functions.cost_single_call(l_pre, l_dec)
    }

    /// Bound on an aggregation call whose prompt carries O(1) extra tokens.
    pub fn aggregation_call(&self) -> f64 {
        self.functions.cost_single_call(self.l_sys as f64 + 1.0, 1.0)
    }

    /// Cost per unit of input size, `per_call(m) / m`; multiplied by `n` this
    /// is the sum-of-costs bound with `k = n / m`.
    pub fn per_unit_size(&self, m: usize, l_dec: f64) -> f64 {
        self.per_call(m, l_dec) / m as f64
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::invalid("sub-task size m must be >= 1"));
        }
        if let Some(bar) = self.m_bar {
            if m > bar {
                return Err(Error::invalid(format!("sub-task size m = {m} exceeds m_bar = {bar}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// All calls add up (API charges, sequential latency).
    Sum,
    /// Calls run in waves of `p` (latency under parallelism).
    Parallel,
}

/// Bound on the cost of all sub-task calls for input size `n` and sub-task
/// size `m`, with `k` given by the decomposition rule.
pub fn subtask_cost_bound<F>(
    n: usize,
    m: usize,
    kind: DecompositionKind,
    l_dec_of_m: F,
    model: &CostModel,
    aggregation: Aggregation,
) -> Result<f64>
where
    F: Fn(usize) -> f64,
{
    model.check_m(m)?;
    let m_eff = m.min(n.max(1));
    let k = subtask_count(n, m, kind)?;
    let per_call = model.per_call(m_eff, l_dec_of_m(m_eff));
    let multiplier = match aggregation {
        Aggregation::Sum => k,
        Aggregation::Parallel => model.p.depth(k),
    };
    Ok(multiplier as f64 * per_call)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    SumCost,
    ParallelLatency,
}

/// Grid argmin of the sub-task bound; ties go to the larger `m`.
pub fn predict_optimal_m<F>(
    n: usize,
    model: &CostModel,
    kind: DecompositionKind,
    l_dec_of_m: F,
    objective: Objective,
    grid: &[usize],
) -> Result<(usize, f64)>
where
    F: Fn(usize) -> f64,
{
    if grid.is_empty() {
        return Err(Error::invalid("empty grid of candidate sub-task sizes"));
    }
    let aggregation = match objective {
        Objective::SumCost => Aggregation::Sum,
        Objective::ParallelLatency => Aggregation::Parallel,
    };
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(usize, f64)> = None;
    for m in sorted {
        let value = subtask_cost_bound(n, m, kind, &l_dec_of_m, model, aggregation)?;
        if best.is_none_or(|(_, b)| value <= b) {
            best = Some((m, value));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Token totals and simulated latencies of one execution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostReport {
    pub prefill_tokens_total: u64,
    pub decode_tokens_total: u64,
    pub call_count: usize,
    pub latency_sequential: f64,
    pub latency_parallel_p: f64,
    pub latency_parallel_inf: f64,
}

/// Latency of a trace at parallelism `p`: calls are grouped into waves only
/// within a stage, and stages run one after another.
pub fn stage_latency(trace: &ExecutionTrace, p: Parallelism) -> f64 {
    trace
        .by_stage()
        .iter()
        .map(|(_, exchanges)| {
            let lat: Vec<f64> = exchanges.iter().map(|e| e.latency_ms).collect();
            latency_parallel(&lat, p)
        })
        .sum()
}

pub fn trace_costs(trace: &ExecutionTrace, model: &CostModel) -> CostReport {
    CostReport {
        prefill_tokens_total: trace.prompt_tokens_total(),
        decode_tokens_total: trace.completion_tokens_total(),
        call_count: trace.exchanges.len(),
        latency_sequential: stage_latency(trace, Parallelism::SEQUENTIAL),
        latency_parallel_p: stage_latency(trace, model.p),
        latency_parallel_inf: stage_latency(trace, Parallelism::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::backend::ChatExchange;
    use crate::graph::NodeId;

    fn linear(c_pre: f64, c_dec: f64) -> CostFunctions {
        CostFunctions::LinearApi { c_pre, c_dec }
    }

    #[test]
    fn single_call_examples() {
        assert!((cost_single_call(1000.0, 200.0, &linear(0.01, 0.03)) - 16.0).abs() < 1e-12);
        assert_eq!(cost_single_call(0.0, 0.0, &linear(2.0, 3.0)), 0.0);
        assert_eq!(cost_single_call(0.0, 0.0, &CostFunctions::QuadraticFlops { c_pre: 1.0, c_dec: 1.0 }), 0.0);
        let quad = CostFunctions::QuadraticFlops { c_pre: 1.0, c_dec: 1.0 };
        assert_eq!(cost_single_call(10.0, 0.0, &quad), 100.0);
        let mem = CostFunctions::MemoryBoundLatency { c_call: 5.0, c_dec: 2.0 };
        assert_eq!(mem.cost_single_call(1e6, 3.0), 11.0);
    }

    #[test]
    fn parallel_latency_examples() {
        let x = [5.0, 7.0, 3.0];
        assert_eq!(latency_parallel(&x, Parallelism::Unbounded), 7.0);
        assert_eq!(latency_parallel(&x, Parallelism::SEQUENTIAL), 15.0);
        assert_eq!(latency_parallel(&[4.0, 9.0, 2.0, 6.0, 5.0], Parallelism::Finite(2)), 20.0);
        assert_eq!(latency_parallel(&[], Parallelism::Finite(3)), 0.0);
        assert_eq!(latency_parallel(&[], Parallelism::Unbounded), 0.0);
    }

    #[test]
    fn parallelism_parses() {
        assert_eq!("inf".parse::<Parallelism>().unwrap(), Parallelism::Unbounded);
        assert_eq!("4".parse::<Parallelism>().unwrap(), Parallelism::Finite(4));
        assert!("0".parse::<Parallelism>().is_err());
        #[derive(Deserialize)]
        struct W {
            p: Parallelism,
            q: Parallelism,
        }
        let w: W = toml::from_str("p = 8\nq = \"inf\"").unwrap();
        assert_eq!((w.p, w.q), (Parallelism::Finite(8), Parallelism::Unbounded));
    }

    #[test]
    fn single_call_decomposition_equals_one_call() {
        let model = CostModel {
            functions: linear(1.0, 2.0),
            l_sys: 30,
            ..CostModel::default()
        };
        let b = subtask_cost_bound(200, 200, DecompositionKind::Disjoint, |_| 5.0, &model, Aggregation::Sum).unwrap();
        assert_eq!(b, cost_single_call(230.0, 5.0, &model.functions));
    }

    #[test]
    fn quadratic_per_unit_bound_at_l_sys() {
        let model = CostModel {
            functions: CostFunctions::QuadraticFlops { c_pre: 1.0, c_dec: 0.0 },
            l_sys: 100,
            ..CostModel::default()
        };
        assert_eq!(model.per_unit_size(100, 0.0), 400.0);
        let (m, _) = predict_optimal_m(
            400,
            &model,
            DecompositionKind::Disjoint,
            |_| 0.0,
            Objective::SumCost,
            &[25, 50, 100, 200, 400],
        )
        .unwrap();
        assert_eq!(m, 100);
    }

    #[test]
    fn parallel_bound_is_depth_times_m() {
        let model = CostModel {
            functions: CostFunctions::ComputeBoundLinear { c_pre: 1.0, c_dec: 0.0 },
            l_sys: 0,
            p: Parallelism::Finite(4),
            m_bar: None,
        };
        let b = subtask_cost_bound(200, 10, DecompositionKind::Disjoint, |m| m as f64, &model, Aggregation::Parallel)
            .unwrap();
        assert_eq!(b, 50.0);
    }

    #[test]
    fn m_above_m_bar_and_empty_grid_are_errors() {
        let model = CostModel {
            m_bar: Some(100),
            ..CostModel::default()
        };
        assert!(subtask_cost_bound(500, 200, DecompositionKind::Disjoint, |_| 1.0, &model, Aggregation::Sum).is_err());
        assert!(predict_optimal_m(500, &model, DecompositionKind::Disjoint, |_| 1.0, Objective::SumCost, &[]).is_err());
    }

    #[test]
    fn ties_go_to_larger_m() {
        let model = CostModel {
            functions: CostFunctions::MemoryBoundLatency { c_call: 1.0, c_dec: 0.0 },
            p: Parallelism::Unbounded,
            ..CostModel::default()
        };
        let (m, v) =
            predict_optimal_m(100, &model, DecompositionKind::Disjoint, |_| 1.0, Objective::ParallelLatency, &[10, 50, 20])
                .unwrap();
        assert_eq!((m, v), (50, 1.0));
    }

    fn exchange(node: u32, pre: u64, dec: u64, latency: f64) -> ChatExchange {
        ChatExchange {
            node_id: Some(NodeId(node)),
            prompt_text: String::new(),
            response_text: String::new(),
            prompt_tokens: pre,
            completion_tokens: dec,
            latency_ms: latency,
        }
    }

    #[test]
    fn trace_cost_examples() {
        let model = CostModel::default();
        assert_eq!(trace_costs(&ExecutionTrace::default(), &model), CostReport::default());

        let mut t = ExecutionTrace::default();
        for i in 1..=2 {
            t.exchanges.push(exchange(i, 100, 10, 1.0));
            t.stages.insert(NodeId(i), "subtask".into());
        }
        let r = trace_costs(&t, &model);
        assert_eq!((r.prefill_tokens_total, r.decode_tokens_total, r.call_count), (200, 20, 2));

        let mut t = ExecutionTrace::default();
        for i in 1..=8 {
            t.exchanges.push(exchange(i, 1, 1, 10.0));
            t.stages.insert(NodeId(i), "subtask".into());
        }
        let r = trace_costs(&t, &model);
        assert_eq!(r.latency_parallel_p, 20.0);
        assert_eq!(r.latency_sequential, 80.0);
        assert_eq!(r.latency_parallel_inf, 10.0);

        // aggregation stage runs after the sub-task waves
        t.exchanges.push(exchange(9, 1, 1, 3.0));
        t.stages.insert(NodeId(9), "aggregate".into());
        let r = trace_costs(&t, &model);
        assert_eq!((r.latency_parallel_p, r.latency_parallel_inf), (23.0, 13.0));
    }

    proptest! {
        #[test]
        fn latency_parallel_bounds(x in proptest::collection::vec(0.0f64..1e3, 0..40), p in 1usize..10) {
            let sum: f64 = x.iter().sum();
            let max = x.iter().copied().fold(0.0, f64::max);
            let lp = latency_parallel(&x, Parallelism::Finite(p));
            prop_assert!(lp <= sum * (1.0 + 1e-12) + 1e-12);
            prop_assert!(lp >= max);
            prop_assert_eq!(latency_parallel(&x, Parallelism::Finite(x.len().max(1))), max);
        }

        #[test]
        fn linear_sum_bound_is_nonincreasing_on_divisors(n in 1usize..400, l_sys in 0u64..500) {
            let model = CostModel { functions: linear(1.0, 1.0), l_sys, ..CostModel::default() };
            let divisors: Vec<usize> = (1..=n).filter(|d| n % d == 0).collect();
            let vals: Vec<f64> = divisors
                .iter()
                .map(|&m| subtask_cost_bound(n, m, DecompositionKind::Disjoint, |_| 1.0, &model, Aggregation::Sum).unwrap())
                .collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }

        #[test]
        fn quadratic_bound_minimised_at_l_sys(l_sys in 1u64..300) {
            let model = CostModel {
                functions: CostFunctions::QuadraticFlops { c_pre: 1.0, c_dec: 0.0 },
                l_sys,
                ..CostModel::default()
            };
            let at = model.per_unit_size(l_sys as usize, 0.0);
            prop_assert!((at - 4.0 * l_sys as f64).abs() < 1e-9);
            for m in [1, l_sys as usize / 2 + 1, l_sys as usize + 1, 2 * l_sys as usize + 3] {
                if m != l_sys as usize {
                    prop_assert!(model.per_unit_size(m, 0.0) > at);
                }
            }
        }
    }
}
