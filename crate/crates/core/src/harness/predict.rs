//! Closed-form cost and latency predictions on a sweep grid.

use std::io::Write;
use std::path::Path;

use super::config::SweepConfig;
use super::sweep::fmt_f64;
use crate::cost::{predict_optimal_m, subtask_cost_bound, Aggregation, Objective};
use crate::error::{Error, Result};
use crate::tasks::plan::subtask_count;
use crate::tasks::TaskKind;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Sequential waves, `ceil(k / p)`.
    pub depth: usize,
    pub cost_bound_sum: f64,
    pub latency_bound_p: f64,
    pub optimal_m_cost: usize,
    pub optimal_m_latency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub task: TaskKind,
    pub rows: Vec<PredictionRow>,
}

pub fn predict(config: &SweepConfig) -> Result<Prediction> {
    let model = config.cost.model();
    let task = config.task;
    let kind = task.decomposition();
    let l_dec = |m: usize| task.decode_len(m);
    // the aggregation call adds the same constant to every grid point
    let extra = if task == TaskKind::Rag { model.aggregation_call() } else { 0.0 };
    let grid = config.grid();

    let mut rows = Vec::with_capacity(grid.len());
    for &(n, m) in &grid {
        let k = subtask_count(n, m, kind)?;
        let mut candidates: Vec<usize> = if config.cost.grid.is_empty() {
            grid.iter().filter(|(gn, _)| *gn == n).map(|&(_, gm)| gm).collect()
        } else {
            config.cost.grid.clone()
        };
        candidates.retain(|&c| model.m_bar.is_none_or(|bar| c.min(n) <= bar));
        let (optimal_m_cost, _) = predict_optimal_m(n, &model, kind, l_dec, Objective::SumCost, &candidates)?;
        let (optimal_m_latency, _) =
            predict_optimal_m(n, &model, kind, l_dec, Objective::ParallelLatency, &candidates)?;
        rows.push(PredictionRow {
            n,
            m,
            k,
            depth: model.p.depth(k),
            cost_bound_sum: subtask_cost_bound(n, m, kind, l_dec, &model, Aggregation::Sum)? + extra,
            latency_bound_p: subtask_cost_bound(n, m, kind, l_dec, &model, Aggregation::Parallel)? + extra,
            optimal_m_cost,
            optimal_m_latency,
        });
    }
    Ok(Prediction { task, rows })
}

impl Prediction {
    pub const HEADER: [&'static str; 9] = [
        "task",
        "n",
        "m",
        "k",
        "depth",
        "cost_bound_sum",
        "latency_bound_p",
        "optimal_m_cost",
        "optimal_m_latency",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::HEADER)?;
        for r in &self.rows {
            out.write_record([
                self.task.name().to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.k.to_string(),
                r.depth.to_string(),
                fmt_f64(r.cost_bound_sum),
                fmt_f64(r.latency_bound_p),
                r.optimal_m_cost.to_string(),
                r.optimal_m_latency.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
