//! Seeded sweeps over `(n, m)` grids.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::backend::LlmBackend;
use crate::cost::{stage_latency, Parallelism};
use crate::error::{Error, Result};
use crate::graph::ExecutionTrace;
use crate::metrics;
use crate::seed;
use crate::tasks::counting::solve_counting;
use crate::tasks::merge::MergeMode;
use crate::tasks::plan::{plan_decomposition, DecompositionPlan};
use crate::tasks::rag::solve_rag;
use crate::tasks::retrieval::solve_retrieval;
use crate::tasks::sorting::{format_list, solve_sorting};
use crate::tasks::{generate_instance, Instance, TaskKind};

use super::config::{SweepConfig, SweepMode};

/// Salt separating the solver's seed from the instance generator's.
const SOLVE_SALT: u64 = 0x5017;

/// Largest tolerated fraction of failed trials.
pub const MAX_FAILURE_FRACTION: f64 = 0.5;

/// Result of solving one instance.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    /// Error metrics in the task's column order.
    pub metrics: Vec<f64>,
    /// Human-readable answer.
    pub answer: String,
    pub plan: DecompositionPlan,
    pub trace: ExecutionTrace,
}

/// Solves `instance` with sub-task size `m` and scores the answer.
pub fn evaluate_trial(
    instance: &Instance,
    m: usize,
    backend: &dyn LlmBackend,
    merge_mode: MergeMode,
    seed: u64,
) -> Result<TrialOutcome> {
    let solve_seed = seed::combine(seed, &[SOLVE_SALT]);
    Ok(match instance {
        Instance::Counting(inst) => {
            let s = solve_counting(inst, m, backend, solve_seed)?;
            let e = metrics::counting_errors(s.answer, inst.truth, inst.text.len())?;
            TrialOutcome {
                metrics: vec![e.absolute, e.normalized],
                answer: s.answer.to_string(),
                plan: s.plan,
                trace: s.trace,
            }
        }
        Instance::Sorting(inst) => {
            let s = solve_sorting(inst, m, backend, merge_mode, solve_seed)?;
            let e = metrics::sorting_errors(&s.answer, &inst.truth)?;
            TrialOutcome {
                metrics: vec![e.exact_match, e.non_monotonicity, e.length_mismatch, e.fuzzy_linf, e.fuzzy_l1],
                answer: format_list(&s.answer),
                plan: s.plan,
                trace: s.trace,
            }
        }
        Instance::Retrieval(inst) => {
            let s = solve_retrieval(inst, m, backend, solve_seed)?;
            TrialOutcome {
                metrics: vec![metrics::retrieval_error(&s.answer, &inst.truth)],
                answer: s.answer.to_string(),
                plan: s.plan,
                trace: s.trace,
            }
        }
        Instance::Rag(inst) => {
            let s = solve_rag(inst, m, backend, solve_seed)?;
            let e = metrics::rag_errors(&s.answer, &inst.truth)?;
            TrialOutcome {
                metrics: vec![e.exact_match, e.digit_fraction_wrong],
                answer: s.answer,
                plan: s.plan,
                trace: s.trace,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub failed: bool,
    pub note: String,
    /// Task metrics; empty for failed rows.
    pub metrics: Vec<f64>,
    pub prefill_tokens_total: u64,
    pub decode_tokens_total: u64,
    pub call_count: usize,
    /// One simulated latency per [`SweepResult::latency_degrees`] entry.
    pub latencies: Vec<f64>,
    /// Wall-clock time of the solve; only measured for non-mock backends.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub task: TaskKind,
    pub mode: SweepMode,
    pub latency_degrees: Vec<Parallelism>,
    /// Sorted by `(n, m, trial)`.
    pub rows: Vec<SweepRow>,
}

pub fn latency_column(p: Parallelism) -> String {
    match p {
        Parallelism::Finite(1) => "latency_sequential".into(),
        Parallelism::Unbounded => "latency_inf".into(),
        Parallelism::Finite(p) => format!("latency_p{p}"),
    }
}

/// Floats in the shortest form that reads back exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    x.to_string()
}

impl SweepResult {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["task", "mode", "n", "m", "k", "trial", "seed", "failed", "note"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.task.metric_columns().iter().map(|s| s.to_string()));
        h.extend(self.measure_columns());
        h
    }

    /// Numeric non-metric columns.
    pub fn measure_columns(&self) -> Vec<String> {
        let mut h: Vec<String> = ["prefill_tokens_total", "decode_tokens_total", "call_count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.latency_degrees.iter().map(|&p| latency_column(p)));
        h.push("wall_ms".into());
        h
    }

    fn record(&self, r: &SweepRow) -> Vec<String> {
        let mut rec = vec![
            self.task.name().to_string(),
            self.mode.name().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            u8::from(r.failed).to_string(),
            r.note.clone(),
        ];
        let width = self.task.metric_columns().len() + 3 + self.latency_degrees.len();
        if r.failed {
            rec.extend(std::iter::repeat_n(String::new(), width));
        } else {
            rec.extend(r.metrics.iter().map(|&x| fmt_f64(x)));
            rec.push(r.prefill_tokens_total.to_string());
            rec.push(r.decode_tokens_total.to_string());
            rec.push(r.call_count.to_string());
            rec.extend(r.latencies.iter().map(|&x| fmt_f64(x)));
        }
        rec.push(r.wall_ms.map(fmt_f64).unwrap_or_default());
        rec
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.rows {
            out.write_record(self.record(r))?;
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

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }

    /// Fails when more than half of the trials failed.
    pub fn check_failures(&self) -> Result<()> {
        let failed = self.failures();
        let total = self.rows.len();
        if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
            return Err(Error::TooManyFailures { failed, total });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Write every generated instance here.
    pub dump_instances: Option<PathBuf>,
}

pub fn instance_file_name(task: TaskKind, n: usize, m: usize, trial: usize) -> String {
    format!("{task}-n{n}-m{m}-t{trial}.instance")
}

fn run_point(
    config: &SweepConfig,
    backend: &dyn LlmBackend,
    options: &SweepOptions,
    degrees: &[Parallelism],
    (n, m, trial): (usize, usize, usize),
) -> Result<SweepRow> {
    let seed = seed::trial_seed(config.seed, n, m, trial);
    let plan = plan_decomposition(n, m, config.task.decomposition())?;
    let instance = generate_instance(config.task, n, seed, &config.instance_options())?;
    if let Some(dir) = &options.dump_instances {
        let path = dir.join(instance_file_name(config.task, n, m, trial));
        std::fs::write(&path, instance.to_file_string()).map_err(|e| Error::io(&path, e))?;
    }
    let mut row = SweepRow {
        n,
        m,
        k: plan.k,
        trial,
        seed,
        failed: false,
        note: plan.note.clone().unwrap_or_default(),
        metrics: Vec::new(),
        prefill_tokens_total: 0,
        decode_tokens_total: 0,
        call_count: 0,
        latencies: Vec::new(),
        wall_ms: None,
    };
    let start = Instant::now();
    match evaluate_trial(&instance, m, backend, config.merge_mode, seed) {
        Ok(outcome) => {
            if !config.is_mock() {
                row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            row.metrics = outcome.metrics;
            row.prefill_tokens_total = outcome.trace.prompt_tokens_total();
            row.decode_tokens_total = outcome.trace.completion_tokens_total();
            row.call_count = outcome.trace.exchanges.len();
            row.latencies = degrees.iter().map(|&p| stage_latency(&outcome.trace, p)).collect();
        }
        Err(e) if e.is_backend() => {
            row.failed = true;
            row.note = if row.note.is_empty() {
                e.to_string()
            } else {
                format!("{}; {e}", row.note)
            };
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Runs every trial of the sweep, flagging trials whose backend failed.
/// Does not apply the failure threshold; see [`run_sweep`].
pub fn execute_sweep(config: &SweepConfig, backend: &dyn LlmBackend, options: &SweepOptions) -> Result<SweepResult> {
    config.validate()?;
    if let Some(dir) = &options.dump_instances {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let degrees = config.latency_degrees();
    let jobs: Vec<(usize, usize, usize)> = config
        .grid()
        .into_iter()
        .flat_map(|(n, m)| (0..config.trials).map(move |t| (n, m, t)))
        .collect();
    let run = |job: &(usize, usize, usize)| run_point(config, backend, options, &degrees, *job);

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<SweepRow>> = {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = config.workers {
            builder = builder.num_threads(w);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<SweepRow>> = jobs.iter().map(run).collect();

    let mut rows = rows?;
    rows.sort_by_key(|r| (r.n, r.m, r.trial));
    Ok(SweepResult {
        task: config.task,
        mode: config.mode,
        latency_degrees: degrees,
        rows,
    })
}

/// [`execute_sweep`] followed by the failure threshold check.
pub fn run_sweep(config: &SweepConfig, backend: &dyn LlmBackend, options: &SweepOptions) -> Result<SweepResult> {
    let result = execute_sweep(config, backend, options)?;
    result.check_failures()?;
    Ok(result)
}
