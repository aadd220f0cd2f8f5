//! Mean and population standard deviation per grid point.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::sweep::{fmt_f64, SweepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub failures: usize,
    /// `(mean, std)` per entry of [`Summary::columns`].
    pub stats: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub task: String,
    pub mode: String,
    /// Summarised column names.
    pub columns: Vec<String>,
    pub rows: Vec<SummaryRow>,
    /// Grid points dropped because every trial failed.
    pub warnings: Vec<String>,
}

/// `(mean, population std)`.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(result: &SweepResult) -> Summary {
    let with_wall = result.rows.iter().any(|r| r.wall_ms.is_some());
    let mut columns: Vec<String> = result.task.metric_columns().iter().map(|s| s.to_string()).collect();
    columns.extend(
        result
            .measure_columns()
            .into_iter()
            .filter(|c| with_wall || c != "wall_ms"),
    );

    let mut groups: BTreeMap<(usize, usize), Vec<&super::sweep::SweepRow>> = BTreeMap::new();
    for r in &result.rows {
        groups.entry((r.n, r.m)).or_default().push(r);
    }

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for ((n, m), group) in groups {
        let ok: Vec<_> = group.iter().filter(|r| !r.failed).collect();
        if ok.is_empty() {
            warnings.push(format!("n = {n}, m = {m}: every trial failed; omitted from the summary"));
            continue;
        }
        let values: Vec<Vec<f64>> = ok
            .iter()
            .map(|r| {
                let mut v = r.metrics.clone();
                v.push(r.prefill_tokens_total as f64);
                v.push(r.decode_tokens_total as f64);
                v.push(r.call_count as f64);
                v.extend(&r.latencies);
                if with_wall {
                    v.push(r.wall_ms.unwrap_or(f64::NAN));
                }
                v
            })
            .collect();
        let stats = (0..columns.len())
            .map(|j| mean_std(&values.iter().map(|v| v[j]).collect::<Vec<_>>()))
            .collect();
        rows.push(SummaryRow {
            n,
            m,
            k: group[0].k,
            trials: group.len(),
            failures: group.len() - ok.len(),
            stats,
        });
    }
    Summary {
        task: result.task.name().to_string(),
        mode: result.mode.name().to_string(),
        columns,
        rows,
        warnings,
    }
}

impl Summary {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["task", "mode", "n", "m", "k", "trials", "failures"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for c in &self.columns {
            h.push(format!("{c}_mean"));
            h.push(format!("{c}_std"));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                self.task.clone(),
                self.mode.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.k.to_string(),
                r.trials.to_string(),
                r.failures.to_string(),
            ];
            for &(mean, std) in &r.stats {
                rec.push(fmt_f64(mean));
                rec.push(fmt_f64(std));
            }
            out.write_record(rec)?;
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
