//! Splitting an input of size `n` into sub-tasks of size `m`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    /// Consecutive, non-overlapping segments of length `m`.
    Disjoint,
    /// Segments of length `m` starting every `m / 2`, so adjacent chunks share
    /// half their length.
    OverlappingHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionPlan {
    pub kind: DecompositionKind,
    pub n: usize,
    /// Effective sub-task size after clamping to `n` and rounding to even.
    pub m: usize,
    pub k: usize,
    pub segments: Vec<Segment>,
    /// Set when the requested `m` had to be adjusted.
    pub note: Option<String>,
}

impl DecompositionPlan {
    /// Slices an ASCII string along the plan.
    pub fn split_str<'a>(&self, s: &'a str) -> Vec<&'a str> {
        self.segments.iter().map(|seg| &s[seg.range()]).collect()
    }

    pub fn split_slice<'a, T>(&self, xs: &'a [T]) -> Vec<&'a [T]> {
        self.segments.iter().map(|seg| &xs[seg.range()]).collect()
    }

    /// Overlap between consecutive segments, zero for a single segment.
    pub fn overlap(&self) -> usize {
        self.segments
            .windows(2)
            .map(|w| (w[0].start + w[0].len).saturating_sub(w[1].start))
            .min()
            .unwrap_or(0)
    }
}

fn effective_m(n: usize, m: usize, kind: DecompositionKind) -> Result<(usize, Option<String>)> {
    if n == 0 {
        return Err(Error::invalid("input size n must be >= 1"));
    }
    if m == 0 {
        return Err(Error::invalid("sub-task size m must be >= 1"));
    }
    if m >= n {
        let note = (m > n).then(|| format!("m = {m} exceeds n = {n}; using a single segment"));
        return Ok((n, note));
    }
    match kind {
        DecompositionKind::Disjoint => Ok((m, None)),
        DecompositionKind::OverlappingHalf if m.is_multiple_of(2) => Ok((m, None)),
        DecompositionKind::OverlappingHalf if m == 1 => {
            Err(Error::invalid("overlapping chunks need m >= 2"))
        }
        DecompositionKind::OverlappingHalf => Ok((m - 1, Some(format!("odd m = {m} rounded down to {}", m - 1)))),
    }
}

/// Number of sub-tasks: `ceil(n / m)` for disjoint segments and
/// `ceil(2n / m - 1)` for half-overlapping chunks.
pub fn subtask_count(n: usize, m: usize, kind: DecompositionKind) -> Result<usize> {
    let (m, _) = effective_m(n, m, kind)?;
    Ok(match kind {
        _ if m == n => 1,
        DecompositionKind::Disjoint => n.div_ceil(m),
        DecompositionKind::OverlappingHalf => (2 * n - 1) / m,
    })
}

pub fn plan_decomposition(n: usize, m: usize, kind: DecompositionKind) -> Result<DecompositionPlan> {
    let (m_eff, note) = effective_m(n, m, kind)?;
    let k = subtask_count(n, m_eff, kind)?;
    let stride = match kind {
        _ if k == 1 => m_eff,
        DecompositionKind::Disjoint => m_eff,
        DecompositionKind::OverlappingHalf => m_eff / 2,
    };
    let segments = (0..k)
        .map(|j| {
            let start = j * stride;
            Segment {
                start,
                len: m_eff.min(n - start),
            }
        })
        .collect();
    Ok(DecompositionPlan {
        kind,
        n,
        m: m_eff,
        k,
        segments,
        note,
    })
}
