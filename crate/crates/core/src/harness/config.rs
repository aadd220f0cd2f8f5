//! Sweep configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! task = "counting"          # counting | sorting | retrieval | rag
//! mode = "vary-m"            # vary-m (fixed n) | vary-n (m = n)
//! n = 200
//! m_values = [10, 20, 40, 50, 67, 100, 200]
//! trials = 10
//! seed = 1
//!
//! [backend]
//! kind = "mock"              # or "http" with url and model
//! profile = "default"        # built-in name or a key of [profiles]
//!
//! [cost]
//! l_sys = 0
//! p = 4                      # or "inf"
//! extra_p = [8]
//! [cost.functions]
//! kind = "compute-bound-linear"
//! c_pre = 1.0
//! c_dec = 0.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{LlmBackend, MockBackend, MockProfile};
use crate::cost::{CostFunctions, CostModel, Parallelism};
use crate::error::{Error, Result};
use crate::tasks::instance::{longest_needle, min_size};
use crate::tasks::merge::MergeMode;
use crate::tasks::{InstanceOptions, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Vary the problem size with a single call per instance (`m = n`).
    VaryN,
    /// Fix `n` and vary the sub-task size.
    VaryM,
}

impl SweepMode {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::VaryN => "vary-n",
            SweepMode::VaryM => "vary-m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSpec {
    Mock {
        #[serde(default = "default_profile")]
        profile: String,
    },
    Http {
        url: String,
        #[serde(default = "default_model")]
        model: String,
        #[serde(default)]
        max_in_flight: Option<usize>,
    },
}

fn default_profile() -> String {
    "exact".into()
}

fn default_model() -> String {
    "default".into()
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Mock {
            profile: default_profile(),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = Error;

    /// `mock:<profile>` or `http:<url>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("mock", profile)) if !profile.is_empty() => Ok(BackendSpec::Mock {
                profile: profile.to_string(),
            }),
            Some(("http", url)) if !url.is_empty() => Ok(BackendSpec::Http {
                url: url.to_string(),
                model: default_model(),
                max_in_flight: None,
            }),
            _ => Err(Error::invalid(format!("backend `{s}` is not mock:<profile> or http:<url>"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    #[serde(default)]
    pub functions: CostFunctions,
    #[serde(default)]
    pub l_sys: u64,
    #[serde(default = "default_p")]
    pub p: Parallelism,
    /// Extra parallelism degrees for simulated-latency columns.
    #[serde(default)]
    pub extra_p: Vec<Parallelism>,
    #[serde(default)]
    pub m_bar: Option<usize>,
    /// Candidate sizes for optimal-m prediction; defaults to the sweep grid.
    #[serde(default)]
    pub grid: Vec<usize>,
}

fn default_p() -> Parallelism {
    Parallelism::Finite(4)
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec {
            functions: CostFunctions::default(),
            l_sys: 0,
            p: default_p(),
            extra_p: Vec::new(),
            m_bar: None,
            grid: Vec::new(),
        }
    }
}

impl CostSpec {
    pub fn model(&self) -> CostModel {
        CostModel {
            functions: self.functions,
            l_sys: self.l_sys,
            p: self.p,
            m_bar: self.m_bar,
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub task: TaskKind,
    pub mode: SweepMode,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub needle_present: bool,
    #[serde(default)]
    pub merge_mode: MergeMode,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub profiles: BTreeMap<String, MockProfile>,
    #[serde(default)]
    pub cost: CostSpec,
}

/// Line and column (1-based) of byte offset `at`.
fn position(source: &str, at: usize) -> (usize, usize) {
    let at = at.min(source.len());
    let before = &source[..at];
    let line = before.matches('\n').count() + 1;
    let column = at - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Error located at the first assignment of `key`, when there is one.
fn error_at(source: &str, key: &str, message: String) -> Error {
    let mut offset = 0;
    for line in source.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                let (line, column) = position(source, offset + line.len() - trimmed.len());
                return Error::Config { line, column, message };
            }
        }
        offset += line.len();
    }
    Error::invalid(message)
}

impl SweepConfig {
    /// Parses and validates a config document.
    pub fn from_toml_str(source: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(source).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| position(source, s.start));
            Error::Config {
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        config.validate_with(source)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&source)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Re-checks the config after programmatic changes.
    pub fn validate(&self) -> Result<()> {
        self.validate_with("")
    }

    fn validate_with(&self, source: &str) -> Result<()> {
        let fail = |key: &str, message: String| Err(error_at(source, key, message));
        if self.trials == 0 {
            return fail("trials", "trials must be >= 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers", "workers must be >= 1".into());
        }
        let (n_key, ns) = match self.mode {
            SweepMode::VaryN => {
                if self.n_values.is_empty() {
                    return fail("mode", "vary-n needs a non-empty n_values list".into());
                }
                if !self.m_values.is_empty() {
                    return fail("m_values", "vary-n uses m = n; remove m_values".into());
                }
                ("n_values", self.n_values.clone())
            }
            SweepMode::VaryM => {
                let Some(n) = self.n else {
                    return fail("mode", "vary-m needs a fixed n".into());
                };
                if self.m_values.is_empty() {
                    return fail("mode", "vary-m needs a non-empty m_values list".into());
                }
                ("n", vec![n])
            }
        };
        let min_n = min_size(self.task);
        if let Some(&n) = ns.iter().find(|&&n| n < min_n) {
            return fail(n_key, format!("n = {n} is below the minimum {min_n} for {}", self.task));
        }
        let overlapping = matches!(self.task, TaskKind::Retrieval | TaskKind::Rag);
        let needle = longest_needle(self.task);
        for &(n, m) in &self.grid() {
            if m == 0 {
                return fail("m_values", "m must be >= 1".into());
            }
            if let Some(bar) = self.cost.m_bar {
                if m.min(n) > bar {
                    return fail("m_values", format!("m = {m} exceeds m_bar = {bar}"));
                }
            }
            let even = m - m % 2;
            if overlapping && m < n && even / 2 < needle {
                return fail(
                    "m_values",
                    format!("m = {m} cannot hold a needle of up to {needle} characters in half a chunk"),
                );
            }
        }
        if self.cost.grid.contains(&0) {
            return fail("grid", "grid sizes must be >= 1".into());
        }
        self.cost
            .functions
            .validate()
            .or_else(|e| fail("kind", e.to_string()))?;
        for (name, profile) in &self.profiles {
            profile
                .validate()
                .map_err(|e| error_at(source, "profiles", format!("profile `{name}`: {e}")))?;
        }
        if let BackendSpec::Mock { profile } = &self.backend {
            if !self.profiles.contains_key(profile) && MockProfile::builtin(profile).is_none() {
                return fail(
                    "profile",
                    format!(
                        "unknown profile `{profile}`; built-ins are {}",
                        MockProfile::BUILTIN.join(", ")
                    ),
                );
            }
        }
        if let BackendSpec::Http { .. } = &self.backend {
            if !cfg!(feature = "http") {
                return fail("kind", "this build has no HTTP backend".into());
            }
        }
        Ok(())
    }

    /// `(n, m)` grid points in sweep order.
    pub fn grid(&self) -> Vec<(usize, usize)> {
        match self.mode {
            SweepMode::VaryN => self.n_values.iter().map(|&n| (n, n)).collect(),
            SweepMode::VaryM => {
                let n = self.n.unwrap_or_default();
                self.m_values.iter().map(|&m| (n, m)).collect()
            }
        }
    }

    pub fn instance_options(&self) -> InstanceOptions {
        InstanceOptions {
            needle_present: self.needle_present,
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self.backend, BackendSpec::Mock { .. })
    }

    /// Mock profile named by the backend spec; config profiles shadow
    /// built-ins.
    pub fn mock_profile(&self) -> Result<Option<MockProfile>> {
        match &self.backend {
            BackendSpec::Mock { profile } => self
                .profiles
                .get(profile)
                .cloned()
                .or_else(|| MockProfile::builtin(profile))
                .map(Some)
                .ok_or_else(|| Error::invalid(format!("unknown profile `{profile}`"))),
            BackendSpec::Http { .. } => Ok(None),
        }
    }

    pub fn make_backend(&self) -> Result<Box<dyn LlmBackend>> {
        match &self.backend {
            BackendSpec::Mock { .. } => {
                let profile = self.mock_profile()?.expect("mock backend has a profile");
                Ok(Box::new(MockBackend::new(profile)))
            }
            #[cfg(feature = "http")]
            BackendSpec::Http {
                url,
                model,
                max_in_flight,
            } => {
                let mut cfg = crate::backend::HttpConfig::new(url.clone(), model.clone());
                if let Some(k) = max_in_flight {
                    cfg.max_in_flight = *k;
                }
                Ok(Box::new(crate::backend::HttpBackend::new(cfg)))
            }
            #[cfg(not(feature = "http"))]
            BackendSpec::Http { .. } => Err(Error::invalid("this build has no HTTP backend")),
        }
    }

    /// Parallelism degrees with a latency column: 1, 4, inf, then the model's
    /// `p` and any extras not already present.
    pub fn latency_degrees(&self) -> Vec<Parallelism> {
        let mut out = vec![Parallelism::SEQUENTIAL, Parallelism::Finite(4), Parallelism::Unbounded];
        for p in std::iter::once(self.cost.p).chain(self.cost.extra_p.iter().copied()) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}
