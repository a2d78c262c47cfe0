//! Per-instance results, gaps and the CSV/JSON report formats.

use serde::Serialize;
use thiserror::Error;

use crate::alm::{solve_basic, solve_lifted, AlmError, IterationRecord, Solution, SolverConfig};
use crate::certify::Certificate;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationChoice {
    /// The `(n+1)`-dimensional relaxation.
    Basic,
    /// Lifted relaxation without cuts.
    Dnnp,
    /// Lifted relaxation with triangle cuts.
    Dnnpfrc,
}

impl RelaxationChoice {
    pub fn name(self) -> &'static str {
        match self {
            RelaxationChoice::Basic => "basic",
            RelaxationChoice::Dnnp => "dnnp",
            RelaxationChoice::Dnnpfrc => "dnnpfrc",
        }
    }

    /// Runs the relaxation; `dnnp` is `dnnpfrc` with no cuts.
    pub fn run(self, g: &Graph, config: &SolverConfig) -> Result<Solution, AlmError> {
        match self {
            RelaxationChoice::Basic => solve_basic(g, config),
            RelaxationChoice::Dnnp => solve_lifted(g, &SolverConfig { cut_batch: 0, ..*config }),
            RelaxationChoice::Dnnpfrc => solve_lifted(g, config),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("upper bound must be positive, got {0}")]
pub struct GapError(pub f64);

/// `(ub - lb) / ub`. Negative when the lower bound exceeds `ub`.
pub fn gap(ub: f64, lb: f64) -> Result<f64, GapError> {
    if !(ub > 0.0) {
        return Err(GapError(ub));
    }
    Ok((ub - lb) / ub)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub relaxation: RelaxationChoice,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub certificate: Option<Certificate>,
    pub seconds: f64,
    /// Pool size after the last iteration.
    pub cuts: usize,
    pub iterations: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
}

impl BoundEntry {
    pub fn from_result(relaxation: RelaxationChoice, ub: Option<f64>, result: Result<Solution, AlmError>, seconds: f64) -> Self {
        match result {
            Ok(sol) => {
                let bound = sol.bound();
                Self {
                    relaxation,
                    bound: Some(bound),
                    gap: ub.and_then(|u| gap(u, bound).ok()),
                    certificate: Some(sol.certificate),
                    seconds: sol.seconds,
                    cuts: sol.pool.len(),
                    iterations: sol.iterations,
                    error: None,
                    log: sol.log,
                }
            }
            Err(e) => Self {
                relaxation,
                bound: None,
                gap: None,
                certificate: None,
                seconds,
                cuts: 0,
                iterations: 0,
                error: Some(e.to_string()),
                log: Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "UB")]
    pub ub: Option<f64>,
    pub bounds: Vec<BoundEntry>,
}

pub const CSV_HEADER: &str = "instance,n,m,UB,bound,gap,time,cuts,iterations";

impl BoundReport {
    pub fn failed(&self) -> bool {
        self.bounds.iter().any(|b| b.error.is_some())
    }

    /// One row per relaxation. With several relaxations the instance field
    /// becomes `name/relaxation`.
    pub fn csv_rows(&self, tag_relaxation: bool) -> Vec<String> {
        self.bounds
            .iter()
            .map(|b| {
                let instance = if tag_relaxation {
                    format!("{}/{}", self.instance, b.relaxation.name())
                } else {
                    self.instance.clone()
                };
                format!(
                    "{},{},{},{},{},{},{:.2},{},{}",
                    csv_field(&instance),
                    self.n,
                    self.m,
                    self.ub.map(|u| format!("{u:.2}")).unwrap_or_default(),
                    b.bound.map(|v| format!("{v:.2}")).unwrap_or_default(),
                    b.gap.map(|v| format!("{v:.4}")).unwrap_or_default(),
                    b.seconds,
                    b.cuts,
                    b.iterations,
                )
            })
            .collect()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
