//! Search traces: one record per round plus a summary, serialized as JSON
//! lines behind a header that carries everything needed to re-execute the
//! run. On deterministic oracles a replay must reproduce the file byte for
//! byte.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::StrategySet;
use crate::oracle::{
    load_tabular_oracle, Oracle, OracleBudget, SyntheticOracle, SyntheticOracleConfig,
};
use crate::search::{run_search, SearchConfig, SearchError};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("trace format version {0} not supported")]
    UnsupportedVersion(u32),
    #[error("oracle kind `{0}` is not deterministic; replay refused")]
    NonDeterministicOracle(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Provenance of the oracle a trace was produced against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Tabular { instance: String },
    Synthetic { config: SyntheticOracleConfig },
    Chat { url: String, model: String },
}

impl OracleSpec {
    /// Instantiates the oracle for deterministic kinds; replaying against a
    /// live endpoint is refused.
    pub fn build(&self) -> Result<Box<dyn Oracle>, TraceError> {
        match self {
            OracleSpec::Tabular { instance } => Ok(Box::new(load_tabular_oracle(instance)?)),
            OracleSpec::Synthetic { config } => {
                Ok(Box::new(SyntheticOracle::new(config.clone())?))
            }
            OracleSpec::Chat { .. } => Err(TraceError::NonDeterministicOracle("chat".into())),
        }
    }

    /// Strategy count of the world this spec describes, when it is intrinsic
    /// to the spec. Synthetic worlds take it from the search side instead.
    pub fn strategy_count(&self) -> Result<Option<u32>, TraceError> {
        match self {
            OracleSpec::Tabular { instance } => {
                Ok(Some(crate::graph::Instance::load(instance)?.strategy_count))
            }
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format_version: u32,
    pub config: SearchConfig,
    pub oracle: OracleSpec,
    /// Strategy count of the search space (redundant for tabular oracles,
    /// authoritative for synthetic ones).
    pub strategy_count: u32,
    pub budget_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Success,
    BudgetExhausted,
    IterationsExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Best fitness in the population this round.
    pub best_fitness: Option<u8>,
    /// Best fitness seen at any point up to this round; never decreases.
    pub best_so_far: Option<u8>,
    /// Count of individuals at each fitness band 1..=5.
    pub histogram: [u32; 5],
    /// Cumulative queries charged by this run.
    pub queries_used: u64,
    pub mutations: u32,
    pub scout_restarts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub status: SearchStatus,
    pub best_fitness: Option<u8>,
    pub best_path: Option<Vec<u32>>,
    /// The successful prefix, exactly as many turns as it took to hit the
    /// target level.
    pub winning_path: Option<Vec<u32>>,
    pub total_queries: u64,
    pub iterations_run: u32,
}

/// Result of one run: round records plus the summary. The header is attached
/// by whoever knows the run's provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub iterations: Vec<IterationRecord>,
    pub summary: SearchSummary,
}

/// A header plus its trace, the on-disk unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub trace: SearchTrace,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    Iteration(IterationRecord),
    Summary(SearchSummary),
}

impl TraceFile {
    pub fn new(header: TraceHeader, trace: SearchTrace) -> Self {
        Self { header, trace }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &TraceLine| {
            out.push_str(&serde_json::to_string(line).expect("trace serializes"));
            out.push('\n');
        };
        push(&TraceLine::Header(self.header.clone()));
        for record in &self.trace.iterations {
            push(&TraceLine::Iteration(record.clone()));
        }
        push(&TraceLine::Summary(self.trace.summary.clone()));
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut header = None;
        let mut iterations = Vec::new();
        let mut summary = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine =
                serde_json::from_str(line).map_err(|e| TraceError::Malformed {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?;
            match parsed {
                TraceLine::Header(h) => header = Some(h),
                TraceLine::Iteration(r) => iterations.push(r),
                TraceLine::Summary(s) => summary = Some(s),
            }
        }
        let header = header.ok_or(TraceError::Malformed {
            line: 0,
            msg: "missing header record".into(),
        })?;
        if header.format_version != TRACE_FORMAT_VERSION {
            return Err(TraceError::UnsupportedVersion(header.format_version));
        }
        let summary = summary.ok_or(TraceError::Malformed {
            line: 0,
            msg: "missing summary record".into(),
        })?;
        Ok(Self {
            header,
            trace: SearchTrace {
                iterations,
                summary,
            },
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, TraceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Executes a run described by a header and returns the full trace file.
pub fn execute_header(header: &TraceHeader) -> Result<TraceFile, TraceError> {
    let oracle = header.oracle.build()?;
    let set = StrategySet::with_count(header.strategy_count);
    let budget = OracleBudget::new(header.budget_max);
    let trace = run_search(&header.config, &set, oracle.as_ref(), &budget)?;
    Ok(TraceFile::new(header.clone(), trace))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Identical,
    Diverged { first_diff_line: usize },
}

/// Re-executes a trace from its header and byte-compares the result against
/// the original text.
pub fn replay(original_text: &str) -> Result<ReplayVerdict, TraceError> {
    let original = TraceFile::parse(original_text)?;
    let rerun = execute_header(&original.header)?;
    let rerun_text = rerun.to_jsonl();
    if rerun_text == original_text {
        return Ok(ReplayVerdict::Identical);
    }
    let first_diff_line = original_text
        .lines()
        .zip(rerun_text.lines())
        .position(|(a, b)| a != b)
        .map(|i| i + 1)
        .unwrap_or_else(|| original_text.lines().count().min(rerun_text.lines().count()) + 1);
    Ok(ReplayVerdict::Diverged { first_diff_line })
}
