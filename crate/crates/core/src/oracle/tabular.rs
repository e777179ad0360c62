//! Deterministic oracle backed by an instance file: the response level at
//! every layered state is given explicitly, so evaluation is a pure function
//! of the path and is bit-identical across runs and platforms.

use std::path::Path as FsPath;

use crate::graph::{Instance, LayeredStateGraph, Path, ResponseTable, Vertex};

use super::{progress_cue, FitnessLevel, FitnessRecord, Oracle, OracleBudget, OracleError};

#[derive(Debug)]
pub struct TabularOracle {
    graph: LayeredStateGraph,
    responses: ResponseTable,
}

impl TabularOracle {
    /// Wraps an already-parsed instance. The response table must report 5
    /// exactly at level-`a` states and 1..=4 below, which pins the success
    /// criterion to the progress threshold.
    pub fn new(instance: &Instance) -> Result<Self, OracleError> {
        let responses = instance
            .responses
            .clone()
            .ok_or_else(|| OracleError::Parse {
                line: 0,
                msg: "instance has no `resp` lines; not an oracle file".into(),
            })?;
        let a = instance.threshold;
        for v in 0..instance.strategy_count {
            for s in 0..=a {
                let level = responses.level(v, s);
                let ok = if s == a {
                    level == 5
                } else {
                    (1..=4).contains(&level)
                };
                if !ok {
                    return Err(OracleError::InconsistentThreshold { v, s, level, a });
                }
            }
        }
        Ok(Self {
            graph: instance.graph()?,
            responses,
        })
    }

    pub fn graph(&self) -> &LayeredStateGraph {
        &self.graph
    }
}

/// Loads an oracle from an instance file carrying `resp` lines.
pub fn load_tabular_oracle(path: impl AsRef<FsPath>) -> Result<TabularOracle, OracleError> {
    TabularOracle::new(&Instance::load(path)?)
}

impl Oracle for TabularOracle {
    fn threshold(&self) -> u32 {
        self.graph.threshold()
    }

    fn evaluate(
        &self,
        path: &Path,
        cached_turns: usize,
        _cue: Option<&super::Cue>,
        budget: &OracleBudget,
    ) -> Result<FitnessRecord, OracleError> {
        if path.is_empty() {
            return Err(OracleError::EmptyPath);
        }
        let steps = path.steps();
        let cached = cached_turns.min(steps.len());

        // Replay the cached prefix silently to recover the current state.
        let mut vertex = Vertex::Origin;
        let mut level = 0u32;
        for &step in &steps[..cached] {
            if step >= self.graph.strategy_count() {
                return Err(crate::graph::GraphError::UnknownStrategy(step).into());
            }
            level = self.graph.transition(vertex, level, step);
            vertex = Vertex::Strategy(step);
        }

        let mut charged = 0u64;
        let mut outcome = None;
        for &step in &steps[cached..] {
            if step >= self.graph.strategy_count() {
                return Err(crate::graph::GraphError::UnknownStrategy(step).into());
            }
            if budget.charge_up_to(1) == 0 {
                return Err(OracleError::BudgetExhausted { charged });
            }
            charged += 1;
            level = self.graph.transition(vertex, level, step);
            vertex = Vertex::Strategy(step);
            let resp = FitnessLevel::new(self.responses.level(step, level))?;
            outcome = Some((resp, level));
            if resp.is_target() {
                break; // the dialogue is over the moment a turn succeeds
            }
        }

        let (resp, level) = outcome.expect("at least one turn was evaluated");
        let cue = resp.carries_cue().then(|| progress_cue(level));
        FitnessRecord::new(resp, cue, charged, None)
    }
}
