//! Reference searchers for head-to-head comparison: an explicit breadth-first
//! sweep of the layered state graph and a budget-matched random sampler.
//! Both pay the same per-evaluation price as the colony search so the cost of
//! frontier blow-up shows up in the numbers, not just in the prose.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{LayeredStateGraph, Path, StrategySet, Vertex};
use crate::oracle::{Oracle, OracleBudget, OracleError};
use crate::trace::SearchStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: String,
    pub status: SearchStatus,
    pub success: bool,
    pub path: Option<Vec<u32>>,
    pub queries_used: u64,
    /// Non-deterministic; excluded from byte-compared artifacts.
    pub wall_clock: Duration,
    /// Peak frontier size (BFS) or population size (random search).
    pub peak_size: usize,
}

/// Explicit breadth-first search over the layered states, expanding wave by
/// wave from `(v0, 0)` toward any state at the success level.
///
/// Discovering a state costs one query (one dialogue turn in the underlying
/// model), charged against `budget`. Neighbor order is increasing strategy
/// index, so results are deterministic and tie-break to the lowest index.
pub fn bfs_search(graph: &LayeredStateGraph, budget: &OracleBudget) -> BaselineResult {
    let started = Instant::now();
    let n = graph.strategy_count();
    let a = graph.threshold();
    let state_id = |v: u32, s: u32| (v as usize) * (a as usize + 1) + s as usize;

    let mut queries = 0u64;
    let mut peak = 0usize;
    let mut visited = vec![false; graph.state_count()];
    // Reconstruction: the step taken to reach a state plus its predecessor,
    // None meaning it was reached directly from the origin.
    let mut arrived_by: Vec<Option<(u32, Option<usize>)>> = vec![None; graph.state_count()];

    let finish = |status: SearchStatus, path: Option<Vec<u32>>, queries, peak| BaselineResult {
        method: "bfs".into(),
        status,
        success: path.is_some(),
        path,
        queries_used: queries,
        wall_clock: started.elapsed(),
        peak_size: peak,
    };

    let reconstruct = |arrived_by: &[Option<(u32, Option<usize>)>], mut id: usize| {
        let mut steps = Vec::new();
        loop {
            let (step, prev) = arrived_by[id].expect("reached state has provenance");
            steps.push(step);
            match prev {
                Some(p) => id = p,
                None => break,
            }
        }
        steps.reverse();
        steps
    };

    let mut wave: Vec<usize> = Vec::new();
    for u in 0..n {
        let s = graph.transition(Vertex::Origin, 0, u);
        let id = state_id(u, s);
        if visited[id] {
            continue;
        }
        if budget.charge_up_to(1) == 0 {
            return finish(SearchStatus::BudgetExhausted, None, queries, peak);
        }
        queries += 1;
        visited[id] = true;
        arrived_by[id] = Some((u, None));
        if s == a {
            return finish(
                SearchStatus::Success,
                Some(reconstruct(&arrived_by, id)),
                queries,
                peak.max(1),
            );
        }
        wave.push(id);
    }
    peak = peak.max(wave.len());

    while !wave.is_empty() {
        let mut next_wave = Vec::new();
        for &id in &wave {
            let v = (id / (a as usize + 1)) as u32;
            let s = (id % (a as usize + 1)) as u32;
            for u in 0..n {
                let s2 = graph.transition(Vertex::Strategy(v), s, u);
                let id2 = state_id(u, s2);
                if visited[id2] {
                    continue;
                }
                if budget.charge_up_to(1) == 0 {
                    return finish(SearchStatus::BudgetExhausted, None, queries, peak);
                }
                queries += 1;
                visited[id2] = true;
                arrived_by[id2] = Some((u, Some(id)));
                if s2 == a {
                    return finish(
                        SearchStatus::Success,
                        Some(reconstruct(&arrived_by, id2)),
                        queries,
                        peak.max(wave.len() + next_wave.len() + 1),
                    );
                }
                next_wave.push(id2);
            }
        }
        peak = peak.max(next_wave.len());
        wave = next_wave;
    }

    finish(SearchStatus::IterationsExhausted, None, queries, peak)
}

/// Budget-matched control: keeps drawing uniform random paths of uniform
/// random length in `1..=max_path_length` and evaluating them fresh until a
/// success or an empty budget.
pub fn random_search(
    set: &StrategySet,
    oracle: &dyn Oracle,
    budget: &OracleBudget,
    max_path_length: usize,
    rng: &mut impl Rng,
) -> BaselineResult {
    let started = Instant::now();
    let n = set.len() as u32;
    let mut queries = 0u64;
    loop {
        let len = rng.random_range(1..=max_path_length);
        let path = Path::new((0..len).map(|_| rng.random_range(0..n)).collect());
        match oracle.evaluate_fresh(&path, budget) {
            Ok(record) => {
                queries += record.queries_charged;
                if record.level.is_target() {
                    let winning = path.prefix(record.queries_charged as usize);
                    return BaselineResult {
                        method: "random".into(),
                        status: SearchStatus::Success,
                        success: true,
                        path: Some(winning.into_steps()),
                        queries_used: queries,
                        wall_clock: started.elapsed(),
                        peak_size: 1,
                    };
                }
            }
            Err(OracleError::BudgetExhausted { charged }) => {
                queries += charged;
                return BaselineResult {
                    method: "random".into(),
                    status: SearchStatus::BudgetExhausted,
                    success: false,
                    path: None,
                    queries_used: queries,
                    wall_clock: started.elapsed(),
                    peak_size: 1,
                };
            }
            Err(_) => {
                return BaselineResult {
                    method: "random".into(),
                    status: SearchStatus::IterationsExhausted,
                    success: false,
                    path: None,
                    queries_used: queries,
                    wall_clock: started.elapsed(),
                    peak_size: 1,
                };
            }
        }
    }
}
