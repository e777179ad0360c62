//! Path search over layered strategy graphs with budgeted oracles.
//!
//! The crate models a sequence of strategy choices as a path on a directed
//! graph whose effect depends on the whole prefix, compresses that history
//! into a finite progress level, and searches the resulting layered state
//! space with a bee-colony style population search. Deterministic tabular
//! and seeded synthetic oracles stand in for a live scoring endpoint so the
//! whole pipeline can be exercised and verified offline.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod gen;
pub mod graph;
pub mod hash;
pub mod oracle;
pub mod harness;
pub mod search;
pub mod stats;
pub mod trace;

pub use graph::{
    build_layered_graph, prefix_progress, shortest_success_path, GraphError, Instance,
    LayeredStateGraph, Path, ProgressLevel, StrategyId, StrategySet, TransitionTable, Vertex,
};
