//! Strategy-graph topology: strategy vertices, paths, the progress mapping,
//! and the explicit layered state graph used by the baselines and tests.
//!
//! The attack space is a directed graph whose vertices are reusable strategies
//! plus a distinguished origin vertex (the initial query). A prefix of strategy
//! steps is compressed into a finite progress level `s in {0..=a}`; the pair
//! `(vertex, level)` is a state of the layered graph. Level `a` is absorbing:
//! once reached, no extension lowers it.

use std::collections::HashMap;
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Above this many table cells the transition table switches from a dense
/// vector to a hash map.
pub const DENSE_TABLE_CUTOFF: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("threshold out of range: a = {0}, must be >= 1")]
    ThresholdOutOfRange(u32),
    #[error("transition table missing entry (v={v}, s={s}, u={u})")]
    IncompleteTable { v: u32, s: u32, u: u32 },
    #[error("duplicate table entry (v={v}, s={s}, u={u})")]
    DuplicateEntry { v: u32, s: u32, u: u32 },
    #[error("unknown strategy index {0}")]
    UnknownStrategy(u32),
    #[error("empty strategy set")]
    EmptyStrategySet,
    #[error("strategy index {found} at position {position}: indices must be contiguous from 0")]
    NonContiguousIndex { found: u32, position: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One attack-strategy vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyId {
    pub index: u32,
    pub label: String,
    pub category: String,
}

/// The predefined strategy set `T` plus the implicit origin vertex.
///
/// Strategy indices are contiguous from 0 so that a step can be stored as a
/// bare index. The origin is not a member; it is the root every path hangs
/// off and is addressed separately as [`Vertex::Origin`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySet {
    strategies: Vec<StrategyId>,
}

impl StrategySet {
    pub fn new(strategies: Vec<StrategyId>) -> Result<Self, GraphError> {
        if strategies.is_empty() {
            return Err(GraphError::EmptyStrategySet);
        }
        for (position, s) in strategies.iter().enumerate() {
            if s.index as usize != position {
                return Err(GraphError::NonContiguousIndex {
                    found: s.index,
                    position,
                });
            }
        }
        Ok(Self { strategies })
    }

    /// A set of `n` strategies with synthesized labels, as produced by the
    /// numeric instance file format.
    pub fn with_count(n: u32) -> Self {
        assert!(n > 0, "strategy set must be non-empty");
        Self {
            strategies: (0..n)
                .map(|i| StrategyId {
                    index: i,
                    label: format!("s{i}"),
                    category: String::new(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty sets
    }

    pub fn contains(&self, index: u32) -> bool {
        (index as usize) < self.strategies.len()
    }

    pub fn get(&self, index: u32) -> Option<&StrategyId> {
        self.strategies.get(index as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StrategyId> {
        self.strategies.iter()
    }
}

/// An ordered strategy sequence rooted at the origin. The origin itself is
/// not a step, so `len()` equals the number of strategy turns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Path {
    steps: Vec<u32>,
}

impl Path {
    pub fn new(steps: Vec<u32>) -> Self {
        Self { steps }
    }

    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[u32] {
        &self.steps
    }

    pub fn push(&mut self, step: u32) {
        self.steps.push(step);
    }

    /// First `t` steps.
    pub fn prefix(&self, t: usize) -> Path {
        Path {
            steps: self.steps[..t.min(self.steps.len())].to_vec(),
        }
    }

    pub fn into_steps(self) -> Vec<u32> {
        self.steps
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v0")?;
        for s in &self.steps {
            write!(f, "->{s}")?;
        }
        Ok(())
    }
}

/// Progress level `s in {0..=a}` assigned to a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProgressLevel(pub u32);

/// A vertex of the underlying attack graph: the origin or one strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Origin,
    Strategy(u32),
}

#[derive(Debug)]
enum TableStorage {
    Dense(Vec<u32>),
    Sparse(HashMap<(u32, u32, u32), u32>),
}

/// Total mapping `(v, s, u) -> raw level`, where `v` ranges over the origin
/// plus all strategies, `s` over `0..=a`, and `u` over all strategies.
///
/// Raw levels are stored exactly as given; clamping to the threshold happens
/// when the layered graph is built, so that files round-trip byte for byte.
#[derive(Debug)]
pub struct TransitionTable {
    n: u32,
    a: u32,
    storage: TableStorage,
}

impl TransitionTable {
    /// Builds a table from `(v, s, u, raw)` entries. The entry list must cover
    /// every triple exactly once; `v == n` addresses the origin.
    pub fn from_entries(
        n: u32,
        a: u32,
        entries: &[(u32, u32, u32, u32)],
    ) -> Result<Self, GraphError> {
        let cells = (n as usize + 1) * (a as usize + 1) * n as usize;
        let mut table = if cells <= DENSE_TABLE_CUTOFF {
            Self {
                n,
                a,
                storage: TableStorage::Dense(vec![u32::MAX; cells]),
            }
        } else {
            Self {
                n,
                a,
                storage: TableStorage::Sparse(HashMap::with_capacity(entries.len())),
            }
        };
        for &(v, s, u, raw) in entries {
            match &mut table.storage {
                TableStorage::Dense(cells) => {
                    let idx = table_index(n, a, v, s, u);
                    if cells[idx] != u32::MAX {
                        return Err(GraphError::DuplicateEntry { v, s, u });
                    }
                    cells[idx] = raw;
                }
                TableStorage::Sparse(map) => {
                    if map.insert((v, s, u), raw).is_some() {
                        return Err(GraphError::DuplicateEntry { v, s, u });
                    }
                }
            }
        }
        table.check_total()?;
        Ok(table)
    }

    /// Builds a table by evaluating `f(v, s, u)` over the full domain.
    pub fn from_fn(n: u32, a: u32, f: impl Fn(Vertex, u32, u32) -> u32) -> Self {
        let cells = (n as usize + 1) * (a as usize + 1) * n as usize;
        let mut dense = vec![0u32; cells];
        for v in 0..=n {
            let vertex = if v == n { Vertex::Origin } else { Vertex::Strategy(v) };
            for s in 0..=a {
                for u in 0..n {
                    dense[table_index(n, a, v, s, u)] = f(vertex, s, u);
                }
            }
        }
        Self {
            n,
            a,
            storage: TableStorage::Dense(dense),
        }
    }

    fn check_total(&self) -> Result<(), GraphError> {
        match &self.storage {
            TableStorage::Dense(cells) => {
                for v in 0..=self.n {
                    for s in 0..=self.a {
                        for u in 0..self.n {
                            if cells[table_index(self.n, self.a, v, s, u)] == u32::MAX {
                                return Err(GraphError::IncompleteTable { v, s, u });
                            }
                        }
                    }
                }
            }
            TableStorage::Sparse(map) => {
                for v in 0..=self.n {
                    for s in 0..=self.a {
                        for u in 0..self.n {
                            if !map.contains_key(&(v, s, u)) {
                                return Err(GraphError::IncompleteTable { v, s, u });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn strategy_count(&self) -> u32 {
        self.n
    }

    pub fn threshold(&self) -> u32 {
        self.a
    }

    /// Raw (unclamped) level for extending `v` at level `s` by strategy `u`.
    pub fn raw(&self, v: Vertex, s: u32, u: u32) -> u32 {
        let vi = match v {
            Vertex::Origin => self.n,
            Vertex::Strategy(i) => i,
        };
        match &self.storage {
            TableStorage::Dense(cells) => cells[table_index(self.n, self.a, vi, s, u)],
            TableStorage::Sparse(map) => map[&(vi, s, u)],
        }
    }
}

fn table_index(n: u32, a: u32, v: u32, s: u32, u: u32) -> usize {
    debug_assert!(v <= n && s <= a && u < n);
    ((v as usize * (a as usize + 1)) + s as usize) * n as usize + u as usize
}

/// The explicit layered state graph: states `(v, s)` for every strategy `v`
/// and level `s in {0..=a}`, with clamped transitions.
///
/// Immutable after construction; shared freely across search workers.
#[derive(Debug)]
pub struct LayeredStateGraph {
    n: u32,
    a: u32,
    monotone: bool,
    /// Clamped next-level for every (v, s, u), origin at v == n.
    next: Vec<u32>,
}

/// Constructs the layered state graph from a total transition table.
///
/// Every stored transition is clamped to `min(a, raw)`; with the monotone
/// flag set the level additionally never regresses. Level `a` is absorbing
/// regardless of the flag.
pub fn build_layered_graph(
    strategy_set: &StrategySet,
    table: &TransitionTable,
    a: u32,
    monotone: bool,
) -> Result<LayeredStateGraph, GraphError> {
    if a < 1 {
        return Err(GraphError::ThresholdOutOfRange(a));
    }
    let n = strategy_set.len() as u32;
    if table.strategy_count() != n || table.threshold() != a {
        // A table sized for a different instance cannot be total over ours;
        // report the first triple it misses.
        return Err(GraphError::IncompleteTable { v: 0, s: 0, u: 0 });
    }
    let mut next = vec![0u32; (n as usize + 1) * (a as usize + 1) * n as usize];
    for vi in 0..=n {
        let vertex = if vi == n { Vertex::Origin } else { Vertex::Strategy(vi) };
        for s in 0..=a {
            for u in 0..n {
                let clamped = table.raw(vertex, s, u).min(a);
                let effective = if s == a {
                    a
                } else if monotone {
                    clamped.max(s)
                } else {
                    clamped
                };
                next[table_index(n, a, vi, s, u)] = effective;
            }
        }
    }
    Ok(LayeredStateGraph { n, a, monotone, next })
}

impl LayeredStateGraph {
    pub fn strategy_count(&self) -> u32 {
        self.n
    }

    pub fn threshold(&self) -> u32 {
        self.a
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    /// Number of layered states, `|V| * (a + 1)`.
    pub fn state_count(&self) -> usize {
        self.n as usize * (self.a as usize + 1)
    }

    /// Level after extending a prefix at `(v, s)` by strategy `u`.
    pub fn transition(&self, v: Vertex, s: u32, u: u32) -> u32 {
        let vi = match v {
            Vertex::Origin => self.n,
            Vertex::Strategy(i) => i,
        };
        self.next[table_index(self.n, self.a, vi, s, u)]
    }
}

/// Folds the transition relation over `path` from the start state `(v0, 0)`.
/// The empty path is at level 0.
pub fn prefix_progress(graph: &LayeredStateGraph, path: &Path) -> Result<ProgressLevel, GraphError> {
    let mut vertex = Vertex::Origin;
    let mut level = 0u32;
    for &step in path.steps() {
        if step >= graph.strategy_count() {
            return Err(GraphError::UnknownStrategy(step));
        }
        level = graph.transition(vertex, level, step);
        vertex = Vertex::Strategy(step);
    }
    Ok(ProgressLevel(level))
}

/// Minimum-step path from `(v0, 0)` to any state at level `a`, or `None`
/// when the goal set is unreachable.
///
/// Expansion is breadth-first in discovery order and neighbors are tried in
/// increasing strategy index, so among all optimal paths the lexicographically
/// smallest one is returned.
pub fn shortest_success_path(graph: &LayeredStateGraph) -> Option<Path> {
    let n = graph.strategy_count();
    let a = graph.threshold();
    if a == 0 {
        return Some(Path::empty());
    }

    // State id: v * (a+1) + s for strategy vertices; the origin is implicit.
    let state_id = |v: u32, s: u32| (v as usize) * (a as usize + 1) + s as usize;
    let mut parent: Vec<Option<(usize, u32)>> = vec![None; graph.state_count()];
    let mut seen = vec![false; graph.state_count()];
    let mut queue = std::collections::VecDeque::new();

    for u in 0..n {
        let s = graph.transition(Vertex::Origin, 0, u);
        let id = state_id(u, s);
        if !seen[id] {
            seen[id] = true;
            parent[id] = None; // roots: reached directly from the origin
            if s == a {
                return Some(Path::new(vec![u]));
            }
            queue.push_back((id, vec![u]));
        }
    }

    while let Some((id, steps)) = queue.pop_front() {
        let v = (id / (a as usize + 1)) as u32;
        let s = (id % (a as usize + 1)) as u32;
        for u in 0..n {
            let s2 = graph.transition(Vertex::Strategy(v), s, u);
            let id2 = state_id(u, s2);
            if !seen[id2] {
                seen[id2] = true;
                let mut next_steps = steps.clone();
                next_steps.push(u);
                if s2 == a {
                    return Some(Path::new(next_steps));
                }
                queue.push_back((id2, next_steps));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Instance file format
// ---------------------------------------------------------------------------

/// Per-state response levels for the tabular oracle, one level per `(v, s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseTable {
    n: u32,
    a: u32,
    levels: Vec<u8>,
}

impl ResponseTable {
    pub fn from_entries(n: u32, a: u32, entries: &[(u32, u32, u8)]) -> Result<Self, GraphError> {
        let mut levels = vec![0u8; n as usize * (a as usize + 1)];
        for &(v, s, level) in entries {
            let idx = v as usize * (a as usize + 1) + s as usize;
            if levels[idx] != 0 {
                return Err(GraphError::DuplicateEntry { v, s, u: 0 });
            }
            levels[idx] = level;
        }
        if let Some(pos) = levels.iter().position(|&l| l == 0) {
            let v = (pos / (a as usize + 1)) as u32;
            let s = (pos % (a as usize + 1)) as u32;
            return Err(GraphError::IncompleteTable { v, s, u: 0 });
        }
        Ok(Self { n, a, levels })
    }

    pub fn level(&self, v: u32, s: u32) -> u8 {
        self.levels[v as usize * (self.a as usize + 1) + s as usize]
    }

    pub fn strategy_count(&self) -> u32 {
        self.n
    }

    pub fn threshold(&self) -> u32 {
        self.a
    }
}

/// One on-disk instance: the transition table plus, for oracle files, the
/// per-state response levels.
///
/// Text format, line oriented:
///
/// ```text
/// strategies N a A monotone {0|1}
/// v s u s_raw        (one line per table entry; v == N is the origin)
/// resp v s L         (optional; reported level at state (v, s))
/// ```
///
/// `#` starts a comment and blank lines are skipped. [`Instance::save`]
/// writes the canonical form: header first, table rows sorted by `(v, s, u)`,
/// then `resp` rows sorted by `(v, s)`. Canonical files round-trip through
/// load/save byte for byte.
#[derive(Debug)]
pub struct Instance {
    pub strategy_count: u32,
    pub threshold: u32,
    pub monotone: bool,
    pub table: TransitionTable,
    pub responses: Option<ResponseTable>,
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(u32, u32, bool)> = None;
        let mut entries: Vec<(u32, u32, u32, u32)> = Vec::new();
        let mut resp_entries: Vec<(u32, u32, u8)> = Vec::new();

        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_u32 = |field: &str| -> Result<u32, GraphError> {
                field.parse::<u32>().map_err(|_| GraphError::Parse {
                    line: lineno,
                    msg: format!("expected non-negative integer, got `{field}`"),
                })
            };
            if header.is_none() {
                if fields.len() != 6 || fields[0] != "strategies" || fields[2] != "a" || fields[4] != "monotone" {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "expected header `strategies N a A monotone {0|1}`".into(),
                    });
                }
                let n = parse_u32(fields[1])?;
                let a = parse_u32(fields[3])?;
                let monotone = match fields[5] {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: format!("monotone flag must be 0 or 1, got `{other}`"),
                        })
                    }
                };
                if n == 0 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "instance must declare at least one strategy".into(),
                    });
                }
                header = Some((n, a, monotone));
                continue;
            }
            let (n, a, _) = header.unwrap();
            if fields[0] == "resp" {
                if fields.len() != 4 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "expected `resp v s L`".into(),
                    });
                }
                let v = parse_u32(fields[1])?;
                let s = parse_u32(fields[2])?;
                let level = parse_u32(fields[3])?;
                if v >= n {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("resp vertex {v} out of range (strategies: {n})"),
                    });
                }
                if s > a {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("resp level {s} exceeds threshold {a}"),
                    });
                }
                resp_entries.push((v, s, level.min(u8::MAX as u32) as u8));
            } else {
                if fields.len() != 4 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "expected table entry `v s u s_raw`".into(),
                    });
                }
                let v = parse_u32(fields[0])?;
                let s = parse_u32(fields[1])?;
                let u = parse_u32(fields[2])?;
                let raw = parse_u32(fields[3])?;
                if v > n {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("vertex {v} out of range (origin is {n})"),
                    });
                }
                if s > a {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("level {s} exceeds threshold {a}"),
                    });
                }
                if u >= n {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("next-strategy {u} out of range (strategies: {n})"),
                    });
                }
                entries.push((v, s, u, raw));
            }
        }

        let (n, a, monotone) = header.ok_or(GraphError::Parse {
            line: 0,
            msg: "missing header line".into(),
        })?;
        let table = TransitionTable::from_entries(n, a, &entries)?;
        let responses = if resp_entries.is_empty() {
            None
        } else {
            Some(ResponseTable::from_entries(n, a, &resp_entries)?)
        };
        Ok(Self {
            strategy_count: n,
            threshold: a,
            monotone,
            table,
            responses,
        })
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Canonical text form; see the type docs for the ordering guarantee.
    pub fn to_canonical_string(&self) -> String {
        let n = self.strategy_count;
        let a = self.threshold;
        let mut out = String::new();
        out.push_str(&format!(
            "strategies {n} a {a} monotone {}\n",
            if self.monotone { 1 } else { 0 }
        ));
        for v in 0..=n {
            let vertex = if v == n { Vertex::Origin } else { Vertex::Strategy(v) };
            for s in 0..=a {
                for u in 0..n {
                    out.push_str(&format!("{v} {s} {u} {}\n", self.table.raw(vertex, s, u)));
                }
            }
        }
        if let Some(resp) = &self.responses {
            for v in 0..n {
                for s in 0..=a {
                    out.push_str(&format!("resp {v} {s} {}\n", resp.level(v, s)));
                }
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_canonical_string())?;
        Ok(())
    }

    pub fn strategy_set(&self) -> StrategySet {
        StrategySet::with_count(self.strategy_count)
    }

    pub fn graph(&self) -> Result<LayeredStateGraph, GraphError> {
        build_layered_graph(
            &self.strategy_set(),
            &self.table,
            self.threshold,
            self.monotone,
        )
    }
}
