//! Constraint graphs over worlds, impossibility cycles, and the partial
//! orders that survive when some constraints are weakened to incomparability.
//!
//! An edge `from → to` records a requirement `from ≤ to`. A directed cycle is
//! an impossibility certificate: no total order satisfies every edge on it.
//! An [`UncertaintyPattern`] names the edges that are only *uncertainly*
//! satisfied: in the least partial order generated by the remaining edges,
//! their endpoints must be incomparable.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{Verdict, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("world {0} is not declared in the graph")]
    UnknownWorld(WorldId),
    #[error("world {0} declared twice")]
    DuplicateWorld(WorldId),
    #[error("self-loop on world {0}")]
    SelfLoop(WorldId),
    #[error("subset enumeration exceeded the budget of {budget} candidates")]
    BudgetExceeded { budget: u64 },
    #[error("invalid uncertainty pattern: {0}")]
    InvalidPattern(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: WorldId,
    pub to: WorldId,
    pub label: String,
    /// Requirement is `from < to` rather than `from ≤ to`.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintGraph {
    worlds: Vec<WorldId>,
    index: HashMap<WorldId, usize>,
    edges: Vec<Edge>,
    arcs: Vec<(usize, usize)>,
}

impl ConstraintGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_worlds<I, W>(worlds: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = W>,
        W: Into<WorldId>,
    {
        let mut g = Self::new();
        for w in worlds {
            g.add_world(w.into())?;
        }
        Ok(g)
    }

    pub fn add_world(&mut self, id: WorldId) -> Result<usize, GraphError> {
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateWorld(id));
        }
        let i = self.worlds.len();
        self.index.insert(id.clone(), i);
        self.worlds.push(id);
        Ok(i)
    }

    /// Adds the world unless it is already present.
    pub fn ensure_world(&mut self, id: &WorldId) -> usize {
        match self.index.get(id) {
            Some(&i) => i,
            None => self.add_world(id.clone()).expect("checked absent"),
        }
    }

    pub fn add_edge(
        &mut self,
        from: impl Into<WorldId>,
        to: impl Into<WorldId>,
        label: impl Into<String>,
    ) -> Result<usize, GraphError> {
        self.push_edge(from.into(), to.into(), label.into(), false)
    }

    pub fn add_strict_edge(
        &mut self,
        from: impl Into<WorldId>,
        to: impl Into<WorldId>,
        label: impl Into<String>,
    ) -> Result<usize, GraphError> {
        self.push_edge(from.into(), to.into(), label.into(), true)
    }

    fn push_edge(
        &mut self,
        from: WorldId,
        to: WorldId,
        label: String,
        strict: bool,
    ) -> Result<usize, GraphError> {
        let u = self.world_index(&from)?;
        let v = self.world_index(&to)?;
        if u == v {
            return Err(GraphError::SelfLoop(from));
        }
        self.arcs.push((u, v));
        self.edges.push(Edge {
            from,
            to,
            label,
            strict,
        });
        Ok(self.edges.len() - 1)
    }

    pub fn world_index(&self, id: &WorldId) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownWorld(id.clone()))
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Worlds in an order consistent with every edge, when one exists.
    pub fn topological_order(&self) -> Option<Vec<WorldId>> {
        let n = self.worlds.len();
        let mut indegree = vec![0usize; n];
        for &(_, v) in &self.arcs {
            indegree[v] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(self.worlds[u].clone());
            for &(a, b) in &self.arcs {
                if a == u {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// A directed cycle of requirements `w_1 ≤ w_2 ≤ … ≤ w_k ≤ w_1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpossibilityCertificate {
    /// Edge ids, starting from the smallest id on the cycle.
    pub edge_ids: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl ImpossibilityCertificate {
    pub fn len(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.label.clone()).collect()
    }

    /// Worlds in cycle order: the tail of every edge.
    pub fn worlds(&self) -> Vec<WorldId> {
        self.edges.iter().map(|e| e.from.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleSearch {
    Cycle(ImpossibilityCertificate),
    Acyclic,
}

/// Shortest directed cycle; ties go to the lexicographically smallest edge-id
/// sequence when each cycle is rotated to start at its smallest edge id.
pub fn find_cycle(g: &ConstraintGraph) -> CycleSearch {
    let n = g.world_count();
    let m = g.edge_count();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, &(u, _)) in g.arcs.iter().enumerate() {
        out[u].push(id);
    }
    for len in 2..=n {
        for first in 0..m {
            let (start, next) = g.arcs[first];
            let mut path = vec![first];
            let mut on_path = vec![false; n];
            on_path[start] = true;
            on_path[next] = true;
            if extend_cycle(g, &out, start, next, first, len, &mut path, &mut on_path) {
                return CycleSearch::Cycle(ImpossibilityCertificate {
                    edges: path.iter().map(|&e| g.edges[e].clone()).collect(),
                    edge_ids: path,
                });
            }
        }
    }
    CycleSearch::Acyclic
}

#[allow(clippy::too_many_arguments)]
fn extend_cycle(
    g: &ConstraintGraph,
    out: &[Vec<usize>],
    start: usize,
    at: usize,
    first: usize,
    len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
) -> bool {
    for &e in &out[at] {
        if e <= first {
            continue;
        }
        let (_, v) = g.arcs[e];
        if path.len() + 1 == len {
            if v == start {
                path.push(e);
                return true;
            }
            continue;
        }
        if on_path[v] {
            continue;
        }
        path.push(e);
        on_path[v] = true;
        if extend_cycle(g, out, start, v, first, len, path, on_path) {
            return true;
        }
        on_path[v] = false;
        path.pop();
    }
    false
}

/// Reachability matrix as bitset rows; `reach(i, j)` means `i ≤ j` is forced.
#[derive(Debug, Clone)]
pub struct Closure {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Closure {
    pub fn of<I>(n: usize, arcs: I) -> Closure
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        for (u, v) in arcs {
            rows[u * words + v / 64] |= 1 << (v % 64);
        }
        // Warshall over bitset rows; the diagonal is only set by cycles.
        for k in 0..n {
            let (kw, kb) = (k / 64, 1u64 << (k % 64));
            for i in 0..n {
                if rows[i * words + kw] & kb != 0 {
                    for w in 0..words {
                        let bits = rows[k * words + w];
                        rows[i * words + w] |= bits;
                    }
                }
            }
        }
        Closure { n, words, rows }
    }

    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] & (1 << (j % 64)) != 0
    }

    pub fn is_acyclic(&self) -> bool {
        (0..self.n).all(|i| !self.reaches(i, i))
    }
}

/// Edge ids treated as uncertainly satisfied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct UncertaintyPattern(pub BTreeSet<usize>);

impl UncertaintyPattern {
    pub fn new<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        UncertaintyPattern(ids.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.contains(&id)
    }

    pub fn labels(&self, g: &ConstraintGraph) -> Vec<String> {
        self.0.iter().map(|&e| g.edges[e].label.clone()).collect()
    }
}

fn closure_without(g: &ConstraintGraph, weakened: &[bool]) -> Closure {
    Closure::of(
        g.world_count(),
        g.arcs
            .iter()
            .enumerate()
            .filter(|(id, _)| !weakened[*id])
            .map(|(_, &arc)| arc),
    )
}

fn pattern_holds(g: &ConstraintGraph, weakened: &[bool]) -> Result<Closure, String> {
    let closure = closure_without(g, weakened);
    if !closure.is_acyclic() {
        return Err("the retained edges still contain a cycle".into());
    }
    for (id, &(u, v)) in g.arcs.iter().enumerate() {
        if weakened[id] && (closure.reaches(u, v) || closure.reaches(v, u)) {
            return Err(format!(
                "edge {id} ({}) has comparable endpoints: transitivity of the retained edges orders them",
                g.edges[id].label
            ));
        }
    }
    Ok(closure)
}

fn mask(g: &ConstraintGraph, u: &UncertaintyPattern) -> Result<Vec<bool>, GraphError> {
    let mut weakened = vec![false; g.edge_count()];
    for &id in &u.0 {
        *weakened
            .get_mut(id)
            .ok_or_else(|| GraphError::InvalidPattern(format!("no edge with id {id}")))? = true;
    }
    Ok(weakened)
}

pub fn is_valid_pattern(g: &ConstraintGraph, u: &UncertaintyPattern) -> bool {
    mask(g, u).is_ok_and(|w| pattern_holds(g, &w).is_ok())
}

/// Steps `combo` (strictly increasing indices below `n`) to the next
/// combination of the same size in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 && combo[i - 1] == n - k + i - 1 {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    combo[i - 1] += 1;
    for j in i..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// Visits subsets of `0..m` by size, then lexicographically, up to `max_size`.
/// The visitor returns `true` to stop.
fn for_each_subset(
    m: usize,
    max_size: usize,
    budget: u64,
    mut visit: impl FnMut(&[usize]) -> bool,
) -> Result<(), GraphError> {
    let mut seen = 0u64;
    for k in 0..=max_size.min(m) {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            seen += 1;
            if seen > budget {
                return Err(GraphError::BudgetExceeded { budget });
            }
            if visit(&combo) {
                return Ok(());
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Ok(())
}

pub const DEFAULT_SUBSET_BUDGET: u64 = 1_000_000;

/// All inclusion-minimal valid patterns of size at most `max_size`, ordered by
/// size then lexicographically.
pub fn valid_uncertainty_patterns(
    g: &ConstraintGraph,
    max_size: usize,
    budget: u64,
) -> Result<Vec<UncertaintyPattern>, GraphError> {
    let m = g.edge_count();
    let mut found: Vec<UncertaintyPattern> = Vec::new();
    let mut weakened = vec![false; m];
    for_each_subset(m, max_size, budget, |combo| {
        if found.iter().any(|p| p.0.iter().all(|e| combo.contains(e))) {
            return false;
        }
        weakened.iter_mut().for_each(|w| *w = false);
        for &e in combo {
            weakened[e] = true;
        }
        if pattern_holds(g, &weakened).is_ok() {
            found.push(UncertaintyPattern::new(combo.iter().copied()));
        }
        false
    })?;
    Ok(found)
}

/// Size of the smallest valid pattern. Weakening every edge is always valid,
/// so this is at most the edge count.
pub fn min_uncertainty_size(g: &ConstraintGraph, budget: u64) -> Result<usize, GraphError> {
    let m = g.edge_count();
    let mut best = m;
    let mut weakened = vec![false; m];
    for_each_subset(m, m, budget, |combo| {
        weakened.iter_mut().for_each(|w| *w = false);
        for &e in combo {
            weakened[e] = true;
        }
        if pattern_holds(g, &weakened).is_ok() {
            best = combo.len();
            return true;
        }
        false
    })?;
    Ok(best)
}

/// Comparison table over a finite world set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrder {
    worlds: Vec<WorldId>,
    table: Vec<Verdict>,
}

impl PartialOrder {
    /// Wraps a row-major `n × n` table without checking order laws; use
    /// [`validate_partial_order`] for that.
    pub fn from_table(worlds: Vec<WorldId>, table: Vec<Verdict>) -> Self {
        assert_eq!(table.len(), worlds.len() * worlds.len(), "table must be n × n");
        PartialOrder { worlds, table }
    }

    /// The order induced by listing worlds from worst to best.
    pub fn from_chain(worlds_ascending: &[WorldId]) -> Self {
        let n = worlds_ascending.len();
        let mut table = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                table.push(i.cmp(&j).into());
            }
        }
        PartialOrder {
            worlds: worlds_ascending.to_vec(),
            table,
        }
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> Verdict {
        self.table[i * self.worlds.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Verdict) {
        let n = self.worlds.len();
        self.table[i * n + j] = v;
    }

    pub fn index_of(&self, id: &WorldId) -> Option<usize> {
        self.worlds.iter().position(|w| w == id)
    }

    pub fn compare(&self, a: &WorldId, b: &WorldId) -> Option<Verdict> {
        Some(self.at(self.index_of(a)?, self.index_of(b)?))
    }

    /// Rows of verdict symbols, for reports.
    pub fn symbol_rows(&self) -> Vec<String> {
        let n = self.worlds.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j).symbol()).collect::<Vec<_>>().join(" "))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawViolation {
    /// `V(a, a)` is not `Equal`.
    Reflexivity { a: WorldId, found: Verdict },
    /// `V(a, b)` and `V(b, a)` are not mirror images.
    Antisymmetry { a: WorldId, b: WorldId, ab: Verdict, ba: Verdict },
    /// Incomparability is not symmetric.
    IncomparableSymmetry { a: WorldId, b: WorldId, ab: Verdict, ba: Verdict },
    /// `a ≤ b ≤ c` without the matching `a ≤ c`.
    Transitivity { a: WorldId, b: WorldId, c: WorldId, ac: Verdict, expected: Verdict },
}

/// Checks reflexivity, antisymmetry, symmetric incomparability and
/// transitivity, reporting every offending pair or triple.
pub fn validate_partial_order(po: &PartialOrder) -> Result<(), Vec<LawViolation>> {
    let n = po.len();
    let w = |i: usize| po.worlds[i].clone();
    let mut violations = Vec::new();
    for i in 0..n {
        if po.at(i, i) != Verdict::Equal {
            violations.push(LawViolation::Reflexivity { a: w(i), found: po.at(i, i) });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (ab, ba) = (po.at(i, j), po.at(j, i));
            if ab.reverse() == ba {
                continue;
            }
            if ab == Verdict::Incomparable || ba == Verdict::Incomparable {
                violations.push(LawViolation::IncomparableSymmetry { a: w(i), b: w(j), ab, ba });
            } else {
                violations.push(LawViolation::Antisymmetry { a: w(i), b: w(j), ab, ba });
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let ab = po.at(a, b);
            if a == b || !ab.is_le() {
                continue;
            }
            for c in 0..n {
                let bc = po.at(b, c);
                if c == b || !bc.is_le() {
                    continue;
                }
                let expected = if ab == Verdict::Equal && bc == Verdict::Equal {
                    Verdict::Equal
                } else {
                    Verdict::Less
                };
                let ac = po.at(a, c);
                // a < b ≤ a would already be an antisymmetry failure.
                if a != c && ac != expected {
                    violations.push(LawViolation::Transitivity {
                        a: w(a),
                        b: w(b),
                        c: w(c),
                        ac,
                        expected,
                    });
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// The least partial order forced by the edges outside `u`: reachable pairs
/// are `Less`, everything unforced is `Incomparable`.
pub fn partial_order_from(
    g: &ConstraintGraph,
    u: &UncertaintyPattern,
) -> Result<PartialOrder, GraphError> {
    let weakened = mask(g, u)?;
    let closure = pattern_holds(g, &weakened).map_err(GraphError::InvalidPattern)?;
    let n = g.world_count();
    let mut table = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            table.push(if i == j {
                Verdict::Equal
            } else if closure.reaches(i, j) {
                Verdict::Less
            } else if closure.reaches(j, i) {
                Verdict::Greater
            } else {
                Verdict::Incomparable
            });
        }
    }
    Ok(PartialOrder {
        worlds: g.worlds.clone(),
        table,
    })
}
