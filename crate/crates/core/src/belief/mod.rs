//! Pairwise beliefs about which world is better, and the distributions over
//! total orders that can realize them.
//!
//! `Z(a, b)` is the probability that `a` is strictly better than `b`. Total
//! orders are listed from worst to best, so the point mass on `[x1, x2, x3]`
//! puts `x3` on top. Explicit equality gets no probability: `Z(a, a) = 1/2`
//! and `Z(a, b) + Z(b, a) = 1`.

mod polytope;

pub use polytope::{
    exact_feasibility, float_feasibility, minimax_cycle_bound, rotation_mixture,
    violation_probabilities, CycleSpec, FarkasCertificate, Feasibility, FloatFeasibility,
    MinimaxBound, DEFAULT_DIMENSION_CAP,
};

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::WorldId;
use crate::rational::{format_rational, int, is_probability, ratio, Rational, RationalText};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("expected a {n}×{n} matrix")]
    Shape { n: usize },
    #[error("duplicate world {0}")]
    DuplicateWorld(WorldId),
    #[error("entry for ({row}, {col}) is {value}, not a probability")]
    NotProbability { row: WorldId, col: WorldId, value: String },
    #[error("diagonal entry for {0} must be 1/2")]
    Diagonal(WorldId),
    #[error("Z({a}, {b}) and Z({b}, {a}) must sum to 1")]
    Complement { a: WorldId, b: WorldId },
    #[error("distribution has no orders")]
    EmptyDistribution,
    #[error("order {index} is not a permutation of the world set")]
    NotPermutation { index: usize },
    #[error("probability of order {index} is negative")]
    NegativeProbability { index: usize },
    #[error("probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: String },
    #[error("{orders} orders but {probabilities} probabilities")]
    LengthMismatch { orders: usize, probabilities: usize },
    #[error("{n} worlds exceed the dimension cap {cap}")]
    DimensionCap { n: usize, cap: usize },
    #[error("a cycle needs at least 3 worlds, got {0}")]
    CycleTooShort(usize),
    #[error("path length {len} exceeds the {n} available worlds")]
    PathTooLong { len: usize, n: usize },
    #[error("chain entry {index} is not a probability")]
    ChainEntry { index: usize },
    #[error("empty chain")]
    EmptyChain,
    #[error("world {0} is not in the world set")]
    UnknownWorld(WorldId),
}

fn check_unique(worlds: &[WorldId]) -> Result<(), BeliefError> {
    let mut seen = HashSet::new();
    for w in worlds {
        if !seen.insert(w) {
            return Err(BeliefError::DuplicateWorld(w.clone()));
        }
    }
    Ok(())
}

/// Pairwise probabilities `Z(a, b)` over an ordered world list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct BeliefMatrix {
    worlds: Vec<WorldId>,
    z: Vec<Vec<Rational>>,
    evidence: Option<String>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    worlds: Vec<WorldId>,
    z: Vec<Vec<RationalText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evidence: Option<String>,
}

impl TryFrom<RawMatrix> for BeliefMatrix {
    type Error = BeliefError;

    fn try_from(raw: RawMatrix) -> Result<Self, BeliefError> {
        let z = raw
            .z
            .into_iter()
            .map(|row| row.into_iter().map(|q| q.0).collect())
            .collect();
        let m = BeliefMatrix::new(raw.worlds, z)?;
        Ok(match raw.evidence {
            Some(tag) => m.with_evidence(tag),
            None => m,
        })
    }
}

impl From<BeliefMatrix> for RawMatrix {
    fn from(m: BeliefMatrix) -> Self {
        RawMatrix {
            worlds: m.worlds,
            z: m
                .z
                .into_iter()
                .map(|row| row.into_iter().map(RationalText).collect())
                .collect(),
            evidence: m.evidence,
        }
    }
}

impl BeliefMatrix {
    pub fn new(worlds: Vec<WorldId>, z: Vec<Vec<Rational>>) -> Result<Self, BeliefError> {
        let n = worlds.len();
        check_unique(&worlds)?;
        if z.len() != n || z.iter().any(|row| row.len() != n) {
            return Err(BeliefError::Shape { n });
        }
        let half = ratio(1, 2);
        for i in 0..n {
            for j in 0..n {
                if !is_probability(&z[i][j]) {
                    return Err(BeliefError::NotProbability {
                        row: worlds[i].clone(),
                        col: worlds[j].clone(),
                        value: format_rational(&z[i][j]),
                    });
                }
                if i == j && z[i][i] != half {
                    return Err(BeliefError::Diagonal(worlds[i].clone()));
                }
                if i < j && &z[i][j] + &z[j][i] != Rational::one() {
                    return Err(BeliefError::Complement {
                        a: worlds[i].clone(),
                        b: worlds[j].clone(),
                    });
                }
            }
        }
        Ok(BeliefMatrix {
            worlds,
            z,
            evidence: None,
        })
    }

    /// Builds a matrix from the entries above the diagonal; the rest follows
    /// from complement symmetry.
    pub fn from_upper<F>(worlds: Vec<WorldId>, mut upper: F) -> Result<Self, BeliefError>
    where
        F: FnMut(usize, usize) -> Rational,
    {
        let n = worlds.len();
        let mut z = vec![vec![ratio(1, 2); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = upper(i, j);
                z[j][i] = int(1) - &v;
                z[i][j] = v;
            }
        }
        BeliefMatrix::new(worlds, z)
    }

    /// Tags the matrix with the evidence it was formed under. The tag is
    /// carried along and never interpreted.
    pub fn with_evidence(mut self, tag: impl Into<String>) -> Self {
        self.evidence = Some(tag.into());
        self
    }

    pub fn evidence(&self) -> Option<&str> {
        self.evidence.as_deref()
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

    pub fn index_of(&self, id: &WorldId) -> Option<usize> {
        self.worlds.iter().position(|w| w == id)
    }

    pub fn at(&self, i: usize, j: usize) -> &Rational {
        &self.z[i][j]
    }

    pub fn get(&self, a: &WorldId, b: &WorldId) -> Option<&Rational> {
        Some(self.at(self.index_of(a)?, self.index_of(b)?))
    }
}

/// A probability distribution over total orders of one world set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct OrderDistribution {
    worlds: Vec<WorldId>,
    /// Orders as world indices from worst to best.
    orders: Vec<Vec<usize>>,
    p: Vec<Rational>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    worlds: Option<Vec<WorldId>>,
    orders: Vec<Vec<WorldId>>,
    p: Vec<RationalText>,
}

impl TryFrom<RawDistribution> for OrderDistribution {
    type Error = BeliefError;

    fn try_from(raw: RawDistribution) -> Result<Self, BeliefError> {
        if raw.orders.len() != raw.p.len() {
            return Err(BeliefError::LengthMismatch {
                orders: raw.orders.len(),
                probabilities: raw.p.len(),
            });
        }
        let support = raw.orders.into_iter().zip(raw.p.into_iter().map(|q| q.0)).collect();
        match raw.worlds {
            Some(worlds) => OrderDistribution::with_worlds(worlds, support),
            None => OrderDistribution::from_orders(support),
        }
    }
}

impl From<OrderDistribution> for RawDistribution {
    fn from(d: OrderDistribution) -> Self {
        RawDistribution {
            orders: d.orders().collect(),
            p: d.p.iter().cloned().map(RationalText).collect(),
            worlds: Some(d.worlds),
        }
    }
}

impl OrderDistribution {
    /// Validates index orders over `worlds` with their probabilities.
    pub fn new(
        worlds: Vec<WorldId>,
        support: Vec<(Vec<usize>, Rational)>,
    ) -> Result<Self, BeliefError> {
        check_unique(&worlds)?;
        if support.is_empty() {
            return Err(BeliefError::EmptyDistribution);
        }
        let n = worlds.len();
        let mut sum = Rational::zero();
        for (index, (order, p)) in support.iter().enumerate() {
            let mut seen = vec![false; n];
            let ok = order.len() == n
                && order.iter().all(|&w| w < n && !std::mem::replace(&mut seen[w], true));
            if !ok {
                return Err(BeliefError::NotPermutation { index });
            }
            if p.is_negative() {
                return Err(BeliefError::NegativeProbability { index });
            }
            sum += p;
        }
        if !sum.is_one() {
            return Err(BeliefError::ProbabilitySum {
                sum: format_rational(&sum),
            });
        }
        let (orders, p) = support.into_iter().unzip();
        Ok(OrderDistribution { worlds, orders, p })
    }

    /// Orders given by world id, over an explicit world list.
    pub fn with_worlds(
        worlds: Vec<WorldId>,
        support: Vec<(Vec<WorldId>, Rational)>,
    ) -> Result<Self, BeliefError> {
        let mut indexed = Vec::with_capacity(support.len());
        for (index, (order, p)) in support.into_iter().enumerate() {
            let idx = order
                .iter()
                .map(|w| worlds.iter().position(|x| x == w))
                .collect::<Option<Vec<_>>>()
                .ok_or(BeliefError::NotPermutation { index })?;
            indexed.push((idx, p));
        }
        OrderDistribution::new(worlds, indexed)
    }

    /// Orders given by world id; the world list is taken from the first order.
    pub fn from_orders(support: Vec<(Vec<WorldId>, Rational)>) -> Result<Self, BeliefError> {
        let worlds = support
            .first()
            .map(|(o, _)| o.clone())
            .ok_or(BeliefError::EmptyDistribution)?;
        OrderDistribution::with_worlds(worlds, support)
    }

    pub fn point_mass(ascending: Vec<WorldId>) -> Result<Self, BeliefError> {
        OrderDistribution::from_orders(vec![(ascending, int(1))])
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn probabilities(&self) -> &[Rational] {
        &self.p
    }

    /// Orders as world ids, worst first.
    pub fn orders(&self) -> impl Iterator<Item = Vec<WorldId>> + '_ {
        self.orders
            .iter()
            .map(|o| o.iter().map(|&w| self.worlds[w].clone()).collect())
    }

    /// `(rank, p)` per order, where `rank[w]` is world `w`'s position
    /// counted from the worst.
    pub fn ranked(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> + '_ {
        self.orders.iter().zip(&self.p).map(|(order, p)| {
            let mut rank = vec![0; order.len()];
            for (pos, &w) in order.iter().enumerate() {
                rank[w] = pos;
            }
            (rank, p)
        })
    }

    pub fn index_of(&self, id: &WorldId) -> Option<usize> {
        self.worlds.iter().position(|w| w == id)
    }

    /// Total probability of the orders whose rank vector satisfies `pred`.
    pub fn probability_that(&self, mut pred: impl FnMut(&[usize]) -> bool) -> Rational {
        self.ranked()
            .filter(|(rank, _)| pred(rank))
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }
}

pub fn matrix_from_distribution(d: &OrderDistribution) -> BeliefMatrix {
    let n = d.worlds.len();
    let mut upper = vec![vec![Rational::zero(); n]; n];
    for (rank, p) in d.ranked() {
        for i in 0..n {
            for j in i + 1..n {
                if rank[i] > rank[j] {
                    upper[i][j] += p;
                }
            }
        }
    }
    BeliefMatrix::from_upper(d.worlds.clone(), |i, j| upper[i][j].clone())
        .expect("a valid distribution induces a valid matrix")
}

/// Bounds on `Z(x_1, x_k)` implied by the chain `Z(x_1, x_2), …, Z(x_{k−1}, x_k)`.
pub fn path_bounds(chain: &[Rational]) -> Result<(Rational, Rational), BeliefError> {
    if chain.is_empty() {
        return Err(BeliefError::EmptyChain);
    }
    if let Some(index) = chain.iter().position(|z| !is_probability(z)) {
        return Err(BeliefError::ChainEntry { index });
    }
    let one = Rational::one();
    let sum: Rational = chain.iter().sum();
    let miss: Rational = chain.iter().map(|z| &one - z).sum();
    let upper = sum.min(one.clone());
    let lower = (one - miss).max(Rational::zero());
    Ok((lower, upper))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathViolation {
    pub path: Vec<WorldId>,
    pub observed: RationalText,
    pub lower: RationalText,
    pub upper: RationalText,
    /// Distance from `observed` to the nearer bound it breaches.
    pub slack: RationalText,
}

/// Checks `Z(x_1, x_k)` against [`path_bounds`] for every simple path with
/// 3 to `max_path_len` worlds.
pub fn check_path_coherence(
    m: &BeliefMatrix,
    max_path_len: usize,
) -> Result<Vec<PathViolation>, BeliefError> {
    let n = m.len();
    if max_path_len > n {
        return Err(BeliefError::PathTooLong { len: max_path_len, n });
    }
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(max_path_len);
    let mut used = vec![false; n];
    for start in 0..n {
        path.push(start);
        used[start] = true;
        extend_paths(m, max_path_len, &mut path, &mut used, &mut out);
        used[start] = false;
        path.pop();
    }
    Ok(out)
}

fn extend_paths(
    m: &BeliefMatrix,
    max_len: usize,
    path: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<PathViolation>,
) {
    if path.len() >= 3 {
        let chain: Vec<Rational> = path.windows(2).map(|w| m.at(w[0], w[1]).clone()).collect();
        let (lower, upper) = path_bounds(&chain).expect("matrix entries are probabilities");
        let observed = m.at(path[0], path[path.len() - 1]);
        let slack = if *observed < lower {
            Some(&lower - observed)
        } else if *observed > upper {
            Some(observed - &upper)
        } else {
            None
        };
        if let Some(slack) = slack {
            out.push(PathViolation {
                path: path.iter().map(|&i| m.worlds[i].clone()).collect(),
                observed: RationalText(observed.clone()),
                lower: RationalText(lower),
                upper: RationalText(upper),
                slack: RationalText(slack),
            });
        }
    }
    if path.len() == max_len {
        return;
    }
    for next in 0..used.len() {
        if used[next] {
            continue;
        }
        used[next] = true;
        path.push(next);
        extend_paths(m, max_len, path, used, out);
        path.pop();
        used[next] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ids(names: &[&str]) -> Vec<WorldId> {
        names.iter().map(|s| WorldId::from(*s)).collect()
    }

    #[test]
    fn point_mass_matrix() {
        let d = OrderDistribution::point_mass(ids(&["x1", "x2", "x3"])).unwrap();
        let m = matrix_from_distribution(&d);
        let z = |a: &str, b: &str| m.get(&a.into(), &b.into()).unwrap().clone();
        assert_eq!(z("x2", "x1"), int(1));
        assert_eq!(z("x3", "x1"), int(1));
        assert_eq!(z("x3", "x2"), int(1));
        assert_eq!(z("x1", "x3"), int(0));
        assert_eq!(z("x2", "x2"), ratio(1, 2));
    }

    #[test]
    fn swapped_pair_is_a_coin_flip() {
        let d = OrderDistribution::from_orders(vec![
            (ids(&["x1", "x2"]), ratio(1, 2)),
            (ids(&["x2", "x1"]), ratio(1, 2)),
        ])
        .unwrap();
        let m = matrix_from_distribution(&d);
        assert_eq!(*m.at(0, 1), ratio(1, 2));
    }

    #[test]
    fn matrix_validation() {
        let w = ids(&["a", "b"]);
        let h = ratio(1, 2);
        assert!(BeliefMatrix::new(w.clone(), vec![vec![h.clone(), int(1)], vec![int(0), h.clone()]]).is_ok());
        assert!(matches!(
            BeliefMatrix::new(w.clone(), vec![vec![h.clone(), int(1)], vec![int(1), h.clone()]]),
            Err(BeliefError::Complement { .. })
        ));
        assert!(matches!(
            BeliefMatrix::new(w.clone(), vec![vec![int(1), int(1)], vec![int(0), h.clone()]]),
            Err(BeliefError::Diagonal(_))
        ));
        assert!(matches!(
            BeliefMatrix::new(w.clone(), vec![vec![h.clone(), int(2)], vec![int(-1), h.clone()]]),
            Err(BeliefError::NotProbability { .. })
        ));
        assert!(matches!(
            BeliefMatrix::new(w, vec![vec![h]]),
            Err(BeliefError::Shape { n: 2 })
        ));
    }

    #[test]
    fn distribution_validation() {
        let w = ids(&["a", "b"]);
        let bad_sum = OrderDistribution::new(w.clone(), vec![(vec![0, 1], ratio(1, 2))]);
        assert!(matches!(bad_sum, Err(BeliefError::ProbabilitySum { .. })));
        let bad_perm = OrderDistribution::new(w.clone(), vec![(vec![0, 0], int(1))]);
        assert!(matches!(bad_perm, Err(BeliefError::NotPermutation { index: 0 })));
        let negative = OrderDistribution::new(
            w.clone(),
            vec![(vec![0, 1], int(2)), (vec![1, 0], int(-1))],
        );
        assert!(matches!(negative, Err(BeliefError::NegativeProbability { index: 1 })));
        assert!(matches!(
            OrderDistribution::new(w, vec![]),
            Err(BeliefError::EmptyDistribution)
        ));
    }

    #[test]
    fn path_bound_examples() {
        assert_eq!(path_bounds(&[int(1), int(1)]).unwrap(), (int(1), int(1)));
        assert_eq!(path_bounds(&[ratio(1, 2), ratio(1, 2)]).unwrap(), (int(0), int(1)));
        assert_eq!(
            path_bounds(&[ratio(9, 10), ratio(8, 10)]).unwrap(),
            (ratio(7, 10), int(1))
        );
        assert_eq!(path_bounds(&[ratio(1, 10), ratio(1, 5)]).unwrap(), (int(0), ratio(3, 10)));
        assert!(path_bounds(&[int(2)]).is_err());
        assert!(path_bounds(&[]).is_err());
    }

    #[test]
    fn forced_chain_with_reversed_span() {
        let m = BeliefMatrix::from_upper(ids(&["1", "2", "3"]), |i, j| match (i, j) {
            (0, 2) => int(0),
            _ => int(1),
        })
        .unwrap();
        let v = check_path_coherence(&m, 3).unwrap();
        let first = v.iter().find(|v| v.path == ids(&["1", "2", "3"])).unwrap();
        assert_eq!(first.lower.0, int(1));
        assert_eq!(first.slack.0, int(1));
    }

    #[test]
    fn path_length_is_capped() {
        let m = matrix_from_distribution(&OrderDistribution::point_mass(ids(&["a", "b"])).unwrap());
        assert!(check_path_coherence(&m, 3).is_err());
        assert!(check_path_coherence(&m, 2).unwrap().is_empty());
    }

    #[test]
    fn serde_round_trips() {
        let d = OrderDistribution::from_orders(vec![
            (ids(&["x1", "x2", "x3"]), ratio(1, 3)),
            (ids(&["x3", "x1", "x2"]), ratio(2, 3)),
        ])
        .unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: OrderDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let m = matrix_from_distribution(&d).with_evidence("k");
        let json = serde_json::to_string(&m).unwrap();
        let back: BeliefMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let parsed: BeliefMatrix =
            serde_json::from_str(r#"{"worlds":["a","b"],"z":[["1/2","0.25"],[0.75,"1/2"]]}"#).unwrap();
        assert_eq!(*parsed.at(0, 1), ratio(1, 4));
        let bad = serde_json::from_str::<BeliefMatrix>(r#"{"worlds":["a","b"],"z":[["1/2",1],[1,"1/2"]]}"#);
        assert!(bad.is_err());
    }
}
