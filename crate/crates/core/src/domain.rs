//! Populations, welfare levels and the social welfare functions ranked over them.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rational::{format_rational, Rational, RationalText};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("average welfare is undefined for an empty population")]
    EmptyPopulation,
    #[error("group at welfare {level} has count 0; counts must be positive")]
    ZeroCount { level: String },
}

/// Welfare of one life. Zero marks a life that is barely worth living.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WelfareLevel(pub Rational);

impl WelfareLevel {
    pub fn new(value: Rational) -> Self {
        WelfareLevel(value)
    }

    pub fn from_int(n: i64) -> Self {
        WelfareLevel(crate::rational::int(n))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
}

impl fmt::Display for WelfareLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl From<Rational> for WelfareLevel {
    fn from(q: Rational) -> Self {
        WelfareLevel(q)
    }
}

/// Anonymous multiset of welfare levels, kept sorted by level with equal
/// levels merged, so derived equality is multiset equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Population {
    groups: Vec<(WelfareLevel, u64)>,
}

impl Population {
    pub fn empty() -> Self {
        Population::default()
    }

    pub fn new<I>(groups: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = (WelfareLevel, u64)>,
    {
        let mut groups: Vec<_> = groups.into_iter().collect();
        if let Some((level, _)) = groups.iter().find(|(_, c)| *c == 0) {
            return Err(DomainError::ZeroCount {
                level: level.to_string(),
            });
        }
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(WelfareLevel, u64)> = Vec::with_capacity(groups.len());
        for (level, count) in groups {
            match merged.last_mut() {
                Some((last, c)) if *last == level => *c += count,
                _ => merged.push((level, count)),
            }
        }
        Ok(Population { groups: merged })
    }

    /// `count` people all at `level`. Panics if `count` is zero.
    pub fn uniform(level: WelfareLevel, count: u64) -> Self {
        assert!(count > 0, "uniform population needs a positive count");
        Population {
            groups: vec![(level, count)],
        }
    }

    /// Convenience for integer-valued tests and fixtures.
    pub fn from_ints(groups: &[(i64, u64)]) -> Result<Self, DomainError> {
        Population::new(
            groups
                .iter()
                .map(|&(level, count)| (WelfareLevel::from_int(level), count)),
        )
    }

    pub fn groups(&self) -> &[(WelfareLevel, u64)] {
        &self.groups
    }

    pub fn size(&self) -> u64 {
        self.groups.iter().map(|(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn min_level(&self) -> Option<&WelfareLevel> {
        self.groups.first().map(|(l, _)| l)
    }

    pub fn max_level(&self) -> Option<&WelfareLevel> {
        self.groups.last().map(|(l, _)| l)
    }

    pub fn count_at(&self, level: &WelfareLevel) -> u64 {
        self.groups
            .binary_search_by(|(l, _)| l.cmp(level))
            .map(|i| self.groups[i].1)
            .unwrap_or(0)
    }

    pub fn all_levels(&self, pred: impl Fn(&WelfareLevel) -> bool) -> bool {
        self.groups.iter().all(|(l, _)| pred(l))
    }

    pub fn union(&self, other: &Population) -> Population {
        population_union(self, other)
    }

    /// Multiset difference `self − other`, or `None` when `other` is not
    /// contained in `self`.
    pub fn difference(&self, other: &Population) -> Option<Population> {
        let mut groups = Vec::new();
        for (level, count) in &self.groups {
            let take = other.count_at(level);
            if take > *count {
                return None;
            }
            if *count > take {
                groups.push((level.clone(), count - take));
            }
        }
        let covered = other
            .groups
            .iter()
            .all(|(level, c)| self.count_at(level) >= *c);
        covered.then_some(Population { groups })
    }

    /// The `k` best-off people.
    pub fn top(&self, k: u64) -> Population {
        let mut rest = k;
        let mut groups = Vec::new();
        for (level, count) in self.groups.iter().rev() {
            if rest == 0 {
                break;
            }
            let take = rest.min(*count);
            groups.push((level.clone(), take));
            rest -= take;
        }
        groups.reverse();
        Population { groups }
    }
}

impl Serialize for WelfareLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RationalText(self.0.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WelfareLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        RationalText::deserialize(deserializer).map(|q| WelfareLevel(q.0))
    }
}

/// Written as `[[level, count], ...]` in canonical order.
impl Serialize for Population {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.groups.iter())
    }
}

impl<'de> Deserialize<'de> for Population {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let groups = Vec::<(WelfareLevel, u64)>::deserialize(deserializer)?;
        Population::new(groups).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (level, count)) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({level}, {count})")?;
        }
        f.write_str("}")
    }
}

pub fn population_union(a: &Population, b: &Population) -> Population {
    Population::new(a.groups.iter().chain(b.groups.iter()).cloned())
        .expect("canonical populations have positive counts")
}

pub fn total_welfare(p: &Population) -> Rational {
    p.groups
        .iter()
        .map(|(level, count)| &level.0 * Rational::from_integer(BigInt::from(*count)))
        .fold(Rational::zero(), |acc, x| acc + x)
}

pub fn average_welfare(p: &Population) -> Result<Rational, DomainError> {
    let size = p.size();
    if size == 0 {
        return Err(DomainError::EmptyPopulation);
    }
    Ok(total_welfare(p) / Rational::from_integer(BigInt::from(size)))
}

/// At most one distinct level; the empty population counts as equal.
pub fn is_perfectly_equal(p: &Population) -> bool {
    p.groups.len() <= 1
}

/// `a` and `b` have the same size and, pairing people by rank, everyone in
/// `a` is at least as well off (`strict`: strictly better off) as their
/// counterpart in `b`.
pub fn dominates_pointwise(a: &Population, b: &Population, strict: bool) -> bool {
    if a.size() != b.size() {
        return false;
    }
    let mut ia = a.groups.iter().map(|(l, c)| (l, *c));
    let mut ib = b.groups.iter().map(|(l, c)| (l, *c));
    let (mut ca, mut cb) = (ia.next(), ib.next());
    while let (Some((la, na)), Some((lb, nb))) = (ca, cb) {
        let ok = if strict { la > lb } else { la >= lb };
        if !ok {
            return false;
        }
        let step = na.min(nb);
        ca = if na > step { Some((la, na - step)) } else { ia.next() };
        cb = if nb > step { Some((lb, nb - step)) } else { ib.next() };
    }
    true
}

/// A state of the world: a named population.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldId(pub String);

impl WorldId {
    pub fn new(id: impl Into<String>) -> Self {
        WorldId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for WorldId {
    fn from(s: &str) -> Self {
        WorldId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub id: WorldId,
    pub population: Population,
}

impl World {
    pub fn new(id: impl Into<String>, population: Population) -> Self {
        World {
            id: WorldId::new(id),
            population,
        }
    }
}

/// Four-valued comparison of `a` against `b`: `Less` means `a` is worse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Less,
    Equal,
    Greater,
    Incomparable,
}

impl Verdict {
    pub fn reverse(self) -> Verdict {
        match self {
            Verdict::Less => Verdict::Greater,
            Verdict::Greater => Verdict::Less,
            v => v,
        }
    }

    /// `a ≤ b` under this verdict.
    pub fn is_le(self) -> bool {
        matches!(self, Verdict::Less | Verdict::Equal)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Less => "<",
            Verdict::Equal => "=",
            Verdict::Greater => ">",
            Verdict::Incomparable => "?",
        }
    }
}

impl From<Ordering> for Verdict {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Verdict::Less,
            Ordering::Equal => Verdict::Equal,
            Ordering::Greater => Verdict::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SwfKind {
    TotalWelfare,
    AverageWelfare,
    /// Sum over persons of `welfare − c`.
    CriticalLevel(WelfareLevel),
}

impl SwfKind {
    pub fn score(&self, p: &Population) -> Result<Rational, DomainError> {
        match self {
            SwfKind::TotalWelfare => Ok(total_welfare(p)),
            SwfKind::AverageWelfare => average_welfare(p),
            SwfKind::CriticalLevel(c) => {
                let size = Rational::from_integer(BigInt::from(p.size()));
                Ok(total_welfare(p) - &c.0 * size)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            SwfKind::TotalWelfare => "total".into(),
            SwfKind::AverageWelfare => "average".into(),
            SwfKind::CriticalLevel(c) => format!("critical_level({c})"),
        }
    }
}

pub fn swf_compare(swf: &SwfKind, a: &Population, b: &Population) -> Result<Ordering, DomainError> {
    Ok(swf.score(a)?.cmp(&swf.score(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn pop(groups: &[(i64, u64)]) -> Population {
        Population::from_ints(groups).unwrap()
    }

    #[test]
    fn union_examples() {
        assert_eq!(
            population_union(&pop(&[(100, 10)]), &pop(&[(1, 5)])),
            pop(&[(1, 5), (100, 10)])
        );
        let p = pop(&[(3, 2), (-1, 4)]);
        assert_eq!(population_union(&p, &Population::empty()), p);
        assert_eq!(population_union(&pop(&[(1, 2)]), &pop(&[(1, 3)])), pop(&[(1, 5)]));
    }

    #[test]
    fn welfare_examples() {
        assert_eq!(total_welfare(&pop(&[(100, 10)])), int(1000));
        assert_eq!(total_welfare(&Population::empty()), int(0));
        let half = Population::new([(WelfareLevel(ratio(1, 2)), 3)]).unwrap();
        assert_eq!(total_welfare(&half), ratio(3, 2));
        let third = Population::new([(WelfareLevel(ratio(1, 3)), 3)]).unwrap();
        assert_eq!(total_welfare(&third), int(1));

        assert_eq!(average_welfare(&pop(&[(100, 10)])).unwrap(), int(100));
        assert_eq!(average_welfare(&pop(&[(100, 10), (0, 10)])).unwrap(), int(50));
        assert_eq!(
            average_welfare(&Population::empty()),
            Err(DomainError::EmptyPopulation)
        );
    }

    #[test]
    fn equality_examples() {
        assert!(is_perfectly_equal(&pop(&[(100, 10)])));
        assert!(!is_perfectly_equal(&pop(&[(100, 10), (1, 1)])));
        assert!(is_perfectly_equal(&Population::empty()));
    }

    #[test]
    fn zero_count_rejected() {
        assert!(matches!(
            Population::from_ints(&[(1, 0)]),
            Err(DomainError::ZeroCount { .. })
        ));
    }

    #[test]
    fn repugnant_shape_under_each_swf() {
        let a = pop(&[(100, 10)]);
        let z = pop(&[(1, 1001)]);
        assert_eq!(swf_compare(&SwfKind::TotalWelfare, &a, &z).unwrap(), Ordering::Less);
        assert_eq!(swf_compare(&SwfKind::AverageWelfare, &a, &z).unwrap(), Ordering::Greater);
        let cl = SwfKind::CriticalLevel(WelfareLevel::from_int(2));
        assert_eq!(cl.score(&a).unwrap(), int(980));
        assert_eq!(cl.score(&z).unwrap(), int(-1001));
        assert_eq!(swf_compare(&cl, &a, &z).unwrap(), Ordering::Greater);
        assert_eq!(
            swf_compare(&SwfKind::AverageWelfare, &a, &Population::empty()),
            Err(DomainError::EmptyPopulation)
        );
    }

    #[test]
    fn difference_and_top() {
        let p = pop(&[(1, 3), (5, 2), (9, 1)]);
        assert_eq!(p.difference(&pop(&[(1, 1), (9, 1)])), Some(pop(&[(1, 2), (5, 2)])));
        assert_eq!(p.difference(&pop(&[(2, 1)])), None);
        assert_eq!(p.difference(&pop(&[(9, 2)])), None);
        assert_eq!(p.top(3), pop(&[(5, 2), (9, 1)]));
        assert_eq!(p.top(4), pop(&[(1, 1), (5, 2), (9, 1)]));
    }

    #[test]
    fn pointwise_dominance() {
        assert!(dominates_pointwise(&pop(&[(11, 5)]), &pop(&[(10, 5)]), true));
        assert!(dominates_pointwise(&pop(&[(3, 1), (5, 1)]), &pop(&[(2, 1), (5, 1)]), false));
        assert!(!dominates_pointwise(&pop(&[(3, 1), (5, 1)]), &pop(&[(2, 1), (5, 1)]), true));
        assert!(!dominates_pointwise(&pop(&[(10, 2)]), &pop(&[(1, 1), (11, 1)]), false));
        assert!(!dominates_pointwise(&pop(&[(10, 2)]), &pop(&[(1, 1)]), false));
    }

    fn arb_population() -> impl Strategy<Value = Population> {
        arb_population_sized(0)
    }

    fn arb_population_sized(min_groups: usize) -> impl Strategy<Value = Population> {
        prop::collection::vec((-20i64..20, 1u64..6, 1i64..4), min_groups..4).prop_map(|gs| {
            Population::new(
                gs.into_iter()
                    .map(|(n, c, d)| (WelfareLevel(ratio(n, d)), c)),
            )
            .unwrap()
        })
    }

    fn arb_swf() -> impl Strategy<Value = SwfKind> {
        prop_oneof![
            Just(SwfKind::TotalWelfare),
            Just(SwfKind::AverageWelfare),
            (-5i64..5).prop_map(|c| SwfKind::CriticalLevel(WelfareLevel::from_int(c))),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn swf_compare_is_a_total_preorder(
            swf in arb_swf(),
            a in arb_population_sized(1),
            b in arb_population_sized(1),
            c in arb_population_sized(1),
        ) {
            let ab = swf_compare(&swf, &a, &b).unwrap();
            let ba = swf_compare(&swf, &b, &a).unwrap();
            let bc = swf_compare(&swf, &b, &c).unwrap();
            let ac = swf_compare(&swf, &a, &c).unwrap();
            prop_assert_eq!(swf_compare(&swf, &a, &a).unwrap(), Ordering::Equal);
            prop_assert_eq!(ab, ba.reverse());
            if ab != Ordering::Greater && bc != Ordering::Greater {
                prop_assert_ne!(ac, Ordering::Greater);
            }
        }
    }

    proptest! {
        #[test]
        fn union_is_commutative_associative_and_additive(
            a in arb_population(),
            b in arb_population(),
            c in arb_population(),
        ) {
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            let ab = a.union(&b);
            prop_assert_eq!(ab.size(), a.size() + b.size());
            prop_assert_eq!(total_welfare(&ab), total_welfare(&a) + total_welfare(&b));
            prop_assert_eq!(ab.difference(&b), Some(a.clone()));
        }
    }
}
