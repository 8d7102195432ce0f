//! Population-ethics adequacy conditions as instance checkers.
//!
//! Each [`AxiomInstance`] is one concrete requirement "`better` is at least as
//! good as `worse`" (strictly better for the strict conditions) whose
//! structural premise has been checked at construction. Universally
//! quantified conditions are audited by bounded exhaustive search in
//! [`audit_swf`]; a `NoneFound` result certifies the searched grid only.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint_graph::{next_combination, ConstraintGraph, GraphError};
use crate::domain::{
    dominates_pointwise, is_perfectly_equal, swf_compare, total_welfare, DomainError, Population,
    SwfKind, Verdict, WelfareLevel, World, WorldId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error("{axiom} premise not met: {reason}")]
    InvalidPremise { axiom: AxiomId, reason: String },
    #[error("world id {0} is bound to two different populations")]
    ConflictingWorldIds(WorldId),
    #[error("audit examined more than {budget} candidate instances")]
    BoundsTooLarge { budget: u64 },
    #[error("invalid search space: {0}")]
    InvalidBounds(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomId {
    Quality,
    InequalityAversion,
    EgalitarianDominance,
    DominanceAddition,
    AvoidRepugnant,
    AvoidSadistic,
    AvoidVeryAntiEgalitarian,
    Dominance,
    Addition,
    PriorityCompensation,
}

impl AxiomId {
    pub const ALL: [AxiomId; 10] = [
        AxiomId::Quality,
        AxiomId::InequalityAversion,
        AxiomId::EgalitarianDominance,
        AxiomId::DominanceAddition,
        AxiomId::AvoidRepugnant,
        AxiomId::AvoidSadistic,
        AxiomId::AvoidVeryAntiEgalitarian,
        AxiomId::Dominance,
        AxiomId::Addition,
        AxiomId::PriorityCompensation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AxiomId::Quality => "quality",
            AxiomId::InequalityAversion => "inequality_aversion",
            AxiomId::EgalitarianDominance => "egalitarian_dominance",
            AxiomId::DominanceAddition => "dominance_addition",
            AxiomId::AvoidRepugnant => "avoid_repugnant",
            AxiomId::AvoidSadistic => "avoid_sadistic",
            AxiomId::AvoidVeryAntiEgalitarian => "avoid_very_anti_egalitarian",
            AxiomId::Dominance => "dominance",
            AxiomId::Addition => "addition",
            AxiomId::PriorityCompensation => "priority_compensation",
        }
    }

    /// Whether the requirement is strict preference rather than "at least as good".
    pub fn is_strict(self) -> bool {
        matches!(
            self,
            AxiomId::EgalitarianDominance | AxiomId::AvoidVeryAntiEgalitarian
        )
    }

    /// Whether the premise refers to the very-high or very-low-positive thresholds.
    pub fn uses_thresholds(self) -> bool {
        matches!(
            self,
            AxiomId::Quality
                | AxiomId::AvoidRepugnant
                | AxiomId::AvoidSadistic
                | AxiomId::PriorityCompensation
        )
    }

    /// Whether instances must name a base population.
    pub fn needs_base(self) -> bool {
        matches!(self, AxiomId::Addition | AxiomId::PriorityCompensation)
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxiomId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxiomId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown axiom id {s:?}"))
    }
}

/// Thresholds for the informal "very high" and "very low positive" welfare.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AxiomParams {
    /// Levels at or above this are very high.
    pub very_high: WelfareLevel,
    /// Levels in `(0, very_low_positive]` are very low positive.
    pub very_low_positive: WelfareLevel,
}

impl AxiomParams {
    pub fn new(very_high: WelfareLevel, very_low_positive: WelfareLevel) -> Self {
        AxiomParams {
            very_high,
            very_low_positive,
        }
    }

    fn is_very_high(&self, l: &WelfareLevel) -> bool {
        *l >= self.very_high
    }

    fn is_very_low_positive(&self, l: &WelfareLevel) -> bool {
        l.is_positive() && *l <= self.very_low_positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Satisfaction {
    Satisfied,
    Violated,
    UncertainlySatisfied,
}

/// One structurally valid requirement `better ≥ worse` (or `>`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomInstance {
    axiom: AxiomId,
    better: World,
    worse: World,
    base: Option<Population>,
    params: AxiomParams,
    label: Option<String>,
}

impl AxiomInstance {
    /// Builds an instance, checking the axiom's structural premise.
    ///
    /// Premises, with `B` the required-better world and `W` the required-worse:
    ///
    /// * `quality`: `B` perfectly equal at a very high level; `W` nonempty, all very low positive.
    /// * `inequality_aversion`: `W = A ∪ C` with `A`, `C` perfectly equal at levels `a > c` and
    ///   `|C| > |A|`; `B` perfectly equal at `b` with `a > b > c` and `|B| = |W|`.
    /// * `egalitarian_dominance` (strict): `B` perfectly equal, `|B| = |W|`, everyone in `B`
    ///   above everyone in `W`.
    /// * `dominance_addition`: `B` is `W` with nobody worse off (rank-wise) plus at least one
    ///   added life of positive welfare.
    /// * `avoid_repugnant`: `B` nonempty and all very high; `W` all very low positive and larger.
    /// * `avoid_sadistic`: `B = A ∪ P`, `W = A ∪ N` with `A` all very high, `P` positive,
    ///   `N` negative and `|N| ≤ |P|`.
    /// * `avoid_very_anti_egalitarian` (strict): `B` perfectly equal with at least two people;
    ///   `W` the same size, not perfectly equal, lower total.
    /// * `dominance`: same size, everyone in `B` strictly above their rank-counterpart in `W`.
    /// * `addition` (needs `base = A`): `B = A ∪ G`, `W = A ∪ C`, everyone in `G` below everyone
    ///   in `A`, everyone in `C` below everyone in `G`, `|C| > |G|`.
    /// * `priority_compensation` (needs `base = R`): `W = R ∪ {v}` with `v` very low positive;
    ///   `B = R ∪ {s} ∪ n × {h}` with `s < 0` and `h` very high.
    pub fn new(
        axiom: AxiomId,
        better: World,
        worse: World,
        base: Option<Population>,
        params: AxiomParams,
    ) -> Result<Self, AxiomError> {
        check_premise(axiom, &better.population, &worse.population, base.as_ref(), &params)
            .map_err(|reason| AxiomError::InvalidPremise { axiom, reason })?;
        Ok(AxiomInstance {
            axiom,
            better,
            worse,
            base,
            params,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn axiom(&self) -> AxiomId {
        self.axiom
    }

    pub fn better(&self) -> &World {
        &self.better
    }

    pub fn worse(&self) -> &World {
        &self.worse
    }

    pub fn base(&self) -> Option<&Population> {
        self.base.as_ref()
    }

    pub fn params(&self) -> &AxiomParams {
        &self.params
    }

    pub fn is_strict(&self) -> bool {
        self.axiom.is_strict()
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.axiom.as_str().to_string())
    }

    /// Premise worlds in order: required-better, then required-worse.
    pub fn worlds(&self) -> [&World; 2] {
        [&self.better, &self.worse]
    }
}

fn ensure(cond: bool, reason: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(reason())
    }
}

fn check_premise(
    axiom: AxiomId,
    better: &Population,
    worse: &Population,
    base: Option<&Population>,
    params: &AxiomParams,
) -> Result<(), String> {
    if axiom.needs_base() {
        ensure(base.is_some(), || "a base population is required".into())?;
    } else {
        ensure(base.is_none(), || "this axiom takes no base population".into())?;
    }
    match axiom {
        AxiomId::Quality => {
            ensure(!better.is_empty() && is_perfectly_equal(better), || {
                "better world must be a nonempty perfectly equal population".into()
            })?;
            ensure(better.all_levels(|l| params.is_very_high(l)), || {
                format!("better world must be at very high welfare (≥ {})", params.very_high)
            })?;
            ensure(!worse.is_empty(), || "worse world must be nonempty".into())?;
            ensure(worse.all_levels(|l| params.is_very_low_positive(l)), || {
                format!(
                    "worse world must have only very low positive welfare (0, {}]",
                    params.very_low_positive
                )
            })
        }
        AxiomId::InequalityAversion => {
            let [(c_level, c_count), (a_level, a_count)] = worse.groups() else {
                return Err("worse world must be A ∪ C with exactly two welfare levels".into());
            };
            ensure(c_count > a_count, || {
                format!("C (at {c_level}) must be larger than A (at {a_level})")
            })?;
            ensure(is_perfectly_equal(better) && better.size() == worse.size(), || {
                "better world must be perfectly equal and the same size as A ∪ C".into()
            })?;
            let b_level = better.min_level().expect("nonempty");
            ensure(a_level > b_level && b_level > c_level, || {
                format!("levels must satisfy {a_level} > {b_level} > {c_level}")
            })
        }
        AxiomId::EgalitarianDominance => {
            ensure(!better.is_empty() && is_perfectly_equal(better), || {
                "better world must be a nonempty perfectly equal population".into()
            })?;
            ensure(better.size() == worse.size(), || "worlds must have equal size".into())?;
            ensure(better.min_level() > worse.max_level(), || {
                "everyone in the better world must be above everyone in the worse world".into()
            })
        }
        AxiomId::DominanceAddition => {
            ensure(!worse.is_empty(), || "worse world must be nonempty".into())?;
            ensure(better.size() > worse.size(), || {
                "better world must add at least one life".into()
            })?;
            // Non-positive lives cannot be additions, so they must be among the
            // raised originals; fill the rest with the best positive lives.
            let non_positive: u64 = better
                .groups()
                .iter()
                .filter(|(l, _)| !l.is_positive())
                .map(|(_, c)| c)
                .sum();
            ensure(non_positive <= worse.size(), || {
                "additions must all have positive welfare".into()
            })?;
            let positive = Population::new(
                better.groups().iter().filter(|(l, _)| l.is_positive()).cloned(),
            )
            .expect("subset of a canonical population");
            let mut raised = positive.top(worse.size() - non_positive);
            raised = raised.union(
                &Population::new(better.groups().iter().filter(|(l, _)| !l.is_positive()).cloned())
                    .expect("subset of a canonical population"),
            );
            ensure(dominates_pointwise(&raised, worse, false), || {
                "no split of the better world raises everyone in the worse world".into()
            })
        }
        AxiomId::AvoidRepugnant => {
            ensure(!better.is_empty() && better.all_levels(|l| params.is_very_high(l)), || {
                format!("better world must be nonempty at very high welfare (≥ {})", params.very_high)
            })?;
            ensure(worse.all_levels(|l| params.is_very_low_positive(l)), || {
                format!(
                    "worse world must have only very low positive welfare (0, {}]",
                    params.very_low_positive
                )
            })?;
            ensure(worse.size() > better.size(), || {
                "worse world must be larger than the better world".into()
            })
        }
        AxiomId::AvoidSadistic => {
            ensure(params.very_high.is_positive(), || {
                "very high threshold must be positive".into()
            })?;
            let negative = Population::new(
                worse.groups().iter().filter(|(l, _)| l.is_negative()).cloned(),
            )
            .expect("subset of a canonical population");
            let base = worse.difference(&negative).expect("subset");
            ensure(!negative.is_empty(), || {
                "worse world must add people with negative welfare".into()
            })?;
            ensure(!base.is_empty() && base.all_levels(|l| params.is_very_high(l)), || {
                "the shared base must be nonempty at very high welfare".into()
            })?;
            let added = better.difference(&base).ok_or_else(|| {
                "better world must contain the shared base population".to_string()
            })?;
            ensure(!added.is_empty() && added.all_levels(WelfareLevel::is_positive), || {
                "better world must add people with positive welfare".into()
            })?;
            ensure(negative.size() <= added.size(), || {
                "the negative addition must not outnumber the positive one".into()
            })
        }
        AxiomId::AvoidVeryAntiEgalitarian => {
            ensure(is_perfectly_equal(better) && better.size() >= 2, || {
                "better world must be perfectly equal with at least two people".into()
            })?;
            ensure(worse.size() == better.size(), || "worlds must have equal size".into())?;
            ensure(!is_perfectly_equal(worse), || "worse world must be less equal".into())?;
            ensure(total_welfare(worse) < total_welfare(better), || {
                "worse world must have lower total (and average) welfare".into()
            })
        }
        AxiomId::Dominance => {
            ensure(!better.is_empty(), || "worlds must be nonempty".into())?;
            ensure(dominates_pointwise(better, worse, true), || {
                "everyone in the better world must be above their counterpart".into()
            })
        }
        AxiomId::Addition => {
            let base = base.expect("checked above");
            ensure(!base.is_empty(), || "base population must be nonempty".into())?;
            let fewer = better.difference(base).ok_or_else(|| {
                "better world must contain the base population".to_string()
            })?;
            let more = worse.difference(base).ok_or_else(|| {
                "worse world must contain the base population".to_string()
            })?;
            ensure(!fewer.is_empty() && !more.is_empty(), || {
                "both worlds must add a nonempty group".into()
            })?;
            ensure(fewer.max_level() < base.min_level(), || {
                "the smaller addition must be worse off than the base".into()
            })?;
            ensure(more.max_level() < fewer.min_level(), || {
                "the larger addition must be worse off than the smaller one".into()
            })?;
            ensure(more.size() > fewer.size(), || {
                "the worse-off addition must be larger".into()
            })
        }
        AxiomId::PriorityCompensation => {
            let base = base.expect("checked above");
            let single = worse.difference(base).ok_or_else(|| {
                "worse world must contain the base population".to_string()
            })?;
            let [(v, 1)] = single.groups() else {
                return Err("worse world must be the base plus exactly one person".into());
            };
            ensure(params.is_very_low_positive(v), || {
                "that person must have very low positive welfare".into()
            })?;
            let changed = better.difference(base).ok_or_else(|| {
                "better world must contain the base population".to_string()
            })?;
            let [(s, 1), (h, _n)] = changed.groups() else {
                return Err(
                    "better world must be the base plus one reduced person and n new lives".into(),
                );
            };
            ensure(s.is_negative(), || "the reduced person must be slightly negative".into())?;
            ensure(params.is_very_high(h), || "the new lives must be very high".into())
        }
    }
}

/// Evaluates the instance's requirement against a comparison of worlds.
/// `order(a, b)` returns how `a` compares to `b`.
pub fn check_instance<F>(instance: &AxiomInstance, order: F) -> Satisfaction
where
    F: Fn(&World, &World) -> Verdict,
{
    match order(&instance.better, &instance.worse) {
        Verdict::Greater => Satisfaction::Satisfied,
        Verdict::Equal if !instance.is_strict() => Satisfaction::Satisfied,
        Verdict::Equal | Verdict::Less => Satisfaction::Violated,
        Verdict::Incomparable => Satisfaction::UncertainlySatisfied,
    }
}

/// Comparison closure for a social welfare function. Panics on empty
/// populations under average welfare; instances never contain those.
pub fn swf_order(swf: &SwfKind) -> impl Fn(&World, &World) -> Verdict + '_ {
    move |a, b| {
        swf_compare(swf, &a.population, &b.population)
            .expect("axiom instances have nonempty worlds")
            .into()
    }
}

/// An instance that a social welfare function violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationWitness {
    pub swf: SwfKind,
    pub instance: AxiomInstance,
    /// How the SWF ranks the required-better world against the required-worse.
    pub observed: Ordering,
}

impl ViolationWitness {
    pub fn axiom(&self) -> AxiomId {
        self.instance.axiom
    }

    /// Re-runs the comparison; true when the violation still reproduces.
    pub fn replay(&self) -> bool {
        let fresh = swf_compare(
            &self.swf,
            &self.instance.better.population,
            &self.instance.worse.population,
        );
        fresh == Ok(self.observed)
            && check_instance(&self.instance, swf_order(&self.swf)) == Satisfaction::Violated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditOutcome {
    Witness(Box<ViolationWitness>),
    /// No violation in the searched grid; says nothing beyond it.
    NoneFound { instances_checked: u64 },
}

pub const DEFAULT_AUDIT_BUDGET: u64 = 1_000_000;

/// Finite grid of candidate populations for an audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    pub levels: Vec<WelfareLevel>,
    pub max_count: u64,
    pub max_groups: usize,
    /// Fixes the first premise population (the starting population, base, or
    /// rest-of-population, depending on the axiom) instead of enumerating it.
    pub base: Option<Population>,
    pub params: Option<AxiomParams>,
    pub budget: u64,
}

impl SearchSpace {
    pub fn new(levels: Vec<WelfareLevel>, max_count: u64, max_groups: usize) -> Self {
        let mut levels = levels;
        levels.sort();
        levels.dedup();
        SearchSpace {
            levels,
            max_count,
            max_groups,
            base: None,
            params: None,
            budget: DEFAULT_AUDIT_BUDGET,
        }
    }

    pub fn with_base(mut self, base: Population) -> Self {
        self.base = Some(base);
        self
    }

    pub fn with_params(mut self, params: AxiomParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Explicit thresholds, or: very high = the top grid level, very low
    /// positive = the smallest positive grid level.
    pub fn effective_params(&self) -> AxiomParams {
        if let Some(p) = &self.params {
            return p.clone();
        }
        let very_high = self
            .levels
            .last()
            .cloned()
            .unwrap_or_else(|| WelfareLevel::from_int(0));
        let very_low_positive = self
            .levels
            .iter()
            .find(|l| l.is_positive())
            .cloned()
            .unwrap_or_else(|| WelfareLevel(crate::rational::Rational::zero()));
        AxiomParams::new(very_high, very_low_positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Counts {
    Ascending,
    Descending,
}

enum Halt {
    Found(Box<ViolationWitness>),
    Failed(AxiomError),
}

type Step = Result<(), Halt>;

/// Visits populations built from `levels`: by number of groups, then level
/// combination in grid order, then count vectors in `order`.
fn for_each_population(
    levels: &[WelfareLevel],
    max_groups: usize,
    max_count: u64,
    order: Counts,
    visit: &mut dyn FnMut(Population) -> Step,
) -> Step {
    let first = match order {
        Counts::Ascending => 1,
        Counts::Descending => max_count,
    };
    for g in 1..=max_groups.min(levels.len()) {
        let mut combo: Vec<usize> = (0..g).collect();
        loop {
            let mut counts = vec![first; g];
            loop {
                let groups = combo.iter().zip(&counts).map(|(&i, &c)| (levels[i].clone(), c));
                visit(Population::new(groups).expect("positive counts"))?;
                if !next_counts(&mut counts, order, max_count) {
                    break;
                }
            }
            if !next_combination(&mut combo, levels.len()) {
                break;
            }
        }
    }
    Ok(())
}

/// Odometer step over `1..=max_count` per digit, last digit fastest.
fn next_counts(counts: &mut [u64], order: Counts, max_count: u64) -> bool {
    for c in counts.iter_mut().rev() {
        match order {
            Counts::Ascending if *c < max_count => {
                *c += 1;
                return true;
            }
            Counts::Descending if *c > 1 => {
                *c -= 1;
                return true;
            }
            Counts::Ascending => *c = 1,
            Counts::Descending => *c = max_count,
        }
    }
    false
}

/// The anchored base when given, otherwise every grid population over `levels`.
fn starting(
    base: Option<&Population>,
    max_count: u64,
    levels: &[WelfareLevel],
    max_groups: usize,
    visit: &mut dyn FnMut(Population) -> Step,
) -> Step {
    match base {
        Some(base) => visit(base.clone()),
        None => for_each_population(levels, max_groups, max_count, Counts::Ascending, visit),
    }
}

struct Auditor<'a> {
    swf: &'a SwfKind,
    space: &'a SearchSpace,
    params: AxiomParams,
    checked: u64,
}

impl Auditor<'_> {
    fn tick(&mut self) -> Step {
        self.checked += 1;
        if self.checked > self.space.budget {
            return Err(Halt::Failed(AxiomError::BoundsTooLarge {
                budget: self.space.budget,
            }));
        }
        Ok(())
    }

    /// Counts one candidate; builds and checks it when the premise holds.
    fn candidate(
        &mut self,
        axiom: AxiomId,
        better: Population,
        worse: Population,
        base: Option<Population>,
    ) -> Result<Option<Box<ViolationWitness>>, Halt> {
        self.tick()?;
        let Ok(instance) = AxiomInstance::new(
            axiom,
            World::new("better", better),
            World::new("worse", worse),
            base,
            self.params.clone(),
        ) else {
            return Ok(None);
        };
        let observed = swf_compare(
            self.swf,
            &instance.better.population,
            &instance.worse.population,
        )
        .map_err(|e| Halt::Failed(e.into()))?;
        let witness = ViolationWitness {
            swf: self.swf.clone(),
            instance,
            observed,
        };
        if check_instance(&witness.instance, swf_order(self.swf)) == Satisfaction::Violated {
            Ok(Some(Box::new(witness)))
        } else {
            Ok(None)
        }
    }

    fn check(
        &mut self,
        axiom: AxiomId,
        better: Population,
        worse: Population,
        base: Option<Population>,
    ) -> Step {
        match self.candidate(axiom, better, worse, base)? {
            Some(w) => Err(Halt::Found(w)),
            None => Ok(()),
        }
    }

    fn levels(&self, pred: impl Fn(&WelfareLevel) -> bool) -> Vec<WelfareLevel> {
        self.space.levels.iter().filter(|l| pred(l)).cloned().collect()
    }

    fn run(&mut self, axiom: AxiomId) -> Step {
        let space = self.space;
        let params = self.params.clone();
        let all = space.levels.clone();
        let high = self.levels(|l| params.is_very_high(l));
        let low_positive = self.levels(|l| params.is_very_low_positive(l));
        let positive = self.levels(WelfareLevel::is_positive);
        let negative = self.levels(WelfareLevel::is_negative);
        let (max_count, max_groups) = (space.max_count, space.max_groups);

        match axiom {
            AxiomId::Quality => starting(space.base.as_ref(), max_count, &high, 1, &mut |a| {
                for_each_population(&low_positive, max_groups, max_count, Counts::Ascending, &mut |b| {
                    self.check(axiom, a.clone(), b, None)
                })
            }),
            AxiomId::InequalityAversion => starting(space.base.as_ref(), max_count, &all, 1, &mut |a| {
                let Some(a_level) = a.max_level().cloned() else { return Ok(()) };
                let below: Vec<_> = all.iter().filter(|l| **l < a_level).cloned().collect();
                for_each_population(&below, 1, max_count, Counts::Ascending, &mut |c| {
                    let c_level = c.min_level().expect("nonempty").clone();
                    let size = a.size() + c.size();
                    for b_level in all.iter().filter(|l| **l < a_level && **l > c_level) {
                        let b = Population::uniform(b_level.clone(), size);
                        self.check(axiom, b, a.union(&c), None)?;
                    }
                    Ok(())
                })
            }),
            AxiomId::EgalitarianDominance => starting(space.base.as_ref(), max_count, &all, 1, &mut |a| {
                let Some(level) = a.min_level().cloned() else { return Ok(()) };
                let below: Vec<_> = all.iter().filter(|l| **l < level).cloned().collect();
                for_each_population(&below, max_groups, max_count, Counts::Ascending, &mut |b| {
                    self.check(axiom, a.clone(), b, None)
                })
            }),
            AxiomId::DominanceAddition => starting(space.base.as_ref(), max_count, &all, max_groups, &mut |a| {
                for_each_population(&all, max_groups, max_count, Counts::Ascending, &mut |plus| {
                    self.check(axiom, plus, a.clone(), None)
                })
            }),
            AxiomId::AvoidRepugnant => starting(space.base.as_ref(), max_count, &high, max_groups, &mut |a| {
                for_each_population(&low_positive, max_groups, max_count, Counts::Descending, &mut |z| {
                    self.check(axiom, a.clone(), z, None)
                })
            }),
            AxiomId::AvoidSadistic => starting(space.base.as_ref(), max_count, &high, max_groups, &mut |a| {
                for_each_population(&positive, max_groups, max_count, Counts::Descending, &mut |p| {
                    for_each_population(&negative, max_groups, max_count, Counts::Ascending, &mut |n| {
                        self.check(axiom, a.union(&p), a.union(&n), None)
                    })
                })
            }),
            AxiomId::AvoidVeryAntiEgalitarian => starting(space.base.as_ref(), max_count, &all, 1, &mut |a| {
                for_each_population(&all, max_groups, max_count, Counts::Ascending, &mut |b| {
                    self.check(axiom, a.clone(), b, None)
                })
            }),
            AxiomId::Dominance => starting(space.base.as_ref(), max_count, &all, max_groups, &mut |a| {
                for_each_population(&all, max_groups, max_count, Counts::Ascending, &mut |b| {
                    self.check(axiom, a.clone(), b, None)
                })
            }),
            AxiomId::Addition => starting(space.base.as_ref(), max_count, &all, max_groups, &mut |a| {
                let Some(floor) = a.min_level().cloned() else { return Ok(()) };
                let below: Vec<_> = all.iter().filter(|l| **l < floor).cloned().collect();
                for_each_population(&below, max_groups, max_count, Counts::Ascending, &mut |g| {
                    let g_floor = g.min_level().expect("nonempty").clone();
                    let lower: Vec<_> = all.iter().filter(|l| **l < g_floor).cloned().collect();
                    for_each_population(&lower, max_groups, max_count, Counts::Descending, &mut |c| {
                        self.check(axiom, a.union(&g), a.union(&c), Some(a.clone()))
                    })
                })
            }),
            AxiomId::PriorityCompensation => {
                let rest = space.base.clone().unwrap_or_default();
                let mut negative_desc = negative.clone();
                negative_desc.reverse();
                for v in &low_positive {
                    for s in &negative_desc {
                        for h in &high {
                            self.priority_family(&rest, v, s, h)?;
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// The condition holds for `(rest, v, s, h)` if some `n ≤ max_count`
    /// compensates; the witness is the `n = max_count` instance.
    fn priority_family(
        &mut self,
        rest: &Population,
        v: &WelfareLevel,
        s: &WelfareLevel,
        h: &WelfareLevel,
    ) -> Step {
        let worse = rest.union(&Population::uniform(v.clone(), 1));
        let build = |n: u64| {
            rest.union(&Population::uniform(s.clone(), 1))
                .union(&Population::uniform(h.clone(), n))
        };
        let mut last = None;
        for n in 1..=self.space.max_count {
            match self.candidate(AxiomId::PriorityCompensation, build(n), worse.clone(), Some(rest.clone()))? {
                Some(w) => last = Some(w),
                None => return Ok(()),
            }
        }
        match last {
            Some(w) => Err(Halt::Found(w)),
            None => Ok(()),
        }
    }
}

/// Exhaustive search over the grid for an instance of `axiom` that `swf`
/// violates. Deterministic: the first violation in enumeration order wins.
pub fn audit_swf(
    swf: &SwfKind,
    axiom: AxiomId,
    space: &SearchSpace,
) -> Result<AuditOutcome, AxiomError> {
    if space.max_count == 0 || space.max_groups == 0 {
        return Err(AxiomError::InvalidBounds(
            "max count and max groups must be positive".into(),
        ));
    }
    if space.levels.is_empty() {
        return Err(AxiomError::InvalidBounds("no welfare levels given".into()));
    }
    let mut auditor = Auditor {
        swf,
        space,
        params: space.effective_params(),
        checked: 0,
    };
    match auditor.run(axiom) {
        Ok(()) => Ok(AuditOutcome::NoneFound {
            instances_checked: auditor.checked,
        }),
        Err(Halt::Found(w)) => Ok(AuditOutcome::Witness(w)),
        Err(Halt::Failed(e)) => Err(e),
    }
}

/// One edge per instance, from the required-worse world to the required-better.
pub fn build_cycle(instances: &[AxiomInstance]) -> Result<ConstraintGraph, AxiomError> {
    let mut bound: Vec<&World> = Vec::new();
    let mut g = ConstraintGraph::new();
    for inst in instances {
        for w in inst.worlds() {
            match bound.iter().find(|b| b.id == w.id) {
                Some(existing) if existing.population != w.population => {
                    return Err(AxiomError::ConflictingWorldIds(w.id.clone()));
                }
                Some(_) => {}
                None => {
                    bound.push(w);
                    g.ensure_world(&w.id);
                }
            }
        }
        if inst.is_strict() {
            g.add_strict_edge(inst.worse.id.clone(), inst.better.id.clone(), inst.label())?;
        } else {
            g.add_edge(inst.worse.id.clone(), inst.better.id.clone(), inst.label())?;
        }
    }
    Ok(g)
}
