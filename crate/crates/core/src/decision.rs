//! Choosing among candidate worlds when the objective is uncertain: act on a
//! clear favourite, sample among likely-best actions, or abstain and ask.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::OrderDistribution;
use crate::constraint_graph::PartialOrder;
use crate::domain::{Verdict, WorldId};
use crate::rational::{format_rational, is_probability, Rational, RationalText};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("no actions to choose from")]
    EmptyActionSet,
    #[error("action {0} is not among the ordered worlds")]
    UnknownAction(WorldId),
    #[error("action {0} listed twice")]
    DuplicateAction(WorldId),
    #[error("{name} = {value} is not a probability")]
    NotProbability { name: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DecisionOutcome {
    Act {
        world: WorldId,
        justification: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        margin: Option<RationalText>,
    },
    Abstain {
        reason: String,
        /// Best minus runner-up probability of being best, when measured.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        margin: Option<RationalText>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        maximal: Vec<WorldId>,
    },
    Tie {
        worlds: Vec<WorldId>,
    },
}

impl DecisionOutcome {
    pub fn acted_on(&self) -> Option<&WorldId> {
        match self {
            DecisionOutcome::Act { world, .. } => Some(world),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PartialPolicy {
    Abstain,
    RandomAmongMaximal { seed: u64 },
    TreatAsEqual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleConfig {
    Margin { delta: RationalText },
    Quantilized { tau: RationalText, seed: u64 },
    Partial { policy: PartialPolicy },
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), DecisionError> {
        match self {
            RuleConfig::Margin { delta } => check_probability("delta", &delta.0),
            RuleConfig::Quantilized { tau, .. } => check_probability("tau", &tau.0),
            RuleConfig::Partial { .. } => Ok(()),
        }
    }
}

fn check_probability(name: &'static str, q: &Rational) -> Result<(), DecisionError> {
    if is_probability(q) {
        Ok(())
    } else {
        Err(DecisionError::NotProbability {
            name,
            value: format_rational(q),
        })
    }
}

fn action_indices(
    actions: &[WorldId],
    index_of: impl Fn(&WorldId) -> Option<usize>,
) -> Result<Vec<usize>, DecisionError> {
    if actions.is_empty() {
        return Err(DecisionError::EmptyActionSet);
    }
    let mut seen = HashSet::new();
    actions
        .iter()
        .map(|a| {
            if !seen.insert(a) {
                return Err(DecisionError::DuplicateAction(a.clone()));
            }
            index_of(a).ok_or_else(|| DecisionError::UnknownAction(a.clone()))
        })
        .collect()
}

/// For each action, the probability that it ranks above every other action.
pub fn prob_best(
    d: &OrderDistribution,
    actions: &[WorldId],
) -> Result<Vec<(WorldId, Rational)>, DecisionError> {
    let idx = action_indices(actions, |a| d.index_of(a))?;
    let mut probs = vec![Rational::zero(); idx.len()];
    for (rank, p) in d.ranked() {
        let top = (0..idx.len()).max_by_key(|&k| rank[idx[k]]).expect("nonempty");
        probs[top] += p;
    }
    Ok(actions.iter().cloned().zip(probs).collect())
}

/// Sorted best first; exact ties broken by world id.
fn ranked_by_probability(mut probs: Vec<(WorldId, Rational)>) -> Vec<(WorldId, Rational)> {
    probs.sort_by(|(a, p), (b, q)| q.cmp(p).then_with(|| a.cmp(b)));
    probs
}

fn top_margin(ranked: &[(WorldId, Rational)]) -> Rational {
    let second = ranked.get(1).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero);
    &ranked[0].1 - second
}

/// Acts on the likeliest-best action when it leads the runner-up by at least `delta`.
pub fn decide_margin(
    d: &OrderDistribution,
    actions: &[WorldId],
    delta: &Rational,
) -> Result<DecisionOutcome, DecisionError> {
    check_probability("delta", delta)?;
    let ranked = ranked_by_probability(prob_best(d, actions)?);
    let margin = top_margin(&ranked);
    if margin >= *delta {
        Ok(DecisionOutcome::Act {
            world: ranked[0].0.clone(),
            justification: format!(
                "best with probability {}, ahead of the runner-up by {} (delta {})",
                format_rational(&ranked[0].1),
                format_rational(&margin),
                format_rational(delta)
            ),
            margin: Some(RationalText(margin)),
        })
    } else {
        Ok(DecisionOutcome::Abstain {
            reason: format!(
                "lead of {} over the runner-up is below delta {}",
                format_rational(&margin),
                format_rational(delta)
            ),
            margin: Some(RationalText(margin)),
            maximal: Vec::new(),
        })
    }
}

/// Seeded sampler over the actions whose probability of being best is at
/// least `tau`, each drawn in proportion to that probability.
#[derive(Debug, Clone)]
pub struct Quantilizer {
    candidates: Vec<(WorldId, Rational)>,
    /// Running sums of the normalized weights; the last entry is 1.
    cumulative: Vec<Rational>,
    tau: Rational,
    margin: Rational,
    rng: ChaCha8Rng,
}

impl Quantilizer {
    pub fn new(
        d: &OrderDistribution,
        actions: &[WorldId],
        tau: &Rational,
        seed: u64,
    ) -> Result<Self, DecisionError> {
        check_probability("tau", tau)?;
        let probs = prob_best(d, actions)?;
        let margin = top_margin(&ranked_by_probability(probs.clone()));
        let candidates: Vec<_> = probs.into_iter().filter(|(_, p)| p >= tau).collect();
        let total: Rational = candidates.iter().map(|(_, p)| p).sum();
        let mut running = Rational::zero();
        let cumulative = candidates
            .iter()
            .map(|(_, p)| {
                running += p / &total;
                running.clone()
            })
            .collect();
        Ok(Quantilizer {
            candidates,
            cumulative,
            tau: tau.clone(),
            margin,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn candidates(&self) -> &[(WorldId, Rational)] {
        &self.candidates
    }

    /// One draw, or `None` when no action clears `tau`.
    pub fn draw(&mut self) -> Option<&WorldId> {
        if self.candidates.is_empty() {
            return None;
        }
        // u / 2^64 is uniform on [0, 1); compare against the exact cumulative weights.
        let u = Rational::new(BigInt::from(self.rng.next_u64()), BigInt::one() << 64);
        let k = self
            .cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.candidates.len() - 1);
        Some(&self.candidates[k].0)
    }

    pub fn decide(&mut self) -> DecisionOutcome {
        let count = self.candidates.len();
        let tau = format_rational(&self.tau);
        match self.draw().cloned() {
            Some(world) => DecisionOutcome::Act {
                world,
                justification: format!(
                    "drawn in proportion to probability of being best from {count} action(s) at or above tau {tau}"
                ),
                margin: None,
            },
            None => DecisionOutcome::Abstain {
                reason: format!("no action is best with probability at least tau {tau}"),
                margin: Some(RationalText(self.margin.clone())),
                maximal: Vec::new(),
            },
        }
    }
}

pub fn decide_quantilized(
    d: &OrderDistribution,
    actions: &[WorldId],
    tau: &Rational,
    seed: u64,
) -> Result<DecisionOutcome, DecisionError> {
    Ok(Quantilizer::new(d, actions, tau, seed)?.decide())
}

/// Actions not strictly below any other action, in input order.
pub fn maximal_elements(
    po: &PartialOrder,
    actions: &[WorldId],
) -> Result<Vec<WorldId>, DecisionError> {
    let idx = action_indices(actions, |a| po.index_of(a))?;
    Ok(idx
        .iter()
        .zip(actions)
        .filter(|(&a, _)| !idx.iter().any(|&b| po.at(b, a) == Verdict::Greater))
        .map(|(_, w)| w.clone())
        .collect())
}

pub fn decide_partial(
    po: &PartialOrder,
    actions: &[WorldId],
    policy: PartialPolicy,
) -> Result<DecisionOutcome, DecisionError> {
    let maximal = maximal_elements(po, actions)?;
    if let [only] = maximal.as_slice() {
        return Ok(DecisionOutcome::Act {
            world: only.clone(),
            justification: "unique maximal action".to_string(),
            margin: None,
        });
    }
    Ok(match policy {
        PartialPolicy::Abstain => DecisionOutcome::Abstain {
            reason: format!("{} maximal actions are not ranked against each other", maximal.len()),
            margin: None,
            maximal,
        },
        PartialPolicy::RandomAmongMaximal { seed } => {
            let k = ChaCha8Rng::seed_from_u64(seed).gen_range(0..maximal.len());
            DecisionOutcome::Act {
                world: maximal[k].clone(),
                justification: format!("drawn uniformly from {} maximal actions", maximal.len()),
                margin: None,
            }
        }
        PartialPolicy::TreatAsEqual => DecisionOutcome::Tie { worlds: maximal },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{rotation_mixture, CycleSpec};
    use crate::constraint_graph::{partial_order_from, ConstraintGraph, UncertaintyPattern};
    use crate::rational::{int, ratio};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn ids(names: &[&str]) -> Vec<WorldId> {
        names.iter().map(|s| WorldId::from(*s)).collect()
    }

    fn rotations(n: usize) -> OrderDistribution {
        rotation_mixture(&CycleSpec::numbered(n).unwrap())
    }

    #[test]
    fn prob_best_examples() {
        let d = OrderDistribution::point_mass(ids(&["x1", "x2", "x3"])).unwrap();
        let p = prob_best(&d, &ids(&["x1", "x2", "x3"])).unwrap();
        assert_eq!(p, vec![("x1".into(), int(0)), ("x2".into(), int(0)), ("x3".into(), int(1))]);
        let p = prob_best(&rotations(3), &ids(&["x1", "x2", "x3"])).unwrap();
        assert!(p.iter().all(|(_, q)| *q == ratio(1, 3)));
        let p = prob_best(&rotations(3), &ids(&["x2"])).unwrap();
        assert_eq!(p, vec![("x2".into(), int(1))]);
        assert_eq!(prob_best(&d, &[]), Err(DecisionError::EmptyActionSet));
        assert_eq!(
            prob_best(&d, &ids(&["x9"])),
            Err(DecisionError::UnknownAction("x9".into()))
        );
    }

    #[test]
    fn margin_rule_examples() {
        let d = OrderDistribution::point_mass(ids(&["x1", "x2", "x3"])).unwrap();
        let all = ids(&["x1", "x2", "x3"]);
        let out = decide_margin(&d, &all, &ratio(1, 2)).unwrap();
        assert_eq!(out.acted_on(), Some(&"x3".into()));
        assert!(matches!(out, DecisionOutcome::Act { margin: Some(ref m), .. } if m.0 == int(1)));

        let out = decide_margin(&rotations(3), &all, &ratio(1, 10)).unwrap();
        assert!(matches!(out, DecisionOutcome::Abstain { margin: Some(ref m), .. } if m.0 == int(0)));

        // Exact tie at delta 0 goes to the smallest id.
        let out = decide_margin(&rotations(3), &all, &int(0)).unwrap();
        assert_eq!(out.acted_on(), Some(&"x1".into()));

        let skewed = OrderDistribution::from_orders(vec![
            (ids(&["x1", "x2", "x3"]), ratio(1, 2)),
            (ids(&["x1", "x3", "x2"]), ratio(3, 10)),
            (ids(&["x3", "x2", "x1"]), ratio(1, 5)),
        ])
        .unwrap();
        assert_eq!(decide_margin(&skewed, &all, &int(0)).unwrap().acted_on(), Some(&"x3".into()));
        assert!(decide_margin(&skewed, &all, &int(2)).is_err());
    }

    #[test]
    fn margin_one_needs_certainty() {
        let all = ids(&["x1", "x2", "x3"]);
        let near = OrderDistribution::from_orders(vec![
            (ids(&["x1", "x2", "x3"]), ratio(99, 100)),
            (ids(&["x1", "x3", "x2"]), ratio(1, 100)),
        ])
        .unwrap();
        assert!(decide_margin(&near, &all, &int(1)).unwrap().acted_on().is_none());
        let sure = OrderDistribution::point_mass(ids(&["x2", "x1", "x3"])).unwrap();
        assert_eq!(decide_margin(&sure, &all, &int(1)).unwrap().acted_on(), Some(&"x3".into()));
    }

    #[test]
    fn quantilizer_examples() {
        let all = ids(&["x1", "x2", "x3"]);
        let out = decide_quantilized(&rotations(3), &all, &ratio(9, 10), 1).unwrap();
        assert!(matches!(out, DecisionOutcome::Abstain { .. }));
        let d = OrderDistribution::point_mass(all.clone()).unwrap();
        for seed in 0..20 {
            let out = decide_quantilized(&d, &all, &int(1), seed).unwrap();
            assert_eq!(out.acted_on(), Some(&"x3".into()));
        }
    }

    #[test]
    fn quantilizer_is_reproducible() {
        let all = ids(&["x1", "x2", "x3"]);
        let draws = |seed| {
            let mut q = Quantilizer::new(&rotations(3), &all, &int(0), seed).unwrap();
            (0..50).map(|_| q.draw().cloned().unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draws(42), draws(42));
        assert_ne!(draws(42), draws(43));
    }

    #[test]
    fn quantilizer_frequencies_within_three_sigma() {
        let d = OrderDistribution::from_orders(vec![
            (ids(&["a", "b", "c"]), ratio(1, 2)),
            (ids(&["c", "a", "b"]), ratio(1, 3)),
            (ids(&["b", "c", "a"]), ratio(1, 6)),
        ])
        .unwrap();
        let all = ids(&["a", "b", "c"]);
        let mut q = Quantilizer::new(&d, &all, &int(0), 2024).unwrap();
        let draws = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts.entry(q.draw().unwrap().clone()).or_insert(0u32) += 1;
        }
        // Top of each order: c w.p. 1/2, b w.p. 1/3, a w.p. 1/6.
        for (w, p) in [("a", 1.0 / 6.0), ("b", 1.0 / 3.0), ("c", 0.5)] {
            let freq = f64::from(counts.get(&w.into()).copied().unwrap_or(0)) / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma, "{w}: {freq} vs {p}");
        }
    }

    fn weakened_triangle() -> PartialOrder {
        let mut g = ConstraintGraph::with_worlds(ids(&["w1", "w2", "w3"])).unwrap();
        g.add_edge("w1", "w2", "C1").unwrap();
        g.add_edge("w2", "w3", "C2").unwrap();
        g.add_edge("w3", "w1", "C3").unwrap();
        partial_order_from(&g, &UncertaintyPattern::new([1, 2])).unwrap()
    }

    #[test]
    fn partial_policies() {
        let all = ids(&["w1", "w2", "w3"]);
        let chain = PartialOrder::from_chain(&all);
        let out = decide_partial(&chain, &all, PartialPolicy::Abstain).unwrap();
        assert_eq!(out.acted_on(), Some(&"w3".into()));

        let po = weakened_triangle();
        let out = decide_partial(&po, &all, PartialPolicy::Abstain).unwrap();
        assert!(matches!(out, DecisionOutcome::Abstain { ref maximal, .. } if *maximal == ids(&["w2", "w3"])));
        let out = decide_partial(&po, &all, PartialPolicy::TreatAsEqual).unwrap();
        assert_eq!(out, DecisionOutcome::Tie { worlds: ids(&["w2", "w3"]) });
        let pick = decide_partial(&po, &all, PartialPolicy::RandomAmongMaximal { seed: 5 }).unwrap();
        let again = decide_partial(&po, &all, PartialPolicy::RandomAmongMaximal { seed: 5 }).unwrap();
        assert_eq!(pick, again);
        assert!(ids(&["w2", "w3"]).contains(pick.acted_on().unwrap()));
    }

    #[test]
    fn outcomes_serialize_tagged() {
        let out = DecisionOutcome::Tie { worlds: ids(&["a"]) };
        assert_eq!(serde_json::to_string(&out).unwrap(), r#"{"outcome":"tie","worlds":["a"]}"#);
        let cfg: RuleConfig =
            serde_json::from_str(r#"{"rule":"partial","policy":{"policy":"random_among_maximal","seed":3}}"#)
                .unwrap();
        assert_eq!(
            cfg,
            RuleConfig::Partial {
                policy: PartialPolicy::RandomAmongMaximal { seed: 3 }
            }
        );
        let bad: RuleConfig = serde_json::from_str(r#"{"rule":"margin","delta":"3/2"}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    fn arb_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=6).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let len = pairs.len();
            (Just(n), Just(pairs), prop::collection::vec(any::<bool>(), len))
                .prop_map(|(n, pairs, keep)| {
                    let edges = pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
                    (n, edges)
                })
        })
    }

    proptest! {
        #[test]
        fn maximal_elements_match_reachability(
            (n, edges) in arb_dag(),
            mask in prop::collection::vec(any::<bool>(), 6),
        ) {
            let names: Vec<WorldId> = (0..n).map(|i| WorldId::new(format!("v{i}"))).collect();
            let mut g = ConstraintGraph::with_worlds(names.clone()).unwrap();
            for (k, &(a, b)) in edges.iter().enumerate() {
                g.add_edge(names[a].clone(), names[b].clone(), format!("e{k}")).unwrap();
            }
            let po = partial_order_from(&g, &UncertaintyPattern::new([])).unwrap();
            let actions: Vec<WorldId> = (0..n).filter(|&i| mask[i]).map(|i| names[i].clone()).collect();
            prop_assume!(!actions.is_empty());
            // Oracle: a is maximal unless some other action is reachable from it.
            let reach = |from: usize, to: usize| {
                let mut stack = vec![from];
                let mut seen = vec![false; n];
                while let Some(v) = stack.pop() {
                    if v == to { return true; }
                    for &(a, b) in &edges {
                        if a == v && !seen[b] { seen[b] = true; stack.push(b); }
                    }
                }
                false
            };
            let expected: Vec<WorldId> = (0..n)
                .filter(|&a| mask[a] && !(0..n).any(|b| b != a && mask[b] && reach(a, b)))
                .map(|i| names[i].clone())
                .collect();
            prop_assert_eq!(maximal_elements(&po, &actions).unwrap(), expected);
        }

        #[test]
        fn margin_rule_is_equivariant_under_relabeling(
            weights in prop::collection::vec(1i64..50, 1..6),
            shuffle_seed in any::<u64>(),
            delta_num in 0i64..=10,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
            let mut shuffled = || {
                let mut o: Vec<usize> = (0..4).collect();
                o.shuffle(&mut rng);
                o
            };
            let orders: Vec<Vec<usize>> = (0..weights.len()).map(|_| shuffled()).collect();
            let perm = shuffled();
            let names = ids(&["a", "b", "c", "d"]);
            let total: i64 = weights.iter().sum();
            let support: Vec<(Vec<usize>, Rational)> = weights
                .iter()
                .zip(&orders)
                .map(|(w, o)| (o.clone(), ratio(*w, total)))
                .collect();
            let d = OrderDistribution::new(names.clone(), support.clone()).unwrap();
            let renamed: Vec<WorldId> = perm.iter().map(|&k| names[k].clone()).collect();
            let e = OrderDistribution::new(renamed.clone(), support).unwrap();
            let delta = ratio(delta_num, 10);
            let probs = ranked_by_probability(prob_best(&d, &names).unwrap());
            // Tie-breaking by id is the one place labels matter.
            prop_assume!(delta_num > 0 || probs[0].1 != probs[1].1);
            let out = decide_margin(&d, &names, &delta).unwrap();
            let out_renamed = decide_margin(&e, &renamed, &delta).unwrap();
            match (out.acted_on(), out_renamed.acted_on()) {
                (Some(w), Some(v)) => {
                    let k = names.iter().position(|x| x == w).unwrap();
                    prop_assert_eq!(v, &renamed[k]);
                }
                (None, None) => {}
                _ => prop_assert!(false, "outcomes differ in kind"),
            }
        }
    }
}
