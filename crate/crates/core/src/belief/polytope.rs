//! Realizability of belief matrices and the minimax violation bound, both as
//! linear programs with one variable per total order.

use itertools::Itertools;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{check_unique, BeliefError, BeliefMatrix, OrderDistribution};
use crate::domain::WorldId;
use crate::rational::{int, ratio, to_f64, Rational, RationalText};
use crate::simplex::{LinearProgram, LpOutcome};

/// Largest world count for the order-enumerating LPs (`7! = 5040` columns).
pub const DEFAULT_DIMENSION_CAP: usize = 7;

/// All total orders of `0..n` as index lists, worst first, in lexicographic order.
fn all_orders(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

fn rank_of(order: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; order.len()];
    for (pos, &w) in order.iter().enumerate() {
        rank[w] = pos;
    }
    rank
}

fn check_cap(n: usize, cap: usize) -> Result<(), BeliefError> {
    if n > cap {
        Err(BeliefError::DimensionCap { n, cap })
    } else {
        Ok(())
    }
}

/// Pairs `(a, b)` with `a < b`, in row order of the feasibility LP.
fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).tuple_combinations().collect()
}

/// Rows: one per pair `a < b` (`Σ p[a above b] = Z(a, b)`) and a final
/// normalization row (`Σ p = 1`).
fn feasibility_program<F: crate::simplex::LpNumber>(
    n: usize,
    orders: &[Vec<usize>],
    entry: impl Fn(usize, usize) -> F,
) -> LinearProgram<F> {
    let pairs = pairs(n);
    let mut rhs: Vec<F> = pairs.iter().map(|&(a, b)| entry(a, b)).collect();
    rhs.push(F::one());
    let mut lp = LinearProgram::new(pairs.len() + 1, rhs);
    for order in orders {
        let rank = rank_of(order);
        let mut column: Vec<(usize, i64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| rank[a] > rank[b])
            .map(|(row, _)| (row, 1))
            .collect();
        column.push((pairs.len(), 1));
        lp.add_column(F::zero(), column);
    }
    lp
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// One realizing distribution; others may exist.
    Feasible(OrderDistribution),
    Infeasible(FarkasCertificate),
}

/// Weights `w(a, b)` and an offset `c` such that every total order has
/// `Σ w(a, b)·[a above b] + c ≤ 0` while the matrix has
/// `Σ w(a, b)·Z(a, b) + c > 0`. No mixture of orders can then produce the matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FarkasCertificate {
    pub worlds: Vec<WorldId>,
    pub weights: Vec<PairWeight>,
    pub offset: RationalText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairWeight {
    pub better: WorldId,
    pub worse: WorldId,
    pub weight: RationalText,
}

impl FarkasCertificate {
    fn score(&self, mut above: impl FnMut(&WorldId, &WorldId) -> Rational) -> Rational {
        self.weights
            .iter()
            .fold(self.offset.0.clone(), |acc, w| acc + &w.weight.0 * above(&w.better, &w.worse))
    }

    /// `Σ w(a, b)·Z(a, b) + c`, positive for the matrix it refutes.
    pub fn margin(&self, m: &BeliefMatrix) -> Option<Rational> {
        let mut missing = false;
        let v = self.score(|a, b| match m.get(a, b) {
            Some(z) => z.clone(),
            None => {
                missing = true;
                Rational::zero()
            }
        });
        (!missing).then_some(v)
    }

    /// Re-checks the certificate by enumerating every total order.
    pub fn verify(&self, m: &BeliefMatrix) -> bool {
        let n = self.worlds.len();
        if m.worlds() != self.worlds.as_slice() {
            return false;
        }
        let Some(margin) = self.margin(m) else {
            return false;
        };
        margin.is_positive()
            && all_orders(n).iter().all(|order| {
                let rank = rank_of(order);
                let pos = |w: &WorldId| rank[m.index_of(w).expect("same worlds")];
                !self
                    .score(|a, b| if pos(a) > pos(b) { int(1) } else { int(0) })
                    .is_positive()
            })
    }
}

/// Decides exactly whether some distribution over total orders induces `m`.
pub fn exact_feasibility(m: &BeliefMatrix, cap: usize) -> Result<Feasibility, BeliefError> {
    let n = m.len();
    check_cap(n, cap)?;
    let orders = all_orders(n);
    let lp = feasibility_program(n, &orders, |a, b| m.at(a, b).clone());
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let support = orders
                .into_iter()
                .zip(x)
                .filter(|(_, p)| p.is_positive())
                .collect();
            Ok(Feasibility::Feasible(OrderDistribution::new(m.worlds().to_vec(), support)?))
        }
        LpOutcome::Infeasible { farkas } => {
            let (offset, pair_weights) = farkas.split_last().expect("normalization row");
            let weights = pairs(n)
                .into_iter()
                .zip(pair_weights)
                .filter(|(_, w)| !w.is_zero())
                .map(|((a, b), w)| PairWeight {
                    better: m.worlds()[a].clone(),
                    worse: m.worlds()[b].clone(),
                    weight: RationalText(w.clone()),
                })
                .collect();
            Ok(Feasibility::Infeasible(FarkasCertificate {
                worlds: m.worlds().to_vec(),
                weights,
                offset: RationalText(offset.clone()),
            }))
        }
        LpOutcome::Unbounded => unreachable!("zero objective cannot be unbounded"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FloatFeasibility {
    /// Orders (worst first) with their weights.
    Feasible(Vec<(Vec<WorldId>, f64)>),
    Infeasible,
}

/// The same LP in floating point with a `1e-9` tolerance.
pub fn float_feasibility(m: &BeliefMatrix, cap: usize) -> Result<FloatFeasibility, BeliefError> {
    let n = m.len();
    check_cap(n, cap)?;
    let orders = all_orders(n);
    let lp = feasibility_program(n, &orders, |a, b| to_f64(m.at(a, b)));
    Ok(match lp.solve() {
        LpOutcome::Optimal { x, .. } => FloatFeasibility::Feasible(
            orders
                .into_iter()
                .zip(x)
                .filter(|(_, p)| *p > crate::simplex::FLOAT_TOLERANCE)
                .map(|(o, p)| (o.into_iter().map(|w| m.worlds()[w].clone()).collect(), p))
                .collect(),
        ),
        _ => FloatFeasibility::Infeasible,
    })
}

/// Worlds `x_1, …, x_n` with constraints `C_i`: `x_i` should rank above `x_{i+1 mod n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleSpec {
    worlds: Vec<WorldId>,
}

impl CycleSpec {
    pub fn new(worlds: Vec<WorldId>) -> Result<Self, BeliefError> {
        if worlds.len() < 3 {
            return Err(BeliefError::CycleTooShort(worlds.len()));
        }
        check_unique(&worlds)?;
        Ok(CycleSpec { worlds })
    }

    /// `x1, …, xn`.
    pub fn numbered(n: usize) -> Result<Self, BeliefError> {
        CycleSpec::new((1..=n).map(|i| WorldId::new(format!("x{i}"))).collect())
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether an order with ranks `rank` (indexed like `worlds`) breaks `C_i`.
    fn violated(&self, rank: &[usize], i: usize) -> bool {
        rank[(i + 1) % self.len()] > rank[i]
    }
}

/// `P(C_i violated)` for each constraint of the cycle under `d`.
pub fn violation_probabilities(
    spec: &CycleSpec,
    d: &OrderDistribution,
) -> Result<Vec<Rational>, BeliefError> {
    let idx = spec
        .worlds
        .iter()
        .map(|w| d.index_of(w).ok_or_else(|| BeliefError::UnknownWorld(w.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..spec.len())
        .map(|i| {
            d.probability_that(|rank| {
                let local: Vec<usize> = idx.iter().map(|&w| rank[w]).collect();
                spec.violated(&local, i)
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimaxBound {
    /// Smallest achievable worst-case violation probability.
    pub bound: Rational,
    /// A distribution attaining it.
    pub witness: OrderDistribution,
}

/// Minimizes `t` subject to `P(C_i violated) ≤ t` for every constraint.
pub fn minimax_cycle_bound(spec: &CycleSpec, cap: usize) -> Result<MinimaxBound, BeliefError> {
    let n = spec.len();
    check_cap(n, cap)?;
    let orders = all_orders(n);
    // Rows 0..n: Σ_{violating} p − t + s_i = 0; row n: Σ p = 1.
    let mut rhs = vec![Rational::zero(); n];
    rhs.push(int(1));
    let mut lp = LinearProgram::new(n + 1, rhs);
    for order in &orders {
        let rank = rank_of(order);
        let mut column: Vec<(usize, i64)> =
            (0..n).filter(|&i| spec.violated(&rank, i)).map(|i| (i, 1)).collect();
        column.push((n, 1));
        lp.add_column(Rational::zero(), column);
    }
    lp.add_column(int(1), (0..n).map(|i| (i, -1)).collect());
    for i in 0..n {
        lp.add_column(Rational::zero(), vec![(i, 1)]);
    }
    let LpOutcome::Optimal { x, objective, .. } = lp.solve() else {
        unreachable!("the minimax program is feasible and bounded below by 0")
    };
    let support = orders
        .into_iter()
        .zip(x)
        .filter(|(_, p)| p.is_positive())
        .collect();
    Ok(MinimaxBound {
        bound: objective,
        witness: OrderDistribution::new(spec.worlds.clone(), support)?,
    })
}

/// Uniform mixture of the `n` cyclic shifts of the order that ranks
/// `x_1` above `x_2` above … above `x_n`. Each constraint is broken only by
/// the shift that puts `x_{i+1}` on top of `x_i`, so with probability `1/n`.
pub fn rotation_mixture(spec: &CycleSpec) -> OrderDistribution {
    let n = spec.len();
    let support = (0..n)
        .map(|shift| {
            // Best first: x_shift, x_shift+1, …; stored worst first.
            let order: Vec<usize> = (0..n).rev().map(|k| (shift + k) % n).collect();
            (order, ratio(1, n as i64))
        })
        .collect();
    OrderDistribution::new(spec.worlds.clone(), support).expect("rotations form a distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{check_path_coherence, matrix_from_distribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max(v: &[Rational]) -> Rational {
        v.iter().max().unwrap().clone()
    }

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> OrderDistribution {
        let orders = all_orders(n);
        let k = rng.gen_range(1..=orders.len().min(6));
        let support: Vec<(Vec<usize>, i64)> = (0..k)
            .map(|_| (orders[rng.gen_range(0..orders.len())].clone(), rng.gen_range(1..20)))
            .collect();
        let total: i64 = support.iter().map(|(_, w)| w).sum();
        let support = support.into_iter().map(|(o, w)| (o, ratio(w, total))).collect();
        let worlds = (1..=n).map(|i| WorldId::new(format!("x{i}"))).collect();
        OrderDistribution::new(worlds, support).unwrap()
    }

    #[test]
    fn rotations_for_three_worlds() {
        let spec = CycleSpec::numbered(3).unwrap();
        let d = rotation_mixture(&spec);
        assert_eq!(d.len(), 3);
        assert!(d.probabilities().iter().all(|p| *p == ratio(1, 3)));
        // Each constraint is broken by exactly one of the three orders.
        for i in 0..3 {
            let breaking = d.ranked().filter(|(rank, _)| spec.violated(rank, i)).count();
            assert_eq!(breaking, 1);
        }
        let m = matrix_from_distribution(&d);
        let z = |a: &str, b: &str| m.get(&a.into(), &b.into()).unwrap().clone();
        assert_eq!(z("x1", "x2"), ratio(2, 3));
        assert_eq!(z("x2", "x3"), ratio(2, 3));
        assert_eq!(z("x3", "x1"), ratio(2, 3));
        assert!(check_path_coherence(&m, 3).unwrap().is_empty());
    }

    #[test]
    fn rotation_violation_is_one_over_n() {
        for n in 3..=7 {
            let spec = CycleSpec::numbered(n).unwrap();
            let v = violation_probabilities(&spec, &rotation_mixture(&spec)).unwrap();
            assert!(v.iter().all(|p| *p == ratio(1, n as i64)), "n = {n}");
        }
    }

    #[test]
    fn minimax_bound_for_small_cycles() {
        for n in 3..=6 {
            let spec = CycleSpec::numbered(n).unwrap();
            let b = minimax_cycle_bound(&spec, DEFAULT_DIMENSION_CAP).unwrap();
            assert_eq!(b.bound, ratio(1, n as i64));
            let v = violation_probabilities(&spec, &b.witness).unwrap();
            assert_eq!(max(&v), b.bound);
        }
    }

    #[test]
    fn random_search_never_beats_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let n = rng.gen_range(3..=5);
            let spec = CycleSpec::numbered(n).unwrap();
            let d = random_distribution(&mut rng, n);
            let v = violation_probabilities(&spec, &d).unwrap();
            assert!(max(&v) >= ratio(1, n as i64));
        }
    }

    #[test]
    fn dimension_cap() {
        let spec = CycleSpec::numbered(8).unwrap();
        assert_eq!(
            minimax_cycle_bound(&spec, DEFAULT_DIMENSION_CAP),
            Err(BeliefError::DimensionCap { n: 8, cap: 7 })
        );
        assert!(matches!(CycleSpec::numbered(2), Err(BeliefError::CycleTooShort(2))));
    }

    #[test]
    fn point_mass_is_recovered() {
        let d = OrderDistribution::point_mass(CycleSpec::numbered(4).unwrap().worlds).unwrap();
        let m = matrix_from_distribution(&d);
        let Feasibility::Feasible(w) = exact_feasibility(&m, 7).unwrap() else { panic!() };
        assert_eq!(w, d);
    }

    #[test]
    fn reversed_span_is_infeasible() {
        let m = BeliefMatrix::from_upper(CycleSpec::numbered(3).unwrap().worlds, |i, j| {
            if (i, j) == (0, 2) {
                int(1)
            } else {
                int(0)
            }
        })
        .unwrap();
        // Z(x2,x1) = Z(x3,x2) = 1 but Z(x3,x1) = 0.
        let Feasibility::Infeasible(cert) = exact_feasibility(&m, 7).unwrap() else { panic!() };
        assert!(cert.verify(&m));
        assert!(float_feasibility(&m, 7).unwrap() == FloatFeasibility::Infeasible);
    }

    #[test]
    fn rotation_matrix_is_feasible() {
        let spec = CycleSpec::numbered(3).unwrap();
        let m = matrix_from_distribution(&rotation_mixture(&spec));
        let Feasibility::Feasible(w) = exact_feasibility(&m, 7).unwrap() else { panic!() };
        assert_eq!(matrix_from_distribution(&w), m);
    }

    #[test]
    fn feasibility_round_trips_on_random_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let d = random_distribution(&mut rng, n);
            let m = matrix_from_distribution(&d);
            assert!(check_path_coherence(&m, n).unwrap().is_empty());
            let Feasibility::Feasible(w) = exact_feasibility(&m, 7).unwrap() else { panic!() };
            assert_eq!(matrix_from_distribution(&w), m);
            let FloatFeasibility::Feasible(fw) = float_feasibility(&m, 7).unwrap() else { panic!() };
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let got: f64 = fw
                        .iter()
                        .filter(|(o, _)| {
                            let pos = |k: usize| o.iter().position(|x| *x == m.worlds()[k]).unwrap();
                            pos(i) > pos(j)
                        })
                        .map(|(_, p)| p)
                        .sum();
                    assert!((got - to_f64(m.at(i, j))).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn beating_the_bound_on_every_edge_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(3..=5);
            let spec = CycleSpec::numbered(n).unwrap();
            let scale = 1000 * n as i64;
            // Cycle entries strictly above (n − 1)/n, the rest arbitrary.
            let m = BeliefMatrix::from_upper(spec.worlds.clone(), |i, j| {
                let edge = |z: i64| ratio(z, scale);
                let high = rng.gen_range(scale - 1000 + 1..=scale);
                if j == i + 1 {
                    edge(high)
                } else if i == 0 && j == n - 1 {
                    edge(scale - high)
                } else {
                    edge(rng.gen_range(0..=scale))
                }
            })
            .unwrap();
            let Feasibility::Infeasible(cert) = exact_feasibility(&m, 7).unwrap() else {
                panic!("matrix below the minimax bound was realized")
            };
            assert!(cert.verify(&m));
        }
    }
}
