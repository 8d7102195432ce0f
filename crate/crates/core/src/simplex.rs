//! Two-phase revised simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! The constraint matrix has small integer entries (every LP in this crate
//! is built from 0/±1 incidence columns), stored column-wise and sparse. The
//! right-hand side and costs live in the number type `F`, which is either an
//! exact [`Rational`] or `f64` with a fixed tolerance. Bland's rule is used
//! throughout, so degenerate problems terminate.

use std::fmt::Debug;

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Arithmetic the solver needs, plus a sign test that is exact for rationals
/// and tolerant for floats.
pub trait LpNumber:
    Clone
    + Debug
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_nonzero(&self) -> bool {
        self.is_pos() || self.is_neg()
    }
}

impl LpNumber for Rational {
    fn from_i64(v: i64) -> Self {
        crate::rational::int(v)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

/// Tolerance for the floating-point mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

impl LpNumber for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_TOLERANCE
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }
}

/// Sparse integer column: `(row, coefficient)` pairs.
pub type Column = Vec<(usize, i64)>;

#[derive(Debug, Clone)]
pub struct LinearProgram<F> {
    rows: usize,
    columns: Vec<Column>,
    rhs: Vec<F>,
    cost: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<F> {
    Optimal {
        x: Vec<F>,
        objective: F,
        /// Row duals `y` with `c_j − yᵀA_j ≥ 0` for every column.
        duals: Vec<F>,
    },
    /// `y` with `yᵀA_j ≤ 0` for every column and `yᵀb > 0`: no `x ≥ 0`
    /// satisfies `Ax = b`.
    Infeasible { farkas: Vec<F> },
    Unbounded,
}

impl<F: LpNumber> LinearProgram<F> {
    pub fn new(rows: usize, rhs: Vec<F>) -> Self {
        assert_eq!(rhs.len(), rows);
        LinearProgram {
            rows,
            columns: Vec::new(),
            rhs,
            cost: Vec::new(),
        }
    }

    pub fn add_column(&mut self, cost: F, column: Column) -> usize {
        debug_assert!(column.iter().all(|&(r, _)| r < self.rows));
        self.columns.push(column);
        self.cost.push(cost);
        self.columns.len() - 1
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rhs(&self) -> &[F] {
        &self.rhs
    }

    pub fn solve(&self) -> LpOutcome<F> {
        Tableau::new(self).run()
    }
}

struct Tableau<'a, F> {
    lp: &'a LinearProgram<F>,
    /// Row sign flips making the right-hand side nonnegative.
    sign: Vec<i64>,
    /// Basic variable per row; indices `≥ n` are artificials.
    basis: Vec<usize>,
    binv: Vec<Vec<F>>,
    xb: Vec<F>,
    in_basis: Vec<bool>,
}

enum Phase {
    Feasibility,
    Optimality,
}

impl<'a, F: LpNumber> Tableau<'a, F> {
    fn new(lp: &'a LinearProgram<F>) -> Self {
        let m = lp.rows;
        let n = lp.columns.len();
        let sign: Vec<i64> = lp.rhs.iter().map(|b| if b.is_neg() { -1 } else { 1 }).collect();
        let xb = lp
            .rhs
            .iter()
            .zip(&sign)
            .map(|(b, &s)| if s < 0 { -b.clone() } else { b.clone() })
            .collect();
        let binv = (0..m)
            .map(|r| (0..m).map(|k| if r == k { F::one() } else { F::zero() }).collect())
            .collect();
        Tableau {
            lp,
            sign,
            basis: (n..n + m).collect(),
            binv,
            xb,
            in_basis: vec![false; n],
        }
    }

    fn n(&self) -> usize {
        self.lp.columns.len()
    }

    fn cost(&self, phase: &Phase, var: usize) -> F {
        match phase {
            Phase::Feasibility => {
                if var >= self.n() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Phase::Optimality => {
                if var >= self.n() {
                    F::zero()
                } else {
                    self.lp.cost[var].clone()
                }
            }
        }
    }

    /// `yᵀ = c_Bᵀ B⁻¹` for the sign-flipped rows.
    fn duals(&self, phase: &Phase) -> Vec<F> {
        let m = self.lp.rows;
        let mut y = vec![F::zero(); m];
        for r in 0..m {
            let c = self.cost(phase, self.basis[r]);
            if !c.is_nonzero() {
                continue;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                if self.binv[r][k].is_nonzero() {
                    *yk = yk.clone() + c.clone() * self.binv[r][k].clone();
                }
            }
        }
        y
    }

    fn dot(&self, y: &[F], j: usize) -> F {
        self.lp.columns[j].iter().fold(F::zero(), |acc, &(r, a)| {
            let a = a * self.sign[r];
            match a {
                1 => acc + y[r].clone(),
                -1 => acc - y[r].clone(),
                _ => acc + y[r].clone() * F::from_i64(a),
            }
        })
    }

    /// `B⁻¹ A_j` for the sign-flipped rows.
    fn column_image(&self, j: usize) -> Vec<F> {
        let m = self.lp.rows;
        (0..m)
            .map(|r| {
                self.lp.columns[j].iter().fold(F::zero(), |acc, &(k, a)| {
                    let b = &self.binv[r][k];
                    if b.is_nonzero() {
                        acc + b.clone() * F::from_i64(a * self.sign[k])
                    } else {
                        acc
                    }
                })
            })
            .collect()
    }

    fn pivot(&mut self, row: usize, var: usize, alpha: &[F]) {
        let m = self.lp.rows;
        let p = alpha[row].clone();
        for k in 0..m {
            self.binv[row][k] = self.binv[row][k].clone() / p.clone();
        }
        self.xb[row] = self.xb[row].clone() / p;
        let pivot_row = self.binv[row].clone();
        let pivot_x = self.xb[row].clone();
        for r in 0..m {
            if r == row || !alpha[r].is_nonzero() {
                continue;
            }
            let f = alpha[r].clone();
            for (k, pk) in pivot_row.iter().enumerate() {
                if pk.is_nonzero() {
                    self.binv[r][k] = self.binv[r][k].clone() - f.clone() * pk.clone();
                }
            }
            self.xb[r] = self.xb[r].clone() - f * pivot_x.clone();
        }
        let leaving = self.basis[row];
        if leaving < self.n() {
            self.in_basis[leaving] = false;
        }
        self.basis[row] = var;
        self.in_basis[var] = true;
    }

    /// Runs simplex iterations; `false` means unbounded.
    fn iterate(&mut self, phase: &Phase) -> bool {
        loop {
            let y = self.duals(phase);
            let entering = (0..self.n()).find(|&j| {
                !self.in_basis[j] && (self.cost(phase, j) - self.dot(&y, j)).is_neg()
            });
            let Some(j) = entering else {
                return true;
            };
            let alpha = self.column_image(j);
            let mut leave: Option<(usize, F)> = None;
            for r in 0..self.lp.rows {
                if !alpha[r].is_pos() {
                    continue;
                }
                let ratio = self.xb[r].clone() / alpha[r].clone();
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        let d = ratio.clone() - best.clone();
                        d.is_neg() || (!d.is_pos() && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((row, _)) = leave else {
                return false;
            };
            self.pivot(row, j, &alpha);
        }
    }

    fn unflip(&self, y: Vec<F>) -> Vec<F> {
        y.into_iter()
            .zip(&self.sign)
            .map(|(v, &s)| if s < 0 { -v } else { v })
            .collect()
    }

    fn run(mut self) -> LpOutcome<F> {
        let n = self.n();
        let m = self.lp.rows;
        let feasibility = Phase::Feasibility;
        // Phase one cannot be unbounded: its objective is bounded below by 0.
        self.iterate(&feasibility);
        let residual = (0..m)
            .filter(|&r| self.basis[r] >= n)
            .fold(F::zero(), |acc, r| acc + self.xb[r].clone());
        if residual.is_pos() {
            let y = self.duals(&feasibility);
            return LpOutcome::Infeasible {
                farkas: self.unflip(y),
            };
        }
        // Drive zero-valued artificials out where some real column can replace them.
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            let replacement = (0..n).find(|&j| {
                !self.in_basis[j]
                    && self.lp.columns[j].iter().fold(F::zero(), |acc, &(k, a)| {
                        acc + self.binv[r][k].clone() * F::from_i64(a * self.sign[k])
                    })
                    .is_nonzero()
            });
            if let Some(j) = replacement {
                let alpha = self.column_image(j);
                self.pivot(r, j, &alpha);
            }
        }
        let optimality = Phase::Optimality;
        if !self.iterate(&optimality) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![F::zero(); n];
        for r in 0..m {
            if self.basis[r] < n {
                x[self.basis[r]] = self.xb[r].clone();
            }
        }
        let objective = x
            .iter()
            .zip(&self.lp.cost)
            .fold(F::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        let y = self.duals(&optimality);
        LpOutcome::Optimal {
            x,
            objective,
            duals: self.unflip(y),
        }
    }
}

/// Checks a Farkas certificate against the original problem data.
pub fn verify_farkas<F: LpNumber>(lp: &LinearProgram<F>, y: &[F]) -> bool {
    let rows_ok = y.len() == lp.rows;
    let columns_ok = lp.columns.iter().all(|col| {
        let v = col
            .iter()
            .fold(F::zero(), |acc, &(r, a)| acc + y[r].clone() * F::from_i64(a));
        !v.is_pos()
    });
    let rhs = y
        .iter()
        .zip(&lp.rhs)
        .fold(F::zero(), |acc, (yi, bi)| acc + yi.clone() * bi.clone());
    rows_ok && columns_ok && rhs.is_pos()
}
