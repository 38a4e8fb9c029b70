//! Dense revised simplex for `min c^T x` subject to row constraints and `x >= 0`.
//!
//! Columns are given as runs of consecutive rows sharing one coefficient. The
//! basis inverse is stored as row-wise prefix sums, so a column's image under
//! `B^-1` and its reduced cost cost O(runs) per row instead of O(nonzeros).
//! Product-form updates act linearly on the prefix rows; the inverse is
//! rebuilt from scratch every [`REFACTOR_PERIOD`] pivots.

use crate::scalar::Scalar;

const NONE: usize = usize::MAX;
pub const REFACTOR_PERIOD: usize = 100;
/// Consecutive degenerate pivots after which the hybrid rule switches to Bland.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run<F> {
    pub start: usize,
    pub end: usize,
    pub coef: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column<F> {
    pub cost: F,
    pub runs: Vec<Run<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row<F> {
    pub sense: Sense,
    pub rhs: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem<F> {
    pub rows: Vec<Row<F>>,
    pub columns: Vec<Column<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variable.
    Bland,
    /// Most negative reduced cost; falls back to Bland while the objective stalls.
    #[default]
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<F> {
    pub status: Status,
    pub x: Vec<F>,
    pub objective: F,
    pub iterations: usize,
}

struct Engine<F> {
    m: usize,
    cols: Vec<Column<F>>,
    art_start: usize,
    rhs: Vec<F>,
    basis: Vec<usize>,
    position: Vec<usize>,
    /// Row `i` holds prefix sums of row `i` of `B^-1`; stride `m + 1`.
    prefix: Vec<F>,
    xb: Vec<F>,
    /// Prefix sums of the simplex multipliers `c_B^T B^-1`.
    duals: Vec<F>,
    cost: Vec<F>,
    blocked: Vec<bool>,
    iterations: usize,
}

impl<F: Scalar> Engine<F> {
    fn new(problem: &Problem<F>) -> Self {
        let m = problem.rows.len();
        let mut cols = problem.columns.clone();
        let mut basis = vec![NONE; m];
        let unit = |row: usize, coef: F| Column {
            cost: F::zero(),
            runs: vec![Run { start: row, end: row + 1, coef }],
        };
        for (i, row) in problem.rows.iter().enumerate() {
            assert!(row.rhs >= F::zero(), "row {i} has a negative right-hand side");
            match row.sense {
                Sense::Le => {
                    basis[i] = cols.len();
                    cols.push(unit(i, F::one()));
                }
                Sense::Ge => cols.push(unit(i, -F::one())),
                Sense::Eq => {}
            }
        }
        let art_start = cols.len();
        for (i, row) in problem.rows.iter().enumerate() {
            if row.sense != Sense::Le {
                basis[i] = cols.len();
                cols.push(unit(i, F::one()));
            }
        }
        let mut position = vec![NONE; cols.len()];
        for (i, &b) in basis.iter().enumerate() {
            position[b] = i;
        }
        let stride = m + 1;
        let mut prefix = vec![F::zero(); m * stride];
        for i in 0..m {
            for k in (i + 1)..=m {
                prefix[i * stride + k] = F::one();
            }
        }
        let n = cols.len();
        Self {
            m,
            cols,
            art_start,
            rhs: problem.rows.iter().map(|r| r.rhs).collect(),
            basis,
            position,
            prefix,
            xb: problem.rows.iter().map(|r| r.rhs).collect(),
            duals: vec![F::zero(); m + 1],
            cost: vec![F::zero(); n],
            blocked: vec![false; n],
            iterations: 0,
        }
    }

    fn row_dot(&self, i: usize, q: usize) -> F {
        let row = &self.prefix[i * (self.m + 1)..(i + 1) * (self.m + 1)];
        self.cols[q]
            .runs
            .iter()
            .fold(F::zero(), |acc, r| acc + r.coef * (row[r.end] - row[r.start]))
    }

    fn reduced_cost(&self, q: usize) -> F {
        let y = &self.duals;
        let dot = self.cols[q]
            .runs
            .iter()
            .fold(F::zero(), |acc, r| acc + r.coef * (y[r.end] - y[r.start]));
        self.cost[q] - dot
    }

    fn ftran(&self, q: usize) -> Vec<F> {
        (0..self.m).map(|i| self.row_dot(i, q)).collect()
    }

    fn recompute_duals(&mut self) {
        let stride = self.m + 1;
        let mut y = vec![F::zero(); stride];
        for i in 0..self.m {
            let c = self.cost[self.basis[i]];
            if c != F::zero() {
                let row = &self.prefix[i * stride..(i + 1) * stride];
                for (acc, v) in y.iter_mut().zip(row) {
                    *acc = *acc + c * *v;
                }
            }
        }
        self.duals = y;
    }

    fn pivot(&mut self, p: usize, q: usize, d: &[F], reduced: F) {
        let stride = self.m + 1;
        let dp = d[p];
        let mut pivot_row: Vec<F> = self.prefix[p * stride..(p + 1) * stride].to_vec();
        for v in pivot_row.iter_mut() {
            *v = *v / dp;
        }
        for (i, &di) in d.iter().enumerate() {
            if i == p || di == F::zero() {
                continue;
            }
            let row = &mut self.prefix[i * stride..(i + 1) * stride];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = *v - di * *pv;
            }
        }
        self.prefix[p * stride..(p + 1) * stride].copy_from_slice(&pivot_row);

        let theta = self.xb[p] / dp;
        for (x, &di) in self.xb.iter_mut().zip(d) {
            *x = *x - theta * di;
        }
        self.xb[p] = theta;

        for (y, pv) in self.duals.iter_mut().zip(&pivot_row) {
            *y = *y + reduced * *pv;
        }

        let leaving = self.basis[p];
        self.position[leaving] = NONE;
        self.basis[p] = q;
        self.position[q] = p;
        self.iterations += 1;
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut b = vec![F::zero(); m * m];
        for (j, &col) in self.basis.iter().enumerate() {
            for r in &self.cols[col].runs {
                for i in r.start..r.end {
                    b[i * m + j] = r.coef;
                }
            }
        }
        let mut inv = vec![F::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = F::one();
        }
        for c in 0..m {
            let (mut best, mut best_abs) = (c, F::zero());
            for r in c..m {
                let v = b[r * m + c].abs();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if best_abs <= F::epsilon() {
                return false;
            }
            if best != c {
                for k in 0..m {
                    b.swap(best * m + k, c * m + k);
                    inv.swap(best * m + k, c * m + k);
                }
            }
            let piv = b[c * m + c];
            for k in 0..m {
                b[c * m + k] = b[c * m + k] / piv;
                inv[c * m + k] = inv[c * m + k] / piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f == F::zero() {
                    continue;
                }
                for k in 0..m {
                    b[r * m + k] = b[r * m + k] - f * b[c * m + k];
                    inv[r * m + k] = inv[r * m + k] - f * inv[c * m + k];
                }
            }
        }
        // B^-1 row i maps to basis position i because column j of B is basis[j]
        let stride = m + 1;
        for i in 0..m {
            let mut acc = F::zero();
            self.prefix[i * stride] = F::zero();
            for k in 0..m {
                acc = acc + inv[i * m + k];
                self.prefix[i * stride + k + 1] = acc;
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).fold(F::zero(), |acc, k| acc + inv[i * m + k] * self.rhs[k]);
        }
        self.recompute_duals();
        true
    }

    fn set_phase_costs(&mut self, phase_one: bool) {
        for (q, c) in self.cost.iter_mut().enumerate() {
            *c = if phase_one {
                if q >= self.art_start {
                    F::one()
                } else {
                    F::zero()
                }
            } else {
                self.cols[q].cost
            };
        }
        self.recompute_duals();
    }

    fn objective(&self) -> F {
        self.basis
            .iter()
            .zip(&self.xb)
            .fold(F::zero(), |acc, (&b, &x)| acc + self.cost[b] * x)
    }

    fn iterate(&mut self, rule: PivotRule, max_iterations: usize) -> Status {
        let tol = F::feasibility_tolerance();
        let piv_tol = F::pivot_tolerance();
        let scale = self
            .cost
            .iter()
            .fold(F::one(), |acc, c| acc.max(c.abs()));
        let opt_tol = tol * scale;
        let mut stalled = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= max_iterations {
                return Status::IterationLimit;
            }
            if since_refactor >= REFACTOR_PERIOD {
                since_refactor = 0;
                if !self.refactor() {
                    log::warn!("basis became singular during refactorization");
                }
            }
            let bland = rule == PivotRule::Bland || stalled >= STALL_LIMIT;
            let mut entering = None;
            let mut best = -opt_tol;
            for q in 0..self.cols.len() {
                if self.position[q] != NONE || self.blocked[q] {
                    continue;
                }
                let rc = self.reduced_cost(q);
                if rc < best {
                    entering = Some((q, rc));
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some((q, rc)) = entering else {
                return Status::Optimal;
            };
            let d = self.ftran(q);
            let mut leave: Option<(usize, F)> = None;
            for (i, &di) in d.iter().enumerate() {
                if di <= piv_tol {
                    continue;
                }
                let ratio = self.xb[i].max(F::zero()) / di;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((j, r)) => {
                        if ratio < r - tol {
                            Some((i, ratio))
                        } else if ratio <= r + tol {
                            let better = if bland {
                                self.basis[i] < self.basis[j]
                            } else {
                                di > d[j]
                            };
                            if better {
                                Some((i, ratio))
                            } else {
                                Some((j, r))
                            }
                        } else {
                            Some((j, r))
                        }
                    }
                };
            }
            let Some((p, theta)) = leave else {
                return Status::Unbounded;
            };
            if theta <= tol {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(p, q, &d, rc);
            since_refactor += 1;
        }
    }

    /// Pivots basic artificial variables out wherever a non-artificial column can replace them.
    fn expel_artificials(&mut self) {
        let piv_tol = F::pivot_tolerance();
        for p in 0..self.m {
            if self.basis[p] < self.art_start {
                continue;
            }
            let candidate = (0..self.art_start)
                .filter(|&q| self.position[q] == NONE)
                .map(|q| (q, self.row_dot(p, q)))
                .filter(|(_, v)| v.abs() > piv_tol)
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite pivots"));
            if let Some((q, _)) = candidate {
                let d = self.ftran(q);
                self.pivot(p, q, &d, F::zero());
            }
        }
        for q in self.art_start..self.cols.len() {
            self.blocked[q] = true;
        }
    }
}

pub fn solve<F: Scalar>(problem: &Problem<F>, rule: PivotRule) -> Solution<F> {
    let n = problem.columns.len();
    let m = problem.rows.len();
    let mut engine = Engine::new(problem);
    let max_iterations = 50 * (n + m) + 1000;
    let tol = F::feasibility_tolerance();
    let finish = |engine: &Engine<F>, status: Status| {
        let mut x = vec![F::zero(); n];
        for (i, &b) in engine.basis.iter().enumerate() {
            if b < n {
                x[b] = engine.xb[i].max(F::zero());
            }
        }
        let objective = problem
            .columns
            .iter()
            .zip(&x)
            .fold(F::zero(), |acc, (c, &v)| acc + c.cost * v);
        Solution { status, x, objective, iterations: engine.iterations }
    };

    if engine.art_start < engine.cols.len() {
        engine.set_phase_costs(true);
        let status = engine.iterate(rule, max_iterations);
        if status != Status::Optimal {
            return finish(&engine, status);
        }
        engine.refactor();
        let rhs_scale = problem.rows.iter().fold(F::one(), |acc, r| acc + r.rhs.abs());
        if engine.objective() > tol * rhs_scale {
            return finish(&engine, Status::Infeasible);
        }
        engine.expel_artificials();
    }
    engine.set_phase_costs(false);
    let status = engine.iterate(rule, max_iterations);
    if status == Status::Optimal {
        engine.refactor();
    }
    finish(&engine, status)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(cost: f64, entries: &[(usize, f64)]) -> Column<f64> {
        Column {
            cost,
            runs: entries.iter().map(|&(r, c)| Run { start: r, end: r + 1, coef: c }).collect(),
        }
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let p = Problem {
            rows: vec![
                Row { sense: Sense::Le, rhs: 4.0 },
                Row { sense: Sense::Le, rhs: 12.0 },
                Row { sense: Sense::Le, rhs: 18.0 },
            ],
            columns: vec![col(-3.0, &[(0, 1.0), (2, 3.0)]), col(-5.0, &[(1, 2.0), (2, 2.0)])],
        };
        for rule in [PivotRule::Bland, PivotRule::Hybrid] {
            let s = solve(&p, rule);
            assert_eq!(s.status, Status::Optimal);
            assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
            assert!((s.objective + 36.0).abs() < 1e-9);
        }
    }

    #[test]
    fn covering_with_ge_rows() {
        // min 2x + 3y s.t. x + y >= 2, x <= 1 -> x = 1, y = 1, 5
        let p = Problem {
            rows: vec![Row { sense: Sense::Ge, rhs: 2.0 }, Row { sense: Sense::Le, rhs: 1.0 }],
            columns: vec![col(2.0, &[(0, 1.0), (1, 1.0)]), col(3.0, &[(0, 1.0)])],
        };
        let s = solve(&p, PivotRule::Hybrid);
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let p = Problem {
            rows: vec![Row { sense: Sense::Ge, rhs: 2.0 }, Row { sense: Sense::Le, rhs: 1.0 }],
            columns: vec![col(1.0, &[(0, 1.0), (1, 1.0)])],
        };
        assert_eq!(solve(&p, PivotRule::Hybrid).status, Status::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let p = Problem {
            rows: vec![Row { sense: Sense::Ge, rhs: 1.0 }],
            columns: vec![col(-1.0, &[(0, 1.0)])],
        };
        assert_eq!(solve(&p, PivotRule::Hybrid).status, Status::Unbounded);
    }

    #[test]
    fn equality_rows_and_redundancy() {
        // x + y = 1, 2x + 2y = 2 (redundant), min x + 2y -> 1
        let p = Problem {
            rows: vec![Row { sense: Sense::Eq, rhs: 1.0 }, Row { sense: Sense::Eq, rhs: 2.0 }],
            columns: vec![col(1.0, &[(0, 1.0), (1, 2.0)]), col(2.0, &[(0, 1.0), (1, 2.0)])],
        };
        let s = solve(&p, PivotRule::Hybrid);
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn run_columns_match_expanded_columns() {
        // a run over rows 1..4 equals three unit entries
        let rows = vec![
            Row { sense: Sense::Ge, rhs: 1.0 },
            Row { sense: Sense::Le, rhs: 1.0 },
            Row { sense: Sense::Le, rhs: 1.0 },
            Row { sense: Sense::Le, rhs: 1.0 },
        ];
        let runs = Problem {
            rows: rows.clone(),
            columns: vec![
                Column {
                    cost: 1.0,
                    runs: vec![Run { start: 0, end: 1, coef: 1.0 }, Run { start: 1, end: 4, coef: 1.0 }],
                },
                col(3.0, &[(0, 1.0), (2, 1.0)]),
            ],
        };
        let expanded = Problem {
            rows,
            columns: vec![col(1.0, &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)]), col(3.0, &[(0, 1.0), (2, 1.0)])],
        };
        let a = solve(&runs, PivotRule::Hybrid);
        let b = solve(&expanded, PivotRule::Hybrid);
        assert_eq!(a.status, Status::Optimal);
        assert!((a.objective - b.objective).abs() < 1e-12);
        assert!((a.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_solves_small_problems() {
        let p = Problem {
            rows: vec![Row { sense: Sense::Ge, rhs: 2.0f32 }, Row { sense: Sense::Le, rhs: 1.0 }],
            columns: vec![
                Column { cost: 2.0f32, runs: vec![Run { start: 0, end: 2, coef: 1.0 }] },
                Column { cost: 3.0f32, runs: vec![Run { start: 0, end: 1, coef: 1.0 }] },
            ],
        };
        let s = solve(&p, PivotRule::Hybrid);
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-4);
    }
}
