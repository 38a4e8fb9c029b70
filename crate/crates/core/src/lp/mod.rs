//! The configuration LP.
//!
//! One variable per (processor, job, configuration) with cost equal to the
//! configuration's constant-speed energy, one covering row per job
//! (`sum x >= 1`) and one unit-capacity row per (processor, slot).

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::ops::Range;

use crate::discretize::{config_energy, Configuration, ProcessorPlan};
use crate::error::{Error, Result};
use crate::model::{JobId, ProcId};
use crate::scalar::Scalar;

pub mod simplex;

pub use simplex::PivotRule;

#[derive(Debug, Clone, PartialEq)]
pub struct LpVariable<F> {
    pub processor: ProcId,
    pub job: JobId,
    pub config: Configuration,
    pub cost: F,
}

#[derive(Debug, Clone)]
pub struct ConfigLp<F> {
    pub variables: Vec<LpVariable<F>>,
    /// Covering rows, in row order.
    pub jobs: Vec<JobId>,
    /// Capacity rows `(processor, slot)`, in row order after the covering rows.
    pub capacity_rows: Vec<(ProcId, usize)>,
    job_row: BTreeMap<JobId, usize>,
    capacity_base: BTreeMap<ProcId, usize>,
    by_job: BTreeMap<JobId, Vec<usize>>,
}

impl<F: Scalar> ConfigLp<F> {
    pub fn cover_row(&self, var: usize) -> usize {
        self.job_row[&self.variables[var].job]
    }

    /// Capacity rows (as indices into `capacity_rows`) touched by `var`.
    pub fn capacity_range(&self, var: usize) -> Range<usize> {
        let v = &self.variables[var];
        let base = self.capacity_base[&v.processor];
        base + v.config.first..base + v.config.last + 1
    }

    pub fn variables_of(&self, job: JobId) -> &[usize] {
        self.by_job.get(&job).map_or(&[], Vec::as_slice)
    }

    pub fn row_count(&self) -> usize {
        self.jobs.len() + self.capacity_rows.len()
    }

    pub fn to_problem(&self) -> simplex::Problem<F> {
        let covers = self.jobs.len();
        let mut rows = vec![simplex::Row { sense: simplex::Sense::Ge, rhs: F::one() }; covers];
        rows.extend(
            std::iter::repeat_n(simplex::Row { sense: simplex::Sense::Le, rhs: F::one() }, self.capacity_rows.len()),
        );
        let columns = (0..self.variables.len())
            .map(|k| {
                let cover = self.cover_row(k);
                let cap = self.capacity_range(k);
                simplex::Column {
                    cost: self.variables[k].cost,
                    runs: vec![
                        simplex::Run { start: cover, end: cover + 1, coef: F::one() },
                        simplex::Run { start: covers + cap.start, end: covers + cap.end, coef: F::one() },
                    ],
                }
            })
            .collect();
        simplex::Problem { rows, columns }
    }

    /// Writes the LP in CPLEX LP text format, one objective term block and one row per line.
    pub fn write_lp_format<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "\\ configuration LP: {} variables, {} rows", self.variables.len(), self.row_count())?;
        writeln!(out, "Minimize")?;
        let terms: Vec<String> = self
            .variables
            .iter()
            .enumerate()
            .map(|(k, v)| format!("{:e} x{k}", v.cost.to_f64_lossy()))
            .collect();
        writeln!(out, " obj: {}", terms.join(" + "))?;
        writeln!(out, "Subject To")?;
        for job in &self.jobs {
            let vars: Vec<String> = self.variables_of(*job).iter().map(|k| format!("x{k}")).collect();
            writeln!(out, " cover_{}: {} >= 1", job.0, vars.join(" + "))?;
        }
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); self.capacity_rows.len()];
        for k in 0..self.variables.len() {
            for r in self.capacity_range(k) {
                touching[r].push(k);
            }
        }
        for ((proc, slot), vars) in self.capacity_rows.iter().zip(&touching) {
            if vars.is_empty() {
                continue;
            }
            let vars: Vec<String> = vars.iter().map(|k| format!("x{k}")).collect();
            writeln!(out, " cap_{}_{}: {} <= 1", proc.0, slot, vars.join(" + "))?;
        }
        writeln!(out, "End")
    }
}

/// Builds the LP over `jobs` from one plan per processor.
pub fn build_lp<F: Scalar>(jobs: &[JobId], plans: &[ProcessorPlan]) -> Result<ConfigLp<F>> {
    let job_row: BTreeMap<JobId, usize> = jobs.iter().enumerate().map(|(k, j)| (*j, k)).collect();
    let mut capacity_rows = Vec::new();
    let mut capacity_base = BTreeMap::new();
    let mut variables = Vec::new();
    let mut by_job: BTreeMap<JobId, Vec<usize>> = BTreeMap::new();
    for plan in plans {
        capacity_base.insert(plan.processor, capacity_rows.len());
        capacity_rows.extend((0..plan.grid.len()).map(|t| (plan.processor, t)));
        for (window, configs) in plan.windows.iter().zip(&plan.configs) {
            if !job_row.contains_key(&window.id) {
                continue;
            }
            for c in configs {
                by_job.entry(window.id).or_default().push(variables.len());
                variables.push(LpVariable {
                    processor: plan.processor,
                    job: window.id,
                    config: c.clone(),
                    cost: config_energy(&window.work, &c.length, plan.alpha),
                });
            }
        }
    }
    if let Some(missing) = jobs.iter().find(|j| !by_job.contains_key(j)) {
        return Err(Error::NoConfiguration(*missing));
    }
    Ok(ConfigLp {
        variables,
        jobs: jobs.to_vec(),
        capacity_rows,
        job_row,
        capacity_base,
        by_job,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<F> {
    pub status: LpStatus,
    /// Weight of each variable, indexed like `ConfigLp::variables`.
    pub x: Vec<F>,
    pub objective: F,
    pub iterations: usize,
}

impl<F: Scalar> LpSolution<F> {
    pub fn cover(&self, lp: &ConfigLp<F>, job: JobId) -> F {
        lp.variables_of(job).iter().map(|&k| self.x[k]).sum()
    }

    /// Largest violation of a covering or capacity row (zero when feasible).
    pub fn max_violation(&self, lp: &ConfigLp<F>) -> F {
        let mut worst = F::zero();
        for job in &lp.jobs {
            worst = worst.max(F::one() - self.cover(lp, *job));
        }
        let mut load = vec![F::zero(); lp.capacity_rows.len()];
        for (k, &x) in self.x.iter().enumerate() {
            for r in lp.capacity_range(k) {
                load[r] = load[r] + x;
            }
        }
        for l in load {
            worst = worst.max(l - F::one());
        }
        for &x in &self.x {
            worst = worst.max(-x);
        }
        worst
    }
}

pub fn solve_lp<F: Scalar>(lp: &ConfigLp<F>) -> Result<LpSolution<F>> {
    solve_lp_with(lp, PivotRule::default())
}

pub fn solve_lp_with<F: Scalar>(lp: &ConfigLp<F>, rule: PivotRule) -> Result<LpSolution<F>> {
    let problem = lp.to_problem();
    let s = simplex::solve(&problem, rule);
    log::debug!(
        "configuration LP: {} vars, {} rows, {} pivots, {:?}",
        lp.variables.len(),
        lp.row_count(),
        s.iterations,
        s.status
    );
    let status = match s.status {
        simplex::Status::Optimal => LpStatus::Optimal,
        simplex::Status::Infeasible => LpStatus::Infeasible,
        other => return Err(Error::Solver(format!("{other:?} after {} pivots", s.iterations))),
    };
    Ok(LpSolution { status, x: s.x, objective: s.objective, iterations: s.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::SlotGrid;
    use crate::model::{Instance, JobWindow};
    use crate::rational::int;

    fn plan(alpha: f64, spec: &[(i64, i64, i64)], landmarks: &[i64]) -> ProcessorPlan {
        let windows: Vec<_> = spec
            .iter()
            .enumerate()
            .map(|(k, &(w, r, d))| JobWindow::new(JobId(k as u32), int(w), int(r), int(d)))
            .collect();
        let grid = SlotGrid::new(landmarks.iter().map(|&t| int(t)).collect(), 1).unwrap();
        ProcessorPlan::with_grid(ProcId(0), alpha, grid, windows)
    }

    #[test]
    fn structure_of_single_job_lp() {
        // one job over [0,2] on a two-slot grid: configurations [0], [1], [0,1]
        let p = plan(2.0, &[(2, 0, 2)], &[0, 1, 2]);
        let lp: ConfigLp<f64> = build_lp(&[JobId(0)], &[p]).unwrap();
        assert_eq!(lp.variables.len(), 3);
        assert_eq!(lp.jobs.len(), 1);
        assert_eq!(lp.capacity_rows.len(), 2);
        for k in 0..lp.variables.len() {
            assert_eq!(lp.cover_row(k), 0);
        }
    }

    #[test]
    fn longer_configuration_wins_alone() {
        let p = plan(2.0, &[(2, 0, 2)], &[0, 1, 2]);
        let lp: ConfigLp<f64> = build_lp(&[JobId(0)], &[p]).unwrap();
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        let long = lp.variables.iter().position(|v| v.config.slot_count() == 2).unwrap();
        assert!((s.x[long] - 1.0).abs() < 1e-9);
    }

    /// Exhaustive LP oracle for tiny instances: enumerate vertices as basic
    /// solutions of every square subsystem of the tight constraints.
    fn brute_lp(costs: &[f64], rows: &[(Vec<f64>, bool)]) -> f64 {
        // rows: (coefficients, is_ge) with rhs 1; plus x >= 0
        let n = costs.len();
        let mut all: Vec<(Vec<f64>, f64)> = rows.iter().map(|(a, _)| (a.clone(), 1.0)).collect();
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            all.push((e, 0.0));
        }
        let mut best = f64::INFINITY;
        let idx: Vec<usize> = (0..all.len()).collect();
        fn choose(idx: &[usize], k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if idx.len() < k {
                return vec![];
            }
            let mut out = choose(&idx[1..], k - 1);
            for v in out.iter_mut() {
                v.insert(0, idx[0]);
            }
            out.extend(choose(&idx[1..], k));
            out
        }
        for subset in choose(&idx, n) {
            let mut a: Vec<Vec<f64>> = subset.iter().map(|&i| all[i].0.clone()).collect();
            let mut b: Vec<f64> = subset.iter().map(|&i| all[i].1).collect();
            // gaussian elimination
            let mut ok = true;
            for c in 0..n {
                let Some(p) = (c..n).max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap()) else {
                    ok = false;
                    break;
                };
                if a[p][c].abs() < 1e-12 {
                    ok = false;
                    break;
                }
                a.swap(p, c);
                b.swap(p, c);
                for r in 0..n {
                    if r != c {
                        let f = a[r][c] / a[c][c];
                        for k in 0..n {
                            a[r][k] -= f * a[c][k];
                        }
                        b[r] -= f * b[c];
                    }
                }
            }
            if !ok {
                continue;
            }
            let x: Vec<f64> = (0..n).map(|i| b[i] / a[i][i]).collect();
            let feasible = x.iter().all(|&v| v >= -1e-9)
                && rows.iter().all(|(coef, ge)| {
                    let s: f64 = coef.iter().zip(&x).map(|(c, v)| c * v).sum();
                    if *ge {
                        s >= 1.0 - 1e-9
                    } else {
                        s <= 1.0 + 1e-9
                    }
                });
            if feasible {
                best = best.min(costs.iter().zip(&x).map(|(c, v)| c * v).sum());
            }
        }
        best
    }

    fn dense_rows(lp: &ConfigLp<f64>) -> Vec<(Vec<f64>, bool)> {
        let n = lp.variables.len();
        let mut rows = Vec::new();
        for job in &lp.jobs {
            let mut a = vec![0.0; n];
            for &k in lp.variables_of(*job) {
                a[k] = 1.0;
            }
            rows.push((a, true));
        }
        for r in 0..lp.capacity_rows.len() {
            let a: Vec<f64> = (0..n).map(|k| if lp.capacity_range(k).contains(&r) { 1.0 } else { 0.0 }).collect();
            rows.push((a, false));
        }
        rows
    }

    #[test]
    fn two_jobs_sharing_a_two_slot_window() {
        // both jobs in [0,2], unit slots: neither may take the whole window
        let p = plan(2.0, &[(1, 0, 2), (1, 0, 2)], &[0, 1, 2]);
        let lp: ConfigLp<f64> = build_lp(&[JobId(0), JobId(1)], &[p]).unwrap();
        let s = solve_lp(&lp).unwrap();
        let costs: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
        let oracle = brute_lp(&costs, &dense_rows(&lp));
        assert!((oracle - 2.0).abs() < 1e-9);
        assert!((s.objective - oracle).abs() < 1e-9);
    }

    /// Jobs `(work, release, deadline)` and landmarks.
    type Case = (&'static [(i64, i64, i64)], &'static [i64]);

    #[test]
    fn matches_vertex_enumeration_on_small_lps() {
        let cases: &[Case] = &[
            (&[(1, 0, 2), (2, 1, 3)], &[0, 1, 2, 3]),
            (&[(2, 0, 3), (1, 1, 2)], &[0, 1, 2, 3]),
            (&[(1, 0, 2), (1, 0, 3), (3, 2, 4)], &[0, 1, 2, 3, 4]),
        ];
        for (spec, lms) in cases {
            let p = plan(2.5, spec, lms);
            let jobs: Vec<JobId> = (0..spec.len()).map(|k| JobId(k as u32)).collect();
            let lp: ConfigLp<f64> = build_lp(&jobs, &[p]).unwrap();
            if lp.variables.len() > 9 {
                continue;
            }
            let s = solve_lp(&lp).unwrap();
            let costs: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
            let oracle = brute_lp(&costs, &dense_rows(&lp));
            assert!((s.objective - oracle).abs() < 1e-9 * oracle.max(1.0), "{spec:?}");
            let bland = solve_lp_with(&lp, PivotRule::Bland).unwrap();
            assert!((bland.objective - oracle).abs() < 1e-9 * oracle.max(1.0));
        }
    }

    #[test]
    fn multi_processor_variables_respect_eligibility() {
        use std::collections::BTreeMap;
        use crate::model::{Job, JobParams, Mode, Processor, ProcessorSet};
        let procs = ProcessorSet::new(vec![
            Processor { id: ProcId(1), alpha: 2.0 },
            Processor { id: ProcId(2), alpha: 3.0 },
        ])
        .unwrap();
        let mut both = BTreeMap::new();
        both.insert(ProcId(1), JobParams::new(int(1), int(0), int(2)));
        both.insert(ProcId(2), JobParams::new(int(2), int(0), int(2)));
        let mut only_one = BTreeMap::new();
        only_one.insert(ProcId(1), JobParams::new(int(1), int(0), int(2)));
        let inst = Instance::new(
            Mode::Multi,
            vec![Job::new(JobId(0), both), Job::new(JobId(1), only_one)],
            procs,
        )
        .unwrap();
        let plans: Vec<_> = inst
            .processors()
            .ids()
            .map(|p| ProcessorPlan::new(&inst, p, &int(1), Some(2)).unwrap())
            .collect();
        let lp: ConfigLp<f64> = build_lp(&[JobId(0), JobId(1)], &plans).unwrap();
        assert!(lp.variables_of(JobId(1)).iter().all(|&k| lp.variables[k].processor == ProcId(1)));
        assert!(lp.variables_of(JobId(0)).iter().any(|&k| lp.variables[k].processor == ProcId(2)));
        // processor-2 costs use w = 2 and alpha = 3
        let k = lp.variables_of(JobId(0)).iter().copied().find(|&k| lp.variables[k].processor == ProcId(2)).unwrap();
        let v = &lp.variables[k];
        let len = <f64 as Scalar>::from_rational(&v.config.length);
        assert!((v.cost - 8.0 / len.powi(2)).abs() < 1e-9);
        let s = solve_lp(&lp).unwrap();
        assert!(s.max_violation(&lp) < 1e-7);
    }

    #[test]
    fn missing_configuration_is_reported() {
        // with one slot per gap, [0,2] contains both neighbours' windows in every run
        let p = plan(2.0, &[(1, 0, 2), (1, 0, 1), (1, 1, 2)], &[0, 1, 2]);
        let err = build_lp::<f64>(&[JobId(0), JobId(1), JobId(2)], &[p]).unwrap_err();
        assert_eq!(err, Error::NoConfiguration(JobId(0)));
    }

    #[test]
    fn lp_dump_lists_every_row() {
        let p = plan(2.0, &[(1, 0, 2), (1, 0, 2)], &[0, 1, 2]);
        let lp: ConfigLp<f64> = build_lp(&[JobId(0), JobId(1)], &[p]).unwrap();
        let mut buf = Vec::new();
        lp.write_lp_format(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize") && text.contains("Subject To") && text.trim_end().ends_with("End"));
        assert_eq!(text.lines().filter(|l| l.contains(">= 1")).count(), 2);
        assert_eq!(text.lines().filter(|l| l.contains("<= 1")).count(), 2);
    }
}
