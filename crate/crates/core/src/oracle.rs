//! Reference values for testing: the generalized Bell number, the exact
//! slot-respecting optimum of tiny instances, and a random preemptive adversary.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{config_energy, landmarks, ProcessorPlan, SlotGrid};
use crate::error::{Error, Result};
use crate::model::{energy, Instance, JobId, Schedule, ScheduleKind, Segment};
use crate::rational::{int, Rational};
use crate::scalar::Scalar;

pub const MAX_ORACLE_JOBS: usize = 6;
pub const MAX_ORACLE_SLOTS: usize = 60;

/// `sum_k k^alpha e^-1 / k!`, the `alpha`-th moment of a Poisson(1) variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BellTilde<F> {
    pub alpha: f64,
    pub value: F,
    pub terms_used: usize,
    /// Upper bound on the omitted tail.
    pub truncation_bound: F,
}

pub fn bell_tilde<F: Scalar>(alpha: f64, tol: f64) -> Result<BellTilde<F>> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let a = F::from_f64_lossy(alpha);
    let cutoff = F::from_f64_lossy(tol * 1e-2);
    let e_inv = F::from_f64_lossy(-1.0).exp();
    // log(k!) accumulated incrementally
    let mut log_fact = F::zero();
    let mut value = F::zero();
    let mut k = 0usize;
    loop {
        let kf = F::from_usize(k).expect("small integer");
        if k > 0 {
            log_fact = log_fact + kf.ln();
        }
        let term = if k == 0 { F::zero() } else { (a * kf.ln() - log_fact).exp() * e_inv };
        value = value + term;
        if k > 0 && kf > a {
            let next = kf + F::one();
            // successive term ratios decrease past alpha, so the tail is geometric-dominated
            let ratio = (next / kf).powf(a) / next;
            if ratio < F::one() {
                let tail = term * ratio / (F::one() - ratio);
                if tail < cutoff {
                    return Ok(BellTilde { alpha, value, terms_used: k + 1, truncation_bound: tail });
                }
            }
        }
        k += 1;
        if k > 10_000 {
            return Err(Error::Internal("Bell series did not converge".into()));
        }
    }
}

/// Exact optimum over integral slot-disjoint configuration choices, by
/// depth-first branch and bound. Refuses instances above the size limits.
pub fn brute_force_single<F: Scalar>(instance: &Instance, grid: &SlotGrid) -> Result<(F, Schedule)> {
    let p = instance.single_processor()?;
    if instance.n() > MAX_ORACLE_JOBS {
        return Err(Error::OracleLimit(format!("{} jobs exceed the limit of {MAX_ORACLE_JOBS}", instance.n())));
    }
    if grid.len() > MAX_ORACLE_SLOTS {
        return Err(Error::OracleLimit(format!("{} slots exceed the limit of {MAX_ORACLE_SLOTS}", grid.len())));
    }
    let alpha = instance.processors().alpha(p).ok_or(Error::UnknownProcessor(p))?;
    let plan = ProcessorPlan::with_grid(p, alpha, grid.clone(), instance.view(p));

    let mut options: Vec<Vec<Choice<F>>> = plan
        .windows
        .iter()
        .zip(&plan.configs)
        .map(|(w, cs)| {
            let mut v: Vec<Choice<F>> = cs
                .iter()
                .enumerate()
                .map(|(k, c)| Choice {
                    mask: slot_mask(c.first, c.last),
                    energy: config_energy(&w.work, &c.length, alpha),
                    config: k,
                })
                .collect();
            v.sort_by(|a, b| a.energy.partial_cmp(&b.energy).expect("finite energy"));
            v
        })
        .collect();
    // fewest options first keeps the tree narrow
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.sort_by_key(|&j| options[j].len());
    if order.iter().any(|&j| options[j].is_empty()) {
        return Err(Error::Infeasible);
    }
    let ordered: Vec<Vec<Choice<F>>> = order.iter().map(|&j| std::mem::take(&mut options[j])).collect();

    let mut search = Search { options: &ordered, best: None, picks: vec![0; ordered.len()] };
    search.dfs(0, 0, F::zero());
    let (_, picks) = search.best.ok_or(Error::Infeasible)?;

    let mut segments = Vec::with_capacity(picks.len());
    for (pos, &j) in order.iter().enumerate() {
        let window = &plan.windows[j];
        let c = &plan.configs[j][ordered[pos][picks[pos]].config];
        let (start, end) = c.span(&plan.grid);
        segments.push(Segment { job: window.id, processor: p, start, end, speed: &window.work / &c.length });
    }
    let mut schedule = Schedule::new(ScheduleKind::NonPreemptive, segments);
    schedule.normalize();
    let total = energy::<F>(&schedule, instance)?.total;
    Ok((total, schedule))
}

struct Choice<F> {
    mask: u64,
    energy: F,
    config: usize,
}

fn slot_mask(first: usize, last: usize) -> u64 {
    let width = last - first + 1;
    let ones = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    ones << first
}

struct Search<'a, F> {
    options: &'a [Vec<Choice<F>>],
    best: Option<(F, Vec<usize>)>,
    picks: Vec<usize>,
}

impl<F: Scalar> Search<'_, F> {
    fn bound(&self, depth: usize, used: u64) -> Option<F> {
        let mut sum = F::zero();
        for opts in &self.options[depth..] {
            // options are sorted by energy, so the first free one is the cheapest
            sum = sum + opts.iter().find(|c| c.mask & used == 0)?.energy;
        }
        Some(sum)
    }

    fn dfs(&mut self, depth: usize, used: u64, partial: F) {
        if depth == self.options.len() {
            if self.best.as_ref().is_none_or(|(e, _)| partial < *e) {
                self.best = Some((partial, self.picks.clone()));
            }
            return;
        }
        let Some(rest) = self.bound(depth, used) else { return };
        if let Some((e, _)) = &self.best {
            if partial + rest >= *e {
                return;
            }
        }
        for k in 0..self.options[depth].len() {
            let c = &self.options[depth][k];
            if c.mask & used != 0 {
                continue;
            }
            let (mask, energy) = (c.mask, c.energy);
            self.picks[depth] = k;
            self.dfs(depth + 1, used | mask, partial + energy);
        }
    }
}

/// A random feasible preemptive schedule: every job splits its work over the
/// landmark gaps of its life interval with random weights, and each gap runs
/// its total work at constant speed with the jobs in random order.
pub fn random_feasible_preemptive(instance: &Instance, seed: u64) -> Result<Schedule> {
    let p = instance.single_processor()?;
    let windows = instance.view(p);
    let points = landmarks(&windows);
    let gaps = points.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_gap: Vec<Vec<(JobId, Rational)>> = vec![Vec::new(); gaps];

    for w in &windows {
        let lo = points.binary_search(&w.release).expect("landmark");
        let hi = points.binary_search(&w.deadline).expect("landmark");
        let mut weights: Vec<i64> = (lo..hi).map(|_| rng.gen_range(0..=10)).collect();
        if weights.iter().all(|&x| x == 0) {
            let k = rng.gen_range(0..weights.len());
            weights[k] = 1;
        }
        let total: i64 = weights.iter().sum();
        for (g, &x) in (lo..hi).zip(&weights) {
            if x > 0 {
                per_gap[g].push((w.id, &w.work * int(x) / int(total)));
            }
        }
    }

    let mut segments = Vec::new();
    for (g, mut loads) in per_gap.into_iter().enumerate() {
        if loads.is_empty() {
            continue;
        }
        loads.shuffle(&mut rng);
        let (a, b) = (&points[g], &points[g + 1]);
        let total = loads.iter().fold(int(0), |acc, (_, w)| acc + w);
        let speed = &total / (b - a);
        let mut t = a.clone();
        let last = loads.len() - 1;
        for (k, (job, w)) in loads.into_iter().enumerate() {
            let end = if k == last { b.clone() } else { &t + &w / &speed };
            segments.push(Segment { job, processor: p, start: t, end: end.clone(), speed: speed.clone() });
            t = end;
        }
    }
    let mut schedule = Schedule::new(ScheduleKind::Preemptive, segments);
    schedule.normalize();
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_grid;
    use crate::lp::{build_lp, solve_lp};
    use crate::model::verify;
    use crate::yds::yds_schedule;
    use proptest::prelude::*;

    fn single(alpha: f64, jobs: &[(i64, i64, i64)]) -> Instance {
        Instance::single(alpha, jobs.iter().map(|&(w, r, d)| (int(w), int(r), int(d))).collect()).unwrap()
    }

    fn unit_grid(inst: &Instance) -> SlotGrid {
        let p = inst.single_processor().unwrap();
        SlotGrid::new(landmarks(&inst.view(p)), 1).unwrap()
    }

    #[test]
    fn bell_numbers() {
        for (alpha, expected) in [(1.0, 1.0), (2.0, 2.0), (3.0, 5.0), (4.0, 15.0), (5.0, 52.0)] {
            let b = bell_tilde::<f64>(alpha, 1e-10).unwrap();
            assert!((b.value - expected).abs() < 1e-8, "alpha {alpha}: {}", b.value);
            assert!(b.truncation_bound < 1e-12);
        }
    }

    #[test]
    fn bell_fractional_is_between_neighbours() {
        let b = bell_tilde::<f64>(2.5, 1e-10).unwrap().value;
        assert!(2.0 < b && b < 5.0);
    }

    #[test]
    fn bell_rejects_bad_parameters() {
        assert!(bell_tilde::<f64>(0.0, 1e-6).is_err());
        assert!(bell_tilde::<f64>(2.0, 0.0).is_err());
    }

    #[test]
    fn bell_in_f32() {
        let b = bell_tilde::<f32>(3.0, 1e-4).unwrap();
        assert!((b.value - 5.0).abs() < 1e-3);
    }

    #[test]
    fn brute_force_examples() {
        let inst = single(2.0, &[(1, 0, 1), (1, 0, 2)]);
        let (e, s) = brute_force_single::<f64>(&inst, &unit_grid(&inst)).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
        assert!(verify(&s, &inst, ScheduleKind::NonPreemptive).is_feasible());

        let inst = single(3.0, &[(2, 0, 4)]);
        let grid = SlotGrid::new(vec![int(0), int(4)], 4).unwrap();
        let (e, s) = brute_force_single::<f64>(&inst, &grid).unwrap();
        assert!((e - 8.0 / 16.0).abs() < 1e-12);
        assert_eq!(s.segments.len(), 1);
    }

    #[test]
    fn brute_force_limits() {
        let jobs: Vec<_> = (0..7).map(|k| (1, k, k + 1)).collect();
        let inst = single(2.0, &jobs);
        assert!(matches!(brute_force_single::<f64>(&inst, &unit_grid(&inst)), Err(Error::OracleLimit(_))));

        let inst = single(2.0, &[(1, 0, 1)]);
        let grid = SlotGrid::new(vec![int(0), int(1)], 61).unwrap();
        assert!(matches!(brute_force_single::<f64>(&inst, &grid), Err(Error::OracleLimit(_))));
    }

    #[test]
    fn brute_force_detects_overload() {
        // three jobs forced into two unit slots
        let inst = single(2.0, &[(1, 0, 1), (1, 0, 1), (1, 1, 2)]);
        assert_eq!(brute_force_single::<f64>(&inst, &unit_grid(&inst)).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn adversary_closed_loop() {
        let inst = single(2.0, &[(3, 0, 7), (1, 2, 3), (2, 1, 5), (4, 4, 9)]);
        let opt = yds_schedule::<f64>(&inst).unwrap().energy;
        for seed in 0..50 {
            let s = random_feasible_preemptive(&inst, seed).unwrap();
            assert!(verify(&s, &inst, ScheduleKind::Preemptive).is_feasible());
            assert!(energy::<f64>(&s, &inst).unwrap().total >= opt * (1.0 - 1e-12));
        }
        assert_eq!(random_feasible_preemptive(&inst, 3).unwrap(), random_feasible_preemptive(&inst, 3).unwrap());
    }

    fn arb_tiny() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
        prop::collection::vec((1i64..4, 0i64..4, 1i64..4), 1..5)
            .prop_map(|v| v.into_iter().map(|(w, r, len)| (w, r, r + len)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn oracle_dominates_lp_and_is_label_invariant(jobs in arb_tiny(), alpha in prop::sample::select(vec![1.5, 2.0, 3.0])) {
            let inst = single(alpha, &jobs);
            let grid = build_grid(&inst, &int(1), Some(2)).unwrap();
            let Ok((e, s)) = brute_force_single::<f64>(&inst, &grid) else { return Ok(()) };
            prop_assert!(verify(&s, &inst, ScheduleKind::NonPreemptive).is_feasible());

            let plan = ProcessorPlan::with_grid(inst.single_processor().unwrap(), alpha, grid.clone(), inst.view(inst.single_processor().unwrap()));
            let ids: Vec<JobId> = inst.jobs().iter().map(|j| j.id).collect();
            let lp = build_lp::<f64>(&ids, &[plan]).unwrap();
            let sol = solve_lp(&lp).unwrap();
            prop_assert!(sol.objective <= e * (1.0 + 1e-9));

            let mut reversed = jobs.clone();
            reversed.reverse();
            let relabeled = single(alpha, &reversed);
            let (e2, _) = brute_force_single::<f64>(&relabeled, &grid).unwrap();
            prop_assert!((e - e2).abs() <= 1e-9 * e.max(1.0));
        }
    }
}
