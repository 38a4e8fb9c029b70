//! Fully heterogeneous processors: one configuration LP over all processors
//! assigns every job to a processor, then each processor's jobs are turned
//! into a non-preemptive schedule independently.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::preemption_gap;
use crate::discretize::{Configuration, ProcessorPlan};
use crate::error::{Error, Result};
use crate::lp::{build_lp, solve_lp_with, ConfigLp, LpSolution, LpStatus};
use crate::model::{energy, Instance, JobId, Mode, ProcId, Schedule, ScheduleKind};
use crate::rational::Rational;
use crate::scalar::Scalar;
use crate::single::{agreeable_restrict, edf_schedule, round, speed_up, SinglePipeline, SolveParams, Trial};
use crate::yds::yds_schedule;

/// How one processor's jobs are made non-preemptive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Rerun the single-processor LP pipeline on the processor's jobs.
    #[default]
    Pipeline,
    /// Restrict and EDF-order the optimal preemptive schedule; falls back to
    /// `Pipeline` when some execution span contains another life interval.
    YdsEdf,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Pipeline => "pipeline",
            Backend::YdsEdf => "yds-edf",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pipeline" => Ok(Backend::Pipeline),
            "yds-edf" => Ok(Backend::YdsEdf),
            other => Err(Error::Parameter(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Jobs of every processor, ascending; processors without jobs are present with an empty list.
    pub subsets: BTreeMap<ProcId, Vec<JobId>>,
    /// The sampled configuration of every job, in instance order.
    pub choices: Vec<(JobId, ProcId, Configuration)>,
}

impl Assignment {
    pub fn processor_of(&self, job: JobId) -> Option<ProcId> {
        self.choices.iter().find(|c| c.0 == job).map(|c| c.1)
    }

    /// Subsets are pairwise disjoint and cover exactly `jobs`.
    pub fn is_partition_of(&self, jobs: &[JobId]) -> bool {
        let mut all: Vec<JobId> = self.subsets.values().flatten().copied().collect();
        all.sort();
        let mut want = jobs.to_vec();
        want.sort();
        all == want
    }
}

#[derive(Debug, Clone)]
pub struct AssignOutcome<F> {
    pub assignment: Assignment,
    /// Non-migratory preemptive schedule over all processors.
    pub preemptive: Schedule,
    pub preemptive_energy: F,
    pub per_processor: BTreeMap<ProcId, Schedule>,
    pub lp_objective: F,
    pub seed: u64,
}

/// LP plans and solution shared by all rounding trials.
#[derive(Debug, Clone)]
pub struct MultiLp<F> {
    pub plans: Vec<ProcessorPlan>,
    pub lp: ConfigLp<F>,
    pub solution: LpSolution<F>,
}

impl<F: Scalar> MultiLp<F> {
    pub fn prepare(instance: &Instance, params: &SolveParams) -> Result<Self> {
        if instance.mode() != Mode::Multi {
            return Err(Error::UnsupportedMode { expected: "multi" });
        }
        let plans = instance
            .processors()
            .ids()
            .map(|p| ProcessorPlan::new(instance, p, &params.epsilon, params.slot_cap))
            .collect::<Result<Vec<_>>>()?;
        let jobs: Vec<JobId> = instance.jobs().iter().map(|j| j.id).collect();
        let lp = build_lp::<F>(&jobs, &plans)?;
        let solution = solve_lp_with(&lp, params.pivot_rule)?;
        if solution.status != LpStatus::Optimal {
            return Err(Error::Infeasible);
        }
        Ok(Self { plans, lp, solution })
    }

    /// Best of `params.trials` samples with seeds `seed, seed + 1, ...`; ties keep the earliest.
    pub fn best(&self, instance: &Instance, params: &SolveParams) -> Result<AssignOutcome<F>> {
        if params.trials == 0 {
            return Err(Error::Parameter("at least one trial is required".into()));
        }
        let samples: Vec<AssignOutcome<F>> = (0..params.trials)
            .into_par_iter()
            .map(|i| self.sample(instance, params.seed.wrapping_add(i as u64)))
            .collect::<Result<_>>()?;
        let mut best: Option<AssignOutcome<F>> = None;
        for s in samples {
            if best.as_ref().is_none_or(|b| s.preemptive_energy < b.preemptive_energy) {
                best = Some(s);
            }
        }
        Ok(best.expect("at least one trial"))
    }

    fn plan(&self, processor: ProcId) -> &ProcessorPlan {
        self.plans.iter().find(|p| p.processor == processor).expect("one plan per processor")
    }

    /// One rounding followed by the per-processor speed-up.
    pub fn sample(&self, instance: &Instance, seed: u64) -> Result<AssignOutcome<F>> {
        let choice = round(&self.lp, &self.solution, seed)?;
        let chosen = choice.chosen(&self.lp);
        let mut subsets: BTreeMap<ProcId, Vec<JobId>> = self.plans.iter().map(|p| (p.processor, Vec::new())).collect();
        let mut per_processor = BTreeMap::new();
        let mut preemptive = Schedule::empty(ScheduleKind::Preemptive);
        for plan in &self.plans {
            let mine: Vec<(JobId, &Configuration)> = chosen
                .iter()
                .filter(|c| c.0 == plan.processor)
                .map(|&(_, j, c)| (j, c))
                .collect();
            let mut ids: Vec<JobId> = mine.iter().map(|c| c.0).collect();
            ids.sort();
            subsets.insert(plan.processor, ids);
            let sub = if mine.is_empty() {
                Schedule::empty(ScheduleKind::Preemptive)
            } else {
                speed_up(plan, &mine)?.1
            };
            preemptive.extend(sub.clone());
            per_processor.insert(plan.processor, sub);
        }
        preemptive.normalize();
        let mut choices: Vec<(JobId, ProcId, Configuration)> =
            chosen.into_iter().map(|(p, j, c)| (j, p, c.clone())).collect();
        choices.sort_by_key(|c| c.0);
        let preemptive_energy = energy::<F>(&preemptive, instance)?.total;
        Ok(AssignOutcome {
            assignment: Assignment { subsets, choices },
            preemptive,
            preemptive_energy,
            per_processor,
            lp_objective: self.solution.objective,
            seed,
        })
    }
}

/// Best of `params.trials` roundings of the heterogeneous LP, scored by preemptive energy.
pub fn assign<F: Scalar>(instance: &Instance, params: &SolveParams) -> Result<AssignOutcome<F>> {
    MultiLp::<F>::prepare(instance, params)?.best(instance, params)
}

#[derive(Debug, Clone)]
pub struct ProcessorReport<F> {
    pub processor: ProcId,
    pub jobs: Vec<JobId>,
    pub schedule: Schedule,
    pub energy: F,
    /// Optimal preemptive energy of the processor's jobs.
    pub yds_energy: F,
    pub backend_used: Backend,
    /// `energy / yds_energy`.
    pub gap_ratio: F,
    /// `(1 + w_max / w_min)^alpha` over the processor's jobs.
    pub gap_bound: F,
    /// The winning rounding when the LP pipeline produced the schedule.
    pub trial: Option<Trial<F>>,
}

impl<F: Scalar> ProcessorReport<F> {
    pub fn within_gap_bound(&self) -> bool {
        self.gap_ratio <= self.gap_bound * (F::one() + F::feasibility_tolerance())
    }
}

/// Seed of the processor at position `index`; position 0 keeps the base seed.
fn processor_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64) << 32)
}

/// Non-preemptive schedule of `jobs` on the plan's processor, with their parameters there.
///
/// The LP pipeline keeps the plan's grid and configurations, so its LP over `jobs`
/// is the heterogeneous LP with the assignment fixed.
pub fn convert_processor<F: Scalar>(
    instance: &Instance,
    plan: &ProcessorPlan,
    jobs: &[JobId],
    params: &SolveParams,
    backend: Backend,
) -> Result<ProcessorReport<F>> {
    let (processor, alpha) = (plan.processor, plan.alpha);
    if jobs.is_empty() {
        return Ok(ProcessorReport {
            processor,
            jobs: Vec::new(),
            schedule: Schedule::empty(ScheduleKind::NonPreemptive),
            energy: F::zero(),
            yds_energy: F::zero(),
            backend_used: backend,
            gap_ratio: F::one(),
            gap_bound: F::one(),
            trial: None,
        });
    }
    let sub = instance.restrict_to(processor, jobs)?;
    let yds = yds_schedule::<F>(&sub)?;

    let via_yds = match backend {
        Backend::YdsEdf => match agreeable_restrict(&sub.view(processor), &yds.schedule) {
            Ok(restricted) => Some(edf_schedule(&restricted)?),
            Err(Error::NotRestrictable(job)) => {
                log::debug!("{processor}: execution span of {job} contains another job, using the LP pipeline");
                None
            }
            Err(e) => return Err(e),
        },
        Backend::Pipeline => None,
    };
    let (schedule, energy_value, backend_used, trial) = match via_yds {
        Some(s) => {
            let e = energy::<F>(&s, &sub)?.total;
            (s, e, Backend::YdsEdf, None)
        }
        None => {
            let out = SinglePipeline::<F>::with_plan(&sub, plan.restricted_to(jobs), params)?.run()?;
            (out.schedule, out.energy, Backend::Pipeline, Some(out.best))
        }
    };

    let works: Vec<&Rational> = sub.jobs().iter().filter_map(|j| j.on(processor)).map(|p| &p.work).collect();
    let w_max = works.iter().max().expect("non-empty");
    let w_min = works.iter().min().expect("non-empty");
    let rho = F::from_rational(&(*w_max / *w_min)).to_f64_lossy();
    Ok(ProcessorReport {
        processor,
        jobs: jobs.to_vec(),
        schedule,
        energy: energy_value,
        yds_energy: yds.energy,
        backend_used,
        gap_ratio: energy_value / yds.energy,
        gap_bound: F::from_f64_lossy(preemption_gap(alpha, rho)),
        trial,
    })
}

#[derive(Debug, Clone)]
pub struct MultiOutcome<F> {
    pub schedule: Schedule,
    pub energy: F,
    pub assignment: Assignment,
    pub preemptive: Schedule,
    pub preemptive_energy: F,
    pub preemptive_per_processor: BTreeMap<ProcId, Schedule>,
    pub processors: BTreeMap<ProcId, ProcessorReport<F>>,
    pub lp_objective: F,
    pub assignment_seed: u64,
}

impl<F: Scalar> MultiOutcome<F> {
    pub fn ratio(&self) -> F {
        self.energy / self.lp_objective
    }
}

pub fn solve_multi<F: Scalar>(instance: &Instance, params: &SolveParams, backend: Backend) -> Result<MultiOutcome<F>> {
    let lp = MultiLp::<F>::prepare(instance, params)?;
    let assigned = lp.best(instance, params)?;
    let work: Vec<(usize, ProcId, &Vec<JobId>)> = assigned
        .assignment
        .subsets
        .iter()
        .enumerate()
        .map(|(k, (p, jobs))| (k, *p, jobs))
        .collect();
    let reports: Vec<ProcessorReport<F>> = work
        .into_par_iter()
        .map(|(k, p, jobs)| {
            let local = SolveParams { seed: processor_seed(params.seed, k), ..params.clone() };
            convert_processor::<F>(instance, lp.plan(p), jobs, &local, backend)
        })
        .collect::<Result<_>>()?;

    let mut schedule = Schedule::empty(ScheduleKind::NonPreemptive);
    let mut processors = BTreeMap::new();
    for r in reports {
        if backend == Backend::YdsEdf && !r.within_gap_bound() {
            log::warn!(
                "{}: non-preemptive energy is {} times the preemptive optimum, above {}",
                r.processor,
                r.gap_ratio,
                r.gap_bound
            );
        }
        schedule.extend(r.schedule.clone());
        processors.insert(r.processor, r);
    }
    schedule.normalize();
    let energy = energy::<F>(&schedule, instance)?.total;
    Ok(MultiOutcome {
        schedule,
        energy,
        assignment: assigned.assignment,
        preemptive: assigned.preemptive,
        preemptive_energy: assigned.preemptive_energy,
        preemptive_per_processor: assigned.per_processor,
        processors,
        lp_objective: assigned.lp_objective,
        assignment_seed: assigned.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_agreeable, verify, Job, JobParams, Processor, ProcessorSet};
    use crate::rational::int;

    type Row = (u32, &'static [(u32, i64, i64, i64)]);

    fn multi(alphas: &[f64], jobs: &[Row]) -> Instance {
        let procs = ProcessorSet::new(
            alphas.iter().enumerate().map(|(k, &alpha)| Processor { id: ProcId(k as u32), alpha }).collect(),
        )
        .unwrap();
        let jobs = jobs
            .iter()
            .map(|(id, on)| {
                let params = on
                    .iter()
                    .map(|&(p, w, r, d)| (ProcId(p), JobParams::new(int(w), int(r), int(d))))
                    .collect();
                Job::new(JobId(*id), params)
            })
            .collect();
        Instance::new(Mode::Multi, jobs, procs).unwrap()
    }

    fn params() -> SolveParams {
        SolveParams { slot_cap: Some(4), trials: 8, ..Default::default() }
    }

    fn plan(inst: &Instance, p: ProcId) -> ProcessorPlan {
        let params = params();
        ProcessorPlan::new(inst, p, &params.epsilon, params.slot_cap).unwrap()
    }

    #[test]
    fn single_eligibility_is_respected() {
        let inst = multi(&[2.0, 2.0], &[(0, &[(1, 1, 0, 2)]), (1, &[(0, 1, 0, 2), (1, 1, 0, 2)])]);
        for seed in 0..10 {
            let out = assign::<f64>(&inst, &SolveParams { seed, ..params() }).unwrap();
            assert_eq!(out.assignment.processor_of(JobId(0)), Some(ProcId(1)));
        }
    }

    #[test]
    fn forced_windows_split_jobs() {
        // each job fits its own processor comfortably, and only a short window on the other
        let inst = multi(
            &[2.0, 2.0],
            &[(0, &[(0, 2, 0, 4), (1, 2, 4, 5)]), (1, &[(0, 2, 4, 5), (1, 2, 0, 4)])],
        );
        let out = solve_multi::<f64>(&inst, &params(), Backend::Pipeline).unwrap();
        assert_eq!(out.assignment.processor_of(JobId(0)), Some(ProcId(0)));
        assert_eq!(out.assignment.processor_of(JobId(1)), Some(ProcId(1)));
        // each job alone at speed 1/2 over 4 time units
        assert!((out.energy - 2.0).abs() < 1e-9);
    }

    #[test]
    fn decomposition_and_partition() {
        let inst = multi(
            &[2.0, 3.0],
            &[
                (0, &[(0, 2, 0, 4), (1, 1, 1, 3)]),
                (1, &[(0, 1, 1, 5), (1, 2, 0, 6)]),
                (2, &[(0, 3, 2, 6)]),
                (3, &[(1, 1, 3, 5)]),
            ],
        );
        for backend in [Backend::Pipeline, Backend::YdsEdf] {
            let out = solve_multi::<f64>(&inst, &params(), backend).unwrap();
            let ids: Vec<JobId> = inst.jobs().iter().map(|j| j.id).collect();
            assert!(out.assignment.is_partition_of(&ids));
            let sum = out
                .preemptive_per_processor
                .values()
                .map(|s| energy::<f64>(s, &inst).unwrap().total)
                .fold(0.0, |a, b| a + b);
            assert_eq!(sum, out.preemptive_energy);
            let npr_sum = out.processors.values().fold(0.0, |a, r| a + r.energy);
            assert_eq!(npr_sum, out.energy);
            assert!(verify(&out.schedule, &inst, ScheduleKind::NonPreemptive).is_feasible());
            if backend == Backend::Pipeline {
                // continuous-time optima may undercut the slot-restricted LP
                assert!(out.lp_objective <= out.energy * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn agreeable_subsets_reach_yds_optimum() {
        let inst = multi(
            &[2.0, 2.0],
            &[
                (0, &[(0, 2, 0, 3)]),
                (1, &[(0, 1, 1, 4)]),
                (2, &[(1, 3, 0, 2)]),
                (3, &[(1, 1, 1, 6)]),
            ],
        );
        let out = solve_multi::<f64>(&inst, &params(), Backend::YdsEdf).unwrap();
        let mut expected = 0.0;
        for p in [ProcId(0), ProcId(1)] {
            let ids: Vec<JobId> = inst.view(p).iter().map(|w| w.id).collect();
            let sub = inst.restrict_to(p, &ids).unwrap();
            assert!(is_agreeable(&sub));
            expected += yds_schedule::<f64>(&sub).unwrap().energy;
        }
        assert!((out.energy - expected).abs() < 1e-9 * expected);
        assert!(out.processors.values().all(|r| r.backend_used == Backend::YdsEdf));
    }

    #[test]
    fn one_job_on_a_processor_uses_its_whole_window() {
        let inst = multi(&[2.0], &[(0, &[(0, 3, 1, 4)])]);
        for backend in [Backend::Pipeline, Backend::YdsEdf] {
            let r = convert_processor::<f64>(&inst, &plan(&inst, ProcId(0)), &[JobId(0)], &params(), backend).unwrap();
            assert_eq!(r.schedule.segments.len(), 1);
            assert_eq!((r.schedule.segments[0].start.clone(), r.schedule.segments[0].end.clone()), (int(1), int(4)));
        }
        let empty = convert_processor::<f64>(&inst, &plan(&inst, ProcId(0)), &[], &params(), Backend::Pipeline).unwrap();
        assert!(empty.schedule.segments.is_empty());
    }

    #[test]
    fn nested_jobs_fall_back_to_pipeline() {
        let inst = multi(&[2.0], &[(0, &[(0, 4, 0, 10)]), (1, &[(0, 1, 4, 5)])]);
        let r = convert_processor::<f64>(&inst, &plan(&inst, ProcId(0)), &[JobId(0), JobId(1)], &params(), Backend::YdsEdf).unwrap();
        assert_eq!(r.backend_used, Backend::Pipeline);
        let sub = inst.restrict_to(ProcId(0), &[JobId(0), JobId(1)]).unwrap();
        assert!(verify(&r.schedule, &sub, ScheduleKind::NonPreemptive).is_feasible());
    }

    #[test]
    fn one_processor_matches_single() {
        let inst = multi(&[2.5], &[(0, &[(0, 3, 0, 10)]), (1, &[(0, 1, 2, 4)]), (2, &[(0, 2, 5, 8)])]);
        let multi_out = solve_multi::<f64>(&inst, &params(), Backend::Pipeline).unwrap();
        let ids: Vec<JobId> = inst.jobs().iter().map(|j| j.id).collect();
        let single_out = crate::single::solve_single::<f64>(&inst.restrict_to(ProcId(0), &ids).unwrap(), &params()).unwrap();
        assert_eq!(multi_out.energy, single_out.energy);
    }

    #[test]
    fn rejects_single_mode() {
        let inst = Instance::single(2.0, vec![(int(1), int(0), int(1))]).unwrap();
        assert!(matches!(
            solve_multi::<f64>(&inst, &params(), Backend::Pipeline),
            Err(Error::UnsupportedMode { expected: "multi" })
        ));
        assert_eq!("yds-edf".parse::<Backend>().unwrap(), Backend::YdsEdf);
        assert!("other".parse::<Backend>().is_err());
    }
}
