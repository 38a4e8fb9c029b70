//! Single-processor pipeline.
//!
//! 1. Solve the configuration LP.
//! 2. Pick one configuration per job at random with probability `x_{j,c}`.
//! 3. Spread each job's work evenly over its configuration and run every slot
//!    at the total rate of the jobs sharing it; this is a feasible preemptive
//!    schedule `S_pr`.
//! 4. Shrink every life interval around the job's execution in `S_pr` so that
//!    no interval strictly contains another: the result is agreeable.
//! 5. EDF on the shrunk instance places each job contiguously, replaying its
//!    pieces of `S_pr` back to back, so `S_npr` uses the same energy.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;

use num_traits::Zero;

use crate::discretize::{Configuration, ProcessorPlan};
use crate::error::{Error, Result};
use crate::lp::{build_lp, solve_lp_with, ConfigLp, LpSolution, LpStatus, PivotRule};
use crate::model::{energy, windows_agreeable, Instance, JobId, JobWindow, ProcId, Schedule, ScheduleKind, Segment};
use crate::rational::{int, Rational};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub epsilon: Rational,
    pub seed: u64,
    pub trials: usize,
    pub slot_cap: Option<usize>,
    pub pivot_rule: PivotRule,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            epsilon: int(1),
            seed: 0,
            trials: 32,
            slot_cap: None,
            pivot_rule: PivotRule::default(),
        }
    }
}

/// One sampled LP variable per covering row of the LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedChoice {
    pub seed: u64,
    /// Variable index for each job, in `ConfigLp::jobs` order.
    pub picks: Vec<usize>,
}

impl RoundedChoice {
    pub fn chosen<'a, F: Scalar>(&self, lp: &'a ConfigLp<F>) -> Vec<(ProcId, JobId, &'a Configuration)> {
        self.picks
            .iter()
            .map(|&k| {
                let v = &lp.variables[k];
                (v.processor, v.job, &v.config)
            })
            .collect()
    }
}

/// Weights below this are treated as zero when sampling.
fn weight_floor<F: Scalar>() -> F {
    F::epsilon().sqrt() * F::from_f64_lossy(1e-2)
}

/// Samples, independently per job, a variable with probability proportional to its LP weight.
pub fn round<F: Scalar>(lp: &ConfigLp<F>, solution: &LpSolution<F>, seed: u64) -> Result<RoundedChoice> {
    if solution.status != LpStatus::Optimal {
        return Err(Error::Infeasible);
    }
    let floor = weight_floor::<F>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = Vec::with_capacity(lp.jobs.len());
    for job in &lp.jobs {
        let vars = lp.variables_of(*job);
        let weights: Vec<f64> = vars
            .iter()
            .map(|&k| {
                let x = solution.x[k];
                if x > floor {
                    x.to_f64_lossy()
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Internal(format!("job {job} has no positive LP weight")));
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (&k, &w) in vars.iter().zip(&weights) {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(k);
            if target < acc {
                break;
            }
        }
        picks.push(pick.expect("some weight is positive"));
    }
    Ok(RoundedChoice { seed, picks })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLoad {
    pub slot: usize,
    pub speed: Rational,
    /// Work of each job executed in the slot, ascending job id.
    pub work: Vec<(JobId, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreemptiveProfile {
    pub processor: ProcId,
    /// Loaded slots only, in time order.
    pub slots: Vec<SlotLoad>,
}

/// Runs every chosen configuration at constant rate `w_j / |c|` and each slot at the sum of the rates.
pub fn speed_up(plan: &ProcessorPlan, chosen: &[(JobId, &Configuration)]) -> Result<(PreemptiveProfile, Schedule)> {
    let mut rates: Vec<(JobId, Rational, &Configuration)> = chosen
        .iter()
        .map(|&(job, c)| {
            let w = plan.window(job).ok_or(Error::UnknownJob(job))?;
            Ok((job, &w.work / &c.length, c))
        })
        .collect::<Result<_>>()?;
    rates.sort_by_key(|r| r.0);

    let mut slots = Vec::new();
    let mut segments = Vec::new();
    for (t, slot) in plan.grid.slots().iter().enumerate() {
        let here: Vec<&(JobId, Rational, &Configuration)> =
            rates.iter().filter(|r| r.2.contains_slot(t)).collect();
        if here.is_empty() {
            continue;
        }
        let len = slot.len();
        let speed = here.iter().fold(Rational::zero(), |acc, r| acc + &r.1);
        let mut cursor = slot.start.clone();
        let mut work = Vec::with_capacity(here.len());
        for (k, (job, rate, _)) in here.iter().enumerate() {
            let w = rate * &len;
            let end = if k + 1 == here.len() {
                slot.end.clone()
            } else {
                &cursor + &w / &speed
            };
            segments.push(Segment {
                job: *job,
                processor: plan.processor,
                start: cursor.clone(),
                end: end.clone(),
                speed: speed.clone(),
            });
            work.push((*job, w));
            cursor = end;
        }
        slots.push(SlotLoad { slot: t, speed, work });
    }
    let mut schedule = Schedule::new(ScheduleKind::Preemptive, segments);
    schedule.normalize();
    Ok((PreemptiveProfile { processor: plan.processor, slots }, schedule))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedJob {
    pub id: JobId,
    pub work: Rational,
    /// Total processing time in the preemptive schedule.
    pub processing: Rational,
    pub first_start: Rational,
    pub last_end: Rational,
    pub release: Rational,
    pub deadline: Rational,
    /// The job's pieces in the preemptive schedule, in time order.
    pub pieces: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedInstance {
    pub processor: ProcId,
    pub jobs: Vec<RestrictedJob>,
}

impl RestrictedInstance {
    pub fn is_agreeable(&self) -> bool {
        windows_agreeable(self.jobs.iter().map(|j| (&j.release, &j.deadline)))
    }
}

/// Shrinks each life interval around the job's execution span in `preemptive`.
///
/// The new release is the largest release among other jobs whose life interval
/// ends by the job's last execution instant (or the job's own release), and the
/// new deadline is the smallest deadline among other jobs released strictly
/// after the new release (or the job's own deadline). Both are the limits of
/// the shortest/longest admissible choices, so a restricted interval can
/// share an endpoint with, but never strictly contain, another life interval.
pub fn agreeable_restrict(windows: &[JobWindow], preemptive: &Schedule) -> Result<RestrictedInstance> {
    let by_job = preemptive.by_job();
    let processor = preemptive
        .segments
        .first()
        .map(|s| s.processor)
        .ok_or_else(|| Error::Internal("empty preemptive schedule".into()))?;
    let mut jobs = Vec::with_capacity(windows.len());
    for w in windows {
        let pieces: Vec<Segment> = by_job
            .get(&w.id)
            .ok_or_else(|| Error::Internal(format!("job {} is not executed", w.id)))?
            .iter()
            .map(|s| (*s).clone())
            .collect();
        let first_start = pieces[0].start.clone();
        let last_end = pieces.iter().map(|s| &s.end).max().expect("non-empty").clone();
        let processing = pieces.iter().fold(Rational::zero(), |acc, s| acc + s.duration());

        let others = || windows.iter().filter(|o| o.id != w.id);
        if others().any(|o| o.inside(&first_start, &last_end)) {
            return Err(Error::NotRestrictable(w.id));
        }
        let release = others()
            .filter(|o| o.deadline <= last_end && o.release >= w.release)
            .map(|o| &o.release)
            .fold(&w.release, |a, b| if b > a { b } else { a })
            .clone();
        let deadline = others()
            .filter(|o| o.release > release)
            .map(|o| &o.deadline)
            .fold(&w.deadline, |a, b| if b < a { b } else { a })
            .clone();
        if !(w.release <= release && release <= first_start && last_end <= deadline && deadline <= w.deadline) {
            return Err(Error::Internal(format!(
                "restriction of job {} is unsound: [{release}, {deadline}] vs execution [{first_start}, {last_end}]",
                w.id
            )));
        }
        jobs.push(RestrictedJob {
            id: w.id,
            work: w.work.clone(),
            processing,
            first_start,
            last_end,
            release,
            deadline,
            pieces,
        });
    }
    let restricted = RestrictedInstance { processor, jobs };
    if !restricted.is_agreeable() {
        return Err(Error::Internal("restricted instance is not agreeable".into()));
    }
    Ok(restricted)
}

/// Non-preemptive EDF on the restricted instance. Each job starts at the
/// earliest moment it is released and the processor is free, and replays its
/// preemptive pieces contiguously.
pub fn edf_schedule(restricted: &RestrictedInstance) -> Result<Schedule> {
    let mut pending: Vec<&RestrictedJob> = restricted.jobs.iter().collect();
    let mut segments = Vec::new();
    let mut t = match pending.iter().map(|j| &j.release).min() {
        Some(t) => t.clone(),
        None => return Ok(Schedule::empty(ScheduleKind::NonPreemptive)),
    };
    let mut trace: Vec<String> = Vec::new();
    while !pending.is_empty() {
        let ready = pending
            .iter()
            .enumerate()
            .filter(|(_, j)| j.release <= t)
            .min_by(|(_, a), (_, b)| (&a.deadline, &a.release, a.id).cmp(&(&b.deadline, &b.release, b.id)))
            .map(|(k, _)| k);
        let Some(k) = ready else {
            t = pending.iter().map(|j| &j.release).min().expect("pending").clone();
            continue;
        };
        let job = pending.remove(k);
        let start = t.clone();
        for piece in &job.pieces {
            let end = &t + piece.duration();
            segments.push(Segment {
                job: job.id,
                processor: restricted.processor,
                start: t.clone(),
                end: end.clone(),
                speed: piece.speed.clone(),
            });
            t = end;
        }
        trace.push(format!("{} [{start}, {t}] window [{}, {}]", job.id, job.release, job.deadline));
        if t > job.deadline {
            return Err(Error::Internal(format!(
                "EDF misses the restricted deadline of job {}; trace: {}",
                job.id,
                trace.join("; ")
            )));
        }
    }
    let mut schedule = Schedule::new(ScheduleKind::NonPreemptive, segments);
    schedule.normalize();
    Ok(schedule)
}

/// Everything one rounding produces.
#[derive(Debug, Clone)]
pub struct Trial<F> {
    pub seed: u64,
    pub choice: RoundedChoice,
    pub profile: PreemptiveProfile,
    pub preemptive: Schedule,
    pub preemptive_energy: F,
    pub restricted: RestrictedInstance,
    pub schedule: Schedule,
    pub energy: F,
}

/// Discretization and LP solution of a single-mode instance, ready for rounding trials.
#[derive(Debug, Clone)]
pub struct SinglePipeline<F> {
    pub instance: Instance,
    pub plan: ProcessorPlan,
    pub lp: ConfigLp<F>,
    pub solution: LpSolution<F>,
    pub params: SolveParams,
}

impl<F: Scalar> SinglePipeline<F> {
    pub fn prepare(instance: &Instance, params: &SolveParams) -> Result<Self> {
        let p = instance.single_processor()?;
        let plan = ProcessorPlan::new(instance, p, &params.epsilon, params.slot_cap)?;
        Self::with_plan(instance, plan, params)
    }

    /// Uses a caller-provided discretization (which must belong to `instance`).
    pub fn with_plan(instance: &Instance, plan: ProcessorPlan, params: &SolveParams) -> Result<Self> {
        instance.single_processor()?;
        let jobs: Vec<JobId> = instance.jobs().iter().map(|j| j.id).collect();
        let lp = build_lp::<F>(&jobs, std::slice::from_ref(&plan))?;
        let solution = solve_lp_with(&lp, params.pivot_rule)?;
        if solution.status != LpStatus::Optimal {
            return Err(Error::Infeasible);
        }
        Ok(Self { instance: instance.clone(), plan, lp, solution, params: params.clone() })
    }

    pub fn trial(&self, seed: u64) -> Result<Trial<F>> {
        let choice = round(&self.lp, &self.solution, seed)?;
        let chosen: Vec<(JobId, &Configuration)> =
            choice.chosen(&self.lp).into_iter().map(|(_, j, c)| (j, c)).collect();
        let (profile, preemptive) = speed_up(&self.plan, &chosen)?;
        let preemptive_energy = energy::<F>(&preemptive, &self.instance)?.total;
        let restricted = agreeable_restrict(&self.plan.windows, &preemptive)?;
        let schedule = edf_schedule(&restricted)?;
        let energy = energy::<F>(&schedule, &self.instance)?.total;
        Ok(Trial { seed, choice, profile, preemptive, preemptive_energy, restricted, schedule, energy })
    }

    /// Best of `params.trials` roundings with seeds `seed, seed + 1, ...`; ties keep the earliest.
    pub fn run(self) -> Result<SingleOutcome<F>> {
        if self.params.trials == 0 {
            return Err(Error::Parameter("at least one trial is required".into()));
        }
        let trials: Vec<Trial<F>> = (0..self.params.trials)
            .into_par_iter()
            .map(|i| self.trial(self.params.seed.wrapping_add(i as u64)))
            .collect::<Result<_>>()?;
        let trial_energies: Vec<F> = trials.iter().map(|t| t.energy).collect();
        let mut best: Option<Trial<F>> = None;
        for trial in trials {
            if best.as_ref().is_none_or(|b| trial.energy < b.energy) {
                best = Some(trial);
            }
        }
        let best = best.expect("at least one trial");
        Ok(SingleOutcome {
            schedule: best.schedule.clone(),
            energy: best.energy,
            lp_objective: self.solution.objective,
            trial_energies,
            slots_per_gap: self.plan.grid.slots_per_gap(),
            slot_count: self.plan.grid.len(),
            variable_count: self.lp.variables.len(),
            best,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SingleOutcome<F> {
    pub schedule: Schedule,
    pub energy: F,
    pub lp_objective: F,
    pub trial_energies: Vec<F>,
    pub best: Trial<F>,
    pub slots_per_gap: usize,
    pub slot_count: usize,
    pub variable_count: usize,
}

impl<F: Scalar> SingleOutcome<F> {
    pub fn ratio(&self) -> F {
        self.energy / self.lp_objective
    }
}

pub fn solve_single<F: Scalar>(instance: &Instance, params: &SolveParams) -> Result<SingleOutcome<F>> {
    SinglePipeline::prepare(instance, params)?.run()
}
