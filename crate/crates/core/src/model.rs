//! Instances, schedules, energy accounting and feasibility checking.
//!
//! A job's parameters are stored per processor. A single-mode instance has
//! exactly one processor and every job is eligible on it; a multi-mode
//! instance may give each job a different work, release date and deadline on
//! each processor, and a job is ineligible wherever it has no entry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

impl fmt::Display for ProcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobParams {
    pub work: Rational,
    pub release: Rational,
    pub deadline: Rational,
}

impl JobParams {
    pub fn new(work: Rational, release: Rational, deadline: Rational) -> Self {
        Self { work, release, deadline }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: JobId,
    params: BTreeMap<ProcId, JobParams>,
}

impl Job {
    pub fn new(id: JobId, params: BTreeMap<ProcId, JobParams>) -> Self {
        Self { id, params }
    }

    pub fn on(&self, processor: ProcId) -> Option<&JobParams> {
        self.params.get(&processor)
    }

    pub fn eligible(&self) -> impl Iterator<Item = ProcId> + '_ {
        self.params.keys().copied()
    }

    pub fn params(&self) -> &BTreeMap<ProcId, JobParams> {
        &self.params
    }
}

/// A job as seen from one processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobWindow {
    pub id: JobId,
    pub work: Rational,
    pub release: Rational,
    pub deadline: Rational,
}

impl JobWindow {
    pub fn new(id: JobId, work: Rational, release: Rational, deadline: Rational) -> Self {
        Self { id, work, release, deadline }
    }

    /// Closed containment: `[release, deadline] ⊆ [start, end]`.
    pub fn inside(&self, start: &Rational, end: &Rational) -> bool {
        start <= &self.release && &self.deadline <= end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Processor {
    pub id: ProcId,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorSet {
    processors: Vec<Processor>,
}

impl ProcessorSet {
    pub fn new(processors: Vec<Processor>) -> Result<Self> {
        if processors.is_empty() {
            return Err(Error::InvalidInstance("at least one processor is required".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &processors {
            if !seen.insert(p.id) {
                return Err(Error::InvalidInstance(format!("duplicate processor id {}", p.id)));
            }
            if !(p.alpha.is_finite() && p.alpha > 1.0) {
                return Err(Error::InvalidInstance(format!(
                    "processor {} has alpha {} (must be > 1)",
                    p.id, p.alpha
                )));
            }
        }
        Ok(Self { processors })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Processor> {
        self.processors.iter()
    }

    pub fn len(&self) -> usize {
        self.processors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processors.is_empty()
    }

    pub fn alpha(&self, id: ProcId) -> Option<f64> {
        self.processors.iter().find(|p| p.id == id).map(|p| p.alpha)
    }

    pub fn alpha_max(&self) -> f64 {
        self.processors.iter().map(|p| p.alpha).fold(f64::MIN, f64::max)
    }

    pub fn ids(&self) -> impl Iterator<Item = ProcId> + '_ {
        self.processors.iter().map(|p| p.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    mode: Mode,
    jobs: Vec<Job>,
    processors: ProcessorSet,
}

impl Instance {
    pub fn new(mode: Mode, jobs: Vec<Job>, processors: ProcessorSet) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::InvalidInstance("at least one job is required".into()));
        }
        if mode == Mode::Single && processors.len() != 1 {
            return Err(Error::InvalidInstance(
                "a single-mode instance has exactly one processor".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for job in &jobs {
            if !seen.insert(job.id) {
                return Err(Error::InvalidInstance(format!("duplicate job id {}", job.id)));
            }
            if job.params.is_empty() {
                return Err(Error::InvalidInstance(format!(
                    "job {} is not eligible on any processor",
                    job.id
                )));
            }
            for (p, params) in &job.params {
                if processors.alpha(*p).is_none() {
                    return Err(Error::InvalidInstance(format!(
                        "job {} refers to unknown processor {}",
                        job.id, p
                    )));
                }
                if !params.work.is_positive() {
                    return Err(Error::InvalidInstance(format!("job {} has non-positive work", job.id)));
                }
                if params.release.is_negative() {
                    return Err(Error::InvalidInstance(format!("job {} has a negative release", job.id)));
                }
                if params.release >= params.deadline {
                    return Err(Error::InvalidInstance(format!(
                        "job {} has release {} not before deadline {}",
                        job.id, params.release, params.deadline
                    )));
                }
            }
            if mode == Mode::Single && job.params.len() != 1 {
                return Err(Error::InvalidInstance(format!(
                    "job {} must be eligible on the single processor",
                    job.id
                )));
            }
        }
        Ok(Self { mode, jobs, processors })
    }

    /// Single-processor instance from `(work, release, deadline)` triples; job ids are positions.
    pub fn single(alpha: f64, jobs: Vec<(Rational, Rational, Rational)>) -> Result<Self> {
        let jobs = jobs
            .into_iter()
            .enumerate()
            .map(|(k, (w, r, d))| JobWindow::new(JobId(k as u32), w, r, d))
            .collect();
        Self::single_on(ProcId(0), alpha, jobs)
    }

    pub fn single_on(processor: ProcId, alpha: f64, jobs: Vec<JobWindow>) -> Result<Self> {
        let jobs = jobs
            .into_iter()
            .map(|w| {
                let mut params = BTreeMap::new();
                params.insert(processor, JobParams::new(w.work, w.release, w.deadline));
                Job::new(w.id, params)
            })
            .collect();
        Self::new(
            Mode::Single,
            jobs,
            ProcessorSet::new(vec![Processor { id: processor, alpha }])?,
        )
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn processors(&self) -> &ProcessorSet {
        &self.processors
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn m(&self) -> usize {
        self.processors.len()
    }

    /// The only processor of a single-mode instance.
    pub fn single_processor(&self) -> Result<ProcId> {
        match self.mode {
            Mode::Single => Ok(self.processors.processors[0].id),
            Mode::Multi => Err(Error::UnsupportedMode { expected: "single" }),
        }
    }

    /// Jobs eligible on `processor`, in instance order, with that processor's parameters.
    pub fn view(&self, processor: ProcId) -> Vec<JobWindow> {
        self.jobs
            .iter()
            .filter_map(|j| {
                j.on(processor)
                    .map(|p| JobWindow::new(j.id, p.work.clone(), p.release.clone(), p.deadline.clone()))
            })
            .collect()
    }

    /// Single-mode instance holding `jobs` with their parameters on `processor`.
    pub fn restrict_to(&self, processor: ProcId, jobs: &[JobId]) -> Result<Instance> {
        let alpha = self
            .processors
            .alpha(processor)
            .ok_or(Error::UnknownProcessor(processor))?;
        let wanted: BTreeSet<_> = jobs.iter().copied().collect();
        let windows: Vec<_> = self
            .view(processor)
            .into_iter()
            .filter(|w| wanted.contains(&w.id))
            .collect();
        if windows.len() != wanted.len() {
            return Err(Error::InvalidInstance(format!(
                "some jobs are not eligible on processor {processor}"
            )));
        }
        Instance::single_on(processor, alpha, windows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub job: JobId,
    pub processor: ProcId,
    pub start: Rational,
    pub end: Rational,
    pub speed: Rational,
}

impl Segment {
    pub fn duration(&self) -> Rational {
        &self.end - &self.start
    }

    pub fn work(&self) -> Rational {
        &self.speed * self.duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Preemptive,
    NonPreemptive,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Preemptive => "preemptive",
            ScheduleKind::NonPreemptive => "non-preemptive",
        })
    }
}

/// A set of execution segments.
///
/// A non-preemptive job occupies one uninterrupted interval on one processor.
/// Inside that interval the speed may change, so the interval can be stored as
/// several abutting segments; [`Schedule::blocks`] groups them back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, segments: Vec<Segment>) -> Self {
        Self { kind, segments }
    }

    pub fn empty(kind: ScheduleKind) -> Self {
        Self::new(kind, Vec::new())
    }

    /// Segments of each job sorted by start time.
    pub fn by_job(&self) -> BTreeMap<JobId, Vec<&Segment>> {
        let mut map: BTreeMap<JobId, Vec<&Segment>> = BTreeMap::new();
        for s in &self.segments {
            map.entry(s.job).or_default().push(s);
        }
        for segs in map.values_mut() {
            segs.sort_by(|a, b| a.start.cmp(&b.start));
        }
        map
    }

    /// Maximal runs of abutting segments per job, as `(processor, start, end)`.
    pub fn blocks(&self) -> BTreeMap<JobId, Vec<(ProcId, Rational, Rational)>> {
        self.by_job()
            .into_iter()
            .map(|(job, segs)| {
                let mut runs: Vec<(ProcId, Rational, Rational)> = Vec::new();
                for s in segs {
                    match runs.last_mut() {
                        Some(last) if last.0 == s.processor && last.2 == s.start => {
                            last.2 = s.end.clone()
                        }
                        _ => runs.push((s.processor, s.start.clone(), s.end.clone())),
                    }
                }
                (job, runs)
            })
            .collect()
    }

    pub fn extend(&mut self, other: Schedule) {
        self.segments.extend(other.segments);
    }

    /// Sorts by (processor, start) and fuses abutting segments of the same job at equal speed.
    pub fn normalize(&mut self) {
        self.segments
            .sort_by(|a, b| (a.processor, &a.start, a.job).cmp(&(b.processor, &b.start, b.job)));
        let mut merged: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments.drain(..) {
            match merged.last_mut() {
                Some(last)
                    if last.job == s.job
                        && last.processor == s.processor
                        && last.end == s.start
                        && last.speed == s.speed =>
                {
                    last.end = s.end;
                }
                _ => merged.push(s),
            }
        }
        self.segments = merged;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport<F> {
    pub total: F,
    pub per_processor: BTreeMap<ProcId, F>,
    pub per_job: BTreeMap<JobId, F>,
}

/// Energy of a segment run at constant speed: `speed^alpha * duration`.
pub fn segment_energy<F: Scalar>(segment: &Segment, alpha: f64) -> F {
    let speed = F::from_rational(&segment.speed);
    speed.powf(F::from_f64_lossy(alpha)) * F::from_rational(&segment.duration())
}

pub fn energy<F: Scalar>(schedule: &Schedule, instance: &Instance) -> Result<EnergyReport<F>> {
    let mut per_processor = BTreeMap::new();
    let mut per_job = BTreeMap::new();
    for s in &schedule.segments {
        if instance.job(s.job).is_none() {
            return Err(Error::UnknownJob(s.job));
        }
        let alpha = instance
            .processors()
            .alpha(s.processor)
            .ok_or(Error::UnknownProcessor(s.processor))?;
        let e: F = segment_energy(s, alpha);
        let acc = per_processor.entry(s.processor).or_insert_with(F::zero);
        *acc = *acc + e;
        let acc = per_job.entry(s.job).or_insert_with(F::zero);
        *acc = *acc + e;
    }
    // summed per processor first so that splitting by processor reproduces the total exactly
    let total = per_processor.values().fold(F::zero(), |acc, &e| acc + e);
    Ok(EnergyReport { total, per_processor, per_job })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownJob(JobId),
    UnknownProcessor(ProcId),
    Ineligible { job: JobId, processor: ProcId },
    EmptySegment { job: JobId, start: Rational, end: Rational },
    NonPositiveSpeed { job: JobId, speed: Rational },
    OutsideLifeInterval { job: JobId, processor: ProcId, start: Rational, end: Rational },
    Overlap { processor: ProcId, first: JobId, second: JobId, at: Rational },
    WorkMismatch { job: JobId, required: Rational, executed: Rational },
    Migration { job: JobId },
    Preemption { job: JobId, pieces: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownJob(j) => write!(f, "unknown job {j}"),
            Violation::UnknownProcessor(p) => write!(f, "unknown processor {p}"),
            Violation::Ineligible { job, processor } => {
                write!(f, "job {job} is not eligible on processor {processor}")
            }
            Violation::EmptySegment { job, start, end } => {
                write!(f, "job {job} has an empty segment [{start}, {end}]")
            }
            Violation::NonPositiveSpeed { job, speed } => {
                write!(f, "job {job} has a segment with speed {speed}")
            }
            Violation::OutsideLifeInterval { job, processor, start, end } => write!(
                f,
                "job {job} runs on {processor} during [{start}, {end}] outside its life interval"
            ),
            Violation::Overlap { processor, first, second, at } => {
                write!(f, "jobs {first} and {second} overlap on {processor} at {at}")
            }
            Violation::WorkMismatch { job, required, executed } => {
                write!(f, "job {job} executes work {executed}, requires {required}")
            }
            Violation::Migration { job } => write!(f, "job {job} migrates between processors"),
            Violation::Preemption { job, pieces } => {
                write!(f, "job {job} is preempted ({pieces} separate execution intervals)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance on executed work.
pub fn work_tolerance() -> Rational {
    ratio(1, 1_000_000)
}

/// Checks `schedule` against `instance`, collecting every violation.
pub fn verify(schedule: &Schedule, instance: &Instance, kind: ScheduleKind) -> VerificationReport {
    let mut violations = Vec::new();
    let mut valid: Vec<&Segment> = Vec::new();

    for s in &schedule.segments {
        let Some(job) = instance.job(s.job) else {
            violations.push(Violation::UnknownJob(s.job));
            continue;
        };
        if instance.processors().alpha(s.processor).is_none() {
            violations.push(Violation::UnknownProcessor(s.processor));
            continue;
        }
        let Some(params) = job.on(s.processor) else {
            violations.push(Violation::Ineligible { job: s.job, processor: s.processor });
            continue;
        };
        if s.start >= s.end {
            violations.push(Violation::EmptySegment {
                job: s.job,
                start: s.start.clone(),
                end: s.end.clone(),
            });
            continue;
        }
        if !s.speed.is_positive() {
            violations.push(Violation::NonPositiveSpeed { job: s.job, speed: s.speed.clone() });
        }
        if s.start < params.release || s.end > params.deadline {
            violations.push(Violation::OutsideLifeInterval {
                job: s.job,
                processor: s.processor,
                start: s.start.clone(),
                end: s.end.clone(),
            });
        }
        valid.push(s);
    }

    let mut per_proc: BTreeMap<ProcId, Vec<&Segment>> = BTreeMap::new();
    for s in &valid {
        per_proc.entry(s.processor).or_default().push(s);
    }
    for (proc, mut segs) in per_proc {
        segs.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
        let mut frontier: Option<&Segment> = None;
        for s in segs {
            if let Some(prev) = frontier {
                if s.start < prev.end {
                    violations.push(Violation::Overlap {
                        processor: proc,
                        first: prev.job,
                        second: s.job,
                        at: s.start.clone(),
                    });
                }
                if s.end > prev.end {
                    frontier = Some(s);
                }
            } else {
                frontier = Some(s);
            }
        }
    }

    let mut executed: BTreeMap<JobId, Vec<&Segment>> = BTreeMap::new();
    for s in &valid {
        executed.entry(s.job).or_default().push(s);
    }
    let tol = work_tolerance();
    for job in instance.jobs() {
        let segs = executed.remove(&job.id).unwrap_or_default();
        let processors: BTreeSet<ProcId> = segs.iter().map(|s| s.processor).collect();
        if processors.len() > 1 {
            violations.push(Violation::Migration { job: job.id });
        }
        let done: Rational = segs.iter().map(|s| s.work()).fold(Rational::zero(), |a, b| a + b);
        match processors.iter().next() {
            Some(&p) if processors.len() == 1 => {
                let required = &job.on(p).expect("eligibility checked").work;
                if (&done - required).abs() > required * &tol {
                    violations.push(Violation::WorkMismatch {
                        job: job.id,
                        required: required.clone(),
                        executed: done,
                    });
                }
            }
            None => {
                let required = job.params.values().next().expect("eligible somewhere").work.clone();
                violations.push(Violation::WorkMismatch {
                    job: job.id,
                    required,
                    executed: done,
                });
            }
            _ => {}
        }
        if kind == ScheduleKind::NonPreemptive && !segs.is_empty() {
            let mut sorted = segs.clone();
            sorted.sort_by(|a, b| a.start.cmp(&b.start));
            let pieces = 1 + sorted
                .windows(2)
                .filter(|w| w[0].end != w[1].start || w[0].processor != w[1].processor)
                .count();
            if pieces > 1 {
                violations.push(Violation::Preemption { job: job.id, pieces });
            }
        }
    }

    VerificationReport { violations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceStats {
    pub n: usize,
    pub m: usize,
    pub w_max: Rational,
    pub w_min: Rational,
    pub alpha_max: f64,
}

impl InstanceStats {
    pub fn work_ratio(&self) -> Rational {
        &self.w_max / &self.w_min
    }
}

pub fn stats(instance: &Instance) -> InstanceStats {
    let works = instance.jobs().iter().flat_map(|j| j.params.values().map(|p| &p.work));
    let (mut w_max, mut w_min): (Option<&Rational>, Option<&Rational>) = (None, None);
    for w in works {
        if w_max.is_none_or(|m| w > m) {
            w_max = Some(w);
        }
        if w_min.is_none_or(|m| w < m) {
            w_min = Some(w);
        }
    }
    InstanceStats {
        n: instance.n(),
        m: instance.m(),
        w_max: w_max.expect("non-empty instance").clone(),
        w_min: w_min.expect("non-empty instance").clone(),
        alpha_max: instance.processors().alpha_max(),
    }
}

/// Largest `w_max / w_min` taken within a single processor's column.
pub fn max_processor_work_ratio(instance: &Instance) -> Rational {
    instance
        .processors()
        .ids()
        .filter_map(|p| {
            let view = instance.view(p);
            let max = view.iter().map(|w| &w.work).max()?;
            let min = view.iter().map(|w| &w.work).min()?;
            Some(max / min)
        })
        .max()
        .unwrap_or_else(crate::rational::one)
}

/// True iff no life interval is strictly nested inside another, i.e. there is
/// no pair with `r_a < r_b` and `d_b < d_a`. Equal releases or equal deadlines
/// never break agreeableness.
pub fn windows_agreeable<'a, I>(windows: I) -> bool
where
    I: IntoIterator<Item = (&'a Rational, &'a Rational)>,
{
    let mut ws: Vec<_> = windows.into_iter().collect();
    ws.sort();
    // running maximum deadline over strictly earlier releases
    let mut max_before: Option<&Rational> = None;
    let mut i = 0;
    while i < ws.len() {
        let mut k = i;
        while k < ws.len() && ws[k].0 == ws[i].0 {
            if let Some(m) = max_before {
                if ws[k].1 < m {
                    return false;
                }
            }
            k += 1;
        }
        let group_max = ws[k - 1].1;
        if max_before.is_none_or(|m| group_max > m) {
            max_before = Some(group_max);
        }
        i = k;
    }
    true
}

/// Every processor's life intervals are agreeable.
pub fn is_agreeable(instance: &Instance) -> bool {
    instance.processors().ids().all(|p| {
        let view = instance.view(p);
        windows_agreeable(view.iter().map(|w| (&w.release, &w.deadline)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn seg(job: u32, start: i64, end: i64, speed: i64) -> Segment {
        Segment {
            job: JobId(job),
            processor: ProcId(0),
            start: int(start),
            end: int(end),
            speed: int(speed),
        }
    }

    fn single(alpha: f64, jobs: &[(i64, i64, i64)]) -> Instance {
        Instance::single(alpha, jobs.iter().map(|&(w, r, d)| (int(w), int(r), int(d))).collect())
            .unwrap()
    }

    #[test]
    fn energy_of_simple_segments() {
        let inst = single(3.0, &[(2, 0, 1)]);
        let s = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 0, 1, 2)]);
        assert!((energy::<f64>(&s, &inst).unwrap().total - 8.0).abs() < 1e-12);

        let inst = single(2.7, &[(5, 0, 5)]);
        let s = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 0, 5, 1)]);
        assert!((energy::<f64>(&s, &inst).unwrap().total - 5.0).abs() < 1e-12);

        let inst = single(2.0, &[(4, 0, 2)]);
        let s = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 0, 2, 2)]);
        let report = energy::<f64>(&s, &inst).unwrap();
        assert!((report.total - 8.0).abs() < 1e-12);
        assert_eq!(report.per_job[&JobId(0)], report.total);
        assert_eq!(report.per_processor[&ProcId(0)], report.total);
    }

    #[test]
    fn energy_rejects_unknown_references() {
        let inst = single(2.0, &[(1, 0, 1)]);
        let s = Schedule::new(ScheduleKind::Preemptive, vec![seg(7, 0, 1, 1)]);
        assert_eq!(energy::<f64>(&s, &inst), Err(Error::UnknownJob(JobId(7))));
        let mut bad = seg(0, 0, 1, 1);
        bad.processor = ProcId(3);
        let s = Schedule::new(ScheduleKind::Preemptive, vec![bad]);
        assert_eq!(energy::<f64>(&s, &inst), Err(Error::UnknownProcessor(ProcId(3))));
    }

    #[test]
    fn halving_the_window_scales_energy() {
        // w^a / L^(a-1): halving L multiplies by 2^(a-1)
        let alpha = 2.5;
        let inst = single(alpha, &[(4, 0, 8)]);
        let long = Schedule::new(ScheduleKind::NonPreemptive, vec![Segment { speed: ratio(1, 2), ..seg(0, 0, 8, 1) }]);
        let short = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 0, 4, 1)]);
        let e_long = energy::<f64>(&long, &inst).unwrap().total;
        let e_short = energy::<f64>(&short, &inst).unwrap().total;
        assert!((e_short / e_long - 2f64.powf(alpha - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn verify_flags_deadline_miss() {
        let inst = single(2.0, &[(2, 0, 2)]);
        let s = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 1, 3, 1)]);
        let report = verify(&s, &inst, ScheduleKind::NonPreemptive);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].to_string().contains("life interval"));
    }

    #[test]
    fn verify_flags_preemption_only_when_non_preemptive() {
        let inst = single(2.0, &[(2, 0, 4)]);
        let s = Schedule::new(ScheduleKind::Preemptive, vec![seg(0, 0, 1, 1), seg(0, 2, 3, 1)]);
        assert!(verify(&s, &inst, ScheduleKind::Preemptive).is_feasible());
        let report = verify(&s, &inst, ScheduleKind::NonPreemptive);
        assert_eq!(report.violations, vec![Violation::Preemption { job: JobId(0), pieces: 2 }]);
        assert!(report.violations[0].to_string().contains("preempt"));
    }

    #[test]
    fn abutting_segments_with_speed_change_are_not_preemption() {
        let inst = single(2.0, &[(3, 0, 4)]);
        let s = Schedule::new(ScheduleKind::NonPreemptive, vec![seg(0, 0, 1, 1), seg(0, 1, 2, 2)]);
        assert!(verify(&s, &inst, ScheduleKind::NonPreemptive).is_feasible());
    }

    #[test]
    fn verify_flags_overlap_and_work() {
        let inst = single(2.0, &[(2, 0, 4), (2, 0, 4)]);
        let s = Schedule::new(ScheduleKind::Preemptive, vec![seg(0, 0, 2, 1), seg(1, 1, 2, 1)]);
        let v = verify(&s, &inst, ScheduleKind::Preemptive).violations;
        assert!(v.iter().any(|v| matches!(v, Violation::Overlap { .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::WorkMismatch { job: JobId(1), .. })));
    }

    #[test]
    fn verify_flags_missing_job_and_migration() {
        let mut params = BTreeMap::new();
        params.insert(ProcId(0), JobParams::new(int(2), int(0), int(4)));
        params.insert(ProcId(1), JobParams::new(int(2), int(0), int(4)));
        let procs = ProcessorSet::new(vec![
            Processor { id: ProcId(0), alpha: 2.0 },
            Processor { id: ProcId(1), alpha: 2.0 },
        ])
        .unwrap();
        let other = Job::new(JobId(1), params.clone());
        let inst = Instance::new(Mode::Multi, vec![Job::new(JobId(0), params), other], procs).unwrap();
        let mut second = seg(0, 1, 2, 1);
        second.processor = ProcId(1);
        let s = Schedule::new(ScheduleKind::Preemptive, vec![seg(0, 0, 1, 1), second]);
        let v = verify(&s, &inst, ScheduleKind::Preemptive).violations;
        assert!(v.contains(&Violation::Migration { job: JobId(0) }));
        assert!(v.iter().any(|v| matches!(v, Violation::WorkMismatch { job: JobId(1), .. })));
    }

    #[test]
    fn stats_examples() {
        let inst = single(2.0, &[(1, 0, 2), (3, 0, 2)]);
        let st = stats(&inst);
        assert_eq!((st.n, st.m), (2, 1));
        assert_eq!(st.w_max, int(3));
        assert_eq!(st.w_min, int(1));
        assert_eq!(st.alpha_max, 2.0);

        let eq = single(2.0, &[(2, 0, 2), (2, 1, 3)]);
        assert_eq!(stats(&eq).work_ratio(), int(1));

        let procs = ProcessorSet::new(vec![
            Processor { id: ProcId(0), alpha: 1.5 },
            Processor { id: ProcId(1), alpha: 2.5 },
        ])
        .unwrap();
        let mut params = BTreeMap::new();
        params.insert(ProcId(1), JobParams::new(int(1), int(0), int(1)));
        let inst = Instance::new(Mode::Multi, vec![Job::new(JobId(0), params)], procs).unwrap();
        assert_eq!(stats(&inst).alpha_max, 2.5);
    }

    #[test]
    fn agreeable_examples() {
        assert!(is_agreeable(&single(2.0, &[(1, 0, 2), (1, 1, 3)])));
        assert!(!is_agreeable(&single(2.0, &[(1, 0, 5), (1, 1, 3)])));
        assert!(is_agreeable(&single(2.0, &[(1, 0, 5)])));
        assert!(is_agreeable(&single(2.0, &[(1, 0, 5), (1, 0, 5)])));
        assert!(is_agreeable(&single(2.0, &[(1, 0, 1), (1, 0, 2)])));
        assert!(is_agreeable(&single(2.0, &[(1, 0, 2), (1, 1, 2)])));
    }

    #[test]
    fn agreeable_checks_every_processor() {
        let procs = ProcessorSet::new(vec![
            Processor { id: ProcId(0), alpha: 2.0 },
            Processor { id: ProcId(1), alpha: 3.0 },
        ])
        .unwrap();
        let job = |id: u32, on0: (i64, i64), on1: (i64, i64)| {
            let mut params = BTreeMap::new();
            params.insert(ProcId(0), JobParams::new(int(1), int(on0.0), int(on0.1)));
            params.insert(ProcId(1), JobParams::new(int(1), int(on1.0), int(on1.1)));
            Job::new(JobId(id), params)
        };
        let ok = Instance::new(Mode::Multi, vec![job(0, (0, 2), (0, 2)), job(1, (1, 3), (1, 3))], procs.clone()).unwrap();
        assert!(is_agreeable(&ok));
        let nested = Instance::new(Mode::Multi, vec![job(0, (0, 2), (0, 5)), job(1, (1, 3), (1, 3))], procs).unwrap();
        assert!(!is_agreeable(&nested));
    }

    #[test]
    fn rejects_degenerate_jobs() {
        assert!(Instance::single(2.0, vec![(int(1), int(2), int(2))]).is_err());
        assert!(Instance::single(2.0, vec![(int(0), int(0), int(2))]).is_err());
        assert!(Instance::single(1.0, vec![(int(1), int(0), int(2))]).is_err());
        assert!(Instance::single(2.0, vec![]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn brute_agreeable(ws: &[(i64, i64)]) -> bool {
            ws.iter().all(|a| ws.iter().all(|b| !(a.0 < b.0 && b.1 < a.1)))
        }

        proptest! {
            #[test]
            fn agreeable_matches_pairwise_definition(raw in prop::collection::vec((0i64..6, 1i64..6), 1..7)) {
                let ws: Vec<(i64, i64)> = raw.iter().map(|&(r, l)| (r, r + l)).collect();
                let rs: Vec<(Rational, Rational)> = ws.iter().map(|&(r, d)| (int(r), int(d))).collect();
                prop_assert_eq!(windows_agreeable(rs.iter().map(|(r, d)| (r, d))), brute_agreeable(&ws));
            }

            #[test]
            fn energy_is_additive(cuts in prop::collection::vec(1i64..5, 1..6), alpha in 1.1f64..3.5) {
                let mut t = 0;
                let segs: Vec<Segment> = cuts.iter().enumerate().map(|(k, &len)| {
                    let s = seg(0, t, t + len, (k as i64 % 3) + 1);
                    t += len;
                    s
                }).collect();
                let inst = single(alpha, &[(1, 0, t)]);
                let whole = energy::<f64>(&Schedule::new(ScheduleKind::Preemptive, segs.clone()), &inst).unwrap().total;
                let (a, b) = segs.split_at(segs.len() / 2);
                let ea = energy::<f64>(&Schedule::new(ScheduleKind::Preemptive, a.to_vec()), &inst).unwrap().total;
                let eb = energy::<f64>(&Schedule::new(ScheduleKind::Preemptive, b.to_vec()), &inst).unwrap().total;
                prop_assert!((whole - ea - eb).abs() <= 1e-9 * whole.max(1.0));
            }
        }
    }
}
