//! Landmark slot grids and job configurations.
//!
//! Landmarks are the distinct release dates and deadlines. Every gap between
//! consecutive landmarks is cut into the same number of equal slots, so each
//! life interval is exactly a union of whole slots. A configuration of a job
//! is a run of consecutive slots inside its life interval whose span does not
//! contain the whole life interval of any other job.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId, JobWindow, ProcId};
use crate::rational::{self, Rational};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub start: Rational,
    pub end: Rational,
}

impl Slot {
    pub fn len(&self) -> Rational {
        &self.end - &self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotGrid {
    landmarks: Vec<Rational>,
    slots: Vec<Slot>,
    slots_per_gap: usize,
}

impl SlotGrid {
    pub fn new(mut landmarks: Vec<Rational>, slots_per_gap: usize) -> Result<Self> {
        if slots_per_gap == 0 {
            return Err(Error::Parameter("slots per gap must be positive".into()));
        }
        landmarks.sort();
        landmarks.dedup();
        let mut slots = Vec::with_capacity(landmarks.len().saturating_sub(1) * slots_per_gap);
        let parts = Rational::from_integer(slots_per_gap.into());
        for gap in landmarks.windows(2) {
            let step = (&gap[1] - &gap[0]) / &parts;
            for i in 0..slots_per_gap {
                let start = &gap[0] + &step * Rational::from_integer(i.into());
                let end = if i + 1 == slots_per_gap {
                    gap[1].clone()
                } else {
                    &start + &step
                };
                slots.push(Slot { start, end });
            }
        }
        Ok(Self { landmarks, slots, slots_per_gap })
    }

    pub fn landmarks(&self) -> &[Rational] {
        &self.landmarks
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> &Slot {
        &self.slots[index]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots_per_gap(&self) -> usize {
        self.slots_per_gap
    }

    /// Index of the slot boundary at landmark `t`: the first slot starting at `t`,
    /// or `len()` for the last landmark.
    pub fn boundary(&self, t: &Rational) -> Option<usize> {
        self.landmarks
            .binary_search(t)
            .ok()
            .map(|l| l * self.slots_per_gap)
    }

    /// Time span `[start of first, end of last]` of a slot run.
    pub fn span(&self, first: usize, last: usize) -> (Rational, Rational) {
        (self.slots[first].start.clone(), self.slots[last].end.clone())
    }
}

/// Sorted distinct releases and deadlines.
pub fn landmarks(windows: &[JobWindow]) -> Vec<Rational> {
    let mut points: Vec<Rational> = windows
        .iter()
        .flat_map(|w| [w.release.clone(), w.deadline.clone()])
        .collect();
    points.sort();
    points.dedup();
    points
}

/// `ceil(n^2 (1 + 1/epsilon))`, clamped to `slot_cap`.
pub fn slots_per_gap(n: usize, epsilon: &Rational, slot_cap: Option<usize>) -> Result<usize> {
    if !rational::is_positive(epsilon) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if slot_cap == Some(0) {
        return Err(Error::Parameter("slot cap must be positive".into()));
    }
    let n2 = Rational::from_integer((n * n).into());
    let exact = n2 * (Rational::one() + epsilon.recip());
    let count = rational::ceil_to_usize(&exact)
        .ok_or_else(|| Error::Parameter("slot count overflows".into()))?
        .max(1);
    Ok(slot_cap.map_or(count, |cap| count.min(cap)))
}

/// Grid of a single-mode instance.
pub fn build_grid(instance: &Instance, epsilon: &Rational, slot_cap: Option<usize>) -> Result<SlotGrid> {
    let p = instance.single_processor()?;
    build_processor_grid(instance, p, epsilon, slot_cap)
}

/// Grid of one processor, from the life intervals of the jobs eligible there.
/// The slot count uses the total number of jobs of the instance.
pub fn build_processor_grid(
    instance: &Instance,
    processor: ProcId,
    epsilon: &Rational,
    slot_cap: Option<usize>,
) -> Result<SlotGrid> {
    let spg = slots_per_gap(instance.n(), epsilon, slot_cap)?;
    SlotGrid::new(landmarks(&instance.view(processor)), spg)
}

/// A run of slots `first..=last` used by `job`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub job: JobId,
    pub first: usize,
    pub last: usize,
    pub length: Rational,
}

impl Configuration {
    pub fn contains_slot(&self, slot: usize) -> bool {
        self.first <= slot && slot <= self.last
    }

    pub fn slot_count(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn span(&self, grid: &SlotGrid) -> (Rational, Rational) {
        grid.span(self.first, self.last)
    }
}

/// Slot-boundary indices `[start, end)` of a life interval on `grid`.
fn slot_range(window: &JobWindow, grid: &SlotGrid) -> (usize, usize) {
    let a = grid.boundary(&window.release).expect("release is a landmark");
    let b = grid.boundary(&window.deadline).expect("deadline is a landmark");
    (a, b)
}

/// All configurations of `job` among `windows` (which must include `job`).
pub fn enumerate_configs(job: &JobWindow, windows: &[JobWindow], grid: &SlotGrid) -> Vec<Configuration> {
    let (lo, hi) = slot_range(job, grid);
    let others: Vec<(usize, usize)> = windows
        .iter()
        .filter(|w| w.id != job.id)
        .map(|w| slot_range(w, grid))
        .collect();
    let mut configs = Vec::new();
    for first in lo..hi {
        // the run [first, last] contains (a, b) iff first <= a and last + 1 >= b
        let mut max_last = hi - 1;
        for &(a, b) in &others {
            if a >= first {
                if b < first + 2 {
                    max_last = usize::MAX;
                    break;
                }
                max_last = max_last.min(b - 2);
            }
        }
        if max_last == usize::MAX || max_last < first {
            continue;
        }
        let start = &grid.slot(first).start;
        for last in first..=max_last {
            configs.push(Configuration {
                job: job.id,
                first,
                last,
                length: &grid.slot(last).end - start,
            });
        }
    }
    configs
}

/// Energy of running `work` at constant speed over a configuration: `w^a / |c|^(a-1)`.
pub fn config_energy<F: Scalar>(work: &Rational, length: &Rational, alpha: f64) -> F {
    let a = F::from_f64_lossy(alpha);
    let w = F::from_rational(work);
    let l = F::from_rational(length);
    w.powf(a) / l.powf(a - F::one())
}

/// One processor's discretization: grid plus configurations of every eligible job.
#[derive(Debug, Clone)]
pub struct ProcessorPlan {
    pub processor: ProcId,
    pub alpha: f64,
    pub grid: SlotGrid,
    pub windows: Vec<JobWindow>,
    /// Parallel to `windows`.
    pub configs: Vec<Vec<Configuration>>,
}

impl ProcessorPlan {
    pub fn new(
        instance: &Instance,
        processor: ProcId,
        epsilon: &Rational,
        slot_cap: Option<usize>,
    ) -> Result<Self> {
        let alpha = instance
            .processors()
            .alpha(processor)
            .ok_or(Error::UnknownProcessor(processor))?;
        let grid = build_processor_grid(instance, processor, epsilon, slot_cap)?;
        Ok(Self::with_grid(processor, alpha, grid, instance.view(processor)))
    }

    pub fn with_grid(processor: ProcId, alpha: f64, grid: SlotGrid, windows: Vec<JobWindow>) -> Self {
        let configs = windows
            .iter()
            .map(|w| enumerate_configs(w, &windows, &grid))
            .collect();
        Self { processor, alpha, grid, windows, configs }
    }

    pub fn window(&self, job: JobId) -> Option<&JobWindow> {
        self.windows.iter().find(|w| w.id == job)
    }

    /// The same grid and configurations, keeping only `jobs`.
    pub fn restricted_to(&self, jobs: &[JobId]) -> Self {
        let (windows, configs) = self
            .windows
            .iter()
            .zip(&self.configs)
            .filter(|(w, _)| jobs.contains(&w.id))
            .map(|(w, c)| (w.clone(), c.clone()))
            .unzip();
        Self { processor: self.processor, alpha: self.alpha, grid: self.grid.clone(), windows, configs }
    }

    pub fn config_count(&self) -> usize {
        self.configs.iter().map(Vec::len).sum()
    }
}

pub fn total_length(grid: &SlotGrid) -> Rational {
    grid.slots().iter().map(Slot::len).fold(Rational::zero(), |a, b| a + b)
}
