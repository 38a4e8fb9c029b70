//! Optimal preemptive single-processor schedule by critical-interval peeling.
//!
//! Repeatedly pick the interval of maximum density (work of the jobs whose
//! life interval lies inside it, over the time still free in it), run those
//! jobs at exactly that density by preemptive EDF in the free time, and mark
//! the interval as used. Time used by earlier intervals is skipped, which is
//! the same as contracting it away.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{energy, Instance, JobId, JobWindow, ProcId, Schedule, ScheduleKind, Segment};
use crate::rational::Rational;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalInterval {
    pub start: Rational,
    pub end: Rational,
    pub density: Rational,
    pub jobs: Vec<JobId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YdsOutcome<F> {
    pub schedule: Schedule,
    pub energy: F,
    pub critical: Vec<CriticalInterval>,
}

/// Sorted, disjoint used intervals.
#[derive(Debug, Default)]
struct Occupied(Vec<(Rational, Rational)>);

impl Occupied {
    fn used(&self, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        for (s, e) in &self.0 {
            let lo = if s > a { s } else { a };
            let hi = if e < b { e } else { b };
            if lo < hi {
                total += hi - lo;
            }
        }
        total
    }

    fn free(&self, a: &Rational, b: &Rational) -> Rational {
        if a >= b {
            return Rational::zero();
        }
        (b - a) - self.used(a, b)
    }

    fn free_intervals(&self, a: &Rational, b: &Rational) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        let mut t = a.clone();
        for (s, e) in &self.0 {
            if e <= &t {
                continue;
            }
            if s >= b {
                break;
            }
            if s > &t {
                out.push((t.clone(), s.clone()));
            }
            if e > &t {
                t = e.clone();
            }
        }
        if &t < b {
            out.push((t, b.clone()));
        }
        out
    }

    fn insert(&mut self, a: Rational, b: Rational) {
        self.0.push((a, b));
        self.0.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(self.0.len());
        for (s, e) in self.0.drain(..) {
            match merged.last_mut() {
                Some(last) if s <= last.1 => {
                    if e > last.1 {
                        last.1 = e;
                    }
                }
                _ => merged.push((s, e)),
            }
        }
        self.0 = merged;
    }
}

/// YDS on a single-mode instance.
pub fn yds_schedule<F: Scalar>(instance: &Instance) -> Result<YdsOutcome<F>> {
    let p = instance.single_processor()?;
    let (schedule, critical) = yds_windows(p, &instance.view(p))?;
    let energy = energy::<F>(&schedule, instance)?.total;
    Ok(YdsOutcome { schedule, energy, critical })
}

/// YDS over arbitrary job windows on `processor`.
pub fn yds_windows(processor: ProcId, windows: &[JobWindow]) -> Result<(Schedule, Vec<CriticalInterval>)> {
    let mut remaining: Vec<&JobWindow> = windows.iter().collect();
    let mut occupied = Occupied::default();
    let mut segments = Vec::new();
    let mut critical = Vec::new();

    while !remaining.is_empty() {
        let mut starts: Vec<&Rational> = remaining.iter().map(|w| &w.release).collect();
        starts.sort();
        starts.dedup();
        let mut ends: Vec<&Rational> = remaining.iter().map(|w| &w.deadline).collect();
        ends.sort();
        ends.dedup();

        let mut best: Option<(Rational, &Rational, &Rational, Vec<usize>)> = None;
        for &a in &starts {
            for &b in ends.iter().filter(|&&b| b > a) {
                let avail = occupied.free(a, b);
                if avail.is_zero() {
                    continue;
                }
                let inside: Vec<usize> = remaining
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| {
                        (w.release >= *a || occupied.free(&w.release, a).is_zero())
                            && (w.deadline <= *b || occupied.free(b, &w.deadline).is_zero())
                    })
                    .map(|(k, _)| k)
                    .collect();
                if inside.is_empty() {
                    continue;
                }
                let work = inside
                    .iter()
                    .fold(Rational::zero(), |acc, &k| acc + &remaining[k].work);
                let density = work / avail;
                if best.as_ref().is_none_or(|(d, ..)| density > *d) {
                    best = Some((density, a, b, inside));
                }
            }
        }
        let (density, a, b, inside) =
            best.ok_or_else(|| Error::Internal("no critical interval among remaining jobs".into()))?;
        let (a, b) = (a.clone(), b.clone());
        let jobs: Vec<&JobWindow> = inside.iter().map(|&k| remaining[k]).collect();
        segments.extend(edf_in_free_time(processor, &jobs, &a, &b, &density, &occupied)?);
        let mut ids: Vec<JobId> = jobs.iter().map(|w| w.id).collect();
        ids.sort();
        critical.push(CriticalInterval { start: a.clone(), end: b.clone(), density, jobs: ids });
        occupied.insert(a, b);
        let mut k = 0;
        remaining.retain(|_| {
            let keep = !inside.contains(&k);
            k += 1;
            keep
        });
    }

    let mut schedule = Schedule::new(ScheduleKind::Preemptive, segments);
    schedule.normalize();
    Ok((schedule, critical))
}

/// Preemptive EDF of `jobs` at constant `speed` over the free time of `[a, b]`.
fn edf_in_free_time(
    processor: ProcId,
    jobs: &[&JobWindow],
    a: &Rational,
    b: &Rational,
    speed: &Rational,
    occupied: &Occupied,
) -> Result<Vec<Segment>> {
    let free = occupied.free_intervals(a, b);
    let release: Vec<Rational> = jobs
        .iter()
        .map(|w| if &w.release > a { w.release.clone() } else { a.clone() })
        .collect();
    let mut left: Vec<Rational> = jobs.iter().map(|w| &w.work / speed).collect();
    let mut out = Vec::new();
    let mut idx = 0;
    let mut t = free.first().map(|f| f.0.clone()).unwrap_or_else(|| a.clone());

    while left.iter().any(|l| !l.is_zero()) {
        let Some((f0, f1)) = free.get(idx) else {
            return Err(Error::Internal(format!(
                "critical interval [{a}, {b}] ran out of free time"
            )));
        };
        if &t < f0 {
            t = f0.clone();
        }
        if &t >= f1 {
            idx += 1;
            continue;
        }
        let next_release = (0..jobs.len())
            .filter(|&k| !left[k].is_zero() && release[k] > t)
            .map(|k| &release[k])
            .min()
            .cloned();
        let ready = (0..jobs.len())
            .filter(|&k| !left[k].is_zero() && release[k] <= t)
            .min_by(|&x, &y| {
                (&jobs[x].deadline, &jobs[x].release, jobs[x].id)
                    .cmp(&(&jobs[y].deadline, &jobs[y].release, jobs[y].id))
            });
        let Some(k) = ready else {
            t = next_release.expect("unfinished jobs exist");
            continue;
        };
        let mut stop = &t + &left[k];
        if &stop > f1 {
            stop = f1.clone();
        }
        if let Some(nr) = next_release {
            if nr < stop {
                stop = nr;
            }
        }
        left[k] -= &stop - &t;
        if left[k].is_zero() && stop > jobs[k].deadline {
            return Err(Error::Internal(format!(
                "job {} misses its deadline inside critical interval [{a}, {b}]",
                jobs[k].id
            )));
        }
        out.push(Segment {
            job: jobs[k].id,
            processor,
            start: t.clone(),
            end: stop.clone(),
            speed: speed.clone(),
        });
        t = stop;
    }
    Ok(out)
}
