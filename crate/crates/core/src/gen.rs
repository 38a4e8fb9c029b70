//! Seeded instance generators with integer data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Job, JobId, JobParams, Mode, ProcId, Processor, ProcessorSet};
use crate::rational::int;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Random,
    /// Release order equals deadline order on every processor.
    Agreeable,
    /// One work value per processor.
    EqualWork,
    /// Many life intervals strictly inside others.
    Nested,
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenKind::Random => "random",
            GenKind::Agreeable => "agreeable",
            GenKind::EqualWork => "equal-work",
            GenKind::Nested => "nested",
        })
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(GenKind::Random),
            "agreeable" => Ok(GenKind::Agreeable),
            "equal-work" => Ok(GenKind::EqualWork),
            "nested" => Ok(GenKind::Nested),
            other => Err(Error::Parameter(format!("unknown instance kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub kind: GenKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: Mode,
    /// One exponent for all processors, or one per processor.
    pub alphas: Vec<f64>,
    /// Releases lie in `0..horizon`.
    pub horizon: i64,
    pub min_work: i64,
    pub max_work: i64,
    /// Probability that a job is eligible on a given processor (multi mode).
    pub eligibility: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            kind: GenKind::Random,
            n: 5,
            m: 1,
            seed: 0,
            mode: Mode::Single,
            alphas: vec![2.0],
            horizon: 10,
            min_work: 1,
            max_work: 5,
            eligibility: 0.7,
        }
    }
}

impl GenParams {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be at least 1".into());
        }
        if self.mode == Mode::Single && self.m != 1 {
            return bad(format!("single mode needs m = 1, got {}", self.m));
        }
        if self.alphas.len() != 1 && self.alphas.len() != self.m {
            return bad(format!("expected 1 or {} exponents, got {}", self.m, self.alphas.len()));
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.min_work < 1 || self.max_work < self.min_work {
            return bad(format!("invalid work range {}..={}", self.min_work, self.max_work));
        }
        if !(self.eligibility > 0.0 && self.eligibility <= 1.0) {
            return bad(format!("eligibility must lie in (0, 1], got {}", self.eligibility));
        }
        Ok(())
    }

    fn alpha(&self, processor: usize) -> f64 {
        if self.alphas.len() == 1 {
            self.alphas[0]
        } else {
            self.alphas[processor]
        }
    }
}

pub fn generate(params: &GenParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;

    let mut eligible = vec![vec![true; params.m]; n];
    if params.mode == Mode::Multi {
        for row in &mut eligible {
            for e in row.iter_mut() {
                *e = rng.gen_bool(params.eligibility);
            }
            if !row.iter().any(|&e| e) {
                let k = rng.gen_range(0..params.m);
                row[k] = true;
            }
        }
    }

    let mut per_job: Vec<BTreeMap<ProcId, JobParams>> = vec![BTreeMap::new(); n];
    let mut processors = Vec::with_capacity(params.m);
    for i in 0..params.m {
        let id = ProcId(i as u32);
        processors.push(Processor { id, alpha: params.alpha(i) });
        let windows = match params.kind {
            GenKind::Agreeable => agreeable_windows(&mut rng, n, params.horizon),
            GenKind::Nested => nested_windows(&mut rng, n, params.horizon),
            GenKind::Random | GenKind::EqualWork => random_windows(&mut rng, n, params.horizon),
        };
        let shared = rng.gen_range(params.min_work..=params.max_work);
        for (j, (r, d)) in windows.into_iter().enumerate() {
            let w = match params.kind {
                GenKind::EqualWork => shared,
                _ => rng.gen_range(params.min_work..=params.max_work),
            };
            if eligible[j][i] {
                per_job[j].insert(id, JobParams::new(int(w), int(r), int(d)));
            }
        }
    }
    let jobs = per_job
        .into_iter()
        .enumerate()
        .map(|(j, p)| Job::new(JobId(j as u32), p))
        .collect();
    Instance::new(params.mode, jobs, ProcessorSet::new(processors)?)
}

fn random_windows(rng: &mut ChaCha8Rng, n: usize, horizon: i64) -> Vec<(i64, i64)> {
    (0..n)
        .map(|_| {
            let r = rng.gen_range(0..horizon);
            let len = rng.gen_range(1..=horizon - r);
            (r, r + len)
        })
        .collect()
}

/// Releases and deadlines both non-decreasing in job order.
fn agreeable_windows(rng: &mut ChaCha8Rng, n: usize, horizon: i64) -> Vec<(i64, i64)> {
    let mut releases: Vec<i64> = (0..n).map(|_| rng.gen_range(0..horizon)).collect();
    releases.sort_unstable();
    let max_len = (horizon / 2).max(1);
    let mut last_deadline = 0;
    releases
        .into_iter()
        .map(|r| {
            let d = (r + rng.gen_range(1..=max_len)).max(last_deadline);
            last_deadline = d;
            (r, d)
        })
        .collect()
}

/// Each job is placed strictly inside a random earlier job when one is wide enough.
fn nested_windows(rng: &mut ChaCha8Rng, n: usize, horizon: i64) -> Vec<(i64, i64)> {
    let span = horizon.max(2 * n as i64 + 2);
    let mut out: Vec<(i64, i64)> = vec![(0, span)];
    while out.len() < n {
        let parents: Vec<(i64, i64)> = out.iter().copied().filter(|(r, d)| d - r >= 3).collect();
        let w = if parents.is_empty() {
            let r = rng.gen_range(0..span);
            (r, r + rng.gen_range(1..=span - r))
        } else {
            let (pr, pd) = parents[rng.gen_range(0..parents.len())];
            let r = rng.gen_range(pr + 1..=pd - 2);
            (r, rng.gen_range(r + 1..=pd - 1))
        };
        out.push(w);
    }
    out.truncate(n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_agreeable, max_processor_work_ratio};
    use crate::rational::one;

    fn params(kind: GenKind, n: usize, m: usize, seed: u64) -> GenParams {
        let mode = if m > 1 { Mode::Multi } else { Mode::Single };
        GenParams { kind, n, m, seed, mode, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        for kind in [GenKind::Random, GenKind::Agreeable, GenKind::EqualWork, GenKind::Nested] {
            assert_eq!(generate(&params(kind, 5, 3, 1)).unwrap(), generate(&params(kind, 5, 3, 1)).unwrap());
        }
    }

    #[test]
    fn kind_contracts() {
        for seed in 0..50 {
            assert!(is_agreeable(&generate(&params(GenKind::Agreeable, 6, 1, seed)).unwrap()));
            assert!(is_agreeable(&generate(&params(GenKind::Agreeable, 6, 3, seed)).unwrap()));

            let eq = generate(&params(GenKind::EqualWork, 6, 3, seed)).unwrap();
            assert_eq!(max_processor_work_ratio(&eq), one());

            let nested = generate(&params(GenKind::Nested, 3, 1, seed)).unwrap();
            let v = nested.view(ProcId(0));
            let strict = v.iter().any(|a| v.iter().any(|b| a.release < b.release && b.deadline < a.deadline));
            assert!(strict);
        }
    }

    #[test]
    fn multi_jobs_are_eligible_somewhere() {
        for seed in 0..50 {
            let p = GenParams { eligibility: 0.2, ..params(GenKind::Random, 6, 3, seed) };
            let inst = generate(&p).unwrap();
            assert!(inst.jobs().iter().all(|j| j.eligible().count() >= 1));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate(&params(GenKind::Random, 0, 1, 0)).is_err());
        assert!(generate(&GenParams { m: 2, ..Default::default() }).is_err());
        assert!(generate(&GenParams { min_work: 3, max_work: 2, ..Default::default() }).is_err());
        assert!(generate(&GenParams { alphas: vec![0.5], ..Default::default() }).is_err());
        assert!("bogus".parse::<GenKind>().is_err());
    }
}
