//! On-disk instance and schedule files.
//!
//! Rationals are written as `"p/q"` (or `"p"`) strings so slot boundaries stay
//! exact. The instance checksum is the SHA-256 of the compact JSON of the
//! canonical instance file.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use speedscale::model::{Instance, Job, JobId, JobParams, Mode, ProcId, Processor, ProcessorSet, Schedule, ScheduleKind, Segment};
use speedscale::rational::{self, Rational};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeTag {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    One(f64),
    PerProcessor(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub works: Option<BTreeMap<u32, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub releases: Option<BTreeMap<u32, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadlines: Option<BTreeMap<u32, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub mode: ModeTag,
    pub alpha: AlphaSpec,
    pub jobs: Vec<JobRecord>,
}

fn num(s: &str, what: &str, job: u32) -> Result<Rational, CliError> {
    rational::parse(s).map_err(|e| CliError::Format(format!("job {job}: {what}: {e}")))
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Result<Self, CliError> {
        let fmt = rational::format;
        match instance.mode() {
            Mode::Single => {
                let p = instance.single_processor()?;
                let alpha = instance.processors().alpha(p).expect("own processor");
                let jobs = instance
                    .view(p)
                    .into_iter()
                    .map(|w| JobRecord {
                        id: w.id.0,
                        work: Some(fmt(&w.work)),
                        release: Some(fmt(&w.release)),
                        deadline: Some(fmt(&w.deadline)),
                        works: None,
                        releases: None,
                        deadlines: None,
                    })
                    .collect();
                Ok(Self { version: FORMAT_VERSION, mode: ModeTag::Single, alpha: AlphaSpec::One(alpha), jobs })
            }
            Mode::Multi => {
                let mut alphas = Vec::new();
                for (k, p) in instance.processors().iter().enumerate() {
                    if p.id.0 as usize != k {
                        return Err(CliError::Format("multi instances need processor ids 0..m".into()));
                    }
                    alphas.push(p.alpha);
                }
                let jobs = instance
                    .jobs()
                    .iter()
                    .map(|j| {
                        let pick = |f: fn(&JobParams) -> &Rational| {
                            j.params().iter().map(|(p, q)| (p.0, fmt(f(q)))).collect::<BTreeMap<_, _>>()
                        };
                        JobRecord {
                            id: j.id.0,
                            work: None,
                            release: None,
                            deadline: None,
                            works: Some(pick(|q| &q.work)),
                            releases: Some(pick(|q| &q.release)),
                            deadlines: Some(pick(|q| &q.deadline)),
                        }
                    })
                    .collect();
                Ok(Self { version: FORMAT_VERSION, mode: ModeTag::Multi, alpha: AlphaSpec::PerProcessor(alphas), jobs })
            }
        }
    }

    pub fn to_instance(&self) -> Result<Instance, CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Format(format!("unsupported instance version {}", self.version)));
        }
        match (self.mode, &self.alpha) {
            (ModeTag::Single, AlphaSpec::One(alpha)) => {
                let jobs = self
                    .jobs
                    .iter()
                    .map(|j| {
                        if j.works.is_some() || j.releases.is_some() || j.deadlines.is_some() {
                            return Err(CliError::Format(format!("job {}: per-processor maps in a single-mode file", j.id)));
                        }
                        let field = |v: &Option<String>, what: &str| {
                            v.as_deref()
                                .ok_or_else(|| CliError::Format(format!("job {}: missing {what}", j.id)))
                                .and_then(|s| num(s, what, j.id))
                        };
                        let mut params = BTreeMap::new();
                        params.insert(
                            ProcId(0),
                            JobParams::new(field(&j.work, "work")?, field(&j.release, "release")?, field(&j.deadline, "deadline")?),
                        );
                        Ok(Job::new(JobId(j.id), params))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let procs = ProcessorSet::new(vec![Processor { id: ProcId(0), alpha: *alpha }])?;
                Ok(Instance::new(Mode::Single, jobs, procs)?)
            }
            (ModeTag::Multi, AlphaSpec::PerProcessor(alphas)) => {
                let procs = ProcessorSet::new(
                    alphas.iter().enumerate().map(|(k, &alpha)| Processor { id: ProcId(k as u32), alpha }).collect(),
                )?;
                let jobs = self
                    .jobs
                    .iter()
                    .map(|j| {
                        if j.work.is_some() || j.release.is_some() || j.deadline.is_some() {
                            return Err(CliError::Format(format!("job {}: scalar fields in a multi-mode file", j.id)));
                        }
                        let (Some(works), Some(releases), Some(deadlines)) = (&j.works, &j.releases, &j.deadlines) else {
                            return Err(CliError::Format(format!("job {}: works, releases and deadlines are required", j.id)));
                        };
                        if works.keys().ne(releases.keys()) || works.keys().ne(deadlines.keys()) {
                            return Err(CliError::Format(format!("job {}: processor maps differ in keys", j.id)));
                        }
                        let params = works
                            .iter()
                            .map(|(p, w)| {
                                Ok((
                                    ProcId(*p),
                                    JobParams::new(
                                        num(w, "work", j.id)?,
                                        num(&releases[p], "release", j.id)?,
                                        num(&deadlines[p], "deadline", j.id)?,
                                    ),
                                ))
                            })
                            .collect::<Result<BTreeMap<_, _>, CliError>>()?;
                        Ok(Job::new(JobId(j.id), params))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Instance::new(Mode::Multi, jobs, procs)?)
            }
            (ModeTag::Single, _) => Err(CliError::Format("single mode takes one alpha".into())),
            (ModeTag::Multi, _) => Err(CliError::Format("multi mode takes one alpha per processor".into())),
        }
    }
}

pub fn instance_checksum(instance: &Instance) -> Result<String, CliError> {
    let canonical = serde_json::to_string(&InstanceFile::from_instance(instance)?)
        .map_err(|e| CliError::Format(e.to_string()))?;
    Ok(format!("{:x}", Sha256::digest(canonical.as_bytes())))
}

pub fn parse_instance(text: &str) -> Result<Instance, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Format(format!("instance: {e}")))?;
    file.to_instance()
}

pub fn write_instance<W: Write>(instance: &Instance, out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(out, &InstanceFile::from_instance(instance)?).map_err(|e| CliError::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub job: u32,
    pub processor: u32,
    pub start: String,
    pub end: String,
    pub speed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub bell: f64,
    /// `(1+eps)^(alpha-1) B`
    pub single_tight: f64,
    /// `(1+eps) B`
    pub single_linear: f64,
    /// `(1+eps)^alpha B`
    pub single: f64,
    /// `B ((1+eps)(1+rho))^alpha`, multi mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneous: Option<f64>,
    pub work_ratio: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub energy: f64,
    pub lp_objective: f64,
    pub ratio: f64,
    pub seed: u64,
    pub epsilon: String,
    pub slot_cap: Option<usize>,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub bound_report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub version: u32,
    pub instance_checksum: String,
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl ScheduleFile {
    pub fn new(checksum: String, schedule: &Schedule, metadata: Option<Metadata>) -> Self {
        let segments = schedule
            .segments
            .iter()
            .map(|s| SegmentRecord {
                job: s.job.0,
                processor: s.processor.0,
                start: rational::format(&s.start),
                end: rational::format(&s.end),
                speed: rational::format(&s.speed),
            })
            .collect();
        Self { version: FORMAT_VERSION, instance_checksum: checksum, segments, metadata }
    }

    pub fn schedule(&self) -> Result<Schedule, CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Format(format!("unsupported schedule version {}", self.version)));
        }
        let segments = self
            .segments
            .iter()
            .map(|r| {
                let field = |s: &str, what: &str| {
                    rational::parse(s).map_err(|e| CliError::Format(format!("segment of job {}: {what}: {e}", r.job)))
                };
                Ok(Segment {
                    job: JobId(r.job),
                    processor: ProcId(r.processor),
                    start: field(&r.start, "start")?,
                    end: field(&r.end, "end")?,
                    speed: field(&r.speed, "speed")?,
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Schedule::new(ScheduleKind::NonPreemptive, segments))
    }
}

/// Segments as CSV after a `# checksum <hex>` line.
pub fn write_schedule_csv<W: Write>(file: &ScheduleFile, mut out: W) -> Result<(), CliError> {
    writeln!(out, "# checksum {}", file.instance_checksum)?;
    let mut w = csv::Writer::from_writer(out);
    for s in &file.segments {
        w.serialize(s).map_err(|e| CliError::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a schedule written as JSON or as CSV.
pub fn parse_schedule(text: &str) -> Result<ScheduleFile, CliError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| CliError::Format(format!("schedule: {e}")));
    }
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    let checksum = first
        .trim()
        .strip_prefix("# checksum ")
        .ok_or_else(|| CliError::Format("CSV schedule must start with a '# checksum' line".into()))?
        .trim()
        .to_string();
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let segments = reader
        .deserialize()
        .collect::<Result<Vec<SegmentRecord>, _>>()
        .map_err(|e| CliError::Format(format!("schedule: {e}")))?;
    Ok(ScheduleFile { version: FORMAT_VERSION, instance_checksum: checksum, segments, metadata: None })
}
