use std::collections::BTreeMap;
use std::io::Write;

use speedscale::bounds;
use speedscale::discretize::ProcessorPlan;
use speedscale::lp::build_lp;
use speedscale::model::{max_processor_work_ratio, verify, Instance, Job, JobId, Mode, Processor, ProcessorSet, ScheduleKind, VerificationReport};
use speedscale::multi::{solve_multi, Backend};
use speedscale::rational::{self, Rational};
use speedscale::{Scalar, SolveParams};

use crate::error::CliError;
use crate::format::{instance_checksum, parse_instance, parse_schedule, BoundReport, Metadata, ScheduleFile};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub params: SolveParams,
    pub backend: Backend,
}

/// Replaces every processor's exponent.
pub fn override_alpha(instance: &Instance, alpha: f64) -> Result<Instance, CliError> {
    let procs = ProcessorSet::new(instance.processors().iter().map(|p| Processor { id: p.id, alpha }).collect())?;
    let jobs: Vec<Job> = instance.jobs().to_vec();
    Ok(Instance::new(instance.mode(), jobs, procs)?)
}

pub fn bound_report(instance: &Instance, epsilon: &Rational) -> Result<BoundReport, CliError> {
    let alpha = instance.processors().alpha_max();
    let eps = <f64 as Scalar>::from_rational(epsilon);
    let rho = max_processor_work_ratio(instance);
    let heterogeneous = match instance.mode() {
        Mode::Single => None,
        Mode::Multi => Some(bounds::heterogeneous(alpha, eps, <f64 as Scalar>::from_rational(&rho))?),
    };
    Ok(BoundReport {
        bell: bounds::bell(alpha)?,
        single_tight: bounds::single_tight(alpha, eps)?,
        single_linear: bounds::single_linear(alpha, eps)?,
        single: bounds::single(alpha, eps)?,
        heterogeneous,
        work_ratio: rational::format(&rho),
    })
}

pub fn solve_instance(instance: &Instance, opts: &SolveOptions) -> Result<ScheduleFile, CliError> {
    let params = &opts.params;
    let (schedule, energy, lp_objective, backend) = match instance.mode() {
        Mode::Single => {
            let out = speedscale::single::solve_single::<f64>(instance, params)?;
            (out.schedule, out.energy, out.lp_objective, None)
        }
        Mode::Multi => {
            let out = solve_multi::<f64>(instance, params, opts.backend)?;
            (out.schedule, out.energy, out.lp_objective, Some(opts.backend.to_string()))
        }
    };
    let metadata = Metadata {
        energy,
        lp_objective,
        ratio: energy / lp_objective,
        seed: params.seed,
        epsilon: rational::format(&params.epsilon),
        slot_cap: params.slot_cap,
        trials: params.trials,
        backend,
        bound_report: bound_report(instance, &params.epsilon)?,
    };
    Ok(ScheduleFile::new(instance_checksum(instance)?, &schedule, Some(metadata)))
}

/// Human-readable result lines.
pub fn summary(file: &ScheduleFile) -> String {
    let Some(m) = &file.metadata else {
        return format!("{} segments\n", file.segments.len());
    };
    let b = &m.bound_report;
    let mut s = format!(
        "energy        {:.9}\nlp objective  {:.9}\nratio         {:.6}\nbell          {:.9}\n",
        m.energy, m.lp_objective, m.ratio, b.bell
    );
    s += &format!("bound (1+e)^(a-1)B   {:.6}\n", b.single_tight);
    s += &format!("bound (1+e)B         {:.6}\n", b.single_linear);
    s += &format!("bound (1+e)^a B      {:.6}\n", b.single);
    if let Some(h) = b.heterogeneous {
        s += &format!("bound B((1+e)(1+r))^a {:.6} (r = {})\n", h, b.work_ratio);
    }
    s
}

/// Writes the LP the solver would build, in CPLEX LP text.
pub fn dump_lp<W: Write>(instance: &Instance, params: &SolveParams, out: W) -> Result<(), CliError> {
    let plans = instance
        .processors()
        .ids()
        .map(|p| ProcessorPlan::new(instance, p, &params.epsilon, params.slot_cap))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<JobId> = instance.jobs().iter().map(|j| j.id).collect();
    build_lp::<f64>(&jobs, &plans)?.write_lp_format(out)?;
    Ok(())
}

/// Checks a schedule (JSON or CSV) against an instance after matching checksums.
pub fn verify_texts(instance_text: &str, schedule_text: &str) -> Result<VerificationReport, CliError> {
    let instance = parse_instance(instance_text)?;
    let file = parse_schedule(schedule_text)?;
    let found = instance_checksum(&instance)?;
    if found != file.instance_checksum {
        return Err(CliError::Checksum { expected: file.instance_checksum, found });
    }
    Ok(verify(&file.schedule()?, &instance, ScheduleKind::NonPreemptive))
}

/// Energy of the optimal preemptive schedule, per processor for multi instances
/// (each processor taking all of its eligible jobs).
pub fn yds_energies(instance: &Instance) -> Result<BTreeMap<u32, f64>, CliError> {
    let mut out = BTreeMap::new();
    for p in instance.processors().ids() {
        let ids: Vec<JobId> = instance.view(p).iter().map(|w| w.id).collect();
        if ids.is_empty() {
            continue;
        }
        let sub = instance.restrict_to(p, &ids)?;
        out.insert(p.0, speedscale::yds::yds_schedule::<f64>(&sub)?.energy);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use speedscale::rational::int;

    fn opts() -> SolveOptions {
        SolveOptions { params: SolveParams { slot_cap: Some(4), trials: 4, ..Default::default() }, backend: Backend::Pipeline }
    }

    #[test]
    fn single_job_ratio_is_one() {
        let inst = Instance::single(2.0, vec![(int(2), int(0), int(3))]).unwrap();
        let file = solve_instance(&inst, &opts()).unwrap();
        let m = file.metadata.unwrap();
        assert!((m.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solver_output_verifies_and_tampering_is_caught() {
        let inst = Instance::single(2.0, vec![(int(1), int(0), int(2)), (int(1), int(1), int(3))]).unwrap();
        let file = solve_instance(&inst, &opts()).unwrap();
        let inst_text = serde_json::to_string(&crate::format::InstanceFile::from_instance(&inst).unwrap()).unwrap();
        let sched_text = serde_json::to_string(&file).unwrap();
        assert!(verify_texts(&inst_text, &sched_text).unwrap().is_feasible());

        let mut bad = file.clone();
        bad.segments[0].end = "7".into();
        let report = verify_texts(&inst_text, &serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(report.violations.iter().any(|v| v.to_string().contains("life interval")));

        let other = Instance::single(2.0, vec![(int(1), int(0), int(5))]).unwrap();
        let other_text = serde_json::to_string(&crate::format::InstanceFile::from_instance(&other).unwrap()).unwrap();
        assert_eq!(verify_texts(&other_text, &sched_text).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn alpha_override() {
        let inst = Instance::single(2.0, vec![(int(1), int(0), int(2))]).unwrap();
        let changed = override_alpha(&inst, 3.0).unwrap();
        assert_eq!(changed.processors().alpha_max(), 3.0);
        assert!(override_alpha(&inst, 0.5).is_err());
    }

    #[test]
    fn lp_dump_lists_rows() {
        let inst = Instance::single(2.0, vec![(int(1), int(0), int(2))]).unwrap();
        let mut out = Vec::new();
        dump_lp(&inst, &opts().params, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("Minimize") && text.contains("cover_0") && text.ends_with("End\n"));
    }
}
