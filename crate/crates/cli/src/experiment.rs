//! Experiment presets producing CSV rows.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use speedscale::bounds;
use speedscale::gen::{generate, GenKind, GenParams};
use speedscale::model::Mode;
use speedscale::multi::{solve_multi, Backend};
use speedscale::oracle::bell_tilde;
use speedscale::rational::{self, Rational};
use speedscale::single::solve_single;
use speedscale::{Scalar, SolveParams};

use crate::error::CliError;

/// Seeded instance battery shared by the presets. Instance `k` uses seed `seed + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub instances: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub trials: usize,
    pub slot_cap: Option<usize>,
    pub horizon: i64,
    pub backend: Backend,
}

impl Default for Battery {
    fn default() -> Self {
        Self { instances: 20, n: 5, m: 2, seed: 0, trials: 8, slot_cap: Some(6), horizon: 10, backend: Backend::Pipeline }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    pub instances: usize,
    pub mean: f64,
    pub max: f64,
}

impl RatioStats {
    fn of(ratios: &[f64]) -> Self {
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { instances: ratios.len(), mean: ratios.iter().sum::<f64>() / ratios.len() as f64, max }
    }
}

impl Battery {
    fn gen_params(&self, kind: GenKind, mode: Mode, alpha: f64, max_work: i64, k: usize) -> GenParams {
        GenParams {
            kind,
            n: self.n,
            m: if mode == Mode::Single { 1 } else { self.m },
            seed: self.seed.wrapping_add(k as u64),
            mode,
            alphas: vec![alpha],
            horizon: self.horizon,
            min_work: 1,
            max_work,
            ..Default::default()
        }
    }

    fn solve_params(&self, epsilon: &Rational, k: usize) -> SolveParams {
        SolveParams {
            epsilon: epsilon.clone(),
            seed: self.seed.wrapping_add(k as u64),
            trials: self.trials,
            slot_cap: self.slot_cap,
            ..Default::default()
        }
    }

    /// Energy over LP objective of the single-processor pipeline on random instances.
    pub fn single_ratios(&self, alpha: f64, epsilon: &Rational, max_work: i64) -> Result<RatioStats, CliError> {
        let ratios = (0..self.instances)
            .into_par_iter()
            .map(|k| {
                let inst = generate(&self.gen_params(GenKind::Random, Mode::Single, alpha, max_work, k))?;
                Ok(solve_single::<f64>(&inst, &self.solve_params(epsilon, k))?.ratio())
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        Ok(RatioStats::of(&ratios))
    }

    /// Energy over LP objective of the multiprocessor pipeline.
    pub fn multi_ratios(&self, kind: GenKind, alpha: f64, epsilon: &Rational, max_work: i64) -> Result<RatioStats, CliError> {
        let ratios = (0..self.instances)
            .into_par_iter()
            .map(|k| {
                let inst = generate(&self.gen_params(kind, Mode::Multi, alpha, max_work, k))?;
                Ok(solve_multi::<f64>(&inst, &self.solve_params(epsilon, k), self.backend)?.ratio())
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        Ok(RatioStats::of(&ratios))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub environment: &'static str,
    pub source: &'static str,
    pub kind: &'static str,
    pub alpha: f64,
    pub epsilon: String,
    pub wratio: Option<String>,
    pub bound: f64,
    pub instances: Option<usize>,
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Params {
    pub alphas: Vec<f64>,
    pub epsilons: Vec<Rational>,
    /// Work ratios `w_max / w_min`; batteries draw works from `1..=ratio`.
    pub ratios: Vec<u32>,
    pub battery: Battery,
}

impl Default for Table1Params {
    fn default() -> Self {
        Self { alphas: vec![2.0], epsilons: vec![rational::int(1)], ratios: vec![2], battery: Battery::default() }
    }
}

/// Known ratio formulas next to measured ratios of both pipelines.
pub fn table1(params: &Table1Params) -> Result<Vec<Table1Row>, CliError> {
    let mut rows = Vec::new();
    for &alpha in &params.alphas {
        for epsilon in &params.epsilons {
            let eps = <f64 as Scalar>::from_rational(epsilon);
            let eps_text = rational::format(epsilon);
            let row = |environment, source, kind, wratio: Option<String>, bound, stats: Option<RatioStats>| Table1Row {
                environment,
                source,
                kind,
                alpha,
                epsilon: eps_text.clone(),
                wratio,
                bound,
                instances: stats.map(|s| s.instances),
                mean_ratio: stats.map(|s| s.mean),
                max_ratio: stats.map(|s| s.max),
            };

            rows.push(row("single-processor", "prior", "2^(a-1)(1+e)^a B", None, bounds::prior_single_rounding(alpha, eps)?, None));
            rows.push(row("single-processor", "prior", "(12(1+e))^(a-1)", None, bounds::prior_single_constant(alpha, eps), None));
            let single = params.battery.single_ratios(alpha, epsilon, 5)?;
            rows.push(row("single-processor", "algorithm", "(1+e)^a B", None, bounds::single(alpha, eps)?, Some(single)));

            for &rho in &params.ratios {
                let r = f64::from(rho);
                let w = Some(rho.to_string());
                rows.push(row("homogeneous", "prior", "(5/2)^(a-1) B((1+e)(1+r))^a", w.clone(), bounds::prior_homogeneous(alpha, eps, r)?, None));
                rows.push(row(
                    "homogeneous-wij",
                    "prior",
                    "(5/2)^(a-1) B((1+e)(1+r)r)^a",
                    w.clone(),
                    bounds::prior_homogeneous_works(alpha, eps, r)?,
                    None,
                ));
                let multi = params.battery.multi_ratios(GenKind::Random, alpha, epsilon, i64::from(rho))?;
                rows.push(row("fully-heterogeneous", "algorithm", "B((1+e)(1+r))^a", w, bounds::heterogeneous(alpha, eps, r)?, Some(multi)));
            }

            let one = Some("1".to_string());
            rows.push(row("equal-work", "prior", "2(1+e)^a 5^(a-1) B", one.clone(), bounds::prior_equal_work(alpha, eps)?, None));
            let equal = params.battery.multi_ratios(GenKind::EqualWork, alpha, epsilon, 5)?;
            rows.push(row("equal-work", "algorithm", "B(2(1+e))^a", one, bounds::equal_work(alpha, eps)?, Some(equal)));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub epsilon: String,
    pub slots_per_gap: usize,
    pub instances: usize,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// `(1+e)^(a-1) B`
    pub bound_tight: f64,
    /// `(1+e)^a B`
    pub bound: f64,
}

pub const SWEEP_ALPHAS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

/// Single-processor ratios across exponents and granularities.
pub fn ratio_sweep(alphas: &[f64], epsilons: &[Rational], battery: &Battery) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for epsilon in epsilons {
            let eps = <f64 as Scalar>::from_rational(epsilon);
            let stats = battery.single_ratios(alpha, epsilon, 5)?;
            rows.push(SweepRow {
                alpha,
                epsilon: rational::format(epsilon),
                slots_per_gap: speedscale::discretize::slots_per_gap(battery.n, epsilon, battery.slot_cap)?,
                instances: stats.instances,
                mean_ratio: stats.mean,
                max_ratio: stats.max,
                bound_tight: bounds::single_tight(alpha, eps)?,
                bound: bounds::single(alpha, eps)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellRow {
    pub alpha: f64,
    pub value: f64,
    pub terms_used: usize,
    pub truncation_bound: f64,
}

pub const BELL_ALPHAS: [f64; 7] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

pub fn bell_rows(alphas: &[f64], tol: f64) -> Result<Vec<BellRow>, CliError> {
    alphas
        .iter()
        .map(|&alpha| {
            let b = bell_tilde::<f64>(alpha, tol)?;
            Ok(BellRow { alpha, value: b.value, terms_used: b.terms_used, truncation_bound: b.truncation_bound })
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
