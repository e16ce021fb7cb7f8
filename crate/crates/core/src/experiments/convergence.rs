//! Replicated estimation over a grid of sample sizes, scored against a
//! reference value.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate, RiskEstimate, RiskLevel, SampleBatch};
use crate::experiments::config::{ExperimentConfig, TruthValues};
use crate::experiments::rate::{fit_rate, RateFit};
use crate::experiments::sampler::{mc_points, randomize_for, Sampler};
use crate::lowdisc::{DirectionNumbers, Sobol};
use crate::models::{evaluate_points, Model};
use crate::numfmt::format_g;

pub const CSV_HEADER: &str = "sampler,N,R,q_mean,q_bias,q_mse,es_mean,es_bias,es_mse,mse_stderr";

/// Column meanings, for display next to the CSV.
pub const CSV_LEGEND: &str = "\
q_* / es_*: quantile / expected-shortfall estimates; mean over R runs, bias = mean - truth, \
mse = mean squared error against truth. For qmc-sobol (R = 1) the mse columns hold the squared \
error of the single deterministic run. mse_stderr: sample standard deviation of the quantile \
squared errors divided by sqrt(R); nan when R = 1.";

/// Below this many total evaluations `R * N`, the smallest grid point is
/// left out of rate fits.
pub const PRE_ASYMPTOTIC_EVALUATIONS: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sampler: Sampler,
    pub n: usize,
    pub replications: usize,
    pub q_mean: f64,
    pub q_bias: f64,
    pub q_mse: f64,
    pub es_mean: f64,
    pub es_bias: f64,
    pub es_mse: f64,
    pub mse_stderr: f64,
}

impl ResultRow {
    fn from_estimates(sampler: Sampler, n: usize, ests: &[RiskEstimate], truth: TruthValues) -> Self {
        let r = ests.len() as f64;
        let mean = |f: &dyn Fn(&RiskEstimate) -> f64| ests.iter().map(f).sum::<f64>() / r;
        let q_sq: Vec<f64> = ests.iter().map(|e| (e.quantile - truth.quantile).powi(2)).collect();
        let q_mse = q_sq.iter().sum::<f64>() / r;
        let q_mean = mean(&|e| e.quantile);
        let es_mean = mean(&|e| e.shortfall);
        let mse_stderr = if ests.len() > 1 {
            let var = q_sq.iter().map(|s| (s - q_mse).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        } else {
            f64::NAN
        };
        ResultRow {
            sampler,
            n,
            replications: ests.len(),
            q_mean,
            q_bias: q_mean - truth.quantile,
            q_mse,
            es_mean,
            es_bias: es_mean - truth.shortfall,
            es_mse: mean(&|e| (e.shortfall - truth.shortfall).powi(2)),
            mse_stderr,
        }
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::QuantileMse => self.q_mse,
            Metric::ShortfallMse => self.es_mse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    QuantileMse,
    ShortfallMse,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::QuantileMse => "q_mse",
            Metric::ShortfallMse => "es_mse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub sampler: Sampler,
    pub metric: Metric,
    pub fit: RateFit,
    /// The smallest grid point was dropped as pre-asymptotic.
    pub excluded_smallest: bool,
}

/// One row per `(sampler, N)`, samplers in config order, `N` ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let floats = [
                r.q_mean,
                r.q_bias,
                r.q_mse,
                r.es_mean,
                r.es_bias,
                r.es_mse,
                r.mse_stderr,
            ]
            .map(|x| format_g(x, 9));
            writeln!(out, "{},{},{},{}", r.sampler, r.n, r.replications, floats.join(","))
                .expect("writing to a String");
        }
        out
    }

    pub fn rows_for(&self, sampler: Sampler) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.sampler == sampler)
    }

    pub fn row(&self, sampler: Sampler, n: usize) -> Option<&ResultRow> {
        self.rows_for(sampler).find(|r| r.n == n)
    }

    /// Log-log fit of `metric` against `N` for one sampler. The smallest
    /// grid point is dropped when `R * N` there is below
    /// [`PRE_ASYMPTOTIC_EVALUATIONS`].
    pub fn fit(&self, sampler: Sampler, metric: Metric) -> Result<RateSummary> {
        let rows: Vec<&ResultRow> = self.rows_for(sampler).collect();
        let excluded_smallest = rows
            .first()
            .is_some_and(|r| r.replications * r.n < PRE_ASYMPTOTIC_EVALUATIONS);
        let used = if excluded_smallest { &rows[1..] } else { &rows[..] };
        let ns: Vec<f64> = used.iter().map(|r| r.n as f64).collect();
        let errors: Vec<f64> = used.iter().map(|r| r.metric(metric)).collect();
        Ok(RateSummary {
            sampler,
            metric,
            fit: fit_rate(&ns, &errors)?,
            excluded_smallest,
        })
    }

    /// Fits for every sampler and both metrics that admit one.
    pub fn rate_summaries(&self) -> Vec<RateSummary> {
        let mut samplers: Vec<Sampler> = Vec::new();
        for r in &self.rows {
            if !samplers.contains(&r.sampler) {
                samplers.push(r.sampler);
            }
        }
        samplers
            .into_iter()
            .flat_map(|s| [Metric::QuantileMse, Metric::ShortfallMse].map(|m| (s, m)))
            .filter_map(|(s, m)| self.fit(s, m).ok())
            .collect()
    }
}

fn estimate_prefixes(values: &[f64], grid: &[usize], label: &str, level: RiskLevel) -> Result<Vec<RiskEstimate>> {
    grid.iter()
        .map(|&n| Ok(estimate(&SampleBatch::new(values[..n].to_vec(), label)?, level)))
        .collect()
}

/// Runs the study described by `cfg`, resolving its model and truth.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let truth = cfg.truth.resolve(&model, cfg.level)?;
    run_convergence_with(&model, cfg, truth)
}

/// Runs the study with an explicit model and truth; `cfg.model` and
/// `cfg.truth` are ignored.
///
/// For every sampler and every `N` in the grid, `R` independent runs each
/// estimate the quantile and shortfall; rows aggregate bias and MSE. Sobol'
/// based samplers reuse one point set of the largest `N` per run and score
/// its prefixes, which equal the smaller sets exactly.
pub fn run_convergence_with(model: &dyn Model, cfg: &ExperimentConfig, truth: TruthValues) -> Result<ResultTable> {
    cfg.validate()?;
    let dim = model.dim();
    let grid = &cfg.n_grid;
    let n_max = *grid.last().expect("validated grid is nonempty");
    let mut rows = Vec::with_capacity(cfg.samplers.len() * grid.len());

    for &sampler in &cfg.samplers {
        let reps = cfg.replications_for(sampler);
        // per_cell[g][r]
        let mut per_cell: Vec<Vec<RiskEstimate>> = vec![Vec::with_capacity(reps); grid.len()];
        match sampler {
            Sampler::Mc => {
                for (g, &n) in grid.iter().enumerate() {
                    per_cell[g] = (0..reps as u64)
                        .into_par_iter()
                        .map(|r| {
                            let ps = mc_points(dim, n, cfg.master_seed, r);
                            let batch = SampleBatch::new(evaluate_points(model, &ps)?, sampler.name())?;
                            Ok(estimate(&batch, cfg.level))
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
            }
            _ => {
                let sobol = Sobol::new(DirectionNumbers::joe_kuo(), dim)
                    .map_err(|e| Error::Config(format!("sampler {sampler} cannot serve a {dim}-dimensional model: {e}")))?
                    .generate(0, n_max)?;
                let runs = (0..reps as u64)
                    .into_par_iter()
                    .map(|r| {
                        let ps = randomize_for(sampler, &sobol, cfg.master_seed, r)?;
                        let values = evaluate_points(model, &ps)?;
                        estimate_prefixes(&values, grid, sampler.name(), cfg.level)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for run in runs {
                    for (cell, e) in per_cell.iter_mut().zip(run) {
                        cell.push(e);
                    }
                }
            }
        }
        for (&n, ests) in grid.iter().zip(&per_cell) {
            rows.push(ResultRow::from_estimates(sampler, n, ests, truth));
        }
    }
    Ok(ResultTable { rows })
}
