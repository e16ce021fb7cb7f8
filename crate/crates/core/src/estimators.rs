//! Empirical-CDF estimators of the `p`-quantile (value-at-risk) and the
//! expected shortfall below it.
//!
//! With outputs `X_1..X_N` and order statistics `X_(1) <= ... <= X_(N)`:
//!
//! * `F_N(x) = #{i : X_i <= x} / N`
//! * `v_N = inf{x : F_N(x) >= p} = X_(ceil(pN))`
//! * `c_N = v_N - sum_i (v_N - X_i)^+ / (pN)`
//! * `K_N(x) = sum_i (x - X_i)^+ / N`
//!
//! The same formulas serve Monte Carlo and (randomized) quasi-Monte Carlo
//! inputs; only the sampler label differs.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Risk level `p` in the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(RiskLevel(p))
        } else {
            Err(Error::Domain(format!("risk level {p} outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rank `k = ceil(pN)`, clamped to `1..=N`.
    ///
    /// A product `pN` within one double-precision step of an integer `q` is
    /// taken to be `q`: the decimal level `0.1` is not representable, and
    /// `0.1 * 2^m` must still select rank `2^m / 10` when that is whole.
    pub fn rank(self, n: usize) -> usize {
        let x = self.0 * n as f64;
        let q = x.round();
        let k = if (x - q).abs() <= f64::EPSILON * q.abs().max(1.0) {
            q
        } else {
            x.ceil()
        };
        (k as usize).clamp(1, n.max(1))
    }
}

/// Model outputs `X_i = phi(u_i)` from one sampler run.
#[derive(Debug)]
pub struct SampleBatch {
    values: Vec<f64>,
    label: String,
    sorted: OnceLock<Vec<f64>>,
}

impl Clone for SampleBatch {
    fn clone(&self) -> Self {
        SampleBatch {
            values: self.values.clone(),
            label: self.label.clone(),
            sorted: self.sorted.clone(),
        }
    }
}

impl SampleBatch {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("sample batch is empty".into()));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample value {bad}")));
        }
        Ok(SampleBatch {
            values,
            label: label.into(),
            sorted: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Ascending copy of the values, computed on first use.
    pub fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| {
            let mut s = self.values.clone();
            s.sort_by(f64::total_cmp);
            s
        })
    }

    /// `k`-th smallest value (1-based). Uses the sorted view when it has
    /// already been built, linear-time selection otherwise.
    pub fn order_statistic(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.len(), "rank {k} outside 1..={}", self.len());
        if let Some(sorted) = self.sorted.get() {
            return sorted[k - 1];
        }
        let mut scratch = self.values.clone();
        let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    }
}

/// `F_N(x)`, with `X_i <= x` inclusive.
pub fn empirical_cdf(batch: &SampleBatch, x: f64) -> f64 {
    let hits = batch.values().iter().filter(|&&v| v <= x).count();
    hits as f64 / batch.len() as f64
}

/// `v_N = X_(ceil(pN))`.
pub fn quantile_estimate(batch: &SampleBatch, level: RiskLevel) -> f64 {
    batch.order_statistic(level.rank(batch.len()))
}

/// `K_N(x) = sum_i (x - X_i)^+ / N`.
pub fn k_hat(batch: &SampleBatch, x: f64) -> f64 {
    positive_part_sum(batch.values(), x) / batch.len() as f64
}

fn positive_part_sum(values: &[f64], x: f64) -> f64 {
    values.iter().map(|&v| (x - v).max(0.0)).sum()
}

/// Expected shortfall estimate at a known quantile estimate `v`.
pub fn shortfall_at(batch: &SampleBatch, level: RiskLevel, v: f64) -> f64 {
    v - positive_part_sum(batch.values(), v) / (level.value() * batch.len() as f64)
}

/// `c_N = v_N - sum_i (v_N - X_i)^+ / (pN)`.
pub fn shortfall_estimate(batch: &SampleBatch, level: RiskLevel) -> f64 {
    shortfall_at(batch, level, quantile_estimate(batch, level))
}

/// Quantile and shortfall estimates of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub quantile: f64,
    pub shortfall: f64,
}

pub fn estimate(batch: &SampleBatch, level: RiskLevel) -> RiskEstimate {
    let quantile = quantile_estimate(batch, level);
    RiskEstimate {
        quantile,
        shortfall: shortfall_at(batch, level, quantile),
    }
}
