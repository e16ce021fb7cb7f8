//! Loss models `X = phi(u)` on the unit cube.
//!
//! Edge durations are exponential and generated by inversion,
//! `Y_j = -ln(u_j) / lambda_j`. Coordinates are clamped to
//! `[eps, 1 - eps]` first so the origin of a digital net (which the
//! sequence emits at index 0) maps to a large but finite loss.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::RiskLevel;
use crate::lowdisc::PointSet;

pub const DEFAULT_CLAMP_EPSILON: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

pub const SAN_EDGES: usize = 15;

/// Paths of the 15-activity network (1-based activity numbers).
pub const SAN_PATHS: [&[usize]; 10] = [
    &[1, 4, 11, 15],
    &[1, 4, 12],
    &[2, 5, 11, 15],
    &[2, 5, 12],
    &[2, 6, 13],
    &[2, 7, 14],
    &[3, 8, 11, 15],
    &[3, 8, 12],
    &[3, 9, 15],
    &[3, 10, 14],
];

pub fn default_san_rates() -> [f64; SAN_EDGES] {
    std::array::from_fn(|i| if i < 8 { 0.5 } else { 1.0 })
}

pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `phi(u)` without the dimension check.
    fn evaluate_unchecked(&self, u: &[f64]) -> f64;

    fn evaluate(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::UnsupportedDimension {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(self.evaluate_unchecked(u))
    }

    /// Closed-form `F^{-1}(p)`, when the model has one.
    fn true_quantile(&self, _level: RiskLevel) -> Option<f64> {
        None
    }

    /// Closed-form expected shortfall `v - E[(v - X)^+] / p`, when available.
    fn true_shortfall(&self, _level: RiskLevel) -> Option<f64> {
        None
    }
}

/// Evaluates `model` at every point of `ps`.
pub fn evaluate_points(model: &dyn Model, ps: &PointSet) -> Result<Vec<f64>> {
    if ps.dim() != model.dim() {
        return Err(Error::UnsupportedDimension {
            expected: model.dim(),
            got: ps.dim(),
        });
    }
    Ok(ps.iter().map(|u| model.evaluate_unchecked(u)).collect())
}

#[inline]
fn clamp(u: f64, eps: f64) -> f64 {
    u.clamp(eps, 1.0 - eps)
}

/// Completion time of the stochastic activity network: the longest of the
/// configured paths, each the sum of its exponential activity durations.
#[derive(Debug, Clone, PartialEq)]
pub struct SanModel {
    rates: [f64; SAN_EDGES],
    /// 0-based activity indices.
    paths: Vec<Vec<usize>>,
    clamp_epsilon: f64,
}

impl Default for SanModel {
    fn default() -> Self {
        SanModel::new(default_san_rates(), DEFAULT_CLAMP_EPSILON).expect("default rates are valid")
    }
}

impl SanModel {
    pub fn new(rates: [f64; SAN_EDGES], clamp_epsilon: f64) -> Result<Self> {
        for (i, &r) in rates.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Invalid {
                    key: "rates".into(),
                    message: format!("rate of activity {} is {r}; rates must be positive", i + 1),
                });
            }
        }
        check_clamp(clamp_epsilon)?;
        Ok(SanModel {
            rates,
            paths: SAN_PATHS
                .iter()
                .map(|p| p.iter().map(|&j| j - 1).collect())
                .collect(),
            clamp_epsilon,
        })
    }

    pub fn rates(&self) -> &[f64; SAN_EDGES] {
        &self.rates
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn clamp_epsilon(&self) -> f64 {
        self.clamp_epsilon
    }

    /// Activity durations `Y_j` for the point `u`.
    pub fn durations(&self, u: &[f64]) -> [f64; SAN_EDGES] {
        std::array::from_fn(|j| -clamp(u[j], self.clamp_epsilon).ln() / self.rates[j])
    }

    pub fn path_length(&self, durations: &[f64; SAN_EDGES], path: usize) -> f64 {
        self.paths[path].iter().map(|&j| durations[j]).sum()
    }
}

impl Model for SanModel {
    fn name(&self) -> &str {
        "san-15"
    }

    fn dim(&self) -> usize {
        SAN_EDGES
    }

    fn evaluate_unchecked(&self, u: &[f64]) -> f64 {
        let y = self.durations(u);
        (0..self.paths.len())
            .map(|i| self.path_length(&y, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One exponential duration: `X = -ln(u) / lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpModel {
    lambda: f64,
    clamp_epsilon: f64,
}

impl ExpModel {
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_clamp(lambda, DEFAULT_CLAMP_EPSILON)
    }

    pub fn with_clamp(lambda: f64, clamp_epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Invalid {
                key: "lambda".into(),
                message: format!("{lambda} is not a positive rate"),
            });
        }
        check_clamp(clamp_epsilon)?;
        Ok(ExpModel {
            lambda,
            clamp_epsilon,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Model for ExpModel {
    fn name(&self) -> &str {
        "exp"
    }

    fn dim(&self) -> usize {
        1
    }

    fn evaluate_unchecked(&self, u: &[f64]) -> f64 {
        -clamp(u[0], self.clamp_epsilon).ln() / self.lambda
    }

    fn true_quantile(&self, level: RiskLevel) -> Option<f64> {
        // F(x) = 1 - exp(-lambda x)
        Some(-(-level.value()).ln_1p() / self.lambda)
    }

    fn true_shortfall(&self, level: RiskLevel) -> Option<f64> {
        // E[(v - X)^+] = v - p / lambda
        let p = level.value();
        let v = self.true_quantile(level)?;
        Some(v - (v - p / self.lambda) / p)
    }
}

fn check_clamp(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::Invalid {
            key: "clamp_epsilon".into(),
            message: format!("{eps} outside (0, 0.5)"),
        })
    }
}

/// A model loaded from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    San(SanModel),
    Exp(ExpModel),
}

impl Model for LossModel {
    fn name(&self) -> &str {
        match self {
            LossModel::San(m) => m.name(),
            LossModel::Exp(m) => m.name(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            LossModel::San(m) => m.dim(),
            LossModel::Exp(m) => m.dim(),
        }
    }

    fn evaluate_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            LossModel::San(m) => m.evaluate_unchecked(u),
            LossModel::Exp(m) => m.evaluate_unchecked(u),
        }
    }

    fn true_quantile(&self, level: RiskLevel) -> Option<f64> {
        match self {
            LossModel::San(m) => m.true_quantile(level),
            LossModel::Exp(m) => m.true_quantile(level),
        }
    }

    fn true_shortfall(&self, level: RiskLevel) -> Option<f64> {
        match self {
            LossModel::San(m) => m.true_shortfall(level),
            LossModel::Exp(m) => m.true_shortfall(level),
        }
    }
}

/// Declarative model description, e.g.
///
/// ```toml
/// kind = "san-15"
/// rates = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1, 1, 1, 1, 1, 1, 1]
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    pub rates: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub clamp_epsilon: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<LossModel> {
        let eps = self.clamp_epsilon.unwrap_or(DEFAULT_CLAMP_EPSILON);
        let unexpected = |key: &str| Error::Invalid {
            key: key.into(),
            message: format!("not allowed for kind `{}`", self.kind),
        };
        match self.kind.as_str() {
            "san-15" => {
                if self.lambda.is_some() {
                    return Err(unexpected("lambda"));
                }
                let rates = match &self.rates {
                    None => default_san_rates(),
                    Some(r) => r.as_slice().try_into().map_err(|_| Error::Invalid {
                        key: "rates".into(),
                        message: format!("expected {SAN_EDGES} rates, found {}", r.len()),
                    })?,
                };
                Ok(LossModel::San(SanModel::new(rates, eps)?))
            }
            "exp" => {
                if self.rates.is_some() {
                    return Err(unexpected("rates"));
                }
                let lambda = self.lambda.ok_or_else(|| Error::Invalid {
                    key: "lambda".into(),
                    message: "required for kind `exp`".into(),
                })?;
                Ok(LossModel::Exp(ExpModel::with_clamp(lambda, eps)?))
            }
            other => Err(Error::Invalid {
                key: "kind".into(),
                message: format!("unknown model kind `{other}` (expected `san-15` or `exp`)"),
            }),
        }
    }
}

/// Parses and validates a model config document.
pub fn load_model(text: &str) -> Result<LossModel> {
    let cfg: ModelConfig = toml::from_str(text).map_err(|e| Error::Parse {
        key: "model config".into(),
        message: e.to_string(),
    })?;
    cfg.build()
}
