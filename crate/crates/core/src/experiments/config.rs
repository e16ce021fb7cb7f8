use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::RiskLevel;
use crate::experiments::sampler::Sampler;
use crate::experiments::truth::mc_truth;
use crate::models::{Model, ModelConfig};

pub const DEFAULT_LEVEL: f64 = 0.1;
pub const DEFAULT_REPLICATIONS: usize = 100;

/// `2^8 .. 2^16`: desk-scale grid.
pub fn default_grid() -> Vec<usize> {
    (8..=16).map(|m| 1usize << m).collect()
}

/// `2^8 .. 2^20`.
pub fn full_grid() -> Vec<usize> {
    (8..=20).map(|m| 1usize << m).collect()
}

/// Reference values the estimates are scored against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthValues {
    pub quantile: f64,
    pub shortfall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthSource {
    Explicit(TruthValues),
    /// Large-sample pseudorandom estimate.
    MonteCarlo { n: u64, seed: u64 },
    /// The model's closed-form truth.
    ClosedForm,
}

impl TruthSource {
    pub fn resolve(&self, model: &dyn Model, level: RiskLevel) -> Result<TruthValues> {
        match *self {
            TruthSource::Explicit(t) => Ok(t),
            TruthSource::MonteCarlo { n, seed } => {
                let t = mc_truth(model, level, n, seed)?;
                Ok(TruthValues {
                    quantile: t.quantile,
                    shortfall: t.shortfall,
                })
            }
            TruthSource::ClosedForm => {
                match (model.true_quantile(level), model.true_shortfall(level)) {
                    (Some(quantile), Some(shortfall)) => Ok(TruthValues {
                        quantile,
                        shortfall,
                    }),
                    _ => Err(Error::Invalid {
                        key: "truth".into(),
                        message: format!(
                            "model `{}` has no closed-form truth; give explicit values or oracle = \"mc\"",
                            model.name()
                        ),
                    }),
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruth {
    quantile: Option<f64>,
    shortfall: Option<f64>,
    oracle: Option<String>,
    n: Option<u64>,
    seed: Option<u64>,
}

impl RawTruth {
    fn into_source(self) -> Result<TruthSource> {
        let invalid = |message: &str| Error::Invalid {
            key: "truth".into(),
            message: message.into(),
        };
        match (self.oracle.as_deref(), self.quantile, self.shortfall) {
            (None, Some(quantile), Some(shortfall)) => {
                if self.n.is_some() || self.seed.is_some() {
                    return Err(invalid("`n` and `seed` only apply to oracle = \"mc\""));
                }
                Ok(TruthSource::Explicit(TruthValues {
                    quantile,
                    shortfall,
                }))
            }
            (None, _, _) => Err(invalid("explicit truth needs both `quantile` and `shortfall`")),
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(invalid("give either explicit values or an oracle, not both"))
            }
            (Some("mc"), None, None) => Ok(TruthSource::MonteCarlo {
                n: self.n.ok_or_else(|| invalid("oracle = \"mc\" needs `n`"))?,
                seed: self.seed.unwrap_or(0),
            }),
            (Some("closed-form"), None, None) => Ok(TruthSource::ClosedForm),
            (Some(other), None, None) => Err(invalid(&format!(
                "unknown oracle `{other}` (expected \"mc\" or \"closed-form\")"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    model: ModelConfig,
    level: Option<f64>,
    samplers: Option<Vec<Sampler>>,
    n_grid: Option<Vec<usize>>,
    replications: Option<usize>,
    master_seed: Option<u64>,
    truth: Option<RawTruth>,
}

/// A replicated convergence study.
///
/// ```toml
/// level = 0.1
/// samplers = ["mc", "qmc-sobol", "rqmc-owen"]
/// n_grid = [256, 512, 1024]
/// replications = 100
/// master_seed = 1
///
/// [model]
/// kind = "san-15"
///
/// [truth]
/// quantile = 2.5446
/// shortfall = 2.1596
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub level: RiskLevel,
    pub samplers: Vec<Sampler>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub truth: TruthSource,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawExperiment = toml::from_str(text).map_err(|e| Error::Parse {
            key: "experiment config".into(),
            message: e.to_string(),
        })?;
        let cfg = ExperimentConfig {
            model: raw.model,
            level: RiskLevel::new(raw.level.unwrap_or(DEFAULT_LEVEL)).map_err(|e| Error::Invalid {
                key: "level".into(),
                message: e.to_string(),
            })?,
            samplers: raw
                .samplers
                .unwrap_or_else(|| vec![Sampler::Mc, Sampler::QmcSobol, Sampler::RqmcOwen]),
            n_grid: raw.n_grid.unwrap_or_else(default_grid),
            replications: raw.replications.unwrap_or(DEFAULT_REPLICATIONS),
            master_seed: raw.master_seed.unwrap_or(0),
            truth: raw
                .truth
                .map(RawTruth::into_source)
                .transpose()?
                .unwrap_or(TruthSource::ClosedForm),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |key: &str, message: String| {
            Err(Error::Invalid {
                key: key.into(),
                message,
            })
        };
        if self.samplers.is_empty() {
            return invalid("samplers", "at least one sampler is required".into());
        }
        for (i, s) in self.samplers.iter().enumerate() {
            if self.samplers[..i].contains(s) {
                return invalid("samplers", format!("`{s}` listed twice"));
            }
        }
        if self.n_grid.is_empty() {
            return invalid("n_grid", "grid is empty".into());
        }
        if let Some(n) = self.n_grid.iter().find(|n| !n.is_power_of_two()) {
            return invalid("n_grid", format!("{n} is not a power of 2"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_grid", "grid must be strictly ascending".into());
        }
        if self.replications == 0 {
            return invalid("replications", "must be at least 1".into());
        }
        Ok(())
    }

    /// Replications actually run for `sampler`; deterministic QMC runs once.
    pub fn replications_for(&self, sampler: Sampler) -> usize {
        if sampler.is_randomized() {
            self.replications
        } else {
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ExpModel;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_toml("[model]\nkind = \"exp\"\nlambda = 1.0\n").unwrap();
        assert_eq!(cfg.level.value(), 0.1);
        assert_eq!(cfg.replications, 100);
        assert_eq!(cfg.n_grid, default_grid());
        assert_eq!(cfg.truth, TruthSource::ClosedForm);
        assert_eq!(cfg.replications_for(Sampler::QmcSobol), 1);
        assert_eq!(cfg.replications_for(Sampler::RqmcOwen), 100);
    }

    #[test]
    fn full_document() {
        let text = r#"
level = 0.05
samplers = ["mc", "owen"]
n_grid = [16, 32, 64]
replications = 7
master_seed = 12

[model]
kind = "san-15"

[truth]
oracle = "mc"
n = 1000000
seed = 4
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.samplers, vec![Sampler::Mc, Sampler::RqmcOwen]);
        assert_eq!(cfg.truth, TruthSource::MonteCarlo { n: 1_000_000, seed: 4 });
        assert_eq!(cfg.master_seed, 12);
    }

    #[test]
    fn rejects_bad_fields() {
        let base = "[model]\nkind = \"exp\"\nlambda = 1.0\n";
        for (prefix, key) in [
            ("n_grid = [16, 8]\n", "n_grid"),
            ("n_grid = [10, 20, 40]\n", "n_grid"),
            ("replications = 0\n", "replications"),
            ("samplers = []\n", "samplers"),
            ("samplers = [\"mc\", \"mc\"]\n", "samplers"),
            ("level = 1.5\n", "level"),
        ] {
            match ExperimentConfig::from_toml(&format!("{prefix}{base}")) {
                Err(Error::Invalid { key: k, .. }) => assert_eq!(k, key, "{prefix}"),
                other => panic!("{prefix}: {other:?}"),
            }
        }
        assert!(ExperimentConfig::from_toml(&format!("samplers = [\"lhs\"]\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{base}")).is_err());
        let both = format!("{base}[truth]\nquantile = 1.0\nshortfall = 0.5\noracle = \"mc\"\n");
        assert!(ExperimentConfig::from_toml(&both).is_err());
    }

    #[test]
    fn closed_form_truth_requires_model_support() {
        let level = RiskLevel::new(0.1).unwrap();
        let exp = ExpModel::new(1.0).unwrap();
        let t = TruthSource::ClosedForm.resolve(&exp, level).unwrap();
        assert_eq!(t.quantile, exp.true_quantile(level).unwrap());
        let san = crate::models::SanModel::default();
        assert!(TruthSource::ClosedForm.resolve(&san, level).is_err());
    }
}
