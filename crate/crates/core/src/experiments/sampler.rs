use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::estimators::{estimate, RiskEstimate, RiskLevel, SampleBatch};
use crate::lowdisc::{DirectionNumbers, PointMeta, PointSet, Sobol};
use crate::models::{evaluate_points, Model};
use crate::prf::child_seed;
use crate::randomize::{randomize, ScrambleKind, ScrambleSpec};

/// How the input points of one estimation run are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    /// Pseudorandom uniforms.
    Mc,
    /// The first `N` unrandomized Sobol' points.
    QmcSobol,
    /// Owen-scrambled Sobol' points.
    RqmcOwen,
    /// Digitally shifted Sobol' points.
    RqmcShift,
}

impl Sampler {
    pub const ALL: [Sampler; 4] = [
        Sampler::Mc,
        Sampler::QmcSobol,
        Sampler::RqmcOwen,
        Sampler::RqmcShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sampler::Mc => "mc",
            Sampler::QmcSobol => "qmc-sobol",
            Sampler::RqmcOwen => "rqmc-owen",
            Sampler::RqmcShift => "rqmc-shift",
        }
    }

    pub fn is_randomized(self) -> bool {
        self != Sampler::QmcSobol
    }

    /// Randomization applied on top of the Sobol' points, if any.
    pub fn scramble_kind(self) -> Option<ScrambleKind> {
        match self {
            Sampler::Mc => None,
            Sampler::QmcSobol => Some(ScrambleKind::None),
            Sampler::RqmcOwen => Some(ScrambleKind::Owen),
            Sampler::RqmcShift => Some(ScrambleKind::DigitalShift),
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Sampler::Mc => 1,
            Sampler::QmcSobol => 2,
            Sampler::RqmcOwen => 3,
            Sampler::RqmcShift => 4,
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Sampler::Mc),
            "qmc-sobol" | "sobol" => Ok(Sampler::QmcSobol),
            "rqmc-owen" | "owen" => Ok(Sampler::RqmcOwen),
            "rqmc-shift" | "shift" => Ok(Sampler::RqmcShift),
            other => Err(Error::Invalid {
                key: "sampler".into(),
                message: format!(
                    "unknown sampler `{other}` (expected mc, qmc-sobol, rqmc-owen or rqmc-shift)"
                ),
            }),
        }
    }
}

impl<'de> Deserialize<'de> for Sampler {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Counter-based generator for stream `(seed, tag, a, b)`.
pub(crate) fn keyed_rng(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, tag, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `n * dim` pseudorandom uniforms on `[0,1)` for replication `r`. The
/// stream is keyed by `(seed, sampler, n, r)`, so every cell of a study
/// can be regenerated on its own.
pub fn mc_points(dim: usize, n: usize, seed: u64, replication: u64) -> PointSet {
    let mut rng = keyed_rng(seed, Sampler::Mc.stream_tag(), n as u64, replication);
    let coords = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    let meta = PointMeta {
        generator: "chacha8".into(),
        randomization: "pseudorandom".into(),
        seed: Some(seed),
    };
    PointSet::new(dim, coords, 0, meta).expect("uniforms lie in [0,1)")
}

/// Randomizes Sobol' points for replication `r` of a study seeded with
/// `seed`; the child seed is `child_seed(seed, r)`.
pub fn randomize_for(sampler: Sampler, sobol: &PointSet, seed: u64, replication: u64) -> Result<PointSet> {
    match sampler.scramble_kind() {
        Some(ScrambleKind::None) => Ok(sobol.clone()),
        Some(kind) => randomize(sobol, &ScrambleSpec::new(kind, child_seed(seed, replication))),
        None => Err(Error::Config("mc sampler does not randomize Sobol' points".into())),
    }
}

/// Input points for one run of `sampler`.
pub fn points(sampler: Sampler, dim: usize, n: usize, seed: u64, replication: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::Config("point count must be positive".into()));
    }
    match sampler {
        Sampler::Mc => Ok(mc_points(dim, n, seed, replication)),
        _ => {
            let sobol = Sobol::new(DirectionNumbers::joe_kuo(), dim)?.generate(0, n)?;
            randomize_for(sampler, &sobol, seed, replication)
        }
    }
}

/// One estimation run: points, model outputs, quantile and shortfall.
pub fn estimate_once(
    model: &dyn Model,
    sampler: Sampler,
    n: usize,
    seed: u64,
    level: RiskLevel,
) -> Result<RiskEstimate> {
    let ps = points(sampler, model.dim(), n, seed, 0)?;
    let batch = SampleBatch::new(evaluate_points(model, &ps)?, sampler.name())?;
    Ok(estimate(&batch, level))
}
