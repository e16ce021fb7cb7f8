//! Reference quantile and shortfall from a very large Monte Carlo sample,
//! computed in two streaming passes without holding the sample in memory.
//!
//! Pass 1 histograms the outputs and locates the bin holding rank
//! `ceil(pN)`. Pass 2 regenerates the same stream, keeps only the values
//! inside that bin, selects the exact order statistic among them and
//! accumulates the shortfall sums for everything below.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::RiskLevel;
use crate::experiments::sampler::keyed_rng;
use crate::models::Model;

const TRUTH_TAG: u64 = 0x0054_5255_5448;

/// Smallest sample [`mc_truth`] accepts as a reference.
pub const MIN_TRUTH_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthOptions {
    /// Model evaluations per independently seeded block.
    pub block_size: usize,
    /// Histogram bins between the pilot minimum and maximum.
    pub bins: usize,
    /// Most bracket values pass 2 may hold before the histogram is refined.
    pub max_bracket: usize,
}

impl Default for TruthOptions {
    fn default() -> Self {
        TruthOptions {
            block_size: 1 << 16,
            bins: 1 << 16,
            max_bracket: 1 << 24,
        }
    }
}

/// Large-sample estimates with asymptotic standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEstimate {
    pub quantile: f64,
    pub shortfall: f64,
    pub quantile_stderr: f64,
    pub shortfall_stderr: f64,
    pub n: u64,
}

struct Stream<'a> {
    model: &'a dyn Model,
    seed: u64,
    n: u64,
    block_size: usize,
}

impl Stream<'_> {
    fn blocks(&self) -> u64 {
        self.n.div_ceil(self.block_size as u64)
    }

    fn block(&self, b: u64, u: &mut [f64], out: &mut Vec<f64>) {
        let start = b * self.block_size as u64;
        let len = (self.n - start).min(self.block_size as u64) as usize;
        let mut rng = keyed_rng(self.seed, TRUTH_TAG, b, 0);
        out.clear();
        for _ in 0..len {
            u.iter_mut().for_each(|x| *x = rng.gen::<f64>());
            out.push(self.model.evaluate_unchecked(u));
        }
    }

    fn map_blocks<T: Send>(&self, f: impl Fn(&[f64]) -> T + Sync + Send) -> Vec<T> {
        (0..self.blocks())
            .into_par_iter()
            .map_init(
                || (vec![0.0; self.model.dim()], Vec::with_capacity(self.block_size)),
                |(u, values), b| {
                    self.block(b, u, values);
                    f(values)
                },
            )
            .collect()
    }
}

/// Equal-width bins on `[lo, hi)` plus one underflow and one overflow bin.
#[derive(Debug, Clone)]
struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    min: f64,
    max: f64,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram {
            lo,
            hi,
            counts: vec![0; bins + 2],
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn bins(&self) -> usize {
        self.counts.len() - 2
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    fn slot(&self, x: f64) -> usize {
        if x < self.lo {
            0
        } else if x >= self.hi {
            self.counts.len() - 1
        } else {
            1 + (((x - self.lo) / self.width()) as usize).min(self.bins() - 1)
        }
    }

    /// Half-open value range `[a, b)` of a slot.
    fn range(&self, slot: usize) -> (f64, f64) {
        if slot == 0 {
            (f64::NEG_INFINITY, self.lo)
        } else if slot == self.counts.len() - 1 {
            (self.hi, f64::INFINITY)
        } else {
            let a = self.lo + (slot - 1) as f64 * self.width();
            let b = if slot == self.bins() {
                self.hi
            } else {
                self.lo + slot as f64 * self.width()
            };
            (a, b)
        }
    }

    fn add(&mut self, values: &[f64]) {
        for &x in values {
            let s = self.slot(x);
            self.counts[s] += 1;
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Slot containing the `k`-th smallest value and the count below it.
    fn locate(&self, k: u64) -> (usize, u64) {
        let mut below = 0u64;
        for (slot, &c) in self.counts.iter().enumerate() {
            if below + c >= k {
                return (slot, below);
            }
            below += c;
        }
        unreachable!("rank {k} beyond histogram total {below}")
    }

    /// Density near `x` from a symmetric window of bins holding at least
    /// `target` points.
    fn density(&self, x: f64, total: u64, target: u64) -> f64 {
        let center = self.slot(x).clamp(1, self.bins());
        let mut half = 0usize;
        loop {
            let lo = center.saturating_sub(half).max(1);
            let hi = (center + half).min(self.bins());
            let count: u64 = self.counts[lo..=hi].iter().sum();
            let full = lo == 1 && hi == self.bins();
            if count >= target || full {
                let width = (hi - lo + 1) as f64 * self.width();
                return count as f64 / (total as f64 * width);
            }
            half = (half * 2).max(1);
        }
    }
}

#[derive(Debug, Clone, Default)]
struct BlockTail {
    below: u64,
    /// Sums of `a - x` and `(a - x)^2` over values below the bracket edge `a`.
    gap: f64,
    gap_sq: f64,
    bracket: Vec<f64>,
}

/// Pseudorandom-sample estimates of the `p`-quantile and expected
/// shortfall of `model` from `n_truth >= MIN_TRUTH_SAMPLES` evaluations.
pub fn mc_truth(model: &dyn Model, level: RiskLevel, n_truth: u64, seed: u64) -> Result<TruthEstimate> {
    if n_truth < MIN_TRUTH_SAMPLES {
        return Err(Error::Precondition(format!(
            "truth sample size {n_truth} is below {MIN_TRUTH_SAMPLES}"
        )));
    }
    mc_truth_with(model, level, n_truth, seed, TruthOptions::default())
}

pub fn mc_truth_with(
    model: &dyn Model,
    level: RiskLevel,
    n_truth: u64,
    seed: u64,
    opts: TruthOptions,
) -> Result<TruthEstimate> {
    if n_truth == 0 {
        return Err(Error::Precondition("truth sample size must be positive".into()));
    }
    if opts.block_size == 0 || opts.bins == 0 {
        return Err(Error::Config("block size and bin count must be positive".into()));
    }
    let stream = Stream {
        model,
        seed,
        n: n_truth,
        block_size: opts.block_size,
    };
    let k = level.rank(usize::try_from(n_truth).map_err(|_| {
        Error::Config(format!("truth sample size {n_truth} exceeds address space"))
    })?) as u64;

    // Pilot range from the first block.
    let mut pilot = Vec::new();
    stream.block(0, &mut vec![0.0; model.dim()], &mut pilot);
    let (mut lo, mut hi) = pilot
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi <= lo {
        hi = lo + 1.0;
    }
    let mut bins = opts.bins;

    let mut attempt = 0;
    let (hist, slot, below_slot) = loop {
        let hist = stream
            .map_blocks(|values| {
                let mut h = Histogram::new(lo, hi, bins);
                h.add(values);
                h
            })
            .iter()
            .fold(Histogram::new(lo, hi, bins), |mut acc, h| {
                acc.merge(h);
                acc
            });
        let (slot, below) = hist.locate(k);
        if hist.counts[slot] as usize <= opts.max_bracket {
            break (hist, slot, below);
        }
        if attempt == 1 {
            return Err(Error::Resource(format!(
                "quantile bracket still holds {} values after refining (limit {})",
                hist.counts[slot], opts.max_bracket
            )));
        }
        attempt += 1;
        let (a, b) = hist.range(slot);
        lo = a.max(hist.min);
        hi = b.min(hist.max);
        if hi <= lo {
            // Bracket is a single repeated value.
            hi = lo + f64::EPSILON * lo.abs().max(1.0);
        }
        let crowd = hist.counts[slot] as usize;
        bins = (bins * 16).max(crowd.div_ceil(opts.max_bracket) * 16);
    };

    let (a, b) = hist.range(slot);
    let tails = stream.map_blocks(|values| {
        let mut t = BlockTail::default();
        for &x in values {
            if x < a {
                t.below += 1;
                let g = a - x;
                t.gap += g;
                t.gap_sq += g * g;
            } else if x < b {
                t.bracket.push(x);
            }
        }
        t
    });
    let mut below = 0u64;
    let mut gap = 0.0;
    let mut gap_sq = 0.0;
    let mut bracket = Vec::with_capacity(hist.counts[slot] as usize);
    for t in tails {
        below += t.below;
        gap += t.gap;
        gap_sq += t.gap_sq;
        bracket.extend_from_slice(&t.bracket);
    }
    debug_assert_eq!(below, below_slot);
    let within = (k - below) as usize;
    let (_, v, _) = bracket.select_nth_unstable_by(within - 1, f64::total_cmp);
    let v = *v;

    // Sum of (v - X)^+ and its square over the whole sample.
    let (mut s1, mut s2) = if below > 0 {
        let d = v - a;
        (
            below as f64 * d + gap,
            below as f64 * d * d + 2.0 * d * gap + gap_sq,
        )
    } else {
        (0.0, 0.0)
    };
    for &x in bracket.iter().filter(|&&x| x < v) {
        s1 += v - x;
        s2 += (v - x) * (v - x);
    }

    let p = level.value();
    let n = n_truth as f64;
    let shortfall = v - s1 / (p * n);
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let shortfall_stderr = (var / n).sqrt() / p;

    let target = (n_truth / 100).clamp(100, 10_000);
    let density = hist.density(v, n_truth, target);
    let quantile_stderr = if density > 0.0 {
        (p * (1.0 - p) / n).sqrt() / density
    } else {
        f64::INFINITY
    };

    Ok(TruthEstimate {
        quantile: v,
        shortfall,
        quantile_stderr,
        shortfall_stderr,
        n: n_truth,
    })
}
