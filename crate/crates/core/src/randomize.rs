//! Randomization of base-2 point sets: Owen's nested uniform scrambling
//! and the digital (XOR) shift.
//!
//! Both operate on the `bit_depth`-bit binary expansion of each
//! coordinate. Digit 1 is the most significant bit.
//!
//! Owen scrambling flips digit `k` of a coordinate with a random bit that
//! belongs to the node of the binary digit tree reached by digits
//! `1..k-1`. Node bits are never stored: they come from a keyed hash of
//! `(seed, dimension, node)`. One hash call yields the 63 node bits of a
//! six-level subtree, indexed in heap order from the subtree root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowdisc::{PointMeta, PointSet, MAX_BIT_DEPTH};
use crate::prf::prf;

const SUBTREE_LEVELS: u32 = 6;
const SHIFT_TAG: u64 = 0x5348_4946_545f_5744;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrambleKind {
    None,
    Owen,
    DigitalShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrambleSpec {
    pub kind: ScrambleKind,
    pub seed: u64,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: u32,
}

fn default_bit_depth() -> u32 {
    MAX_BIT_DEPTH
}

impl ScrambleSpec {
    pub fn new(kind: ScrambleKind, seed: u64) -> Self {
        ScrambleSpec {
            kind,
            seed,
            bit_depth: MAX_BIT_DEPTH,
        }
    }

    pub fn owen(seed: u64) -> Self {
        Self::new(ScrambleKind::Owen, seed)
    }

    pub fn digital_shift(seed: u64) -> Self {
        Self::new(ScrambleKind::DigitalShift, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bit_depth == 0 || self.bit_depth > MAX_BIT_DEPTH {
            return Err(Error::Config(format!(
                "bit_depth {} outside [1, {MAX_BIT_DEPTH}]",
                self.bit_depth
            )));
        }
        Ok(())
    }
}

/// Source of the random node bits used by Owen scrambling.
pub trait FlipSource {
    /// Key shared by all nodes of one dimension's digit tree.
    fn dimension_key(&self, dim: usize) -> u64;

    /// Flip bits of the six-level subtree rooted at `node`. The node is the
    /// digit prefix above the subtree with a leading marker bit, so prefixes
    /// of different lengths never collide. Bit `h` belongs to heap position
    /// `h` (root 0, children of `h` at `2h+1` and `2h+2`).
    fn subtree_bits(&self, dim_key: u64, node: u64) -> u64;
}

/// Hash-keyed node bits; the production source.
#[derive(Debug, Clone, Copy)]
pub struct HashFlips {
    seed: u64,
}

impl HashFlips {
    pub fn new(seed: u64) -> Self {
        HashFlips { seed }
    }
}

impl FlipSource for HashFlips {
    fn dimension_key(&self, dim: usize) -> u64 {
        prf(self.seed, dim as u64)
    }

    #[inline]
    fn subtree_bits(&self, dim_key: u64, node: u64) -> u64 {
        prf(dim_key, node)
    }
}

/// Converts a coordinate to its `bits`-bit integer expansion, failing if
/// the coordinate has finer binary digits.
pub fn to_dyadic(x: f64, bits: u32) -> Result<u64> {
    let scaled = x * (bits as f64).exp2();
    if !(0.0..(bits as f64).exp2()).contains(&scaled) || scaled.fract() != 0.0 {
        return Err(Error::Precision {
            value: x,
            bit_depth: bits,
        });
    }
    Ok(scaled as u64)
}

fn from_dyadic(x: u64, bits: u32) -> f64 {
    x as f64 * (-(bits as f64)).exp2()
}

/// Nested scramble of one `bits`-bit coordinate.
#[inline]
pub fn scramble_digits<F: FlipSource + ?Sized>(x: u64, bits: u32, dim_key: u64, flips: &F) -> u64 {
    let mut out = 0u64;
    let mut depth = 0u32;
    while depth < bits {
        let levels = SUBTREE_LEVELS.min(bits - depth);
        let prefix = if depth == 0 { 0 } else { x >> (bits - depth) };
        let node = (1u64 << depth) | prefix;
        let node_bits = flips.subtree_bits(dim_key, node);
        let mut heap = 0u32;
        for level in 0..levels {
            let shift = bits - depth - level - 1;
            let digit = (x >> shift) & 1;
            let flip = (node_bits >> heap) & 1;
            out |= (digit ^ flip) << shift;
            heap = 2 * heap + 1 + digit as u32;
        }
        depth += levels;
    }
    out
}

/// Owen-scrambles `ps` with node bits drawn from `flips`.
pub fn owen_scramble_with<F: FlipSource + ?Sized>(
    ps: &PointSet,
    bit_depth: u32,
    flips: &F,
) -> Result<Vec<f64>> {
    let dim = ps.dim();
    let keys: Vec<u64> = (0..dim).map(|j| flips.dimension_key(j)).collect();
    let mut out = Vec::with_capacity(ps.coords().len());
    for p in ps.iter() {
        for (x, &key) in p.iter().zip(&keys) {
            let digits = to_dyadic(*x, bit_depth)?;
            out.push(from_dyadic(scramble_digits(digits, bit_depth, key, flips), bit_depth));
        }
    }
    Ok(out)
}

fn relabel(ps: &PointSet, coords: Vec<f64>, spec: &ScrambleSpec, label: &str) -> PointSet {
    let meta = PointMeta {
        generator: ps.meta().generator.clone(),
        randomization: label.to_string(),
        seed: Some(spec.seed),
    };
    PointSet::from_parts_unchecked(ps.dim(), coords, ps.start_index(), meta)
}

/// Owen nested uniform scrambling of a base-2 point set.
pub fn owen_scramble(ps: &PointSet, spec: &ScrambleSpec) -> Result<PointSet> {
    spec.validate()?;
    if spec.kind != ScrambleKind::Owen {
        return Err(Error::Config(format!(
            "owen_scramble called with kind {:?}",
            spec.kind
        )));
    }
    let coords = owen_scramble_with(ps, spec.bit_depth, &HashFlips::new(spec.seed))?;
    Ok(relabel(ps, coords, spec, "owen"))
}

/// Per-dimension shift words derived from the seed.
pub fn shift_words(seed: u64, dim: usize, bit_depth: u32) -> Vec<u64> {
    let mask = (1u64 << bit_depth) - 1;
    (0..dim)
        .map(|j| prf(seed ^ SHIFT_TAG, j as u64) & mask)
        .collect()
}

/// XORs coordinate `j` of every point with `words[j]`.
pub fn digital_shift_with_words(ps: &PointSet, words: &[u64], bit_depth: u32) -> Result<Vec<f64>> {
    if words.len() != ps.dim() {
        return Err(Error::UnsupportedDimension {
            expected: ps.dim(),
            got: words.len(),
        });
    }
    let mut out = Vec::with_capacity(ps.coords().len());
    for p in ps.iter() {
        for (x, w) in p.iter().zip(words) {
            out.push(from_dyadic(to_dyadic(*x, bit_depth)? ^ w, bit_depth));
        }
    }
    Ok(out)
}

pub fn digital_shift(ps: &PointSet, spec: &ScrambleSpec) -> Result<PointSet> {
    spec.validate()?;
    if spec.kind != ScrambleKind::DigitalShift {
        return Err(Error::Config(format!(
            "digital_shift called with kind {:?}",
            spec.kind
        )));
    }
    let words = shift_words(spec.seed, ps.dim(), spec.bit_depth);
    let coords = digital_shift_with_words(ps, &words, spec.bit_depth)?;
    Ok(relabel(ps, coords, spec, "digital-shift"))
}

/// Applies whichever randomization `spec` names.
pub fn randomize(ps: &PointSet, spec: &ScrambleSpec) -> Result<PointSet> {
    match spec.kind {
        ScrambleKind::None => Ok(ps.clone()),
        ScrambleKind::Owen => owen_scramble(ps, spec),
        ScrambleKind::DigitalShift => digital_shift(ps, spec),
    }
}
