use crate::error::{Error, Result};
use crate::lowdisc::direction::DirectionNumbers;
use crate::lowdisc::pointset::{PointMeta, PointSet};

/// Base-`b` digit reversal of `i`: `sum_k digit_k(i) * b^(-k-1)`.
pub fn radical_inverse(i: u64, base: u32) -> f64 {
    assert!(base >= 2, "radical inverse needs base >= 2");
    if base == 2 {
        // Exact: 53 reversed bits fit the mantissa; deeper digits drop out.
        return (i.reverse_bits() >> 11) as f64 * f64::EPSILON / 2.0;
    }
    let b = u64::from(base);
    let mut digits = Vec::with_capacity(64);
    let mut rest = i;
    while rest > 0 {
        digits.push(rest % b);
        rest /= b;
    }
    let inv = 1.0 / f64::from(base);
    let mut value = 0.0;
    for &d in digits.iter().rev() {
        value = (value + d as f64) * inv;
    }
    // Deep expansions in odd bases can round up to 1.
    value.min(1.0 - f64::EPSILON / 2.0)
}

/// Base-2 Sobol' generator over a fixed number of dimensions, producing
/// points in natural (not Gray-code) index order.
#[derive(Debug, Clone)]
pub struct Sobol {
    dim: usize,
    bit_depth: u32,
    /// `directions[j][k]` is `v_{k+1}` of dimension `j`.
    directions: Vec<Vec<u64>>,
    /// `carry[j][c] = v_1 ^ ... ^ v_{c+1}`: what changes when an index with
    /// `c` trailing zeros is reached by incrementing.
    carry: Vec<Vec<u64>>,
}

impl Sobol {
    pub fn new(dir: &DirectionNumbers, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if dim > dir.max_dim() {
            return Err(Error::Config(format!(
                "dimension {dim} exceeds direction-number table ({} dimensions)",
                dir.max_dim()
            )));
        }
        let directions = (0..dim)
            .map(|j| dir.directions(j))
            .collect::<Result<Vec<_>>>()?;
        let carry = directions
            .iter()
            .map(|v| {
                v.iter()
                    .scan(0u64, |acc, &vk| {
                        *acc ^= vk;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Sobol {
            dim,
            bit_depth: dir.bit_depth(),
            directions,
            carry,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    /// Number of distinct indices the generator supports (`2^bit_depth`).
    pub fn capacity(&self) -> u64 {
        1u64 << self.bit_depth
    }

    /// Integer coordinates of point `index`, scaled by `2^bit_depth`.
    pub fn integer_point(&self, index: u64, out: &mut [u64]) {
        debug_assert_eq!(out.len(), self.dim);
        for (x, v) in out.iter_mut().zip(&self.directions) {
            let mut acc = 0u64;
            let mut rest = index;
            let mut k = 0;
            while rest != 0 {
                if rest & 1 == 1 {
                    acc ^= v[k];
                }
                rest >>= 1;
                k += 1;
            }
            *x = acc;
        }
    }

    /// Integer coordinates of points `start .. start + n`, row-major.
    pub fn integer_points(&self, start: u64, n: usize) -> Result<Vec<u64>> {
        let end = start
            .checked_add(n as u64)
            .filter(|&e| e <= self.capacity())
            .ok_or_else(|| {
                Error::Config(format!(
                    "indices {start}..{start}+{n} exceed 2^{} points",
                    self.bit_depth
                ))
            })?;
        let mut out = vec![0u64; n * self.dim];
        if n == 0 {
            return Ok(out);
        }
        let mut current = vec![0u64; self.dim];
        self.integer_point(start, &mut current);
        out[..self.dim].copy_from_slice(&current);
        for (row, index) in (start + 1..end).enumerate() {
            let c = index.trailing_zeros() as usize;
            for (x, carry) in current.iter_mut().zip(&self.carry) {
                *x ^= carry[c];
            }
            out[(row + 1) * self.dim..(row + 2) * self.dim].copy_from_slice(&current);
        }
        Ok(out)
    }

    pub fn generate(&self, start: u64, n: usize) -> Result<PointSet> {
        let scale = (-(self.bit_depth as i32) as f64).exp2();
        let coords = self
            .integer_points(start, n)?
            .into_iter()
            .map(|x| x as f64 * scale)
            .collect();
        Ok(PointSet::from_parts_unchecked(
            self.dim,
            coords,
            start,
            PointMeta::new("sobol"),
        ))
    }
}

/// Points `start_index .. start_index + n` of the `d`-dimensional Sobol'
/// sequence built from `dir`.
pub fn sobol_generate(
    dir: &DirectionNumbers,
    d: usize,
    n: usize,
    start_index: u64,
) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::Config("point count must be positive".into()));
    }
    Sobol::new(dir, d)?.generate(start_index, n)
}

/// The first `n` base-2 van der Corput points as a one-dimensional set.
pub fn van_der_corput(n: usize) -> PointSet {
    let coords = (0..n as u64).map(|i| radical_inverse(i, 2)).collect();
    PointSet::from_parts_unchecked(1, coords, 0, PointMeta::new("van-der-corput"))
}
