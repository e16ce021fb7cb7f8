//! Exhaustive `(t,m,d)`-net verification by counting points in every
//! elementary interval of volume `b^(t-m)`.

use crate::error::{Error, Result};
use crate::lowdisc::pointset::PointSet;

/// Upper bound on `shapes * points` accepted by [`is_net`].
pub const MAX_CELL_INCREMENTS: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetParams {
    pub t: u32,
    pub m: u32,
    pub d: usize,
    pub b: u32,
}

impl NetParams {
    pub fn new(t: u32, m: u32, d: usize, b: u32) -> Result<Self> {
        if t > m {
            return Err(Error::Config(format!("t = {t} exceeds m = {m}")));
        }
        if d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        if b < 2 {
            return Err(Error::Config(format!("base {b} < 2")));
        }
        Ok(NetParams { t, m, d, b })
    }

    pub fn point_count(&self) -> Option<u64> {
        u64::from(self.b).checked_pow(self.m)
    }
}

/// An elementary interval `prod_j [cell_j / b^shape_j, (cell_j + 1) / b^shape_j)`
/// together with how many points it held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub base: u32,
    pub shape: Vec<u32>,
    pub cell: Vec<u64>,
    pub count: u64,
    pub expected: u64,
}

impl Witness {
    /// Per-dimension half-open bounds `[lo, hi)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.shape
            .iter()
            .zip(&self.cell)
            .map(|(&k, &c)| {
                let width = f64::from(self.base).powi(-(k as i32));
                (c as f64 * width, (c + 1) as f64 * width)
            })
            .collect()
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let boxes: Vec<String> = self
            .bounds()
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi})"))
            .collect();
        write!(
            f,
            "{} holds {} points, expected {}",
            boxes.join(" x "),
            self.count,
            self.expected
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetCheck {
    Pass,
    Fail(Witness),
}

impl NetCheck {
    pub fn passed(&self) -> bool {
        matches!(self, NetCheck::Pass)
    }
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers,
/// in lexicographic order.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Cell index of `x` in the partition of `[0,1)` into `b^k` equal pieces.
fn digit_cell(x: f64, cells: u64) -> u64 {
    ((x * cells as f64) as u64).min(cells - 1)
}

/// Checks whether `ps` is a `(t,m,d)`-net in base `b`.
///
/// Every shape `(k_1..k_d)` with `sum k_j = m - t` is enumerated and each
/// of its `b^(m-t)` cells must hold exactly `b^t` points. On failure the
/// first offending interval (shapes and cells in lexicographic order) is
/// returned.
pub fn is_net(ps: &PointSet, params: NetParams) -> Result<NetCheck> {
    let n = params.point_count().ok_or_else(|| {
        Error::Precondition(format!("{}^{} points overflow", params.b, params.m))
    })?;
    if ps.len() as u64 != n {
        return Err(Error::Precondition(format!(
            "a ({}, {}, {})-net in base {} needs {n} points, got {}",
            params.t,
            params.m,
            params.d,
            params.b,
            ps.len()
        )));
    }
    if ps.dim() != params.d {
        return Err(Error::UnsupportedDimension {
            expected: params.d,
            got: ps.dim(),
        });
    }
    let depth = params.m - params.t;
    let shapes = binomial(u64::from(depth) + params.d as u64 - 1, params.d as u64 - 1);
    let estimate = shapes * u128::from(n);
    if estimate > MAX_CELL_INCREMENTS {
        return Err(Error::TooMuchWork {
            estimate,
            limit: MAX_CELL_INCREMENTS,
        });
    }

    let b = u64::from(params.b);
    let expected = b.pow(params.t);
    let mut counts = vec![0u64; b.pow(depth) as usize];
    for shape in compositions(depth, params.d) {
        let radices: Vec<u64> = shape.iter().map(|&k| b.pow(k)).collect();
        counts.iter_mut().for_each(|c| *c = 0);
        for p in ps.iter() {
            let idx = p
                .iter()
                .zip(&radices)
                .fold(0u64, |acc, (&x, &r)| acc * r + digit_cell(x, r));
            counts[idx as usize] += 1;
        }
        if let Some((idx, &count)) = counts.iter().enumerate().find(|(_, &c)| c != expected) {
            let mut rest = idx as u64;
            let mut cell = vec![0u64; params.d];
            for j in (0..params.d).rev() {
                cell[j] = rest % radices[j];
                rest /= radices[j];
            }
            return Ok(NetCheck::Fail(Witness {
                base: params.b,
                shape,
                cell,
                count,
                expected,
            }));
        }
    }
    Ok(NetCheck::Pass)
}

/// Smallest `t` for which the `b^m` points of `ps` form a `(t,m,d)`-net.
/// Terminates because every point set of `b^m` points is an `(m,m,d)`-net.
pub fn t_value(ps: &PointSet, m: u32, b: u32) -> Result<u32> {
    for t in 0..=m {
        if is_net(ps, NetParams::new(t, m, ps.dim(), b)?)?.passed() {
            return Ok(t);
        }
    }
    unreachable!("t = m always passes")
}
