use crate::error::{Error, Result};
use crate::lowdisc::pointset::PointSet;

/// Exact star discrepancy of a one-dimensional point set:
/// `max_i max(i/N - x_(i), x_(i) - (i-1)/N)` over the sorted points.
pub fn star_discrepancy_1d(ps: &PointSet) -> Result<f64> {
    if ps.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            expected: 1,
            got: ps.dim(),
        });
    }
    if ps.is_empty() {
        return Err(Error::Precondition("star discrepancy of an empty set".into()));
    }
    let mut xs = ps.coords().to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max))
}
