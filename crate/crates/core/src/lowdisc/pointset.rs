use std::fmt;
use std::slice::ChunksExact;

use crate::error::{Error, Result};

/// Where a point set came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointMeta {
    pub generator: String,
    pub randomization: String,
    pub seed: Option<u64>,
}

impl PointMeta {
    pub fn new(generator: impl Into<String>) -> Self {
        PointMeta {
            generator: generator.into(),
            randomization: "none".to_string(),
            seed: None,
        }
    }
}

impl fmt::Display for PointMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.generator, self.randomization)?;
        if let Some(seed) = self.seed {
            write!(f, " seed={seed}")?;
        }
        Ok(())
    }
}

/// An ordered batch of `N` points in `[0,1)^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
    start_index: u64,
    meta: PointMeta,
}

impl PointSet {
    /// Builds a point set from row-major coordinates, checking that every
    /// coordinate lies in `[0,1)`.
    pub fn new(dim: usize, coords: Vec<f64>, start_index: u64, meta: PointMeta) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("point dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Precondition(format!(
                "{} coordinates do not form rows of length {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::Domain(format!("coordinate {bad} outside [0,1)")));
        }
        Ok(PointSet {
            coords,
            dim,
            start_index,
            meta,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], meta: PointMeta) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(row) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Precondition(format!(
                "ragged rows: expected {dim} coordinates, found {}",
                row.len()
            )));
        }
        PointSet::new(dim, rows.concat(), 0, meta)
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        coords: Vec<f64>,
        start_index: u64,
        meta: PointMeta,
    ) -> Self {
        debug_assert!(coords.iter().all(|x| (0.0..1.0).contains(x)));
        PointSet {
            coords,
            dim,
            start_index,
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    pub fn meta(&self) -> &PointMeta {
        &self.meta
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// All coordinates, row-major.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first `n` points, keeping the provenance.
    pub fn prefix(&self, n: usize) -> PointSet {
        let n = n.min(self.len());
        PointSet {
            coords: self.coords[..n * self.dim].to_vec(),
            dim: self.dim,
            start_index: self.start_index,
            meta: self.meta.clone(),
        }
    }
}
