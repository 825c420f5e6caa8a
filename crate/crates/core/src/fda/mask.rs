use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};

/// Grid-resolution observation mask of one univariate curve.
///
/// `true` marks a grid point in the observed domain; the complement is the
/// missing domain. A mask always has at least one observed point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<bool>", into = "Vec<bool>")]
pub struct DomainMask {
    observed: Vec<bool>,
}

impl DomainMask {
    pub fn new(observed: Vec<bool>) -> Result<Self> {
        if !observed.iter().any(|&o| o) {
            return Err(FggmError::EmptyDomain(format!(
                "mask over {} grid points has no observed point",
                observed.len()
            )));
        }
        Ok(DomainMask { observed })
    }

    pub fn full(d: usize) -> Self {
        DomainMask {
            observed: vec![true; d],
        }
    }

    /// Fully observed mask with `width` consecutive points removed from `start`.
    pub fn with_gap(d: usize, start: usize, width: usize) -> Result<Self> {
        if start + width > d {
            return Err(FggmError::InvalidParameter(format!(
                "gap [{start}, {}) exceeds grid of {d} points",
                start + width
            )));
        }
        let mut observed = vec![true; d];
        observed[start..start + width].fill(false);
        DomainMask::new(observed)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_observed(&self, k: usize) -> bool {
        self.observed[k]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_full(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn n_missing(&self) -> usize {
        self.len() - self.n_observed()
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.observed[k]).collect()
    }

    pub fn missing_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.observed[k]).collect()
    }

    /// Maximal runs of consecutive observed grid points.
    pub fn runs(&self) -> Vec<Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (k, &o) in self.observed.iter().enumerate() {
            match (o, start) {
                (true, None) => start = Some(k),
                (false, Some(s)) => {
                    runs.push(s..k);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.len());
        }
        runs
    }
}

impl TryFrom<Vec<bool>> for DomainMask {
    type Error = FggmError;

    fn try_from(v: Vec<bool>) -> Result<Self> {
        DomainMask::new(v)
    }
}

impl From<DomainMask> for Vec<bool> {
    fn from(m: DomainMask) -> Self {
        m.observed
    }
}
