use alloc::vec::Vec;

use crate::{Error, Result, MAX_MARK_DIM};

/// A realized marked point process on `[0, horizon]`: strictly increasing
/// event times `0 < T_1 < T_2 < … ≤ horizon` with `ℝ^d` marks.
#[derive(Debug, Clone, PartialEq)]
pub struct MppPath {
    times: Vec<f64>,
    /// Flattened row-major marks, `mark_dim` values per event.
    marks: Vec<f64>,
    mark_dim: usize,
    horizon: f64,
}

impl MppPath {
    pub fn new(times: Vec<f64>, marks: Vec<f64>, mark_dim: usize, horizon: f64) -> Result<Self> {
        if mark_dim == 0 || mark_dim > MAX_MARK_DIM {
            return Err(Error::InvalidParameter("mark dimension must be between 1 and 8"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter("horizon must be positive and finite"));
        }
        if marks.len() != times.len() * mark_dim {
            return Err(Error::DimensionMismatch {
                expected: times.len() * mark_dim,
                got: marks.len(),
            });
        }
        if times.first().is_some_and(|&t| !(t > 0.0)) || times.last().is_some_and(|&t| !(t <= horizon)) {
            return Err(Error::InvalidParameter("event times must lie in (0, horizon]"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("event times must be strictly increasing"));
        }
        if marks.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("marks must be finite"));
        }
        Ok(Self {
            times,
            marks,
            mark_dim,
            horizon,
        })
    }

    /// Builds a one-dimensional path from `(time, mark)` pairs.
    pub fn from_events(events: &[(f64, f64)], horizon: f64) -> Result<Self> {
        Self::new(
            events.iter().map(|e| e.0).collect(),
            events.iter().map(|e| e.1).collect(),
            1,
            horizon,
        )
    }

    pub fn empty(mark_dim: usize, horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), mark_dim, horizon)
    }

    pub(crate) fn with_capacity(mark_dim: usize, horizon: f64, cap: usize) -> Self {
        Self {
            times: Vec::with_capacity(cap),
            marks: Vec::with_capacity(cap * mark_dim),
            mark_dim,
            horizon,
        }
    }

    /// Appends an event generated after all existing ones. A time that does
    /// not exceed the previous event (only possible through floating-point
    /// coincidence) is moved up by one ulp so times stay strictly increasing.
    pub(crate) fn push_event(&mut self, t: f64, mark: &[f64]) {
        let t = match self.times.last() {
            Some(&last) if t <= last => last.next_up(),
            _ => t,
        };
        self.times.push(t);
        self.marks.extend_from_slice(&mark[..self.mark_dim]);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mark_dim(&self) -> usize {
        self.mark_dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn mark(&self, i: usize) -> &[f64] {
        &self.marks[i * self.mark_dim..(i + 1) * self.mark_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.times.iter().copied().zip(self.marks.chunks_exact(self.mark_dim))
    }

    /// Number of events with `T_i ≤ t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Number of events with `T_i < t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t)
    }

    /// `Z'_t = Σ_{T_i ≤ t} U_i`, right-continuous.
    pub fn cumulative_marks(&self, t: f64) -> Vec<f64> {
        let mut acc = alloc::vec![0.0; self.mark_dim];
        for (_, u) in self.iter().take(self.count_until(t)) {
            for (a, v) in acc.iter_mut().zip(u) {
                *a += v;
            }
        }
        acc
    }

    /// The events with `T_i ≤ t`, as a path on `[0, t]`.
    pub fn restricted(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::InvalidParameter("restriction time must lie in (0, horizon]"));
        }
        let n = self.count_until(t);
        Ok(Self {
            times: self.times[..n].to_vec(),
            marks: self.marks[..n * self.mark_dim].to_vec(),
            mark_dim: self.mark_dim,
            horizon: t,
        })
    }
}
