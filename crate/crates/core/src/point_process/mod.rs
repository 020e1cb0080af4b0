//! Marked point processes with deterministic compensators
//! `ν(dt, dx) = λ(t) F(t, dx) dt`.
//!
//! Paths are simulated exactly by thinning a homogeneous stream of rate
//! `λ̄ ≥ sup λ`. Integrals against the compensator are nested quadratures:
//! adaptive Simpson in time, and in the mark space whatever the mark
//! distribution's [`IntegrationMode`] allows.

mod marks;
mod path;
mod rate;

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

pub use marks::{IntegrationMode, MarkDistribution, MarkLaw, SampleFn, QUASI_RANDOM_POINTS};
pub use path::MppPath;
pub use rate::RateFn;

use crate::quad::{QuadValue, Quadrature};
use crate::rng::{path_rng, StreamTag};
use crate::{Error, Result, MAX_MARK_DIM};

/// Default cap on the number of events in one simulated path.
pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

// Relative slack when comparing λ(t) with its majorant.
const BOUND_SLACK: f64 = 1e-12;

/// Deterministic compensator `λ(t) F(t, dx) dt`.
///
/// The mark law may change over time through a schedule of
/// `(start_time, distribution)` segments; the first segment starts at zero.
#[derive(Clone, Debug)]
pub struct CompensatorSpec {
    rate: RateFn,
    rate_bound: f64,
    schedule: Vec<(f64, MarkDistribution)>,
}

impl CompensatorSpec {
    pub fn new(rate: RateFn, rate_bound: f64, marks: MarkDistribution) -> Result<Self> {
        Self::with_mark_schedule(rate, rate_bound, alloc::vec![(0.0, marks)])
    }

    /// The standard case `λ F(dx) dt` with constant `λ`.
    pub fn standard(lambda: f64, marks: MarkDistribution) -> Result<Self> {
        Self::new(RateFn::Constant(lambda), lambda, marks)
    }

    pub fn with_mark_schedule(rate: RateFn, rate_bound: f64, schedule: Vec<(f64, MarkDistribution)>) -> Result<Self> {
        if !(rate_bound >= 0.0 && rate_bound.is_finite()) {
            return Err(Error::InvalidParameter("rate bound must be finite and non-negative"));
        }
        let Some(first) = schedule.first() else {
            return Err(Error::InvalidParameter("mark schedule is empty"));
        };
        if first.0 != 0.0 {
            return Err(Error::InvalidParameter("mark schedule must start at t = 0"));
        }
        if schedule.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("mark schedule times must increase"));
        }
        let d = first.1.dim();
        if let Some(bad) = schedule.iter().find(|s| s.1.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.1.dim(),
            });
        }
        Ok(Self {
            rate,
            rate_bound,
            schedule,
        })
    }

    pub fn rate(&self) -> &RateFn {
        &self.rate
    }

    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    pub fn mark_dim(&self) -> usize {
        self.schedule[0].1.dim()
    }

    /// `F(t, ·)`.
    pub fn marks_at(&self, t: f64) -> &MarkDistribution {
        let i = self.schedule.partition_point(|s| s.0 <= t).max(1) - 1;
        &self.schedule[i].1
    }

    /// `(λ, F)` when the compensator is `λ F(dx) dt`.
    pub fn stationary(&self) -> Option<(f64, &MarkDistribution)> {
        let lambda = self.rate.as_constant()?;
        (self.schedule.len() == 1).then(|| (lambda, &self.schedule[0].1))
    }

    /// Kinks of the rate and mark-law switches inside `(t0, t1)`, sorted.
    pub fn time_breaks(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut b = self.rate.breakpoints(t0, t1);
        b.extend(self.schedule.iter().map(|s| s.0).filter(|&t| t > t0 && t < t1));
        b.sort_by(|x, y| x.total_cmp(y));
        b.dedup();
        b
    }

    /// Probes `0 ≤ λ(t) ≤ λ̄` on an even grid of `[0, horizon]`.
    pub fn check_bound(&self, horizon: f64) -> Result<()> {
        const PROBES: usize = 256;
        for k in 0..=PROBES {
            self.check_rate_at(horizon * k as f64 / PROBES as f64)?;
        }
        Ok(())
    }

    fn check_rate_at(&self, t: f64) -> Result<f64> {
        let rate = self.rate.eval(t);
        if !(rate >= 0.0 && rate <= self.rate_bound * (1.0 + BOUND_SLACK)) {
            return Err(Error::InvalidBound {
                t,
                rate,
                bound: self.rate_bound,
            });
        }
        Ok(rate)
    }

    /// `ν([t0, t1] × ℝ^d) = ∫_{t0}^{t1} λ(s) ds`.
    pub fn total_mass(&self, t0: f64, t1: f64, quad: &Quadrature) -> Result<f64> {
        self.rate.integral(t0, t1, quad)
    }

    /// `∫_{t0}^{t1} ∫ f(s, x) λ(s) F(s, dx) ds` for real or complex `f`.
    ///
    /// The outer time integral is adaptive Simpson split at rate kinks and
    /// mark-law switches; the inner mark integral follows the mark
    /// distribution's integration mode.
    pub fn compensator_integral<V, F>(&self, t0: f64, t1: f64, f: F, quad: &Quadrature) -> Result<V>
    where
        V: QuadValue,
        F: Fn(f64, &[f64]) -> V,
    {
        if !(t0 <= t1) {
            return Err(Error::InvalidParameter("compensator window must satisfy t0 ≤ t1"));
        }
        if t0 == t1 {
            return Ok(V::default());
        }
        let scale = ((t1 - t0) * self.rate_bound).max(1.0);
        let inner_tol = 0.1 * quad.tol / scale;
        let mut pts = Vec::with_capacity(4);
        pts.push(t0);
        pts.extend(self.time_breaks(t0, t1));
        pts.push(t1);
        let mut total = V::default();
        for w in pts.windows(2) {
            let marks = self.marks_at(0.5 * (w[0] + w[1]));
            if marks.mode() == IntegrationMode::SampleOnly {
                return Err(Error::UnsupportedMarks);
            }
            let q = quad.with_tol(quad.tol * (w[1] - w[0]) / (t1 - t0));
            let outer = |s: f64| -> Result<V> {
                let lambda = self.rate.eval(s);
                if lambda == 0.0 {
                    return Ok(V::default());
                }
                Ok(marks.integrate(|x| f(s, x), inner_tol)? * lambda)
            };
            // Surface inner failures through a side channel: the quadrature
            // driver only sees values.
            let failure = core::cell::Cell::new(None);
            let r = q.integrate(
                |s| match outer(s) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        V::default()
                    }
                },
                w[0],
                w[1],
            );
            if let Some(e) = failure.take() {
                return Err(e);
            }
            total = total + r?;
        }
        Ok(total)
    }

    /// Real-valued [`compensator_integral`](Self::compensator_integral).
    pub fn compensator_mass<F>(&self, t0: f64, t1: f64, test_fn: F, quad: &Quadrature) -> Result<f64>
    where
        F: Fn(f64, &[f64]) -> f64,
    {
        self.compensator_integral(t0, t1, test_fn, quad)
    }
}

/// Simulates path `path_index` of the stream keyed by `seed`.
pub fn simulate_mpp_path(spec: &CompensatorSpec, horizon: f64, seed: u64, path_index: u64) -> Result<MppPath> {
    let mut rng = path_rng(seed, path_index, StreamTag::Jumps);
    simulate_mpp_with(spec, horizon, &mut rng, DEFAULT_EVENT_CAP)
}

/// Simulates one path on `[0, horizon]`; deterministic given `seed`.
pub fn simulate_mpp(spec: &CompensatorSpec, horizon: f64, seed: u64) -> Result<MppPath> {
    simulate_mpp_path(spec, horizon, seed, 0)
}

/// Thinning: candidates arrive at rate `λ̄`, a candidate at `t` is kept with
/// probability `λ(t)/λ̄` and then receives a mark drawn from `F(t, ·)`.
///
/// The rate is checked against its bound on a probe grid and at every
/// candidate; a violation is an [`Error::InvalidBound`], never a silently
/// biased path.
pub fn simulate_mpp_with<R: Rng + ?Sized>(
    spec: &CompensatorSpec,
    horizon: f64,
    rng: &mut R,
    max_events: usize,
) -> Result<MppPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive and finite"));
    }
    spec.check_bound(horizon)?;
    let d = spec.mark_dim();
    let bound = spec.rate_bound;
    let mut path = MppPath::with_capacity(d, horizon, 16);
    if bound == 0.0 {
        return Ok(path);
    }
    let mut mark = [0.0; MAX_MARK_DIM];
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / bound;
        if t > horizon {
            return Ok(path);
        }
        let rate = spec.check_rate_at(t)?;
        let u: f64 = rng.random();
        if u * bound < rate {
            if path.len() == max_events {
                return Err(Error::ExplosionGuard { cap: max_events });
            }
            spec.marks_at(t).sample(rng, &mut mark);
            path.push_event(t, &mark[..d]);
        }
    }
}
