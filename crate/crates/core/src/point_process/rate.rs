use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::quad::Quadrature;
use crate::{Error, Result};

/// A deterministic, non-negative function of time: a jump intensity `λ(t)` or
/// a short-rate curve `r(t)`.
#[derive(Clone)]
pub enum RateFn {
    Constant(f64),
    /// `intercept + slope · t`.
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// Linear interpolation between `(t, value)` knots, flat outside them.
    PiecewiseLinear(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFn::Constant(c) => write!(f, "Constant({c})"),
            RateFn::Linear { intercept, slope } => write!(f, "Linear({intercept} + {slope}·t)"),
            RateFn::PiecewiseLinear(k) => write!(f, "PiecewiseLinear({k:?})"),
            RateFn::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl RateFn {
    pub fn piecewise_linear(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("rate table needs at least one knot"));
        }
        if knots.iter().any(|(t, v)| !(t.is_finite() && v.is_finite())) {
            return Err(Error::InvalidParameter("rate table entries must be finite"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("rate table times must be distinct"));
        }
        Ok(RateFn::PiecewiseLinear(knots))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFn::Constant(c) => *c,
            RateFn::Linear { intercept, slope } => intercept + slope * t,
            RateFn::PiecewiseLinear(k) => interpolate(k, t),
            RateFn::Custom(f) => f(t),
        }
    }

    /// The constant value for a time-homogeneous rate.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            RateFn::Constant(c) => Some(*c),
            RateFn::Linear { intercept, slope } if *slope == 0.0 => Some(*intercept),
            RateFn::PiecewiseLinear(k) if k.iter().all(|p| p.1 == k[0].1) => Some(k[0].1),
            _ => None,
        }
    }

    /// Interior points in `(t0, t1)` where the rate has kinks.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            RateFn::PiecewiseLinear(k) => k.iter().map(|p| p.0).filter(|&t| t > t0 && t < t1).collect(),
            _ => Vec::new(),
        }
    }

    /// `∫_{t0}^{t1} rate(s) ds`, exact except for custom rates.
    pub fn integral(&self, t0: f64, t1: f64, quad: &Quadrature) -> Result<f64> {
        match self {
            RateFn::Constant(c) => Ok(c * (t1 - t0)),
            RateFn::Linear { intercept, slope } => Ok(intercept * (t1 - t0) + 0.5 * slope * (t1 * t1 - t0 * t0)),
            RateFn::PiecewiseLinear(_) => {
                let mut pts = Vec::with_capacity(8);
                pts.push(t0);
                pts.extend(self.breakpoints(t0, t1));
                pts.push(t1);
                // trapezoid is exact on each linear piece
                Ok(pts
                    .windows(2)
                    .map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1])))
                    .sum())
            }
            RateFn::Custom(f) => quad.integrate(|s| f(s), t0, t1),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let i = knots.partition_point(|p| p.0 <= t);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[i - 1].1;
    }
    let (t0, v0) = knots[i - 1];
    let (t1, v1) = knots[i];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}
