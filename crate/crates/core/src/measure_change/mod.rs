//! Equivalent changes of measure for marked point processes.
//!
//! A nonnegative kernel `Y(t, x)` turns the compensator `ν(dt, dx)` into
//! `Y(t, x) ν(dt, dx)`; the density process is
//!
//! ```text
//! L_t = exp(-∫_0^t ∫ (Y(s, x) - 1) ν(ds, dx)) · Π_{T_n ≤ t} Y(T_n, U_n).
//! ```
//!
//! The stock model and its martingale measures live in [`market`].

pub mod market;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::point_process::{simulate_mpp_path, CompensatorSpec, MarkDistribution, MppPath};
use crate::quad::Quadrature;
use crate::stats::Estimate;
use crate::{Error, Result};

pub use market::{
    drift_residual, drift_residual_with_xi, market_price_of_risk, mmm_ell, MarketParams, MartingaleMeasureSpec,
    StockPath, StockSimulator, XiRule, BASE_POINTS_PER_UNIT,
};

pub type MarkFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type YFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Density `η = dF'/dF` of the new mark law against the old one.
#[derive(Clone)]
pub enum MarkWeight {
    Unit,
    /// `η(x) = exp(h x_1 - log_norm)` with `log_norm = ln E[e^{hU_1}]`.
    ExpTilt {
        h: f64,
        log_norm: f64,
    },
    Custom(MarkFn),
}

impl fmt::Debug for MarkWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkWeight::Unit => f.write_str("Unit"),
            MarkWeight::ExpTilt { h, log_norm } => f
                .debug_struct("ExpTilt")
                .field("h", h)
                .field("log_norm", log_norm)
                .finish(),
            MarkWeight::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl MarkWeight {
    /// Exponential tilt of the first mark component of `marks`.
    pub fn exp_tilt(h: f64, marks: &MarkDistribution) -> Result<Self> {
        let log_norm = marks.components()[0]
            .log_mgf(h)
            .ok_or(Error::ExponentialMomentDiverges)?;
        Ok(MarkWeight::ExpTilt { h, log_norm })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MarkWeight::Unit => 1.0,
            MarkWeight::ExpTilt { h, log_norm } => (h * x[0] - log_norm).exp(),
            MarkWeight::Custom(f) => f(x),
        }
    }

    /// `F' = η F` when it stays in a closed-form (sampleable) family.
    pub fn target_law(&self, marks: &MarkDistribution) -> Option<MarkDistribution> {
        match self {
            MarkWeight::Unit => Some(marks.clone()),
            MarkWeight::ExpTilt { h, .. } => marks.tilted_first(*h),
            MarkWeight::Custom(_) => None,
        }
    }
}

/// The Girsanov kernel `Y`.
#[derive(Clone)]
pub struct GirsanovKernel {
    y: YFn,
    /// `Y` does not depend on the path, so independent increments survive.
    deterministic: bool,
    time_homogeneous: bool,
    /// `(λ'/λ, η)` for the stationary family.
    stationary: Option<(f64, MarkWeight)>,
}

impl fmt::Debug for GirsanovKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GirsanovKernel")
            .field("deterministic", &self.deterministic)
            .field("time_homogeneous", &self.time_homogeneous)
            .field("stationary", &self.stationary)
            .finish()
    }
}

impl GirsanovKernel {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(
                "Girsanov kernel must be finite and non-negative",
            ));
        }
        Ok(Self {
            y: Arc::new(move |_, _| c),
            deterministic: true,
            time_homogeneous: true,
            stationary: Some((c, MarkWeight::Unit)),
        })
    }

    /// `Y(t, x) = (λ'/λ) η(x)`: rate `λ'` and mark law `η F` afterwards.
    pub fn stationary(lambda: f64, lambda_prime: f64, eta: MarkWeight) -> Result<Self> {
        if !(lambda > 0.0 && lambda_prime > 0.0 && lambda.is_finite() && lambda_prime.is_finite()) {
            return Err(Error::InvalidParameter("rates must be positive"));
        }
        let ratio = lambda_prime / lambda;
        let w = eta.clone();
        Ok(Self {
            y: Arc::new(move |_, x| ratio * w.eval(x)),
            deterministic: true,
            time_homogeneous: true,
            stationary: Some((ratio, eta)),
        })
    }

    pub fn custom(y: YFn, deterministic: bool, time_homogeneous: bool) -> Self {
        Self {
            y,
            deterministic,
            time_homogeneous,
            stationary: None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn is_time_homogeneous(&self) -> bool {
        self.time_homogeneous
    }

    /// `(λ'/λ, η)` when built by [`stationary`](Self::stationary) or
    /// [`constant`](Self::constant).
    pub fn stationary_parts(&self) -> Option<(f64, &MarkWeight)> {
        self.stationary.as_ref().map(|(r, w)| (*r, w))
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.y)(t, x)
    }

    fn checked(&self, t: f64, x: &[f64]) -> Result<f64> {
        let v = self.eval(t, x);
        if !v.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if v < 0.0 {
            return Err(Error::InvalidParameter("Girsanov kernel must be non-negative"));
        }
        Ok(v)
    }

    /// `∫_0^t ∫ Y dν`, which must be finite for the density to exist.
    pub fn check_finite(&self, spec: &CompensatorSpec, t: f64, quad: &Quadrature) -> Result<f64> {
        let v = spec
            .compensator_mass(0.0, t, |s, x| self.eval(s, x), quad)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::IntegrabilityFailure("∫∫ Y dν is infinite"),
                other => other,
            })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::IntegrabilityFailure("∫∫ Y dν is infinite"))
        }
    }

    /// `∫_{t0}^{t1} ∫ (Y - 1) dν`.
    pub fn compensator_excess(&self, spec: &CompensatorSpec, t0: f64, t1: f64, quad: &Quadrature) -> Result<f64> {
        spec.compensator_mass(t0, t1, |s, x| self.eval(s, x) - 1.0, quad)
    }
}

/// `ln L` on the union of a grid and the event times.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPath {
    pub times: Vec<f64>,
    pub log_density: Vec<f64>,
    /// Some `Y(T_n, U_n)` vanished: the new measure is absolutely
    /// continuous but not equivalent.
    pub zero_density: bool,
}

impl DensityPath {
    pub fn density(&self) -> Vec<f64> {
        self.log_density.iter().map(|l| l.exp()).collect()
    }

    /// `L_t` for `t` among [`times`](Self::times) or between them
    /// (right-continuous step lookup is not valid between events, so only
    /// stored times are answered).
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&s| s < t);
        (self.times.get(i) == Some(&t)).then(|| self.log_density[i].exp())
    }
}

/// The density process along one path, at all grid points and event times
/// up to the last grid point.
pub fn density_process(
    kernel: &GirsanovKernel,
    spec: &CompensatorSpec,
    path: &MppPath,
    grid: &[f64],
    quad: &Quadrature,
) -> Result<DensityPath> {
    if path.mark_dim() != spec.mark_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.mark_dim(),
            got: path.mark_dim(),
        });
    }
    if grid.iter().any(|&t| !(t >= 0.0 && t <= path.horizon())) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("grid must be sorted within [0, horizon]"));
    }
    let t_max = grid.last().copied().unwrap_or(0.0);
    kernel.check_finite(spec, t_max, quad)?;

    let n_ev = path.count_until(t_max);
    let mut times: Vec<f64> = grid
        .iter()
        .copied()
        .chain(path.times()[..n_ev].iter().copied())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let piece = quad.with_tol(quad.tol / times.len().max(1) as f64);
    let mut log_density = Vec::with_capacity(times.len());
    let mut zero_density = false;
    let mut comp = 0.0;
    let mut jumps = 0.0;
    let mut prev = 0.0;
    let mut next_event = 0;
    for &t in &times {
        comp += kernel.compensator_excess(spec, prev, t, &piece)?;
        prev = t;
        while next_event < n_ev && path.time(next_event) <= t {
            let y = kernel.checked(path.time(next_event), path.mark(next_event))?;
            if y == 0.0 {
                zero_density = true;
            }
            jumps += y.ln();
            next_event += 1;
        }
        log_density.push(jumps - comp);
    }
    Ok(DensityPath {
        times,
        log_density,
        zero_density,
    })
}

/// Densities for many paths on a fixed grid. For a deterministic kernel the
/// compensator term is the same on every path, so it is computed once per
/// grid point.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    kernel: GirsanovKernel,
    grid: Vec<f64>,
    compensator: Vec<f64>,
}

impl DensityEvaluator {
    /// Terminal densities at `horizon`.
    pub fn new(kernel: &GirsanovKernel, spec: &CompensatorSpec, horizon: f64, quad: &Quadrature) -> Result<Self> {
        Self::with_grid(kernel, spec, &[horizon], quad)
    }

    /// `grid` must be non-empty, sorted and non-negative.
    pub fn with_grid(kernel: &GirsanovKernel, spec: &CompensatorSpec, grid: &[f64], quad: &Quadrature) -> Result<Self> {
        if !kernel.is_deterministic() {
            return Err(Error::InvalidParameter("batch densities need a deterministic kernel"));
        }
        if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "grid must be non-empty, sorted and non-negative",
            ));
        }
        let horizon = grid[grid.len() - 1];
        kernel.check_finite(spec, horizon, quad)?;
        let piece = quad.with_tol(quad.tol / grid.len() as f64);
        let mut compensator = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in grid {
            acc += kernel.compensator_excess(spec, prev, t, &piece)?;
            prev = t;
            compensator.push(acc);
        }
        Ok(Self {
            kernel: kernel.clone(),
            grid: grid.to_vec(),
            compensator,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `ln L_T` at the last grid point; `-∞` on a zero-density path.
    pub fn log_density(&self, path: &MppPath) -> Result<f64> {
        let mut s = -self.compensator[self.compensator.len() - 1];
        for (t, u) in path.iter().take(path.count_until(self.horizon())) {
            s += self.kernel.checked(t, u)?.ln();
        }
        Ok(s)
    }

    pub fn density(&self, path: &MppPath) -> Result<f64> {
        Ok(self.log_density(path)?.exp())
    }

    /// `ln L_t` at every grid point.
    pub fn log_density_path(&self, path: &MppPath) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut jumps = 0.0;
        let mut next = 0;
        for (&t, c) in self.grid.iter().zip(&self.compensator) {
            while next < path.len() && path.time(next) <= t {
                jumps += self.kernel.checked(path.time(next), path.mark(next))?.ln();
                next += 1;
            }
            out.push(jumps - c);
        }
        Ok(out)
    }
}

/// `E_{P'}[f] = E_P[L_T f]` over `n_paths` simulated paths.
pub fn reweighted_expectation<F>(
    kernel: &GirsanovKernel,
    spec: &CompensatorSpec,
    functional: F,
    horizon: f64,
    n_paths: u64,
    seed: u64,
    quad: &Quadrature,
) -> Result<Estimate>
where
    F: Fn(&MppPath) -> f64,
{
    let eval = DensityEvaluator::new(kernel, spec, horizon, quad)?;
    let mut samples = Vec::with_capacity(n_paths as usize);
    for i in 0..n_paths {
        let path = simulate_mpp_path(spec, horizon, seed, i)?;
        samples.push(eval.density(&path)? * functional(&path));
    }
    Ok(Estimate::from_samples(samples))
}

/// Esscher density `L_t = e^{hX_t} / E[e^{hX_t}]` along `(t, X_t)` pairs,
/// given `t ↦ ln E[e^{hX_t}]`.
pub fn esscher_density<M>(h: f64, values: &[(f64, f64)], log_mgf: M) -> Result<Vec<f64>>
where
    M: Fn(f64) -> Result<f64>,
{
    values
        .iter()
        .map(|&(t, x)| {
            let lm = log_mgf(t).map_err(|e| match e {
                Error::NonFinite { .. } => Error::MgfDiverges,
                other => other,
            })?;
            if !lm.is_finite() {
                return Err(Error::MgfDiverges);
            }
            Ok((h * x - lm).exp())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::RateFn;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    fn poisson(lambda: f64) -> CompensatorSpec {
        CompensatorSpec::standard(lambda, MarkDistribution::normal(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn identity_kernel_gives_unit_density() {
        let spec = poisson(2.0);
        let path = MppPath::from_events(&[(0.3, 0.5), (0.8, -1.0)], 1.0).unwrap();
        let d = density_process(
            &GirsanovKernel::constant(1.0).unwrap(),
            &spec,
            &path,
            &[0.0, 0.5, 1.0],
            &q(),
        )
        .unwrap();
        assert_eq!(d.times, [0.0, 0.3, 0.5, 0.8, 1.0]);
        assert!(d.log_density.iter().all(|l| l.abs() < 1e-12));
        assert!(!d.zero_density);
    }

    #[test]
    fn constant_kernel_without_jumps() {
        let lambda = 1.5;
        let spec = poisson(lambda);
        let path = MppPath::empty(1, 2.0).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0];
        let d = density_process(&GirsanovKernel::constant(2.0).unwrap(), &spec, &path, &grid, &q()).unwrap();
        for (t, l) in d.times.iter().zip(d.density()) {
            assert!((l - (-lambda * t).exp()).abs() < 1e-10);
        }
        assert_eq!(d.at(0.0), Some(1.0));
    }

    #[test]
    fn density_with_jumps_closed_form() {
        // Y = (λ'/λ) e^{hx}/E[e^{hU}], U ~ N(0,1): compensator term (λ' - λ)t
        let (lambda, lp, h) = (2.0, 3.0, 0.4);
        let marks = MarkDistribution::normal(0.0, 1.0).unwrap();
        let spec = CompensatorSpec::standard(lambda, marks.clone()).unwrap();
        let y = GirsanovKernel::stationary(lambda, lp, MarkWeight::exp_tilt(h, &marks).unwrap()).unwrap();
        let path = MppPath::from_events(&[(0.25, 0.7), (0.6, -0.2)], 1.0).unwrap();
        let d = density_process(&y, &spec, &path, &[1.0], &q()).unwrap();
        let expected = -(lp - lambda) + 2.0 * (lp / lambda).ln() + h * (0.7 - 0.2) - 2.0 * 0.5 * h * h;
        assert!((d.log_density.last().unwrap() - expected).abs() < 1e-9);
        let eval = DensityEvaluator::new(&y, &spec, 1.0, &q()).unwrap();
        assert!((eval.log_density(&path).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_density_is_flagged() {
        let spec = poisson(1.0);
        let y = GirsanovKernel::custom(Arc::new(|_, x: &[f64]| if x[0] > 0.0 { 2.0 } else { 0.0 }), true, true);
        let path = MppPath::from_events(&[(0.5, -1.0)], 1.0).unwrap();
        let d = density_process(&y, &spec, &path, &[1.0], &q()).unwrap();
        assert!(d.zero_density);
        assert_eq!(d.density().last().copied(), Some(0.0));
    }

    #[test]
    fn negative_kernel_is_rejected() {
        let spec = poisson(1.0);
        let y = GirsanovKernel::custom(Arc::new(|_, _: &[f64]| -1.0), true, true);
        let path = MppPath::from_events(&[(0.5, 1.0)], 1.0).unwrap();
        assert!(density_process(&y, &spec, &path, &[1.0], &q()).is_err());
        assert!(GirsanovKernel::constant(-1.0).is_err());
    }

    #[test]
    fn reweighting_normalization_and_identity() {
        let spec = CompensatorSpec::new(
            RateFn::Linear {
                intercept: 1.0,
                slope: 1.0,
            },
            2.0,
            MarkDistribution::point_mass(1.0).unwrap(),
        )
        .unwrap();
        let y = GirsanovKernel::constant(1.0).unwrap();
        let e = reweighted_expectation(&y, &spec, |_| 1.0, 1.0, 200, 5, &q()).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = reweighted_expectation(&y, &spec, |p| p.len() as f64, 1.0, 200, 5, &q()).unwrap();
        let plain = Estimate::from_samples((0..200).map(|i| simulate_mpp_path(&spec, 1.0, 5, i).unwrap().len() as f64));
        assert!((e.mean - plain.mean).abs() < 1e-12);
    }

    #[test]
    fn esscher_examples() {
        let (lambda, u, h) = (2.0, 0.5, 0.8);
        let lmgf = |t: f64| Ok(lambda * t * ((h * u).exp() - 1.0));
        let l = esscher_density(0.0, &[(1.0, 3.0)], |_| Ok(0.0)).unwrap();
        assert_eq!(l, [1.0]);
        let l = esscher_density(h, &[(1.0, 1.0)], lmgf).unwrap();
        assert!((l[0] - ((h - lambda * ((h * u).exp() - 1.0)).exp())).abs() < 1e-14);
        assert_eq!(
            esscher_density(h, &[(1.0, 1.0)], |_| Ok(f64::INFINITY)),
            Err(Error::MgfDiverges)
        );
    }

    #[test]
    fn tilt_weight_integrates_to_one() {
        let marks = MarkDistribution::exponential(1.0).unwrap();
        let w = MarkWeight::exp_tilt(0.5, &marks).unwrap();
        let m: f64 = marks.integrate(|x| w.eval(x), 1e-12).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
        assert!(MarkWeight::exp_tilt(1.0, &marks).is_err());
        let target = w.target_law(&marks).unwrap();
        assert!((target.mean(0).unwrap() - 2.0).abs() < 1e-15);
    }
}
