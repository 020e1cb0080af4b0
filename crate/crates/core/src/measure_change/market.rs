//! The shot-noise stock model
//!
//! ```text
//! X_t = X_0 exp(μt + σW_t - σ²t/2 + ∫_0^t Σ_{T_i ≤ s} g(s - T_i, U_i) ds + Σ_{T_i ≤ t} G(0, U_i))
//! ```
//!
//! and its martingale measures. Under a measure with jump compensator `ν'`
//! and Brownian drift shift `ξ` (so `W' = W + ∫ξ` is a Brownian motion),
//! discounted prices are local martingales when
//!
//! ```text
//! r_t = μ - σξ_t + Σ_{T_i ≤ t} g(t - T_i, U_i) + ∫ (e^{G(0,x)} - 1) ν'(t, dx).
//! ```

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use super::MarkWeight;
use crate::kernels::{KernelKind, NoiseKernel};
use crate::point_process::{simulate_mpp_path, CompensatorSpec, MarkDistribution, MppPath, RateFn};
use crate::quad::Quadrature;
use crate::rng::{path_rng, StreamTag};
use crate::shotnoise::FiltrationState;
use crate::{Error, Result};

/// Base simulation grid resolution per unit time; event times and short-rate
/// knots are inserted on top.
pub const BASE_POINTS_PER_UNIT: usize = 1 << 10;

// Mark-space tolerance for the jump-compensation integrals.
const MARK_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct MarketParams {
    x0: f64,
    mu: f64,
    sigma: f64,
    short_rate: RateFn,
    kernel: NoiseKernel,
    spec: CompensatorSpec,
}

impl MarketParams {
    pub fn new(
        x0: f64,
        mu: f64,
        sigma: f64,
        short_rate: RateFn,
        kernel: NoiseKernel,
        spec: CompensatorSpec,
    ) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParameter("x0 must be positive"));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive"));
        }
        if kernel.mark_dim() != spec.mark_dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.mark_dim(),
                got: spec.mark_dim(),
            });
        }
        Ok(Self {
            x0,
            mu,
            sigma,
            short_rate,
            kernel,
            spec,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn short_rate(&self) -> &RateFn {
        &self.short_rate
    }

    pub fn kernel(&self) -> &NoiseKernel {
        &self.kernel
    }

    pub fn spec(&self) -> &CompensatorSpec {
        &self.spec
    }

    /// `Σ_{T_i ≤ t} g(t - T_i, U_i)` over the observed shots.
    fn shot_drift(&self, state: &FiltrationState, strict: bool) -> Result<f64> {
        let t = state.time();
        let obs = state.observed();
        let n = if strict {
            obs.count_before(t)
        } else {
            obs.count_until(t)
        };
        obs.iter()
            .take(n)
            .map(|(ti, u)| self.kernel.derivative(t - ti, u))
            .sum()
    }

    fn jump_factor(&self, x: &[f64]) -> f64 {
        self.kernel.value_raw(0.0, x).exp_m1()
    }
}

/// `G(0, x) = s·x_1` for the built-in kernels.
fn jump_slope(kernel: &NoiseKernel) -> Option<f64> {
    match kernel.kind() {
        KernelKind::JumpToLevel | KernelKind::PowerLaw { .. } | KernelKind::RandomDecay => Some(1.0),
        KernelKind::Exponential { a, .. } => Some(*a),
        KernelKind::Custom(_) => None,
    }
}

pub type XiFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// How the market price of diffusive risk is chosen.
#[derive(Clone)]
pub enum XiRule {
    /// `ξ_t = σ^{-1}(μ - r_t + m_1 + Σ_{T_i ≤ t} g(t - T_i, U_i))`, which
    /// solves the drift condition.
    Stationary,
    /// `ξ(t, Σ_{T_i ≤ t} g(t - T_i, U_i))`.
    Custom(XiFn),
}

impl fmt::Debug for XiRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XiRule::Stationary => f.write_str("Stationary"),
            XiRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Target measure with jump rate `λ'`, mark law `F' = η F` and drift
/// shift `ξ`, reached from a stationary `λF` through `Y = (λ'/λ) η`.
#[derive(Clone, Debug)]
pub struct MartingaleMeasureSpec {
    lambda: f64,
    lambda_prime: f64,
    eta: MarkWeight,
    target_marks: Option<MarkDistribution>,
    xi: XiRule,
    m1: f64,
}

impl MartingaleMeasureSpec {
    pub fn new(market: &MarketParams, lambda_prime: f64, eta: MarkWeight, xi: XiRule) -> Result<Self> {
        let (lambda, marks) = market.spec.stationary().ok_or(Error::NotStationary)?;
        if !(lambda_prime > 0.0 && lambda_prime.is_finite()) {
            return Err(Error::InvalidParameter("lambda_prime must be positive"));
        }
        let mass: f64 = marks.integrate(|x| eta.eval(x), MARK_TOL)?;
        if !((mass - 1.0).abs() <= 1e-8) {
            return Err(Error::InvalidParameter("the mark density η must integrate to one"));
        }
        let target_marks = eta.target_law(marks);
        let m1 = lambda_prime * Self::mean_jump_factor(market, marks, &eta, target_marks.as_ref())?;
        Ok(Self {
            lambda,
            lambda_prime,
            eta,
            target_marks,
            xi,
            m1,
        })
    }

    /// `∫ (e^{G(0,x)} - 1) F'(dx)`: closed form through the mgf of `F'`
    /// when `G(0, ·)` is linear and `F'` is a named family, quadrature of
    /// `η F` otherwise.
    fn mean_jump_factor(
        market: &MarketParams,
        marks: &MarkDistribution,
        eta: &MarkWeight,
        target: Option<&MarkDistribution>,
    ) -> Result<f64> {
        if let (Some(s), Some(f)) = (jump_slope(&market.kernel), target) {
            if f.components()[0].mean().is_some() {
                let lm = f.components()[0].log_mgf(s).ok_or(Error::ExponentialMomentDiverges)?;
                return Ok(lm.exp_m1());
            }
        }
        let v: f64 = marks
            .integrate(|x| market.jump_factor(x) * eta.eval(x), MARK_TOL)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::ExponentialMomentDiverges,
                other => other,
            })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ExponentialMomentDiverges)
        }
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda_prime
    }

    pub fn eta(&self) -> &MarkWeight {
        &self.eta
    }

    pub fn xi_rule(&self) -> &XiRule {
        &self.xi
    }

    /// `m_1 = ∫ (e^{G(0,x)} - 1) λ' F'(dx)`.
    pub fn m1(&self) -> f64 {
        self.m1
    }

    /// The Girsanov kernel `(λ'/λ) η`.
    pub fn girsanov_kernel(&self) -> Result<super::GirsanovKernel> {
        super::GirsanovKernel::stationary(self.lambda, self.lambda_prime, self.eta.clone())
    }

    /// `λ' F'` as a simulable compensator; needs `F'` in closed form.
    pub fn target_spec(&self) -> Result<CompensatorSpec> {
        let marks = self.target_marks.clone().ok_or(Error::UnsupportedMarks)?;
        CompensatorSpec::standard(self.lambda_prime, marks)
    }

    fn xi_at(&self, market: &MarketParams, t: f64, shot_drift: f64) -> f64 {
        match &self.xi {
            XiRule::Stationary => (market.mu - market.short_rate.eval(t) + self.m1 + shot_drift) / market.sigma,
            XiRule::Custom(f) => f(t, shot_drift),
        }
    }
}

/// `ξ_t = σ^{-1}(μ - r_t + m_1 + Σ_{T_i ≤ t} g(t - T_i, U_i))`.
pub fn market_price_of_risk(market: &MarketParams, mm: &MartingaleMeasureSpec, state: &FiltrationState) -> Result<f64> {
    let sg = market.shot_drift(state, false)?;
    Ok((market.mu - market.short_rate.eval(state.time()) + mm.m1 + sg) / market.sigma)
}

/// Drift-condition residual `r_t - [μ - σξ + Σ g + ∫(e^{G(0,x)} - 1) ν'(t,dx)]`
/// with `ξ` taken from the measure's rule.
pub fn drift_residual(market: &MarketParams, mm: &MartingaleMeasureSpec, state: &FiltrationState) -> Result<f64> {
    let sg = market.shot_drift(state, false)?;
    drift_residual_with_xi(market, mm, state, mm.xi_at(market, state.time(), sg))
}

/// As [`drift_residual`] for a given `ξ`. The jump term is assembled from
/// `ν' = Y ν` by mark quadrature, independently of `m_1`.
pub fn drift_residual_with_xi(
    market: &MarketParams,
    mm: &MartingaleMeasureSpec,
    state: &FiltrationState,
    xi: f64,
) -> Result<f64> {
    let t = state.time();
    let sg = market.shot_drift(state, false)?;
    let y = mm.girsanov_kernel()?;
    let lambda = market.spec.rate().eval(t);
    let jumps: f64 = market
        .spec
        .marks_at(t)
        .integrate(|x| market.jump_factor(x) * y.eval(t, x), MARK_TOL)?
        * lambda;
    Ok(market.short_rate.eval(t) - (market.mu - market.sigma * xi + sg + jumps))
}

/// Minimal-martingale-measure integrand
/// `ℓ_{t-} = [μ + Σ_{T_i < t} g(t - T_i, U_i) + ∫(e^{G(0,x)} - 1) ν(t,dx)]
/// / (X_{t-} ∫(e^{G(0,x)} - 1)² ν(t,dx))`.
pub fn mmm_ell(market: &MarketParams, state: &FiltrationState, x_minus: f64) -> Result<f64> {
    if !(x_minus > 0.0 && x_minus.is_finite()) {
        return Err(Error::InvalidParameter("pre-jump price must be positive"));
    }
    let t = state.time();
    let sg = market.shot_drift(state, true)?;
    let lambda = market.spec.rate().eval(t);
    let marks = market.spec.marks_at(t);
    let first: f64 = marks.integrate(|x| market.jump_factor(x), MARK_TOL)? * lambda;
    let second: f64 = marks.integrate(
        |x| {
            let j = market.jump_factor(x);
            j * j
        },
        MARK_TOL,
    )? * lambda;
    if !(second > 0.0) {
        return Err(Error::DegenerateJumps { t });
    }
    Ok((market.mu + sg + first) / (second * x_minus))
}

/// One simulated stock path. `log_x` is right-continuous; `log_x_left`
/// holds the left limits, which differ only at event times.
#[derive(Debug, Clone, PartialEq)]
pub struct StockPath {
    pub times: Vec<f64>,
    pub log_x: Vec<f64>,
    pub log_x_left: Vec<f64>,
    /// `exp(-∫_0^t r_s ds)`.
    pub discount: Vec<f64>,
    pub events: MppPath,
}

impl StockPath {
    pub fn x(&self, k: usize) -> f64 {
        self.log_x[k].exp()
    }

    pub fn discounted(&self, k: usize) -> f64 {
        self.discount[k] * self.x(k)
    }

    pub fn terminal_discounted(&self) -> f64 {
        self.discounted(self.times.len() - 1)
    }
}

/// Simulates the stock under the objective measure or under a given
/// martingale measure.
///
/// On each grid cell the shot drift `∫ Σ g` is integrated by the trapezoid
/// rule (event times are grid points, so the integrand is smooth inside
/// cells) and Brownian increments are exact Gaussians. Under a martingale
/// measure the events come from `λ' F'`, increments are those of `W'`, and
/// `∫ ξ` uses the same trapezoid rule as the shot drift.
#[derive(Clone, Debug)]
pub struct StockSimulator {
    market: MarketParams,
    measure: Option<MartingaleMeasureSpec>,
    sim_spec: CompensatorSpec,
    horizon: f64,
    base: Vec<f64>,
    quad: Quadrature,
}

impl StockSimulator {
    pub fn new(market: MarketParams, measure: Option<MartingaleMeasureSpec>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter("horizon must be positive and finite"));
        }
        let sim_spec = match &measure {
            Some(mm) => mm.target_spec()?,
            None => market.spec.clone(),
        };
        let n = ((BASE_POINTS_PER_UNIT as f64 * horizon).ceil() as usize).max(1);
        let mut base: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        base.extend(market.short_rate.breakpoints(0.0, horizon));
        base.sort_by(f64::total_cmp);
        base.dedup();
        Ok(Self {
            market,
            measure,
            sim_spec,
            horizon,
            base,
            quad: Quadrature::new(1e-12),
        })
    }

    pub fn market(&self) -> &MarketParams {
        &self.market
    }

    pub fn measure(&self) -> Option<&MartingaleMeasureSpec> {
        self.measure.as_ref()
    }

    /// The jump compensator paths are drawn from.
    pub fn simulation_spec(&self) -> &CompensatorSpec {
        &self.sim_spec
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn path(&self, seed: u64, path_index: u64) -> Result<StockPath> {
        let events = simulate_mpp_path(&self.sim_spec, self.horizon, seed, path_index)?;
        self.path_with_events(events, seed, path_index)
    }

    /// Builds the path on given events, drawing only the Brownian part.
    pub fn path_with_events(&self, events: MppPath, seed: u64, path_index: u64) -> Result<StockPath> {
        if events.mark_dim() != self.market.kernel.mark_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.market.kernel.mark_dim(),
                got: events.mark_dim(),
            });
        }
        let n_ev = events.count_until(self.horizon);
        let mut times = self.base.clone();
        times.extend_from_slice(&events.times()[..n_ev]);
        times.sort_by(f64::total_cmp);
        times.dedup();

        let m = &self.market;
        let k = &m.kernel;
        let smooth = !k.is_constant_in_time();
        let shot_sum = |active: usize, t: f64| -> f64 {
            if !smooth {
                return 0.0;
            }
            events
                .iter()
                .take(active)
                .map(|(ti, u)| k.derivative_raw(t - ti, u))
                .sum()
        };
        let mut rng = path_rng(seed, path_index, StreamTag::Diffusion);

        let mut log_x = Vec::with_capacity(times.len());
        let mut log_x_left = Vec::with_capacity(times.len());
        let mut discount = Vec::with_capacity(times.len());
        let mut lx = m.x0.ln();
        let mut int_r = 0.0;
        let mut next_ev = 0;
        log_x.push(lx);
        log_x_left.push(lx);
        discount.push(1.0);
        for w in times.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dt = b - a;
            let active = next_ev;
            let (g_a, g_b) = (shot_sum(active, a), shot_sum(active, b));
            let shot = 0.5 * dt * (g_a + g_b);
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut dw = dt.sqrt() * z;
            if let Some(mm) = &self.measure {
                // W = W' - ∫ξ
                dw -= 0.5 * dt * (mm.xi_at(m, a, g_a) + mm.xi_at(m, b, g_b));
            }
            lx += m.mu * dt + m.sigma * dw - 0.5 * m.sigma * m.sigma * dt + shot;
            log_x_left.push(lx);
            while next_ev < n_ev && events.time(next_ev) == b {
                lx += k.value_raw(0.0, events.mark(next_ev));
                next_ev += 1;
            }
            log_x.push(lx);
            int_r += m.short_rate.integral(a, b, &self.quad)?;
            discount.push((-int_r).exp());
        }
        if !lx.is_finite() {
            return Err(Error::NonFinite { t: self.horizon });
        }
        Ok(StockPath {
            times,
            log_x,
            log_x_left,
            discount,
            events,
        })
    }
}
