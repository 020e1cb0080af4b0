//! Self-exciting affine intensity `dλ_t = κ(θ̄ - λ_t)dt + dN_t`.
//!
//! The intensity is itself a shot-noise process,
//! `λ_t = e^{-κt}λ_0 + θ̄(1 - e^{-κt}) + Σ_{T_i ≤ t} e^{-κ(t - T_i)}`,
//! and `(N, λ)` is affine: `E[e^{⟨z, X_T⟩} | F_t] = exp(φ(T-t) + ψ_1 N_t + ψ_2 λ_t)`
//! with
//!
//! ```text
//! φ' = κθ̄ψ_2,   ψ_1' = 0,   ψ_2' = -κψ_2 + exp(ψ_1 + ψ_2) - 1,   (φ, ψ)(0) = (0, z).
//! ```
//!
//! Transform arguments are passed in the complex exponent directly: a
//! characteristic function at real `u` uses `z = iu`.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::Rng;
use rand_distr::Exp1;

use crate::point_process::MppPath;
use crate::rng::{path_rng, StreamTag};
use crate::{Error, Result};

/// Default RK4 resolution per unit horizon.
pub const STEPS_PER_UNIT: usize = 2048;

pub const MIN_STEPS: usize = 100;

// |ψ_2| beyond this, or Re(ψ_1 + ψ_2) beyond the exp overflow point, is
// treated as finite-time explosion.
const PSI_GUARD: f64 = 1e6;
const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    kappa: f64,
    theta_bar: f64,
    lambda0: f64,
}

impl HawkesParams {
    pub fn new(kappa: f64, theta_bar: f64, lambda0: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter("kappa must be positive"));
        }
        if !(theta_bar >= 0.0 && theta_bar.is_finite()) {
            return Err(Error::InvalidParameter("theta_bar must be non-negative"));
        }
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidParameter("lambda0 must be non-negative"));
        }
        Ok(Self {
            kappa,
            theta_bar,
            lambda0,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Branching ratio `1/κ < 1`; otherwise the event count grows without
    /// a stationary regime.
    pub fn is_subcritical(&self) -> bool {
        self.kappa > 1.0
    }

    /// `e^{-κt}λ_0 + θ̄(1 - e^{-κt})`, the intensity without self-excitation.
    pub fn deterministic_intensity(&self, t: f64) -> f64 {
        let e = (-self.kappa * t).exp();
        e * self.lambda0 - self.theta_bar * (-self.kappa * t).exp_m1()
    }

    /// `E[λ_t]`, solving `m' = κθ̄ + (1 - κ)m`.
    pub fn mean_intensity(&self, t: f64) -> f64 {
        let c = 1.0 - self.kappa;
        if c == 0.0 {
            return self.lambda0 + self.kappa * self.theta_bar * t;
        }
        // m = -κθ̄/c + (λ_0 + κθ̄/c) e^{ct}
        self.lambda0 * (c * t).exp() + self.kappa * self.theta_bar * (c * t).exp_m1() / c
    }

    /// `E[N_T] = ∫_0^T E[λ_s] ds`.
    pub fn mean_count(&self, horizon: f64) -> f64 {
        let c = 1.0 - self.kappa;
        let kt = self.kappa * self.theta_bar;
        if c == 0.0 {
            return self.lambda0 * horizon + 0.5 * kt * horizon * horizon;
        }
        let g = (c * horizon).exp_m1() / c;
        self.lambda0 * g + kt * (g - horizon) / c
    }
}

/// A simulated self-exciting path: unit-mark events and the right-continuous
/// intensity `λ_{T_i}` (after the jump) recorded at each event.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesPath {
    params: HawkesParams,
    events: MppPath,
    intensity_at_events: Vec<f64>,
}

impl HawkesPath {
    pub fn params(&self) -> &HawkesParams {
        &self.params
    }

    pub fn events(&self) -> &MppPath {
        &self.events
    }

    /// Intensity carried by the simulation at each event, after the jump.
    pub fn intensity_at_events(&self) -> &[f64] {
        &self.intensity_at_events
    }

    pub fn count_until(&self, t: f64) -> usize {
        self.events.count_until(t)
    }

    /// `λ_t` from the shot-noise representation (right-continuous).
    pub fn intensity(&self, t: f64) -> f64 {
        let k = self.params.kappa;
        let n = self.events.count_until(t);
        self.params.deterministic_intensity(t)
            + self.events.times()[..n]
                .iter()
                .map(|&ti| (-k * (t - ti)).exp())
                .sum::<f64>()
    }
}

/// Ogata thinning with bound `max(λ_current, θ̄)`, refreshed at every
/// candidate. Between events `λ` relaxes monotonically toward `θ̄`, so the
/// bound dominates the intensity until the next candidate.
pub fn simulate_hawkes(
    params: &HawkesParams,
    horizon: f64,
    seed: u64,
    path_index: u64,
    max_events: usize,
) -> Result<HawkesPath> {
    let mut rng = path_rng(seed, path_index, StreamTag::Hawkes);
    simulate_hawkes_with(params, horizon, &mut rng, max_events)
}

pub fn simulate_hawkes_with<R: Rng + ?Sized>(
    params: &HawkesParams,
    horizon: f64,
    rng: &mut R,
    max_events: usize,
) -> Result<HawkesPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive and finite"));
    }
    let (k, th) = (params.kappa, params.theta_bar);
    let mut events = MppPath::with_capacity(1, horizon, 16);
    let mut at_events = Vec::new();
    let mut t = 0.0;
    let mut lambda = params.lambda0;
    loop {
        let bound = lambda.max(th);
        if bound <= 0.0 {
            break;
        }
        let e: f64 = rng.sample(Exp1);
        let cand = t + e / bound;
        if cand > horizon {
            break;
        }
        lambda = th + (lambda - th) * (-k * (cand - t)).exp();
        t = cand;
        let u: f64 = rng.random();
        if u * bound < lambda {
            if events.len() == max_events {
                return Err(Error::ExplosionGuard { cap: max_events });
            }
            lambda += 1.0;
            events.push_event(t, &[1.0]);
            at_events.push(lambda);
        }
    }
    Ok(HawkesPath {
        params: *params,
        events,
        intensity_at_events: at_events,
    })
}

/// RK4 solution of the Riccati system on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub grid: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub psi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    /// Boundary datum `ψ(0)`.
    pub u: [Complex64; 2],
}

impl RiccatiSolution {
    /// `(φ, ψ_1, ψ_2)` at the final grid point.
    pub fn terminal(&self) -> (Complex64, Complex64, Complex64) {
        let n = self.grid.len() - 1;
        (self.phi[n], self.psi1[n], self.psi2[n])
    }
}

/// `steps` is the total number of RK4 steps over `[0, horizon]`.
pub fn riccati_solve(params: &HawkesParams, u: [Complex64; 2], horizon: f64, steps: usize) -> Result<RiccatiSolution> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameter("at least 100 Riccati steps are required"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be finite and non-negative"));
    }
    let (k, kt) = (params.kappa, params.kappa * params.theta_bar);
    let psi1 = u[0];
    let rhs = |p2: Complex64| (-p2 * k + (p2 + psi1).exp() - 1.0, p2 * kt);
    let h = horizon / steps as f64;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut phi = Vec::with_capacity(steps + 1);
    let mut psi2 = Vec::with_capacity(steps + 1);
    let (mut f, mut p) = (Complex64::new(0.0, 0.0), u[1]);
    grid.push(0.0);
    phi.push(f);
    psi2.push(p);
    for n in 1..=steps {
        // φ does not feed back, so only ψ_2 drives the stages
        let (k1, l1) = rhs(p);
        let (k2, l2) = rhs(p + k1 * (0.5 * h));
        let (k3, l3) = rhs(p + k2 * (0.5 * h));
        let (k4, l4) = rhs(p + k3 * h);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        f += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        let t = if n == steps { horizon } else { h * n as f64 };
        if !(p.norm() <= PSI_GUARD && (p + psi1).re <= EXP_GUARD && f.re.is_finite() && f.im.is_finite()) {
            return Err(Error::BlowUp { t });
        }
        grid.push(t);
        phi.push(f);
        psi2.push(p);
    }
    Ok(RiccatiSolution {
        psi1: alloc::vec![psi1; grid.len()],
        grid,
        phi,
        psi2,
        u,
    })
}

/// Default step count for a horizon: 2048 per unit, at least 100.
pub fn default_steps(horizon: f64) -> usize {
    ((STEPS_PER_UNIT as f64 * horizon).ceil() as usize).max(MIN_STEPS)
}

/// Observed state `(t, N_t, λ_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineState {
    pub t: f64,
    pub n: f64,
    pub lambda: f64,
}

impl AffineState {
    pub fn initial(params: &HawkesParams) -> Self {
        Self {
            t: 0.0,
            n: 0.0,
            lambda: params.lambda0,
        }
    }

    pub fn from_path(path: &HawkesPath, t: f64) -> Self {
        Self {
            t,
            n: path.count_until(t) as f64,
            lambda: path.intensity(t),
        }
    }
}

/// `E[exp(z_1 N_T + z_2 λ_T) | F_t]` for complex `z`.
pub fn affine_transform(
    params: &HawkesParams,
    state: &AffineState,
    horizon: f64,
    z: [Complex64; 2],
) -> Result<Complex64> {
    if !(state.t >= 0.0 && state.t <= horizon) {
        return Err(Error::InvalidParameter("state time must lie in [0, T]"));
    }
    if !(state.n >= 0.0 && state.lambda >= 0.0) {
        return Err(Error::InvalidParameter("state must be non-negative"));
    }
    if params.lambda0 == 0.0 && state.lambda < params.deterministic_intensity(state.t) * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("intensity is below its reachable range"));
    }
    let tau = horizon - state.t;
    let (phi, psi1, psi2) = riccati_solve(params, z, tau, default_steps(tau))?.terminal();
    Ok((phi + psi1 * state.n + psi2 * state.lambda).exp())
}

/// `E[e^{i(u_1 N_T + u_2 λ_T)} | F_t]`.
pub fn affine_cf(params: &HawkesParams, state: &AffineState, horizon: f64, u: [f64; 2]) -> Result<Complex64> {
    affine_transform(
        params,
        state,
        horizon,
        [Complex64::new(0.0, u[0]), Complex64::new(0.0, u[1])],
    )
}

/// `E[N_T]` from the transform by a central difference at `z = 0`.
pub fn expected_count(params: &HawkesParams, horizon: f64) -> Result<f64> {
    let h = 1e-4;
    let s0 = AffineState::initial(params);
    let up = affine_transform(params, &s0, horizon, [Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)])?;
    let dn = affine_transform(
        params,
        &s0,
        horizon,
        [Complex64::new(-h, 0.0), Complex64::new(0.0, 0.0)],
    )?;
    Ok((up.re - dn.re) / (2.0 * h))
}
