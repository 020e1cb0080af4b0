//! Shot-noise processes `S_t = Σ_{T_i ≤ t} G(t - T_i, U_i)` driven by a
//! marked point process with deterministic compensator.
//!
//! With a deterministic compensator the future shots are independent of the
//! past, so the conditional characteristic function factorizes into a known
//! part from the shots already observed and an integral against `ν`:
//!
//! ```text
//! E[e^{iθS_T} | F_t] = exp(iθ Σ_{T_i ≤ t} G(T - T_i, U_i))
//!                    · exp(∫_t^T ∫ (e^{iθG(T-s,x)} - 1) ν(ds, dx))
//! ```

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::kernels::NoiseKernel;
use crate::point_process::{CompensatorSpec, MppPath};
use crate::quad::Quadrature;
use crate::{Error, Result};

/// A kernel paired with the compensator of its driving point process.
#[derive(Clone, Debug)]
pub struct ShotNoiseProcess {
    kernel: NoiseKernel,
    spec: CompensatorSpec,
}

/// What is known at time `t`: the shots observed on `[0, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationState {
    t: f64,
    observed: MppPath,
}

impl FiltrationState {
    /// `observed` must not contain events after `t`.
    pub fn new(t: f64, observed: MppPath) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter("state time must be finite and non-negative"));
        }
        if observed.times().last().is_some_and(|&s| s > t) {
            return Err(Error::InvalidParameter(
                "observed events must not exceed the state time",
            ));
        }
        Ok(Self { t, observed })
    }

    /// The state at time zero (nothing observed).
    pub fn initial(mark_dim: usize) -> Result<Self> {
        Self::new(0.0, MppPath::empty(mark_dim, 1.0)?)
    }

    /// The state at `t` generated by `path`.
    pub fn from_path(path: &MppPath, t: f64) -> Result<Self> {
        if t == 0.0 {
            return Self::new(0.0, MppPath::empty(path.mark_dim(), path.horizon())?);
        }
        Self::new(t, path.restricted(t)?)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn observed(&self) -> &MppPath {
        &self.observed
    }
}

/// The two logarithmic factors of the conditional characteristic function.
///
/// `from_state` is `iθ Σ_{T_i ≤ t} G(T - T_i, U_i)` (purely imaginary) and
/// `from_future` is `∫_t^T ∫ (e^{iθG(T-s,x)} - 1) ν(ds,dx)` (non-positive
/// real part). For exponential kernels `from_state = iθ e^{-b(T-t)} S_t`,
/// which is the exponential-affine form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfParts {
    pub from_state: Complex64,
    pub from_future: Complex64,
}

impl CfParts {
    pub fn value(&self) -> Complex64 {
        (self.from_state + self.from_future).exp()
    }
}

/// Pathwise split `S = drift + jump_part` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub grid: Vec<f64>,
    /// `∫_0^t Σ_{T_i ≤ u} g(u - T_i, U_i) du`.
    pub drift: Vec<f64>,
    /// `Σ_{T_i ≤ t} G(0, U_i)`.
    pub jump_part: Vec<f64>,
}

impl ShotNoiseProcess {
    pub fn new(kernel: NoiseKernel, spec: CompensatorSpec) -> Result<Self> {
        if kernel.mark_dim() != spec.mark_dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.mark_dim(),
                got: spec.mark_dim(),
            });
        }
        Ok(Self { kernel, spec })
    }

    pub fn kernel(&self) -> &NoiseKernel {
        &self.kernel
    }

    pub fn spec(&self) -> &CompensatorSpec {
        &self.spec
    }

    fn check_path(&self, path: &MppPath) -> Result<()> {
        if path.mark_dim() != self.kernel.mark_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.mark_dim(),
                got: path.mark_dim(),
            });
        }
        Ok(())
    }

    /// `∫_0^T ∫ g(s,x)² ν(ds,dx)`, which must be finite for the
    /// semimartingale decomposition to exist.
    pub fn check_integrability(&self, horizon: f64, quad: &Quadrature) -> Result<f64> {
        let k = &self.kernel;
        let v = self
            .spec
            .compensator_mass(
                0.0,
                horizon,
                |s, x| {
                    let g = k.derivative_raw(s, x);
                    g * g
                },
                quad,
            )
            .map_err(|_| Error::IntegrabilityFailure("∫∫ g² dν could not be evaluated"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::IntegrabilityFailure("∫∫ g² dν is infinite"))
        }
    }

    /// `S_t`, right-continuous: a shot at `T_i = t` is included.
    pub fn eval(&self, path: &MppPath, t: f64) -> Result<f64> {
        self.check_path(path)?;
        if !(t >= 0.0 && t <= path.horizon()) {
            return Err(Error::InvalidParameter("evaluation time must lie in [0, horizon]"));
        }
        self.sum_shots(path, t, t)
    }

    /// `Σ_{T_i ≤ t} G(at - T_i, U_i)` with `at ≥ t`.
    fn sum_shots(&self, path: &MppPath, t: f64, at: f64) -> Result<f64> {
        path.iter()
            .take(path.count_until(t))
            .map(|(ti, u)| self.kernel.value(at - ti, u))
            .sum()
    }

    pub fn eval_grid(&self, path: &MppPath, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter().map(|&t| self.eval(path, t)).collect()
    }

    /// `E[e^{iθS_T} | F_t]` by nested adaptive quadrature.
    pub fn conditional_cf(
        &self,
        state: &FiltrationState,
        horizon: f64,
        theta: f64,
        quad: &Quadrature,
    ) -> Result<Complex64> {
        Ok(self.conditional_cf_parts(state, horizon, theta, quad)?.value())
    }

    pub fn conditional_cf_parts(
        &self,
        state: &FiltrationState,
        horizon: f64,
        theta: f64,
        quad: &Quadrature,
    ) -> Result<CfParts> {
        self.check_path(state.observed())?;
        let t = state.time();
        if !(t <= horizon && horizon.is_finite()) {
            return Err(Error::InvalidParameter(
                "transform horizon must not precede the state time",
            ));
        }
        let past = self.sum_shots(state.observed(), t, horizon)?;
        let from_state = Complex64::new(0.0, theta * past);
        if theta == 0.0 {
            return Ok(CfParts {
                from_state,
                from_future: Complex64::new(0.0, 0.0),
            });
        }
        let k = &self.kernel;
        let from_future =
            self.spec
                .compensator_integral(t, horizon, |s, x| expm1_i(theta * k.value_raw(horizon - s, x)), quad)?;
        Ok(CfParts {
            from_state,
            from_future,
        })
    }

    /// `ln E[e^{hS_T} | F_t]`; [`Error::MgfDiverges`] when infinite.
    pub fn conditional_log_mgf(&self, state: &FiltrationState, horizon: f64, h: f64, quad: &Quadrature) -> Result<f64> {
        self.check_path(state.observed())?;
        let t = state.time();
        if !(t <= horizon && horizon.is_finite()) {
            return Err(Error::InvalidParameter(
                "transform horizon must not precede the state time",
            ));
        }
        let past = h * self.sum_shots(state.observed(), t, horizon)?;
        let k = &self.kernel;
        let future = self
            .spec
            .compensator_mass(t, horizon, |s, x| (h * k.value_raw(horizon - s, x)).exp_m1(), quad)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::MgfDiverges,
                other => other,
            })?;
        let v = past + future;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::MgfDiverges)
        }
    }

    /// `E[S_T | F_t] = e^{-b(T-t)} S_t + ∫_t^T ∫ a x_1 e^{-b(T-s)} ν(ds, dx)`
    /// for an exponential kernel, using closed-form mark means.
    pub fn conditional_mean(&self, state: &FiltrationState, horizon: f64, quad: &Quadrature) -> Result<f64> {
        let (a, b) = self.kernel.exponential_params().ok_or(Error::KernelNotExponential)?;
        self.check_path(state.observed())?;
        let t = state.time();
        if !(t <= horizon && horizon.is_finite()) {
            return Err(Error::InvalidParameter("horizon must not precede the state time"));
        }
        let s_t = self.sum_shots(state.observed(), t, t)?;
        let spec = &self.spec;
        // mark means are checked up front so the integrand stays infallible
        for s in core::iter::once(t).chain(spec.time_breaks(t, horizon)) {
            spec.marks_at(s).mean(0).ok_or(Error::UnsupportedMarks)?;
        }
        let future: f64 = quad.integrate_with_breaks(
            |s| {
                let m1 = spec.marks_at(s).mean(0).unwrap_or(f64::NAN);
                a * m1 * (-b * (horizon - s)).exp() * spec.rate().eval(s)
            },
            t,
            horizon,
            &spec.time_breaks(t, horizon),
        )?;
        Ok((-b * (horizon - t)).exp() * s_t + future)
    }

    /// Splits the path into the absolutely continuous drift
    /// `∫_0^t Σ_{T_i ≤ u} g(u - T_i, U_i) du` (pathwise quadrature) and the
    /// jump part `Σ_{T_i ≤ t} G(0, U_i)`.
    pub fn semimartingale_decompose(&self, path: &MppPath, grid: &[f64], quad: &Quadrature) -> Result<Decomposition> {
        let t_max = grid.last().copied().unwrap_or(0.0);
        self.decomposer(t_max, quad)?.decompose(path, grid)
    }

    /// Checks `∫∫ g² dν < ∞` on `[0, horizon]` once, for decomposing many
    /// paths.
    pub fn decomposer(&self, horizon: f64, quad: &Quadrature) -> Result<Decomposer<'_>> {
        self.check_integrability(horizon, quad)?;
        Ok(Decomposer {
            process: self,
            horizon,
            quad: *quad,
        })
    }
}

/// Semimartingale decomposition on a horizon whose integrability has been
/// checked.
#[derive(Debug, Clone, Copy)]
pub struct Decomposer<'a> {
    process: &'a ShotNoiseProcess,
    horizon: f64,
    quad: Quadrature,
}

impl Decomposer<'_> {
    /// Grid points must be sorted and lie in `[0, min(horizon, path horizon)]`.
    pub fn decompose(&self, path: &MppPath, grid: &[f64]) -> Result<Decomposition> {
        let kernel = &self.process.kernel;
        self.process.check_path(path)?;
        let end = self.horizon.min(path.horizon());
        if grid.iter().any(|&t| !(t >= 0.0 && t <= end)) || grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("grid must be sorted within [0, horizon]"));
        }
        let t_max = grid.last().copied().unwrap_or(0.0);
        let mut drift = alloc::vec![0.0; grid.len()];
        let mut jump_part = alloc::vec![0.0; grid.len()];
        let n_events = path.count_until(t_max);
        // per-piece errors add up over events and grid cells
        let piece_quad = self
            .quad
            .with_tol((self.quad.tol / (10.0 * (n_events.max(1) * grid.len().max(1)) as f64)).max(1e-14));
        let breaks = kernel.breakpoints();
        for (ti, u) in path.iter().take(n_events) {
            let g0 = kernel.value(0.0, u)?;
            let first = grid.partition_point(|&t| t < ti);
            let mut running = 0.0;
            let mut prev = 0.0;
            for k in first..grid.len() {
                let age = grid[k] - ti;
                if !kernel.is_constant_in_time() && age > prev {
                    running += piece_quad.integrate_with_breaks(|v| kernel.derivative_raw(v, u), prev, age, breaks)?;
                    prev = age;
                }
                drift[k] += running;
                jump_part[k] += g0;
            }
        }
        Ok(Decomposition {
            grid: grid.to_vec(),
            drift,
            jump_part,
        })
    }
}

/// `e^{iy} - 1` without cancellation for small `y`.
fn expm1_i(y: f64) -> Complex64 {
    let h = (0.5 * y).sin();
    Complex64::new(-2.0 * h * h, y.sin())
}

/// One Markov step of an exponential-kernel shot-noise process
/// `G(t, x) = a x e^{-bt}`: decays `S_t` over `dt` and adds the shots that
/// arrive at offsets in `(0, dt]`.
pub fn ou_recursive_update(a: f64, b: f64, s_t: f64, dt: f64, new_jumps: &[(f64, f64)]) -> f64 {
    debug_assert!(dt >= 0.0);
    debug_assert!(new_jumps.iter().all(|&(o, _)| o > 0.0 && o <= dt));
    new_jumps.iter().fold((-b * dt).exp() * s_t, |acc, &(offset, x)| {
        acc + a * x * (-b * (dt - offset)).exp()
    })
}
