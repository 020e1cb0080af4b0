//! Noise kernels `G(t, x)` and their time derivatives `g(t, x)`.
//!
//! Every kernel is absolutely continuous in time,
//! `G(t, x) = G(0, x) + ∫_0^t g(s, x) ds`, which is what makes the resulting
//! shot-noise process a semimartingale. Built-in kinds carry closed forms for
//! both functions; custom kernels supply both and are checked numerically
//! when constructed.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::quad::Quadrature;
use crate::{Error, Result, MAX_MARK_DIM};

pub type KernelFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Structural kind of a kernel.
#[derive(Clone)]
pub enum KernelKind {
    /// `G(t, x) = x_1`: the shot is a permanent level shift.
    JumpToLevel,
    /// `G(t, x) = a x_1 e^{-bt}`.
    Exponential {
        a: f64,
        b: f64,
    },
    /// `G(t, x) = x_1 / (1 + ct)`.
    PowerLaw {
        c: f64,
    },
    /// `G(t, (u, v)) = u e^{-vt}`: the mark carries its own decay rate.
    RandomDecay,
    Custom(CustomKernel),
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::JumpToLevel => f.write_str("JumpToLevel"),
            KernelKind::Exponential { a, b } => write!(f, "Exponential(a={a}, b={b})"),
            KernelKind::PowerLaw { c } => write!(f, "PowerLaw(c={c})"),
            KernelKind::RandomDecay => f.write_str("RandomDecay"),
            KernelKind::Custom(CustomKernel::Closure { .. }) => f.write_str("Custom(closure)"),
            KernelKind::Custom(CustomKernel::Table(t)) => {
                write!(f, "Custom(table {}x{})", t.times.len(), t.marks.len())
            }
        }
    }
}

#[derive(Clone)]
pub enum CustomKernel {
    Closure { value: KernelFn, derivative: KernelFn },
    Table(KernelTable),
}

/// A kernel tabulated on a rectangular `(t, x_1)` grid and interpolated
/// bilinearly. Beyond the last time knot the kernel is frozen (`g = 0`);
/// outside the mark range it is extrapolated linearly in `x_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    times: Vec<f64>,
    marks: Vec<f64>,
    /// Row-major: `values[i * marks.len() + j] = G(times[i], marks[j])`.
    values: Vec<f64>,
}

impl KernelTable {
    /// Builds a table from `(t, x, G)` triples covering a full rectangular
    /// grid with at least two distinct times and two distinct marks; the
    /// first time knot must be zero.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let mut times: Vec<f64> = triples.iter().map(|p| p.0).collect();
        let mut marks: Vec<f64> = triples.iter().map(|p| p.1).collect();
        if triples
            .iter()
            .any(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite()))
        {
            return Err(Error::InvalidParameter("kernel table entries must be finite"));
        }
        sort_dedup(&mut times);
        sort_dedup(&mut marks);
        if times.len() < 2 || marks.len() < 2 {
            return Err(Error::InvalidParameter("kernel table needs two times and two marks"));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter("kernel table must start at t = 0"));
        }
        if triples.len() != times.len() * marks.len() {
            return Err(Error::InvalidParameter("kernel table must be a full (t, x) grid"));
        }
        let mut values = alloc::vec![f64::NAN; times.len() * marks.len()];
        for &(t, x, g) in triples {
            let i = times.partition_point(|&v| v < t);
            let j = marks.partition_point(|&v| v < x);
            let slot = &mut values[i * marks.len() + j];
            if !slot.is_nan() {
                return Err(Error::InvalidParameter("duplicate (t, x) entry in kernel table"));
            }
            *slot = g;
        }
        Ok(Self { times, marks, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn at_time_index(&self, i: usize, x: f64) -> f64 {
        let m = self.marks.len();
        let j = (self.marks.partition_point(|&v| v <= x).max(1) - 1).min(m - 2);
        let (x0, x1) = (self.marks[j], self.marks[j + 1]);
        let (g0, g1) = (self.values[i * m + j], self.values[i * m + j + 1]);
        g0 + (g1 - g0) * (x - x0) / (x1 - x0)
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return self.at_time_index(n - 1, x);
        }
        let i = self.times.partition_point(|&v| v <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        (1.0 - w) * self.at_time_index(i, x) + w * self.at_time_index(i + 1, x)
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&v| v <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        (self.at_time_index(i + 1, x) - self.at_time_index(i, x)) / (t1 - t0)
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

/// Probe used to verify `G(t,x) - G(0,x) = ∫_0^t g(s,x) ds` numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyProbe {
    pub times: Vec<f64>,
    /// Values assigned to every mark component.
    pub mark_values: Vec<f64>,
    pub tol: f64,
}

impl Default for ConsistencyProbe {
    fn default() -> Self {
        Self {
            times: (0..=10).map(|k| 0.5 * k as f64).collect(),
            mark_values: alloc::vec![-1.0, 0.5, 1.0, 2.0],
            tol: 1e-8,
        }
    }
}

/// A noise kernel: `G`, its time derivative `g`, and the mark dimension.
///
/// Kernels are immutable and cheap to clone; custom closures are shared.
#[derive(Clone, Debug)]
pub struct NoiseKernel {
    kind: KernelKind,
    mark_dim: usize,
}

/// Outcome of [`NoiseKernel::is_markov_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovVerdict {
    pub markov: bool,
    /// `(a, b)` with `H(t) = a e^{-bt}`, present when `markov` holds.
    pub fitted: Option<(f64, f64)>,
    /// Largest `|H(s-t)H(t) - H(s)H(0)|` over the grid pairs.
    pub max_residual: f64,
}

impl NoiseKernel {
    pub fn jump_to_level() -> Self {
        Self {
            kind: KernelKind::JumpToLevel,
            mark_dim: 1,
        }
    }

    pub fn exponential(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter("exponential kernel parameters must be finite"));
        }
        Ok(Self {
            kind: KernelKind::Exponential { a, b },
            mark_dim: 1,
        })
    }

    pub fn power_law(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter("power-law decay c must be positive"));
        }
        Ok(Self {
            kind: KernelKind::PowerLaw { c },
            mark_dim: 1,
        })
    }

    pub fn random_decay() -> Self {
        Self {
            kind: KernelKind::RandomDecay,
            mark_dim: 2,
        }
    }

    /// A user-supplied kernel. `value` and `derivative` must agree in the
    /// sense of absolute continuity on every probe point.
    pub fn custom(mark_dim: usize, value: KernelFn, derivative: KernelFn, probe: &ConsistencyProbe) -> Result<Self> {
        check_dim(mark_dim)?;
        let kernel = Self {
            kind: KernelKind::Custom(CustomKernel::Closure { value, derivative }),
            mark_dim,
        };
        kernel.verify(probe)?;
        Ok(kernel)
    }

    /// A tabulated one-dimensional kernel.
    pub fn table(table: KernelTable, probe: &ConsistencyProbe) -> Result<Self> {
        let kernel = Self {
            kind: KernelKind::Custom(CustomKernel::Table(table)),
            mark_dim: 1,
        };
        kernel.verify(probe)?;
        Ok(kernel)
    }

    /// Widens a built-in kernel that only reads `x_1` to a `d`-dimensional
    /// mark space.
    pub fn with_mark_dim(mut self, d: usize) -> Result<Self> {
        check_dim(d)?;
        match self.kind {
            KernelKind::JumpToLevel | KernelKind::Exponential { .. } | KernelKind::PowerLaw { .. } => {
                self.mark_dim = d;
                Ok(self)
            }
            KernelKind::RandomDecay if d == 2 => Ok(self),
            _ => Err(Error::InvalidParameter("mark dimension is fixed for this kernel")),
        }
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn mark_dim(&self) -> usize {
        self.mark_dim
    }

    /// `(a, b)` for exponential kernels.
    pub fn exponential_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            KernelKind::Exponential { a, b } => Some((a, b)),
            _ => None,
        }
    }

    /// True when `g ≡ 0`.
    pub fn is_constant_in_time(&self) -> bool {
        matches!(self.kind, KernelKind::JumpToLevel)
    }

    /// Time knots where `g` may be discontinuous.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.kind {
            KernelKind::Custom(CustomKernel::Table(t)) => t.times(),
            _ => &[],
        }
    }

    /// `G(t, x)`.
    pub fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_args(t, x)?;
        finite(self.value_raw(t, x), t)
    }

    /// `g(t, x) = ∂_t G(t, x)`.
    pub fn derivative(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_args(t, x)?;
        finite(self.derivative_raw(t, x), t)
    }

    /// Unchecked `G`; callers guarantee `t ≥ 0` and the mark length.
    #[inline]
    pub(crate) fn value_raw(&self, t: f64, x: &[f64]) -> f64 {
        match &self.kind {
            KernelKind::JumpToLevel => x[0],
            KernelKind::Exponential { a, b } => a * x[0] * (-b * t).exp(),
            KernelKind::PowerLaw { c } => x[0] / (1.0 + c * t),
            KernelKind::RandomDecay => x[0] * (-x[1] * t).exp(),
            KernelKind::Custom(CustomKernel::Closure { value, .. }) => value(t, x),
            KernelKind::Custom(CustomKernel::Table(tab)) => tab.value(t, x[0]),
        }
    }

    #[inline]
    pub(crate) fn derivative_raw(&self, t: f64, x: &[f64]) -> f64 {
        match &self.kind {
            KernelKind::JumpToLevel => 0.0,
            KernelKind::Exponential { a, b } => -b * a * x[0] * (-b * t).exp(),
            KernelKind::PowerLaw { c } => {
                let d = 1.0 + c * t;
                -c * x[0] / (d * d)
            }
            KernelKind::RandomDecay => -x[1] * x[0] * (-x[1] * t).exp(),
            KernelKind::Custom(CustomKernel::Closure { derivative, .. }) => derivative(t, x),
            KernelKind::Custom(CustomKernel::Table(tab)) => tab.derivative(t, x[0]),
        }
    }

    /// `|G(t,x) - G(0,x) - ∫_0^t g(s,x) ds|`.
    pub fn continuity_residual(&self, t: f64, x: &[f64], quad: &Quadrature) -> Result<f64> {
        let lhs = self.value(t, x)? - self.value(0.0, x)?;
        let integral: f64 = quad.integrate_with_breaks(|s| self.derivative_raw(s, x), 0.0, t, self.breakpoints())?;
        Ok((lhs - integral).abs())
    }

    fn verify(&self, probe: &ConsistencyProbe) -> Result<()> {
        let quad = Quadrature::new(0.1 * probe.tol);
        let mut x = [0.0; MAX_MARK_DIM];
        for &v in &probe.mark_values {
            x[..self.mark_dim].fill(v);
            for &t in &probe.times {
                let residual = self.continuity_residual(t, &x[..self.mark_dim], &quad)?;
                if residual > probe.tol {
                    return Err(Error::InconsistentKernel { t, residual });
                }
            }
        }
        Ok(())
    }

    fn check_args(&self, t: f64, x: &[f64]) -> Result<()> {
        if x.len() != self.mark_dim {
            return Err(Error::DimensionMismatch {
                expected: self.mark_dim,
                got: x.len(),
            });
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter("kernel time must be finite and non-negative"));
        }
        Ok(())
    }

    /// Finite-grid test of the multiplicative Cauchy relation
    /// `H(s-t) H(t) = H(s) H(0)` for a separable kernel `G(t,x) = x_1 H(t)`.
    ///
    /// The relation characterizes exponential decay among separable kernels.
    /// The grid test replaces the range condition on `H` near zero by the
    /// requirement `H(0) ≠ 0`; it certifies the relation only on the pairs
    /// it visits.
    pub fn is_markov_kernel(&self, grid: &[f64], tol: f64) -> Result<MarkovVerdict> {
        if grid.len() < 3 {
            return Err(Error::InvalidParameter("Markov test needs at least three grid points"));
        }
        if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "Markov grid must be increasing and non-negative",
            ));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive"));
        }
        self.check_separable(grid)?;

        let ones = [1.0; MAX_MARK_DIM];
        let unit = &ones[..self.mark_dim];
        let h = |t: f64| self.value(t, unit);
        let h0 = h(0.0)?;
        if h0.abs() < tol {
            return Err(Error::ZeroAtOrigin { value: h0 });
        }
        let hs: Vec<f64> = grid.iter().map(|&t| h(t)).collect::<Result<_>>()?;
        let mut max_residual: f64 = 0.0;
        for (i, &t) in grid.iter().enumerate() {
            for (j, &s) in grid.iter().enumerate().skip(i) {
                let r = (h(s - t)? * hs[i] - hs[j] * h0).abs();
                max_residual = max_residual.max(r);
            }
        }
        let ratio = h(1.0)? / h0;
        let markov = max_residual <= tol && ratio > 0.0;
        Ok(MarkovVerdict {
            markov,
            fitted: markov.then(|| (h0, -ratio.ln())),
            max_residual,
        })
    }

    /// `G(t, x) / x_1` must not depend on the mark. Probes `x_1 ∈ {0.5, 1, 2}`
    /// (and the same values for the other components) at up to ten grid times.
    fn check_separable(&self, grid: &[f64]) -> Result<()> {
        const LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
        let stride = grid.len().div_ceil(10);
        let times: Vec<f64> = grid.iter().step_by(stride).copied().collect();

        let d = self.mark_dim;
        let mut probes: Vec<[f64; MAX_MARK_DIM]> = Vec::new();
        if d <= 3 {
            let total = 3usize.pow(d as u32);
            for code in 0..total {
                let mut x = [1.0; MAX_MARK_DIM];
                let mut c = code;
                for xi in x.iter_mut().take(d) {
                    *xi = LEVELS[c % 3];
                    c /= 3;
                }
                probes.push(x);
            }
        } else {
            for k in 0..d {
                for &v in &LEVELS {
                    let mut x = [1.0; MAX_MARK_DIM];
                    x[k] = v;
                    probes.push(x);
                }
            }
        }

        let mut spread: f64 = 0.0;
        for &t in &times {
            let reference = self.value(t, &[1.0; MAX_MARK_DIM][..d])?;
            for x in &probes {
                let r = self.value(t, &x[..d])? / x[0];
                let dev = (r - reference).abs() / reference.abs().max(1.0);
                spread = spread.max(dev);
            }
        }
        if spread >= 1e-9 {
            return Err(Error::NotSeparable { spread });
        }
        Ok(())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_MARK_DIM {
        return Err(Error::InvalidParameter("mark dimension must be between 1 and 8"));
    }
    Ok(())
}

fn finite(v: f64, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// `n + 1` evenly spaced points on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;
    use std::vec;

    fn default_grid() -> Vec<f64> {
        uniform_grid(5.0, 10)
    }

    #[test]
    fn eval_examples() {
        let e = NoiseKernel::exponential(1.0, 2.0).unwrap();
        assert_eq!(e.value(0.0, &[3.0]).unwrap(), 3.0);
        let p = NoiseKernel::power_law(1.0).unwrap();
        assert_eq!(p.value(1.0, &[2.0]).unwrap(), 1.0);
        let r = NoiseKernel::random_decay();
        assert!((r.value(LN_2, &[4.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        let j = NoiseKernel::jump_to_level();
        assert_eq!(j.value(10.0, &[-1.5]).unwrap(), -1.5);
        assert_eq!(j.derivative(10.0, &[-1.5]).unwrap(), 0.0);
    }

    #[test]
    fn eval_errors() {
        let e = NoiseKernel::exponential(1.0, 2.0).unwrap();
        assert_eq!(
            e.value(0.0, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        );
        let bad = NoiseKernel::exponential(1.0, -800.0).unwrap();
        assert!(matches!(bad.value(1.0, &[1.0]), Err(Error::NonFinite { .. })));
        assert!(e.value(-1.0, &[1.0]).is_err());
        assert!(NoiseKernel::power_law(0.0).is_err());
    }

    #[test]
    fn builtins_are_absolutely_continuous() {
        let quad = Quadrature::default();
        let kernels = [
            NoiseKernel::jump_to_level(),
            NoiseKernel::exponential(1.5, 0.7).unwrap(),
            NoiseKernel::power_law(2.0).unwrap(),
            NoiseKernel::random_decay(),
        ];
        for k in &kernels {
            for i in 0..50 {
                let t = 5.0 * i as f64 / 49.0;
                for j in 0..50 {
                    let x1 = -3.0 + 6.0 * j as f64 / 49.0;
                    let x = [x1, 0.2 + 0.05 * j as f64];
                    let r = k.continuity_residual(t, &x[..k.mark_dim()], &quad).unwrap();
                    assert!(r <= 1e-8, "{k:?} t={t} x={x1}: {r:e}");
                }
            }
        }
    }

    #[test]
    fn exponential_semigroup_identity() {
        let k = NoiseKernel::exponential(2.0, 0.8).unwrap();
        for &(t, s) in &[(0.0, 1.0), (0.3, 2.2), (4.0, 0.01)] {
            let lhs = k.value(t + s, &[1.7]).unwrap();
            let rhs = (-0.8 * s).exp() * k.value(t, &[1.7]).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }

    #[test]
    fn markov_examples() {
        let k = NoiseKernel::exponential(1.0, 0.5).unwrap();
        let v = k.is_markov_kernel(&default_grid(), 1e-10).unwrap();
        assert!(v.markov);
        let (a, b) = v.fitted.unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);

        let k = NoiseKernel::exponential(2.0, 0.0).unwrap();
        let v = k.is_markov_kernel(&default_grid(), 1e-10).unwrap();
        assert_eq!(v.fitted, Some((2.0, 0.0)));

        let k = NoiseKernel::power_law(1.0).unwrap();
        let v = k.is_markov_kernel(&default_grid(), 1e-10).unwrap();
        assert!(!v.markov);
        assert!(v.fitted.is_none());
        // Independent oracle: the residual at (s, t) = (2, 1) alone is
        // |1/(2·2) - 1/3| = 1/12.
        assert!(v.max_residual >= 1.0 / 12.0 - 1e-15);
    }

    #[test]
    fn markov_errors() {
        let grid = default_grid();
        assert!(matches!(
            NoiseKernel::random_decay().is_markov_kernel(&grid, 1e-10),
            Err(Error::NotSeparable { .. })
        ));
        assert!(matches!(
            NoiseKernel::exponential(0.0, 1.0)
                .unwrap()
                .is_markov_kernel(&grid, 1e-10),
            Err(Error::ZeroAtOrigin { .. })
        ));
        assert!(NoiseKernel::jump_to_level()
            .is_markov_kernel(&[0.0, 1.0], 1e-10)
            .is_err());
        // x1^2 is not of the form x1·H(t)
        let sq: KernelFn = Arc::new(|_, x: &[f64]| x[0] * x[0]);
        let zero: KernelFn = Arc::new(|_, _: &[f64]| 0.0);
        let k = NoiseKernel::custom(1, sq, zero, &ConsistencyProbe::default()).unwrap();
        assert!(matches!(
            k.is_markov_kernel(&grid, 1e-10),
            Err(Error::NotSeparable { .. })
        ));
    }

    #[test]
    fn jump_to_level_is_markov_with_zero_decay() {
        let v = NoiseKernel::jump_to_level()
            .is_markov_kernel(&default_grid(), 1e-12)
            .unwrap();
        assert_eq!(v.fitted, Some((1.0, 0.0)));
    }

    #[test]
    fn custom_kernel_consistency_is_verified() {
        let value: KernelFn = Arc::new(|t, x: &[f64]| x[0] * (1.0 + t * t));
        let good: KernelFn = Arc::new(|t, x: &[f64]| 2.0 * t * x[0]);
        let bad: KernelFn = Arc::new(|t, x: &[f64]| t * x[0]);
        let probe = ConsistencyProbe::default();
        assert!(NoiseKernel::custom(1, value.clone(), good, &probe).is_ok());
        assert!(matches!(
            NoiseKernel::custom(1, value, bad, &probe),
            Err(Error::InconsistentKernel { .. })
        ));
    }

    #[test]
    fn table_kernel_interpolates_and_is_consistent() {
        // G(t, x) = x · max(1 - t/2, 0) sampled at t ∈ {0, 1, 2}, x ∈ {0, 1}
        let mut triples = vec![];
        for &t in &[0.0, 1.0, 2.0] {
            for &x in &[0.0, 1.0] {
                triples.push((t, x, x * (1.0 - t / 2.0)));
            }
        }
        let table = KernelTable::from_triples(&triples).unwrap();
        let k = NoiseKernel::table(table, &ConsistencyProbe::default()).unwrap();
        assert!((k.value(0.5, &[3.0]).unwrap() - 2.25).abs() < 1e-15);
        assert!((k.derivative(1.5, &[2.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(k.value(7.0, &[2.0]).unwrap(), 0.0);
        assert_eq!(k.derivative(7.0, &[2.0]).unwrap(), 0.0);
        assert_eq!(k.breakpoints(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn table_rejects_ragged_grids() {
        assert!(KernelTable::from_triples(&[(0.0, 0.0, 1.0), (1.0, 1.0, 1.0), (0.0, 1.0, 1.0)]).is_err());
        assert!(
            KernelTable::from_triples(&[(0.5, 0.0, 1.0), (1.0, 0.0, 1.0), (0.5, 1.0, 1.0), (1.0, 1.0, 1.0)]).is_err()
        );
    }
}
