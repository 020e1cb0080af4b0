//! Adaptive Simpson quadrature over real- and complex-valued integrands.
//!
//! Complex integrands are refined jointly: a panel is accepted only when the
//! modulus of the complex Richardson correction is within tolerance, so real
//! and imaginary parts share one subdivision.

use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Values that adaptive Simpson can accumulate.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;

    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }

    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Absolute-tolerance adaptive Simpson rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_depth: 30,
        }
    }
}

// Initial uniform panels; guards against a single Simpson panel that happens
// to agree with its halves on a periodic integrand.
const INITIAL_PANELS: usize = 4;

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    /// Integrates `f` over `[a, b]` (`a ≤ b`; an empty interval gives zero).
    pub fn integrate<V, F>(&self, f: F, a: f64, b: f64) -> Result<V>
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(Error::InvalidParameter("integration bounds must be finite and ordered"));
        }
        if b == a {
            return Ok(V::default());
        }
        let h = (b - a) / INITIAL_PANELS as f64;
        let panel_tol = self.tol / INITIAL_PANELS as f64;
        let mut total = V::default();
        let mut fa = eval(&f, a)?;
        for k in 0..INITIAL_PANELS {
            let lo = a + h * k as f64;
            let hi = if k + 1 == INITIAL_PANELS { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let fm = eval(&f, mid)?;
            let fb = eval(&f, hi)?;
            let whole = simpson(lo, hi, fa, fm, fb);
            let panel = Panel {
                a: lo,
                b: hi,
                fa,
                fm,
                fb,
                whole,
            };
            total = total + self.refine(&f, panel, panel_tol, self.max_depth)?;
            fa = fb;
        }
        Ok(total)
    }

    /// Integrates over `[a, b]` split at the interior `breaks`, which must be
    /// sorted. The tolerance is shared in proportion to segment length.
    pub fn integrate_with_breaks<V, F>(&self, f: F, a: f64, b: f64, breaks: &[f64]) -> Result<V>
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        if b <= a {
            return self.integrate(f, a, b);
        }
        let mut total = V::default();
        let mut lo = a;
        for &p in breaks.iter().filter(|&&p| p > a && p < b) {
            if p > lo {
                let q = self.with_tol(self.tol * (p - lo) / (b - a));
                total = total + q.integrate(&f, lo, p)?;
                lo = p;
            }
        }
        let q = self.with_tol(self.tol * (b - lo) / (b - a));
        Ok(total + q.integrate(&f, lo, b)?)
    }

    fn refine<V, F>(&self, f: &F, p: Panel<V>, tol: f64, depth: u32) -> Result<V>
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        let m = 0.5 * (p.a + p.b);
        let flm = eval(f, 0.5 * (p.a + m))?;
        let frm = eval(f, 0.5 * (m + p.b))?;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        let err = delta.magnitude();
        if err <= 15.0 * tol {
            return Ok(left + right + delta * (1.0 / 15.0));
        }
        if depth == 0 {
            // Kinks and jumps in the integrand never meet a halving local
            // tolerance; accept the panel if its error fits the global budget.
            if err <= 15.0 * self.tol {
                return Ok(left + right + delta * (1.0 / 15.0));
            }
            return Err(Error::QuadratureFailure {
                a: p.a,
                b: p.b,
                tol: self.tol,
            });
        }
        let lp = Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        };
        let rp = Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        };
        Ok(self.refine(f, lp, 0.5 * tol, depth - 1)? + self.refine(f, rp, 0.5 * tol, depth - 1)?)
    }
}

#[derive(Clone, Copy)]
struct Panel<V> {
    a: f64,
    b: f64,
    fa: V,
    fm: V,
    fb: V,
    whole: V,
}

fn simpson<V: QuadValue>(a: f64, b: f64, fa: V, fm: V, fb: V) -> V {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

fn eval<V: QuadValue, F: Fn(f64) -> V>(f: &F, x: f64) -> Result<V> {
    let v = f(x);
    if v.is_finite_value() {
        Ok(v)
    } else {
        Err(Error::NonFinite { t: x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomials_up_to_cubic_are_exact() {
        let q = Quadrature::default();
        let v: f64 = q.integrate(|x| 3.0 * x * x * x - x + 2.0, -1.0, 2.0).unwrap();
        // 3/4 (16 - 1) - (4 - 1)/2 + 2·3
        assert!((v - (11.25 - 1.5 + 6.0)).abs() < 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let q = Quadrature::new(1e-12);
        let v: f64 = q.integrate(|x: f64| x.sin(), 0.0, PI).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v: f64 = q.integrate(|x: f64| (-x).exp(), 0.0, 30.0).unwrap();
        assert!((v - (1.0 - (-30.0f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn complex_oscillatory_integrand() {
        // ∫_0^1 e^{iωx} dx = (e^{iω} - 1) / (iω)
        let q = Quadrature::new(1e-12);
        let w = 7.0;
        let v: Complex64 = q.integrate(|x| Complex64::new(0.0, w * x).exp(), 0.0, 1.0).unwrap();
        let exact = (Complex64::new(0.0, w).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn kink_and_jump_are_handled() {
        let q = Quadrature::default();
        let v: f64 = q.integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-8);
        let v: f64 = q
            .integrate(|x| if x < 1.0 / 3.0 { 1.0 } else { 0.0 }, 0.0, 1.0)
            .unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-7);
        let v: f64 = q
            .integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3])
            .unwrap();
        assert!((v - 0.29).abs() < 1e-14);
    }

    #[test]
    fn depth_limit_reports_failure() {
        let q = Quadrature {
            tol: 1e-14,
            max_depth: 3,
        };
        let r: Result<f64> = q.integrate(|x: f64| (50.0 * x).sin(), 0.0, 1.0);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let q = Quadrature::default();
        let r: Result<f64> = q.integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = Quadrature::default();
        let v: f64 = q.integrate(|x| x, 2.0, 2.0).unwrap();
        assert_eq!(v, 0.0);
    }
}
