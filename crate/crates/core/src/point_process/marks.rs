use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};

use crate::quad::{QuadValue, Quadrature};
use crate::rng::{halton, normal_cdf, normal_quantile};
use crate::{Error, Result, MAX_MARK_DIM};

pub type SampleFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// Law of one mark component.
#[derive(Clone)]
pub enum MarkLaw {
    PointMass(f64),
    Normal {
        mean: f64,
        sd: f64,
    },
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `(value, probability)` atoms.
    Discrete(Vec<(f64, f64)>),
    /// Can be sampled but not integrated; analytic transforms refuse it.
    SampleOnly(SampleFn),
}

impl fmt::Debug for MarkLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkLaw::PointMass(u) => write!(f, "PointMass({u})"),
            MarkLaw::Normal { mean, sd } => write!(f, "Normal({mean}, {sd})"),
            MarkLaw::Exponential { rate } => write!(f, "Exponential({rate})"),
            MarkLaw::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            MarkLaw::Discrete(a) => write!(f, "Discrete({a:?})"),
            MarkLaw::SampleOnly(_) => f.write_str("SampleOnly"),
        }
    }
}

/// How a mark distribution is integrated against test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMode {
    /// Exact summation over atoms.
    Atoms,
    /// One absolutely continuous component, adaptive quadrature.
    Density,
    /// Several continuous components, Halton averaging.
    QuasiRandom,
    SampleOnly,
}

/// Halton points used when more than one component is continuous.
pub const QUASI_RANDOM_POINTS: u64 = 1 << 14;

impl MarkLaw {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            MarkLaw::PointMass(u) => u.is_finite(),
            MarkLaw::Normal { mean, sd } => mean.is_finite() && *sd > 0.0 && sd.is_finite(),
            MarkLaw::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            MarkLaw::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            MarkLaw::Discrete(atoms) => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                !atoms.is_empty() && atoms.iter().all(|a| a.0.is_finite() && a.1 >= 0.0) && (total - 1.0).abs() <= 1e-12
            }
            MarkLaw::SampleOnly(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("invalid mark distribution parameters"))
        }
    }

    fn is_continuous(&self) -> bool {
        matches!(
            self,
            MarkLaw::Normal { .. } | MarkLaw::Exponential { .. } | MarkLaw::Uniform { .. }
        )
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::PointMass(u) => *u,
            MarkLaw::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            MarkLaw::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            MarkLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            MarkLaw::Discrete(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            MarkLaw::SampleOnly(f) => {
                let mut adapter = DynRng(rng);
                f(&mut adapter)
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            MarkLaw::PointMass(u) => Some(*u),
            MarkLaw::Normal { mean, .. } => Some(*mean),
            MarkLaw::Exponential { rate } => Some(1.0 / rate),
            MarkLaw::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            MarkLaw::Discrete(a) => Some(a.iter().map(|(v, p)| v * p).sum()),
            MarkLaw::SampleOnly(_) => None,
        }
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        Some(match self {
            MarkLaw::PointMass(u) => {
                if x >= *u {
                    1.0
                } else {
                    0.0
                }
            }
            MarkLaw::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            MarkLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            MarkLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            MarkLaw::Discrete(a) => a.iter().filter(|(v, _)| *v <= x).map(|(_, p)| p).sum(),
            MarkLaw::SampleOnly(_) => return None,
        })
    }

    /// `ln E[e^{hU}]`, `None` when infinite or unknown.
    pub fn log_mgf(&self, h: f64) -> Option<f64> {
        match self {
            MarkLaw::PointMass(u) => Some(h * u),
            MarkLaw::Normal { mean, sd } => Some(h * mean + 0.5 * h * h * sd * sd),
            MarkLaw::Exponential { rate } => (h < *rate).then(|| (rate / (rate - h)).ln()),
            MarkLaw::Uniform { lo, hi } => {
                if h == 0.0 {
                    Some(0.0)
                } else {
                    // ln[(e^{h hi} - e^{h lo}) / (h (hi - lo))], stable form
                    let w = hi - lo;
                    Some(h * lo + ((h * w).exp_m1() / (h * w)).ln())
                }
            }
            MarkLaw::Discrete(a) => {
                let m = a.iter().map(|(v, _)| h * v).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = a.iter().map(|(v, p)| p * (h * v - m).exp()).sum();
                Some(m + s.ln())
            }
            MarkLaw::SampleOnly(_) => None,
        }
    }

    /// The law with density `e^{hu} / E[e^{hU}]` against this one, when it
    /// stays in a closed-form family.
    pub fn tilted(&self, h: f64) -> Option<MarkLaw> {
        match self {
            MarkLaw::PointMass(u) => Some(MarkLaw::PointMass(*u)),
            MarkLaw::Normal { mean, sd } => Some(MarkLaw::Normal {
                mean: mean + h * sd * sd,
                sd: *sd,
            }),
            MarkLaw::Exponential { rate } => (h < *rate).then(|| MarkLaw::Exponential { rate: rate - h }),
            MarkLaw::Discrete(a) => {
                let lm = self.log_mgf(h)?;
                Some(MarkLaw::Discrete(
                    a.iter().map(|&(v, p)| (v, p * (h * v - lm).exp())).collect(),
                ))
            }
            MarkLaw::Uniform { .. } | MarkLaw::SampleOnly(_) => None,
        }
    }

    /// Finite integration range and density for continuous laws.
    fn support(&self) -> (f64, f64, f64) {
        match self {
            MarkLaw::Normal { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd, *mean),
            MarkLaw::Exponential { rate } => (0.0, 60.0 / rate, 0.0),
            MarkLaw::Uniform { lo, hi } => (*lo, *hi, *lo),
            _ => unreachable!("support of a non-continuous law"),
        }
    }

    fn density(&self, y: f64) -> f64 {
        match self {
            MarkLaw::Normal { mean, sd } => {
                let z = (y - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * core::f64::consts::PI).sqrt())
            }
            MarkLaw::Exponential { rate } => rate * (-rate * y).exp(),
            MarkLaw::Uniform { lo, hi } => 1.0 / (hi - lo),
            _ => unreachable!("density of a non-continuous law"),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match self {
            MarkLaw::Normal { mean, sd } => mean + sd * normal_quantile(p),
            MarkLaw::Exponential { rate } => -(-p).ln_1p() / rate,
            MarkLaw::Uniform { lo, hi } => lo + (hi - lo) * p,
            _ => unreachable!("quantile of a non-continuous law"),
        }
    }

    fn atom_count(&self) -> usize {
        match self {
            MarkLaw::PointMass(_) => 1,
            MarkLaw::Discrete(a) => a.len(),
            _ => 0,
        }
    }

    fn atom(&self, i: usize) -> (f64, f64) {
        match self {
            MarkLaw::PointMass(u) => (*u, 1.0),
            MarkLaw::Discrete(a) => a[i],
            _ => unreachable!("atom of a non-discrete law"),
        }
    }
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Distribution of `ℝ^d` marks with independent components.
#[derive(Clone, Debug)]
pub struct MarkDistribution {
    components: Vec<MarkLaw>,
}

impl MarkDistribution {
    pub fn new(components: Vec<MarkLaw>) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_MARK_DIM {
            return Err(Error::InvalidParameter("mark dimension must be between 1 and 8"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    pub fn single(law: MarkLaw) -> Result<Self> {
        Self::new(alloc::vec![law])
    }

    pub fn point_mass(u: f64) -> Result<Self> {
        Self::single(MarkLaw::PointMass(u))
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::single(MarkLaw::Normal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::single(MarkLaw::Exponential { rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::single(MarkLaw::Uniform { lo, hi })
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::single(MarkLaw::Discrete(atoms))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MarkLaw] {
        &self.components
    }

    pub fn mode(&self) -> IntegrationMode {
        if self.components.iter().any(|c| matches!(c, MarkLaw::SampleOnly(_))) {
            return IntegrationMode::SampleOnly;
        }
        match self.components.iter().filter(|c| c.is_continuous()).count() {
            0 => IntegrationMode::Atoms,
            1 => IntegrationMode::Density,
            _ => IntegrationMode::QuasiRandom,
        }
    }

    /// Draws one mark into `out[..dim]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.sample(rng);
        }
    }

    /// Closed-form mean of component `k`.
    pub fn mean(&self, k: usize) -> Option<f64> {
        self.components.get(k).and_then(MarkLaw::mean)
    }

    /// Tilts the first component by `e^{h x_1}`; `None` outside closed-form
    /// families.
    pub fn tilted_first(&self, h: f64) -> Option<Self> {
        let mut components = self.components.clone();
        components[0] = components[0].tilted(h)?;
        Some(Self { components })
    }

    /// `∫ f(x) F(dx)`.
    ///
    /// Atoms are summed exactly. With one continuous component the integral
    /// runs adaptive Simpson on a truncated support (tail mass below
    /// `1e-26` for normal and exponential laws); with several it averages
    /// over [`QUASI_RANDOM_POINTS`] Halton points mapped through the
    /// component quantiles.
    pub fn integrate<V, F>(&self, f: F, tol: f64) -> Result<V>
    where
        V: QuadValue,
        F: Fn(&[f64]) -> V,
    {
        let d = self.dim();
        let mode = self.mode();
        if mode == IntegrationMode::SampleOnly {
            return Err(Error::UnsupportedMarks);
        }
        let discrete: Vec<usize> = (0..d).filter(|&k| !self.components[k].is_continuous()).collect();
        let continuous: Vec<usize> = (0..d).filter(|&k| self.components[k].is_continuous()).collect();
        let combos: usize = discrete.iter().map(|&k| self.components[k].atom_count()).product();
        let quad = Quadrature::new(tol / combos as f64);

        let mut total = V::default();
        let mut idx = [0usize; MAX_MARK_DIM];
        for _ in 0..combos {
            let mut x = [0.0; MAX_MARK_DIM];
            let mut w = 1.0;
            for (slot, &k) in discrete.iter().enumerate() {
                let (v, p) = self.components[k].atom(idx[slot]);
                x[k] = v;
                w *= p;
            }
            if w > 0.0 {
                let inner = match mode {
                    IntegrationMode::Atoms => f(&x[..d]),
                    IntegrationMode::Density => {
                        let k = continuous[0];
                        let law = &self.components[k];
                        let (lo, hi, brk) = law.support();
                        quad.integrate_with_breaks(
                            |y| {
                                let mut z = x;
                                z[k] = y;
                                f(&z[..d]) * law.density(y)
                            },
                            lo,
                            hi,
                            &[brk],
                        )?
                    }
                    IntegrationMode::QuasiRandom => {
                        let mut acc = V::default();
                        let mut z = x;
                        for i in 1..=QUASI_RANDOM_POINTS {
                            for (dim, &k) in continuous.iter().enumerate() {
                                z[k] = self.components[k].quantile(halton(i, dim));
                            }
                            acc = acc + f(&z[..d]);
                        }
                        acc * (1.0 / QUASI_RANDOM_POINTS as f64)
                    }
                    IntegrationMode::SampleOnly => unreachable!(),
                };
                total = total + inner * w;
            }
            // odometer over the atom indices
            for (slot, &k) in discrete.iter().enumerate() {
                idx[slot] += 1;
                if idx[slot] < self.components[k].atom_count() {
                    break;
                }
                idx[slot] = 0;
            }
        }
        if total.is_finite_value() {
            Ok(total)
        } else {
            Err(Error::NonFinite { t: f64::NAN })
        }
    }
}
