//! Experiment configuration.
//!
//! A config file is a sequence of `[section]` headers, each followed by
//! `key = value` lines. Values are numbers, booleans, quoted strings or
//! bracketed lists of those. `#` starts a comment. Sections do not nest.
//! The accepted keys are listed in the crate README; unknown keys and
//! sections are rejected.

use serde::{Deserialize, Serialize};
use snoise_core::affine::HawkesParams;
use snoise_core::kernels::{uniform_grid, NoiseKernel};
use snoise_core::measure_change::{MarkWeight, MarketParams};
use snoise_core::point_process::{CompensatorSpec, MarkDistribution, MarkLaw, RateFn};
use snoise_core::quad::Quadrature;
use snoise_core::shotnoise::ShotNoiseProcess;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensator: Option<CompensatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// Number of equal grid intervals on `[0, horizon]`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_cap: Option<usize>,
    /// Random states visited by the drift check.
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default = "default_markov_tol")]
    pub markov_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_markov: Option<bool>,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_paths() -> usize {
    1000
}
fn default_grid() -> usize {
    10
}
fn default_quad_tol() -> f64 {
    1e-8
}
fn default_states() -> usize {
    1000
}
fn default_markov_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `jump_to_level`, `exponential`, `power_law` or `random_decay`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// A number, `"linear(intercept, slope)"`, or a list of `[t, value]` knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Constant(f64),
    Expr(String),
    Knots(Vec<[f64; 2]>),
}

/// One law, or one law per mark component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarksSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensatorConfig {
    pub rate: RateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bound: Option<f64>,
    pub marks: MarksSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub x0: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(default = "zero_rate")]
    pub rate_curve: RateSpec,
}

fn zero_rate() -> RateSpec {
    RateSpec::Constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub lambda_prime: f64,
    /// `"unit"` or `"tilt(h)"`.
    #[serde(default = "unit_eta")]
    pub eta: String,
}

fn unit_eta() -> String {
    "unit".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub kappa: f64,
    pub theta_bar: f64,
    pub lambda0: f64,
}

/// CLI overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
}

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::config(None, Some(field), message)
}

fn wrap(field: &'static str) -> impl Fn(snoise_core::Error) -> Error {
    move |e| bad(field, e.to_string())
}

/// 1-based line of `key` inside `[section]`, or of the header itself.
pub fn locate(src: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = "";
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == section && key.is_none() {
                return Some(i + 1);
            }
        } else if current == section {
            if let Some(k) = key {
                if line.split('=').next().map(str::trim) == Some(k) {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// `name(a, b, …)` with numeric arguments; a bare `name` has none.
fn parse_call(s: &str) -> Option<(&str, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Some((s, Vec::new()));
    };
    let inner = s[open + 1..].strip_suffix(')')?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse().ok())
            .collect::<Option<Vec<f64>>>()?
    };
    Some((s[..open].trim(), args))
}

fn parse_law(s: &str) -> Result<MarkLaw> {
    let field = "compensator.marks";
    let (name, args) = parse_call(s).ok_or_else(|| bad(field, format!("cannot read mark law `{s}`")))?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(bad(field, format!("`{name}` takes {n} argument(s)")))
        }
    };
    Ok(match name {
        "point" | "point_mass" => {
            arity(1)?;
            MarkLaw::PointMass(args[0])
        }
        "normal" => {
            arity(2)?;
            MarkLaw::Normal {
                mean: args[0],
                sd: args[1],
            }
        }
        "exponential" => {
            arity(1)?;
            MarkLaw::Exponential { rate: args[0] }
        }
        "uniform" => {
            arity(2)?;
            MarkLaw::Uniform {
                lo: args[0],
                hi: args[1],
            }
        }
        "discrete" => {
            if args.is_empty() || args.len() % 2 != 0 {
                return Err(bad(field, "`discrete` takes value, probability pairs"));
            }
            MarkLaw::Discrete(args.chunks(2).map(|c| (c[0], c[1])).collect())
        }
        _ => return Err(bad(field, format!("unknown mark law `{name}`"))),
    })
}

fn rate_fn(spec: &RateSpec, field: &'static str) -> Result<RateFn> {
    match spec {
        RateSpec::Constant(c) => Ok(RateFn::Constant(*c)),
        RateSpec::Expr(s) => match parse_call(s) {
            Some(("constant", a)) if a.len() == 1 => Ok(RateFn::Constant(a[0])),
            Some(("linear", a)) if a.len() == 2 => Ok(RateFn::Linear {
                intercept: a[0],
                slope: a[1],
            }),
            _ => Err(bad(
                field,
                format!("expected a number, `linear(a, b)` or knots, got `{s}`"),
            )),
        },
        RateSpec::Knots(k) => RateFn::piecewise_linear(k.iter().map(|p| (p[0], p[1])).collect()).map_err(wrap(field)),
    }
}

/// Largest value of a rate on `[0, horizon]`; exact for the built-in shapes.
fn rate_max(rate: &RateFn, horizon: f64) -> f64 {
    match rate {
        RateFn::Constant(c) => *c,
        RateFn::Linear { intercept, slope } => intercept.max(intercept + slope * horizon),
        RateFn::PiecewiseLinear(k) => k
            .iter()
            .map(|p| p.1)
            .fold(rate.eval(0.0).max(rate.eval(horizon)), f64::max),
        RateFn::Custom(_) => f64::NAN,
    }
}

impl ExperimentConfig {
    /// Parses, applies overrides and validates every block present.
    pub fn load(src: &str, overrides: Overrides) -> Result<Self> {
        let mut cfg: Self = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start));
            Error::config(line, None, e.message().trim().to_owned())
        })?;
        if let Some(n) = overrides.n_paths {
            cfg.run.n_paths = n;
        }
        if let Some(s) = overrides.seed {
            cfg.run.seed = Some(s);
        }
        cfg.validate().map_err(|e| match e {
            Error::Config(mut c) => {
                if c.line.is_none() {
                    if let Some((section, key)) = c.field.as_deref().and_then(|f| f.split_once('.')) {
                        c.line = locate(src, section, Some(key)).or_else(|| locate(src, section, None));
                    } else if let Some(section) = c.field.as_deref() {
                        c.line = locate(src, section, None);
                    }
                }
                Error::Config(c)
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, overrides: Overrides) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::config(None, None, format!("cannot read {}: {e}", path.display())))?;
        Self::load(&src, overrides)
    }

    fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.seed.is_none() {
            return Err(bad("run.seed", "seed is mandatory"));
        }
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            return Err(bad("run.horizon", "horizon must be positive and finite"));
        }
        if r.n_paths == 0 {
            return Err(bad("run.n_paths", "n_paths must be at least 1"));
        }
        if r.grid == 0 {
            return Err(bad("run.grid", "grid must be at least 1"));
        }
        if !(r.quad_tol > 0.0 && r.quad_tol.is_finite()) {
            return Err(bad("run.quad_tol", "quad_tol must be positive"));
        }
        if !(r.markov_tol > 0.0 && r.markov_tol.is_finite()) {
            return Err(bad("run.markov_tol", "markov_tol must be positive"));
        }
        if r.theta
            .as_ref()
            .is_some_and(|t| t.is_empty() || t.iter().any(|x| !x.is_finite()))
        {
            return Err(bad("run.theta", "theta must be a non-empty list of finite numbers"));
        }
        if self.compensator.is_some() {
            self.process_or_spec()?;
        } else if let Some(k) = &self.kernel {
            build_kernel(k)?;
        }
        if self.market.is_some() {
            self.market()?;
        }
        if self.measure.is_some() {
            let marks = match &self.compensator {
                Some(_) => self.compensator()?.marks_at(0.0).clone(),
                None => MarkDistribution::point_mass(1.0)?,
            };
            self.eta(&marks)?;
        }
        if self.affine.is_some() {
            self.hawkes()?;
        }
        Ok(())
    }

    fn process_or_spec(&self) -> Result<()> {
        let spec = self.compensator()?;
        if self.kernel.is_some() {
            self.process_from(spec)?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.expect("validated config has a seed")
    }

    pub fn quadrature(&self) -> Quadrature {
        Quadrature::new(self.run.quad_tol)
    }

    /// `grid + 1` equally spaced points on `[0, horizon]`.
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.run.horizon, self.run.grid)
    }

    /// The configured θ values, or `default` when none are given.
    pub fn thetas(&self, default: &[f64]) -> Vec<f64> {
        self.run.theta.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn event_cap(&self) -> usize {
        self.run
            .event_cap
            .unwrap_or(snoise_core::point_process::DEFAULT_EVENT_CAP)
    }

    pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| bad(name, format!("section [{name}] is required by this scenario")))
    }

    pub fn compensator(&self) -> Result<CompensatorSpec> {
        let c = Self::require(&self.compensator, "compensator")?;
        let rate = rate_fn(&c.rate, "compensator.rate")?;
        let bound = match c.rate_bound {
            Some(b) => b,
            None => {
                let m = rate_max(&rate, self.run.horizon);
                if !m.is_finite() {
                    return Err(bad("compensator.rate_bound", "rate_bound is required"));
                }
                m
            }
        };
        let laws = match &c.marks {
            MarksSpec::One(s) => vec![parse_law(s)?],
            MarksSpec::Many(v) => v.iter().map(|s| parse_law(s)).collect::<Result<_>>()?,
        };
        let marks = MarkDistribution::new(laws).map_err(wrap("compensator.marks"))?;
        let spec = CompensatorSpec::new(rate, bound, marks).map_err(wrap("compensator.rate"))?;
        spec.check_bound(self.run.horizon)
            .map_err(wrap("compensator.rate_bound"))?;
        Ok(spec)
    }

    /// The configured kernel, or jump-to-level when `[kernel]` is absent.
    pub fn kernel_or_default(&self) -> Result<NoiseKernel> {
        match &self.kernel {
            Some(k) => build_kernel(k),
            None => Ok(NoiseKernel::jump_to_level()),
        }
    }

    fn process_from(&self, spec: CompensatorSpec) -> Result<ShotNoiseProcess> {
        let mut kernel = self.kernel_or_default()?;
        if kernel.mark_dim() != spec.mark_dim() {
            kernel = kernel.with_mark_dim(spec.mark_dim()).map_err(wrap("kernel.kind"))?;
        }
        ShotNoiseProcess::new(kernel, spec).map_err(wrap("compensator.marks"))
    }

    pub fn process(&self) -> Result<ShotNoiseProcess> {
        Self::require(&self.kernel, "kernel")?;
        self.process_from(self.compensator()?)
    }

    /// Shot-noise process with the default kernel when `[kernel]` is absent.
    pub fn process_or_default(&self) -> Result<ShotNoiseProcess> {
        self.process_from(self.compensator()?)
    }

    pub fn market(&self) -> Result<MarketParams> {
        let m = Self::require(&self.market, "market")?;
        let p = self.process()?;
        let rate = rate_fn(&m.rate_curve, "market.rate_curve")?;
        MarketParams::new(m.x0, m.mu, m.sigma, rate, p.kernel().clone(), p.spec().clone()).map_err(wrap("market.sigma"))
    }

    pub fn eta(&self, marks: &MarkDistribution) -> Result<MarkWeight> {
        let m = Self::require(&self.measure, "measure")?;
        if !(m.lambda_prime > 0.0 && m.lambda_prime.is_finite()) {
            return Err(bad("measure.lambda_prime", "lambda_prime must be positive"));
        }
        match parse_call(&m.eta) {
            Some(("unit", a)) if a.is_empty() => Ok(MarkWeight::Unit),
            Some(("tilt", a)) if a.len() == 1 => MarkWeight::exp_tilt(a[0], marks).map_err(wrap("measure.eta")),
            _ => Err(bad(
                "measure.eta",
                format!("expected `unit` or `tilt(h)`, got `{}`", m.eta),
            )),
        }
    }

    pub fn hawkes(&self) -> Result<HawkesParams> {
        let a = Self::require(&self.affine, "affine")?;
        HawkesParams::new(a.kappa, a.theta_bar, a.lambda0).map_err(wrap("affine.kappa"))
    }

    /// Non-fatal remarks printed before a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Some(a) = &self.affine {
            if a.kappa <= 1.0 {
                w.push(format!(
                    "affine.kappa = {} is not above 1: the self-exciting intensity is not subcritical and may explode",
                    a.kappa
                ));
            }
        }
        w
    }

    /// The resolved config in the file syntax.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn build_kernel(k: &KernelConfig) -> Result<NoiseKernel> {
    let need = |v: Option<f64>, key: &'static str| {
        v.ok_or_else(|| bad(key, format!("`{}` kernel needs `{}`", k.kind, &key[7..])))
    };
    match k.kind.as_str() {
        "jump_to_level" => Ok(NoiseKernel::jump_to_level()),
        "exponential" => {
            NoiseKernel::exponential(need(k.a, "kernel.a")?, need(k.b, "kernel.b")?).map_err(wrap("kernel.b"))
        }
        "power_law" => NoiseKernel::power_law(need(k.c, "kernel.c")?).map_err(wrap("kernel.c")),
        "random_decay" => Ok(NoiseKernel::random_decay()),
        other => Err(bad("kernel.kind", format!("unknown kernel `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[run]\nseed = 7\n\n[kernel]\nkind = \"exponential\"\na = 1\nb = 2\n\n[compensator]\nrate = 2\nmarks = \"exponential(1)\"\n";

    fn err(src: &str) -> crate::error::ConfigError {
        match ExperimentConfig::load(src, Overrides::default()) {
            Err(Error::Config(c)) => c,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::load(MINIMAL, Overrides::default()).unwrap();
        assert_eq!(c.seed(), 7);
        assert_eq!(c.run.n_paths, 1000);
        assert_eq!(c.grid().len(), 11);
        assert_eq!(c.process().unwrap().kernel().exponential_params(), Some((1.0, 2.0)));
    }

    #[test]
    fn missing_seed_is_named() {
        let c = err("[run]\nhorizon = 2\n");
        assert_eq!(c.field.as_deref(), Some("run.seed"));
        assert_eq!(c.line, Some(1));
    }

    #[test]
    fn seed_can_come_from_overrides() {
        let c = ExperimentConfig::load(
            "[run]\nn_paths = 5\n",
            Overrides {
                n_paths: Some(9),
                seed: Some(3),
            },
        )
        .unwrap();
        assert_eq!((c.seed(), c.run.n_paths), (3, 9));
    }

    #[test]
    fn semantic_errors_carry_the_line() {
        let c = err("[run]\nseed = 1\n[kernel]\nkind = \"power_law\"\n\nc = -2\n");
        assert_eq!(c.field.as_deref(), Some("kernel.c"));
        assert_eq!(c.line, Some(6));
        let c = err("[run]\nseed = 1\n[compensator]\nrate = 1\n\nmarks = \"gamma(2)\"\n");
        assert_eq!((c.field.as_deref(), c.line), (Some("compensator.marks"), Some(6)));
    }

    #[test]
    fn syntax_and_unknown_keys_are_rejected() {
        assert_eq!(err("[run]\nseed = 1\nhorizon = = 3\n").line, Some(3));
        let c = err("[run]\nseed = 1\nspeed = 3\n");
        assert!(c.message.contains("speed"), "{}", c.message);
        assert_eq!(c.line, Some(3));
    }

    #[test]
    fn rate_forms() {
        let base = "[run]\nseed = 1\nhorizon = 2\n[compensator]\nmarks = \"point(1)\"\n";
        let spec = |rate: &str| {
            ExperimentConfig::load(&format!("{base}rate = {rate}\n"), Overrides::default())
                .unwrap()
                .compensator()
                .unwrap()
        };
        assert_eq!(spec("3").rate_bound(), 3.0);
        assert_eq!(spec("\"linear(1, 0.5)\"").rate_bound(), 2.0);
        let k = spec("[[0, 1], [1, 4], [2, 0.5]]");
        assert_eq!(k.rate_bound(), 4.0);
        assert_eq!(k.rate().eval(0.5), 2.5);
    }

    #[test]
    fn marks_forms() {
        let c = ExperimentConfig::load(
            "[run]\nseed = 1\n[compensator]\nrate = 1\nmarks = [\"normal(0, 1)\", \"discrete(1, 0.25, 2, 0.75)\"]\n",
            Overrides::default(),
        )
        .unwrap();
        let s = c.compensator().unwrap();
        assert_eq!(s.mark_dim(), 2);
        assert_eq!(s.marks_at(0.0).mean(1), Some(1.75));
    }

    #[test]
    fn eta_and_warnings() {
        let src = "[run]\nseed = 1\n[compensator]\nrate = 1\nmarks = \"exponential(2)\"\n[measure]\nlambda_prime = 2\neta = \"tilt(0.5)\"\n[affine]\nkappa = 0.8\ntheta_bar = 1\nlambda0 = 1\n";
        let c = ExperimentConfig::load(src, Overrides::default()).unwrap();
        let eta = c.eta(c.compensator().unwrap().marks_at(0.0)).unwrap();
        // E[e^{U/2}] = 2/(2 - 1/2)
        assert!(
            matches!(eta, MarkWeight::ExpTilt { h, log_norm } if h == 0.5 && (log_norm - (4.0f64 / 3.0).ln()).abs() < 1e-14)
        );
        assert_eq!(c.warnings().len(), 1);
        let c = err(&src.replace("tilt(0.5)", "tilt(3)"));
        assert_eq!(c.field.as_deref(), Some("measure.eta"));
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = ExperimentConfig::load(MINIMAL, Overrides::default()).unwrap();
        let again = ExperimentConfig::load(&c.to_text(), Overrides::default()).unwrap();
        assert_eq!(c, again);
    }
}
