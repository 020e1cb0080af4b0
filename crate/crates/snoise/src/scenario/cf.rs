use std::path::Path;

use num_complex::Complex64;
use snoise_core::kernels::KernelKind;
use snoise_core::point_process::MarkLaw;
use snoise_core::shotnoise::{FiltrationState, ShotNoiseProcess};

use super::{mpp_path, Check, Partial};
use crate::batch::map_paths;
use crate::config::ExperimentConfig;
use crate::oracle::{compare_cf, empirical_cf, SE_TOLERANCE};
use crate::output::{AtomicCsv, Cell};
use crate::Result;

const CLOSED_FORM_TOL: f64 = 1e-8;

/// θ = -5, -4.5, …, 5.
pub fn default_thetas() -> Vec<f64> {
    (0..21).map(|k| -5.0 + 0.5 * k as f64).collect()
}

/// `exp(λT(e^{iθu} - 1))` when the process is a compound Poisson count of
/// point-mass marks.
fn compound_poisson_cf(p: &ShotNoiseProcess, horizon: f64, theta: f64) -> Option<Complex64> {
    if !matches!(p.kernel().kind(), KernelKind::JumpToLevel) || p.spec().mark_dim() != 1 {
        return None;
    }
    let (lambda, marks) = p.spec().stationary()?;
    let MarkLaw::PointMass(u) = marks.components()[0] else {
        return None;
    };
    Some((lambda * horizon * (Complex64::new(0.0, theta * u).exp() - 1.0)).exp())
}

pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    let process = cfg.process()?;
    let quad = cfg.quadrature();
    let horizon = cfg.run.horizon;
    let thetas = cfg.thetas(&default_thetas());
    let values = map_paths(cfg.run.n_paths, |i| {
        let p = mpp_path(process.spec(), cfg, i)?;
        Ok(process.eval(&p, horizon)?)
    })?;
    let state = FiltrationState::initial(process.spec().mark_dim())?;
    let mut csv = AtomicCsv::create(
        out.join("cf.csv"),
        &["theta", "re", "im", "abs", "mc_re", "mc_im", "se", "ratio"],
    )?;
    let mut worst: f64 = 0.0;
    let mut closed: Option<f64> = None;
    for &theta in &thetas {
        let phi = process.conditional_cf(&state, horizon, theta, &quad)?;
        let cmp = compare_cf(phi, empirical_cf(&values, theta)?);
        worst = worst.max(cmp.ratio);
        if let Some(exact) = compound_poisson_cf(&process, horizon, theta) {
            let e = (phi - exact).norm();
            closed = Some(closed.map_or(e, |c: f64| c.max(e)));
        }
        csv.row(&[
            Cell::Float(theta),
            Cell::Float(phi.re),
            Cell::Float(phi.im),
            Cell::Float(phi.norm()),
            Cell::Float(cmp.estimate.value.re),
            Cell::Float(cmp.estimate.value.im),
            Cell::Float(cmp.estimate.se()),
            Cell::Float(cmp.ratio),
        ])?;
    }
    let rows = csv.finish()?;
    let mut checks = vec![Check::at_most(
        "cf_vs_mc",
        worst,
        SE_TOLERANCE,
        format!("max |Δ|/SE over {} θ values, {} paths", thetas.len(), values.len()),
    )];
    if let Some(e) = closed {
        checks.push(Check::at_most(
            "cf_closed_form",
            e,
            CLOSED_FORM_TOL,
            "max |Δ| against exp(λT(e^{iθu} - 1))",
        ));
    }
    Ok(Partial {
        checks,
        files: vec![("cf.csv".into(), rows)],
    })
}
