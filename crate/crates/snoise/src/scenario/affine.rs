use std::path::Path;

use num_complex::Complex64;
use snoise_core::affine::{
    affine_cf, default_steps, expected_count, riccati_solve, simulate_hawkes, AffineState, HawkesParams,
};
use snoise_core::stats::Estimate;

use super::{Check, Partial};
use crate::batch::map_paths;
use crate::config::ExperimentConfig;
use crate::oracle::{compare_cf, empirical_cf, SE_TOLERANCE};
use crate::output::{AtomicCsv, Cell};
use crate::Result;

const IDENTITY_TOL: f64 = 1e-10;
const SLOPE_RANGE: (f64, f64) = (3.7, 4.3);

pub fn default_thetas() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 3.0]
}

/// Observed order of the Riccati integrator: `log2` of successive error
/// ratios at 100, 200 and 400 steps against a 12 800 step reference.
pub fn rk4_slopes(params: &HawkesParams, u: [Complex64; 2], horizon: f64) -> Result<Vec<f64>> {
    let value = |n: usize| -> Result<Complex64> {
        let (phi, _, psi2) = riccati_solve(params, u, horizon, n)?.terminal();
        Ok(phi + psi2 * params.lambda0())
    };
    let reference = value(12_800)?;
    let errs = [100, 200, 400]
        .iter()
        .map(|&n| Ok((value(n)? - reference).norm()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    let params = cfg.hawkes()?;
    let horizon = cfg.run.horizon;
    let thetas = cfg.thetas(&default_thetas());
    let paths = map_paths(cfg.run.n_paths, |i| {
        Ok(simulate_hawkes(&params, horizon, cfg.seed(), i, cfg.event_cap())?)
    })?;
    let mut checks = Vec::new();
    let mut files = Vec::new();

    let mut ev = AtomicCsv::create(out.join("events.csv"), &["path_id", "T_i", "lambda_T_i"])?;
    let mut identity: f64 = 0.0;
    for (i, p) in paths.iter().enumerate() {
        for (k, &t) in p.events().times().iter().enumerate() {
            let l = p.intensity_at_events()[k];
            identity = identity.max((l - p.intensity(t)).abs() / l.abs().max(1.0));
            ev.row(&[Cell::Int(i as u64), Cell::Float(t), Cell::Float(l)])?;
        }
    }
    files.push(("events.csv".into(), ev.finish()?));
    let mut it = AtomicCsv::create(out.join("intensity.csv"), &["t", "lambda_t"])?;
    for t in cfg.grid() {
        it.row(&[Cell::Float(t), Cell::Float(paths[0].intensity(t))])?;
    }
    files.push(("intensity.csv".into(), it.finish()?));
    checks.push(Check::at_most(
        "shot_noise_identity",
        identity,
        IDENTITY_TOL,
        "max relative gap between simulated and closed-form intensity at events",
    ));

    let counts: Vec<f64> = paths.iter().map(|p| p.count_until(horizon) as f64).collect();
    let state = AffineState::initial(&params);
    let mut worst: f64 = 0.0;
    let mut psi1_gap: f64 = 0.0;
    let mut cf = AtomicCsv::create(
        out.join("cf.csv"),
        &["theta", "re", "im", "abs", "mc_re", "mc_im", "se", "ratio"],
    )?;
    for &theta in &thetas {
        let phi = affine_cf(&params, &state, horizon, [theta, 0.0])?;
        let cmp = compare_cf(phi, empirical_cf(&counts, theta)?);
        worst = worst.max(cmp.ratio);
        let u1 = Complex64::new(0.0, theta);
        let sol = riccati_solve(&params, [u1, Complex64::new(0.0, 0.0)], horizon, default_steps(horizon))?;
        psi1_gap = sol.psi1.iter().map(|p| (p - u1).norm()).fold(psi1_gap, f64::max);
        cf.row(&[
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
    files.push(("cf.csv".into(), cf.finish()?));
    checks.push(Check::at_most(
        "cf_vs_mc",
        worst,
        SE_TOLERANCE,
        format!("max |Δ|/SE of the count transform over {} arguments", thetas.len()),
    ));
    checks.push(Check::at_most("psi1_constant", psi1_gap, 0.0, "max |ψ1(t) - u1|"));

    let slopes = rk4_slopes(&params, [Complex64::new(0.0, 1.5), Complex64::new(0.0, 2.0)], horizon)?;
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    checks.push(Check::verdict(
        "rk4_order",
        lo,
        SLOPE_RANGE.0,
        lo >= SLOPE_RANGE.0 && hi <= SLOPE_RANGE.1,
        format!(
            "step-halving slopes {slopes:?}, accepted range [{}, {}]",
            SLOPE_RANGE.0, SLOPE_RANGE.1
        ),
    ));

    let mean = Estimate::from_samples(counts.iter().copied());
    let exact = expected_count(&params, horizon)?;
    checks.push(Check::at_most(
        "mean_count",
        mean.z_score(exact),
        SE_TOLERANCE,
        format!("|mean N_T - {exact}|/SE"),
    ));
    Ok(Partial { checks, files })
}
