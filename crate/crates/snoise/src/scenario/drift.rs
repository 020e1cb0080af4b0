use std::path::Path;

use snoise_core::measure_change::{drift_residual, MartingaleMeasureSpec, StockPath, StockSimulator, XiRule};
use snoise_core::shotnoise::FiltrationState;
use snoise_core::stats::Estimate;

use super::{mpp_path, Check, Partial};
use crate::batch::map_paths;
use crate::config::ExperimentConfig;
use crate::oracle::{martingale_drift_test, SE_TOLERANCE};
use crate::output::{AtomicCsv, Cell};
use crate::Result;

const RESIDUAL_TOL: f64 = 1e-10;

/// Discounted price `e^{-∫r} X` at each grid time (right-continuous lookup).
pub fn discounted_on_grid(path: &StockPath, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| path.discounted(path.times.partition_point(|&s| s <= t).max(1) - 1))
        .collect()
}

fn price_on_grid(path: &StockPath, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| path.x(path.times.partition_point(|&s| s <= t).max(1) - 1))
        .collect()
}

pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    let market = cfg.market()?;
    let m = ExperimentConfig::require(&cfg.measure, "measure")?;
    let eta = cfg.eta(market.spec().marks_at(0.0))?;
    let mm = MartingaleMeasureSpec::new(&market, m.lambda_prime, eta, XiRule::Stationary)?;
    let horizon = cfg.run.horizon;
    let grid = cfg.grid();
    let mut checks = Vec::new();

    // states at stratified times along independent objective-measure paths
    let states = cfg.run.states;
    let residuals = map_paths(states, |i| {
        let p = mpp_path(market.spec(), cfg, i)?;
        let t = horizon * (i as f64 + 0.5) / states as f64;
        Ok(drift_residual(&market, &mm, &FiltrationState::from_path(&p, t)?)?.abs())
    })?;
    checks.push(Check::at_most(
        "drift_residual",
        residuals.iter().copied().fold(0.0, f64::max),
        RESIDUAL_TOL,
        format!("max |drift condition residual| over {states} states"),
    ));

    let sim = StockSimulator::new(market.clone(), Some(mm), horizon)?;
    let paths = map_paths(cfg.run.n_paths, |i| Ok(sim.path(cfg.seed(), i)?))?;
    let mut csv = AtomicCsv::create(out.join("stock.csv"), &["path_id", "t", "X_t", "D_t"])?;
    let mut discounted = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let d = discounted_on_grid(p, &grid);
        for ((&t, x), dk) in grid.iter().zip(price_on_grid(p, &grid)).zip(&d) {
            csv.row(&[Cell::Int(i as u64), Cell::Float(t), Cell::Float(x), Cell::Float(*dk)])?;
        }
        discounted.push(d);
    }
    let rows = csv.finish()?;

    let terminal = Estimate::from_samples(paths.iter().map(|p| p.terminal_discounted()));
    checks.push(Check::at_most(
        "discounted_terminal_mean",
        terminal.z_score(market.x0()),
        SE_TOLERANCE,
        format!("|mean e^(-∫r) X_T - X_0|/SE, mean {}", terminal.mean),
    ));
    let report = martingale_drift_test(&discounted, &grid)?;
    checks.push(Check::verdict(
        "martingale_drift",
        report.max_abs_z,
        report.threshold,
        report.pass,
        format!(
            "max window |z| over {} windows, Bonferroni threshold",
            report.windows.len()
        ),
    ));

    let objective = StockSimulator::new(market, None, horizon)?;
    let under_p = map_paths(cfg.run.n_paths, |i| {
        Ok(discounted_on_grid(&objective.path(cfg.seed(), i)?, &grid))
    })?;
    let control = martingale_drift_test(&under_p, &grid)?;
    checks.push(Check::info(
        "objective_measure_drift",
        control.max_abs_z,
        control.threshold,
        "same test under the objective measure, for contrast",
    ));
    Ok(Partial {
        checks,
        files: vec![("stock.csv".into(), rows)],
    })
}
