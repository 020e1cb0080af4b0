use std::path::Path;

use snoise_core::measure_change::{DensityEvaluator, GirsanovKernel};
use snoise_core::point_process::CompensatorSpec;
use snoise_core::stats::Estimate;

use super::{mpp_path, Check, Partial};
use crate::batch::map_paths;
use crate::config::ExperimentConfig;
use crate::oracle::{ks_two_sample_weighted, two_sample_ratio, SE_TOLERANCE};
use crate::output::{AtomicCsv, Cell};
use crate::Result;

/// Paths are simulated under the objective measure and reweighted by the
/// density `L_T` of `Y = (λ'/λ) η`; a second batch is drawn directly from
/// `λ' F'` and compared with the reweighted one.
pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    let process = cfg.process_or_default()?;
    let spec = process.spec();
    let (lambda, marks) = spec.stationary().ok_or(snoise_core::Error::NotStationary)?;
    let lambda_prime = ExperimentConfig::require(&cfg.measure, "measure")?.lambda_prime;
    let eta = cfg.eta(marks)?;
    let target = CompensatorSpec::standard(
        lambda_prime,
        eta.target_law(marks).ok_or(snoise_core::Error::UnsupportedMarks)?,
    )?;
    let y = GirsanovKernel::stationary(lambda, lambda_prime, eta)?;
    let grid = cfg.grid();
    let horizon = cfg.run.horizon;
    let density = DensityEvaluator::with_grid(&y, spec, &grid, &cfg.quadrature())?;
    let n = cfg.run.n_paths;

    let under_p = map_paths(n, |i| {
        let p = mpp_path(spec, cfg, i)?;
        let x = process.eval_grid(&p, &grid)?;
        let l: Vec<f64> = density.log_density_path(&p)?.into_iter().map(f64::exp).collect();
        Ok((p, x, l))
    })?;
    // direct draws use path indices after the reweighted batch
    let direct = map_paths(n, |i| mpp_path(&target, cfg, n as u64 + i))?;

    let mut csv = AtomicCsv::create(out.join("measure.csv"), &["path_id", "t", "X_t", "L_t"])?;
    for (i, (_, x, l)) in under_p.iter().enumerate() {
        for k in 0..grid.len() {
            csv.row(&[
                Cell::Int(i as u64),
                Cell::Float(grid[k]),
                Cell::Float(x[k]),
                Cell::Float(l[k]),
            ])?;
        }
    }
    let rows = csv.finish()?;

    let l_t: Vec<f64> = under_p.iter().map(|(_, _, l)| l[l.len() - 1]).collect();
    let mut checks = Vec::new();
    let mean_l = Estimate::from_samples(l_t.iter().copied());
    checks.push(Check::at_most(
        "density_mean",
        mean_l.z_score(1.0),
        SE_TOLERANCE,
        "|mean L_T - 1|/SE",
    ));

    let count = |p: &snoise_core::point_process::MppPath| p.count_until(horizon) as f64;
    let mark_sum = |p: &snoise_core::point_process::MppPath| p.iter().map(|(_, u)| u[0]).sum::<f64>();
    let rw_count = Estimate::from_samples(under_p.iter().zip(&l_t).map(|((p, _, _), l)| l * count(p)));
    let dir_count = Estimate::from_samples(direct.iter().map(count));
    checks.push(Check::at_most(
        "reweighted_count_vs_rate",
        rw_count.z_score(lambda_prime * horizon),
        SE_TOLERANCE,
        format!("|E_P[L_T N_T] - λ'T|/SE with λ'T = {}", lambda_prime * horizon),
    ));
    checks.push(Check::at_most(
        "count_vs_direct",
        two_sample_ratio(&rw_count, &dir_count),
        SE_TOLERANCE,
        "reweighted against direct mean of N_T, |Δ|/SE",
    ));
    let rw_marks = Estimate::from_samples(under_p.iter().zip(&l_t).map(|((p, _, _), l)| l * mark_sum(p)));
    let dir_marks = Estimate::from_samples(direct.iter().map(mark_sum));
    checks.push(Check::at_most(
        "mark_sum_vs_direct",
        two_sample_ratio(&rw_marks, &dir_marks),
        SE_TOLERANCE,
        "reweighted against direct mean of Σ U_1, |Δ|/SE",
    ));

    let (mut a, mut wa) = (Vec::new(), Vec::new());
    let (mut fa, mut wfa) = (Vec::new(), Vec::new());
    for ((p, _, _), &l) in under_p.iter().zip(&l_t) {
        for (_, u) in p.iter() {
            a.push(u[0]);
            wa.push(l);
        }
        if !p.is_empty() {
            fa.push(p.time(0));
            wfa.push(l);
        }
    }
    let b: Vec<f64> = direct.iter().flat_map(|p| p.iter().map(|(_, u)| u[0])).collect();
    let fb: Vec<f64> = direct.iter().filter(|p| !p.is_empty()).map(|p| p.time(0)).collect();
    for (name, what, x, w, y) in [
        ("ks_marks", "marks", &a, &wa, &b),
        ("ks_first_arrival", "first arrival times", &fa, &wfa, &fb),
    ] {
        let ks = ks_two_sample_weighted(x, w, y, &vec![1.0; y.len()])?;
        checks.push(Check::verdict(
            name,
            ks.scaled,
            ks.critical,
            ks.pass,
            format!(
                "weighted two-sample KS on {what}, D={:.3e}, n_eff={:.1}",
                ks.statistic, ks.n_eff
            ),
        ));
    }
    Ok(Partial {
        checks,
        files: vec![("measure.csv".into(), rows)],
    })
}
