use std::path::Path;

use super::{Check, Partial};
use crate::config::ExperimentConfig;
use crate::output::{AtomicCsv, Cell};
use crate::Result;

pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    ExperimentConfig::require(&cfg.kernel, "kernel")?;
    let kernel = cfg.kernel_or_default()?;
    let grid = cfg.grid();
    let tol = cfg.run.markov_tol;
    let verdict = kernel.is_markov_kernel(&grid, tol)?;
    let unit = vec![1.0; kernel.mark_dim()];
    let mut csv = AtomicCsv::create(out.join("markov.csv"), &["t", "H_t", "fitted_t"])?;
    for &t in &grid {
        let fitted = verdict.fitted.map_or(f64::NAN, |(a, b)| a * (-b * t).exp());
        csv.row(&[
            Cell::Float(t),
            Cell::Float(kernel.value(t, &unit)?),
            Cell::Float(fitted),
        ])?;
    }
    let rows = csv.finish()?;
    let mut note = format!("markov={}", verdict.markov);
    if let Some((a, b)) = verdict.fitted {
        note.push_str(&format!(" fitted a={a} b={b}"));
    }
    let check = match cfg.run.expect_markov {
        Some(expected) => Check::verdict(
            "markov_classification",
            verdict.max_residual,
            tol,
            verdict.markov == expected,
            format!("{note}, expected markov={expected}; value is the max Cauchy residual"),
        ),
        None => Check::info(
            "markov_classification",
            verdict.max_residual,
            tol,
            format!("{note}; value is the max Cauchy residual"),
        ),
    };
    Ok(Partial {
        checks: vec![check],
        files: vec![("markov.csv".into(), rows)],
    })
}
