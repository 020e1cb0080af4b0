use std::path::Path;

use snoise_core::shotnoise::ou_recursive_update;

use super::{mark_headers, mpp_path, Check, Partial};
use crate::batch::map_paths;
use crate::config::ExperimentConfig;
use crate::output::{AtomicCsv, Cell};
use crate::Result;

/// Paths decomposed into drift and jump parts.
const DECOMPOSED_PATHS: usize = 100;
const OU_TOL: f64 = 1e-10;

pub(crate) fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Partial> {
    let process = cfg.process()?;
    let quad = cfg.quadrature();
    let grid = cfg.grid();
    let horizon = cfg.run.horizon;
    let decomposer = process.decomposer(horizon, &quad)?;
    let paths = map_paths(cfg.run.n_paths, |i| {
        let p = mpp_path(process.spec(), cfg, i)?;
        let v = process.eval_grid(&p, &grid)?;
        Ok((p, v))
    })?;
    let mut files = Vec::new();
    let mut checks = Vec::new();

    let d = process.spec().mark_dim();
    let mut header = vec!["path_id".to_string(), "T_i".to_string()];
    header.extend(mark_headers(d));
    let mut ev = AtomicCsv::create(out.join("events.csv"), &header)?;
    let mut sp = AtomicCsv::create(out.join("paths.csv"), &["path_id", "t", "S_t"])?;
    for (i, (p, v)) in paths.iter().enumerate() {
        for (t, u) in p.iter() {
            let mut row = vec![Cell::Int(i as u64), Cell::Float(t)];
            row.extend(u.iter().map(|&x| Cell::Float(x)));
            ev.row(&row)?;
        }
        for (&t, &s) in grid.iter().zip(v) {
            sp.row(&[Cell::Int(i as u64), Cell::Float(t), Cell::Float(s)])?;
        }
    }
    files.push(("events.csv".into(), ev.finish()?));
    files.push(("paths.csv".into(), sp.finish()?));

    let m = paths.len().min(DECOMPOSED_PATHS);
    let decs = map_paths(m, |i| Ok(decomposer.decompose(&paths[i as usize].0, &grid)?))?;
    let mut dc = AtomicCsv::create(
        out.join("decomposition.csv"),
        &["path_id", "t", "S_t", "drift", "jump_part"],
    )?;
    let mut worst: f64 = 0.0;
    for (i, dec) in decs.iter().enumerate() {
        let v = &paths[i].1;
        for k in 0..grid.len() {
            worst = worst.max((dec.drift[k] + dec.jump_part[k] - v[k]).abs());
            dc.row(&[
                Cell::Int(i as u64),
                Cell::Float(grid[k]),
                Cell::Float(v[k]),
                Cell::Float(dec.drift[k]),
                Cell::Float(dec.jump_part[k]),
            ])?;
        }
    }
    files.push(("decomposition.csv".into(), dc.finish()?));
    checks.push(Check::at_most(
        "decomposition",
        worst,
        cfg.run.quad_tol,
        format!("max |drift + jump_part - S| over {m} paths"),
    ));

    if let Some((a, b)) = process.kernel().exponential_params() {
        let mut worst: f64 = 0.0;
        for (p, v) in &paths {
            let mut s = 0.0;
            let mut prev = 0.0;
            let mut next = 0;
            // simulated event times are strictly positive
            for (k, &t) in grid.iter().enumerate() {
                let mut jumps = Vec::new();
                while next < p.len() && p.time(next) <= t {
                    jumps.push((p.time(next) - prev, p.mark(next)[0]));
                    next += 1;
                }
                s = ou_recursive_update(a, b, s, t - prev, &jumps);
                worst = worst.max((s - v[k]).abs() / v[k].abs().max(1.0));
                prev = t;
            }
        }
        checks.push(Check::at_most(
            "ou_recursion",
            worst,
            OU_TOL,
            "max relative gap between the recursive update and direct evaluation",
        ));
    }
    Ok(Partial { checks, files })
}
