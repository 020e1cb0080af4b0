//! The six scenarios run by the command-line front end. Each writes its CSV
//! files and a plain-text `report.txt` into the output directory.

mod affine;
mod cf;
mod drift;
mod markov;
mod measure;
mod simulate;

pub use affine::rk4_slopes;
pub use cf::default_thetas;
pub use drift::discounted_on_grid;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use snoise_core::point_process::{simulate_mpp_with, CompensatorSpec, MppPath};
use snoise_core::rng::{path_rng, StreamTag};

use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, write_atomic};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Simulate,
    CfCompare,
    MarkovTest,
    AffineValidate,
    MeasureCheck,
    DriftCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Simulate,
        Scenario::CfCompare,
        Scenario::MarkovTest,
        Scenario::AffineValidate,
        Scenario::MeasureCheck,
        Scenario::DriftCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::CfCompare => "cf-compare",
            Scenario::MarkovTest => "markov-test",
            Scenario::AffineValidate => "affine-validate",
            Scenario::MeasureCheck => "measure-check",
            Scenario::DriftCheck => "drift-check",
        }
    }
}

/// One audited comparison. `value` is the statistic (a residual, or a
/// ratio `|Δ|/SE`) and `limit` the tolerance it was held to.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
    pub note: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
            informational: false,
            note: note.into(),
        }
    }

    pub fn verdict(name: &str, value: f64, limit: f64, pass: bool, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass,
            informational: false,
            note: note.into(),
        }
    }

    pub fn info(name: &str, value: f64, limit: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
            informational: true,
            note: note.into(),
        }
    }

    fn label(&self) -> &'static str {
        match (self.informational, self.pass) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    /// File name and number of data rows.
    pub files: Vec<(String, usize)>,
    pub report: PathBuf,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.informational || c.pass)
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What a scenario body hands back before the report is written.
pub(crate) struct Partial {
    pub checks: Vec<Check>,
    pub files: Vec<(String, usize)>,
}

pub fn run_scenario(scenario: Scenario, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)?;
    let partial = match scenario {
        Scenario::Simulate => simulate::run(cfg, out_dir)?,
        Scenario::CfCompare => cf::run(cfg, out_dir)?,
        Scenario::MarkovTest => markov::run(cfg, out_dir)?,
        Scenario::AffineValidate => affine::run(cfg, out_dir)?,
        Scenario::MeasureCheck => measure::run(cfg, out_dir)?,
        Scenario::DriftCheck => drift::run(cfg, out_dir)?,
    };
    let mut outcome = Outcome {
        scenario,
        checks: partial.checks,
        files: partial.files,
        report: out_dir.join("report.txt"),
    };
    write_atomic(&outcome.report, &render_report(&outcome, cfg))?;
    outcome.files.push(("report.txt".into(), 0));
    Ok(outcome)
}

pub fn render_report(outcome: &Outcome, cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", outcome.scenario.name());
    let _ = writeln!(s, "status: {}", if outcome.passed() { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "\n[checks]");
    for c in &outcome.checks {
        let _ = writeln!(
            s,
            "{} {} value={} limit={} {}",
            c.label(),
            c.name,
            fmt_f64(c.value),
            fmt_f64(c.limit),
            c.note
        );
    }
    let _ = writeln!(s, "\n[files]");
    for (f, rows) in &outcome.files {
        let _ = writeln!(s, "{f} rows={rows}");
    }
    let _ = writeln!(s, "\n[config]");
    s.push_str(&cfg.to_text());
    s
}

pub(crate) fn mpp_path(spec: &CompensatorSpec, cfg: &ExperimentConfig, index: u64) -> Result<MppPath> {
    let mut rng = path_rng(cfg.seed(), index, StreamTag::Jumps);
    Ok(simulate_mpp_with(spec, cfg.run.horizon, &mut rng, cfg.event_cap())?)
}

/// Mark-component headers `U_1, …, U_d`.
pub(crate) fn mark_headers(d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("U_{k}")).collect()
}
