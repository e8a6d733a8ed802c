//! Command-line front end: configs, structure checks, runs, sweeps and outputs.

pub mod checks;
pub mod config;
pub mod output;
pub mod runs;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
pub use checks::{cmd_check, CheckReport};
pub use config::{Metric, RunConfig, SystemKind};
pub use output::Format;
pub use runs::{cmd_compare_gc, cmd_simulate, cmd_sweep, CompareReport, SimulationSummary, SweepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Sweep,
    Check,
    CompareGc,
}

/// Result of one command: whether its assertions passed, the files written
/// and a short human-readable report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed => EXIT_OK,
        Ok(_) => EXIT_ASSERTION,
        Err(Error::Config(_)) => EXIT_CONFIG,
        Err(_) => EXIT_RUNTIME,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn fit_lines(fits: &[runs::MetricFit]) -> Vec<String> {
    fits.iter()
        .map(|f| {
            format!(
                "{:<20} exponent {} (predicted {} {:?}) r2 {} rows {} -> {:?}{}",
                f.metric,
                fmt_opt(f.exponent),
                f.predicted,
                f.band,
                fmt_opt(f.r_squared),
                f.rows_used,
                f.status,
                f.note.as_ref().map(|n| format!(" [{n}]")).unwrap_or_default()
            )
        })
        .collect()
}

pub fn run_command(command: Command, config: &Path, out_dir: &Path, format: Format) -> Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    std::fs::create_dir_all(out_dir)?;
    match command {
        Command::Check => {
            let report = cmd_check(&cfg);
            let mut files = vec![output::write_json(&out_dir.join("check.json"), &report)?];
            if format == Format::Csv {
                let table = output::Table {
                    header: vec!["check".into(), "value".into(), "tolerance".into(), "passed".into()],
                    rows: report
                        .checks
                        .iter()
                        .enumerate()
                        .map(|(i, c)| vec![Some(i as f64), c.value, Some(c.tolerance), Some(c.passed as u8 as f64)])
                        .collect(),
                };
                files.push(table.write_csv(&out_dir.join("check.csv"))?);
            }
            let lines = report
                .checks
                .iter()
                .map(|c| {
                    format!(
                        "{:<28} {} (tol {:e}) {}{}",
                        c.name,
                        c.value.map_or("-".into(), |v| format!("{v:.3e}")),
                        c.tolerance,
                        if c.passed { "ok" } else { "FAIL" },
                        c.detail.as_ref().map(|d| format!(" [{d}]")).unwrap_or_default()
                    )
                })
                .collect();
            Ok(Outcome {
                passed: report.passed,
                files,
                lines,
            })
        }
        Command::Simulate => {
            let sim = cmd_simulate(&cfg)?;
            let names = runs::state_columns(&cfg.dynamics(cfg.single_epsilon()));
            let table = output::trajectory_table(&sim.record, &names);
            let files = vec![
                table.write(out_dir, "trajectory", format)?,
                output::write_json(&out_dir.join("summary.json"), &sim.summary)?,
            ];
            let s = &sim.summary;
            let mut lines = vec![
                format!("steps {} dt {:.4e} t_end {:.4} reached {:.4}", s.steps, s.dt, s.t_end, s.final_time),
                format!("relative energy drift {:.3e}", s.max_relative_energy_drift),
                format!("mu2 drift {:.3e} (relative {:.3e})", s.drift.max_abs_drift, s.mu2_relative_drift),
                format!("max normal distance {:.3e}", s.max_normal_distance),
                format!("step-doubling error max {:.3e} accumulated {:.3e}", s.max_step_error, s.accumulated_error),
            ];
            if let Some(e) = &s.exit_event {
                lines.push(format!("exit at t = {:.4}: {}", e.time, e.reason));
            }
            if let Some(e) = &s.error {
                lines.push(format!("error: {e}"));
            }
            if s.flagged {
                lines.push("step-doubling estimate exceeded the integrator tolerance".into());
            }
            Ok(Outcome {
                passed: !s.flagged && s.error.is_none(),
                files,
                lines,
            })
        }
        Command::Sweep => {
            let report = cmd_sweep(&cfg)?;
            let mut files = vec![output::write_json(&out_dir.join("sweep.json"), &report)?];
            if format == Format::Csv {
                let names: Vec<String> = report.fits.iter().map(|f| f.metric.clone()).collect();
                let mut header = vec!["epsilon".to_string()];
                header.extend(names.iter().cloned());
                header.extend(names.iter().map(|n| format!("{n}_usable")));
                let rows = report
                    .rows
                    .iter()
                    .map(|r| {
                        let mut v = vec![Some(r.epsilon)];
                        v.extend(names.iter().map(|n| r.metric(n).and_then(|m| m.value)));
                        v.extend(names.iter().map(|n| r.metric(n).map(|m| m.usable as u8 as f64)));
                        v
                    })
                    .collect();
                files.push(output::Table { header, rows }.write_csv(&out_dir.join("sweep.csv"))?);
            }
            let mut lines = Vec::new();
            for r in &report.rows {
                let vals: Vec<String> = r
                    .metrics
                    .iter()
                    .map(|(n, m)| format!("{n}={}{}", m.value.map_or("-".into(), |v| format!("{v:.3e}")), if m.usable { "" } else { "*" }))
                    .collect();
                let exit = r.exit_event.as_ref().map(|e| format!(" exit: {}", e.reason)).unwrap_or_default();
                lines.push(format!("eps {:<8} {}{exit}", r.epsilon, vals.join(" ")));
            }
            lines.extend(fit_lines(&report.fits));
            Ok(Outcome {
                passed: report.passed,
                files,
                lines,
            })
        }
        Command::CompareGc => {
            let report = cmd_compare_gc(&cfg)?;
            let mut files = vec![output::write_json(&out_dir.join("compare_gc.json"), &report)?];
            if format == Format::Csv {
                let table = output::Table {
                    header: ["epsilon", "sup_dx", "sup_du", "drift_measured", "drift_predicted", "drift_relative_error"]
                        .map(String::from)
                        .to_vec(),
                    rows: report
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                Some(r.epsilon),
                                r.sup_dx.value,
                                r.sup_du.value,
                                r.drift_measured,
                                r.drift_predicted,
                                r.drift_relative_error,
                            ]
                        })
                        .collect(),
                };
                files.push(table.write_csv(&out_dir.join("compare_gc.csv"))?);
            }
            let mut lines: Vec<String> = report
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "eps {:<8} sup|dx| {} sup|du| {} drift {} vs {}{}",
                        r.epsilon,
                        r.sup_dx.value.map_or("-".into(), |v| format!("{v:.3e}")),
                        r.sup_du.value.map_or("-".into(), |v| format!("{v:.3e}")),
                        r.drift_measured.map_or("-".into(), |v| format!("{v:.4e}")),
                        r.drift_predicted.map_or("-".into(), |v| format!("{v:.4e}")),
                        r.error.as_ref().map(|e| format!(" error: {e}")).unwrap_or_default()
                    )
                })
                .collect();
            lines.extend(fit_lines(&report.fits));
            if report.drift_checked {
                lines.push(format!("drift speed within {}: {}", report.drift_tolerance, report.drift_passed));
            }
            Ok(Outcome {
                passed: report.passed,
                files,
                lines,
            })
        }
    }
}
