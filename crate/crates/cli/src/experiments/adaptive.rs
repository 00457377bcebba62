//! Adaptive run against uniform runs at `τ_max` and `τ_min` from the same data.

use std::path::Path;
use std::thread;

use etdms_core::adaptive::{adaptive_run, AdaptiveEvent};
use etdms_core::integrator::{run_fixed_mesh, SchemeOptions};
use etdms_core::mesh::TimeMesh;
use etdms_core::model::GradientFlow;
use etdms_core::nss::{roughness_and_slope, NssModel};
use etdms_core::spectral::SpectralField;
use log::info;
use serde::Serialize;

use super::coarsen::{diagnostics_table, CoarsenRow};
use super::{build_model, constants, initial_state, l2_distance};
use crate::config::ExperimentConfig;
use crate::io::{ensure_dir, num, opt_num, write_json, CsvTable};
use crate::provenance::{ConstantChain, Provenance};
use crate::{Error, Result};

pub const EVENT_COLUMNS: [&str; 8] = ["step", "t", "tau", "e_rel", "retries", "accepted", "E", "E_modified"];

/// Relative tolerance for "this step equals τ_max".
const SATURATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct AdaptiveReport {
    pub end: f64,
    pub accepted_steps: usize,
    pub rejected_attempts: usize,
    pub forced_accepts: usize,
    pub large_steps: usize,
    pub small_steps: usize,
    /// `‖u_adaptive(T) − u_small(T)‖` in discrete `L²`.
    pub distance_adaptive_small: f64,
    pub distance_large_small: f64,
    #[serde(flatten)]
    pub steps: StepSummary,
    pub constants: Vec<ConstantChain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSummary {
    pub min_tau: f64,
    pub max_tau: f64,
    /// Every attempted step lies in `[τ_min, τ_max]`.
    pub clamp_ok: bool,
    /// Fraction of accepted steps ending in the last quarter of `[0, T]` that equal `τ_max`.
    pub saturation_fraction: f64,
    pub final_quarter_steps: usize,
    /// Largest `τ_{n+1}/τ_n` over accepted steps.
    pub max_growth: f64,
}

pub struct AdaptiveComparison {
    pub report: AdaptiveReport,
    pub events: Vec<AdaptiveEvent>,
    pub large: Vec<CoarsenRow>,
    pub small: Vec<CoarsenRow>,
}

fn row(model: &NssModel, step: usize, t: f64, tau: f64, u: &SpectralField, modified: Option<f64>) -> CoarsenRow {
    let (h, m) = roughness_and_slope(u);
    CoarsenRow { step, t, tau, energy: model.energy(u), modified_energy: modified, h, m, mass: u.mean() }
}

/// Uniform ETD-MS2 run; diagnostics every `stride` steps.
fn uniform_run(
    cfg: &ExperimentConfig,
    model: &NssModel,
    u0: &SpectralField,
    tau: f64,
    end: f64,
    label: &str,
) -> Result<(SpectralField, Vec<CoarsenRow>, ConstantChain)> {
    let mesh = TimeMesh::uniform(tau, end)?;
    let c = constants(cfg, model, 1.0, mesh.tau_max(), label)?;
    let opts = SchemeOptions::new(2, c.regularization);
    let last = mesh.num_steps();
    let mut rows = vec![row(model, 0, 0.0, 0.0, u0, None)];
    let u = run_fixed_mesh(model, u0, &mesh, &opts, |r| {
        if r.n % cfg.stride == 0 || r.n == last {
            rows.push(row(model, r.n, r.t, r.tau, r.u, None));
        }
    })?;
    if !u.is_finite() {
        return Err(Error::Diverged { t: end, snapshot: None });
    }
    info!("{label}: {last} steps");
    Ok((u, rows, c.record))
}

pub fn summarize(events: &[AdaptiveEvent], end: f64, tau_min: f64, tau_max: f64) -> StepSummary {
    let slack = 1e-12 * tau_max;
    let min_tau = events.iter().map(|e| e.tau).fold(f64::INFINITY, f64::min);
    let max_tau = events.iter().map(|e| e.tau).fold(0.0, f64::max);
    let clamp_ok = min_tau >= tau_min - slack && max_tau <= tau_max + slack;
    let accepted: Vec<&AdaptiveEvent> = events.iter().filter(|e| e.accepted).collect();
    let late: Vec<&&AdaptiveEvent> = accepted.iter().filter(|e| e.t > 0.75 * end).collect();
    let saturated = late.iter().filter(|e| (e.tau - tau_max).abs() <= SATURATION_TOL * tau_max).count();
    let fraction = if late.is_empty() { 0.0 } else { saturated as f64 / late.len() as f64 };
    let max_growth = accepted.windows(2).map(|w| w[1].tau / w[0].tau).fold(1.0, f64::max);
    StepSummary {
        min_tau,
        max_tau,
        clamp_ok,
        saturation_fraction: fraction,
        final_quarter_steps: late.len(),
        max_growth,
    }
}

pub fn run_adaptive_comparison(cfg: &ExperimentConfig) -> Result<AdaptiveComparison> {
    let spec = cfg.adaptive.as_ref().ok_or_else(|| Error::Config("missing adaptive section".into()))?;
    let ctrl = spec.controller();
    ctrl.validate()?;
    let model = build_model(cfg)?;
    let u0 = initial_state(cfg, &model);
    let end = spec.end;

    let ((large, small), adaptive) = thread::scope(|s| {
        let large = s.spawn(|| uniform_run(cfg, &model, &u0, ctrl.tau_max, end, "uniform tau_max"));
        let small = s.spawn(|| uniform_run(cfg, &model, &u0, ctrl.tau_min, end, "uniform tau_min"));
        let adaptive = (|| -> Result<_> {
            let c = constants(cfg, &model, cfg.r_c.unwrap_or(ctrl.ratio_bound()), ctrl.tau_max, "adaptive")?;
            let outcome = adaptive_run(&model, &u0, &ctrl, &c.regularization, Some(&c.chain), end, &[], |_, _| {})?;
            Ok((outcome, c.record))
        })();
        ((large.join().expect("large-step run panicked"), small.join().expect("small-step run panicked")), adaptive)
    });
    let (u_large, large_rows, c_large) = large?;
    let (u_small, small_rows, c_small) = small?;
    let (outcome, c_adaptive) = adaptive?;

    let events = outcome.events;
    let steps = summarize(&events, end, ctrl.tau_min, ctrl.tau_max);
    let accepted_steps = events.iter().filter(|e| e.accepted).count();
    let report = AdaptiveReport {
        end,
        accepted_steps,
        rejected_attempts: events.len() - accepted_steps,
        forced_accepts: events.iter().filter(|e| e.forced).count(),
        large_steps: large_rows.last().map_or(0, |r| r.step),
        small_steps: small_rows.last().map_or(0, |r| r.step),
        distance_adaptive_small: l2_distance(&outcome.final_state, &u_small)?,
        distance_large_small: l2_distance(&u_large, &u_small)?,
        steps,
        constants: vec![c_adaptive, c_large, c_small],
    };
    info!(
        "adaptive: {} accepted, {} rejected; distance to small-step run {:e} (large-step {:e})",
        report.accepted_steps, report.rejected_attempts, report.distance_adaptive_small, report.distance_large_small
    );
    Ok(AdaptiveComparison { report, events, large: large_rows, small: small_rows })
}

pub fn events_table(comments: Vec<String>, events: &[AdaptiveEvent]) -> Result<CsvTable> {
    let mut table = CsvTable::new(comments, &EVENT_COLUMNS)?;
    for e in events {
        table.row([
            e.step.to_string(),
            num(e.t),
            num(e.tau),
            num(e.e_rel),
            e.retries.to_string(),
            (e.accepted as u8).to_string(),
            opt_num(e.energy),
            opt_num(e.modified_energy),
        ])?;
    }
    Ok(table)
}

pub fn write_adaptive(cfg: &ExperimentConfig, run: &AdaptiveComparison, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let prov = Provenance::new(cfg, run.report.constants.clone());
    events_table(prov.header_lines(), &run.events)?.write(&out.join("adaptive_events.csv"))?;
    diagnostics_table(prov.header_lines(), &run.large, 1)?.write(&out.join("uniform_large.csv"))?;
    diagnostics_table(prov.header_lines(), &run.small, 1)?.write(&out.join("uniform_small.csv"))?;
    write_json(&out.join("report.json"), &serde_json::json!({ "provenance": prov, "report": run.report }))
}
