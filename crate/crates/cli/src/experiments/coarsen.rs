//! Unforced coarsening run with per-step diagnostics, snapshots and law fits.

use std::path::{Path, PathBuf};

use etdms_core::integrator::{run_fixed_mesh, SchemeOptions};
use etdms_core::mesh::TimeMesh;
use etdms_core::model::GradientFlow;
use etdms_core::nss::roughness_and_slope;
use etdms_core::spectral::SpectralField;
use log::{info, warn};
use serde::Serialize;

use super::{build_model, constants, initial_state};
use crate::config::ExperimentConfig;
use crate::fit::{log_fit, power_fit, LineFit};
use crate::io::{ensure_dir, num, opt_num, write_json, write_snapshot, CsvTable};
use crate::provenance::{config_hash, ConstantChain, Provenance};
use crate::{Error, Result};

/// Relative slack in the modified-energy decay check.
pub const DECAY_SLACK: f64 = 1e-8;

pub const COLUMNS: [&str; 8] = ["step", "t", "tau", "E", "E_modified", "h", "m", "mass"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarsenRow {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub energy: f64,
    pub modified_energy: Option<f64>,
    pub h: f64,
    pub m: f64,
    pub mass: f64,
}

impl CoarsenRow {
    pub fn fields(&self) -> [String; 8] {
        [
            self.step.to_string(),
            num(self.t),
            num(self.tau),
            num(self.energy),
            opt_num(self.modified_energy),
            num(self.h),
            num(self.m),
            num(self.mass),
        ]
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Fits {
    /// `E ≈ a·ln t + b`.
    pub energy: Option<LineFit>,
    /// `ln h ≈ b·ln t + c`.
    pub height: Option<LineFit>,
    pub slope: Option<LineFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarsenReport {
    /// Row 0 is the initial state.
    pub rows: Vec<CoarsenRow>,
    pub fits: Fits,
    /// Steps `n ≥ k` with `Ẽ(u^{n+1}) > Ẽ(u^n) + slack`.
    pub decay_violations: usize,
    /// Largest `Ẽ(u^{n+1}) − Ẽ(u^n)` observed.
    pub worst_increase: Option<f64>,
    pub max_mass_drift: f64,
    pub constants: Vec<ConstantChain>,
}

pub fn fits(rows: &[CoarsenRow], energy_from: f64, power_from: f64) -> Fits {
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let col = |f: fn(&CoarsenRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Fits {
        energy: log_fit(&t, &col(|r| r.energy), energy_from),
        height: power_fit(&t, &col(|r| r.h), power_from),
        slope: power_fit(&t, &col(|r| r.m), power_from),
    }
}

/// Counts decay violations among consecutive defined `Ẽ` values.
pub fn decay_check(rows: &[CoarsenRow]) -> (usize, Option<f64>) {
    let mut violations = 0;
    let mut worst: Option<f64> = None;
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (w[0].modified_energy, w[1].modified_energy) {
            let inc = b - a;
            worst = Some(worst.map_or(inc, |x| x.max(inc)));
            if inc > DECAY_SLACK * a.abs().max(1.0) {
                violations += 1;
            }
        }
    }
    (violations, worst)
}

fn snapshot_stem(t: f64) -> String {
    format!("snapshot_t{t:.6}")
}

/// Runs the experiment; `out` enables snapshots (and the last-good dump on divergence).
pub fn run_coarsening(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<CoarsenReport> {
    let spec = cfg.mesh.as_ref().ok_or_else(|| Error::Config("missing mesh section".into()))?;
    let model = build_model(cfg)?;
    let mesh = TimeMesh::perturbed_uniform(spec.dt0, spec.end, spec.amplitude, spec.seed)?;
    let r_c = cfg.r_c.unwrap_or_else(|| mesh.max_window_ratio(cfg.order).max(1.0));
    let c = constants(cfg, &model, r_c, mesh.tau_max(), "coarsen")?;
    let mut opts = SchemeOptions::new(cfg.order, c.regularization);
    opts.monitor = Some(&c.chain);
    let hash = config_hash(cfg);
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }

    // Snapshot requests mapped to the nearest mesh node; files are named by the requested time.
    let nodes = mesh.nodes();
    let mut wanted: Vec<(usize, f64)> = cfg
        .snapshots
        .iter()
        .map(|&s| {
            let i = nodes.partition_point(|&t| t < s).min(nodes.len() - 1);
            let i = if i > 0 && (s - nodes[i - 1]) <= (nodes[i] - s) { i - 1 } else { i };
            (i, s)
        })
        .collect();
    wanted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    wanted.dedup_by_key(|w| w.0);
    let requested = |n: usize| wanted.binary_search_by_key(&n, |w| w.0).ok().map(|i| wanted[i].1);

    let u0 = initial_state(cfg, &model);
    let mass0 = u0.mean();
    let (h0, m0) = roughness_and_slope(&u0);
    let mut rows = vec![CoarsenRow { step: 0, t: 0.0, tau: 0.0, energy: model.energy(&u0), modified_energy: None, h: h0, m: m0, mass: mass0 }];
    let mut last_good: (usize, f64, SpectralField) = (0, 0.0, u0.clone());
    let mut io_error: Option<Error> = None;
    let mut diverged = false;
    if let (Some(dir), Some(s)) = (out, requested(0)) {
        write_snapshot(dir, &snapshot_stem(s), &u0, 0.0, 0, &hash)?;
    }

    let result = run_fixed_mesh(&model, &u0, &mesh, &opts, |r| {
        if diverged {
            return;
        }
        let energy = r.energy.expect("monitor enabled");
        if !r.u.is_finite() || !energy.is_finite() {
            diverged = true;
            return;
        }
        let (h, m) = roughness_and_slope(r.u);
        rows.push(CoarsenRow { step: r.n, t: r.t, tau: r.tau, energy, modified_energy: r.modified_energy, h, m, mass: r.u.mean() });
        last_good = (r.n, r.t, r.u.clone());
        if let (Some(dir), Some(s)) = (out, requested(r.n)) {
            if let Err(e) = write_snapshot(dir, &snapshot_stem(s), r.u, r.t, r.n, &hash) {
                io_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    if diverged || matches!(result, Err(etdms_core::Error::NonFinite(_))) {
        let (n, t, u) = &last_good;
        warn!("non-finite state after step {n} (t = {t})");
        let snapshot: Option<PathBuf> = match out {
            Some(dir) => Some(write_snapshot(dir, "last_good", u, *t, *n, &hash)?),
            None => None,
        };
        return Err(Error::Diverged { t: *t, snapshot });
    }
    result?;

    let (decay_violations, worst_increase) = decay_check(&rows);
    let max_mass_drift = rows.iter().map(|r| (r.mass - mass0).abs()).fold(0.0, f64::max);
    info!("coarsening: {} steps, {decay_violations} modified-energy increases", rows.len() - 1);
    Ok(CoarsenReport {
        fits: fits(&rows, cfg.fits.energy_from, cfg.fits.power_from),
        rows,
        decay_violations,
        worst_increase,
        max_mass_drift,
        constants: vec![c.record],
    })
}

/// Diagnostics table keeping every `stride`-th row and the last one.
pub fn diagnostics_table(comments: Vec<String>, rows: &[CoarsenRow], stride: usize) -> Result<CsvTable> {
    let mut table = CsvTable::new(comments, &COLUMNS)?;
    for (i, r) in rows.iter().enumerate() {
        if i % stride == 0 || i + 1 == rows.len() {
            table.row(r.fields())?;
        }
    }
    Ok(table)
}

pub fn write_coarsening(cfg: &ExperimentConfig, report: &CoarsenReport, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let prov = Provenance::new(cfg, report.constants.clone());
    diagnostics_table(prov.header_lines(), &report.rows, cfg.stride)?.write(&out.join("coarsen.csv"))?;
    write_json(
        &out.join("fits.json"),
        &serde_json::json!({
            "provenance": prov,
            "energy_from": cfg.fits.energy_from,
            "power_from": cfg.fits.power_from,
            "fits": report.fits,
            "decay_violations": report.decay_violations,
            "worst_increase": report.worst_increase,
            "max_mass_drift": report.max_mass_drift,
        }),
    )
}
