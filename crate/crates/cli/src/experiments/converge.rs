//! Manufactured-solution convergence study on uniform and perturbed meshes.

use std::path::Path;
use std::thread;

use etdms_core::integrator::{run_fixed_mesh, SchemeOptions, Startup};
use etdms_core::mesh::TimeMesh;
use etdms_core::nss::NssModel;
use etdms_core::spectral::SpectralField;
use log::info;
use serde::Serialize;

use super::{build_model, constants, l2_distance};
use crate::config::{ExperimentConfig, StartupKind};
use crate::io::{ensure_dir, num, opt_num, write_json, CsvTable};
use crate::provenance::{ConstantChain, Provenance};
use crate::{Error, Result};

/// Largest relative coefficient mass allowed outside the four modes of `sin(x)cos(y)`.
const RESOLUTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_t: usize,
    pub error_uniform: f64,
    pub rate_uniform: Option<f64>,
    pub error_perturbed: Option<f64>,
    pub rate_perturbed: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// One record per mesh family; `A` does not change under refinement.
    pub constants: Vec<ConstantChain>,
}

/// Fails unless the manufactured solution is carried by four retained modes.
pub fn check_resolution(model: &NssModel) -> Result<()> {
    let u = model.manufactured_solution(0.0);
    let mut mags: Vec<(f64, usize)> = u.coeffs().iter().enumerate().map(|(i, c)| (c.norm_sqr(), i)).collect();
    mags.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = mags.iter().map(|m| m.0).sum();
    let outside: f64 = mags[4..].iter().map(|m| m.0).sum();
    let residual = (outside / total).sqrt();
    let dealiased = u.dealias();
    let lost = l2_distance(&u, &dealiased)? / u.norm_sq().sqrt();
    if residual > RESOLUTION_TOL || lost > RESOLUTION_TOL {
        return Err(Error::Config(format!(
            "grid does not resolve sin(x)cos(y): off-mode residual {residual:e}, dealiasing loss {lost:e} \
             (the domain length must be a multiple of 2π and N large enough)"
        )));
    }
    Ok(())
}

fn cell(model: &NssModel, cfg: &ExperimentConfig, mesh: &TimeMesh, r_c: f64, label: &str) -> Result<(f64, ConstantChain)> {
    let c = constants(cfg, model, r_c, mesh.tau_max(), label)?;
    let forcing = |t: f64| model.manufactured_forcing(t);
    let exact = |t: f64| model.manufactured_solution(t);
    let mut opts = SchemeOptions::new(cfg.order, c.regularization);
    opts.forcing = Some(&forcing);
    opts.startup = match cfg.startup {
        StartupKind::Exact => Startup::Exact(&exact),
        StartupKind::Etd1 => Startup::EtdSubsteps,
    };
    let u0 = model.manufactured_solution(0.0);
    let u: SpectralField = run_fixed_mesh(model, &u0, mesh, &opts, |_| {})?;
    if !u.is_finite() {
        return Err(Error::Diverged { t: mesh.end(), snapshot: None });
    }
    let err = l2_distance(&u, &exact(mesh.end()))?;
    info!("{label}: {} steps, error {err:e}", mesh.num_steps());
    Ok((err, c.record))
}

fn rates(errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None];
    out.extend(errors.windows(2).map(|w| Some((w[0] / w[1]).log2())));
    out
}

/// `r_c` for a mesh family: the override, else the measured window ratio (at least 1).
fn ratio_bound(cfg: &ExperimentConfig, mesh: &TimeMesh) -> f64 {
    cfg.r_c.unwrap_or_else(|| mesh.max_window_ratio(cfg.order).max(1.0))
}

/// Runs every level of both mesh families in parallel.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let spec = cfg.mesh.as_ref().ok_or_else(|| Error::Config("missing mesh section".into()))?;
    let model = build_model(cfg)?;
    check_resolution(&model)?;

    let levels: Vec<usize> = (0..cfg.levels).map(|l| 1 << l).collect();
    let mut uniform = Vec::with_capacity(levels.len());
    for &n_t in &levels {
        uniform.push(TimeMesh::uniform(spec.dt0 / n_t as f64, spec.end)?);
    }
    let mut perturbed = Vec::new();
    if spec.amplitude > 0.0 {
        let mut mesh = TimeMesh::perturbed_uniform(spec.dt0, spec.end, spec.amplitude, spec.seed)?;
        for _ in &levels {
            let next = mesh.refine();
            perturbed.push(std::mem::replace(&mut mesh, next));
        }
    }
    let r_uniform = cfg.r_c.unwrap_or(1.0);
    let r_perturbed = perturbed.first().map(|m| ratio_bound(cfg, m));

    let (uni, per) = thread::scope(|s| {
        let model = &model;
        let uni: Vec<_> = uniform
            .iter()
            .zip(&levels)
            .map(|(m, n_t)| s.spawn(move || cell(model, cfg, m, r_uniform, &format!("uniform N_T={n_t}"))))
            .collect();
        let per: Vec<_> = perturbed
            .iter()
            .zip(&levels)
            .map(|(m, n_t)| {
                let r = r_perturbed.expect("perturbed family exists");
                s.spawn(move || cell(model, cfg, m, r, &format!("perturbed N_T={n_t}")))
            })
            .collect();
        let join = |hs: Vec<thread::ScopedJoinHandle<'_, Result<(f64, ConstantChain)>>>| -> Result<Vec<(f64, ConstantChain)>> {
            hs.into_iter().map(|h| h.join().expect("convergence cell panicked")).collect()
        };
        (join(uni), join(per))
    });
    let (uni, per) = (uni?, per?);

    let e_uni: Vec<f64> = uni.iter().map(|c| c.0).collect();
    let e_per: Vec<f64> = per.iter().map(|c| c.0).collect();
    let r_uni = rates(&e_uni);
    let r_per = rates(&e_per);
    let rows = levels
        .iter()
        .enumerate()
        .map(|(i, &n_t)| ConvergenceRow {
            n_t,
            error_uniform: e_uni[i],
            rate_uniform: r_uni[i],
            error_perturbed: e_per.get(i).copied(),
            rate_perturbed: if e_per.is_empty() { None } else { r_per[i] },
        })
        .collect();
    let mut constants = vec![uni[0].1.clone()];
    if let Some(c) = per.first() {
        constants.push(c.1.clone());
    }
    Ok(ConvergenceReport { rows, constants })
}

pub fn write_convergence(cfg: &ExperimentConfig, report: &ConvergenceReport, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let prov = Provenance::new(cfg, report.constants.clone());
    let mut table =
        CsvTable::new(prov.header_lines(), &["N_T", "error_uniform", "rate_uniform", "error_perturbed", "rate_perturbed"])?;
    for r in &report.rows {
        table.row([
            r.n_t.to_string(),
            num(r.error_uniform),
            opt_num(r.rate_uniform),
            opt_num(r.error_perturbed),
            opt_num(r.rate_perturbed),
        ])?;
    }
    table.write(&out.join("converge.csv"))?;
    write_json(&out.join("converge.json"), &serde_json::json!({ "provenance": prov, "rows": report.rows }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use etdms_core::spectral::PeriodicGrid;

    #[test]
    fn resolution_guard() {
        let ok = NssModel::with_grid(&PeriodicGrid::new(16, 4.0 * std::f64::consts::PI).unwrap(), 0.01).unwrap();
        assert!(check_resolution(&ok).is_ok());
        let off = NssModel::with_grid(&PeriodicGrid::new(16, 5.0).unwrap(), 0.01).unwrap();
        assert!(matches!(check_resolution(&off), Err(Error::Config(_))));
    }

    #[test]
    fn rate_column() {
        let r = rates(&[4.0, 1.0, 0.25]);
        assert_eq!(r, vec![None, Some(2.0), Some(2.0)]);
    }
}
