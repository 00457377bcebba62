//! A single multistep step with everything that went into it.

use std::path::Path;

use etdms_core::etd::{etd1_step, etdms_step, SourceHistory};
use etdms_core::integrator::{etd1_substeps, source, Forcing};
use etdms_core::mesh::TimeMesh;
use etdms_core::model::GradientFlow;
use serde::Serialize;

use super::{build_model, constants, initial_state, l2_distance};
use crate::config::{ExperimentConfig, InitialSpec};
use crate::io::write_json;
use crate::provenance::{ConstantChain, Provenance};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct StepDebug {
    /// Index `n` of the state the multistep step starts from.
    pub n: usize,
    pub t: f64,
    pub tau: f64,
    /// `[τ_{n−1}, …, τ_{n−k+1}]`.
    pub window_steps: Vec<f64>,
    /// `ξ_{i,j}` of the Lagrange window, row `i`.
    pub xi: Vec<Vec<f64>>,
    pub multiplier_max: f64,
    /// `‖U_ETD1 − U‖/‖U‖` (grid RMS) for this step.
    pub e_rel: f64,
    /// Distance to the manufactured solution, when the initial data is manufactured.
    pub error_vs_exact: Option<f64>,
    pub constants: ConstantChain,
}

/// Takes the `k − 1` start-up steps of the configured mesh, then one multistep step.
pub fn run_step_debug(cfg: &ExperimentConfig) -> Result<StepDebug> {
    let spec = cfg.mesh.as_ref().ok_or_else(|| Error::Config("missing mesh section".into()))?;
    let model = build_model(cfg)?;
    let mesh = TimeMesh::perturbed_uniform(spec.dt0, spec.end, spec.amplitude, spec.seed)?;
    let k = cfg.order;
    if mesh.num_steps() < k {
        return Err(Error::Config(format!("mesh has {} steps; order {k} needs at least {k}", mesh.num_steps())));
    }
    let r_c = cfg.r_c.unwrap_or_else(|| mesh.max_window_ratio(k).max(1.0));
    let c = constants(cfg, &model, r_c, mesh.tau_max(), "step-debug")?;
    let manufactured = matches!(cfg.initial, InitialSpec::Manufactured);
    let forcing_fn = |t: f64| model.manufactured_forcing(t);
    let forcing: Option<Forcing<'_>> = manufactured.then_some(&forcing_fn as Forcing<'_>);

    let nodes = mesh.nodes();
    let mut u = initial_state(cfg, &model);
    let mut history = SourceHistory::new(k);
    history.reset(source(&model, &u, 0.0, forcing)?);
    for n in 0..k - 1 {
        u = etd1_substeps(&model, &u, nodes[n], mesh.step(n), k, forcing)?;
        history.advance(source(&model, &u, nodes[n + 1], forcing)?, mesh.step(n));
    }
    let n = k - 1;
    let tau = mesh.step(n);
    let window = history.window()?;
    let step = etdms_step(&u, &history, model.symbol(), model.epsilon(), &c.regularization, tau)?;
    let g = history.source(0).expect("history is seeded");
    let u1 = etd1_step(&u, g, tau, model.epsilon(), model.symbol())?;
    let e_rel = u1.sub(&step.u_new)?.rms() / step.u_new.rms();
    let error_vs_exact = if manufactured {
        Some(l2_distance(&step.u_new, &model.manufactured_solution(nodes[n + 1]))?)
    } else {
        None
    };
    let lam_max = model.symbol().iter().copied().fold(0.0, f64::max);
    Ok(StepDebug {
        n,
        t: nodes[n],
        tau,
        window_steps: window.steps().to_vec(),
        xi: (0..k).map(|i| window.basis(i).to_vec()).collect(),
        multiplier_max: c.regularization.multiplier(lam_max),
        e_rel,
        error_vs_exact,
        constants: c.record,
    })
}

pub fn write_step_debug(cfg: &ExperimentConfig, dbg: &StepDebug, out: &Path) -> Result<()> {
    crate::io::ensure_dir(out)?;
    let prov = Provenance::new(cfg, vec![dbg.constants.clone()]);
    write_json(&out.join("step_debug.json"), &serde_json::json!({ "provenance": prov, "step": dbg }))
}
