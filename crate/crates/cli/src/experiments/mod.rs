//! The four experiment drivers and the setup they share.

pub mod adaptive;
pub mod coarsen;
pub mod converge;
pub mod step_debug;

use std::sync::Arc;

use etdms_core::coefficients::{c_star_estimate, stabilization_with_table, StabilizationConfig};
use etdms_core::etd::Regularization;
use etdms_core::model::GradientFlow;
use etdms_core::nss::{random_initial, NssModel};
use etdms_core::spectral::{PeriodicGrid, SpectralField};

use crate::config::{ExperimentConfig, InitialSpec};
use crate::provenance::ConstantChain;
use crate::Result;

pub use adaptive::{run_adaptive_comparison, AdaptiveReport};
pub use coarsen::{run_coarsening, CoarsenReport, CoarsenRow};
pub use converge::{run_convergence, ConvergenceReport, ConvergenceRow};
pub use step_debug::{run_step_debug, StepDebug};

/// Grid samples per ratio axis when `C_j*` has to be estimated (`k ≥ 3`).
const C_STAR_SAMPLES: usize = 16;

pub fn build_model(cfg: &ExperimentConfig) -> Result<NssModel> {
    let grid = PeriodicGrid::new(cfg.grid.n, cfg.grid.length)?;
    Ok(NssModel::with_grid(&grid, cfg.epsilon)?)
}

pub fn initial_state(cfg: &ExperimentConfig, model: &NssModel) -> SpectralField {
    let grid: &Arc<PeriodicGrid> = model.grid();
    match cfg.initial {
        InitialSpec::Manufactured => model.manufactured_solution(0.0),
        InitialSpec::Random { amplitude, seed, base } => random_initial(grid, amplitude, seed, base),
    }
}

/// Constant chain, the regularization actually used, and its provenance record.
pub struct Constants {
    pub chain: StabilizationConfig,
    pub regularization: Regularization,
    pub record: ConstantChain,
}

pub fn constants(cfg: &ExperimentConfig, model: &NssModel, r_c: f64, tau_ref: f64, label: &str) -> Result<Constants> {
    let k = cfg.order;
    let chain = if k <= 2 {
        model.stabilization(k, r_c)?
    } else {
        let l = model.lipschitz();
        let table = c_star_estimate(k, r_c, C_STAR_SAMPLES)?;
        stabilization_with_table(k, l.beta, l.gamma, l.c_lip, r_c, &table)?
    };
    let mut regularization = Regularization::from_config(&chain, tau_ref);
    if let Some(a) = cfg.a_override {
        regularization.a_stab = a;
    }
    let record = ConstantChain::new(label, &chain, regularization.a_stab, tau_ref);
    Ok(Constants { chain, regularization, record })
}

/// Discrete `L²(Ω)` distance.
pub fn l2_distance(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    Ok(a.sub(b)?.norm_sq().sqrt())
}
