//! Fixed-mesh driver: start-up, the multistep loop, and the per-step
//! energy / modified-energy monitor.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::coefficients::StabilizationConfig;
use crate::error::Result;
use crate::etd::{etd1_step, etdms_step, interval_seminorms, Regularization, SourceHistory};
use crate::mesh::TimeMesh;
use crate::model::{modified_energy, GradientFlow, IntervalSeminorms};
use crate::spectral::SpectralField;

pub type Forcing<'a> = &'a dyn Fn(f64) -> SpectralField;

/// How the first `k − 1` states are produced.
#[derive(Clone, Copy)]
pub enum Startup<'a> {
    /// ETD1 with `k` equal sub-steps per start-up interval.
    EtdSubsteps,
    /// Take the states from a known solution `u(t)`.
    Exact(&'a dyn Fn(f64) -> SpectralField),
}

#[derive(Clone, Copy)]
pub struct SchemeOptions<'a> {
    pub order: usize,
    pub regularization: Regularization,
    pub startup: Startup<'a>,
    pub forcing: Option<Forcing<'a>>,
    /// Enables `E` and `Ẽ` in the step records.
    pub monitor: Option<&'a StabilizationConfig>,
    pub quad_order: usize,
}

impl<'a> SchemeOptions<'a> {
    pub fn new(order: usize, regularization: Regularization) -> Self {
        Self { order, regularization, startup: Startup::EtdSubsteps, forcing: None, monitor: None, quad_order: 8 }
    }
}

/// What the observer sees after every step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'r> {
    /// Index of the new state `u^n`.
    pub n: usize,
    pub t: f64,
    pub tau: f64,
    pub u: &'r SpectralField,
    pub energy: Option<f64>,
    pub modified_energy: Option<f64>,
    pub seminorms: Option<IntervalSeminorms>,
    pub startup: bool,
}

/// `F(u) + f(t)`.
pub fn source<M: GradientFlow + ?Sized>(model: &M, u: &SpectralField, t: f64, forcing: Option<Forcing<'_>>) -> Result<SpectralField> {
    let mut g = model.nonlinear_term(u);
    if let Some(f) = forcing {
        g.axpy(1.0, &f(t))?;
    }
    Ok(g)
}

/// `substeps` ETD1 steps of size `tau / substeps`, re-evaluating the source each time.
pub fn etd1_substeps<M: GradientFlow + ?Sized>(
    model: &M,
    u: &SpectralField,
    t: f64,
    tau: f64,
    substeps: usize,
    forcing: Option<Forcing<'_>>,
) -> Result<SpectralField> {
    let h = tau / substeps as f64;
    let mut cur = u.clone();
    for i in 0..substeps {
        let g = source(model, &cur, t + i as f64 * h, forcing)?;
        cur = etd1_step(&cur, &g, h, model.epsilon(), model.symbol())?;
    }
    Ok(cur)
}

/// Integrates `u0` across `mesh` and returns the final state.
pub fn run_fixed_mesh<M: GradientFlow + ?Sized>(
    model: &M,
    u0: &SpectralField,
    mesh: &TimeMesh,
    opts: &SchemeOptions<'_>,
    mut observer: impl FnMut(&StepRecord<'_>),
) -> Result<SpectralField> {
    let k = opts.order;
    let nodes = mesh.nodes();
    let mut u = u0.clone();
    let mut history = SourceHistory::new(k);
    history.reset(source(model, &u, nodes[0], opts.forcing)?);
    let mut recent: VecDeque<IntervalSeminorms> = VecDeque::with_capacity(k);
    let tau_ref = opts.regularization.tau_ref;

    for n in 0..mesh.num_steps() {
        let tau = mesh.step(n);
        let t_new = nodes[n + 1];
        let startup = n + 1 < k;
        let mut seminorms = None;
        let u_new = if startup {
            match opts.startup {
                Startup::EtdSubsteps => etd1_substeps(model, &u, nodes[n], tau, k, opts.forcing)?,
                Startup::Exact(exact) => exact(t_new),
            }
        } else {
            let step = etdms_step(&u, &history, model.symbol(), model.epsilon(), &opts.regularization, tau)?;
            if opts.monitor.is_some() && k > 1 {
                let (h, vp) = interval_seminorms(&step.dense, opts.quad_order)?;
                seminorms = Some(IntervalSeminorms { h, vp });
            }
            step.u_new
        };
        history.advance(source(model, &u_new, t_new, opts.forcing)?, tau);

        let (energy, modified) = match opts.monitor {
            Some(cfg) => {
                if let Some(s) = seminorms {
                    recent.push_front(s);
                    recent.truncate(k.saturating_sub(1));
                }
                let e = model.energy(&u_new);
                let window: Vec<IntervalSeminorms> = recent.iter().copied().collect();
                let me = if n + 1 >= k { modified_energy(e, &window, cfg, tau_ref).ok() } else { None };
                (Some(e), me)
            }
            None => (None, None),
        };
        u = u_new;
        observer(&StepRecord { n: n + 1, t: t_new, tau, u: &u, energy, modified_energy: modified, seminorms, startup });
    }
    Ok(u)
}
