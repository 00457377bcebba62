//! Adaptive time stepping with the embedded ETD1 / ETD-MS2 pair.
//!
//! Each step computes a first-order candidate `U1` (ETD1 with a frozen
//! source) and the second-order solution `U2`, measures `e = ‖U1 − U2‖/‖U2‖` (grid RMS),
//! retries with a smaller step while `e > tol`, and proposes the next step
//! with `τ ← clamp(ρ(tol/e)^r τ, τ_min, τ_max)`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::coefficients::{lagrange_window, StabilizationConfig};
use crate::error::{Error, Result};
use crate::etd::{etd1_step, etdms_step, etdms_step_with_window, interval_seminorms, DenseOutput, Regularization, SourceHistory};
use crate::integrator::{etd1_substeps, source};
use crate::math::powf;
use crate::model::{modified_energy, GradientFlow, IntervalSeminorms};
use crate::spectral::SpectralField;

/// Which first-order step the error estimate compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// ETD1 of the unregularized equation, so `U1 − U2` also sees the
    /// regularization term of `U2`.
    #[default]
    Plain,
    /// ETD1 with the same regularization multiplier as `U2`; `U1 − U2` is the
    /// interpolation error only.
    Stabilized,
}

/// Step that enters `Aτ^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizationStep {
    /// The step being attempted.
    #[default]
    Local,
    /// The `τ_ref` of the supplied regularization (normally `τ_max`): `A τ^k` is constant.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// Safety factor `ρ ∈ (0, 1]`.
    pub rho: f64,
    pub tol: f64,
    /// Exponent `r` of the update.
    pub rate: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub max_retries: usize,
    /// Optional cap `τ_{n+1} ≤ cap·τ_n` on step growth.
    pub growth_cap: Option<f64>,
    pub estimator: Estimator,
    pub regularization_step: RegularizationStep,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            rho: 0.95,
            tol: 1e-3,
            rate: 0.5,
            tau_min: 1e-3,
            tau_max: 1e-1,
            max_retries: 20,
            growth_cap: Some(4.0),
            estimator: Estimator::Plain,
            regularization_step: RegularizationStep::Local,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Argument("rho must lie in (0, 1]"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Argument("tol must be positive"));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::Argument("rate must be positive"));
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau_max) || !self.tau_max.is_finite() {
            return Err(Error::Argument("need 0 < tau_min <= tau_max"));
        }
        if let Some(cap) = self.growth_cap {
            if !(cap >= 1.0) {
                return Err(Error::Argument("growth cap must be at least 1"));
            }
        }
        Ok(())
    }

    /// `r_c` that the realized steps are guaranteed to respect (growth direction).
    pub fn ratio_bound(&self) -> f64 {
        self.growth_cap.unwrap_or(self.tau_max / self.tau_min)
    }
}

/// `clamp(ρ(tol/e)^r τ, τ_min, τ_max)`; `e = 0` gives `τ_max`.
pub fn adp_update(e: f64, tau: f64, cfg: &AdaptiveConfig) -> f64 {
    if e == 0.0 {
        return cfg.tau_max;
    }
    let proposal = cfg.rho * powf(cfg.tol / e, cfg.rate) * tau;
    if proposal.is_nan() {
        return cfg.tau_min;
    }
    proposal.clamp(cfg.tau_min, cfg.tau_max)
}

/// One attempted step, accepted or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveEvent {
    /// Index of the state the attempt would produce.
    pub step: usize,
    /// End time of the attempt.
    pub t: f64,
    pub tau: f64,
    pub e_rel: f64,
    /// Rejections before this attempt within the same step.
    pub retries: usize,
    pub accepted: bool,
    /// Accepted with `e > tol` because no smaller step was available.
    pub forced: bool,
    pub energy: Option<f64>,
    pub modified_energy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub final_state: SpectralField,
    pub events: Vec<AdaptiveEvent>,
}

impl AdaptiveOutcome {
    pub fn accepted(&self) -> impl Iterator<Item = &AdaptiveEvent> {
        self.events.iter().filter(|e| e.accepted)
    }

    pub fn forced_count(&self) -> usize {
        self.accepted().filter(|e| e.forced).count()
    }
}

/// Step toward `remaining`, never leaving a remainder shorter than `tau_min`.
fn land(remaining: f64, tau: f64, tau_min: f64) -> f64 {
    if remaining <= tau * (1.0 + 1e-12) {
        remaining
    } else if remaining < tau + tau_min {
        if remaining >= 2.0 * tau_min {
            remaining - tau_min
        } else {
            remaining
        }
    } else {
        tau
    }
}

fn relative_rms(u1: &SpectralField, u2: &SpectralField) -> Result<f64> {
    let diff = u1.sub(u2)?.rms();
    let scale = u2.rms();
    Ok(if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// Runs the controller from `t = 0` to `end`, landing exactly on every time in `stops`.
///
/// `reg.tau_ref` only matters for [`RegularizationStep::Fixed`], where it
/// should be `tau_max`; `Local` replaces it with each attempted step.
/// When `monitor` is given the events carry `E` and `Ẽ`. `observer` is called after every accepted step.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_run<M: GradientFlow + ?Sized>(
    model: &M,
    u0: &SpectralField,
    cfg: &AdaptiveConfig,
    reg: &Regularization,
    monitor: Option<&StabilizationConfig>,
    end: f64,
    stops: &[f64],
    mut observer: impl FnMut(&AdaptiveEvent, &SpectralField),
) -> Result<AdaptiveOutcome> {
    cfg.validate()?;
    if !(end >= cfg.tau_min) || !end.is_finite() {
        return Err(Error::Argument("end time must be at least tau_min"));
    }
    let mut targets: Vec<f64> = stops.iter().copied().filter(|&s| s > 0.0 && s < end).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    targets.push(end);
    let mut prev = 0.0;
    for &s in &targets {
        if s - prev < cfg.tau_min {
            return Err(Error::Argument("stop times must be at least tau_min apart"));
        }
        prev = s;
    }

    let eps = model.epsilon();
    let symbol = model.symbol();
    let mut history = SourceHistory::new(2);
    let mut u = u0.clone();
    history.reset(source(model, &u, 0.0, None)?);
    let mut t = 0.0;
    let mut n = 0;
    let mut proposal = cfg.tau_min;
    let mut recent: VecDeque<IntervalSeminorms> = VecDeque::with_capacity(1);
    let mut events = Vec::new();

    let frozen = lagrange_window(1, &[])?;
    let step_reg = |tau: f64| match cfg.regularization_step {
        RegularizationStep::Fixed => *reg,
        RegularizationStep::Local => Regularization { tau_ref: tau, ..*reg },
    };
    let trial = |u: &SpectralField, history: &SourceHistory, t: f64, tau: f64| -> Result<(SpectralField, f64, Option<DenseOutput>)> {
        let reg = &step_reg(tau);
        // The start-up step is unregularized, so its estimate is too.
        let u1 = match cfg.estimator {
            Estimator::Stabilized if history.is_ready() => etdms_step_with_window(u, history, &frozen, symbol, eps, reg, tau)?.u_new,
            _ => etd1_step(u, history.source(0).expect("history is seeded"), tau, eps, symbol)?,
        };
        let (u2, dense) = if history.is_ready() {
            let step = etdms_step(u, history, symbol, eps, reg, tau)?;
            (step.u_new, Some(step.dense))
        } else {
            (etd1_substeps(model, u, t, tau, 2, None)?, None)
        };
        let e = relative_rms(&u1, &u2)?;
        Ok((u2, e, dense))
    };

    for &target in &targets {
        while target - t > 0.0 {
            let remaining = target - t;
            let mut tau = land(remaining, proposal.clamp(cfg.tau_min, cfg.tau_max), cfg.tau_min);
            let mut retries = 0;
            let (u_new, e, dense, forced) = loop {
                let (u2, e, dense) = trial(&u, &history, t, tau)?;
                if e <= cfg.tol {
                    break (u2, e, dense, false);
                }
                if retries > cfg.max_retries {
                    break (u2, e, dense, true);
                }
                // Out of retries: one last attempt at the floor.
                let next = if retries == cfg.max_retries {
                    land(remaining, cfg.tau_min, cfg.tau_min)
                } else {
                    land(remaining, adp_update(e, tau, cfg).min(tau), cfg.tau_min)
                };
                if next >= tau {
                    break (u2, e, dense, true);
                }
                events.push(AdaptiveEvent {
                    step: n + 1,
                    t: t + tau,
                    tau,
                    e_rel: e,
                    retries,
                    accepted: false,
                    forced: false,
                    energy: None,
                    modified_energy: None,
                });
                tau = next;
                retries += 1;
            };
            if !u_new.is_finite() {
                return Err(Error::NonFinite("adaptive step"));
            }

            let t_new = if tau == remaining { target } else { t + tau };
            history.advance(source(model, &u_new, t_new, None)?, tau);
            let (energy, modified) = match monitor {
                Some(stab) => {
                    if let Some(d) = &dense {
                        let (h, vp) = interval_seminorms(d, 8)?;
                        recent.clear();
                        recent.push_front(IntervalSeminorms { h, vp });
                    }
                    let en = model.energy(&u_new);
                    let window: Vec<IntervalSeminorms> = recent.iter().copied().collect();
                    let me = if n + 1 >= 2 { modified_energy(en, &window, stab, step_reg(tau).tau_ref).ok() } else { None };
                    (Some(en), me)
                }
                None => (None, None),
            };
            n += 1;
            t = t_new;
            u = u_new;
            let event = AdaptiveEvent {
                step: n,
                t,
                tau,
                e_rel: e,
                retries,
                accepted: true,
                forced,
                energy,
                modified_energy: modified,
            };
            observer(&event, &u);
            events.push(event);

            proposal = adp_update(e, tau, cfg);
            if let Some(cap) = cfg.growth_cap {
                proposal = proposal.min(cap * tau);
            }
        }
    }
    Ok(AdaptiveOutcome { final_state: u, events })
}
