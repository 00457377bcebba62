use std::f64::consts::PI;

use etdms_core::adaptive::{adaptive_run, AdaptiveConfig, AdaptiveEvent, Estimator, RegularizationStep};
use etdms_core::etd::Regularization;
use etdms_core::model::GradientFlow;
use etdms_core::nss::{random_initial, NssModel};
use etdms_core::spectral::{PeriodicGrid, SpectralField};
use proptest::prelude::*;

fn setup(seed: u64) -> (NssModel, SpectralField) {
    let g = PeriodicGrid::new(16, 2.0 * PI).unwrap();
    let model = NssModel::with_grid(&g, 0.05).unwrap();
    let u0 = random_initial(&g, 0.3, seed, true);
    (model, u0)
}

fn run(cfg: &AdaptiveConfig, end: f64, stops: &[f64], seed: u64) -> (Vec<AdaptiveEvent>, SpectralField, SpectralField) {
    let (model, u0) = setup(seed);
    let stab = model.stabilization(2, cfg.ratio_bound()).unwrap();
    let reg = Regularization::from_config(&stab, cfg.tau_max);
    let out = adaptive_run(&model, &u0, cfg, &reg, Some(&stab), end, stops, |_, _| {}).unwrap();
    (out.events, out.final_state, u0)
}

fn check_invariants(cfg: &AdaptiveConfig, events: &[AdaptiveEvent]) {
    let slack = 1e-12;
    for e in events {
        assert!(e.tau >= cfg.tau_min * (1.0 - slack) && e.tau <= cfg.tau_max * (1.0 + slack), "tau {}", e.tau);
        if e.accepted && !e.forced {
            assert!(e.e_rel <= cfg.tol);
        }
        if !e.accepted {
            assert!(e.e_rel > cfg.tol);
        }
    }
    // Within a step the retried sizes never grow.
    for w in events.windows(2) {
        if !w[0].accepted {
            assert_eq!(w[0].step, w[1].step);
            assert!(w[1].tau <= w[0].tau);
            assert_eq!(w[1].retries, w[0].retries + 1);
        }
    }
    let accepted: Vec<&AdaptiveEvent> = events.iter().filter(|e| e.accepted).collect();
    if let Some(cap) = cfg.growth_cap {
        for w in accepted.windows(2) {
            assert!(w[1].tau <= cap * w[0].tau * (1.0 + slack));
        }
    }
    for (i, e) in accepted.iter().enumerate() {
        assert_eq!(e.step, i + 1);
    }
}

#[test]
fn controller_invariants_and_mass() {
    let cfg = AdaptiveConfig { tol: 2e-4, ..Default::default() };
    let (events, u, u0) = run(&cfg, 1.0, &[], 1);
    check_invariants(&cfg, &events);
    let last = events.last().unwrap();
    assert!(last.accepted && (last.t - 1.0).abs() < 1e-14);
    assert!((u.mean() - u0.mean()).abs() <= 1e-12);
    // Rough data: the first step is taken at the floor.
    assert_eq!(events[0].tau, cfg.tau_min);
}

#[test]
fn infinite_tolerance_ramps_geometrically() {
    let cfg = AdaptiveConfig { tol: f64::INFINITY, ..Default::default() };
    let (events, _, _) = run(&cfg, 1.0, &[], 2);
    assert!(events.iter().all(|e| e.accepted && !e.forced));
    let taus: Vec<f64> = events.iter().map(|e| e.tau).collect();
    assert_eq!(&taus[..4], &[1e-3, 4e-3, 1.6e-2, 6.4e-2]);
    assert!(taus[4..taus.len() - 1].iter().all(|&t| t == cfg.tau_max));
}

#[test]
fn tight_tolerance_forces_accepts_at_the_floor() {
    let cfg = AdaptiveConfig { tol: 1e-14, max_retries: 3, ..Default::default() };
    let (events, _, _) = run(&cfg, 0.01, &[], 3);
    check_invariants(&cfg, &events);
    let accepted: Vec<&AdaptiveEvent> = events.iter().filter(|e| e.accepted).collect();
    assert!(accepted.iter().all(|e| e.forced && e.tau <= cfg.tau_min * (1.0 + 1e-12)));
}

#[test]
fn lands_on_stop_times() {
    let cfg = AdaptiveConfig { tol: 1e-3, ..Default::default() };
    let stops = [0.25, 0.5, 0.7];
    let (events, _, _) = run(&cfg, 1.0, &stops, 4);
    check_invariants(&cfg, &events);
    let times: Vec<f64> = events.iter().filter(|e| e.accepted).map(|e| e.t).collect();
    for s in stops {
        assert!(times.contains(&s), "missing stop {s}");
    }
}

#[test]
fn fixed_regularization_variant_is_selectable() {
    let cfg = AdaptiveConfig {
        estimator: Estimator::Stabilized,
        regularization_step: RegularizationStep::Fixed,
        tol: 1e-3,
        ..Default::default()
    };
    let (events, _, _) = run(&cfg, 0.5, &[], 5);
    check_invariants(&cfg, &events);
    assert!(events.iter().all(|e| e.modified_energy.is_some() || e.step < 2 || !e.accepted));
}

#[test]
fn rejects_bad_arguments() {
    let (model, u0) = setup(0);
    let reg = Regularization::none(2, 1.0);
    let cfg = AdaptiveConfig::default();
    assert!(adaptive_run(&model, &u0, &cfg, &reg, None, 1e-4, &[], |_, _| {}).is_err());
    assert!(adaptive_run(&model, &u0, &cfg, &reg, None, 1.0, &[0.5, 0.5005], |_, _| {}).is_err());
    let bad = AdaptiveConfig { rho: 0.0, ..cfg };
    assert!(adaptive_run(&model, &u0, &bad, &reg, None, 1.0, &[], |_, _| {}).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn invariants_hold_for_random_settings(
        seed in 0u64..1000,
        log_tol in -5.0f64..-2.0,
        rate in 0.3f64..1.0,
        cap in prop::option::of(1.5f64..6.0),
    ) {
        let cfg = AdaptiveConfig { tol: 10f64.powf(log_tol), rate, growth_cap: cap, ..Default::default() };
        let (events, _, _) = run(&cfg, 0.3, &[0.1], seed);
        check_invariants(&cfg, &events);
    }
}
