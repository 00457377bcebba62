use std::f64::consts::PI;
use std::sync::Arc;

use etdms_core::coefficients::stabilization;
use etdms_core::etd::{etdms_step, phi, Regularization, SourceHistory};
use etdms_core::model::GradientFlow;
use etdms_core::nss::NssModel;
use etdms_core::oracle::{mode_ode_reference, pde_reference, solve_reference, ModeOdeSpec, OdeProblem};
use etdms_core::random::UniformStream;
use etdms_core::spectral::{PeriodicGrid, SpectralField};

fn smooth_field(grid: &Arc<PeriodicGrid>, rng: &mut UniformStream, amplitude: f64) -> SpectralField {
    let a: Vec<f64> = (0..8).map(|_| amplitude * rng.symmetric()).collect();
    let values = grid.sample(|x, y| {
        a[0] * x.sin() * y.cos()
            + a[1] * (2.0 * x + y).cos()
            + a[2] * (x - 2.0 * y).sin()
            + a[3] * y.sin()
            + a[4] * (2.0 * x).cos() * y.sin()
            + a[5] * x.cos()
            + a[6] * (x + y).sin()
            + a[7] * (2.0 * y).cos()
    });
    SpectralField::to_spectral(grid, &values).unwrap()
}

fn rel_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().norm_sq().sqrt() / b.norm_sq().sqrt()
}

#[test]
fn randomized_etdms2_steps_match_reference() {
    let grid = PeriodicGrid::new(8, 2.0 * PI).unwrap();
    let model = NssModel::with_grid(&grid, 0.05).unwrap();
    let cfg = stabilization(2, 0.5, 0.5, 1.0, 1.0).unwrap();
    let mut rng = UniformStream::new(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u_prev = smooth_field(&grid, &mut rng, 0.8);
        let u_n = smooth_field(&grid, &mut rng, 0.8);
        let tau_prev = 10f64.powf(rng.range(-3.0, -1.0));
        let mut tau = 10f64.powf(rng.range(-3.0, -1.0));
        if (tau - tau_prev).abs() < 1e-6 {
            tau *= 1.5;
        }
        let g_prev = model.nonlinear_term(&u_prev);
        let g_n = model.nonlinear_term(&u_n);
        let mut hist = SourceHistory::new(2);
        hist.reset(g_prev.clone());
        hist.advance(g_n.clone(), tau_prev);
        let reg = Regularization::from_config(&cfg, tau.max(tau_prev));
        let step = etdms_step(&u_n, &hist, model.symbol(), model.epsilon(), &reg, tau).unwrap();

        let spec = ModeOdeSpec {
            symbol: model.symbol(),
            epsilon: model.epsilon(),
            a_stab: cfg.a_stab,
            tau_ref: tau.max(tau_prev),
            order: 2,
            power: cfg.p_k,
        };
        let (reference, check) = mode_ode_reference(&u_n, &[&g_n, &g_prev], &[tau_prev], &spec, tau, 1e-12).unwrap();
        assert!(check < 1e-9);
        worst = worst.max(rel_l2(&step.u_new, &reference));
    }
    assert!(worst <= 1e-8, "worst relative L2 gap {worst}");
}

#[test]
fn k1_constant_source_matches_reference() {
    let grid = PeriodicGrid::new(8, 2.0 * PI).unwrap();
    let model = NssModel::with_grid(&grid, 0.2).unwrap();
    let mut rng = UniformStream::new(99);
    let u = smooth_field(&grid, &mut rng, 1.0);
    let f = smooth_field(&grid, &mut rng, 0.5);
    let mut hist = SourceHistory::new(1);
    hist.reset(f.clone());
    let reg = Regularization { a_stab: 0.5, order: 1, power: 0.5, tau_ref: 0.05 };
    let step = etdms_step(&u, &hist, model.symbol(), model.epsilon(), &reg, 0.05).unwrap();
    let spec = ModeOdeSpec { symbol: model.symbol(), epsilon: 0.2, a_stab: 0.5, tau_ref: 0.05, order: 1, power: 0.5 };
    let (reference, _) = mode_ode_reference(&u, &[&f], &[], &spec, 0.05, 1e-12).unwrap();
    assert!(rel_l2(&step.u_new, &reference) < 1e-10);
}

#[test]
fn scalar_mode_closed_form() {
    // m u' = −ελu + c0 + c1 s has the φ-function solution used by the stepper.
    let (lam, eps, m, c0, c1, tau, u0) = (3.0, 0.7, 1.4, 0.3, -2.0, 0.8, 1.1);
    let mu: f64 = eps * lam / m;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| dy[0] = (-eps * lam * y[0] + c0 + c1 * s) / m;
    let p = OdeProblem { rhs: &rhs, y0: vec![u0], t0: 0.0, t1: tau, rtol: 1e-12, atol: 1e-14 };
    let sol = solve_reference(&p).unwrap();
    let z = -mu * tau;
    let closed = (-mu * tau).exp() * u0 + (tau * phi(1, z) * c0 + tau * tau * phi(2, z) * c1) / m;
    assert!((sol.y[0] - closed).abs() < 1e-10);
}

#[test]
fn reference_pde_dissipates_energy() {
    let grid = PeriodicGrid::new(8, 2.0 * PI).unwrap();
    let model = NssModel::with_grid(&grid, 0.1).unwrap();
    let mut rng = UniformStream::new(3);
    let mut u = smooth_field(&grid, &mut rng, 0.5);
    let mut e_prev = model.energy(&u);
    for _ in 0..5 {
        let (next, check) = pde_reference(&model, &u, 0.02, 1e-10).unwrap();
        assert!(check < 1e-8);
        let e = model.energy(&next);
        assert!(e <= e_prev + 1e-12, "{e} > {e_prev}");
        e_prev = e;
        u = next;
    }
}
