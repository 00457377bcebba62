//! Exact per-mode integration of the regularized multistep scheme
//!
//! ```text
//! du/dt + εLu + Aτ^k d/dt L^p u = Σ_i ℓ_i(t − t_n) G^{n−i},   t ∈ [t_n, t_{n+1}]
//! ```
//!
//! where `G^{n−i}` are past nonlinear evaluations (plus any sampled forcing).
//! In Fourier space each mode obeys `m u' + ελ u = g(s)` with the polynomial
//! source `g(s) = Σ_j c_j s^j`, which is solved in closed form with the
//! φ-functions. The result keeps enough data to evaluate `u(t)` and `du/dt`
//! anywhere in the step.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::coefficients::{lagrange_window, LagrangeWindow, StabilizationConfig};
use crate::error::{Error, Result};
use crate::math::{exp, factorial, powf, powi};
use crate::quadrature::gauss_legendre;
use crate::spectral::{PeriodicGrid, SpectralField};

/// Highest φ index available (`φ_0 … φ_7`), enough for order-6 windows.
pub const PHI_MAX: usize = 7;

const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 26;
const UNDERFLOW: f64 = 700.0;

const INV_FACTORIAL: [f64; PHI_MAX + SERIES_TERMS + 1] = {
    let mut out = [1.0; PHI_MAX + SERIES_TERMS + 1];
    let mut i = 1;
    while i < out.len() {
        out[i] = out[i - 1] / i as f64;
        i += 1;
    }
    out
};

/// `φ_j(z)` by Taylor series; accurate for small `|z|`.
pub fn phi_series(j: usize, z: f64) -> f64 {
    assert!(j <= PHI_MAX, "phi index out of range");
    let mut acc = 0.0;
    for m in (0..SERIES_TERMS).rev() {
        acc = acc * z + INV_FACTORIAL[m + j];
    }
    acc
}

/// `φ_j(z)` by the recurrence `φ_{j+1} = (φ_j − 1/j!)/z` from `φ_0 = e^z`.
pub fn phi_direct(j: usize, z: f64) -> f64 {
    assert!(j <= PHI_MAX, "phi index out of range");
    let mut value = if z < -UNDERFLOW { 0.0 } else { exp(z) };
    for i in 0..j {
        value = (value - INV_FACTORIAL[i]) / z;
    }
    value
}

/// `φ_j(z)`, switching to the series for `|z| ≤ 0.5`.
pub fn phi(j: usize, z: f64) -> f64 {
    if z.abs() <= SERIES_RADIUS {
        phi_series(j, z)
    } else {
        phi_direct(j, z)
    }
}

/// Fills `out[i] = φ_i(z)` for `i < out.len()`.
pub fn phi_all(z: f64, out: &mut [f64]) {
    assert!(out.len() <= PHI_MAX + 1, "phi index out of range");
    if z.abs() <= SERIES_RADIUS {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = phi_series(j, z);
        }
    } else {
        let mut value = if z < -UNDERFLOW { 0.0 } else { exp(z) };
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = value;
            value = (value - INV_FACTORIAL[j]) / z;
        }
    }
}

/// Dupont–Douglas regularization `Aτ_ref^k L^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub a_stab: f64,
    pub order: usize,
    pub power: f64,
    /// The `τ` in `Aτ^k`: the largest step the run may take.
    pub tau_ref: f64,
}

impl Regularization {
    pub fn none(order: usize, power: f64) -> Self {
        Self { a_stab: 0.0, order, power, tau_ref: 0.0 }
    }

    pub fn from_config(cfg: &StabilizationConfig, tau_ref: f64) -> Self {
        Self { a_stab: cfg.a_stab, order: cfg.k, power: cfg.p_k, tau_ref }
    }

    pub fn strength(&self) -> f64 {
        self.a_stab * powi(self.tau_ref, self.order as i32)
    }

    /// `m = 1 + Aτ^k λ^p` for an eigenvalue `λ` of `L`.
    pub fn multiplier(&self, lam: f64) -> f64 {
        let s = self.strength();
        if s == 0.0 {
            1.0
        } else {
            1.0 + s * power_weight(lam, self.power)
        }
    }
}

/// `λ^p` with `0^p = 0` for `p > 0`.
pub fn power_weight(lam: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if lam == 0.0 {
        0.0
    } else if p == 1.0 {
        lam
    } else {
        powf(lam, p)
    }
}

/// Per-mode decay data of the regularized linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecay {
    pub lam_l: f64,
    pub multiplier: f64,
    pub mu: f64,
}

impl ModeDecay {
    pub fn new(lam_l: f64, epsilon: f64, reg: &Regularization) -> Self {
        let multiplier = reg.multiplier(lam_l);
        Self { lam_l, multiplier, mu: epsilon * lam_l / multiplier }
    }
}

/// The last `k` source evaluations `G^n, G^{n−1}, …` and the steps between them.
#[derive(Debug, Clone)]
pub struct SourceHistory {
    k: usize,
    sources: VecDeque<SpectralField>,
    steps: VecDeque<f64>,
}

impl SourceHistory {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "scheme order must be at least 1");
        Self { k, sources: VecDeque::with_capacity(k + 1), steps: VecDeque::with_capacity(k) }
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// Discards everything and starts over from `G^0`.
    pub fn reset(&mut self, source: SpectralField) {
        self.sources.clear();
        self.steps.clear();
        self.sources.push_front(source);
    }

    /// Records `G^{n+1}` after a step of size `tau`.
    pub fn advance(&mut self, source: SpectralField, tau: f64) {
        self.sources.push_front(source);
        self.steps.push_front(tau);
        self.sources.truncate(self.k);
        self.steps.truncate(self.k - 1);
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn is_ready(&self) -> bool {
        self.sources.len() >= self.k && self.steps.len() + 1 >= self.k
    }

    /// `G^{n−i}`.
    pub fn source(&self, i: usize) -> Option<&SpectralField> {
        self.sources.get(i)
    }

    /// `[τ_{n−1}, …, τ_{n−k+1}]`.
    pub fn steps(&self) -> Vec<f64> {
        self.steps.iter().copied().collect()
    }

    pub fn window(&self) -> Result<LagrangeWindow> {
        if !self.is_ready() {
            return Err(Error::History { needed: self.k, available: self.sources.len() });
        }
        let steps: Vec<f64> = self.steps.iter().take(self.k - 1).copied().collect();
        lagrange_window(self.k, &steps)
    }
}

/// Everything needed to evaluate one step's trajectory on `[t_n, t_n + τ]`.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    grid: Arc<PeriodicGrid>,
    k: usize,
    tau: f64,
    u_start: Vec<Complex64>,
    mu: Vec<f64>,
    multiplier: Vec<f64>,
    // Row-major [mode][j] source coefficients c_j.
    poly: Vec<Complex64>,
    // λ^p per mode, for the V^p seminorm.
    vp_weight: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub u_new: SpectralField,
    pub dense: DenseOutput,
}

fn mode_value(u0: Complex64, mu: f64, m: f64, c: &[Complex64], s: f64, phis: &mut [f64]) -> Complex64 {
    let k = c.len();
    phi_all(-mu * s, &mut phis[..k + 1]);
    let mut acc = u0 * phis[0];
    let mut sp = s;
    for (j, cj) in c.iter().enumerate() {
        acc += cj * (factorial(j) * sp * phis[j + 1] / m);
        sp *= s;
    }
    acc
}

fn mode_derivative(u: Complex64, mu: f64, m: f64, c: &[Complex64], s: f64) -> Complex64 {
    let g = c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, cj| acc * s + cj);
    -u * mu + g / m
}

impl DenseOutput {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn order(&self) -> usize {
        self.k
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if (0.0..=self.tau * (1.0 + 1e-14)).contains(&s) {
            Ok(())
        } else {
            Err(Error::Argument("dense output evaluated outside its step"))
        }
    }

    /// `u(t_n + s)`.
    pub fn value_at(&self, s: f64) -> Result<SpectralField> {
        self.check_s(s)?;
        let mut phis = [0.0; PHI_MAX + 1];
        let coeffs = (0..self.u_start.len())
            .map(|i| {
                let c = &self.poly[i * self.k..(i + 1) * self.k];
                mode_value(self.u_start[i], self.mu[i], self.multiplier[i], c, s, &mut phis)
            })
            .collect();
        SpectralField::from_coeffs(&self.grid, coeffs)
    }

    /// `du/dt (t_n + s)`.
    pub fn derivative_at(&self, s: f64) -> Result<SpectralField> {
        self.check_s(s)?;
        let mut phis = [0.0; PHI_MAX + 1];
        let coeffs = (0..self.u_start.len())
            .map(|i| {
                let c = &self.poly[i * self.k..(i + 1) * self.k];
                let u = mode_value(self.u_start[i], self.mu[i], self.multiplier[i], c, s, &mut phis);
                mode_derivative(u, self.mu[i], self.multiplier[i], c, s)
            })
            .collect();
        SpectralField::from_coeffs(&self.grid, coeffs)
    }
}

/// Advances `u_n` by `tau_n` with the order-`k` scheme defined by `history`.
///
/// `symbol` holds the eigenvalues of `L` per mode (`|κ|⁴` for `L = Δ²`).
pub fn etdms_step(
    u_n: &SpectralField,
    history: &SourceHistory,
    symbol: &[f64],
    epsilon: f64,
    reg: &Regularization,
    tau_n: f64,
) -> Result<StepResult> {
    let window = history.window()?;
    etdms_step_with_window(u_n, history, &window, symbol, epsilon, reg, tau_n)
}

/// As [`etdms_step`], with an explicitly supplied window.
pub fn etdms_step_with_window(
    u_n: &SpectralField,
    history: &SourceHistory,
    window: &LagrangeWindow,
    symbol: &[f64],
    epsilon: f64,
    reg: &Regularization,
    tau_n: f64,
) -> Result<StepResult> {
    let k = window.order();
    if !(tau_n > 0.0) || !tau_n.is_finite() {
        return Err(Error::Argument("step size must be positive"));
    }
    if history.len() < k {
        return Err(Error::History { needed: k, available: history.len() });
    }
    if k > PHI_MAX {
        return Err(Error::Unsupported("scheme order above 7"));
    }
    let grid = u_n.grid();
    if symbol.len() != grid.len() {
        return Err(Error::Argument("operator symbol does not match grid"));
    }
    let sources: Vec<&SpectralField> = (0..k).map(|i| history.source(i).expect("history length checked")).collect();
    for s in &sources {
        u_n.check_grid(s)?;
        if !s.is_finite() {
            return Err(Error::NonFinite("scheme source term"));
        }
    }

    let modes = grid.len();
    let mut poly = vec![Complex64::new(0.0, 0.0); modes * k];
    for (i, src) in sources.iter().enumerate() {
        let basis = window.basis(i);
        for (mode, &g) in src.coeffs().iter().enumerate() {
            let row = &mut poly[mode * k..(mode + 1) * k];
            for (slot, &xi) in row.iter_mut().zip(basis) {
                *slot += g * xi;
            }
        }
    }

    let mut mu = Vec::with_capacity(modes);
    let mut multiplier = Vec::with_capacity(modes);
    let mut vp_weight = Vec::with_capacity(modes);
    let mut u_new = Vec::with_capacity(modes);
    let mut phis = [0.0; PHI_MAX + 1];
    for (mode, (&u0, &lam)) in u_n.coeffs().iter().zip(symbol).enumerate() {
        let decay = ModeDecay::new(lam, epsilon, reg);
        let c = &poly[mode * k..(mode + 1) * k];
        u_new.push(mode_value(u0, decay.mu, decay.multiplier, c, tau_n, &mut phis));
        mu.push(decay.mu);
        multiplier.push(decay.multiplier);
        vp_weight.push(power_weight(lam, reg.power));
    }
    let u_new = SpectralField::from_coeffs(grid, u_new)?;
    if !u_new.is_finite() {
        return Err(Error::NonFinite("scheme update"));
    }
    Ok(StepResult {
        u_new,
        dense: DenseOutput {
            grid: Arc::clone(grid),
            k,
            tau: tau_n,
            u_start: u_n.coeffs().to_vec(),
            mu,
            multiplier,
            poly,
            vp_weight,
        },
    })
}

/// First-order exponential step with a frozen source and no regularization.
pub fn etd1_step(u_n: &SpectralField, f_n: &SpectralField, tau: f64, epsilon: f64, symbol: &[f64]) -> Result<SpectralField> {
    u_n.check_grid(f_n)?;
    if symbol.len() != u_n.grid().len() {
        return Err(Error::Argument("operator symbol does not match grid"));
    }
    if !(tau > 0.0) {
        return Err(Error::Argument("step size must be positive"));
    }
    let coeffs = u_n
        .coeffs()
        .iter()
        .zip(f_n.coeffs())
        .zip(symbol)
        .map(|((&u, &f), &lam)| {
            let z = -epsilon * lam * tau;
            let decay = if z < -UNDERFLOW { 0.0 } else { exp(z) };
            u * decay + f * (tau * phi(1, z))
        })
        .collect();
    SpectralField::from_coeffs(u_n.grid(), coeffs)
}

/// `(∫‖du/dt‖²_H dt, ∫‖du/dt‖²_{V^p} dt)` over the step.
///
/// Modes with `μτ ≤ 1` are integrated with `quad_order`-point Gauss–Legendre
/// on the closed-form derivative. Stiffer modes are split into a decaying
/// exponential plus the polynomial particular solution; the exponential
/// moments are integrated analytically and the polynomial part by the same
/// Gauss rule, which is exact for it.
pub fn interval_seminorms(dense: &DenseOutput, quad_order: usize) -> Result<(f64, f64)> {
    if quad_order < 2 {
        return Err(Error::Argument("quadrature order must be at least 2"));
    }
    let (gx, gw) = gauss_legendre(quad_order)?;
    let tau = dense.tau;
    let k = dense.k;
    let mut phis = [0.0; PHI_MAX + 1];
    let mut h_sum = 0.0;
    let mut p_sum = 0.0;
    let mut particular = [Complex64::new(0.0, 0.0); PHI_MAX];
    let mut scratch = [Complex64::new(0.0, 0.0); PHI_MAX];
    for mode in 0..dense.u_start.len() {
        let u0 = dense.u_start[mode];
        let mu = dense.mu[mode];
        let m = dense.multiplier[mode];
        let c = &dense.poly[mode * k..(mode + 1) * k];
        let x = mu * tau;
        let integral = if x <= 1.0 {
            let mut acc = 0.0;
            for (xq, wq) in gx.iter().zip(&gw) {
                let s = 0.5 * tau * (xq + 1.0);
                let u = mode_value(u0, mu, m, c, s, &mut phis);
                acc += wq * mode_derivative(u, mu, m, c, s).norm_sqr();
            }
            0.5 * tau * acc
        } else {
            // P' + μP = g/m  ⇒  P = Σ_i (−1)^i (g/m)^{(i)} / μ^{i+1}.
            let p = &mut particular[..k];
            p.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            let d = &mut scratch[..k];
            for (dj, cj) in d.iter_mut().zip(c) {
                *dj = cj / m;
            }
            let mut sign_scale = 1.0 / mu;
            for order in 0..k {
                for j in 0..k - order {
                    p[j] += d[j] * sign_scale;
                }
                for j in 0..k - order - 1 {
                    d[j] = d[j + 1] * (j + 1) as f64;
                }
                sign_scale *= -1.0 / mu;
            }
            let a = u0 - p[0];
            let decay = exp(-x.min(UNDERFLOW));
            let decay2 = exp(-(2.0 * x).min(UNDERFLOW));
            // ∫ μ²|a|² e^{−2μs}
            let mut total = 0.5 * mu * a.norm_sqr() * (1.0 - decay2);
            // −2μ Re(conj(a) Σ_j (j+1) p_{j+1} ∫ s^j e^{−μs})
            let mut cross = 0.0;
            for j in 0..k - 1 {
                let dp = p[j + 1] * (j + 1) as f64;
                let mut partial = 0.0;
                let mut term = 1.0;
                for i in 0..=j {
                    if i > 0 {
                        term *= x / i as f64;
                    }
                    partial += term;
                }
                let moment = factorial(j) / powi(mu, j as i32 + 1) * (1.0 - decay * partial);
                cross += (a.conj() * dp).re * moment;
            }
            total -= 2.0 * mu * cross;
            // ∫ |P'|²
            let mut poly_part = 0.0;
            for (xq, wq) in gx.iter().zip(&gw) {
                let s = 0.5 * tau * (xq + 1.0);
                let mut v = Complex64::new(0.0, 0.0);
                for j in (1..k).rev() {
                    v = v * s + p[j] * j as f64;
                }
                poly_part += wq * v.norm_sqr();
            }
            total + 0.5 * tau * poly_part
        };
        h_sum += integral;
        p_sum += integral * dense.vp_weight[mode];
    }
    let grid = &dense.grid;
    let norm = grid.area() / (grid.len() * grid.len()) as f64;
    Ok((h_sum * norm, p_sum * norm))
}
