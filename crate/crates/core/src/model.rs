//! Abstract gradient flow `du/dt + εLu = F(u)` with `L` diagonal in Fourier space.

use alloc::sync::Arc;

use crate::coefficients::{stabilization, StabilizationConfig};
use crate::error::{Error, Result};
use crate::spectral::{PeriodicGrid, SpectralField};

/// Indices and constant of `‖F(u) − F(v)‖_{V^{−β}} ≤ C_L ‖u − v‖_{V^γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub beta: f64,
    pub gamma: f64,
    pub c_lip: f64,
}

pub trait GradientFlow {
    fn grid(&self) -> &Arc<PeriodicGrid>;

    fn epsilon(&self) -> f64;

    /// Eigenvalues of `L` in spectral layout.
    fn symbol(&self) -> &[f64];

    fn lipschitz(&self) -> Lipschitz;

    fn nonlinear_term(&self, u: &SpectralField) -> SpectralField;

    fn energy(&self, u: &SpectralField) -> f64;

    /// Constant chain for an order-`k` scheme with local ratio bound `r_c`.
    fn stabilization(&self, k: usize, r_c: f64) -> Result<StabilizationConfig> {
        let l = self.lipschitz();
        stabilization(k, l.beta, l.gamma, l.c_lip, r_c)
    }
}

/// `(∫‖du/dt‖²_H, ∫‖du/dt‖²_{V^p})` over one step interval.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntervalSeminorms {
    pub h: f64,
    pub vp: f64,
}

/// `Ẽ = E + C_L C_3 Σ_j C̄_j S_H(n−j) + C_L C_4 Σ_j C̄_j τ^k S_P(n−j)`, `j = 1..k−1`.
///
/// `recent` lists the seminorms of the preceding intervals, most recent first;
/// `tau` is the same reference step that enters `Aτ^k`.
pub fn modified_energy(energy: f64, recent: &[IntervalSeminorms], cfg: &StabilizationConfig, tau: f64) -> Result<f64> {
    let k = cfg.k;
    if recent.len() + 1 < k {
        return Err(Error::History { needed: k - 1, available: recent.len() });
    }
    let tau_k = crate::math::powi(tau, k as i32);
    let mut extra_h = 0.0;
    let mut extra_p = 0.0;
    for j in 1..k {
        let s = recent[j - 1];
        extra_h += cfg.c_bar[j] * s.h;
        extra_p += cfg.c_bar[j] * tau_k * s.vp;
    }
    Ok(energy + cfg.c_lip * cfg.c3 * extra_h + cfg.c_lip * cfg.c4 * extra_p)
}
