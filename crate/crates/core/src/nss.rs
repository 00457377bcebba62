//! The no-slope-selection thin-film model
//!
//! ```text
//! u_t = −εΔ²u − ∇·(∇u / (1 + |∇u|²)),   E(u) = ∫ ε/2 |Δu|² − ½ ln(1 + |∇u|²) dx
//! ```
//!
//! with `L = Δ²`, Lipschitz indices `β = γ = ½` and `C_L = 1`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{cos, log1p, sin, sqrt};
use crate::model::{GradientFlow, Lipschitz};
use crate::random::UniformStream;
use crate::spectral::{PeriodicGrid, SpectralField};

#[derive(Debug, Clone)]
pub struct NssParams {
    pub epsilon: f64,
    pub grid: Arc<PeriodicGrid>,
}

#[derive(Debug, Clone)]
pub struct NssModel {
    params: NssParams,
    symbol: Vec<f64>,
}

/// Per-step observables of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    /// Undefined until the scheme has `k − 1` completed multistep intervals.
    pub modified_energy: Option<f64>,
    pub height: f64,
    pub slope: f64,
    pub mass: f64,
}

impl NssModel {
    pub fn new(params: NssParams) -> Result<Self> {
        if !(params.epsilon > 0.0) || !params.epsilon.is_finite() {
            return Err(Error::Argument("epsilon must be positive"));
        }
        let symbol = params.grid.biharmonic_symbol();
        Ok(Self { params, symbol })
    }

    pub fn with_grid(grid: &Arc<PeriodicGrid>, epsilon: f64) -> Result<Self> {
        Self::new(NssParams { epsilon, grid: Arc::clone(grid) })
    }

    pub fn params(&self) -> &NssParams {
        &self.params
    }

    /// Flux `∇u / (1 + |∇u|²)` in physical space, plus `ln(1 + |∇u|²)` if asked.
    fn flux(&self, u: &SpectralField, want_log: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (gx, gy) = u.gradient();
        let mut ux = gx.to_physical();
        let mut uy = gy.to_physical();
        let mut logs = Vec::new();
        if want_log {
            logs.reserve(ux.len());
        }
        for (a, b) in ux.iter_mut().zip(uy.iter_mut()) {
            let g2 = *a * *a + *b * *b;
            let denom = 1.0 + g2;
            debug_assert!(denom >= 1.0);
            if want_log {
                logs.push(log1p(g2));
            }
            *a /= denom;
            *b /= denom;
        }
        (ux, uy, logs)
    }

    /// `h = sqrt(‖u − ū‖²/|Ω|)`, `m = sqrt(‖∇u‖²/|Ω|)`.
    pub fn roughness_and_slope(&self, u: &SpectralField) -> (f64, f64) {
        roughness_and_slope(u)
    }

    pub fn diagnostics(&self, t: f64, u: &SpectralField, modified_energy: Option<f64>) -> Diagnostics {
        let (height, slope) = roughness_and_slope(u);
        Diagnostics { t, energy: self.energy(u), modified_energy, height, slope, mass: u.mean() }
    }

    /// `cos(t) sin(x) cos(y)`.
    pub fn manufactured_solution(&self, t: f64) -> SpectralField {
        manufactured_field(&self.params.grid, cos(t))
    }

    /// `f = u_t + εΔ²u − F(u)` for the manufactured solution.
    pub fn manufactured_forcing(&self, t: f64) -> SpectralField {
        let base = manufactured_field(&self.params.grid, 1.0);
        let c = cos(t);
        let mut u = base.clone();
        u.scale(c);
        let nonlinear = self.nonlinear_term(&u);
        let eps = self.params.epsilon;
        let coeffs = base
            .coeffs()
            .iter()
            .zip(&self.symbol)
            .zip(nonlinear.coeffs())
            .map(|((&b, &lam), &f)| b * (-sin(t) + eps * lam * c) - f)
            .collect();
        SpectralField::from_coeffs(&self.params.grid, coeffs).expect("same grid")
    }

    /// `‖F(u) − F(v)‖_{V^{−1/2}} / ‖u − v‖_{V^{1/2}}`, with `V^α` weights `|κ|^{4α}` and the mean excluded.
    pub fn lipschitz_ratio(&self, u: &SpectralField, v: &SpectralField) -> Result<f64> {
        u.check_grid(v)?;
        let df = self.nonlinear_term(u).sub(&self.nonlinear_term(v))?;
        let du = u.sub(v)?;
        let k2 = self.params.grid.wavenumber_sq();
        let mut num = 0.0;
        let mut den = 0.0;
        for ((f, d), &w) in df.coeffs().iter().zip(du.coeffs()).zip(&k2) {
            if w > 0.0 {
                num += f.norm_sqr() / w;
                den += d.norm_sqr() * w;
            }
        }
        if den == 0.0 {
            return Err(Error::Argument("fields must differ in a nonconstant mode"));
        }
        Ok(sqrt(num / den))
    }
}

impl GradientFlow for NssModel {
    fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.params.grid
    }

    fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { beta: 0.5, gamma: 0.5, c_lip: 1.0 }
    }

    /// `−∇·(∇u/(1+|∇u|²))`, dealiased, with the mean mode set to zero.
    fn nonlinear_term(&self, u: &SpectralField) -> SpectralField {
        let grid = &self.params.grid;
        let (qx, qy, _) = self.flux(u, false);
        let qx = SpectralField::to_spectral(grid, &qx).expect("same grid");
        let qy = SpectralField::to_spectral(grid, &qy).expect("same grid");
        let mut out = SpectralField::divergence(&qx, &qy).expect("same grid");
        out.scale(-1.0);
        out.dealias_in_place();
        out.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// `(−½ ln(1 + |∇u|²), 1) + ε/2 ‖Δu‖²` on the grid.
    fn energy(&self, u: &SpectralField) -> f64 {
        let grid = &self.params.grid;
        let (_, _, logs) = self.flux(u, true);
        let h2 = grid.spacing() * grid.spacing();
        let log_term: f64 = logs.iter().sum::<f64>() * h2;
        let bending = u.weighted_norm_sq(Some(&self.symbol));
        0.5 * self.params.epsilon * bending - 0.5 * log_term
    }
}

/// `h = sqrt(‖u − ū‖²/|Ω|)`, `m = sqrt(‖∇u‖²/|Ω|)`.
pub fn roughness_and_slope(u: &SpectralField) -> (f64, f64) {
    let grid = u.grid();
    let area = grid.area();
    let mut dev = u.clone();
    dev.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    let (gx, gy) = u.gradient();
    let h = sqrt(dev.norm_sq() / area);
    let m = sqrt((gx.norm_sq() + gy.norm_sq()) / area);
    (h, m)
}

fn manufactured_field(grid: &Arc<PeriodicGrid>, amplitude: f64) -> SpectralField {
    let values = grid.sample(|x, y| amplitude * sin(x) * cos(y));
    SpectralField::to_spectral(grid, &values).expect("sampled on grid")
}

/// `base(x, y) + amplitude·(2·rand − 1)` on the grid, then dealiased.
///
/// `with_base` selects `sin(x)cos(y)` or zero as the smooth part. Dealiasing
/// keeps the initial state inside the band that the scheme evolves.
pub fn random_initial(grid: &Arc<PeriodicGrid>, amplitude: f64, seed: u64, with_base: bool) -> SpectralField {
    let mut rng = UniformStream::new(seed);
    let values = grid.sample(|x, y| {
        let base = if with_base { sin(x) * cos(y) } else { 0.0 };
        base + amplitude * rng.symmetric()
    });
    let mut field = SpectralField::to_spectral(grid, &values).expect("sampled on grid");
    field.dealias_in_place();
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn model(n: usize, length: f64, eps: f64) -> NssModel {
        NssModel::with_grid(&PeriodicGrid::new(n, length).unwrap(), eps).unwrap()
    }

    fn field(m: &NssModel, f: impl FnMut(f64, f64) -> f64) -> SpectralField {
        let g = m.grid();
        SpectralField::to_spectral(g, &g.sample(f)).unwrap()
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        assert!(NssModel::with_grid(&g, 0.0).is_err());
        assert!(NssModel::with_grid(&g, f64::NAN).is_err());
    }

    #[test]
    fn nonlinear_term_zero_and_linearization() {
        let m = model(32, 2.0 * PI, 0.1);
        let z = m.nonlinear_term(&SpectralField::zeros(m.grid()));
        assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));

        let delta = 1e-6;
        let u = field(&m, |x, _| delta * sin(x));
        let f = m.nonlinear_term(&u);
        let err = f.sub(&u).unwrap().norm_sq().sqrt() / u.norm_sq().sqrt();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn nonlinear_term_resolution_independent() {
        let a = model(64, 2.0 * PI, 0.1);
        let b = model(128, 2.0 * PI, 0.1);
        let fa = a.nonlinear_term(&field(&a, |x, y| sin(x) * cos(y)));
        let fb = b.nonlinear_term(&field(&b, |x, y| sin(x) * cos(y)));
        let band = 64 / 3;
        let mut worst: f64 = 0.0;
        for jy in -band..=band {
            for jx in -band..=band {
                let ca = fa.coeff(jx, jy) / (64.0 * 64.0);
                let cb = fb.coeff(jx, jy) / (128.0 * 128.0);
                worst = worst.max((ca - cb).norm());
            }
        }
        assert!(worst < 1e-11, "{worst}");
        assert!(fa.mean().abs() == 0.0);
    }

    #[test]
    fn energy_examples() {
        let m = model(64, 2.0 * PI, 0.3);
        assert_eq!(m.energy(&SpectralField::zeros(m.grid())), 0.0);

        // Composite quadrature at N=1024 of ε/2 sin² − ½ ln(1 + cos²).
        let eps = 0.3;
        let n = 1024;
        let h = 2.0 * PI / n as f64;
        let mut line = 0.0;
        for i in 0..n {
            let x = i as f64 * h;
            line += 0.5 * eps * sin(x) * sin(x) - 0.5 * log1p(cos(x) * cos(x));
        }
        let reference = line * h * 2.0 * PI;
        let e = m.energy(&field(&m, |x, _| sin(x)));
        assert!((e - reference).abs() < 1e-11 * reference.abs(), "{e} vs {reference}");

        let u = field(&m, |x, y| sin(x) * cos(2.0 * y) + 0.3 * cos(x + y));
        let shifted = u.translate(32, 32);
        assert!((m.energy(&u) - m.energy(&shifted)).abs() < 1e-12 * m.energy(&u).abs().max(1.0));
    }

    #[test]
    fn roughness_examples() {
        let m = model(32, 2.0 * PI, 0.1);
        let (h, s) = roughness_and_slope(&field(&m, |_, _| 2.5));
        assert!(h.abs() < 1e-15 && s.abs() < 1e-15);
        let (h, s) = roughness_and_slope(&field(&m, |x, _| sin(x)));
        assert!((h - 0.5f64.sqrt()).abs() < 1e-13 && (s - 0.5f64.sqrt()).abs() < 1e-13);
        let (h, s) = roughness_and_slope(&field(&m, |x, y| sin(x) + cos(y)));
        assert!((h - 1.0).abs() < 1e-13 && (s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn forcing_examples() {
        let m = model(64, 4.0 * PI, 0.01);
        let f = m.manufactured_forcing(PI / 2.0);
        let expected = field(&m, |x, y| -sin(x) * cos(y));
        assert!(f.sub(&expected).unwrap().norm_sq().sqrt() < 1e-12);
        for t in [0.0, 0.3, 1.0, 2.7] {
            let f = m.manufactured_forcing(t);
            assert!(f.mean().abs() < 1e-13);
            assert!(f.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn forcing_residual() {
        let m = model(64, 2.0 * PI, 0.05);
        let t = 0.7;
        let dt = 1e-4;
        let mut ut = m.manufactured_solution(t + dt);
        ut.axpy(-1.0, &m.manufactured_solution(t - dt)).unwrap();
        ut.scale(0.5 / dt);
        let u = m.manufactured_solution(t);
        let mut residual = ut;
        let mut lin = u.apply_biharmonic();
        lin.scale(m.epsilon());
        residual.axpy(1.0, &lin).unwrap();
        residual.axpy(-1.0, &m.nonlinear_term(&u)).unwrap();
        residual.axpy(-1.0, &m.manufactured_forcing(t)).unwrap();
        // Central differences leave an O(dt²) truncation error.
        let rel = residual.norm_sq().sqrt() / u.norm_sq().sqrt().max(1.0);
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn lipschitz_spot_check() {
        let m = model(32, 2.0 * PI, 0.1);
        for seed in 0..8 {
            let mut rng = UniformStream::new(seed);
            let a: [f64; 4] = core::array::from_fn(|_| rng.symmetric());
            let u = field(&m, |x, y| a[0] * sin(x) * cos(2.0 * y) + a[1] * cos(3.0 * x - y));
            let v = field(&m, |x, y| a[2] * sin(2.0 * x + y) + a[3] * cos(x) * sin(y));
            let r = m.lipschitz_ratio(&u, &v).unwrap();
            assert!(r <= 1.0 + 1e-6, "seed {seed}: {r}");
        }
    }

    #[test]
    fn random_initial_is_band_limited_and_seeded() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let a = random_initial(&g, 0.5, 9, true);
        let b = random_initial(&g, 0.5, 9, true);
        assert_eq!(a.coeffs(), b.coeffs());
        assert_eq!(a.dealias().coeffs(), a.coeffs());
        assert!(a.hermitian_defect() < 1e-12);
    }
}
