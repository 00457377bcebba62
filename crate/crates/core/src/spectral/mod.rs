//! Doubly periodic square grids, 2-D Fourier transforms and the diagonal
//! spectral operators built on them.
//!
//! Layout conventions used throughout the crate:
//!
//! * physical and spectral arrays are `n × n`, row-major, `array[row * n + col]`,
//!   where the column indexes `x` and the row indexes `y`;
//! * the forward transform is unnormalized, the inverse carries `1/n²`;
//! * the signed mode index of position `i` is `i` for `i ≤ n/2` and `i − n`
//!   otherwise, so the Nyquist entry carries `+n/2`.

mod fft;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

pub use fft::Radix2;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A square periodic domain `[0, L)²` sampled on `n × n` points.
#[derive(Debug, Clone)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    signed: Vec<i64>,
    wavenumbers: Vec<f64>,
    // Odd-order derivatives drop the Nyquist wavenumber so real fields stay real.
    derivative_wavenumbers: Vec<f64>,
    plan: Radix2,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Argument("grid size must be a power of two and at least 8"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Argument("domain length must be positive"));
        }
        let signed: Vec<i64> = (0..n)
            .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let scale = 2.0 * PI / length;
        let wavenumbers: Vec<f64> = signed.iter().map(|&j| scale * j as f64).collect();
        let mut derivative_wavenumbers = wavenumbers.clone();
        derivative_wavenumbers[n / 2] = 0.0;
        Ok(Arc::new(Self {
            n,
            length,
            signed,
            wavenumbers,
            derivative_wavenumbers,
            plan: Radix2::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `L/n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Domain area `|Ω| = L²`.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// One-dimensional wavenumbers `κ_j = 2π j / L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Signed integer mode indices in FFT order.
    pub fn signed_indices(&self) -> &[i64] {
        &self.signed
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for row in 0..self.n {
            let y = self.coordinate(row);
            for col in 0..self.n {
                out.push(f(self.coordinate(col), y));
            }
        }
        out
    }

    /// `|κ|²` for each mode in spectral layout.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for row in 0..self.n {
            let ky = self.wavenumbers[row];
            for col in 0..self.n {
                let kx = self.wavenumbers[col];
                out.push(kx * kx + ky * ky);
            }
        }
        out
    }

    /// Eigenvalues `|κ|⁴` of the biharmonic operator `Δ²`.
    pub fn biharmonic_symbol(&self) -> Vec<f64> {
        self.wavenumber_sq().into_iter().map(|k2| k2 * k2).collect()
    }

    /// True when mode `(row, col)` lies inside the 2/3-rule band.
    pub fn retained(&self, row: usize, col: usize) -> bool {
        let n = self.n as i64;
        3 * self.signed[row].abs() <= n && 3 * self.signed[col].abs() <= n
    }

    fn same(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }

    fn forward(&self, data: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.plan.process_2d(data, false, &mut scratch);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.plan.process_2d(data, true, &mut scratch);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Fourier coefficients of a real field on a [`PeriodicGrid`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<PeriodicGrid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self { grid: Arc::clone(grid), coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: &Arc<PeriodicGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Argument("coefficient array does not match grid"));
        }
        Ok(Self { grid: Arc::clone(grid), coeffs })
    }

    /// Forward transform of real grid values.
    pub fn to_spectral(grid: &Arc<PeriodicGrid>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument("value array does not match grid"));
        }
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward(&mut coeffs);
        Ok(Self { grid: Arc::clone(grid), coeffs })
    }

    /// Inverse transform; the imaginary round-off is discarded.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        self.grid.inverse(&mut data);
        data.into_iter().map(|v| v.re).collect()
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed mode `(jx, jy)`.
    pub fn coeff(&self, jx: i64, jy: i64) -> Complex64 {
        let n = self.grid.n as i64;
        let col = jx.rem_euclid(n) as usize;
        let row = jy.rem_euclid(n) as usize;
        self.coeffs[row * self.grid.n + col]
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids"))
        }
    }

    fn map_modes(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let n = self.grid.n;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for row in 0..n {
            for col in 0..n {
                coeffs.push(f(row, col, self.coeffs[row * n + col]));
            }
        }
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    /// Multiplies every coefficient by `|κ|⁴`.
    pub fn apply_biharmonic(&self) -> Self {
        let k = &self.grid.wavenumbers;
        self.map_modes(|row, col, c| {
            let k2 = k[col] * k[col] + k[row] * k[row];
            c * (k2 * k2)
        })
    }

    /// Multiplies every coefficient by `−|κ|²`.
    pub fn laplacian(&self) -> Self {
        let k = &self.grid.wavenumbers;
        self.map_modes(|row, col, c| c * -(k[col] * k[col] + k[row] * k[row]))
    }

    /// `(∂x f, ∂y f)`.
    pub fn gradient(&self) -> (Self, Self) {
        let k = &self.grid.derivative_wavenumbers;
        let dx = self.map_modes(|_, col, c| c * Complex64::new(0.0, k[col]));
        let dy = self.map_modes(|row, _, c| c * Complex64::new(0.0, k[row]));
        (dx, dy)
    }

    /// `∂x fx + ∂y fy`.
    pub fn divergence(fx: &Self, fy: &Self) -> Result<Self> {
        fx.check_grid(fy)?;
        let k = &fx.grid.derivative_wavenumbers;
        let n = fx.grid.n;
        let mut coeffs = Vec::with_capacity(fx.coeffs.len());
        for row in 0..n {
            for col in 0..n {
                let i = row * n + col;
                coeffs.push(Complex64::new(0.0, k[col]) * fx.coeffs[i] + Complex64::new(0.0, k[row]) * fy.coeffs[i]);
            }
        }
        Ok(Self { grid: Arc::clone(&fx.grid), coeffs })
    }

    /// 2/3-rule truncation: zero every mode with `max(|jx|, |jy|) > n/3`.
    pub fn dealias(&self) -> Self {
        let grid = Arc::clone(&self.grid);
        self.map_modes(|row, col, c| if grid.retained(row, col) { c } else { ZERO })
    }

    pub fn dealias_in_place(&mut self) {
        let n = self.grid.n;
        for row in 0..n {
            for col in 0..n {
                if !self.grid.retained(row, col) {
                    self.coeffs[row * n + col] = ZERO;
                }
            }
        }
    }

    /// Translation by whole grid cells: `f(x − sx·h, y − sy·h)`.
    pub fn translate(&self, sx: i64, sy: i64) -> Self {
        let n = self.grid.n as i64;
        let signed = &self.grid.signed;
        self.map_modes(|row, col, c| {
            let phase = -2.0 * PI * ((signed[col] * sx + signed[row] * sy).rem_euclid(n)) as f64 / n as f64;
            let (s, co) = crate::math::sincos(phase);
            c * Complex64::new(co, s)
        })
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += o * a;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Spatial mean of the physical field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.len() as f64
    }

    /// Weighted discrete `L²(Ω)` norm squared, `Σ_κ w_κ |f̂_κ|² · L²/n⁴`
    /// (equal to `h² Σ_x f(x)²` when `w ≡ 1`).
    pub fn weighted_norm_sq(&self, weights: Option<&[f64]>) -> f64 {
        let norm = self.grid.area() / (self.grid.len() * self.grid.len()) as f64;
        let sum: f64 = match weights {
            Some(w) => self.coeffs.iter().zip(w).map(|(c, w)| w * c.norm_sqr()).sum(),
            None => self.coeffs.iter().map(|c| c.norm_sqr()).sum(),
        };
        sum * norm
    }

    /// `‖f‖²_{L²(Ω)}`.
    pub fn norm_sq(&self) -> f64 {
        self.weighted_norm_sq(None)
    }

    /// Root-mean-square of the physical values.
    pub fn rms(&self) -> f64 {
        crate::math::sqrt(self.norm_sq() / self.grid.area())
    }

    /// Largest violation of `f̂(−κ) = conj f̂(κ)`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for row in 0..n {
            for col in 0..n {
                let a = self.coeffs[row * n + col];
                let b = self.coeffs[((n - row) % n) * n + (n - col) % n];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
