//! Brute-force references for verification.
//!
//! Nothing here uses the φ-function machinery of [`crate::etd`]: the mode ODE
//! of the scheme is integrated with an adaptive Dormand–Prince 5(4) method,
//! and the Lagrange basis is obtained from a dense Vandermonde solve.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{powf, powi, sqrt};
use crate::model::GradientFlow;
use crate::spectral::SpectralField;

/// `y' = rhs(t, y)` on `[t0, t1]`.
pub struct OdeProblem<'a> {
    pub rhs: &'a dyn Fn(f64, &[f64], &mut [f64]),
    pub y0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub y: Vec<f64>,
    /// Max-norm difference to a rerun at tolerances divided by 32.
    pub self_check: f64,
    pub steps: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate(p: &OdeProblem<'_>, rtol: f64, atol: f64) -> Result<(Vec<f64>, usize, usize)> {
    let dim = p.y0.len();
    let span = p.t1 - p.t0;
    if !(span >= 0.0) {
        return Err(Error::Argument("reference interval must be nonnegative"));
    }
    let mut y = p.y0.clone();
    if span == 0.0 {
        return Ok((y, 0, 0));
    }
    let mut k = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut t = p.t0;
    let mut h = span * 1e-3;
    let (mut steps, mut rejected) = (0, 0);
    (p.rhs)(t, &y, &mut k[0]);
    while t < p.t1 {
        let last = t + h >= p.t1;
        if last {
            h = p.t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            (p.rhs)(t + C[s] * h, &stage, &mut k[s]);
        }
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut hi = y[i];
            let mut lo = y[i];
            for s in 0..7 {
                hi += h * B5[s] * k[s][i];
                lo += h * B4[s] * k[s][i];
            }
            y5[i] = hi;
            let scale = atol + rtol * y[i].abs().max(hi.abs());
            let r = (hi - lo) / scale;
            err += r * r;
        }
        let err = sqrt(err / dim.max(1) as f64);
        if !err.is_finite() {
            return Err(Error::NonFinite("reference integrator"));
        }
        if err <= 1.0 {
            t = if last { p.t1 } else { t + h };
            core::mem::swap(&mut y, &mut y5);
            // FSAL: the last stage is f(t + h, y5).
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            steps += 1;
        } else {
            rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * powf(err, -0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * span.max(t.abs()) {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    Ok((y, steps, rejected))
}

/// Solves `problem`, then again at tighter tolerances, and reports the difference.
pub fn solve_reference(problem: &OdeProblem<'_>) -> Result<ReferenceSolution> {
    if !(problem.rtol > 0.0 && problem.atol > 0.0) {
        return Err(Error::Argument("tolerances must be positive"));
    }
    let (y, steps, rejected) = integrate(problem, problem.rtol, problem.atol)?;
    let (fine, _, _) = integrate(problem, problem.rtol / 32.0, problem.atol / 32.0)?;
    let self_check = y.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ReferenceSolution { y: fine, self_check, steps, rejected })
}

/// Lagrange basis through `nodes` by solving `V ξ_i = e_i` with partial pivoting.
///
/// Returns `xi[i][j]` with `ℓ_i(s) = Σ_j xi[i][j] s^j`.
pub fn vandermonde_lagrange(nodes: &[f64]) -> Result<Vec<Vec<f64>>> {
    let k = nodes.len();
    if k == 0 {
        return Err(Error::Argument("need at least one node"));
    }
    for i in 0..k {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::Argument("interpolation nodes must be distinct"));
            }
        }
    }
    // Augmented system [V | I]; row m is (1, s_m, s_m², …).
    let mut a = vec![vec![0.0; 2 * k]; k];
    for (m, row) in a.iter_mut().enumerate() {
        for j in 0..k {
            row[j] = powi(nodes[m], j as i32);
        }
        row[k + m] = 1.0;
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty range");
        if a[pivot][col] == 0.0 {
            return Err(Error::Argument("singular Vandermonde system"));
        }
        a.swap(col, pivot);
        let inv = 1.0 / a[col][col];
        for v in a[col].iter_mut() {
            *v *= inv;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * k {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    // Columns of V^{-1} hold the basis coefficients: xi[i][j] = (V^{-1})[j][i].
    Ok((0..k).map(|i| (0..k).map(|j| a[j][k + i]).collect()).collect())
}

/// Nodes `0, −τ_{n−1}, −τ_{n−1} − τ_{n−2}, …`.
pub fn window_nodes(steps: &[f64]) -> Vec<f64> {
    let mut nodes = vec![0.0];
    let mut acc = 0.0;
    for s in steps {
        acc -= s;
        nodes.push(acc);
    }
    nodes
}

/// Parameters of one regularized multistep step, independent of [`crate::etd`].
#[derive(Debug, Clone, Copy)]
pub struct ModeOdeSpec<'a> {
    pub symbol: &'a [f64],
    pub epsilon: f64,
    pub a_stab: f64,
    pub tau_ref: f64,
    pub order: usize,
    pub power: f64,
}

/// Integrates `m u' = −ελ u + Σ_i ℓ_i(s) G_i` per mode across `[0, tau]`.
///
/// `sources[i]` is `G^{n−i}`, `steps` the `k − 1` preceding steps.
pub fn mode_ode_reference(
    u_n: &SpectralField,
    sources: &[&SpectralField],
    steps: &[f64],
    spec: &ModeOdeSpec<'_>,
    tau: f64,
    rtol: f64,
) -> Result<(SpectralField, f64)> {
    let k = sources.len();
    if steps.len() + 1 != k {
        return Err(Error::Argument("need k sources and k - 1 steps"));
    }
    let xi = vandermonde_lagrange(&window_nodes(steps))?;
    let modes = u_n.coeffs().len();
    let strength = spec.a_stab * powi(spec.tau_ref, spec.order as i32);
    let mult: Vec<f64> = spec
        .symbol
        .iter()
        .map(|&lam| if lam == 0.0 || strength == 0.0 { 1.0 } else { 1.0 + strength * powf(lam, spec.power) })
        .collect();
    // Polynomial source coefficients per mode, re and im.
    let mut poly = vec![Complex64::new(0.0, 0.0); modes * k];
    for (i, src) in sources.iter().enumerate() {
        for (mode, g) in src.coeffs().iter().enumerate() {
            for j in 0..k {
                poly[mode * k + j] += g * xi[i][j];
            }
        }
    }
    let eps = spec.epsilon;
    let symbol = spec.symbol;
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        for mode in 0..modes {
            let mut g = Complex64::new(0.0, 0.0);
            for j in (0..k).rev() {
                g = g * s + poly[mode * k + j];
            }
            let u = Complex64::new(y[2 * mode], y[2 * mode + 1]);
            let d = (g - u * (eps * symbol[mode])) / mult[mode];
            dy[2 * mode] = d.re;
            dy[2 * mode + 1] = d.im;
        }
    };
    let y0: Vec<f64> = u_n.coeffs().iter().flat_map(|c| [c.re, c.im]).collect();
    let scale = y0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let problem = OdeProblem { rhs: &rhs, y0, t0: 0.0, t1: tau, rtol, atol: rtol * scale };
    let sol = solve_reference(&problem)?;
    let coeffs = sol.y.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok((SpectralField::from_coeffs(u_n.grid(), coeffs)?, sol.self_check))
}

/// Integrates the unregularized PDE `u_t = −εLu + F(u)` in physical space.
pub fn pde_reference<M: GradientFlow + ?Sized>(model: &M, u0: &SpectralField, end: f64, rtol: f64) -> Result<(SpectralField, f64)> {
    let grid = model.grid();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let u = SpectralField::to_spectral(grid, y).expect("grid-sized state");
        let mut f = model.nonlinear_term(&u);
        for ((c, &lam), &uc) in f.coeffs_mut().iter_mut().zip(model.symbol()).zip(u.coeffs()) {
            *c -= uc * (model.epsilon() * lam);
        }
        dy.copy_from_slice(&f.to_physical());
    };
    let y0 = u0.to_physical();
    let scale = y0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let problem = OdeProblem { rhs: &rhs, y0, t0: 0.0, t1: end, rtol, atol: rtol * scale };
    let sol = solve_reference(&problem)?;
    Ok((SpectralField::to_spectral(grid, &sol.y)?, sol.self_check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    #[test]
    fn scalar_exponential() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let p = OdeProblem { rhs: &rhs, y0: vec![1.0], t0: 0.0, t1: 1.0, rtol: 1e-12, atol: 1e-14 };
        let sol = solve_reference(&p).unwrap();
        assert!((sol.y[0] - exp(-1.0)).abs() < 1e-12);
        assert!(sol.self_check < 1e-11);
    }

    #[test]
    fn oscillator_and_self_check() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let p = OdeProblem { rhs: &rhs, y0: vec![1.0, 0.0], t0: 0.0, t1: 10.0, rtol: 1e-10, atol: 1e-12 };
        let sol = solve_reference(&p).unwrap();
        let err = (sol.y[0] - libm::cos(10.0)).abs();
        assert!(err <= 10.0 * 1e-10 && err <= sol.self_check.max(1e-12) * 10.0);
    }

    #[test]
    fn vandermonde_examples() {
        let xi = vandermonde_lagrange(&[0.0, -1.0]).unwrap();
        assert!((xi[0][0] - 1.0).abs() < 1e-15 && (xi[0][1] - 1.0).abs() < 1e-15);
        assert!(xi[1][0].abs() < 1e-15 && (xi[1][1] + 1.0).abs() < 1e-15);
        assert!(vandermonde_lagrange(&[0.0, -1.0, -1.0]).is_err());
        assert_eq!(window_nodes(&[0.7, 1.3]), vec![0.0, -0.7, -2.0]);
    }
}
