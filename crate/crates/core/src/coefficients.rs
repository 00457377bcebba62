//! Variable-step Lagrange interpolation coefficients and the chain of
//! stabilization constants that fixes the regularization strength `A`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{powf, sqrt};

/// Shifted Lagrange basis `ℓ_i(s) = Σ_j ξ_{i,j} s^j` through the nodes
/// `s_0 = 0`, `s_m = −(τ_{n−1} + … + τ_{n−m})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeWindow {
    k: usize,
    steps: Vec<f64>,
    xi: Vec<f64>,
}

impl LagrangeWindow {
    pub fn order(&self) -> usize {
        self.k
    }

    /// Past steps `[τ_{n−1}, …, τ_{n−k+1}]`.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `ξ_{i,j}`.
    pub fn xi(&self, i: usize, j: usize) -> f64 {
        self.xi[i * self.k + j]
    }

    /// Coefficients of `ℓ_i` in increasing powers of `s`.
    pub fn basis(&self, i: usize) -> &[f64] {
        &self.xi[i * self.k..(i + 1) * self.k]
    }

    /// Interpolation nodes `s_0, …, s_{k−1}`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(self.k);
        let mut acc = 0.0;
        nodes.push(0.0);
        for &tau in &self.steps {
            acc -= tau;
            nodes.push(acc);
        }
        nodes
    }

    pub fn eval(&self, i: usize, s: f64) -> f64 {
        self.basis(i).iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }
}

/// Builds the product-form basis for a window of `k` nodes.
pub fn lagrange_window(k: usize, steps: &[f64]) -> Result<LagrangeWindow> {
    if k == 0 {
        return Err(Error::Argument("scheme order must be at least 1"));
    }
    if steps.len() != k - 1 {
        return Err(Error::Argument("a window of order k needs k - 1 past steps"));
    }
    if steps.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::Argument("time steps must be positive"));
    }
    let mut window = LagrangeWindow { k, steps: steps.to_vec(), xi: vec![0.0; k * k] };
    let nodes = window.nodes();
    for i in 0..k {
        // Expand Π_{m≠i} (s − s_m)/(s_i − s_m) one linear factor at a time.
        let mut poly = vec![0.0; k];
        poly[0] = 1.0;
        let mut degree = 0;
        for m in (0..k).filter(|&m| m != i) {
            let denom = nodes[i] - nodes[m];
            for d in (0..=degree + 1).rev() {
                let shifted = if d > 0 { poly[d - 1] } else { 0.0 };
                poly[d] = (shifted - nodes[m] * poly[d]) / denom;
            }
            degree += 1;
        }
        window.xi[i * k..(i + 1) * k].copy_from_slice(&poly);
    }
    Ok(window)
}

/// `C_j*` in closed form for `k ≤ 2`; `r_c` bounds `τ_n / τ_{n−1}`.
pub fn c_star_bounds(k: usize, r_c: f64) -> Result<Vec<f64>> {
    if !(r_c >= 1.0) {
        return Err(Error::Argument("step-ratio bound must be at least 1"));
    }
    match k {
        1 => Ok(vec![1.0]),
        2 => Ok(vec![1.0, r_c / sqrt(3.0)]),
        0 => Err(Error::Argument("scheme order must be at least 1")),
        _ => Err(Error::Unsupported("no closed form for C_j* beyond k = 2; supply a table or use the estimator")),
    }
}

/// Sampled (not certified) estimate of `C_j*`, `j = 0..k`, by maximizing
/// `‖1 − Σ_{i<j} ℓ_i‖²_{L²(0, τ_n)} / τ` over windows whose steps lie in
/// `[1, r_c]` on a tensor grid with `samples` points per step.
pub fn c_star_estimate(k: usize, r_c: f64, samples: usize) -> Result<Vec<f64>> {
    if k == 0 || !(r_c >= 1.0) || samples < 2 {
        return Err(Error::Argument("estimator needs k >= 1, r_c >= 1 and at least two samples"));
    }
    let (gauss_x, gauss_w) = crate::quadrature::gauss_legendre(k.max(2))?;
    let mut best = vec![0.0f64; k];
    best[0] = 1.0;
    if k == 1 {
        return Ok(best);
    }
    let levels: Vec<f64> = (0..samples)
        .map(|i| 1.0 + (r_c - 1.0) * i as f64 / (samples - 1) as f64)
        .collect();
    // steps = [τ_n, τ_{n−1}, …, τ_{n−k+1}], enumerated as a mixed-radix counter.
    let mut idx = vec![0usize; k];
    loop {
        let steps: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
        let tau_n = steps[0];
        let tau = steps.iter().cloned().fold(0.0, f64::max);
        let window = lagrange_window(k, &steps[1..])?;
        for (j, slot) in best.iter_mut().enumerate().skip(1) {
            let mut integral = 0.0;
            for (x, w) in gauss_x.iter().zip(&gauss_w) {
                let s = 0.5 * tau_n * (x + 1.0);
                let partial: f64 = (0..j).map(|i| window.eval(i, s)).sum();
                let r = 1.0 - partial;
                integral += 0.5 * tau_n * w * r * r;
            }
            *slot = slot.max(sqrt(integral / tau));
        }
        let mut d = 0;
        loop {
            if d == k {
                return Ok(best);
            }
            idx[d] += 1;
            if idx[d] < samples {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Full constant chain behind the regularization coefficient `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationConfig {
    pub k: usize,
    pub beta: f64,
    pub gamma: f64,
    pub c_lip: f64,
    pub p_k: f64,
    pub q: f64,
    pub c_hat: f64,
    pub c_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_star: Vec<f64>,
    pub c_bar: Vec<f64>,
    pub a_stab: f64,
    pub r_c: f64,
    /// Set when `β = γ = 0`: no regularization, stability needs a step restriction.
    pub step_restricted: bool,
}

impl StabilizationConfig {
    /// Left side of the `Ĉ, C̃` admissibility inequality.
    pub fn selection_lhs(&self) -> f64 {
        young_term(self.beta, self.p_k, self.c_hat) + young_term(self.gamma, self.p_k, self.c_tilde)
    }

    /// Right side `2 / (C_L C̄_0)`.
    pub fn selection_rhs(&self) -> f64 {
        2.0 / (self.c_lip * self.c_bar[0])
    }

    /// `A` recomputed from `(Ĉ, C̃, β, γ, p, C_L, C̄_0)`.
    pub fn a_from_constants(&self) -> f64 {
        self.c_lip * (self.c2 + self.c4) * self.c_bar[0]
    }
}

/// `C̄_j = Σ_{l ≥ j} C_l*`.
pub fn c_bar(c_star: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c_star.len()];
    let mut acc = 0.0;
    for j in (0..c_star.len()).rev() {
        acc += c_star[j];
        out[j] = acc;
    }
    out
}

// (1 − s/p) Ĉ^{1/(1 − s/p)} with the s = 0 and s = p limits.
fn young_term(s: f64, p: f64, c: f64) -> f64 {
    if s == 0.0 {
        return c;
    }
    let a = 1.0 - s / p;
    if a <= 0.0 {
        0.0
    } else {
        a * powf(c, 1.0 / a)
    }
}

// Returns (C_odd, C_even) = (C1, C2) or (C3, C4) for one side of the splitting.
fn split_constants(s: f64, p: f64, c: f64) -> (f64, f64) {
    if s == 0.0 {
        return (0.5 * c, 0.0);
    }
    let a = 1.0 - s / p;
    let even = s / (2.0 * p) * powf(c, -p / s);
    if a <= 0.0 {
        (0.0, even)
    } else {
        (0.5 * a * powf(c, 1.0 / a), even)
    }
}

/// Constant chain with `C_j*` from [`c_star_bounds`].
pub fn stabilization(k: usize, beta: f64, gamma: f64, c_lip: f64, r_c: f64) -> Result<StabilizationConfig> {
    let c_star = c_star_bounds(k, r_c)?;
    stabilization_with_table(k, beta, gamma, c_lip, r_c, &c_star)
}

/// Constant chain for a caller-supplied `C_j*` table (`c_star[0]` must be 1).
///
/// `Ĉ` and `C̃` are picked by the symmetric rule: each side that has a free
/// parameter receives an equal share of the budget `2/(C_L C̄_0)`, so the
/// admissibility inequality holds with equality. A side with exponent `0`
/// (Lipschitz index zero) is pinned at `Ĉ = 1`, i.e. the plain `½‖·‖²`
/// Young split; a side whose index equals `p(k)` contributes nothing to the
/// budget and is also pinned at 1.
pub fn stabilization_with_table(
    k: usize,
    beta: f64,
    gamma: f64,
    c_lip: f64,
    r_c: f64,
    c_star: &[f64],
) -> Result<StabilizationConfig> {
    if k == 0 {
        return Err(Error::Argument("scheme order must be at least 1"));
    }
    if !(beta >= 0.0 && gamma >= 0.0) {
        return Err(Error::Argument("Lipschitz indices must be nonnegative"));
    }
    if beta + gamma > 1.0 {
        return Err(Error::Argument("beta + gamma must not exceed 1"));
    }
    if !(c_lip > 0.0) {
        return Err(Error::Argument("Lipschitz constant must be positive"));
    }
    if c_star.len() != k || (c_star[0] - 1.0).abs() > 1e-15 || c_star.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::Argument("C* table must have k nonnegative entries with C_0* = 1"));
    }
    let c_bar = c_bar(c_star);
    let p_k = (beta + gamma) * k as f64 / 2.0;

    if beta == 0.0 && gamma == 0.0 {
        return Ok(StabilizationConfig {
            k,
            beta,
            gamma,
            c_lip,
            p_k,
            q: 0.0,
            c_hat: 1.0,
            c_tilde: 1.0,
            c1: 0.5,
            c2: 0.0,
            c3: 0.5,
            c4: 0.0,
            c_star: c_star.to_vec(),
            c_bar,
            a_stab: 0.0,
            r_c,
            step_restricted: true,
        });
    }
    if beta > p_k || gamma > p_k {
        return Err(Error::Unsupported("p(k) must dominate both Lipschitz indices"));
    }

    let q = if beta > 0.0 && gamma > 0.0 {
        1.0 / (1.0 + gamma / beta)
    } else if beta == 0.0 {
        0.0
    } else {
        1.0
    };

    let budget = 2.0 / (c_lip * c_bar[0]);
    let free = |s: f64| s > 0.0 && s < p_k;
    let pinned: f64 = [beta, gamma].iter().filter(|&&s| !free(s)).map(|&s| young_term(s, p_k, 1.0)).sum();
    let n_free = [beta, gamma].iter().filter(|&&s| free(s)).count();
    let remaining = budget - pinned;
    if remaining < 0.0 || (n_free > 0 && remaining == 0.0) {
        return Err(Error::Unsupported("admissibility budget exhausted; reduce the step-ratio bound"));
    }
    let pick = |s: f64| -> f64 {
        if free(s) {
            let a = 1.0 - s / p_k;
            powf(remaining / n_free as f64 / a, a)
        } else {
            1.0
        }
    };
    let c_hat = pick(beta);
    let c_tilde = pick(gamma);
    let (c1, c2) = split_constants(beta, p_k, c_hat);
    let (c3, c4) = split_constants(gamma, p_k, c_tilde);
    let a_stab = c_lip * (c2 + c4) * c_bar[0];

    Ok(StabilizationConfig {
        k,
        beta,
        gamma,
        c_lip,
        p_k,
        q,
        c_hat,
        c_tilde,
        c1,
        c2,
        c3,
        c4,
        c_star: c_star.to_vec(),
        c_bar,
        a_stab,
        r_c,
        step_restricted: false,
    })
}
