//! Time meshes: uniform, seeded perturbed-uniform, nested refinement and the
//! local step-ratio check `τ_n/τ_m ≤ r_c` for `|n − m| < k`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::random::UniformStream;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nodes: Vec<f64>,
    seed: Option<u64>,
}

/// Outcome of [`TimeMesh::validate_ratio`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCheck {
    pub ok: bool,
    /// Largest windowed ratio `τ_n/τ_m` as `(n, m, ratio)`; `None` for meshes with one step.
    pub worst: Option<(usize, usize, f64)>,
}

// Number of dt0-steps covering [0, T]; a remainder below this fraction of dt0 is treated as round-off.
fn step_count(dt0: f64, end: f64) -> usize {
    let q = end / dt0;
    let r = libm::round(q);
    if (q - r).abs() <= 1e-9 * q.max(1.0) {
        r as usize
    } else {
        libm::ceil(q) as usize
    }
}

impl TimeMesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Argument("a mesh needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Argument("mesh must start at t = 0"));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("mesh nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes, seed: None })
    }

    pub fn uniform(dt: f64, end: f64) -> Result<Self> {
        Self::perturbed_uniform(dt, end, 0.0, 0)
    }

    /// Nodes `j·dt0 + amplitude·dt0·η_j`, `η_j` uniform on `[−1, 1]`, endpoints fixed.
    pub fn perturbed_uniform(dt0: f64, end: f64, amplitude: f64, seed: u64) -> Result<Self> {
        if !(dt0 > 0.0) || !(end >= dt0) || !end.is_finite() {
            return Err(Error::Argument("need 0 < dt0 <= T"));
        }
        if !(0.0..0.5).contains(&amplitude) {
            return Err(Error::Argument("perturbation amplitude must lie in [0, 0.5)"));
        }
        let m = step_count(dt0, end);
        let mut rng = UniformStream::new(seed);
        let mut nodes = Vec::with_capacity(m + 1);
        nodes.push(0.0);
        for j in 1..m {
            let eta = rng.symmetric();
            nodes.push(j as f64 * dt0 + amplitude * dt0 * eta);
        }
        nodes.push(end);
        let mut mesh = Self::from_nodes(nodes)?;
        mesh.seed = (amplitude > 0.0).then_some(seed);
        Ok(mesh)
    }

    /// Keeps every node and inserts the midpoint of every step.
    pub fn refine(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().expect("nonempty"));
        Self { nodes, seed: self.seed }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn num_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn steps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }

    pub fn tau_max(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    /// Largest `τ_n/τ_m` over `|n − m| < k`, `n ≠ m`; 1 when no pair exists.
    pub fn max_window_ratio(&self, k: usize) -> f64 {
        self.validate_ratio(k, f64::INFINITY).worst.map_or(1.0, |w| w.2)
    }

    pub fn validate_ratio(&self, k: usize, r_c: f64) -> RatioCheck {
        validate_steps(&self.steps(), k, r_c)
    }
}

/// [`TimeMesh::validate_ratio`] on a bare step sequence.
pub fn validate_steps(steps: &[f64], k: usize, r_c: f64) -> RatioCheck {
    let mut worst: Option<(usize, usize, f64)> = None;
    for n in 0..steps.len() {
        let lo = n.saturating_sub(k.saturating_sub(1));
        let hi = (n + k).min(steps.len());
        for m in lo..hi {
            if m == n {
                continue;
            }
            let ratio = steps[n] / steps[m];
            if worst.map_or(true, |w| ratio > w.2) {
                worst = Some((n, m, ratio));
            }
        }
    }
    RatioCheck { ok: worst.map_or(true, |w| w.2 <= r_c), worst }
}
