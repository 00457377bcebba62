//! Metadata stamped on every output file.

use etdms_core::coefficients::StabilizationConfig;
use etdms_core::random::UniformStream;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub generator: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub constants: Vec<ConstantChain>,
}

/// The numbers that fix `A` for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantChain {
    pub label: String,
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
    pub r_c: f64,
    /// Value of `A` used by the run (the override if one was given).
    pub a_stab: f64,
    pub a_computed: f64,
    pub tau_ref: f64,
}

impl ConstantChain {
    pub fn new(label: impl Into<String>, cfg: &StabilizationConfig, a_used: f64, tau_ref: f64) -> Self {
        Self {
            label: label.into(),
            k: cfg.k,
            beta: cfg.beta,
            gamma: cfg.gamma,
            c_lip: cfg.c_lip,
            p_k: cfg.p_k,
            q: cfg.q,
            c_hat: cfg.c_hat,
            c_tilde: cfg.c_tilde,
            c1: cfg.c1,
            c2: cfg.c2,
            c3: cfg.c3,
            c4: cfg.c4,
            c_star: cfg.c_star.clone(),
            c_bar: cfg.c_bar.clone(),
            r_c: cfg.r_c,
            a_stab: a_used,
            a_computed: cfg.a_stab,
            tau_ref,
        }
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Provenance {
    pub fn new(config: &ExperimentConfig, constants: Vec<ConstantChain>) -> Self {
        Self {
            version: VERSION,
            generator: UniformStream::GENERATOR,
            seed: config.seed(),
            config_sha256: config_hash(config),
            config: config.clone(),
            constants,
        }
    }

    /// `# key: value` lines for CSV headers.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("etdms {}", self.version),
            format!("generator: {}", self.generator),
            format!("seed: {}", self.seed),
            format!("config_sha256: {}", self.config_sha256),
            format!("config: {}", serde_json::to_string(&self.config).expect("config serializes")),
        ];
        for c in &self.constants {
            out.push(format!("constants: {}", serde_json::to_string(c).expect("constants serialize")));
        }
        out
    }
}
