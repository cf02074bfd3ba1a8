//! Experiment configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stargraph::potential::ProfileSpec;
use stargraph::{PotentialProfile, VertexCondition};

use crate::Failure;

/// A potential profile given inline or as a path to a JSON file, resolved
/// against the directory of the config file.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ProfileRef {
    Inline(ProfileSpec),
    File(PathBuf),
}

impl<'de> Deserialize<'de> for ProfileRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(path) => Ok(ProfileRef::File(path.into())),
            v => ProfileSpec::deserialize(v).map(ProfileRef::Inline).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    #[serde(default = "default_panel_size")]
    pub size: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// add a vertex layer of width `ε` to every source
    #[serde(default = "yes")]
    pub layered: bool,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            size: default_panel_size(),
            radius: default_radius(),
            panels: default_panels(),
            degree: default_degree(),
            layered: true,
        }
    }
}

fn default_panel_size() -> usize {
    20
}
fn default_radius() -> f64 {
    4.0
}
fn default_panels() -> usize {
    8
}
fn default_degree() -> usize {
    3
}
fn yes() -> bool {
    true
}
fn default_scan_step() -> f64 {
    stargraph::resonance::DEFAULT_SCAN_STEP
}
fn default_rank_tol() -> f64 {
    stargraph::resonance::DEFAULT_RANK_TOL
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "Q")]
    pub q: ProfileRef,
    pub alpha: Option<f64>,
    pub alpha_range: Option<[f64; 2]>,
    #[serde(default = "default_scan_step")]
    pub scan_step: f64,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    pub eps_list: Option<Vec<f64>>,
    pub k_list: Option<Vec<f64>>,
    pub zeta: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub probes: Option<usize>,
    pub iters: Option<usize>,
    #[serde(default)]
    pub compare_regimes: Vec<VertexCondition>,
    /// limit used by `scatter` and `approx` instead of the classified one
    pub regime: Option<VertexCondition>,
    pub panel: Option<PanelConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Resonances,
    Scatter,
    Converge,
    Approx,
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

pub fn powers_of_half(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 0.5f64.powi(k)).collect()
}

impl ExperimentConfig {
    /// Reads and parses `path`, inlining a referenced profile file.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        if let ProfileRef::File(rel) = &cfg.q {
            let file = path.parent().unwrap_or(Path::new(".")).join(rel);
            let text = std::fs::read_to_string(&file).map_err(|e| bad(format!("profile {}: {e}", file.display())))?;
            let spec: ProfileSpec =
                serde_json::from_str(&text).map_err(|e| bad(format!("profile {}: {e}", file.display())))?;
            cfg.q = ProfileRef::Inline(spec);
        }
        Ok(cfg)
    }

    pub fn profile(&self) -> Result<PotentialProfile, Failure> {
        match &self.q {
            ProfileRef::Inline(spec) => PotentialProfile::from_spec(spec).map_err(|e| bad(format!("Q: {e}"))),
            ProfileRef::File(p) => Err(bad(format!("Q: profile file {} was not loaded", p.display()))),
        }
    }

    /// Checks everything `cmd` needs before any computation starts.
    pub fn validate(&self, cmd: Subcommand) -> Result<(), Failure> {
        let q = self.profile()?;
        let n = q.edge_count();
        if cmd == Subcommand::Resonances {
            let [lo, hi] = self.alpha_range.ok_or_else(|| bad("alpha_range is required"))?;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(bad(format!("alpha_range [{lo}, {hi}] must be finite with lo <= hi")));
            }
            if !(self.scan_step > 0.0) {
                return Err(bad("scan_step must be positive"));
            }
        } else {
            let alpha = self.alpha.ok_or_else(|| bad("alpha is required"))?;
            if !alpha.is_finite() {
                return Err(bad("alpha must be finite"));
            }
            let eps = self.eps(cmd);
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(bad("eps_list must be a nonempty list of positive numbers"));
            }
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(bad("rank_tol must lie in (0, 1)"));
        }
        if cmd == Subcommand::Scatter && self.ks().iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(bad("k_list entries must be positive"));
        }
        if matches!(cmd, Subcommand::Converge | Subcommand::Approx) && self.zeta_c().im == 0.0 {
            return Err(bad("zeta must have a nonzero imaginary part"));
        }
        if cmd == Subcommand::Converge && (self.probes.unwrap_or(8) < 4 || self.iters.unwrap_or(64) < 8) {
            return Err(bad("probes must be at least 4 and iters at least 8"));
        }
        if let Some(p) = &self.panel {
            if p.size == 0 || p.panels == 0 || !(p.radius > 0.0) {
                return Err(bad("panel needs a positive size, radius and panel count"));
            }
        }
        for c in self.regime.iter().chain(&self.compare_regimes) {
            c.validate(n).map_err(|e| bad(format!("regime: {e}")))?;
        }
        Ok(())
    }

    pub fn eps(&self, cmd: Subcommand) -> Vec<f64> {
        self.eps_list.clone().unwrap_or_else(|| match cmd {
            Subcommand::Scatter => powers_of_half(3, 10),
            _ => powers_of_half(3, 8),
        })
    }

    pub fn ks(&self) -> Vec<f64> {
        self.k_list.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn zeta_c(&self) -> num_complex::Complex64 {
        let [re, im] = self.zeta.unwrap_or([0.0, 1.0]);
        num_complex::Complex64::new(re, im)
    }

    /// SHA-256 of the resolved config (profile inlined, seed override
    /// applied, output directory left out).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&ExperimentConfig { out: None, ..self.clone() }).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
