//! Experiment configuration (TOML).
//!
//! Every key is checked when the file is parsed; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use viscoctl_core::kernels::MemoryKernel;
use viscoctl_core::numgrid::{BoundaryGrid, TimeGrid};
use viscoctl_core::spectral::{
    beam_hinged_basis, rectangle_hinged_basis, synthetic_basis, ControlCase, ModalBasis,
    ModalState, Space,
};

/// A configuration problem; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Beam,
    Rectangle,
    Synthetic,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default)]
    pub position: Vec<f64>,
    #[serde(default)]
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default)]
    pub position: Vec<f64>,
    #[serde(default)]
    pub velocity: Vec<f64>,
    /// Draw a random target of unit `X` norm from `seed` instead.
    #[serde(default)]
    pub random: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub lambda: Vec<f64>,
    pub psi_norms: Vec<f64>,
}

/// Boundary control used by `simulate`: `g(x, t) = amplitude · sin(frequency · t)`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    basis: BasisKind,
    case: String,
    modes: usize,
    horizon: f64,
    n_steps: usize,
    #[serde(default)]
    kernel: Vec<toml::Value>,
    #[serde(default = "default_boundary_nodes")]
    boundary_nodes: usize,
    #[serde(default = "one")]
    rect_a: f64,
    #[serde(default = "one")]
    rect_b: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    probe_count: usize,
    out: Option<PathBuf>,
    #[serde(default)]
    target: TargetSpec,
    synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    initial: Coefficients,
    #[serde(default)]
    drive: DriveSpec,
}

fn default_boundary_nodes() -> usize {
    65
}

fn one() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub basis: BasisKind,
    pub case: ControlCase,
    pub modes: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub kernel: MemoryKernel,
    pub boundary_nodes: usize,
    pub rect_a: f64,
    pub rect_b: f64,
    pub seed: u64,
    /// Random probes for the compactness diagnostic; 0 uses orthonormalized moment functions.
    pub probe_count: usize,
    pub out: Option<PathBuf>,
    pub target: TargetSpec,
    pub synthetic: Option<SyntheticSpec>,
    pub initial: Coefficients,
    pub drive: DriveSpec,
    /// The file as read, echoed into the run manifest.
    pub source: String,
}

fn parse_kernel(entries: &[toml::Value]) -> Result<MemoryKernel, ConfigError> {
    let mut pairs = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let number = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|n| n as f64));
        let pair = entry
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((number(&a[0])?, number(&a[1])?)));
        let Some((gamma, delta)) = pair else {
            return Err(bad(format!(
                "kernel[{i}]: expected a [gamma, delta] pair of numbers, got {entry}"
            )));
        };
        if !gamma.is_finite() {
            return Err(bad(format!("kernel[{i}]: gamma must be finite")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(bad(format!("kernel[{i}]: delta must be finite and >= 0")));
        }
        pairs.push((gamma, delta));
    }
    MemoryKernel::from_pairs(&pairs).map_err(|e| bad(format!("kernel: {e}")))
}

fn parse_case(s: &str) -> Result<ControlCase, ConfigError> {
    match s {
        "A" | "a" => Ok(ControlCase::A),
        "B" | "b" => Ok(ControlCase::B),
        other => Err(bad(format!("case: expected \"A\" or \"B\", got {other:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let case = parse_case(&raw.case)?;
        let kernel = parse_kernel(&raw.kernel)?;
        if raw.modes < 1 {
            return Err(bad("modes: must be at least 1"));
        }
        if !(raw.horizon.is_finite() && raw.horizon > 0.0) {
            return Err(bad("horizon: must be positive"));
        }
        if raw.n_steps < 2 {
            return Err(bad("n_steps: must be at least 2"));
        }
        if raw.boundary_nodes < 2 {
            return Err(bad("boundary_nodes: must be at least 2"));
        }
        for (key, v) in [("rect_a", raw.rect_a), ("rect_b", raw.rect_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(format!("{key}: must be positive")));
            }
        }
        match (&raw.basis, &raw.synthetic) {
            (BasisKind::Synthetic, None) => {
                return Err(bad("synthetic: section required for basis = \"synthetic\""))
            }
            (BasisKind::Synthetic, Some(s))
                if s.lambda.len() != raw.modes || s.psi_norms.len() != raw.modes =>
            {
                return Err(bad(
                    "synthetic: lambda and psi_norms must both have `modes` entries",
                ));
            }
            _ => {}
        }
        for (key, v) in [
            ("target.position", &raw.target.position),
            ("target.velocity", &raw.target.velocity),
            ("initial.position", &raw.initial.position),
            ("initial.velocity", &raw.initial.velocity),
        ] {
            if v.len() > raw.modes {
                return Err(bad(format!("{key}: more entries than modes")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("{key}: entries must be finite")));
            }
        }
        if raw.target.random && !(raw.target.position.is_empty() && raw.target.velocity.is_empty())
        {
            return Err(bad("target: random = true excludes explicit coefficients"));
        }
        if !(raw.drive.amplitude.is_finite() && raw.drive.frequency.is_finite()) {
            return Err(bad("drive: amplitude and frequency must be finite"));
        }
        let cfg = Self {
            basis: raw.basis,
            case,
            modes: raw.modes,
            horizon: raw.horizon,
            n_steps: raw.n_steps,
            kernel,
            boundary_nodes: raw.boundary_nodes,
            rect_a: raw.rect_a,
            rect_b: raw.rect_b,
            seed: raw.seed,
            probe_count: raw.probe_count,
            out: raw.out,
            target: raw.target,
            synthetic: raw.synthetic,
            initial: raw.initial,
            drive: raw.drive,
            source: text.to_owned(),
        };
        // surface basis errors (e.g. unsorted synthetic eigenvalues) at parse time
        cfg.modal_basis()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.horizon, self.n_steps).expect("validated at parse time")
    }

    pub fn boundary_grid(&self) -> Result<BoundaryGrid, ConfigError> {
        match self.basis {
            BasisKind::Rectangle => BoundaryGrid::uniform_edge(self.rect_a, self.boundary_nodes)
                .map_err(|e| bad(format!("boundary_nodes: {e}"))),
            _ => Ok(BoundaryGrid::point(0.0)),
        }
    }

    pub fn modal_basis(&self) -> Result<ModalBasis, ConfigError> {
        let bg = self.boundary_grid()?;
        let basis = match self.basis {
            BasisKind::Beam => beam_hinged_basis(self.modes, &bg),
            BasisKind::Rectangle => {
                rectangle_hinged_basis(self.rect_a, self.rect_b, self.modes, &bg)
            }
            BasisKind::Synthetic => {
                let s = self.synthetic.as_ref().expect("validated at parse time");
                synthetic_basis(&s.lambda, &s.psi_norms)
            }
        };
        basis.map_err(|e| bad(format!("basis: {e}")))
    }

    fn padded(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        out.resize(self.modes, 0.0);
        out
    }

    /// Initial modal coefficients `(w_n(0), w_n'(0))`.
    pub fn initial_state(&self) -> ModalState {
        ModalState {
            case: self.case,
            space: Space::Y,
            position: self.padded(&self.initial.position),
            velocity: self.padded(&self.initial.velocity),
        }
    }

    /// Explicit target coefficients `(w_n(T), w_n'(T))`; `None` when the target is random.
    pub fn explicit_target(&self) -> Option<ModalState> {
        (!self.target.random).then(|| ModalState {
            case: self.case,
            space: Space::X,
            position: self.padded(&self.target.position),
            velocity: self.padded(&self.target.velocity),
        })
    }
}
