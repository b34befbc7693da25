//! Run configuration: a single TOML file, strictly parsed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{CellProtocol, StdConvention};
use crate::error::{Result, SimError};
use crate::materials::MaterialDb;
use crate::mesh::{build_mesh, DeviceGeometry, NucleationSeed, Resolution};
use crate::protocol::{ComplianceConfig, DeviceModel, Segment, Waveform};
use crate::solver::{BoundaryConditions, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Waveforms {
    /// Used by `form` and by every sweep cell.
    pub forming: Waveform,
    pub set: Waveform,
    pub reset: Waveform,
    /// Quasi-static I-V staircase.
    pub iv: Waveform,
}

/// Voltage step of the default staircases (V).
pub const STAIRCASE_STEP: f64 = 0.01;
/// Default dwell per staircase level (s).
pub const STAIRCASE_DWELL: f64 = 1e-4;
/// Default dwell per level of the forming staircase (s).
pub const FORMING_DWELL: f64 = 3e-4;

fn staircase(start: f64, end: f64, compliance: bool) -> Segment {
    let points = ((end - start).abs() / STAIRCASE_STEP).round() as usize + 1;
    Segment::ramp(start, end, STAIRCASE_DWELL * points as f64, points, compliance)
}

impl Default for Waveforms {
    fn default() -> Self {
        Self {
            forming: Waveform::forming_ramp(-3.0, FORMING_DWELL),
            set: Waveform::forming_pulse(),
            reset: Waveform::reset_pulse(),
            iv: Waveform::new(vec![
                staircase(0.0, -2.1, true),
                staircase(-2.1, 0.0, true),
                staircase(0.0, 1.0, false),
                staircase(1.0, 0.0, false),
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadConfig {
    /// Read voltage (V).
    pub v_read: f64,
}

impl Default for ReadConfig {
    fn default() -> Self {
        Self { v_read: -0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Log-space standard deviation of the per-set density perturbation.
    pub amplitude: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            amplitude: crate::protocol::DEFAULT_NOISE_AMPLITUDE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    pub count: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { count: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// K1 axis (S/m).
    pub k1: Vec<f64>,
    /// K2 axis (W/m/K).
    pub k2: Vec<f64>,
    pub cycles: usize,
    /// Mesh used for every sweep cell.
    pub mesh: Resolution,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k1: linspace(6.2, 18.8, 8),
            k2: linspace(2.5, 11.5, 8),
            cycles: 10,
            mesh: Resolution::coarse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Field snapshot times relative to the waveform start (s).
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Fraction of the compliance current that marks forming.
    pub forming_threshold: f64,
    pub std_convention: StdConvention,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            forming_threshold: crate::analysis::FORMING_THRESHOLD,
            std_convention: StdConvention::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed for every random draw.
    pub seed: u64,
    pub geometry: DeviceGeometry,
    pub mesh: Resolution,
    pub materials: MaterialDb,
    pub solver: SolverConfig,
    pub boundary: BoundaryConditions,
    pub compliance: ComplianceConfig,
    pub nucleation: NucleationSeed,
    pub waveforms: Waveforms,
    pub read: ReadConfig,
    pub noise: NoiseConfig,
    pub cycle: CycleConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            geometry: DeviceGeometry::default(),
            mesh: Resolution::default(),
            materials: MaterialDb::default(),
            solver: SolverConfig::default(),
            boundary: BoundaryConditions::default(),
            compliance: ComplianceConfig::default(),
            nucleation: NucleationSeed::default(),
            waveforms: Waveforms::default(),
            read: ReadConfig::default(),
            noise: NoiseConfig::default(),
            cycle: CycleConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SimError::Config(msg.into()))
}

fn tagged(section: &str, e: SimError) -> SimError {
    match e {
        SimError::InvalidInput(m) | SimError::Config(m) => SimError::Config(format!("[{section}] {m}")),
        other => other,
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Range checks over every section.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate().map_err(|e| tagged("geometry", e))?;
        build_mesh(&self.geometry, &self.mesh).map_err(|e| tagged("mesh", e))?;
        build_mesh(&self.geometry, &self.sweep.mesh).map_err(|e| tagged("sweep.mesh", e))?;
        self.materials.validate().map_err(|e| tagged("materials", e))?;
        self.solver.validate().map_err(|e| tagged("solver", e))?;
        if !(self.boundary.ambient.is_finite() && self.boundary.ambient > 0.0) {
            return config_err("[boundary] ambient must be a positive temperature");
        }
        self.compliance.validate().map_err(|e| tagged("compliance", e))?;
        let n = &self.nucleation;
        if !(n.amplitude_fraction >= 0.0 && n.width > 0.0) {
            return config_err("[nucleation] amplitude_fraction must be >= 0 and width > 0");
        }
        for (name, wf) in [
            ("forming", &self.waveforms.forming),
            ("set", &self.waveforms.set),
            ("reset", &self.waveforms.reset),
            ("iv", &self.waveforms.iv),
        ] {
            wf.validate().map_err(|e| tagged(&format!("waveforms.{name}"), e))?;
        }
        if !(self.read.v_read.is_finite() && self.read.v_read != 0.0) {
            return config_err("[read] v_read must be non-zero");
        }
        if !(self.noise.amplitude >= 0.0 && self.noise.amplitude.is_finite()) {
            return config_err("[noise] amplitude must be >= 0");
        }
        if self.cycle.count == 0 {
            return config_err("[cycle] count must be at least 1");
        }
        if self.sweep.k1.is_empty() || self.sweep.k2.is_empty() {
            return config_err("[sweep] axes must be non-empty");
        }
        if self.sweep.k1.iter().chain(&self.sweep.k2).any(|&k| !(k > 0.0 && k.is_finite())) {
            return config_err("[sweep] axis values must be positive");
        }
        if self.sweep.cycles == 0 {
            return config_err("[sweep] cycles must be at least 1");
        }
        if self.output.snapshot_times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return config_err("[output] snapshot times must be >= 0");
        }
        let th = self.analysis.forming_threshold;
        if !(th > 0.0 && th <= 1.0) {
            return config_err("[analysis] forming_threshold must lie in (0, 1]");
        }
        Ok(())
    }

    fn model(&self, resolution: &Resolution) -> Result<DeviceModel> {
        Ok(DeviceModel {
            mesh: build_mesh(&self.geometry, resolution)?,
            db: self.materials.clone(),
            bc: self.boundary.clone(),
            solver: self.solver.clone(),
            compliance: self.compliance.clone(),
        })
    }

    pub fn device(&self) -> Result<DeviceModel> {
        self.model(&self.mesh)
    }

    pub fn sweep_device(&self) -> Result<DeviceModel> {
        self.model(&self.sweep.mesh)
    }

    pub fn cell_protocol(&self, cycles: usize) -> CellProtocol {
        CellProtocol {
            forming: self.waveforms.forming.clone(),
            set: self.waveforms.set.clone(),
            reset: self.waveforms.reset.clone(),
            cycles,
            noise_amplitude: self.noise.amplitude,
            nucleation: self.nucleation.clone(),
            v_read: self.read.v_read,
            threshold: self.analysis.forming_threshold,
            convention: self.analysis.std_convention,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = RunConfig::from_toml_str("seed = 3\n\n[materials]\nk1 = 9.4\nkk2 = 5.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, SimError::Config(_)));
        assert!(msg.contains("kk2"), "{msg}");
        assert!(msg.contains("line 5"), "{msg}");
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        for doc in [
            "[materials]\nk1 = -1.0",
            "[solver]\ndamping = 1.5",
            "[compliance]\ni_cc = 0.0",
            "[cycle]\ncount = 0",
            "[sweep]\nk1 = []",
            "[read]\nv_read = 0.0",
            "[geometry]\nwidth = -4e-8",
            "[analysis]\nforming_threshold = 1.2",
            "[waveforms.set]\nsegments = []",
        ] {
            let err = RunConfig::from_toml_str(doc).unwrap_err();
            assert!(matches!(err, SimError::Config(_) | SimError::InvalidInput(_)), "{doc}: {err}");
        }
    }

    #[test]
    fn waveform_tables_parse() {
        let doc = r#"
[[waveforms.set.segments]]
kind = "pulse"
amplitude = -1.8
duration = 5e-3

[[waveforms.set.segments]]
kind = "ramp"
start = 0.0
end = 0.5
duration = 1e-3
points = 6
compliance = false
"#;
        let cfg = RunConfig::from_toml_str(doc).unwrap();
        assert_eq!(cfg.waveforms.set.segments.len(), 2);
        assert_eq!(cfg.waveforms.set.segments[0], Segment::pulse(-1.8, 5e-3, true));
        assert_eq!(cfg.waveforms.set.segments[1].levels().len(), 6);
    }

    #[test]
    fn default_sweep_grid() {
        let s = SweepConfig::default();
        assert_eq!(s.k1.len(), 8);
        assert_eq!(s.k1[0], 6.2);
        assert!((s.k1[7] - 18.8).abs() < 1e-12);
        assert!((s.k2[7] - 11.5).abs() < 1e-12);
    }
}
