//! Scalar metrics, line profiles and the (K1, K2) parameter sweep.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};
use crate::mesh::{initial_state, FieldState, Mesh, NucleationSeed};
use crate::protocol::{
    run_cycles, run_transient, CycleNoiseConfig, DeviceModel, TraceResult, TransientOptions,
    Waveform,
};

/// Fraction of the compliance current that marks forming.
pub const FORMING_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormingResult {
    /// Device voltage `V2` at the first sample with `|I| >= threshold * I_CC`.
    Formed { v_f: f64, sample: usize },
    /// The current never reached the threshold.
    NoForming,
}

impl FormingResult {
    pub fn voltage(&self) -> Option<f64> {
        match self {
            FormingResult::Formed { v_f, .. } => Some(*v_f),
            FormingResult::NoForming => None,
        }
    }
}

/// First-crossing forming voltage. No interpolation between samples.
pub fn detect_forming_voltage(trace: &TraceResult, i_cc: f64, threshold: f64) -> FormingResult {
    let limit = threshold * i_cc;
    trace
        .samples
        .iter()
        .position(|s| s.current.abs() >= limit)
        .map_or(FormingResult::NoForming, |k| FormingResult::Formed {
            v_f: trace.samples[k].v2,
            sample: k,
        })
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return invalid("median of an empty list");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// `median(R_HRS) / median(R_LRS)`.
pub fn resistance_ratio(hrs: &[f64], lrs: &[f64]) -> Result<f64> {
    if hrs.is_empty() || lrs.is_empty() {
        return invalid("resistance ratio needs non-empty HRS and LRS lists");
    }
    if hrs.iter().chain(lrs).any(|&r| !(r > 0.0)) {
        return invalid("resistances must be positive");
    }
    Ok(median(hrs)? / median(lrs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdConvention {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

/// Standard deviation over mean.
pub fn uniformity(values: &[f64], convention: StdConvention) -> Result<f64> {
    if values.len() < 2 {
        return invalid(format!("uniformity needs at least 2 values, got {}", values.len()));
    }
    if values.iter().any(|&r| !(r > 0.0)) {
        return invalid("uniformity needs positive values");
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match convention {
        StdConvention::Population => n,
        StdConvention::Sample => n - 1.0,
    };
    Ok((ss / denom).sqrt() / mean)
}

/// A line through the mesh. Coordinates are centered: `y = 0` on the device
/// axis, `z = 0` at the reservoir/switch interface, positive toward the TE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    /// Horizontal line at height `z`.
    AlongY { z: f64 },
    /// Vertical line at lateral position `y`, restricted to `[z_min, z_max]`.
    AlongZ { y: f64, z_min: f64, z_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

fn nearest(centers: impl Iterator<Item = f64>, x: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.enumerate() {
        let d = (c - x).abs();
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// Samples a per-cell field along `line` by nearest-cell lookup.
pub fn profile_extract(mesh: &Mesh, field: &[f64], line: Line) -> Result<Profile> {
    if field.len() != mesh.n_cells() {
        return invalid("field length does not match the mesh");
    }
    let half = 0.5 * mesh.geometry.width;
    let z_lo = mesh.z_from_interface(0) - 0.5 * mesh.dz(0);
    let z_hi = mesh.z_from_interface(mesh.nz - 1) + 0.5 * mesh.dz(mesh.nz - 1);
    let ys = || (0..mesh.ny).map(|i| mesh.y_centered(i));
    match line {
        Line::AlongY { z } => {
            if !(z >= z_lo && z <= z_hi) {
                return invalid(format!("profile height {z:e} m outside the device"));
            }
            let j = nearest((0..mesh.nz).map(|j| mesh.z_from_interface(j)), z);
            Ok(Profile {
                coords: ys().collect(),
                values: (0..mesh.ny).map(|i| field[mesh.index(i, j)]).collect(),
            })
        }
        Line::AlongZ { y, z_min, z_max } => {
            if !(y.abs() <= half) || !(z_min >= z_lo && z_max <= z_hi && z_min <= z_max) {
                return invalid("profile line outside the device");
            }
            let i = nearest(ys(), y);
            let rows: Vec<usize> = (0..mesh.nz)
                .filter(|&j| {
                    let z = mesh.z_from_interface(j);
                    z >= z_min && z <= z_max
                })
                .collect();
            Ok(Profile {
                coords: rows.iter().map(|&j| mesh.z_from_interface(j)).collect(),
                values: rows.iter().map(|&j| field[mesh.index(i, j)]).collect(),
            })
        }
    }
}

/// What each sweep cell runs after the forming ramp.
#[derive(Debug, Clone)]
pub struct CellProtocol {
    pub forming: Waveform,
    pub set: Waveform,
    pub reset: Waveform,
    pub cycles: usize,
    pub noise_amplitude: f64,
    pub nucleation: NucleationSeed,
    pub v_read: f64,
    pub threshold: f64,
    pub convention: StdConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Completed,
    NoForming,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Completed => "ok",
            CellStatus::NoForming => "no-forming",
            CellStatus::Failed(_) => "failed",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            CellStatus::Failed(msg) => msg,
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub k1: f64,
    pub k2: f64,
    pub seed: u64,
    pub v_f: Option<f64>,
    pub r_hrs: Option<f64>,
    pub r_lrs: Option<f64>,
    pub ratio: Option<f64>,
    pub uniformity_hrs: Option<f64>,
    pub uniformity_lrs: Option<f64>,
    pub status: CellStatus,
}

impl CellMetrics {
    fn empty(k1: f64, k2: f64, seed: u64, status: CellStatus) -> Self {
        Self {
            k1,
            k2,
            seed,
            v_f: None,
            r_hrs: None,
            r_lrs: None,
            ratio: None,
            uniformity_hrs: None,
            uniformity_lrs: None,
            status,
        }
    }
}

/// Sweep results, `cells[a * k2.len() + b]` holding `(k1[a], k2[b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMap {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub cells: Vec<CellMetrics>,
}

impl SweepMap {
    pub fn cell(&self, a: usize, b: usize) -> &CellMetrics {
        &self.cells[a * self.k2.len() + b]
    }

    pub fn completed_fraction(&self) -> f64 {
        let ok = self.cells.iter().filter(|c| c.status == CellStatus::Completed).count();
        ok as f64 / self.cells.len() as f64
    }
}

/// Forms a fresh device with `protocol.forming`, returning the forming
/// voltage and the formed state. The ramp ends at the forming crossing.
pub fn form_device(dev: &DeviceModel, protocol: &CellProtocol) -> Result<(FormingResult, FieldState, TraceResult)> {
    let mut state = initial_state(&dev.mesh, &dev.db);
    protocol.nucleation.apply(&dev.mesh, &mut state);
    let opts = TransientOptions {
        stop_current: Some(protocol.threshold * dev.compliance.i_cc),
        ..TransientOptions::default()
    };
    let trace = run_transient(dev, &mut state, &protocol.forming, &opts)?;
    let result = detect_forming_voltage(&trace, dev.compliance.i_cc, protocol.threshold);
    Ok((result, state, trace))
}

fn run_cell(base: &DeviceModel, protocol: &CellProtocol, k1: f64, k2: f64, seed: u64) -> CellMetrics {
    let mut dev = base.clone();
    dev.db.k1 = k1;
    dev.db.k2 = k2;
    let attempt = || -> Result<CellMetrics> {
        let (formed, mut state, _) = form_device(&dev, protocol)?;
        let Some(v_f) = formed.voltage() else {
            return Ok(CellMetrics::empty(k1, k2, seed, CellStatus::NoForming));
        };
        let noise = CycleNoiseConfig {
            seed,
            amplitude: protocol.noise_amplitude,
        };
        let cycles = run_cycles(
            &dev,
            &mut state,
            &protocol.set,
            &protocol.reset,
            protocol.cycles,
            &noise,
            protocol.v_read,
            false,
        )?;
        let (u_hrs, u_lrs) = if protocol.cycles >= 2 {
            (
                Some(uniformity(&cycles.r_hrs, protocol.convention)?),
                Some(uniformity(&cycles.r_lrs, protocol.convention)?),
            )
        } else {
            (None, None)
        };
        Ok(CellMetrics {
            k1,
            k2,
            seed,
            v_f: Some(v_f),
            r_hrs: Some(median(&cycles.r_hrs)?),
            r_lrs: Some(median(&cycles.r_lrs)?),
            ratio: Some(resistance_ratio(&cycles.r_hrs, &cycles.r_lrs)?),
            uniformity_hrs: u_hrs,
            uniformity_lrs: u_lrs,
            status: CellStatus::Completed,
        })
    };
    match attempt() {
        Ok(m) => m,
        Err(e) => CellMetrics::empty(k1, k2, seed, CellStatus::Failed(e.to_string())),
    }
}

/// Runs every `(k1, k2)` combination independently on `jobs` threads.
///
/// Cell `c` (row-major, K2 fastest) uses the noise seed `root_seed + c`, so
/// the map does not depend on the thread count or scheduling order.
pub fn sweep_k1_k2(
    base: &DeviceModel,
    k1: &[f64],
    k2: &[f64],
    protocol: &CellProtocol,
    root_seed: u64,
    jobs: usize,
) -> Result<SweepMap> {
    if k1.is_empty() || k2.is_empty() {
        return invalid("sweep axes must be non-empty");
    }
    if k1.iter().chain(k2).any(|&k| !(k > 0.0 && k.is_finite())) {
        return invalid("sweep axis values must be positive");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::InvalidInput(format!("thread pool: {e}")))?;
    let points: Vec<(usize, f64, f64)> = k1
        .iter()
        .flat_map(|&a| k2.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(c, (a, b))| (c, a, b))
        .collect();
    let cells = pool.install(|| {
        points
            .par_iter()
            .map(|&(c, a, b)| {
                let m = run_cell(base, protocol, a, b, root_seed.wrapping_add(c as u64));
                info!("sweep cell K1={a} K2={b}: {}", m.status.label());
                m
            })
            .collect::<Vec<_>>()
    });
    Ok(SweepMap {
        k1: k1.to_vec(),
        k2: k2.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialDb;
    use crate::mesh::{build_mesh, DeviceGeometry, Resolution};
    use crate::protocol::TraceSample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trace(points: &[(f64, f64)]) -> TraceResult {
        TraceResult {
            samples: points
                .iter()
                .enumerate()
                .map(|(k, &(v2, current))| TraceSample {
                    t: k as f64,
                    v1: v2,
                    v2,
                    current,
                    peak_temperature: 300.0,
                    total_vacancies: 0.0,
                    level: k,
                    level_end: true,
                    compliance: true,
                })
                .collect(),
            ..TraceResult::default()
        }
    }

    #[test]
    fn forming_voltage_first_crossing() {
        let t = trace(&[(-1.5, -1e-5), (-1.6, -2e-4), (-1.62, -4.9e-4), (-1.64, -5e-4)]);
        assert_eq!(detect_forming_voltage(&t, 500e-6, 0.95).voltage(), Some(-1.62));
        // exactly at the threshold counts
        let t = trace(&[(-1.0, -1e-6), (-1.1, -0.95 * 500e-6), (-1.2, -5e-4)]);
        assert_eq!(detect_forming_voltage(&t, 500e-6, 0.95).voltage(), Some(-1.1));
        let t = trace(&[(-1.0, -1e-6), (-2.0, -4e-4)]);
        assert_eq!(detect_forming_voltage(&t, 500e-6, 0.95), FormingResult::NoForming);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(resistance_ratio(&[1000.0], &[4.0]).unwrap(), 250.0);
        assert_eq!(resistance_ratio(&[3.0, 5.0], &[3.0, 5.0]).unwrap(), 1.0);
        assert_eq!(resistance_ratio(&[100.0, 300.0, 200.0], &[2.0, 2.0, 2.0]).unwrap(), 100.0);
        assert!(resistance_ratio(&[], &[1.0]).is_err());
        assert!(resistance_ratio(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn uniformity_examples() {
        assert_eq!(uniformity(&[5.0, 5.0, 5.0], StdConvention::Population).unwrap(), 0.0);
        let u = uniformity(&[1.0, 1.0, 1.0, 3.0], StdConvention::Population).unwrap();
        assert_relative_eq!(u, 0.75f64.sqrt() / 1.5, max_relative = 1e-12);
        assert_relative_eq!(u, 0.577, epsilon = 5e-4);
        let s = uniformity(&[1.0, 1.0, 1.0, 3.0], StdConvention::Sample).unwrap();
        assert_relative_eq!(s, 1.0 / 1.5, max_relative = 1e-12);
        assert!(uniformity(&[1.0], StdConvention::Population).is_err());
    }

    proptest! {
        #[test]
        fn metrics_scale_invariant(vals in prop::collection::vec(1.0f64..1e6, 2..12), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = vals.iter().map(|v| v * c).collect();
            let a = uniformity(&vals, StdConvention::Population).unwrap();
            let b = uniformity(&scaled, StdConvention::Population).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
            let r = resistance_ratio(&scaled, &scaled).unwrap();
            prop_assert!((r - 1.0).abs() < 1e-12);
        }

        #[test]
        fn forming_threshold_monotone(currents in prop::collection::vec(0.0f64..6e-4, 1..30), lo in 0.5f64..0.95, step in 0.0f64..0.05) {
            let pts: Vec<(f64, f64)> = currents.iter().enumerate().map(|(k, &i)| (-0.01 * k as f64, -i)).collect();
            let t = trace(&pts);
            let a = detect_forming_voltage(&t, 500e-6, lo);
            let b = detect_forming_voltage(&t, 500e-6, lo + step);
            match (a, b) {
                (FormingResult::Formed { v_f: va, .. }, FormingResult::Formed { v_f: vb, .. }) => prop_assert!(vb <= va),
                (FormingResult::NoForming, b) => prop_assert_eq!(b, FormingResult::NoForming),
                _ => {}
            }
        }
    }

    #[test]
    fn initial_profile_steps_at_interface() {
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::default()).unwrap();
        let s = initial_state(&m, &MaterialDb::default());
        let p = profile_extract(&m, &s.n_d, Line::AlongZ { y: 0.0, z_min: -30e-9, z_max: 5e-9 }).unwrap();
        for (z, n) in p.coords.iter().zip(&p.values) {
            let expected = if *z < 0.0 { 1e28 } else { 1e22 };
            assert_eq!(*n, expected);
        }
        let flat = vec![7.0; m.n_cells()];
        let p = profile_extract(&m, &flat, Line::AlongY { z: 2e-9 }).unwrap();
        assert_eq!(p.values.len(), m.ny);
        assert!(p.values.iter().all(|&v| v == 7.0));
        assert!(profile_extract(&m, &flat, Line::AlongY { z: 1e-6 }).is_err());
        assert!(profile_extract(&m, &flat, Line::AlongZ { y: 30e-9, z_min: 0.0, z_max: 1e-9 }).is_err());
    }
}
