//! Voltage programs, the compliance layer and switching experiments.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};
use crate::materials::MaterialDb;
use crate::mesh::{total_vacancies, FieldState, Mesh, Region, AMBIENT_TEMPERATURE};
use crate::solver::{coupled_step, solve_potential, BoundaryConditions, CmlMode, Drive, Physics, SolverConfig};

/// CML conductivity enforcing the compliance current.
///
/// Below the switchover field `E_max = i_cc / (sigma_base w d)` the layer
/// keeps `sigma_base`; above it the conductivity is chosen so that the layer
/// passes exactly `i_cc`. Both branches meet at `E_max`.
pub fn cml_conductance(i_cc: f64, v1: f64, v2: f64, w: f64, d: f64, h: f64, sigma_base: f64) -> f64 {
    let e_max = i_cc / (sigma_base * w * d);
    let drop = (v1 - v2).abs();
    let e_cml = drop / h;
    if e_cml >= e_max && drop > 0.0 {
        i_cc * h / (drop * w * d)
    } else {
        sigma_base
    }
}

/// Switchover field of the compliance rule (V/m).
pub fn cml_switchover_field(i_cc: f64, sigma_base: f64, w: f64, d: f64) -> f64 {
    i_cc / (sigma_base * w * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplianceConfig {
    /// Compliance current (A).
    pub i_cc: f64,
    /// Base CML conductivity (S/m).
    pub i_cc_sigma: f64,
}

impl Default for ComplianceConfig {
    fn default() -> Self {
        Self {
            i_cc: 500e-6,
            i_cc_sigma: 1e5,
        }
    }
}

impl ComplianceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_cc > 0.0 && self.i_cc_sigma > 0.0) {
            return invalid("compliance current and base CML conductivity must be positive");
        }
        Ok(())
    }

    pub fn limiting(&self) -> CmlMode {
        CmlMode::Limiting {
            i_cc: self.i_cc,
            sigma_base: self.i_cc_sigma,
        }
    }

    pub fn fixed(&self) -> CmlMode {
        CmlMode::Fixed { sigma: self.i_cc_sigma }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Segment {
    /// Constant voltage.
    Pulse {
        amplitude: f64,
        duration: f64,
        #[serde(default = "default_true")]
        compliance: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_dt: Option<f64>,
    },
    /// Staircase from `start` to `end` with `points` equally spaced levels,
    /// both endpoints included, each held `duration / points`.
    Ramp {
        start: f64,
        end: f64,
        duration: f64,
        points: usize,
        #[serde(default = "default_true")]
        compliance: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_dt: Option<f64>,
    },
}

impl Segment {
    pub fn pulse(amplitude: f64, duration: f64, compliance: bool) -> Self {
        Segment::Pulse {
            amplitude,
            duration,
            compliance,
            sample_dt: None,
        }
    }

    pub fn ramp(start: f64, end: f64, duration: f64, points: usize, compliance: bool) -> Self {
        Segment::Ramp {
            start,
            end,
            duration,
            points,
            compliance,
            sample_dt: None,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Segment::Pulse { duration, .. } | Segment::Ramp { duration, .. } => *duration,
        }
    }

    fn compliance(&self) -> bool {
        match self {
            Segment::Pulse { compliance, .. } | Segment::Ramp { compliance, .. } => *compliance,
        }
    }

    fn sample_dt(&self) -> Option<f64> {
        match self {
            Segment::Pulse { sample_dt, .. } | Segment::Ramp { sample_dt, .. } => *sample_dt,
        }
    }

    /// Constant-voltage levels `(voltage, hold time)`.
    pub fn levels(&self) -> Vec<(f64, f64)> {
        match *self {
            Segment::Pulse { amplitude, duration, .. } => vec![(amplitude, duration)],
            Segment::Ramp {
                start,
                end,
                duration,
                points,
                ..
            } => {
                let dwell = duration / points as f64;
                (0..points)
                    .map(|k| {
                        let s = if points == 1 { 1.0 } else { k as f64 / (points - 1) as f64 };
                        (start + (end - start) * s, dwell)
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.duration();
        if !(d.is_finite() && d > 0.0) {
            return invalid(format!("segment duration must be positive, got {d}"));
        }
        if let Segment::Ramp { points, .. } = self {
            if *points == 0 {
                return invalid("ramp needs at least one point");
            }
        }
        if let Some(s) = self.sample_dt() {
            if !(s > 0.0) {
                return invalid("segment sample_dt must be positive");
            }
        }
        Ok(())
    }
}

/// Ordered, contiguous voltage segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waveform {
    pub segments: Vec<Segment>,
}

impl Waveform {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// -2.1 V for 10 ms under compliance.
    pub fn forming_pulse() -> Self {
        Self::new(vec![Segment::pulse(-2.1, 10e-3, true)])
    }

    /// +1 V for 10 ms with a fixed CML.
    pub fn reset_pulse() -> Self {
        Self::new(vec![Segment::pulse(1.0, 10e-3, false)])
    }

    /// Staircase from 0 V to `end` in 10 mV steps held `dwell` each.
    pub fn forming_ramp(end: f64, dwell: f64) -> Self {
        let points = ((end.abs() / 0.01).round() as usize).max(1) + 1;
        Self::new(vec![Segment::ramp(0.0, end, dwell * points as f64, points, true)])
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return invalid("waveform has no segments");
        }
        self.segments.iter().try_for_each(Segment::validate)
    }
}

/// Everything that stays fixed while a device is driven.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    pub mesh: Mesh,
    pub db: MaterialDb,
    pub bc: BoundaryConditions,
    pub solver: SolverConfig,
    pub compliance: ComplianceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    pub current: f64,
    pub peak_temperature: f64,
    pub total_vacancies: f64,
    /// Index of the constant-voltage level across the whole waveform.
    pub level: usize,
    /// Last sample of its level.
    pub level_end: bool,
    /// The compliance rule was active for this sample.
    pub compliance: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TraceResult {
    pub samples: Vec<TraceSample>,
    /// Field snapshots, each taken at a sample time.
    pub snapshots: Vec<(f64, FieldState)>,
    /// The run stopped early because the stop current was reached.
    pub stopped_early: bool,
}

impl TraceResult {
    pub fn peak_temperature(&self) -> f64 {
        self.samples.iter().map(|s| s.peak_temperature).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_current(&self) -> f64 {
        self.samples.iter().map(|s| s.current.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TransientOptions {
    /// Snapshot times, relative to the waveform start.
    pub snapshot_times: Vec<f64>,
    /// End the run at the first sample with `|I|` at or above this (A).
    pub stop_current: Option<f64>,
    pub physics: Physics,
    /// Upper bound on the step size, on top of the solver's `dt_max`.
    pub dt_cap: Option<f64>,
}

impl TransientOptions {
    pub fn with_physics(physics: Physics) -> Self {
        Self {
            physics,
            ..Self::default()
        }
    }
}

const DENSITY_REFERENCE_FRACTION: f64 = 1e-2;
const MAX_STEPS_PER_LEVEL: usize = 200_000;

fn density_change(mesh: &Mesh, old: &[f64], new: &[f64], n_ref: f64) -> f64 {
    let rows = mesh.oxide_rows();
    (rows.start * mesh.ny..rows.end * mesh.ny)
        .map(|c| (new[c] - old[c]).abs() / (old[c] + n_ref))
        .fold(0.0, f64::max)
}

fn recoverable(e: &SimError) -> bool {
    matches!(
        e,
        SimError::NonConvergence { .. } | SimError::Negativity { .. } | SimError::LinearSolve(_)
    )
}

/// Drives `state` through `wf`, recording one trace sample per accepted step.
///
/// Steps adapt so that the largest relative change of the vacancy density
/// stays near `solver.change_target`; steps that fail to converge are retried
/// at a quarter of the size down to `solver.dt_min`.
pub fn run_transient(
    dev: &DeviceModel,
    state: &mut FieldState,
    wf: &Waveform,
    opts: &TransientOptions,
) -> Result<TraceResult> {
    wf.validate()?;
    let cfg = &dev.solver;
    let n_ref = DENSITY_REFERENCE_FRACTION * dev.db.n_max;
    let t_start = state.time;
    let mut trace = TraceResult::default();
    let mut pending: Vec<f64> = opts.snapshot_times.clone();
    pending.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut field: Option<Vec<f64>> = None;
    let mut dt = cfg.dt_initial;
    let mut level_index = 0usize;

    for segment in &wf.segments {
        let compliance = segment.compliance();
        let cml = if compliance {
            dev.compliance.limiting()
        } else {
            dev.compliance.fixed()
        };
        let mut dt_max = cfg.dt_max;
        if let Some(s) = segment.sample_dt() {
            dt_max = dt_max.min(s);
        }
        if let Some(s) = opts.dt_cap {
            dt_max = dt_max.min(s);
        }
        for (v1, hold) in segment.levels() {
            let drive = Drive { v1, cml };
            let t_end = state.time + hold;
            dt = dt.max(cfg.dt_initial).min(dt_max);
            let mut steps = 0usize;
            while t_end - state.time > 1e-12 * hold {
                steps += 1;
                if steps > MAX_STEPS_PER_LEVEL {
                    return Err(SimError::StepCollapse {
                        time: state.time,
                        dt_min: cfg.dt_min,
                        source: Box::new(SimError::InvalidInput("step budget exhausted".into())),
                    });
                }
                let remaining = t_end - state.time;
                let step = if dt >= remaining * (1.0 - 1e-9) { remaining } else { dt.min(remaining) };
                let outcome = match coupled_step(
                    &dev.mesh,
                    state,
                    field.as_deref(),
                    step,
                    drive,
                    &dev.bc,
                    &dev.db,
                    cfg,
                    opts.physics,
                ) {
                    Ok(o) => o,
                    Err(e) if recoverable(&e) => {
                        dt = step * 0.25;
                        debug!("t={:.6e}: retrying with dt={:.3e} after {e}", state.time, dt);
                        if dt < cfg.dt_min {
                            return Err(SimError::StepCollapse {
                                time: state.time,
                                dt_min: cfg.dt_min,
                                source: Box::new(e),
                            });
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let change = density_change(&dev.mesh, &state.n_d, &outcome.state.n_d, n_ref);
                let target = cfg.change_target;
                if change > 2.0 * target && step > cfg.dt_min * 4.0 {
                    dt = step * (0.5 * target / change).clamp(0.05, 0.5);
                    continue;
                }
                let grow = if change > 0.0 { (0.8 * target / change).clamp(0.3, 2.0) } else { 2.0 };
                if step == dt || step >= dt * (1.0 - 1e-9) {
                    dt = (step * grow).min(dt_max);
                } else {
                    dt = dt.max(step * grow).min(dt_max);
                }
                *state = outcome.state;
                let done = t_end - state.time <= 1e-12 * hold;
                let sample = TraceSample {
                    t: state.time,
                    v1: outcome.v1,
                    v2: outcome.v2,
                    current: outcome.current,
                    peak_temperature: outcome.peak_temperature,
                    total_vacancies: total_vacancies(state, &dev.mesh),
                    level: level_index,
                    level_end: done,
                    compliance,
                };
                trace.samples.push(sample);
                field = Some(outcome.field);
                while let Some(&ts) = pending.last() {
                    if state.time - t_start >= ts * (1.0 - 1e-12) {
                        trace.snapshots.push((state.time, state.clone()));
                        pending.pop();
                    } else {
                        break;
                    }
                }
                if let Some(stop) = opts.stop_current {
                    if outcome.current.abs() >= stop {
                        trace.stopped_early = true;
                        if let Some(last) = trace.samples.last_mut() {
                            last.level_end = true;
                        }
                        return Ok(trace);
                    }
                }
            }
            level_index += 1;
        }
    }
    Ok(trace)
}

/// Quasi-static current-voltage curve: `(v2, current)` at the end of every
/// staircase level.
pub fn dc_sweep(
    dev: &DeviceModel,
    state: &mut FieldState,
    ramp: &Waveform,
    opts: &TransientOptions,
) -> Result<Vec<(f64, f64)>> {
    let trace = run_transient(dev, state, ramp, opts)?;
    Ok(trace
        .samples
        .iter()
        .filter(|s| s.level_end)
        .map(|s| (s.v2, s.current))
        .collect())
}

/// Smallest current resolved by a read (A).
pub const READ_CURRENT_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resistance {
    pub ohms: f64,
    /// The read current fell below [`READ_CURRENT_FLOOR`]; `ohms` is the
    /// bound implied by the floor.
    pub overflow: bool,
}

/// Resistance of the memristor stack (BE to TE top, CML excluded) at
/// `v_read`, with frozen vacancies and the device at ambient temperature.
pub fn read_resistance(dev: &DeviceModel, state: &FieldState, v_read: f64) -> Result<Resistance> {
    let temp = vec![AMBIENT_TEMPERATURE; dev.mesh.n_cells()];
    let sol = solve_potential(&dev.mesh, &state.n_d, &temp, None, Drive::bypass(v_read), &dev.db, &dev.solver)?;
    if sol.current.abs() < READ_CURRENT_FLOOR {
        return Ok(Resistance {
            ohms: v_read.abs() / READ_CURRENT_FLOOR,
            overflow: true,
        });
    }
    Ok(Resistance {
        ohms: (v_read / sol.current).abs(),
        overflow: false,
    })
}

/// Seeded multiplicative perturbation of the switching-layer density applied
/// at the start of every set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleNoiseConfig {
    pub seed: u64,
    /// Standard deviation of the underlying normal (log space).
    pub amplitude: f64,
}

/// Noise amplitude calibrated so that the baseline HRS spread over 20
/// cycles is close to 0.059.
pub const DEFAULT_NOISE_AMPLITUDE: f64 = 0.15;

impl Default for CycleNoiseConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            amplitude: DEFAULT_NOISE_AMPLITUDE,
        }
    }
}

impl CycleNoiseConfig {
    /// Mean-preserving lognormal factors on every switching-layer cell.
    pub fn perturb(&self, mesh: &Mesh, state: &mut FieldState, cycle: usize) {
        if self.amplitude <= 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(cycle as u64 + 1);
        let s = self.amplitude;
        let rows = mesh.rows_of(Region::Switch);
        for c in rows.start * mesh.ny..rows.end * mesh.ny {
            let z: f64 = StandardNormal.sample(&mut rng);
            state.n_d[c] *= (s * z - 0.5 * s * s).exp();
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CycleResult {
    pub r_lrs: Vec<f64>,
    pub r_hrs: Vec<f64>,
    pub set_traces: Vec<TraceResult>,
    pub reset_traces: Vec<TraceResult>,
}

/// Alternates set and reset `n` times, reading the resistance after each.
#[allow(clippy::too_many_arguments)]
pub fn run_cycles(
    dev: &DeviceModel,
    state: &mut FieldState,
    set_wf: &Waveform,
    reset_wf: &Waveform,
    n: usize,
    noise: &CycleNoiseConfig,
    v_read: f64,
    keep_traces: bool,
) -> Result<CycleResult> {
    if n == 0 {
        return invalid("run_cycles needs at least one cycle");
    }
    let mut out = CycleResult::default();
    let opts = TransientOptions::default();
    for cycle in 0..n {
        let tag = |e: SimError| SimError::Cycle {
            cycle,
            source: Box::new(e),
        };
        noise.perturb(&dev.mesh, state, cycle);
        let set = run_transient(dev, state, set_wf, &opts).map_err(tag)?;
        out.r_lrs.push(read_resistance(dev, state, v_read).map_err(tag)?.ohms);
        let reset = run_transient(dev, state, reset_wf, &opts).map_err(tag)?;
        out.r_hrs.push(read_resistance(dev, state, v_read).map_err(tag)?.ohms);
        debug!(
            "cycle {cycle}: R_LRS={:.4e} R_HRS={:.4e}",
            out.r_lrs[cycle], out.r_hrs[cycle]
        );
        if keep_traces {
            out.set_traces.push(set);
            out.reset_traces.push(reset);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compliance_rule_values() {
        let (w, d, h) = (40e-9, 20e-9, 10e-9);
        let e_max = cml_switchover_field(500e-6, 1e5, w, d);
        assert_relative_eq!(e_max, 6.25e6, max_relative = 1e-12);
        assert_relative_eq!(cml_conductance(500e-6, -1.0, 0.0, w, d, h, 1e5), 6250.0, max_relative = 1e-12);
        let v = e_max * h;
        assert_relative_eq!(v, 0.0625, max_relative = 1e-12);
        assert_relative_eq!(cml_conductance(500e-6, v, 0.0, w, d, h, 1e5), 1e5, max_relative = 1e-12);
        assert_eq!(cml_conductance(500e-6, 0.3, 0.3, w, d, h, 1e5), 1e5);
        assert_eq!(cml_conductance(500e-6, 0.01, 0.0, w, d, h, 1e5), 1e5);
    }

    #[test]
    fn compliance_rule_scales_with_current() {
        let (w, d, h) = (40e-9, 20e-9, 10e-9);
        let a = cml_conductance(500e-6, -2.0, -0.5, w, d, h, 1e5);
        let b = cml_conductance(1000e-6, -2.0, -0.5, w, d, h, 1e5);
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn ramp_levels_include_endpoints() {
        let seg = Segment::ramp(0.0, -1.0, 1e-3, 11, true);
        let levels = seg.levels();
        assert_eq!(levels.len(), 11);
        assert_eq!(levels[0].0, 0.0);
        assert_eq!(levels[10].0, -1.0);
        assert_relative_eq!(levels.iter().map(|l| l.1).sum::<f64>(), 1e-3, max_relative = 1e-12);
        let wf = Waveform::forming_ramp(-2.5, 1e-4);
        assert_eq!(wf.segments[0].levels().len(), 251);
    }

    #[test]
    fn waveform_validation() {
        assert!(Waveform::new(vec![]).validate().is_err());
        assert!(Waveform::new(vec![Segment::pulse(1.0, 0.0, true)]).validate().is_err());
        assert!(Waveform::forming_pulse().validate().is_ok());
    }
}
