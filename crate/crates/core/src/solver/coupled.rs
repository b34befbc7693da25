//! Gummel iteration over one time step.

use log::trace;

use crate::error::{Result, SimError};
use crate::materials::MaterialDb;
use crate::mesh::{FieldState, Mesh, Region};

use super::heat::step_heat;
use super::potential::{joule_source, solve_potential, Drive};
use super::transport::step_transport;
use super::{BoundaryConditions, Physics, SolverConfig};

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FieldState,
    /// Terminal current (A).
    pub current: f64,
    pub v1: f64,
    pub v2: f64,
    pub sigma_cml: f64,
    pub peak_temperature: f64,
    /// Field magnitude per cell at the end of the step (V/m).
    pub field: Vec<f64>,
    pub iterations: usize,
}

pub fn peak_temperature(temp: &[f64]) -> f64 {
    temp.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Advances `state` by `dt` under `drive`.
///
/// Each outer iteration solves current continuity (which also settles the CML
/// conductivity), evaluates the Joule source, takes an implicit heat step and
/// an implicit transport step, and repeats until the terminal current and the
/// peak temperature change by less than `cfg.outer_tol`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_step(
    mesh: &Mesh,
    state: &FieldState,
    field_guess: Option<&[f64]>,
    dt: f64,
    drive: Drive,
    bc: &BoundaryConditions,
    db: &MaterialDb,
    cfg: &SolverConfig,
    physics: Physics,
) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let cml_rows = mesh.rows_of(Region::Cml);
    let mut n_it = state.n_d.clone();
    let mut t_it = state.temperature.clone();
    let mut field: Option<Vec<f64>> = field_guess.map(|f| f.to_vec());
    let mut prev: Option<(f64, f64)> = None;
    let mut trace_log = Vec::new();

    for it in 1..=cfg.outer_max_iters {
        let pot = solve_potential(mesh, &n_it, &t_it, field.as_deref(), drive, db, cfg)?;
        let mut q = joule_source(&pot.sigma, &pot.field);
        // the CML stands in for the access device; its dissipation is not
        // deposited in the stack
        for c in cml_rows.start * mesh.ny..cml_rows.end * mesh.ny {
            q[c] = 0.0;
        }
        let t_new = if physics.heat {
            step_heat(mesh, &n_it, &state.temperature, &t_it, &q, dt, bc, db, cfg.linear_tol)?
        } else {
            state.temperature.clone()
        };
        let n_new = if physics.transport {
            step_transport(mesh, &state.n_d, &pot.psi, &t_new, dt, db, cfg.linear_tol)?
        } else {
            state.n_d.clone()
        };
        let t_peak = peak_temperature(&t_new);

        let converged = match prev {
            Some((i_prev, tp_prev)) => {
                let di = (pot.current - i_prev).abs() / pot.current.abs().max(cfg.current_floor);
                let dtp = (t_peak - tp_prev).abs() / t_peak;
                trace_log.push(di.max(dtp));
                di <= cfg.outer_tol && dtp <= cfg.outer_tol
            }
            None => false,
        };
        prev = Some((pot.current, t_peak));
        n_it = n_new;
        t_it = t_new;

        if converged {
            trace!(
                "step t={:.6e} dt={:.3e} v1={:.4} v2={:.4} i={:.4e} tpeak={:.1} iters={}",
                state.time,
                dt,
                pot.v1,
                pot.v2,
                pot.current,
                t_peak,
                it
            );
            return Ok(StepOutcome {
                state: FieldState {
                    n_d: n_it,
                    temperature: t_it,
                    psi: pot.psi,
                    time: state.time + dt,
                },
                current: pot.current,
                v1: pot.v1,
                v2: pot.v2,
                sigma_cml: pot.sigma_cml,
                peak_temperature: t_peak,
                field: pot.field,
                iterations: it,
            });
        }
        field = Some(pot.field);
    }
    Err(SimError::NonConvergence {
        stage: "Gummel loop",
        iterations: cfg.outer_max_iters,
        residual: trace_log.last().copied().unwrap_or(f64::NAN),
        trace: trace_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, initial_state, total_vacancies, DeviceGeometry, Resolution};

    #[test]
    fn zero_drive_carries_no_current_and_conserves() {
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
        let db = MaterialDb::default();
        let s = initial_state(&m, &db);
        let out = coupled_step(
            &m,
            &s,
            None,
            1e-3,
            Drive::bypass(0.0),
            &BoundaryConditions::default(),
            &db,
            &SolverConfig::default(),
            Physics::default(),
        )
        .unwrap();
        assert_eq!(out.current, 0.0);
        assert_eq!(out.state.time, 1e-3);
        // only diffusion across the reservoir step acts
        let before = total_vacancies(&s, &m);
        let after = total_vacancies(&out.state, &m);
        assert!((after - before).abs() <= 1e-10 * before);
        for t in &out.state.temperature {
            assert!((t - 300.0).abs() < 1e-9);
        }
    }
}
