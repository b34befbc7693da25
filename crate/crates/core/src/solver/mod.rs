//! Discretisation and solution of the coupled vacancy, current and heat
//! equations on the structured mesh.

mod coupled;
pub(crate) mod fv;
mod heat;
mod potential;
mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mesh::AMBIENT_TEMPERATURE;

pub use coupled::{coupled_step, peak_temperature, StepOutcome};
pub use fv::Dirichlet;
pub use heat::{heat_capacity_field, solve_heat_step, step_heat, thermal_conductivity_field};
pub use potential::{
    cell_current_density, joule_source, solve_conduction, solve_potential, static_conductivity, CmlMode,
    ConductionSolution, Drive, PotentialSolution,
};
pub use transport::{bernoulli, solve_transport_step, step_transport, FaceCoefficients};

/// Which equations advance in time. Frozen fields keep their current values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Physics {
    pub transport: bool,
    pub heat: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            transport: true,
            heat: true,
        }
    }
}

impl Physics {
    /// Electrical solve only.
    pub fn frozen() -> Self {
        Self {
            transport: false,
            heat: false,
        }
    }
}

/// Thermal boundary conditions. The electrical ones are fixed: the BE bottom
/// is grounded, the drive is applied on the CML top, and lateral walls are
/// insulating for current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConditions {
    /// Temperature held on the BE bottom and CML top faces (K).
    pub ambient: f64,
    /// Also hold the lateral faces of the BE, TE and CML at `ambient`.
    /// Oxide side walls are always adiabatic.
    pub electrode_walls_isothermal: bool,
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        Self {
            ambient: AMBIENT_TEMPERATURE,
            electrode_walls_isothermal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// First time step tried in each constant-voltage interval (s).
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Relative change of terminal current and peak temperature that ends the
    /// Gummel loop.
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    /// Accepted relative residual of every linear solve.
    pub linear_tol: f64,
    /// Relaxation applied to conductivity updates in the field-dependent loop.
    pub damping: f64,
    /// Target for the largest relative density change per step.
    pub change_target: f64,
    /// Current below which relative convergence is measured against this floor (A).
    pub current_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-9,
            dt_min: 1e-15,
            dt_max: 1e-3,
            outer_tol: 1e-6,
            outer_max_iters: 50,
            linear_tol: 1e-10,
            damping: 0.7,
            change_target: 0.1,
            current_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt_initial", self.dt_initial),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("outer_tol", self.outer_tol),
            ("linear_tol", self.linear_tol),
            ("change_target", self.change_target),
            ("current_floor", self.current_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("solver `{name}` must be positive, got {v}"));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return invalid(format!("solver damping must lie in (0, 1], got {}", self.damping));
        }
        if self.outer_max_iters == 0 {
            return invalid("solver outer_max_iters must be at least 1");
        }
        if self.dt_min > self.dt_max {
            return invalid("solver dt_min exceeds dt_max");
        }
        Ok(())
    }
}
