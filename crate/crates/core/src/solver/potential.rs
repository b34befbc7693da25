//! Current continuity, the field-dependent conductivity loop and the CML.

use log::trace;

use crate::error::{Result, SimError};
use crate::linalg::relative_residual;
use crate::materials::MaterialDb;
use crate::mesh::{Mesh, Region, RowRange};
use crate::protocol::cml_conductance;

use super::fv::{assemble_diffusion, g_half_vertical, g_horizontal, g_vertical, scatter, Dirichlet};
use super::SolverConfig;

/// Linear conduction solution over a row range.
#[derive(Debug, Clone)]
pub struct ConductionSolution {
    /// Potential per global cell; cells outside the solved rows are zero.
    pub psi: Vec<f64>,
    /// Current leaving through the bottom face (A). Positive when the top is
    /// at the higher potential.
    pub current: f64,
    pub residual: f64,
}

/// Solves `div(sigma grad psi) = 0` on `rows` with `psi = v_bottom` on the
/// bottom face, `psi = v_top` on the top face and insulating side walls.
pub fn solve_conduction(
    mesh: &Mesh,
    rows: RowRange,
    sigma: &[f64],
    v_bottom: f64,
    v_top: f64,
    linear_tol: f64,
) -> Result<ConductionSolution> {
    let bc = Dirichlet::vertical(v_bottom, v_top);
    let (a, rhs) = assemble_diffusion(mesh, rows, sigma, &bc);
    let x = a.clone().solve(&rhs)?;
    let residual = relative_residual(&a, &x, &rhs);
    if residual > linear_tol {
        return Err(SimError::LinearSolve(format!(
            "potential residual {residual:.3e} above tolerance {linear_tol:.1e}"
        )));
    }
    let mut psi = vec![0.0; mesh.n_cells()];
    scatter(mesh, rows, &x, &mut psi);
    let current = (0..mesh.ny)
        .map(|i| g_half_vertical(mesh, sigma, i, rows.start) * (psi[mesh.index(i, rows.start)] - v_bottom))
        .sum();
    Ok(ConductionSolution { psi, current, residual })
}

/// Cell-averaged current density `[j_y, j_z]` (A/m^2) over `rows`.
///
/// Face fluxes are continuous across material interfaces, so averaging them
/// gives a cell value that stays accurate where `sigma` jumps.
pub fn cell_current_density(
    mesh: &Mesh,
    rows: RowRange,
    sigma: &[f64],
    psi: &[f64],
    v_bottom: f64,
    v_top: f64,
) -> Vec<[f64; 2]> {
    let ny = mesh.ny;
    let mut j_cell = vec![[0.0; 2]; mesh.n_cells()];
    for j in rows.start..rows.end {
        for i in 0..ny {
            let c = mesh.index(i, j);
            let area_z = mesh.dy(i) * mesh.depth();
            let below = if j == rows.start {
                g_half_vertical(mesh, sigma, i, j) * (v_bottom - psi[c])
            } else {
                g_vertical(mesh, sigma, i, j - 1) * (psi[mesh.index(i, j - 1)] - psi[c])
            };
            let above = if j + 1 == rows.end {
                g_half_vertical(mesh, sigma, i, j) * (psi[c] - v_top)
            } else {
                g_vertical(mesh, sigma, i, j) * (psi[c] - psi[mesh.index(i, j + 1)])
            };
            let area_y = mesh.dz(j) * mesh.depth();
            let left = if i == 0 {
                0.0
            } else {
                g_horizontal(mesh, sigma, i - 1, j) * (psi[mesh.index(i - 1, j)] - psi[c])
            };
            let right = if i + 1 == ny {
                0.0
            } else {
                g_horizontal(mesh, sigma, i, j) * (psi[c] - psi[mesh.index(i + 1, j)])
            };
            j_cell[c] = [0.5 * (left + right) / area_y, 0.5 * (below + above) / area_z];
        }
    }
    j_cell
}

/// Joule power density `sigma |E|^2` per cell (W/m^3).
pub fn joule_source(sigma: &[f64], field: &[f64]) -> Vec<f64> {
    sigma.iter().zip(field).map(|(s, e)| s * e * e).collect()
}

/// How the CML between the drive terminal and the TE behaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CmlMode {
    /// Compliance rule: the CML limits the current to `i_cc`.
    Limiting { i_cc: f64, sigma_base: f64 },
    /// Fixed conductivity, as during reset.
    Fixed { sigma: f64 },
    /// The drive is applied directly on the TE top face.
    Bypass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Voltage on the CML top face, or on the TE top when bypassed (V).
    pub v1: f64,
    pub cml: CmlMode,
}

impl Drive {
    pub fn bypass(v: f64) -> Self {
        Self {
            v1: v,
            cml: CmlMode::Bypass,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSolution {
    pub psi: Vec<f64>,
    /// Field magnitude per cell (V/m).
    pub field: Vec<f64>,
    /// Conductivity per cell used in the final solve (S/m).
    pub sigma: Vec<f64>,
    /// Terminal current (A), same sign as the drive.
    pub current: f64,
    pub v1: f64,
    /// Effective voltage on the TE top (V).
    pub v2: f64,
    pub sigma_cml: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Conductivity without the Poole-Frenkel term: oxide Arrhenius law, fixed
/// Pd values elsewhere. CML cells are left at zero.
pub fn static_conductivity(mesh: &Mesh, n_d: &[f64], temp: &[f64], db: &MaterialDb) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|c| match mesh.region_of(c) {
            Region::Reservoir | Region::Switch => db.sigma_oxide(n_d[c], temp[c], 0.0),
            Region::BottomElectrode | Region::TopElectrode => db.pd.sigma,
            Region::Cml => 0.0,
        })
        .collect()
}

/// Solves current continuity for the device under `drive`.
///
/// The oxide conductivity depends on the local field through the
/// Poole-Frenkel term, so the linear solve is wrapped in a damped Picard loop
/// that stops once the terminal current changes by less than
/// `cfg.outer_tol`. For a frozen conductivity the device is linear, and the
/// TE/CML interface is treated as one node: the device conductance from a
/// unit solve fixes `v2` through the series CML rule exactly.
pub fn solve_potential(
    mesh: &Mesh,
    n_d: &[f64],
    temp: &[f64],
    field_guess: Option<&[f64]>,
    drive: Drive,
    db: &MaterialDb,
    cfg: &SolverConfig,
) -> Result<PotentialSolution> {
    let rows = mesh.device_rows();
    let base = static_conductivity(mesh, n_d, temp, db);
    let is_oxide: Vec<bool> = (0..mesh.n_cells()).map(|c| mesh.region_of(c).is_oxide()).collect();
    let with_pf = |field: &[f64]| -> Vec<f64> {
        base.iter()
            .enumerate()
            .map(|(c, &s)| if is_oxide[c] { s + db.pf_term(field[c], temp[c]) } else { s })
            .collect()
    };

    let zeros;
    let guess = match field_guess {
        Some(f) => f,
        None => {
            zeros = vec![0.0; mesh.n_cells()];
            &zeros
        }
    };
    let mut sigma = with_pf(guess);
    let mut prev_current: Option<f64> = None;
    let mut trace = Vec::new();

    for it in 1..=cfg.outer_max_iters {
        let unit = solve_conduction(mesh, rows, &sigma, 0.0, 1.0, cfg.linear_tol)?;
        let g_dev = unit.current;
        let (v2, sigma_cml) = series_node_voltage(mesh, drive, g_dev);
        let psi_dev: Vec<f64> = unit.psi.iter().map(|p| p * v2).collect();
        let current = g_dev * v2;

        let j_cell = cell_current_density(mesh, rows, &sigma, &psi_dev, 0.0, v2);
        let field: Vec<f64> = (0..mesh.n_cells())
            .map(|c| {
                if rows.contains(c / mesh.ny) {
                    let [jy, jz] = j_cell[c];
                    (jy * jy + jz * jz).sqrt() / sigma[c]
                } else {
                    0.0
                }
            })
            .collect();

        let scale = current.abs().max(cfg.current_floor);
        let change = prev_current.map(|p| (current - p).abs() / scale);
        if let Some(ch) = change {
            trace.push(ch);
        }
        let fresh = with_pf(&field);
        let sigma_shift = fresh
            .iter()
            .zip(&sigma)
            .map(|(a, b)| if *b > 0.0 { (a - b).abs() / b } else { 0.0 })
            .fold(0.0, f64::max);

        let converged = change.map_or(false, |ch| ch <= cfg.outer_tol) || sigma_shift <= 1e-2 * cfg.outer_tol;
        if converged {
            trace!("field loop converged: iters={it} i={current:.4e} shift={sigma_shift:.2e}");
            return Ok(finish(mesh, drive, psi_dev, field, sigma, current, v2, sigma_cml, unit.residual, it));
        }
        prev_current = Some(current);
        let w = cfg.damping;
        for (s, f) in sigma.iter_mut().zip(&fresh) {
            *s += w * (f - *s);
        }
    }
    Err(SimError::NonConvergence {
        stage: "field-dependent conductivity loop",
        iterations: cfg.outer_max_iters,
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

/// Voltage on the TE top and the CML conductivity for a device of linear
/// conductance `g_dev` in series with the CML.
fn series_node_voltage(mesh: &Mesh, drive: Drive, g_dev: f64) -> (f64, f64) {
    let g = &mesh.geometry;
    let (w, d, h) = (g.width, g.depth, g.t_cml);
    let v1 = drive.v1;
    match drive.cml {
        CmlMode::Bypass => (v1, f64::NAN),
        CmlMode::Fixed { sigma } => {
            let g_cml = sigma * w * d / h;
            (v1 * g_cml / (g_cml + g_dev), sigma)
        }
        CmlMode::Limiting { i_cc, sigma_base } => {
            let g_cml = sigma_base * w * d / h;
            let v2_linear = v1 * g_cml / (g_cml + g_dev);
            let v2 = if ((v1 - v2_linear) * g_cml).abs() <= i_cc {
                v2_linear
            } else {
                v1.signum() * i_cc / g_dev
            };
            (v2, cml_conductance(i_cc, v1, v2, w, d, h, sigma_base))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mesh: &Mesh,
    drive: Drive,
    mut psi: Vec<f64>,
    mut field: Vec<f64>,
    mut sigma: Vec<f64>,
    current: f64,
    v2: f64,
    sigma_cml: f64,
    residual: f64,
    iterations: usize,
) -> PotentialSolution {
    let cml = mesh.rows_of(Region::Cml);
    let z0 = mesh.z_faces[cml.start];
    let h = mesh.geometry.t_cml;
    let v1 = if matches!(drive.cml, CmlMode::Bypass) { v2 } else { drive.v1 };
    let e_cml = (v1 - v2).abs() / h;
    for j in cml.start..cml.end {
        let s = (mesh.z_centers[j] - z0) / h;
        for i in 0..mesh.ny {
            let c = mesh.index(i, j);
            psi[c] = v2 + (v1 - v2) * s;
            field[c] = e_cml;
            sigma[c] = sigma_cml;
        }
    }
    PotentialSolution {
        psi,
        field,
        sigma,
        current,
        v1,
        v2,
        sigma_cml,
        residual,
        iterations,
    }
}
