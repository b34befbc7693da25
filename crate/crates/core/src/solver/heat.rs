//! Backward-Euler step of the heat equation with Joule source.

use crate::error::{Result, SimError};
use crate::linalg::relative_residual;
use crate::materials::MaterialDb;
use crate::mesh::{Mesh, Region, RowRange};

use super::fv::{assemble_diffusion, scatter, Dirichlet};
use super::BoundaryConditions;

/// Volumetric heat capacity per cell (J/m^3/K). The CML takes Pd values.
pub fn heat_capacity_field(mesh: &Mesh, db: &MaterialDb) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|c| {
            if mesh.region_of(c).is_oxide() {
                db.oxide_heat_capacity()
            } else {
                db.pd.heat_capacity()
            }
        })
        .collect()
}

/// Thermal conductivity per cell (W/m/K). The CML takes Pd values.
pub fn thermal_conductivity_field(mesh: &Mesh, n_d: &[f64], temp: &[f64], db: &MaterialDb) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|c| {
            if mesh.region_of(c).is_oxide() {
                db.thermal_conductivity(n_d[c], temp[c])
            } else {
                db.pd.k_th
            }
        })
        .collect()
}

/// One implicit step of `C dT/dt - div(k grad T) = q` over `rows`.
#[allow(clippy::too_many_arguments)]
pub fn solve_heat_step(
    mesh: &Mesh,
    rows: RowRange,
    capacity: &[f64],
    conductivity: &[f64],
    source: &[f64],
    t_old: &[f64],
    dt: f64,
    bc: &Dirichlet<'_>,
    linear_tol: f64,
) -> Result<Vec<f64>> {
    let (mut a, mut rhs) = assemble_diffusion(mesh, rows, conductivity, bc);
    for j in rows.start..rows.end {
        for i in 0..mesh.ny {
            let c = mesh.index(i, j);
            let p = c - rows.start * mesh.ny;
            let vol = mesh.cell_volume(i, j);
            let m = capacity[c] * vol / dt;
            a.add(p, p, m);
            rhs[p] += m * t_old[c] + source[c] * vol;
        }
    }
    let x = a.clone().solve(&rhs)?;
    let residual = relative_residual(&a, &x, &rhs);
    if residual > linear_tol {
        return Err(SimError::LinearSolve(format!(
            "heat residual {residual:.3e} above tolerance {linear_tol:.1e}"
        )));
    }
    let mut out = t_old.to_vec();
    scatter(mesh, rows, &x, &mut out);
    Ok(out)
}

/// Heat step for the whole stack with thermal conductivity lagged at `t_lag`.
#[allow(clippy::too_many_arguments)]
pub fn step_heat(
    mesh: &Mesh,
    n_d: &[f64],
    t_old: &[f64],
    t_lag: &[f64],
    source: &[f64],
    dt: f64,
    bc: &BoundaryConditions,
    db: &MaterialDb,
    linear_tol: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidInput(format!("heat step needs dt > 0, got {dt}")));
    }
    let capacity = heat_capacity_field(mesh, db);
    let k = thermal_conductivity_field(mesh, n_d, t_lag, db);
    let ambient = bc.ambient;
    let walls = bc.electrode_walls_isothermal;
    let lateral = |j: usize| -> Option<f64> {
        (walls && mesh.row_region[j] != Region::Reservoir && mesh.row_region[j] != Region::Switch).then_some(ambient)
    };
    let dirichlet = Dirichlet {
        bottom: Some(ambient),
        top: Some(ambient),
        lateral: &lateral,
    };
    solve_heat_step(mesh, mesh.all_rows(), &capacity, &k, source, t_old, dt, &dirichlet, linear_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, initial_state, DeviceGeometry, Resolution};

    #[test]
    fn zero_source_keeps_ambient() {
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
        let db = MaterialDb::default();
        let s = initial_state(&m, &db);
        let q = vec![0.0; m.n_cells()];
        let t = step_heat(&m, &s.n_d, &s.temperature, &s.temperature, &q, 1e-6, &BoundaryConditions::default(), &db, 1e-10)
            .unwrap();
        for v in t {
            assert!((v - 300.0).abs() < 1e-9);
        }
    }

    #[test]
    fn positive_source_never_cools() {
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
        let db = MaterialDb::default();
        let s = initial_state(&m, &db);
        let q: Vec<f64> = (0..m.n_cells()).map(|c| 1e18 * (1.0 + (c % 7) as f64)).collect();
        let t = step_heat(&m, &s.n_d, &s.temperature, &s.temperature, &q, 1e-3, &BoundaryConditions::default(), &db, 1e-10)
            .unwrap();
        assert!(t.iter().all(|&v| v >= 300.0));
        assert!(t.iter().any(|&v| v > 301.0));
    }

    #[test]
    fn rejects_non_positive_dt() {
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
        let db = MaterialDb::default();
        let s = initial_state(&m, &db);
        let q = vec![0.0; m.n_cells()];
        let r = step_heat(&m, &s.n_d, &s.temperature, &s.temperature, &q, 0.0, &BoundaryConditions::default(), &db, 1e-10);
        assert!(r.is_err());
    }
}
