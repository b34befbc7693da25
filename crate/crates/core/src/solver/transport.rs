//! Vacancy continuity with Fick, drift and Soret fluxes.
//!
//! Drift and thermodiffusion combine into one face velocity
//! `w = v - D S dT/dx`, and each face flux uses the exponentially fitted
//! (Scharfetter-Gummel) form
//!
//! ```text
//! F = D/h * (B(-Pe) n_left - B(Pe) n_right),   Pe = w h / D
//! ```
//!
//! with `B(x) = x / (exp(x) - 1)`. The implicit system is an M-matrix, which
//! keeps densities non-negative, and every face flux enters its two cells
//! with opposite signs, which conserves the vacancy count.

use crate::error::{Result, SimError};
use crate::linalg::{relative_residual, BandedMatrix};
use crate::materials::MaterialDb;
use crate::mesh::{Mesh, RowRange};

/// Bernoulli function `x / (exp(x) - 1)`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else if x > 700.0 {
        x * (-x).exp()
    } else {
        x / x.exp_m1()
    }
}

/// Coefficients `(c_out, c_in)` with `F = c_out n_left - c_in n_right`,
/// per unit area.
#[inline]
fn sg_coefficients(d: f64, w: f64, h: f64) -> (f64, f64) {
    if d > 0.0 {
        let pe = w * h / d;
        (d / h * bernoulli(-pe), d / h * bernoulli(pe))
    } else {
        (w.max(0.0), (-w).max(0.0))
    }
}

/// Face diffusivity and velocity, `(D, w)`, with `w` positive toward
/// increasing index.
pub type FaceCoefficients<'a> = &'a dyn Fn(usize, usize) -> (f64, f64);

/// One backward-Euler step of `dn/dt + div F = s` on `rows` with zero flux
/// through every outer face.
///
/// `vertical(i, j)` describes the face between rows `j` and `j + 1`,
/// `horizontal(i, j)` the face between columns `i` and `i + 1`.
#[allow(clippy::too_many_arguments)]
pub fn solve_transport_step(
    mesh: &Mesh,
    rows: RowRange,
    n_old: &[f64],
    dt: f64,
    vertical: FaceCoefficients<'_>,
    horizontal: FaceCoefficients<'_>,
    source: Option<&[f64]>,
    linear_tol: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidInput(format!("transport step needs dt > 0, got {dt}")));
    }
    let ny = mesh.ny;
    let n = rows.len() * ny;
    let mut a = BandedMatrix::zeros(n, ny);
    let mut rhs = vec![0.0; n];
    let couple = |a: &mut BandedMatrix, p: usize, q: usize, area: f64, (c_out, c_in): (f64, f64)| {
        a.add(p, p, area * c_out);
        a.add(p, q, -area * c_in);
        a.add(q, p, -area * c_out);
        a.add(q, q, area * c_in);
    };
    for j in rows.start..rows.end {
        let lj = j - rows.start;
        for i in 0..ny {
            let p = lj * ny + i;
            let c = mesh.index(i, j);
            let vol = mesh.cell_volume(i, j);
            a.add(p, p, vol / dt);
            rhs[p] = vol / dt * n_old[c] + source.map_or(0.0, |s| s[c] * vol);
            if j + 1 < rows.end {
                let h = mesh.z_centers[j + 1] - mesh.z_centers[j];
                let (d, w) = vertical(i, j);
                couple(&mut a, p, p + ny, mesh.dy(i) * mesh.depth(), sg_coefficients(d, w, h));
            }
            if i + 1 < ny {
                let h = mesh.y_centers[i + 1] - mesh.y_centers[i];
                let (d, w) = horizontal(i, j);
                couple(&mut a, p, p + 1, mesh.dz(j) * mesh.depth(), sg_coefficients(d, w, h));
            }
        }
    }
    let x = a.clone().solve(&rhs)?;
    let residual = relative_residual(&a, &x, &rhs);
    if residual > linear_tol {
        return Err(SimError::LinearSolve(format!(
            "transport residual {residual:.3e} above tolerance {linear_tol:.1e}"
        )));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = n_old.to_vec();
    for (p, &v) in x.iter().enumerate() {
        let c = rows.start * ny + p;
        if v < 0.0 {
            if v < -1e-10 * scale {
                return Err(SimError::Negativity { cell: c, value: v });
            }
            out[c] = 0.0;
        } else {
            out[c] = v;
        }
    }
    Ok(out)
}

/// Advances the oxide vacancy density by `dt` under the potential `psi`
/// and temperature `temp`. Electrode cells are left untouched.
#[allow(clippy::too_many_arguments)]
pub fn step_transport(
    mesh: &Mesh,
    n_old: &[f64],
    psi: &[f64],
    temp: &[f64],
    dt: f64,
    db: &MaterialDb,
    linear_tol: f64,
) -> Result<Vec<f64>> {
    let face = |c0: usize, c1: usize, h: f64| -> (f64, f64) {
        let t_face = 0.5 * (temp[c0] + temp[c1]);
        let d = db.diffusivity(t_face);
        let v = db.drift_velocity((psi[c1] - psi[c0]) / h, t_face);
        let thermo = -d * db.soret_coefficient(t_face) * (temp[c1] - temp[c0]) / h;
        (d, v + thermo)
    };
    let vertical = |i: usize, j: usize| {
        let h = mesh.z_centers[j + 1] - mesh.z_centers[j];
        face(mesh.index(i, j), mesh.index(i, j + 1), h)
    };
    let horizontal = |i: usize, j: usize| {
        let h = mesh.y_centers[i + 1] - mesh.y_centers[i];
        face(mesh.index(i, j), mesh.index(i + 1, j), h)
    };
    solve_transport_step(mesh, mesh.oxide_rows(), n_old, dt, &vertical, &horizontal, None, linear_tol)
}
