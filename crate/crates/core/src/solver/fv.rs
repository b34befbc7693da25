//! Two-point flux assembly shared by the potential and heat equations.

use crate::linalg::BandedMatrix;
use crate::mesh::{Mesh, RowRange};

/// Dirichlet values on the outer faces of a row range. `None` means the
/// face is insulating.
pub struct Dirichlet<'a> {
    pub bottom: Option<f64>,
    pub top: Option<f64>,
    /// Value on both lateral walls of a given row.
    pub lateral: &'a dyn Fn(usize) -> Option<f64>,
}

impl Dirichlet<'_> {
    pub fn vertical(bottom: f64, top: f64) -> Dirichlet<'static> {
        Dirichlet {
            bottom: Some(bottom),
            top: Some(top),
            lateral: &|_| None,
        }
    }
}

#[inline]
pub(crate) fn g_vertical(mesh: &Mesh, coef: &[f64], i: usize, j: usize) -> f64 {
    let area = mesh.dy(i) * mesh.depth();
    let c0 = coef[mesh.index(i, j)];
    let c1 = coef[mesh.index(i, j + 1)];
    area / (0.5 * mesh.dz(j) / c0 + 0.5 * mesh.dz(j + 1) / c1)
}

#[inline]
pub(crate) fn g_horizontal(mesh: &Mesh, coef: &[f64], i: usize, j: usize) -> f64 {
    let area = mesh.dz(j) * mesh.depth();
    let c0 = coef[mesh.index(i, j)];
    let c1 = coef[mesh.index(i + 1, j)];
    area / (0.5 * mesh.dy(i) / c0 + 0.5 * mesh.dy(i + 1) / c1)
}

/// Conductance from a cell center to its top or bottom face.
#[inline]
pub(crate) fn g_half_vertical(mesh: &Mesh, coef: &[f64], i: usize, j: usize) -> f64 {
    mesh.dy(i) * mesh.depth() * coef[mesh.index(i, j)] / (0.5 * mesh.dz(j))
}

#[inline]
pub(crate) fn g_half_horizontal(mesh: &Mesh, coef: &[f64], i: usize, j: usize) -> f64 {
    mesh.dz(j) * mesh.depth() * coef[mesh.index(i, j)] / (0.5 * mesh.dy(i))
}

/// Assembles `-div(coef grad u)` integrated over each cell of `rows`
/// together with the Dirichlet contributions to the right-hand side.
/// Unknowns are local: `(j - rows.start) * ny + i`.
pub(crate) fn assemble_diffusion(
    mesh: &Mesh,
    rows: RowRange,
    coef: &[f64],
    bc: &Dirichlet<'_>,
) -> (BandedMatrix, Vec<f64>) {
    let ny = mesh.ny;
    let n = rows.len() * ny;
    let mut a = BandedMatrix::zeros(n, ny);
    let mut rhs = vec![0.0; n];
    for j in rows.start..rows.end {
        let lj = j - rows.start;
        for i in 0..ny {
            let p = lj * ny + i;
            if j + 1 < rows.end {
                let g = g_vertical(mesh, coef, i, j);
                let q = p + ny;
                a.add(p, p, g);
                a.add(q, q, g);
                a.add(p, q, -g);
                a.add(q, p, -g);
            }
            if i + 1 < ny {
                let g = g_horizontal(mesh, coef, i, j);
                let q = p + 1;
                a.add(p, p, g);
                a.add(q, q, g);
                a.add(p, q, -g);
                a.add(q, p, -g);
            }
            if j == rows.start {
                if let Some(v) = bc.bottom {
                    let g = g_half_vertical(mesh, coef, i, j);
                    a.add(p, p, g);
                    rhs[p] += g * v;
                }
            }
            if j + 1 == rows.end {
                if let Some(v) = bc.top {
                    let g = g_half_vertical(mesh, coef, i, j);
                    a.add(p, p, g);
                    rhs[p] += g * v;
                }
            }
            if i == 0 || i + 1 == ny {
                if let Some(v) = (bc.lateral)(j) {
                    let g = g_half_horizontal(mesh, coef, i, j);
                    let walls = if ny == 1 { 2.0 } else { 1.0 };
                    a.add(p, p, walls * g);
                    rhs[p] += walls * g * v;
                }
            }
        }
    }
    (a, rhs)
}

/// Copies a local solution back into a global per-cell vector.
pub(crate) fn scatter(mesh: &Mesh, rows: RowRange, local: &[f64], global: &mut [f64]) {
    let off = rows.start * mesh.ny;
    global[off..off + local.len()].copy_from_slice(local);
}

