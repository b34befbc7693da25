//! Analytic and manufactured-solution checks of the discretisation.
//!
//! Used by the `validate` command and by the test suite.

use std::f64::consts::PI;

use crate::error::Result;
use crate::materials::MaterialDb;
use crate::mesh::{build_mesh, initial_state, total_vacancies, DeviceGeometry, Mesh, Region, Resolution};
use crate::solver::{
    coupled_step, solve_conduction, solve_heat_step, solve_transport_step, step_transport, BoundaryConditions,
    Dirichlet, Drive, Physics, SolverConfig,
};

const LINEAR_TOL: f64 = 1e-10;

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub limit: f64,
    /// `true` when `measured` must reach at least `limit`, otherwise at most.
    pub at_least: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, limit: f64) -> Self {
        Self {
            name,
            measured,
            limit,
            at_least: false,
        }
    }

    fn at_least(name: &'static str, measured: f64, limit: f64) -> Self {
        Self {
            name,
            measured,
            limit,
            at_least: true,
        }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.measured >= self.limit
        } else {
            self.measured <= self.limit
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = if self.at_least { ">=" } else { "<=" };
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<32} {:.4e} ({op} {:.1e})", self.name, self.measured, self.limit)
    }
}

/// Uniform conductor under 1 V: `(current relative error, max potential error in V)`.
pub fn laplace_uniform() -> Result<(f64, f64)> {
    let m = build_mesh(&DeviceGeometry::default(), &Resolution::default())?;
    let rows = m.device_rows();
    let sigma = vec![2.5e3; m.n_cells()];
    let sol = solve_conduction(&m, rows, &sigma, 0.0, 1.0, LINEAR_TOL)?;
    let length = m.z_faces[rows.end];
    let g = &m.geometry;
    let analytic = 2.5e3 * g.width * g.depth / length;
    let mut psi_err = 0.0f64;
    for j in rows.start..rows.end {
        for i in 0..m.ny {
            psi_err = psi_err.max((sol.psi[m.index(i, j)] - m.z_centers[j] / length).abs());
        }
    }
    Ok(((sol.current - analytic).abs() / analytic, psi_err))
}

/// Two-layer conductor against the series-resistance formula, relative error.
pub fn series_stack() -> Result<f64> {
    let m = build_mesh(&DeviceGeometry::default(), &Resolution::default())?;
    let rows = m.device_rows();
    let (s_low, s_high) = (150.0, 1e7);
    let split = m.rows_of(Region::Switch).start;
    let sigma: Vec<f64> = (0..m.n_cells())
        .map(|c| if c / m.ny < split { s_high } else { s_low })
        .collect();
    let sol = solve_conduction(&m, rows, &sigma, 0.0, 1.0, LINEAR_TOL)?;
    let g = &m.geometry;
    let area = g.width * g.depth;
    let l_high = m.z_faces[split];
    let l_low = m.z_faces[rows.end] - l_high;
    let r = l_high / (s_high * area) + l_low / (s_low * area);
    Ok((sol.current * r - 1.0).abs())
}

/// Steady 1D conduction with a uniform source between two isothermal faces,
/// relative error of the peak rise against `q L^2 / 8k`.
pub fn heat_uniform_source() -> Result<f64> {
    let m = build_mesh(&DeviceGeometry::default(), &Resolution::default())?;
    let (q, k) = (1e17, 1.5);
    let capacity = vec![0.0; m.n_cells()];
    let conductivity = vec![k; m.n_cells()];
    let source = vec![q; m.n_cells()];
    let t0 = vec![300.0; m.n_cells()];
    let t = solve_heat_step(
        &m,
        m.all_rows(),
        &capacity,
        &conductivity,
        &source,
        &t0,
        1.0,
        &Dirichlet::vertical(300.0, 300.0),
        LINEAR_TOL,
    )?;
    let l = m.geometry.total_height();
    let expected = q * l * l / (8.0 * k);
    let peak = t.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - 300.0;
    Ok((peak - expected).abs() / expected)
}

/// Tall uniform column for 1D transport checks.
fn column(height: f64, spacing: f64) -> Result<Mesh> {
    let layer = height / 5.0;
    let g = DeviceGeometry {
        width: 4.0 * spacing,
        depth: 20e-9,
        t_be: layer,
        t_reservoir: layer,
        t_switch: layer,
        t_te: layer,
        t_cml: layer,
    };
    build_mesh(&g, &Resolution::uniform(spacing))
}

/// Spreading Gaussian under pure diffusion:
/// `(variance growth relative error, peak relative error)`.
pub fn gaussian_diffusion() -> Result<(f64, f64)> {
    let m = column(200e-9, 1e-9)?;
    let d = 1e-18;
    let (s0, s1) = (5e-9, 10e-9);
    let total_time = (s1 * s1 - s0 * s0) / (2.0 * d);
    let steps = 400;
    let dt = total_time / steps as f64;
    let zc = 100e-9;
    let mut n: Vec<f64> = (0..m.n_cells())
        .map(|c| {
            let z = m.z_centers[c / m.ny] - zc;
            (-(z * z) / (2.0 * s0 * s0)).exp()
        })
        .collect();
    let moments = |n: &[f64]| {
        let (mut s, mut s2) = (0.0, 0.0);
        for (c, v) in n.iter().enumerate() {
            let z = m.z_centers[c / m.ny] - zc;
            s += v;
            s2 += v * z * z;
        }
        s2 / s
    };
    let var0 = moments(&n);
    let coef = |_: usize, _: usize| (d, 0.0);
    for _ in 0..steps {
        n = solve_transport_step(&m, m.all_rows(), &n, dt, &coef, &coef, None, LINEAR_TOL)?;
    }
    let var1 = moments(&n);
    let growth = var1 - var0;
    let var_err = (growth - 2.0 * d * total_time).abs() / (2.0 * d * total_time);
    let peak = n.iter().fold(0.0f64, |a, &b| a.max(b));
    let expected = s0 / s1;
    Ok((var_err, (peak - expected).abs() / expected))
}

/// Largest per-step relative change of the vacancy count and the smallest
/// density seen, over `steps` zero-drive coupled steps followed by `steps`
/// strongly driven transport steps.
pub fn conservation(steps: usize) -> Result<(f64, f64)> {
    let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse())?;
    let db = MaterialDb::default();
    let cfg = SolverConfig::default();
    let bc = BoundaryConditions::default();
    let mut s = initial_state(&m, &db);
    let mut drift = 0.0f64;
    let mut min_n = f64::INFINITY;
    let mut total = total_vacancies(&s, &m);
    for _ in 0..steps {
        s = coupled_step(&m, &s, None, 1e-3, Drive::bypass(0.0), &bc, &db, &cfg, Physics::default())?.state;
        let now = total_vacancies(&s, &m);
        drift = drift.max((now - total).abs() / total);
        min_n = s.n_d.iter().fold(min_n, |a, &b| a.min(b));
        total = now;
    }
    let psi: Vec<f64> = (0..m.n_cells()).map(|c| -1.5e8 * m.z_centers[c / m.ny]).collect();
    let temp: Vec<f64> = (0..m.n_cells())
        .map(|c| 500.0 + 400.0 * (-(m.y_centered(c % m.ny) / 4e-9).powi(2)).exp())
        .collect();
    for _ in 0..steps {
        s.n_d = step_transport(&m, &s.n_d, &psi, &temp, 1e-7, &db, LINEAR_TOL)?;
        let now = total_vacancies(&s, &m);
        drift = drift.max((now - total).abs() / total);
        min_n = s.n_d.iter().fold(min_n, |a, &b| a.min(b));
        total = now;
    }
    Ok((drift, min_n))
}

/// Errors on a sequence of meshes and the fitted convergence order.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub spacing: Vec<f64>,
    pub error: Vec<f64>,
}

impl Convergence {
    /// Least-squares slope of `log(error)` against `log(spacing)`.
    pub fn order(&self) -> f64 {
        let xs: Vec<f64> = self.spacing.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = self.error.iter().map(|e| e.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        num / den
    }

    /// Orders between consecutive meshes.
    pub fn pairwise(&self) -> Vec<f64> {
        (1..self.error.len())
            .map(|k| (self.error[k - 1] / self.error[k]).ln() / (self.spacing[k - 1] / self.spacing[k]).ln())
            .collect()
    }
}

/// Mesh spacings of the manufactured-solution studies (m).
pub const MMS_SPACINGS: [f64; 3] = [2e-9, 1e-9, 0.5e-9];

/// Square-ish box with five equal 8 nm layers and uniform spacing.
fn mms_box(spacing: f64) -> Result<Mesh> {
    let g = DeviceGeometry {
        width: 32e-9,
        depth: 20e-9,
        t_be: 8e-9,
        t_reservoir: 8e-9,
        t_switch: 8e-9,
        t_te: 8e-9,
        t_cml: 8e-9,
    };
    build_mesh(&g, &Resolution::uniform(spacing))
}

fn rms(m: &Mesh, err: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    let mut v = 0.0;
    for j in 0..m.nz {
        for i in 0..m.ny {
            let vol = m.cell_volume(i, j);
            s += vol * err(m.index(i, j)).powi(2);
            v += vol;
        }
    }
    (s / v).sqrt()
}

/// Variable-coefficient steady conduction `-div(s grad u) = f` with
/// `u = sin(a z) cos(b y)` and `s = 2 + cos(b y) z / H`.
pub fn mms_potential() -> Result<Convergence> {
    let mut out = Convergence {
        spacing: vec![],
        error: vec![],
    };
    for h in MMS_SPACINGS {
        let m = mms_box(h)?;
        let (w, height) = (m.geometry.width, m.geometry.total_height());
        let (a, b) = (PI / height, PI / w);
        let at = |c: usize| (m.y_centers[c % m.ny], m.z_centers[c / m.ny]);
        let u = |y: f64, z: f64| (a * z).sin() * (b * y).cos();
        let sigma = |y: f64, z: f64| 2.0 + (b * y).cos() * z / height;
        let f = |y: f64, z: f64| {
            let uy = -b * (a * z).sin() * (b * y).sin();
            let uz = a * (a * z).cos() * (b * y).cos();
            let sy = -b * (b * y).sin() * z / height;
            let sz = (b * y).cos() / height;
            -sy * uy - sz * uz + sigma(y, z) * (a * a + b * b) * u(y, z)
        };
        let n = m.n_cells();
        let coef: Vec<f64> = (0..n).map(|c| sigma(at(c).0, at(c).1)).collect();
        let src: Vec<f64> = (0..n).map(|c| f(at(c).0, at(c).1)).collect();
        let zero = vec![0.0; n];
        let sol = solve_heat_step(
            &m,
            m.all_rows(),
            &zero,
            &coef,
            &src,
            &zero,
            1.0,
            &Dirichlet::vertical(0.0, 0.0),
            LINEAR_TOL,
        )?;
        out.spacing.push(h);
        out.error.push(rms(&m, |c| sol[c] - u(at(c).0, at(c).1)));
    }
    Ok(out)
}

/// Transient conduction with `T = 300 + A (1 + t/tau) sin(a z) cos(2 b y)`
/// and `k = 1.5 + sin^2(b y)`. Linear growth in time makes backward Euler
/// exact in time, leaving the spatial error.
pub fn mms_heat() -> Result<Convergence> {
    let mut out = Convergence {
        spacing: vec![],
        error: vec![],
    };
    let (amp, tau, cap) = (50.0, 1e-9, 2e6);
    let (dt, steps) = (0.5e-9, 4);
    for h in MMS_SPACINGS {
        let m = mms_box(h)?;
        let (w, height) = (m.geometry.width, m.geometry.total_height());
        let (a, b) = (PI / height, PI / w);
        let at = |c: usize| (m.y_centers[c % m.ny], m.z_centers[c / m.ny]);
        let phi = |y: f64, z: f64| (a * z).sin() * (2.0 * b * y).cos();
        let k = |y: f64, _z: f64| 1.5 + (b * y).sin().powi(2);
        let div_k_grad = |y: f64, z: f64| {
            let phi_y = -2.0 * b * (a * z).sin() * (2.0 * b * y).sin();
            let k_y = b * (2.0 * b * y).sin();
            k_y * phi_y - k(y, z) * (4.0 * b * b + a * a) * phi(y, z)
        };
        let exact = |y: f64, z: f64, t: f64| 300.0 + amp * (1.0 + t / tau) * phi(y, z);
        let n = m.n_cells();
        let capacity = vec![cap; n];
        let coef: Vec<f64> = (0..n).map(|c| k(at(c).0, at(c).1)).collect();
        let mut temp: Vec<f64> = (0..n).map(|c| exact(at(c).0, at(c).1, 0.0)).collect();
        for step in 1..=steps {
            let t = step as f64 * dt;
            let src: Vec<f64> = (0..n)
                .map(|c| {
                    let (y, z) = at(c);
                    cap * amp * phi(y, z) / tau - amp * (1.0 + t / tau) * div_k_grad(y, z)
                })
                .collect();
            temp = solve_heat_step(
                &m,
                m.all_rows(),
                &capacity,
                &coef,
                &src,
                &temp,
                dt,
                &Dirichlet::vertical(300.0, 300.0),
                LINEAR_TOL,
            )?;
        }
        let t_end = steps as f64 * dt;
        out.spacing.push(h);
        out.error.push(rms(&m, |c| temp[c] - exact(at(c).0, at(c).1, t_end)));
    }
    Ok(out)
}

/// Drift-dominated transport between two zero-flux faces with
/// `n = (1 + t/tau) exp(kappa z) (1 + cos(pi z / H) / 2)`, `kappa H = 30`.
/// Error is the largest cellwise relative error.
pub fn mms_transport() -> Result<Convergence> {
    let mut out = Convergence {
        spacing: vec![],
        error: vec![],
    };
    let d = 1e-18;
    let tau = 1.0;
    let (dt, steps) = (0.25, 4);
    for h in MMS_SPACINGS {
        let m = mms_box(h)?;
        let height = m.geometry.total_height();
        let kappa = 30.0 / height;
        let w = kappa * d;
        let p = PI / height;
        let phi = |z: f64| (kappa * z).exp() * (1.0 + 0.5 * (p * z).cos());
        let div_flux = |z: f64| 0.5 * d * p * (kappa * z).exp() * (kappa * (p * z).sin() + p * (p * z).cos());
        let zc = |c: usize| m.z_centers[c / m.ny];
        let n_cells = m.n_cells();
        let mut n: Vec<f64> = (0..n_cells).map(|c| phi(zc(c))).collect();
        let vertical = |_: usize, _: usize| (d, w);
        let horizontal = |_: usize, _: usize| (d, 0.0);
        for step in 1..=steps {
            let t = step as f64 * dt;
            let src: Vec<f64> = (0..n_cells)
                .map(|c| phi(zc(c)) / tau + (1.0 + t / tau) * div_flux(zc(c)))
                .collect();
            n = solve_transport_step(&m, m.all_rows(), &n, dt, &vertical, &horizontal, Some(&src), LINEAR_TOL)?;
        }
        let scale = 1.0 + steps as f64 * dt / tau;
        let err = (0..n_cells)
            .map(|c| {
                let exact = scale * phi(zc(c));
                (n[c] - exact).abs() / exact
            })
            .fold(0.0f64, f64::max);
        out.spacing.push(h);
        out.error.push(err);
    }
    Ok(out)
}

/// Runs every check.
pub fn run_all() -> Result<Vec<Check>> {
    let (i_err, psi_err) = laplace_uniform()?;
    let series = series_stack()?;
    let heat = heat_uniform_source()?;
    let (var_err, peak_err) = gaussian_diffusion()?;
    let (drift, min_n) = conservation(1000)?;
    let p = mms_potential()?.order();
    let t = mms_heat()?.order();
    let x = mms_transport()?.order();
    Ok(vec![
        Check::at_most("laplace current rel. error", i_err, 1e-8),
        Check::at_most("laplace potential error (V)", psi_err, 1e-9),
        Check::at_most("series stack rel. error", series, 1e-3),
        Check::at_most("heat qL^2/8k rel. error", heat, 1e-2),
        Check::at_most("gaussian variance rel. error", var_err, 1e-6),
        Check::at_most("gaussian peak rel. error", peak_err, 1e-2),
        Check::at_most("conservation drift per step", drift, 1e-8),
        Check::at_least("minimum vacancy density", min_n, 0.0),
        Check::at_least("potential MMS order", p, 1.9),
        Check::at_least("heat MMS order", t, 1.9),
        Check::at_least("transport MMS order", x, 0.9),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_order_of_exact_power_law() {
        let c = Convergence {
            spacing: vec![4.0, 2.0, 1.0],
            error: vec![16.0, 4.0, 1.0],
        };
        assert!((c.order() - 2.0).abs() < 1e-12);
        assert_eq!(c.pairwise(), vec![2.0, 2.0]);
    }

    #[test]
    fn check_direction() {
        assert!(Check::at_most("x", 1.0, 2.0).passed());
        assert!(!Check::at_most("x", 3.0, 2.0).passed());
        assert!(Check::at_least("x", 2.0, 1.9).passed());
        assert!(!Check::at_least("x", 1.0, 1.9).passed());
    }
}
