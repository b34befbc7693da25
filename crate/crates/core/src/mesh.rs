//! Device stack geometry, its structured finite-volume mesh, and the field state.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::materials::MaterialDb;

/// Initial vacancy density of the TaOx reservoir (m^-3).
pub const RESERVOIR_DENSITY: f64 = 1.0e28;
/// Initial vacancy density of the Ta2O5 switching layer (m^-3).
pub const SWITCH_DENSITY: f64 = 1.0e22;
/// Initial and ambient temperature (K).
pub const AMBIENT_TEMPERATURE: f64 = 300.0;

/// Layer stack, listed bottom to top: BE, reservoir, switch, TE, CML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceGeometry {
    /// Lateral width (m).
    pub width: f64,
    /// Out-of-plane extrusion depth (m).
    pub depth: f64,
    pub t_be: f64,
    pub t_reservoir: f64,
    pub t_switch: f64,
    pub t_te: f64,
    pub t_cml: f64,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            width: 40e-9,
            depth: 20e-9,
            t_be: 35e-9,
            t_reservoir: 30e-9,
            t_switch: 5e-9,
            t_te: 50e-9,
            t_cml: 10e-9,
        }
    }
}

impl DeviceGeometry {
    pub fn layers(&self) -> [(Region, f64); 5] {
        [
            (Region::BottomElectrode, self.t_be),
            (Region::Reservoir, self.t_reservoir),
            (Region::Switch, self.t_switch),
            (Region::TopElectrode, self.t_te),
            (Region::Cml, self.t_cml),
        ]
    }

    pub fn total_height(&self) -> f64 {
        self.layers().iter().map(|(_, t)| t).sum()
    }

    /// Height of the reservoir/switch interface above the BE bottom.
    pub fn interface_z(&self) -> f64 {
        self.t_be + self.t_reservoir
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [("width", self.width), ("depth", self.depth)];
        for (name, v) in dims.into_iter().chain(
            self.layers()
                .into_iter()
                .map(|(r, t)| (r.name(), t)),
        ) {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("geometry `{name}` must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    BottomElectrode,
    Reservoir,
    Switch,
    TopElectrode,
    Cml,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::BottomElectrode => "be",
            Region::Reservoir => "reservoir",
            Region::Switch => "switch",
            Region::TopElectrode => "te",
            Region::Cml => "cml",
        }
    }

    pub fn is_oxide(self) -> bool {
        matches!(self, Region::Reservoir | Region::Switch)
    }

    pub fn is_electrode(self) -> bool {
        !self.is_oxide()
    }
}

/// Target cell spacings per layer. Each layer is split uniformly into
/// `max(min_cells, ceil(thickness / spacing))` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    pub dy: f64,
    pub dz_electrode: f64,
    pub dz_reservoir: f64,
    pub dz_switch: f64,
    pub dz_cml: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            dy: 1e-9,
            dz_electrode: 5e-9,
            dz_reservoir: 1e-9,
            dz_switch: 1e-9,
            dz_cml: 5e-9,
        }
    }
}

/// Fewest rows allowed in any layer.
pub const MIN_LAYER_CELLS: usize = 2;
/// Fewest rows allowed in the switching layer.
pub const MIN_SWITCH_CELLS: usize = 4;

impl Resolution {
    /// The same spacing everywhere.
    pub fn uniform(spacing: f64) -> Self {
        Self {
            dy: spacing,
            dz_electrode: spacing,
            dz_reservoir: spacing,
            dz_switch: spacing,
            dz_cml: spacing,
        }
    }

    /// A coarser grid for parameter sweeps.
    pub fn coarse() -> Self {
        Self {
            dy: 2e-9,
            dz_electrode: 10e-9,
            dz_reservoir: 3e-9,
            dz_switch: 1e-9,
            dz_cml: 10e-9,
        }
    }

    fn spacing_for(&self, region: Region) -> f64 {
        match region {
            Region::BottomElectrode | Region::TopElectrode => self.dz_electrode,
            Region::Reservoir => self.dz_reservoir,
            Region::Switch => self.dz_switch,
            Region::Cml => self.dz_cml,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dy", self.dy),
            ("dz_electrode", self.dz_electrode),
            ("dz_reservoir", self.dz_reservoir),
            ("dz_switch", self.dz_switch),
            ("dz_cml", self.dz_cml),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("resolution `{name}` must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

fn cells_for(thickness: f64, spacing: f64, min_cells: usize) -> usize {
    // guard against 5e-9 / 1e-9 = 5.000000000000001
    let raw = (thickness / spacing * (1.0 - 1e-9)).ceil() as usize;
    raw.max(min_cells)
}

/// Structured rectilinear mesh over the (y, z) cross-section.
///
/// Cells are indexed `j * ny + i` with `i` along y and `j` along z, so a
/// five-point stencil has bandwidth `ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub geometry: DeviceGeometry,
    pub ny: usize,
    pub nz: usize,
    /// Face coordinates along y, `ny + 1` entries.
    pub y_faces: Vec<f64>,
    /// Face coordinates along z, `nz + 1` entries.
    pub z_faces: Vec<f64>,
    pub y_centers: Vec<f64>,
    pub z_centers: Vec<f64>,
    /// Region of each row.
    pub row_region: Vec<Region>,
}

/// Contiguous range of mesh rows `[start, end)` that share a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRange {
    pub start: usize,
    pub end: usize,
}

impl RowRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, j: usize) -> bool {
        j >= self.start && j < self.end
    }
}

pub fn build_mesh(geometry: &DeviceGeometry, resolution: &Resolution) -> Result<Mesh> {
    geometry.validate()?;
    resolution.validate()?;

    let ny = cells_for(geometry.width, resolution.dy, MIN_LAYER_CELLS);
    let dy = geometry.width / ny as f64;
    let y_faces: Vec<f64> = (0..=ny).map(|i| i as f64 * dy).collect();

    let mut z_faces = vec![0.0];
    let mut row_region = Vec::new();
    let mut z0 = 0.0;
    for (region, thickness) in geometry.layers() {
        let min = if region == Region::Switch {
            MIN_SWITCH_CELLS
        } else {
            MIN_LAYER_CELLS
        };
        let n = cells_for(thickness, resolution.spacing_for(region), min);
        let dz = thickness / n as f64;
        for k in 1..=n {
            z_faces.push(if k == n { z0 + thickness } else { z0 + k as f64 * dz });
            row_region.push(region);
        }
        z0 += thickness;
    }
    let nz = row_region.len();

    let centers = |faces: &[f64]| -> Vec<f64> { faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect() };
    Ok(Mesh {
        geometry: geometry.clone(),
        ny,
        nz,
        y_centers: centers(&y_faces),
        z_centers: centers(&z_faces),
        y_faces,
        z_faces,
        row_region,
    })
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.ny * self.nz
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.ny + i
    }

    #[inline]
    pub fn dy(&self, i: usize) -> f64 {
        self.y_faces[i + 1] - self.y_faces[i]
    }

    #[inline]
    pub fn dz(&self, j: usize) -> f64 {
        self.z_faces[j + 1] - self.z_faces[j]
    }

    pub fn depth(&self) -> f64 {
        self.geometry.depth
    }

    pub fn cell_volume(&self, i: usize, j: usize) -> f64 {
        self.dy(i) * self.dz(j) * self.geometry.depth
    }

    pub fn region_of(&self, cell: usize) -> Region {
        self.row_region[cell / self.ny]
    }

    /// Rows occupied by `region`.
    pub fn rows_of(&self, region: Region) -> RowRange {
        let start = self.row_region.iter().position(|&r| r == region).unwrap_or(0);
        let len = self.row_region.iter().filter(|&&r| r == region).count();
        RowRange { start, end: start + len }
    }

    /// Rows covering the reservoir and switching layer.
    pub fn oxide_rows(&self) -> RowRange {
        RowRange {
            start: self.rows_of(Region::Reservoir).start,
            end: self.rows_of(Region::Switch).end,
        }
    }

    /// Rows from the BE bottom up to the TE top (everything but the CML).
    pub fn device_rows(&self) -> RowRange {
        RowRange {
            start: 0,
            end: self.rows_of(Region::TopElectrode).end,
        }
    }

    pub fn all_rows(&self) -> RowRange {
        RowRange { start: 0, end: self.nz }
    }

    pub fn region_volume(&self, region: Region) -> f64 {
        let rows = self.rows_of(region);
        (rows.start..rows.end)
            .map(|j| (0..self.ny).map(|i| self.cell_volume(i, j)).sum::<f64>())
            .sum()
    }

    /// Lateral coordinate relative to the device center.
    pub fn y_centered(&self, i: usize) -> f64 {
        self.y_centers[i] - 0.5 * self.geometry.width
    }

    /// Vertical coordinate relative to the reservoir/switch interface.
    pub fn z_from_interface(&self, j: usize) -> f64 {
        self.z_centers[j] - self.geometry.interface_z()
    }
}

/// The unknown fields on the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// Vacancy density per cell (m^-3); zero outside the oxide.
    pub n_d: Vec<f64>,
    /// Temperature per cell (K).
    pub temperature: Vec<f64>,
    /// Electric potential per cell (V).
    pub psi: Vec<f64>,
    /// Simulation time (s).
    pub time: f64,
}

pub fn initial_state(mesh: &Mesh, _db: &MaterialDb) -> FieldState {
    let n_d = (0..mesh.n_cells())
        .map(|c| match mesh.region_of(c) {
            Region::Reservoir => RESERVOIR_DENSITY,
            Region::Switch => SWITCH_DENSITY,
            _ => 0.0,
        })
        .collect();
    FieldState {
        n_d,
        temperature: vec![AMBIENT_TEMPERATURE; mesh.n_cells()],
        psi: vec![0.0; mesh.n_cells()],
        time: 0.0,
    }
}

/// Centered Gaussian bump added to the switching-layer density to nucleate
/// a single filament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NucleationSeed {
    pub enabled: bool,
    /// Peak amplitude as a fraction of the reservoir density.
    pub amplitude_fraction: f64,
    /// Gaussian standard deviation (m).
    pub width: f64,
}

impl Default for NucleationSeed {
    fn default() -> Self {
        Self {
            enabled: true,
            amplitude_fraction: 0.05,
            width: 2e-9,
        }
    }
}

impl NucleationSeed {
    pub fn apply(&self, mesh: &Mesh, state: &mut FieldState) {
        if !self.enabled || self.amplitude_fraction <= 0.0 {
            return;
        }
        let amp = self.amplitude_fraction * RESERVOIR_DENSITY;
        let two_w2 = 2.0 * self.width * self.width;
        let rows = mesh.rows_of(Region::Switch);
        for j in rows.start..rows.end {
            let z = mesh.z_from_interface(j);
            for i in 0..mesh.ny {
                let y = mesh.y_centered(i);
                let bump = amp * (-(y * y + z * z) / two_w2).exp();
                state.n_d[mesh.index(i, j)] += bump;
            }
        }
    }
}

/// Number of vacancies in the oxide, `sum(n_d * volume)`.
pub fn total_vacancies(state: &FieldState, mesh: &Mesh) -> f64 {
    let rows = mesh.oxide_rows();
    let mut total = 0.0;
    for j in rows.start..rows.end {
        for i in 0..mesh.ny {
            total += state.n_d[mesh.index(i, j)] * mesh.cell_volume(i, j);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn default_stack_dimensions() {
        let g = DeviceGeometry::default();
        assert_relative_eq!(g.total_height(), 130e-9, max_relative = 1e-14);
        let mesh = build_mesh(&g, &Resolution::uniform(1e-9)).unwrap();
        assert_eq!(mesh.rows_of(Region::Switch).len(), 5);
        assert_eq!(mesh.nz, 130);
        assert_eq!(mesh.ny, 40);
        assert_relative_eq!(*mesh.z_faces.last().unwrap(), 130e-9, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut g = DeviceGeometry::default();
        g.t_switch = 0.0;
        assert!(build_mesh(&g, &Resolution::default()).is_err());
        let g = DeviceGeometry::default();
        assert!(build_mesh(&g, &Resolution::uniform(-1.0)).is_err());
        assert!(build_mesh(&g, &Resolution::uniform(0.0)).is_err());
    }

    #[test]
    fn minimum_cells_enforced() {
        let g = DeviceGeometry::default();
        let mesh = build_mesh(&g, &Resolution::uniform(100e-9)).unwrap();
        assert_eq!(mesh.rows_of(Region::Switch).len(), MIN_SWITCH_CELLS);
        for region in [Region::BottomElectrode, Region::Reservoir, Region::TopElectrode, Region::Cml] {
            assert!(mesh.rows_of(region).len() >= MIN_LAYER_CELLS);
        }
        assert!(mesh.ny >= MIN_LAYER_CELLS);
    }

    #[test]
    fn finest_rows_in_switch_layer() {
        let mesh = build_mesh(&DeviceGeometry::default(), &Resolution::default()).unwrap();
        let sw = mesh.rows_of(Region::Switch);
        let finest = (0..mesh.nz).map(|j| mesh.dz(j)).fold(f64::INFINITY, f64::min);
        assert_relative_eq!(mesh.dz(sw.start), finest, max_relative = 1e-12);
    }

    #[test]
    fn initial_densities() {
        let mesh = build_mesh(&DeviceGeometry::default(), &Resolution::default()).unwrap();
        let db = MaterialDb::default();
        let s = initial_state(&mesh, &db);
        for c in 0..mesh.n_cells() {
            let expected = match mesh.region_of(c) {
                Region::Reservoir => 1e28,
                Region::Switch => 1e22,
                _ => 0.0,
            };
            assert_eq!(s.n_d[c], expected);
            assert_eq!(s.temperature[c], 300.0);
            assert_eq!(s.psi[c], 0.0);
        }
        assert_eq!(s.time, 0.0);
        assert_eq!(initial_state(&mesh, &db), s);
    }

    #[test]
    fn vacancy_totals() {
        let mesh = build_mesh(&DeviceGeometry::default(), &Resolution::default()).unwrap();
        let s = initial_state(&mesh, &MaterialDb::default());
        let reservoir = 1e28 * 40e-9 * 30e-9 * 20e-9;
        assert_relative_eq!(reservoir, 2.4e5, max_relative = 1e-12);
        let switch = 1e22 * 40e-9 * 5e-9 * 20e-9;
        assert_relative_eq!(total_vacancies(&s, &mesh), reservoir + switch, max_relative = 1e-12);
        assert_relative_eq!(reservoir / switch, 6.0e6, max_relative = 1e-12);

        let mut zero = s.clone();
        zero.n_d.iter_mut().for_each(|n| *n = 0.0);
        assert_eq!(total_vacancies(&zero, &mesh), 0.0);
    }

    #[test]
    fn seed_is_centered_and_symmetric() {
        let mesh = build_mesh(&DeviceGeometry::default(), &Resolution::default()).unwrap();
        let mut s = initial_state(&mesh, &MaterialDb::default());
        NucleationSeed::default().apply(&mesh, &mut s);
        let j = mesh.rows_of(Region::Switch).start;
        for i in 0..mesh.ny {
            let mirror = mesh.ny - 1 - i;
            assert_relative_eq!(s.n_d[mesh.index(i, j)], s.n_d[mesh.index(mirror, j)], max_relative = 1e-12);
        }
        let center = s.n_d[mesh.index(mesh.ny / 2, j)];
        assert!(center > 1e26);
        assert!(s.n_d[mesh.index(0, j)] < 1e23);
    }

    proptest! {
        #[test]
        fn partition_of_domain(
            width in 5e-9f64..80e-9,
            t_sw in 1e-9f64..10e-9,
            t_res in 2e-9f64..40e-9,
            spacing in 0.4e-9f64..4e-9,
        ) {
            let g = DeviceGeometry { width, t_switch: t_sw, t_reservoir: t_res, ..DeviceGeometry::default() };
            let mesh = build_mesh(&g, &Resolution::uniform(spacing)).unwrap();
            let total: f64 = (0..mesh.nz)
                .flat_map(|j| (0..mesh.ny).map(move |i| (i, j)))
                .map(|(i, j)| mesh.cell_volume(i, j))
                .sum();
            let analytic = g.width * g.depth * g.total_height();
            prop_assert!((total - analytic).abs() <= 1e-10 * analytic);
            for (region, t) in g.layers() {
                let v = mesh.region_volume(region);
                prop_assert!((v - t * g.width * g.depth).abs() <= 1e-10 * v);
                prop_assert!(mesh.rows_of(region).len() >= MIN_LAYER_CELLS);
            }
            // layer interfaces coincide with faces
            let mut z = 0.0;
            for (region, t) in g.layers() {
                let rows = mesh.rows_of(region);
                prop_assert!((mesh.z_faces[rows.start] - z).abs() < 1e-20);
                z += t;
                prop_assert!((mesh.z_faces[rows.end] - z).abs() < 1e-18);
            }
            for j in 0..mesh.nz { prop_assert!(mesh.dz(j) > 0.0); }
        }

        #[test]
        fn total_vacancies_is_linear(scale in 0.0f64..8.0) {
            let mesh = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
            let s = initial_state(&mesh, &MaterialDb::default());
            let mut scaled = s.clone();
            scaled.n_d.iter_mut().for_each(|n| *n *= 2.0);
            prop_assert_eq!(total_vacancies(&scaled, &mesh), 2.0 * total_vacancies(&s, &mesh));
            let mut k = s.clone();
            k.n_d.iter_mut().for_each(|n| *n *= scale);
            let expected = scale * total_vacancies(&s, &mesh);
            prop_assert!((total_vacancies(&k, &mesh) - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}
