//! Delimited-text tables and legacy VTK snapshots.
//!
//! Every table starts with `#` metadata lines (tool version, root seed and
//! the config hash) followed by one comma-separated header row. Floats are
//! written in shortest round-trip form, so identical runs give identical
//! bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{Profile, SweepMap};
use crate::error::Result;
use crate::mesh::{FieldState, Mesh};
use crate::protocol::TraceResult;

pub const TRACE_COLUMNS: &str = "t,v1,v2,current,peak_temperature,total_vacancies";
pub const IV_COLUMNS: &str = "v2,current";
pub const CYCLE_COLUMNS: &str = "cycle,r_hrs,r_lrs";
pub const SWEEP_COLUMNS: &str = "k1,k2,v_f,r_hrs,r_lrs,ratio,uniformity_hrs,uniformity_lrs,status";
pub const STATUS_COLUMNS: &str = "k1,k2,seed,status,detail";
pub const PROFILE_COLUMNS: &str = "coord,value";
pub const SUMMARY_COLUMNS: &str = "key,value";

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Header {
    pub fn new(command: &str, seed: u64, config_hash: &str) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config_hash: config_hash.to_string(),
        }
    }

    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# vcm-sim {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command = {}", self.command)?;
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# config_sha256 = {}", self.config_hash)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

fn table<F>(path: &Path, header: &Header, columns: &str, rows: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = BufWriter::new(File::create(path)?);
    header.write(&mut out)?;
    writeln!(out, "{columns}")?;
    rows(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, header: &Header, trace: &TraceResult) -> Result<()> {
    table(path, header, TRACE_COLUMNS, |out| {
        for s in &trace.samples {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, s.v1, s.v2, s.current, s.peak_temperature, s.total_vacancies
            )?;
        }
        Ok(())
    })
}

pub fn write_iv(path: &Path, header: &Header, curve: &[(f64, f64)]) -> Result<()> {
    table(path, header, IV_COLUMNS, |out| {
        for (v, i) in curve {
            writeln!(out, "{v:e},{i:e}")?;
        }
        Ok(())
    })
}

pub fn write_cycles(path: &Path, header: &Header, r_hrs: &[f64], r_lrs: &[f64]) -> Result<()> {
    table(path, header, CYCLE_COLUMNS, |out| {
        for (k, (h, l)) in r_hrs.iter().zip(r_lrs).enumerate() {
            writeln!(out, "{},{h:e},{l:e}", k + 1)?;
        }
        Ok(())
    })
}

/// Long-format sweep table, one row per (K1, K2) cell. Metrics a cell did
/// not produce are left empty.
pub fn write_sweep(path: &Path, header: &Header, map: &SweepMap) -> Result<()> {
    table(path, header, SWEEP_COLUMNS, |out| {
        for c in &map.cells {
            writeln!(
                out,
                "{:e},{:e},{},{},{},{},{},{},{}",
                c.k1,
                c.k2,
                opt(c.v_f),
                opt(c.r_hrs),
                opt(c.r_lrs),
                opt(c.ratio),
                opt(c.uniformity_hrs),
                opt(c.uniformity_lrs),
                c.status.label()
            )?;
        }
        Ok(())
    })
}

pub fn write_sweep_status(path: &Path, header: &Header, map: &SweepMap) -> Result<()> {
    table(path, header, STATUS_COLUMNS, |out| {
        for c in &map.cells {
            let detail = c.status.detail().replace([',', '\n'], ";");
            writeln!(out, "{:e},{:e},{},{},{}", c.k1, c.k2, c.seed, c.status.label(), detail)?;
        }
        Ok(())
    })
}

pub fn write_profile(path: &Path, header: &Header, profile: &Profile) -> Result<()> {
    table(path, header, PROFILE_COLUMNS, |out| {
        for (x, v) in profile.coords.iter().zip(&profile.values) {
            writeln!(out, "{x:e},{v:e}")?;
        }
        Ok(())
    })
}

pub fn write_summary(path: &Path, header: &Header, entries: &[(&str, String)]) -> Result<()> {
    table(path, header, SUMMARY_COLUMNS, |out| {
        for (k, v) in entries {
            writeln!(out, "{k},{v}")?;
        }
        Ok(())
    })
}

/// Legacy ASCII VTK structured grid with `n_d`, `temperature` and `psi` as
/// cell data. Points lie in the `x = y`, `y = z` plane.
pub fn write_vtk(path: &Path, mesh: &Mesh, state: &FieldState, title: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{} t={:e}", title.replace('\n', " "), state.time)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_GRID")?;
    writeln!(out, "DIMENSIONS {} {} 1", mesh.ny + 1, mesh.nz + 1)?;
    writeln!(out, "POINTS {} double", (mesh.ny + 1) * (mesh.nz + 1))?;
    for z in &mesh.z_faces {
        for y in &mesh.y_faces {
            writeln!(out, "{y:e} {z:e} 0")?;
        }
    }
    writeln!(out, "CELL_DATA {}", mesh.n_cells())?;
    for (name, field) in [("n_d", &state.n_d), ("temperature", &state.temperature), ("psi", &state.psi)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in field.iter() {
            writeln!(out, "{v:e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialDb;
    use crate::mesh::{build_mesh, initial_state, DeviceGeometry, Resolution};
    use crate::protocol::TraceSample;

    fn header() -> Header {
        Header::new("form", 42, "abc123")
    }

    #[test]
    fn trace_table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = TraceResult {
            samples: vec![TraceSample {
                t: 1e-9,
                v1: -2.1,
                v2: -2.0,
                current: -1.5e-4,
                peak_temperature: 512.5,
                total_vacancies: 2.4e5,
                level: 0,
                level_end: true,
                compliance: true,
            }],
            ..TraceResult::default()
        };
        write_trace(&path, &header(), &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# vcm-sim {}", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[1], "# command = form");
        assert_eq!(lines[2], "# seed = 42");
        assert_eq!(lines[3], "# config_sha256 = abc123");
        assert_eq!(lines[4], TRACE_COLUMNS);
        assert_eq!(lines[5], "1e-9,-2.1e0,-2e0,-1.5e-4,5.125e2,2.4e5");
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, -1.62, 6.02214076e23, 1e-300] {
            let s = format!("{x:e}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn vtk_counts() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_mesh(&DeviceGeometry::default(), &Resolution::coarse()).unwrap();
        let s = initial_state(&m, &MaterialDb::default());
        let path = dir.path().join("s.vtk");
        write_vtk(&path, &m, &s, "initial").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("DIMENSIONS {} {} 1", m.ny + 1, m.nz + 1)));
        assert!(text.contains(&format!("CELL_DATA {}", m.n_cells())));
        let numeric = text.lines().filter(|l| l.parse::<f64>().is_ok()).count();
        assert_eq!(numeric, 3 * m.n_cells());
        let points = text.lines().filter(|l| l.ends_with(" 0")).count();
        assert_eq!(points, (m.ny + 1) * (m.nz + 1));
    }
}
