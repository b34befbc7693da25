//! Forms a device on the 1 nm mesh and writes lateral and vertical
//! profiles of vacancy density and temperature through the filament, plus
//! a VTK snapshot of the final state.
//!
//! `cargo run --release --example profiles [out_dir]`

use std::path::PathBuf;

use vcm_sim::analysis::{profile_extract, Line};
use vcm_sim::config::RunConfig;
use vcm_sim::io::{write_profile, write_vtk, Header};
use vcm_sim::mesh::initial_state;
use vcm_sim::protocol::{run_transient, TransientOptions, Waveform};

fn main() -> vcm_sim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "profiles_out".into()));
    std::fs::create_dir_all(&out)?;
    let cfg = RunConfig::default();
    let dev = cfg.device()?;
    let header = Header::new("profiles-example", cfg.seed, &cfg.hash());

    let mut state = initial_state(&dev.mesh, &dev.db);
    cfg.nucleation.apply(&dev.mesh, &mut state);
    // stop mid-pulse so the temperature profile is still hot
    let pulse = Waveform::forming_pulse();
    let opts = TransientOptions {
        snapshot_times: vec![5e-3],
        ..TransientOptions::default()
    };
    let trace = run_transient(&dev, &mut state, &pulse, &opts)?;
    let (_, hot) = &trace.snapshots[0];

    let sw = dev.mesh.geometry.t_switch;
    let lines = [
        ("nd_lateral", &state.n_d, Line::AlongY { z: 0.5 * sw }),
        ("nd_vertical", &state.n_d, Line::AlongZ { y: 0.0, z_min: -dev.mesh.geometry.t_reservoir, z_max: sw }),
        ("t_lateral", &hot.temperature, Line::AlongY { z: 0.5 * sw }),
        ("t_vertical", &hot.temperature, Line::AlongZ { y: 0.0, z_min: -dev.mesh.geometry.t_reservoir, z_max: sw }),
    ];
    for (name, field, line) in lines {
        let p = profile_extract(&dev.mesh, field, line)?;
        let peak = p.values.iter().cloned().fold(f64::MIN, f64::max);
        println!("{name:12} {} points, max {peak:.4e}", p.coords.len());
        write_profile(&out.join(format!("{name}.csv")), &header, &p)?;
    }
    write_vtk(&out.join("formed.vtk"), &dev.mesh, &state, "formed")?;
    println!("wrote {}", out.display());
    Ok(())
}
