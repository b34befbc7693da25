//! Forms a pristine device with a -2.1 V, 10 ms pulse under 500 uA
//! compliance and reports the resistance drop and peak temperature.
//!
//! `cargo run --release --example forming [coarse]`

use vcm_sim::config::RunConfig;
use vcm_sim::mesh::{initial_state, Resolution};
use vcm_sim::protocol::{read_resistance, run_transient, TransientOptions, Waveform};

fn main() -> vcm_sim::Result<()> {
    let mut cfg = RunConfig::default();
    if std::env::args().any(|a| a == "coarse") {
        cfg.mesh = Resolution::coarse();
    }
    let dev = cfg.device()?;
    println!("mesh {} x {} cells", dev.mesh.ny, dev.mesh.nz);

    let mut state = initial_state(&dev.mesh, &dev.db);
    cfg.nucleation.apply(&dev.mesh, &mut state);
    let before = read_resistance(&dev, &state, cfg.read.v_read)?;

    let trace = run_transient(&dev, &mut state, &Waveform::forming_pulse(), &TransientOptions::default())?;
    let after = read_resistance(&dev, &state, cfg.read.v_read)?;

    let last = trace.samples.last().expect("pulse produced no samples");
    println!("R pristine {:.3e} ohm, formed {:.3e} ohm (x{:.1})", before.ohms, after.ohms, before.ohms / after.ohms);
    println!("peak T {:.0} K, |I| max {:.1} uA, final I {:.1} uA", trace.peak_temperature(), trace.max_abs_current() * 1e6, last.current * 1e6);
    println!("V2 at end of pulse {:.3} V ({} samples)", last.v2, trace.samples.len());
    Ok(())
}
