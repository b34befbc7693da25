//! Quasi-static I-V staircase on a pristine device: forming sweep to
//! -2.1 V under compliance, then a positive excursion to +1 V.

use vcm_sim::config::RunConfig;
use vcm_sim::mesh::initial_state;
use vcm_sim::protocol::{dc_sweep, TransientOptions};

fn main() -> vcm_sim::Result<()> {
    let cfg = RunConfig::default();
    let dev = cfg.sweep_device()?;
    let mut state = initial_state(&dev.mesh, &dev.db);
    cfg.nucleation.apply(&dev.mesh, &mut state);

    let curve = dc_sweep(&dev, &mut state, &cfg.waveforms.iv, &TransientOptions::default())?;
    println!("{:>8} {:>12}", "V2 (V)", "I (A)");
    for (v, i) in curve.iter().step_by(10) {
        println!("{v:8.3} {i:12.4e}");
    }
    Ok(())
}
