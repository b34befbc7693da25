//! Forms a device with the forming ramp, then runs set/reset cycles with
//! cycle-to-cycle noise and prints the read resistances.
//!
//! `cargo run --release --example cycling [N]`

use vcm_sim::analysis::{form_device, resistance_ratio, uniformity};
use vcm_sim::config::RunConfig;
use vcm_sim::protocol::{run_cycles, CycleNoiseConfig};

fn main() -> vcm_sim::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cfg = RunConfig::default();
    // coarse mesh keeps this to a few seconds per cycle
    let dev = cfg.sweep_device()?;
    let protocol = cfg.cell_protocol(n);

    let (formed, mut state, _) = form_device(&dev, &protocol)?;
    println!("forming voltage {:?}", formed.voltage());

    let noise = CycleNoiseConfig {
        seed: cfg.seed,
        amplitude: cfg.noise.amplitude,
    };
    let r = run_cycles(&dev, &mut state, &protocol.set, &protocol.reset, n, &noise, cfg.read.v_read, false)?;
    for (k, (h, l)) in r.r_hrs.iter().zip(&r.r_lrs).enumerate() {
        println!("{:3}  HRS {:9.1}  LRS {:9.1}", k + 1, h, l);
    }
    println!("median ratio {:.2}", resistance_ratio(&r.r_hrs, &r.r_lrs)?);
    if n > 1 {
        println!(
            "sigma/mu  HRS {:.4}  LRS {:.4}",
            uniformity(&r.r_hrs, protocol.convention)?,
            uniformity(&r.r_lrs, protocol.convention)?
        );
    }
    Ok(())
}
