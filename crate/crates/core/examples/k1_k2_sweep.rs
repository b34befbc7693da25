//! Small (K1, K2) sweep: forming voltage and median resistance ratio on a
//! 3 x 3 grid with a few cycles per cell.
//!
//! `cargo run --release --example k1_k2_sweep [jobs]`

use vcm_sim::analysis::sweep_k1_k2;
use vcm_sim::config::{linspace, RunConfig};

fn main() -> vcm_sim::Result<()> {
    let jobs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = RunConfig::default();
    let k1 = linspace(6.2, 18.8, 3);
    let k2 = linspace(2.5, 11.5, 3);
    let map = sweep_k1_k2(&cfg.sweep_device()?, &k1, &k2, &cfg.cell_protocol(3), cfg.seed, jobs)?;

    let show = |x: Option<f64>, prec: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"));
    println!("V_f (V), rows K1, columns K2 = {k2:?}");
    for (a, k) in k1.iter().enumerate() {
        let row: Vec<String> = (0..k2.len()).map(|b| format!("{:>7}", show(map.cell(a, b).v_f, 3))).collect();
        println!("{k:5.1} {}", row.join(" "));
    }
    println!("median R_HRS / R_LRS");
    for (a, k) in k1.iter().enumerate() {
        let row: Vec<String> = (0..k2.len()).map(|b| format!("{:>7}", show(map.cell(a, b).ratio, 2))).collect();
        println!("{k:5.1} {}", row.join(" "));
    }
    println!("{:.0}% of cells completed", 100.0 * map.completed_fraction());
    Ok(())
}
