//! Runs the analytic-oracle suite and prints the measured errors and
//! convergence orders.

use vcm_sim::verify::{mms_heat, mms_potential, mms_transport, run_all};

fn main() -> vcm_sim::Result<()> {
    for (name, study) in [
        ("potential", mms_potential()?),
        ("heat", mms_heat()?),
        ("transport", mms_transport()?),
    ] {
        println!("{name} MMS");
        for (h, e) in study.spacing.iter().zip(&study.error) {
            println!("  h = {:.2} nm  error = {e:.4e}", h * 1e9);
        }
        println!("  pairwise orders {:?}  fitted {:.3}", study.pairwise(), study.order());
    }
    let checks = run_all()?;
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed()) {
        println!("all checks passed");
        Ok(())
    } else {
        std::process::exit(1)
    }
}
