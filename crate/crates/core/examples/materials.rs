//! Prints the oxide constitutive laws over density and temperature, and how
//! the slopes K1 and K2 move conductivity and thermal conductivity.

use vcm_sim::materials::MaterialDb;
use vcm_sim::mesh::{RESERVOIR_DENSITY, SWITCH_DENSITY};

fn main() -> vcm_sim::Result<()> {
    let db = MaterialDb::default();
    db.validate()?;
    let densities = [SWITCH_DENSITY, 1e25, 1e26, 1e27, RESERVOIR_DENSITY];

    println!("sigma (S/m) at zero field");
    println!("{:>10} {:>11} {:>11} {:>11}", "n_d", "300 K", "600 K", "900 K");
    for n in densities {
        let s: Vec<String> = [300.0, 600.0, 900.0].iter().map(|&t| format!("{:11.3e}", db.sigma_oxide(n, t, 0.0))).collect();
        println!("{n:10.1e} {}", s.join(" "));
    }

    println!("\nk_th (W/m/K) at 300 K and 900 K");
    for n in densities {
        println!("{n:10.1e} {:8.3} {:8.3}", db.thermal_conductivity(n, 300.0), db.thermal_conductivity(n, 900.0));
    }

    println!("\nPoole-Frenkel enhancement at 300 K, onset {:.2e} V/m", db.pf_onset_field());
    for e in [1e7, 1e8, 3e8, 1e9] {
        println!("{e:10.1e} {:10.3e}", db.pf_term(e, 300.0));
    }

    println!("\nD and Soret factor vs T");
    for t in [300.0, 600.0, 900.0, 1200.0] {
        println!("{t:6.0} {:11.3e} {:11.3e}", db.diffusivity(t), db.soret_coefficient(t));
    }

    println!("\nslope sensitivity at n = 1e27, 300 K");
    for (k1, k2) in [(6.2, 5.75), (9.4, 5.75), (18.8, 5.75), (9.4, 2.5), (9.4, 11.5)] {
        let d = MaterialDb::with_slopes(k1, k2);
        println!(
            "K1 {k1:5.1} K2 {k2:5.2}  sigma {:10.3e}  k_th {:7.3}",
            d.sigma_oxide(1e27, 300.0, 0.0),
            d.thermal_conductivity(1e27, 300.0)
        );
    }
    Ok(())
}
