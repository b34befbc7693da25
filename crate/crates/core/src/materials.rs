//! Constitutive laws of the oxide bilayer and the Pd electrodes.
//!
//! All quantities are SI except energies, which are carried in eV and only
//! ever appear divided by `k_b * T` inside Arrhenius or hopping factors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scale that maps the electrical slope `k1` (S/m) onto the prefactor at `n_max`.
pub const SIGMA_SLOPE_SCALE: f64 = 1.0e4;
/// Scale that maps the thermal slope `k2` (W/m/K) onto the conductivity at `n_max`.
pub const KTH_SLOPE_SCALE: f64 = 10.0;
/// Largest magnitude allowed for the hopping `sinh` argument.
pub const SINH_ARG_LIMIT: f64 = 50.0;

/// Bulk properties of a homogeneous layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkProps {
    /// Electrical conductivity (S/m).
    pub sigma: f64,
    /// Thermal conductivity (W/m/K).
    pub k_th: f64,
    /// Mass density (kg/m^3).
    pub rho: f64,
    /// Specific heat (J/kg/K).
    pub cp: f64,
}

impl BulkProps {
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.cp
    }
}

/// Material constants of the Pd/Ta2O5/TaOx/Pd stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialDb {
    /// Hopping distance (m).
    pub a: f64,
    /// Attempt frequency (Hz).
    pub f: f64,
    /// Vacancy migration barrier (eV).
    pub e_a: f64,
    /// Linear temperature coefficient of the insulating thermal conductivity (1/K).
    pub lambda: f64,
    /// Reference temperature (K).
    pub t0: f64,
    /// Poole-Frenkel coefficient multiplying sqrt(E).
    pub alpha: f64,
    /// Poole-Frenkel offset.
    pub beta: f64,
    /// Boltzmann constant (eV/K).
    pub k_b: f64,
    /// Elementary charge (C).
    pub q: f64,
    /// Electrical conductivity slope (S/m).
    pub k1: f64,
    /// Thermal conductivity slope (W/m/K).
    pub k2: f64,
    /// Density at which both slopes saturate (m^-3).
    pub n_max: f64,
    /// Density above which the activation energy is pinned (m^-3).
    pub n_threshold: f64,
    /// Prefactor of vacancy-free oxide (S/m).
    pub sigma_floor: f64,
    /// Thermal conductivity of vacancy-free oxide at `t0` (W/m/K).
    pub k_floor: f64,
    /// Activation energy above `n_threshold` (eV).
    pub e_ac_high: f64,
    /// Activation energy at zero density (eV).
    pub e_ac_low: f64,
    /// Pd electrodes.
    pub pd: BulkProps,
    /// Mass density of both oxides (kg/m^3).
    pub oxide_rho: f64,
    /// Specific heat of both oxides (J/kg/K).
    pub oxide_cp: f64,
}

impl Default for MaterialDb {
    fn default() -> Self {
        Self {
            a: 3.2e-10,
            f: 1.0e12,
            e_a: 0.85,
            lambda: 0.1,
            t0: 293.0,
            alpha: 5.48e-4,
            beta: -5.7,
            k_b: 8.617_333_262e-5,
            q: 1.602_176_634e-19,
            k1: 9.4,
            k2: 5.75,
            n_max: 1.0e28,
            n_threshold: 5.0e27,
            sigma_floor: 1.0e3,
            k_floor: 0.12,
            e_ac_high: -0.006,
            e_ac_low: 0.05,
            pd: BulkProps {
                sigma: 1.0e7,
                k_th: 71.8,
                rho: 11_900.0,
                cp: 50.0,
            },
            oxide_rho: 8200.0,
            oxide_cp: 25.0,
        }
    }
}

impl MaterialDb {
    /// Baseline constants with the two slope parameters replaced.
    pub fn with_slopes(k1: f64, k2: f64) -> Self {
        Self {
            k1,
            k2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("f", self.f),
            ("e_a", self.e_a),
            ("lambda", self.lambda),
            ("t0", self.t0),
            ("k_b", self.k_b),
            ("q", self.q),
            ("k1", self.k1),
            ("k2", self.k2),
            ("n_max", self.n_max),
            ("n_threshold", self.n_threshold),
            ("sigma_floor", self.sigma_floor),
            ("k_floor", self.k_floor),
            ("pd.sigma", self.pd.sigma),
            ("pd.k_th", self.pd.k_th),
            ("pd.rho", self.pd.rho),
            ("pd.cp", self.pd.cp),
            ("oxide_rho", self.oxide_rho),
            ("oxide_cp", self.oxide_cp),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return invalid(format!("material constant `{name}` must be positive, got {value}"));
            }
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return invalid("Poole-Frenkel coefficients must be finite");
        }
        if !(self.e_ac_low > self.e_ac_high) {
            return invalid(format!(
                "e_ac_low ({}) must exceed e_ac_high ({})",
                self.e_ac_low, self.e_ac_high
            ));
        }
        if !(self.n_threshold < self.n_max) {
            return invalid("n_threshold must be below n_max");
        }
        Ok(())
    }

    /// Oxide heat capacity per volume (J/m^3/K).
    pub fn oxide_heat_capacity(&self) -> f64 {
        self.oxide_rho * self.oxide_cp
    }

    fn fill_fraction(&self, n_d: f64) -> f64 {
        (n_d / self.n_max).clamp(0.0, 1.0)
    }

    /// Conductivity prefactor, linear in density and saturating at `n_max`.
    pub fn sigma_prefactor(&self, n_d: f64) -> Result<f64> {
        if !(n_d >= 0.0) {
            return invalid(format!("negative vacancy density {n_d}"));
        }
        Ok(self.sigma_prefactor_unchecked(n_d))
    }

    pub(crate) fn sigma_prefactor_unchecked(&self, n_d: f64) -> f64 {
        self.sigma_floor + SIGMA_SLOPE_SCALE * self.k1 * self.fill_fraction(n_d)
    }

    /// Conduction activation energy (eV).
    pub fn activation_energy(&self, n_d: f64) -> Result<f64> {
        if !(n_d >= 0.0) {
            return invalid(format!("negative vacancy density {n_d}"));
        }
        Ok(self.activation_energy_unchecked(n_d))
    }

    pub(crate) fn activation_energy_unchecked(&self, n_d: f64) -> f64 {
        if n_d >= self.n_threshold {
            self.e_ac_high
        } else {
            let s = n_d.max(0.0) / self.n_threshold;
            self.e_ac_low + (self.e_ac_high - self.e_ac_low) * s
        }
    }

    /// Poole-Frenkel contribution, clamped at zero below the emission onset.
    pub fn pf_term(&self, field: f64, temp: f64) -> f64 {
        let raw = (self.t0 / temp).exp() * (self.alpha * field.max(0.0).sqrt() + self.beta);
        raw.max(0.0)
    }

    /// Field at which the Poole-Frenkel term switches on (V/m).
    pub fn pf_onset_field(&self) -> f64 {
        if self.beta >= 0.0 {
            0.0
        } else {
            (self.beta / self.alpha).powi(2)
        }
    }

    /// Oxide electrical conductivity (S/m).
    pub fn sigma_oxide(&self, n_d: f64, temp: f64, field: f64) -> f64 {
        let n = n_d.max(0.0);
        let arrhenius = (-self.activation_energy_unchecked(n) / (self.k_b * temp)).exp();
        self.sigma_prefactor_unchecked(n) * arrhenius + self.pf_term(field, temp)
    }

    /// Oxide thermal conductivity (W/m/K). The temperature correction acts on
    /// the insulating part only and is not extrapolated below `t0`.
    pub fn thermal_conductivity(&self, n_d: f64, temp: f64) -> f64 {
        let insulating = self.k_floor * (1.0 + self.lambda * (temp - self.t0).max(0.0));
        insulating + KTH_SLOPE_SCALE * self.k2 * self.fill_fraction(n_d)
    }

    fn hopping_rate(&self, temp: f64) -> f64 {
        self.f * (-self.e_a / (self.k_b * temp)).exp()
    }

    /// Vacancy diffusivity (m^2/s).
    pub fn diffusivity(&self, temp: f64) -> f64 {
        0.5 * self.a * self.a * self.hopping_rate(temp)
    }

    /// Drift velocity (m/s) along an axis, given the potential gradient
    /// `dpsi` (V/m) along that axis. Vacancies move down the potential.
    pub fn drift_velocity(&self, dpsi: f64, temp: f64) -> f64 {
        let arg = (-self.a * dpsi / (self.k_b * temp)).clamp(-SINH_ARG_LIMIT, SINH_ARG_LIMIT);
        self.a * self.hopping_rate(temp) * arg.sinh()
    }

    /// Soret coefficient (1/K), always negative.
    pub fn soret_coefficient(&self, temp: f64) -> f64 {
        -self.e_a / (self.k_b * temp * temp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn db() -> MaterialDb {
        MaterialDb::default()
    }

    #[test]
    fn prefactor_endpoints() {
        let db = db();
        assert_relative_eq!(db.sigma_prefactor(1e28).unwrap(), 9.5e4, max_relative = 1e-12);
        assert_relative_eq!(db.sigma_prefactor(0.0).unwrap(), 1e3, max_relative = 1e-12);
        let db2 = MaterialDb::with_slopes(18.8, 5.75);
        assert_relative_eq!(db2.sigma_prefactor(5e27).unwrap(), 9.5e4, max_relative = 1e-12);
        // saturates past n_max
        assert_eq!(db.sigma_prefactor(3e28).unwrap(), db.sigma_prefactor(1e28).unwrap());
        assert!(db.sigma_prefactor(-1.0).is_err());
    }

    #[test]
    fn activation_energy_piecewise() {
        let db = db();
        assert_relative_eq!(db.activation_energy(0.0).unwrap(), 0.05, max_relative = 1e-12);
        assert_relative_eq!(db.activation_energy(1e28).unwrap(), -0.006, max_relative = 1e-12);
        assert_relative_eq!(db.activation_energy(2.5e27).unwrap(), 0.022, max_relative = 1e-12);
        assert_relative_eq!(db.activation_energy(5e27).unwrap(), -0.006, max_relative = 1e-12);
        assert!(db.activation_energy(-5.0).is_err());
    }

    #[test]
    fn poole_frenkel_clamp() {
        let db = db();
        assert_eq!(db.pf_term(0.0, 300.0), 0.0);
        assert_eq!(db.pf_term(0.0, 900.0), 0.0);
        let v = db.pf_term(4e8, 300.0);
        let expected = (293.0f64 / 300.0).exp() * (5.48e-4 * 2.0e4 - 5.7);
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert_relative_eq!(v, 13.97, max_relative = 1e-3);
        let onset = db.pf_onset_field();
        assert_relative_eq!(onset, 1.082e8, max_relative = 1e-3);
        assert!(db.pf_term(onset, 300.0).abs() < 1e-9);
    }

    #[test]
    fn oxide_conductivity_values() {
        let db = db();
        assert_relative_eq!(db.sigma_oxide(1e28, 300.0, 0.0), 1.198e5, max_relative = 2e-3);
        assert_relative_eq!(db.sigma_oxide(0.0, 300.0, 0.0), 144.6, max_relative = 2e-3);
        let hot = db.sigma_oxide(1e28, 1e7, 0.0);
        assert_relative_eq!(hot, 9.5e4, max_relative = 1e-3);
    }

    #[test]
    fn thermal_conductivity_values() {
        let db = db();
        assert_relative_eq!(db.thermal_conductivity(0.0, 293.0), 0.12, max_relative = 1e-12);
        assert_relative_eq!(db.thermal_conductivity(1e28, 293.0), 57.62, max_relative = 1e-12);
        assert_relative_eq!(db.thermal_conductivity(0.0, 393.0), 1.32, max_relative = 1e-12);
    }

    #[test]
    fn hopping_laws() {
        let db = db();
        assert_relative_eq!(db.diffusivity(300.0), 2.69e-22, max_relative = 5e-3);
        assert_relative_eq!(db.diffusivity(600.0), 3.71e-15, max_relative = 5e-3);
        assert!(db.diffusivity(600.0) / db.diffusivity(300.0) > 1e6);

        assert_eq!(db.drift_velocity(0.0, 400.0), 0.0);
        assert_relative_eq!(db.drift_velocity(1e8, 500.0).abs(), 7.1e-7, max_relative = 1e-2);
        // vacancies move toward lower potential
        assert!(db.drift_velocity(1e8, 500.0) < 0.0);

        assert_relative_eq!(db.soret_coefficient(300.0), -0.1096, max_relative = 1e-3);
        assert_relative_eq!(db.soret_coefficient(600.0), -0.0274, max_relative = 2e-3);
        assert_relative_eq!(
            db.soret_coefficient(800.0) / db.soret_coefficient(400.0),
            0.25,
            max_relative = 1e-14
        );
    }

    #[test]
    fn drift_saturates_instead_of_overflowing() {
        let db = db();
        let v = db.drift_velocity(-1e14, 300.0);
        assert!(v.is_finite() && v > 0.0);
        assert_eq!(v, db.drift_velocity(-1e16, 300.0));
    }

    #[test]
    fn small_field_mobility_limit() {
        let db = db();
        let t = 450.0;
        let analytic = db.a * db.f * (-db.e_a / (db.k_b * t)).exp() * (-db.a / (db.k_b * t));
        for e in [1e2, 1e1, 1.0] {
            let slope = db.drift_velocity(e, t) / e;
            assert_relative_eq!(slope, analytic, max_relative = 1e-6);
        }
    }

    #[test]
    fn default_constants_validate() {
        db().validate().unwrap();
        let mut bad = db();
        bad.e_ac_low = -0.1;
        assert!(bad.validate().is_err());
        let mut bad = db();
        bad.n_threshold = 2e28;
        assert!(bad.validate().is_err());
    }
}
