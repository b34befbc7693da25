//! Finite-volume simulation of filament forming and resistive switching in
//! Ta2O5/TaOx bilayer memristors.
//!
//! The device is a 2D cross-section `(y, z)` extruded by a fixed depth. Oxygen
//! vacancy transport, current continuity and heat conduction are coupled
//! through the vacancy-dependent conductivity and thermal conductivity.

pub mod analysis;
pub mod config;
pub mod error;
pub mod io;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod protocol;
pub mod solver;
pub mod verify;

pub use error::{Result, SimError};
