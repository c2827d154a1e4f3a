//! Physical constants used throughout the simulator (SI units).

use std::f64::consts::PI;

/// The single table of physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Vacuum permeability [T·m/A].
    pub mu0: f64,
    /// Gravitational acceleration [m/s²].
    pub g_grav: f64,
    /// Bohr magneton [J/T].
    pub mu_b: f64,
    /// Boltzmann constant [J/K].
    pub k_b: f64,
    /// Reduced Planck constant [J·s].
    pub hbar: f64,
}

pub const PHYSICAL: PhysicalConstants = PhysicalConstants {
    mu0: 4.0 * PI * 1e-7,
    g_grav: 9.81,
    mu_b: 9.2740e-24,
    k_b: 1.3807e-23,
    hbar: 1.0546e-34,
};

pub const MU0: f64 = PHYSICAL.mu0;
pub const G_GRAV: f64 = PHYSICAL.g_grav;
pub const MU_B: f64 = PHYSICAL.mu_b;
pub const K_B: f64 = PHYSICAL.k_b;
pub const HBAR: f64 = PHYSICAL.hbar;

/// Unified atomic mass unit [kg].
pub const ATOMIC_MASS_UNIT: f64 = 1.6605e-27;

/// 1 gauss in tesla.
pub const GAUSS: f64 = 1e-4;
