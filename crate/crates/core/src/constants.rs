//! Physical constants. Energies are in eV and times in ps unless a name says
//! otherwise.

/// Planck constant in eV·s.
pub const PLANCK_EV_S: f64 = 4.135667696e-15;

/// Planck constant in eV·ps.
pub const PLANCK_EV_PS: f64 = PLANCK_EV_S * 1e12;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 2.99792458e8;

/// Speed of light in m/ps.
pub const SPEED_OF_LIGHT_M_PS: f64 = SPEED_OF_LIGHT_M_S * 1e-12;

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;
