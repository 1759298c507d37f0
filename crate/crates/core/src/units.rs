use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Action and mass scales. Natural units (`hbar = mass = 1`) are the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::NATURAL
    }
}

impl UnitSystem {
    pub const NATURAL: UnitSystem = UnitSystem { hbar: 1.0, mass: 1.0 };

    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::DomainError(format!(
                "unit scales must be positive and finite (hbar = {hbar}, mass = {mass})"
            )));
        }
        Ok(Self { hbar, mass })
    }

    /// `hbar^2 / (2 m)`, the kinetic prefactor.
    pub fn kinetic(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }

    /// Wavenumber of a free particle with energy `energy`.
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (2.0 * self.mass * energy).sqrt() / self.hbar
    }

    /// Kinetic energy of a plane wave `e^{ikx}`.
    pub fn energy(&self, k: f64) -> f64 {
        self.kinetic() * k * k
    }

    /// Group velocity `hbar k / m`.
    pub fn velocity(&self, k: f64) -> f64 {
        self.hbar * k / self.mass
    }
}
