//! Model parameters of the two-qubit Rabi Hamiltonian
//!
//! `H = ω a†a + Σ_i [ (Ω/2) σ_x^i + g σ_z^i (a† + a) ]` with identical qubits
//! and ħ = 1. Positions are dimensionless (`x = ξ/ξ₀`), so the coupling
//! enters the position representation through `g' = √2 g / ω`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Field frequency ω.
    pub omega: f64,
    /// Qubit tunneling frequency Ω.
    #[serde(rename = "Omega")]
    pub tunneling: f64,
    /// Qubit-field coupling g.
    pub g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub g_prime: f64,
    pub g_c: f64,
}

impl ModelParams {
    pub fn new(omega: f64, tunneling: f64, g: f64) -> Result<Self> {
        let p = Self { omega, tunneling, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.tunneling.is_finite() && self.g.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameters {self:?}")));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.tunneling < 0.0 {
            return Err(Error::InvalidParams(format!("Omega must be >= 0, got {}", self.tunneling)));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be >= 0, got {}", self.g)));
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedScales> {
        self.validate()?;
        Ok(DerivedScales {
            g_prime: self.g_prime(),
            g_c: self.g_c(),
        })
    }

    /// `√2 g / ω`
    pub fn g_prime(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.g / self.omega
    }

    /// `√(ωΩ/2) / 2`
    pub fn g_c(&self) -> f64 {
        (self.omega * self.tunneling / 2.0).sqrt() / 2.0
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..*self }
    }

    /// Distance of the |↑↑⟩ and |↓↓⟩ well minima from the origin, `2g'`.
    pub fn well_offset(&self) -> f64 {
        2.0 * self.g_prime()
    }
}

pub fn derive(params: &ModelParams) -> Result<DerivedScales> {
    params.derive()
}
