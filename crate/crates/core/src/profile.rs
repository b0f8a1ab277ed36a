//! RIS phase profiles.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-element reflection phases `ω_n`; the reflection coefficients are `w_n = e^{jω_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    omegas: Vec<f64>,
}

impl PhaseProfile {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if let Some(i) = omegas.iter().position(|w| !w.is_finite()) {
            return Err(Error::Domain(format!("phase {i} is not finite")));
        }
        Ok(Self { omegas })
    }

    pub fn zeros(n: usize) -> Self {
        Self { omegas: vec![0.0; n] }
    }

    /// Unit-modulus projection `w_n / |w_n|`; zero entries map to phase 0.
    pub fn from_weights(w: &DVector<Complex64>) -> Result<Self> {
        Self::new(w.iter().map(|z| if z.norm() > 0.0 { z.arg() } else { 0.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn weights(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.len(), self.omegas.iter().map(|&w| Complex64::from_polar(1.0, w)))
    }

    /// Phases wrapped to `(-π, π]`.
    pub fn wrapped(&self) -> Self {
        Self { omegas: self.omegas.iter().map(|&w| wrap_phase(w)).collect() }
    }

    /// Largest per-element phase difference to `other` after removing the best
    /// common offset (circular mean of the differences).
    pub fn max_phase_error_modulo_global(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(crate::error::dims("phase profile comparison", self.len(), other.len()));
        }
        let mean: Complex64 = self
            .omegas
            .iter()
            .zip(&other.omegas)
            .map(|(a, b)| Complex64::from_polar(1.0, a - b))
            .sum();
        let offset = mean.arg();
        Ok(self
            .omegas
            .iter()
            .zip(&other.omegas)
            .map(|(a, b)| wrap_phase(a - b - offset).abs())
            .fold(0.0, f64::max))
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = x.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}
