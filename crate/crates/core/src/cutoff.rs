//! Rotation-invariant form factors ρ(|k|).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CutoffProfile {
    /// ρ = 1 on the open shell κ < |k| < Λ, 0 elsewhere.
    Sharp { kappa: f64, lambda: f64 },
    /// ρ = |k| e^{−λ|k|}
    Exponential { lambda: f64 },
}

impl CutoffProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CutoffProfile::Sharp { kappa, lambda } => {
                if !(kappa >= 0.0 && lambda > kappa && lambda.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "sharp cutoff needs 0 <= kappa < lambda, got {kappa}, {lambda}"
                    )));
                }
            }
            CutoffProfile::Exponential { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidModel(format!("exponential cutoff needs lambda > 0, got {lambda}")));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, k_abs: f64) -> f64 {
        match *self {
            CutoffProfile::Sharp { kappa, lambda } => {
                if k_abs > kappa && k_abs < lambda {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::Exponential { lambda } => k_abs * (-lambda * k_abs).exp(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharp_shell_is_open() {
        let c = CutoffProfile::Sharp { kappa: 0.5, lambda: 2.0 };
        assert_eq!(c.value(0.5), 0.0);
        assert_eq!(c.value(1.0), 1.0);
        assert_eq!(c.value(2.0), 0.0);
    }

    #[test]
    fn exponential_profile() {
        let c = CutoffProfile::Exponential { lambda: 1.0 };
        assert!((c.value(2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        assert!(CutoffProfile::Exponential { lambda: 0.0 }.validate().is_err());
        assert!(CutoffProfile::Sharp { kappa: 1.0, lambda: 0.5 }.validate().is_err());
    }
}
