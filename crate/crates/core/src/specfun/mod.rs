//! Special functions: gamma, modified Bessel `I_nu`, `K_nu` (real and
//! complex argument), and the complex zeros of `K_mu`.

mod bessel;
mod complex;
mod erf;
mod gamma;
mod zeros;

pub use bessel::{
    bessel_i, bessel_i_scaled, bessel_ik_scaled, bessel_k, bessel_k_scaled, BesselIkScaled,
    SERIES_RADIUS,
};
pub use complex::{bessel_k_complex, bessel_k_half_integer, half_integer_poly, COMPLEX_RANGE};
pub use erf::erfcx;
pub use gamma::{gamma_fn, EULER_GAMMA, PSI_ONE};
pub use zeros::{k_zero_count, k_zero_set, KZeroSet, MAX_ZERO_ORDER};

pub(crate) use complex::{half_integer_reduced, k_pair_complex};
pub(crate) use gamma::gamma_pos;

pub use num_complex::Complex64 as ComplexValue;

use crate::error::{domain, Result};

/// A Bessel order (also the drift `mu`): real, finite, `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Order(f64);

impl Order {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return domain(format!("order must be finite and >= 0, got {nu}"));
        }
        Ok(Order(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `Some(n)` when the order is `n + 1/2`.
    pub fn half_integer_index(self) -> Option<usize> {
        half_integer_index(self.0)
    }
}

pub(crate) fn half_integer_index(nu: f64) -> Option<usize> {
    let n = nu - 0.5;
    if n >= -1e-12 && (n - n.round()).abs() < 1e-12 {
        Some(n.round() as usize)
    } else {
        None
    }
}
