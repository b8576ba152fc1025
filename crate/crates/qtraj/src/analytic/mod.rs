//! Closed-form densities, marginals and moments used as test oracles.

mod postselected;
mod single_mode;
mod two_mode;
mod wigner;

pub use postselected::*;
pub use single_mode::*;
pub use two_mode::*;
pub use wigner::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Phases with a worked Wigner function.
pub(crate) fn check_worked_phase<T: Real>(phi: T) -> Result<()> {
    let tol = T::lit(1e-12);
    if phi.abs() <= tol || (phi - T::FRAC_PI_2()).abs() <= tol {
        Ok(())
    } else {
        Err(Error::UnsupportedPhase(phi.to_f64_lossy()))
    }
}

pub(crate) fn check_quarter_phase<T: Real>(phi: T) -> Result<()> {
    if (phi - T::FRAC_PI_2()).abs() <= T::lit(1e-12) {
        Ok(())
    } else {
        Err(Error::UnsupportedPhase(phi.to_f64_lossy()))
    }
}
