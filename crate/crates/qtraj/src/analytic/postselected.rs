use super::check_quarter_phase;
use crate::core::SuperpositionSpec;
use crate::density::{Fringe, GaussFringeDensity, Gaussian, Marginal1D};
use crate::error::Result;
use crate::scalar::Real;

/// Phase-space moments of the state inferred for the + branch at t₀.
///
/// Observed (operator) variances are these variances minus one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostselectedMoments<T> {
    pub var_x_plus: T,
    pub var_p_plus: T,
    pub mean_p_plus: T,
}

impl<T: Real> PostselectedMoments<T> {
    pub fn observed_var_x(&self) -> T {
        self.var_x_plus - T::one()
    }

    pub fn observed_var_p(&self) -> T {
        self.var_p_plus - T::one()
    }

    /// `ε = Δ(x̂|+) Δ(p̂|+)`.
    pub fn uncertainty_product(&self) -> T {
        (self.observed_var_x() * self.observed_var_p()).sqrt()
    }
}

/// Moments of `Q(x, p | B₊)` for the equal-weight superposition at `φ = π/2`.
pub fn variances_postselected_analytic<T: Real>(spec: &SuperpositionSpec<T>) -> Result<PostselectedMoments<T>> {
    check_quarter_phase(spec.phase_phi)?;
    let (vx, vp) = (spec.mode.var_x(), spec.mode.var_p());
    let x1 = spec.x1();
    let mean_p = -(vp * x1 / vx) * (-(x1 * x1) * (T::one() + vp / vx) / (T::lit(2.0) * vx)).exp();
    Ok(PostselectedMoments { var_x_plus: vx, var_p_plus: vp - mean_p * mean_p, mean_p_plus: mean_p })
}

/// `Q(p | B₊) = N(p; 0, σ_p²)(1 − e^{−x₁²/2σ_x²} sin(p x₁/σ_x²))`.
pub fn p_density_postselected<T: Real>(spec: &SuperpositionSpec<T>) -> Result<Marginal1D<T>> {
    check_quarter_phase(spec.phase_phi)?;
    let (vx, vp) = (spec.mode.var_x(), spec.mode.var_p());
    let x1 = spec.x1();
    Ok(GaussFringeDensity::new(
        1,
        vec![Gaussian::new(T::one(), vec![T::zero()], vec![vp])],
        Some(Fringe {
            amplitude: (-(x1 * x1) / (T::lit(2.0) * vx)).exp(),
            mean: vec![T::zero()],
            var: vec![vp],
            wave: vec![x1 / vx],
            phase: T::FRAC_PI_2(),
        }),
        T::one(),
    ))
}
