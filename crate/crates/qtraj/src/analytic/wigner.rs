use super::check_worked_phase;
use super::single_mode::{marginal_p_at_gain, marginal_x_at_gain};
use crate::core::{AmplifierSpec, SuperpositionSpec};
use crate::density::{Fringe, GaussFringeDensity, Gaussian, Marginal1D};
use crate::error::Result;
use crate::scalar::Real;

/// Wigner function of the prepared superposition (may be negative).
///
/// Only `φ = 0` and `φ = π/2` are accepted.
pub fn wigner_cat<T: Real>(spec: &SuperpositionSpec<T>) -> Result<GaussFringeDensity<T>> {
    check_worked_phase(spec.phase_phi)?;
    let s = spec.mode.squeezed_var();
    let x1 = spec.x1();
    let var = vec![s, T::one() / s];
    let mut gaussians = Vec::with_capacity(2);
    for (w, sign) in [(spec.c1_mag, T::one()), (spec.c2_mag, -T::one())] {
        if w > T::zero() {
            gaussians.push(Gaussian::new(w * w, vec![sign * x1, T::zero()], var.clone()));
        }
    }
    let fringe = (spec.cross() > T::zero()).then(|| Fringe {
        amplitude: T::lit(2.0) * spec.cross(),
        mean: vec![T::zero(), T::zero()],
        var: var.clone(),
        wave: vec![T::zero(), x1],
        phase: spec.phase_phi,
    });
    Ok(GaussFringeDensity::new(2, gaussians, fringe, spec.norm()))
}

/// Future boundary density of the amplified quadrature at t_f, built from
/// the Wigner marginal: scale by G and convolve with a unit Gaussian.
pub fn fbc_from_wigner<T: Real>(spec: &SuperpositionSpec<T>, amp: &AmplifierSpec<T>) -> Result<Marginal1D<T>> {
    let w = wigner_cat(spec)?;
    let g = amp.gain_final();
    let (axis, factor) = if amp.gain_rate_g > T::zero() { (0, g) } else { (1, T::one() / g) };
    Ok(w.marginal(&[axis]).scale(&[factor]).convolve_gaussian(&[T::one()]))
}

/// Born distribution of x̂ for the prepared state in the scaled variable x₀.
pub fn born_x<T: Real>(spec: &SuperpositionSpec<T>) -> Marginal1D<T> {
    let s = spec.mode.squeezed_var();
    let x1 = spec.x1();
    let mut gaussians = Vec::with_capacity(2);
    for (w, sign) in [(spec.c1_mag, T::one()), (spec.c2_mag, -T::one())] {
        if w > T::zero() {
            gaussians.push(Gaussian::new(w * w, vec![sign * x1], vec![s]));
        }
    }
    let amplitude = T::lit(2.0) * spec.cross() * spec.phase_phi.cos() * (-(x1 * x1) / (T::lit(2.0) * s)).exp();
    let fringe = (amplitude != T::zero()).then(|| Fringe {
        amplitude,
        mean: vec![T::zero()],
        var: vec![s],
        wave: vec![T::zero()],
        phase: T::zero(),
    });
    GaussFringeDensity::new(1, gaussians, fringe, spec.norm())
}

/// Born distribution of p̂ in the scaled variable p₀:
/// `N(p₀; 0, e^{2r})(1 + 2|c₁c₂| cos(φ + x₁p₀))`.
pub fn born_p<T: Real>(spec: &SuperpositionSpec<T>) -> Marginal1D<T> {
    let vp = T::one() / spec.mode.squeezed_var();
    let weight = spec.c1_mag * spec.c1_mag + spec.c2_mag * spec.c2_mag;
    let gaussians = vec![Gaussian::new(weight, vec![T::zero()], vec![vp])];
    let fringe = (spec.cross() > T::zero()).then(|| Fringe {
        amplitude: T::lit(2.0) * spec.cross(),
        mean: vec![T::zero()],
        var: vec![vp],
        wave: vec![spec.x1()],
        phase: spec.phase_phi,
    });
    GaussFringeDensity::new(1, gaussians, fringe, spec.norm())
}

/// Analytic density of the amplified quadrature at t_f in the scaled
/// variable (x/G for g > 0, p·G for g < 0).
pub fn scaled_final_marginal<T: Real>(spec: &SuperpositionSpec<T>, amp: &AmplifierSpec<T>) -> Marginal1D<T> {
    let g = amp.gain_final();
    if amp.gain_rate_g > T::zero() {
        marginal_x_at_gain(spec, g).scale(&[T::one() / g])
    } else {
        marginal_p_at_gain(spec, g).scale(&[g])
    }
}
