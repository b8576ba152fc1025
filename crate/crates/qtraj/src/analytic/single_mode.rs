use crate::core::{AmplifierSpec, ModeAtTime, SuperpositionSpec};
use crate::density::{Fringe, GaussFringeDensity, Gaussian, Marginal1D};
use crate::error::Result;
use crate::scalar::{gauss, Real};

/// Q(x, p, t) of the superposition under amplification.
pub fn q_single_mode<T: Real>(
    spec: &SuperpositionSpec<T>,
    amp: &AmplifierSpec<T>,
    t: T,
) -> Result<GaussFringeDensity<T>> {
    amp.check_time(t)?;
    Ok(q_at_gain(spec, amp.gain(t)))
}

/// Q(x, p) at amplification factor `gain`.
pub fn q_at_gain<T: Real>(spec: &SuperpositionSpec<T>, gain: T) -> GaussFringeDensity<T> {
    let m = ModeAtTime::new(&spec.mode, gain);
    let var = vec![m.var_x, m.var_p];
    let mut gaussians = Vec::with_capacity(2);
    for (w, sign) in [(spec.c1_mag, T::one()), (spec.c2_mag, -T::one())] {
        if w > T::zero() {
            gaussians.push(Gaussian::new(w * w, vec![sign * m.mean_x, T::zero()], var.clone()));
        }
    }
    let fringe = (spec.cross() > T::zero()).then(|| Fringe {
        amplitude: T::lit(2.0) * spec.cross() * (-(m.mean_x * m.mean_x) / (T::lit(2.0) * m.var_x)).exp(),
        mean: vec![T::zero(), T::zero()],
        var: var.clone(),
        wave: vec![T::zero(), m.mean_x / m.var_x],
        phase: spec.phase_phi,
    });
    GaussFringeDensity::new(2, gaussians, fringe, spec.norm())
}

/// Q(x, t): Gaussians at ±G x₁ and a damped interference peak at x = 0.
pub fn marginal_x<T: Real>(spec: &SuperpositionSpec<T>, amp: &AmplifierSpec<T>, t: T) -> Result<Marginal1D<T>> {
    amp.check_time(t)?;
    Ok(marginal_x_at_gain(spec, amp.gain(t)))
}

pub fn marginal_x_at_gain<T: Real>(spec: &SuperpositionSpec<T>, gain: T) -> Marginal1D<T> {
    let m = ModeAtTime::new(&spec.mode, gain);
    let two = T::lit(2.0);
    let mut gaussians = Vec::with_capacity(2);
    for (w, sign) in [(spec.c1_mag, T::one()), (spec.c2_mag, -T::one())] {
        if w > T::zero() {
            gaussians.push(Gaussian::new(w * w, vec![sign * m.mean_x], vec![m.var_x]));
        }
    }
    let mx2 = m.mean_x * m.mean_x;
    let amplitude =
        two * spec.cross() * spec.phase_phi.cos() * (-mx2 * (T::one() + m.var_p / m.var_x) / (two * m.var_x)).exp();
    let fringe = (amplitude != T::zero()).then(|| Fringe {
        amplitude,
        mean: vec![T::zero()],
        var: vec![m.var_x],
        wave: vec![T::zero()],
        phase: T::zero(),
    });
    GaussFringeDensity::new(1, gaussians, fringe, spec.norm())
}

/// Q(p, t): one Gaussian modulated by `1 + 2|c₁c₂| e^{−G²x₁²/2σ_x²} cos(φ + G p x₁/σ_x²)`.
pub fn marginal_p<T: Real>(spec: &SuperpositionSpec<T>, amp: &AmplifierSpec<T>, t: T) -> Result<Marginal1D<T>> {
    amp.check_time(t)?;
    Ok(marginal_p_at_gain(spec, amp.gain(t)))
}

pub fn marginal_p_at_gain<T: Real>(spec: &SuperpositionSpec<T>, gain: T) -> Marginal1D<T> {
    let m = ModeAtTime::new(&spec.mode, gain);
    let weight = spec.c1_mag * spec.c1_mag + spec.c2_mag * spec.c2_mag;
    let gaussians = vec![Gaussian::new(weight, vec![T::zero()], vec![m.var_p])];
    let fringe = (spec.cross() > T::zero()).then(|| Fringe {
        amplitude: T::lit(2.0) * spec.cross() * (-(m.mean_x * m.mean_x) / (T::lit(2.0) * m.var_x)).exp(),
        mean: vec![T::zero()],
        var: vec![m.var_p],
        wave: vec![m.mean_x / m.var_x],
        phase: spec.phase_phi,
    });
    GaussFringeDensity::new(1, gaussians, fringe, spec.norm())
}

/// Parameters of `Q(p | x)` at t = 0 in the form
/// `N(p; 0, var_p) · (1 + contrast · cos(phase + wave·p)) / Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PConditional<T> {
    pub var_p: T,
    pub contrast: T,
    pub wave: T,
    pub phase: T,
}

impl<T: Real> PConditional<T> {
    pub fn to_density(&self) -> Marginal1D<T> {
        let gaussians = vec![Gaussian::new(T::one(), vec![T::zero()], vec![self.var_p])];
        let fringe = Some(Fringe {
            amplitude: self.contrast,
            mean: vec![T::zero()],
            var: vec![self.var_p],
            wave: vec![self.wave],
            phase: self.phase,
        });
        let mut d = GaussFringeDensity::new(1, gaussians, fringe, T::one());
        d.norm = T::one() / d.total_mass();
        d
    }
}

/// Conditional `Q(p | x) = Q(x, p, t₀) / Q(x, t₀)`.
///
/// For `c₁ = c₂` and `φ = π/2` this is
/// `N(p; 0, σ_p²)(1 − sin(p x₁/σ_x²)/cosh(x x₁/σ_x²))`.
pub fn conditional_p_given_x<T: Real>(spec: &SuperpositionSpec<T>, x: T) -> PConditional<T> {
    let (vx, vp) = (spec.mode.var_x(), spec.mode.var_p());
    let x1 = spec.x1();
    let two = T::lit(2.0);
    let c1 = spec.c1_mag * spec.c1_mag;
    let c2 = spec.c2_mag * spec.c2_mag;
    // Work with ratios to stay finite far in the tails.
    let (a, b) = (x - x1, x + x1);
    let lead = a.abs().min(b.abs());
    let e = |d: T| (-(d * d - lead * lead) / (two * vx)).exp();
    let d = c1 * e(a) + c2 * e(b);
    let f = two * spec.cross() * (-(x * x + x1 * x1 - lead * lead) / (two * vx)).exp();
    PConditional {
        var_p: vp,
        contrast: if d > T::zero() { f / d } else { T::zero() },
        wave: x1 / vx,
        phase: spec.phase_phi,
    }
}

/// `Q(x, p | B₊) = Q₊(x) Q(p | x)` at t₀ with `Q₊(x) = N(x; x₁, σ_x²)`.
pub fn postselected_joint_pdf<T: Real>(spec: &SuperpositionSpec<T>, x: T, p: T) -> T {
    let c = conditional_p_given_x(spec, x);
    let pc = c.to_density().eval1(p);
    gauss(x, spec.x1(), spec.mode.var_x()) * pc
}
