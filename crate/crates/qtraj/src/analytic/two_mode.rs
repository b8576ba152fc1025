use super::check_quarter_phase;
use crate::core::{AmplifierSpec, Branch, ModeAtTime, ModeSpec, TwoModeSpec};
use crate::density::{Fringe, GaussFringeDensity, Gaussian, Marginal1D};
use crate::error::Result;
use crate::quadrature::integrate;
use crate::scalar::{gauss, normal_cdf, Real};

/// Q(x_A, p_A, x_B, p_B, t) of the entangled cat.
pub fn two_mode_q<T: Real>(
    spec: &TwoModeSpec<T>,
    amp_a: &AmplifierSpec<T>,
    amp_b: &AmplifierSpec<T>,
    t: T,
) -> Result<GaussFringeDensity<T>> {
    amp_a.check_time(t)?;
    amp_b.check_time(t)?;
    Ok(two_mode_q_at_gain(spec, amp_a.gain(t), amp_b.gain(t)))
}

pub fn two_mode_q_at_gain<T: Real>(spec: &TwoModeSpec<T>, gain_a: T, gain_b: T) -> GaussFringeDensity<T> {
    let a = ModeAtTime::new(&spec.mode_a, gain_a);
    let b = ModeAtTime::new(&spec.mode_b, gain_b);
    let half = T::lit(0.5);
    let zero = T::zero();
    let var = vec![a.var_x, a.var_p, b.var_x, b.var_p];
    let gaussians = vec![
        Gaussian::new(half, vec![a.mean_x, zero, b.mean_x, zero], var.clone()),
        Gaussian::new(half, vec![-a.mean_x, zero, -b.mean_x, zero], var.clone()),
    ];
    let damp =
        (-(a.mean_x * a.mean_x) / (T::lit(2.0) * a.var_x) - (b.mean_x * b.mean_x) / (T::lit(2.0) * b.var_x)).exp();
    let fringe = Some(Fringe {
        amplitude: damp,
        mean: vec![zero; 4],
        var,
        wave: vec![zero, a.mean_x / a.var_x, zero, b.mean_x / b.var_x],
        phase: spec.phase_phi,
    });
    GaussFringeDensity::new(4, gaussians, fringe, T::one() / spec.f_phi())
}

/// Joint x-marginal Q(x_A, x_B, t): two correlated Gaussians plus a
/// `cos φ`-weighted interference peak.
pub fn two_mode_marginal_x<T: Real>(
    spec: &TwoModeSpec<T>,
    amp_a: &AmplifierSpec<T>,
    amp_b: &AmplifierSpec<T>,
    t: T,
) -> Result<GaussFringeDensity<T>> {
    amp_a.check_time(t)?;
    amp_b.check_time(t)?;
    Ok(two_mode_marginal_x_at_gain(spec, amp_a.gain(t), amp_b.gain(t)))
}

pub fn two_mode_marginal_x_at_gain<T: Real>(spec: &TwoModeSpec<T>, gain_a: T, gain_b: T) -> GaussFringeDensity<T> {
    let a = ModeAtTime::new(&spec.mode_a, gain_a);
    let b = ModeAtTime::new(&spec.mode_b, gain_b);
    let half = T::lit(0.5);
    let var = vec![a.var_x, b.var_x];
    let gaussians = vec![
        Gaussian::new(half, vec![a.mean_x, b.mean_x], var.clone()),
        Gaussian::new(half, vec![-a.mean_x, -b.mean_x], var.clone()),
    ];
    let amplitude = spec.phase_phi.cos() * interference_damping(&a) * interference_damping(&b);
    let fringe = (amplitude != T::zero()).then(|| Fringe {
        amplitude,
        mean: vec![T::zero(); 2],
        var,
        wave: vec![T::zero(); 2],
        phase: T::zero(),
    });
    GaussFringeDensity::new(2, gaussians, fringe, T::one() / spec.f_phi())
}

/// Meter marginal Q(x_B, t).
pub fn two_mode_marginal_xb<T: Real>(
    spec: &TwoModeSpec<T>,
    amp_a: &AmplifierSpec<T>,
    amp_b: &AmplifierSpec<T>,
    t: T,
) -> Result<Marginal1D<T>> {
    Ok(two_mode_marginal_x(spec, amp_a, amp_b, t)?.marginal(&[1]))
}

/// `e^{−G²x₁²(1+σ_p²/σ_x²)/2σ_x²}`; equal to `e^{−x₁²e^{2r}/2}` at every t.
fn interference_damping<T: Real>(m: &ModeAtTime<T>) -> T {
    (-(m.mean_x * m.mean_x) * (T::one() + m.var_p / m.var_x) / (T::lit(2.0) * m.var_x)).exp()
}

/// Conditional `Q(x_A, p_A, p_B | x_B)` at t₀, as a density over
/// `(x_A, p_A, p_B)`.
pub fn conditional_given_xb<T: Real>(spec: &TwoModeSpec<T>, x_b: T) -> GaussFringeDensity<T> {
    let (ma, mb) = (&spec.mode_a, &spec.mode_b);
    let (vxa, vpa, vxb, vpb) = (ma.var_x(), ma.var_p(), mb.var_x(), mb.var_p());
    let (x1, x1b) = (ma.mean_x, mb.mean_x);
    let two = T::lit(2.0);
    // Everything is scaled by e^{lead²/2σ_xB²} to keep tails finite.
    let (u, v) = (x_b - x1b, x_b + x1b);
    let lead = u.abs().min(v.abs());
    let e = |d: T| (-(d * d - lead * lead) / (two * vxb)).exp();
    let var = vec![vxa, vpa, vpb];
    let zero = T::zero();
    let gaussians = vec![
        Gaussian::new(e(u), vec![x1, zero, zero], var.clone()),
        Gaussian::new(e(v), vec![-x1, zero, zero], var.clone()),
    ];
    let amplitude =
        two * (-(x1 * x1) / (two * vxa) - (x1b * x1b) / (two * vxb) - (x_b * x_b - lead * lead) / (two * vxb)).exp();
    let fringe = Some(Fringe {
        amplitude,
        mean: vec![zero; 3],
        var,
        wave: vec![zero, x1 / vxa, x1b / vxb],
        phase: spec.phase_phi,
    });
    let mut d = GaussFringeDensity::new(3, gaussians, fringe, T::one());
    d.norm = T::one() / d.total_mass();
    d
}

/// Large-meter inferred state of A for a meter branch (φ = π/2): the
/// squeezed state at ±x₁ with the meter-damped fringe
/// `−e^{−x₁²/2σ_xA²} e^{−x₁B²(1+σ_pB²/σ_xB²)/2σ_xB²} sin(p_A x₁/σ_xA²)`.
pub fn inferred_state_a_analytic<T: Real>(spec: &TwoModeSpec<T>, branch: Branch) -> Result<GaussFringeDensity<T>> {
    check_quarter_phase(spec.phase_phi)?;
    let (ma, mb) = (&spec.mode_a, &spec.mode_b);
    let (vxa, vpa) = (ma.var_x(), ma.var_p());
    let x1 = ma.mean_x;
    let var = vec![vxa, vpa];
    let gaussians = vec![Gaussian::new(T::one(), vec![branch.sign::<T>() * x1, T::zero()], var.clone())];
    let fringe = Some(Fringe {
        amplitude: (-(x1 * x1) / (T::lit(2.0) * vxa)).exp() * meter_damping(mb),
        mean: vec![T::zero(); 2],
        var,
        wave: vec![T::zero(), x1 / vxa],
        phase: T::FRAC_PI_2(),
    });
    Ok(GaussFringeDensity::new(2, gaussians, fringe, T::one()))
}

/// `e^{−x₁B²(1+σ_pB²/σ_xB²)/2σ_xB²}`.
fn meter_damping<T: Real>(mb: &ModeSpec<T>) -> T {
    let (vx, vp, x) = (mb.var_x(), mb.var_p(), mb.mean_x);
    (-(x * x) * (T::one() + vp / vx) / (T::lit(2.0) * vx)).exp()
}

/// Density of the backward-propagated meter value x_B(0) within a branch
/// defined by the sign of x_B(t_f), for a symmetric two-component
/// boundary at amplification `gain`.
pub fn sign_binned_x0_pdf<T: Real>(mode: &ModeSpec<T>, gain: T, branch: Branch, x0: T) -> T {
    let v0 = mode.var_x();
    let vf = ModeAtTime::new(mode, gain).var_x;
    let cov = vf / gain;
    let cond_var = vf - cov * cov / v0;
    let s = branch.sign::<T>();
    let mut acc = T::zero();
    for m in [mode.mean_x, -mode.mean_x] {
        let mu = gain * m + cov / v0 * (x0 - m);
        let p = if cond_var > T::zero() {
            normal_cdf(s * mu / cond_var.sqrt())
        } else if s * mu >= T::zero() {
            T::one()
        } else {
            T::zero()
        };
        acc = acc + gauss(x0, m, v0) * p;
    }
    // Components weigh 1/2 and each branch has probability 1/2, so the
    // plain sum is already normalized.
    acc
}

/// Inferred state of A at finite meter gain, including the weight of the
/// wrong-sign component that the large-meter limit drops.
pub fn inferred_state_a_exact<T: Real>(
    spec: &TwoModeSpec<T>,
    amp_b: &AmplifierSpec<T>,
    branch: Branch,
) -> Result<GaussFringeDensity<T>> {
    check_quarter_phase(spec.phase_phi)?;
    let (ma, mb) = (&spec.mode_a, &spec.mode_b);
    let (vxa, vpa, vxb, vpb) = (ma.var_x(), ma.var_p(), mb.var_x(), mb.var_p());
    let (x1, x1b) = (ma.mean_x, mb.mean_x);
    let g = amp_b.gain_final();
    let two = T::lit(2.0);
    let lo = -x1b.abs() - T::lit(10.0) * vxb.sqrt();
    let hi = x1b.abs() + T::lit(10.0) * vxb.sqrt();
    let tol = T::lit(1e-12);
    let q = |x: T| sign_binned_x0_pdf(mb, g, branch, x);
    let k = x1b / vxb;
    let same = |x: T| {
        let z = -branch.sign::<T>() * two * x * k;
        if z > T::lit(700.0) {
            T::zero()
        } else {
            T::one() / (T::one() + z.exp())
        }
    };
    let w_same = integrate(|x| q(x) * same(x), lo, hi, tol);
    let w_other = integrate(|x| q(x) * (T::one() - same(x)), lo, hi, tol);
    let inv_cosh = integrate(|x| q(x) / (x * k).cosh(), lo, hi, tol);
    let total = w_same + w_other;
    let var = vec![vxa, vpa];
    let s = branch.sign::<T>();
    let gaussians = vec![
        Gaussian::new(w_same / total, vec![s * x1, T::zero()], var.clone()),
        Gaussian::new(w_other / total, vec![-s * x1, T::zero()], var.clone()),
    ];
    let fringe = Some(Fringe {
        amplitude: inv_cosh / total * (-(x1 * x1) / (two * vxa)).exp() * (-(k * k) * vpb / two).exp(),
        mean: vec![T::zero(); 2],
        var,
        wave: vec![T::zero(), x1 / vxa],
        phase: T::FRAC_PI_2(),
    });
    Ok(GaussFringeDensity::new(2, gaussians, fringe, T::one()))
}

/// Which printed form of the system-side damping factor to use in the
/// meter's postselected p-distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeterDamping {
    /// `e^{−x₁²(1+σ_pA²/σ_xA²)/2σ_xA²}`, consistent with the cat-state result.
    General,
    /// `e^{−x₁²(1+σ_pA²/σ_xA²)}`, without the 1/2σ_xA² scaling.
    Undivided,
}

impl MeterDamping {
    fn factor<T: Real>(self, ma: &ModeSpec<T>) -> T {
        let (vx, vp, x) = (ma.var_x(), ma.var_p(), ma.mean_x);
        let e = x * x * (T::one() + vp / vx);
        match self {
            MeterDamping::General => (-e / (T::lit(2.0) * vx)).exp(),
            MeterDamping::Undivided => (-e).exp(),
        }
    }
}

/// Postselected meter moments; observed variances are these minus one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeterVariances<T> {
    pub var_xb_plus: T,
    pub var_pb_plus: T,
    pub mean_pb_plus: T,
}

impl<T: Real> MeterVariances<T> {
    pub fn observed_var_xb(&self) -> T {
        self.var_xb_plus - T::one()
    }

    pub fn observed_var_pb(&self) -> T {
        self.var_pb_plus - T::one()
    }
}

/// `Q(p_B | B₊) = N(p_B; 0, σ_pB²)(1 − e^{−x₁B²/2σ_xB²} D_A sin(p_B x₁B/σ_xB²))`.
pub fn meter_p_density_postselected<T: Real>(spec: &TwoModeSpec<T>, damping: MeterDamping) -> Result<Marginal1D<T>> {
    check_quarter_phase(spec.phase_phi)?;
    let mb = &spec.mode_b;
    let (vx, vp, x) = (mb.var_x(), mb.var_p(), mb.mean_x);
    Ok(GaussFringeDensity::new(
        1,
        vec![Gaussian::new(T::one(), vec![T::zero()], vec![vp])],
        Some(Fringe {
            amplitude: (-(x * x) / (T::lit(2.0) * vx)).exp() * damping.factor(&spec.mode_a),
            mean: vec![T::zero()],
            var: vec![vp],
            wave: vec![x / vx],
            phase: T::FRAC_PI_2(),
        }),
        T::one(),
    ))
}

/// Meter moments conditioned on the + branch in the large-separation
/// component picture.
pub fn meter_conditional_variances<T: Real>(spec: &TwoModeSpec<T>, damping: MeterDamping) -> Result<MeterVariances<T>> {
    let (mean, var) = meter_p_density_postselected(spec, damping)?.moments1();
    Ok(MeterVariances { var_xb_plus: spec.mode_b.var_x(), var_pb_plus: var, mean_pb_plus: mean })
}

/// Observed `(Δp̂_B)₊² = 1 − 4β₀² e^{−4α₀²} e^{−4β₀²}` for a coherent meter and
/// coherent-state cat.
pub fn coherent_meter_observed_var_pb<T: Real>(alpha0: T, beta0: T) -> T {
    let four = T::lit(4.0);
    T::one() - four * beta0 * beta0 * (-four * alpha0 * alpha0).exp() * (-four * beta0 * beta0).exp()
}
