//! Scenario parameters and the constants derived from them.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One field mode: mean quadrature amplitude and squeeze parameter.
///
/// Quadratures follow `x = a + a†`, so a coherent amplitude `α₀` has
/// `mean_x = 2α₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec<T> {
    pub mean_x: T,
    pub squeeze_r: T,
}

impl<T: Real> ModeSpec<T> {
    pub fn new(mean_x: T, squeeze_r: T) -> Self {
        Self { mean_x, squeeze_r }
    }

    /// Coherent state `|α₀⟩`.
    pub fn coherent(alpha0: T) -> Self {
        Self::new(T::lit(2.0) * alpha0, T::zero())
    }

    /// Q-function variance in x at t = 0: `1 + e^{-2r}`.
    pub fn var_x(&self) -> T {
        T::one() + (T::lit(-2.0) * self.squeeze_r).exp()
    }

    /// Q-function variance in p at t = 0: `1 + e^{2r}`.
    pub fn var_p(&self) -> T {
        T::one() + (T::lit(2.0) * self.squeeze_r).exp()
    }

    /// Measured (operator) variance in x: `e^{-2r}`.
    pub fn squeezed_var(&self) -> T {
        (T::lit(-2.0) * self.squeeze_r).exp()
    }

    fn check(&self, name: &'static str) -> Result<()> {
        if !self.mean_x.is_finite() || !self.squeeze_r.is_finite() {
            return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// Two-component superposition `c₁|x₁/2, r⟩ + c₂|−x₁/2, r⟩` with
/// `c₂ = |c₂|e^{iφ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperpositionSpec<T> {
    pub mode: ModeSpec<T>,
    pub c1_mag: T,
    pub c2_mag: T,
    pub phase_phi: T,
}

impl<T: Real> SuperpositionSpec<T> {
    pub fn new(mode: ModeSpec<T>, c1_mag: T, c2_mag: T, phase_phi: T) -> Self {
        Self { mode, c1_mag, c2_mag, phase_phi }
    }

    /// Equal-weight cat `(|x₁/2,r⟩ + e^{iφ}|−x₁/2,r⟩)/√2`.
    pub fn symmetric(mode: ModeSpec<T>, phase_phi: T) -> Self {
        let c = T::FRAC_1_SQRT_2();
        Self::new(mode, c, c, phase_phi)
    }

    /// Superposition specified by `|c₁|²`.
    pub fn from_c1_sq(mode: ModeSpec<T>, c1_sq: T, phase_phi: T) -> Self {
        let c1_sq = c1_sq.max(T::zero()).min(T::one());
        Self::new(mode, c1_sq.sqrt(), (T::one() - c1_sq).sqrt(), phase_phi)
    }

    /// A single squeezed state (`c₂ = 0`).
    pub fn single(mode: ModeSpec<T>) -> Self {
        Self::new(mode, T::one(), T::zero(), T::zero())
    }

    pub fn x1(&self) -> T {
        self.mode.mean_x
    }

    /// `|c₁c₂|`, the interference weight.
    pub fn cross(&self) -> T {
        self.c1_mag * self.c2_mag
    }

    /// Normalization constant `N` of the Q function; time independent.
    pub fn norm(&self) -> T {
        let x1 = self.x1();
        let overlap = (-(x1 * x1) / (T::lit(2.0) * self.mode.squeezed_var())).exp();
        T::one() / (T::one() + T::lit(2.0) * self.cross() * self.phase_phi.cos() * overlap)
    }

    pub fn check(&self) -> Result<()> {
        self.mode.check("mode")?;
        let neg = self.c1_mag < T::zero() || self.c2_mag < T::zero();
        let total = self.c1_mag * self.c1_mag + self.c2_mag * self.c2_mag;
        if neg || (total - T::one()).abs() > T::norm_tolerance() {
            return Err(Error::NonNormalizedAmplitudes(total.to_f64_lossy()));
        }
        if !self.phase_phi.is_finite() {
            return Err(Error::InvalidParameter { name: "phase_phi", reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// Entangled cat `N₂(|x₁/2,r⟩|x₁B/2,r₂⟩ + e^{iφ}|−x₁/2,r⟩|−x₁B/2,r₂⟩)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeSpec<T> {
    pub mode_a: ModeSpec<T>,
    pub mode_b: ModeSpec<T>,
    pub phase_phi: T,
}

impl<T: Real> TwoModeSpec<T> {
    pub fn new(mode_a: ModeSpec<T>, mode_b: ModeSpec<T>, phase_phi: T) -> Self {
        Self { mode_a, mode_b, phase_phi }
    }

    /// Interference damping of the x-marginal at t = 0, before `cos φ`.
    pub fn overlap(&self) -> T {
        let two = T::lit(2.0);
        let a = self.mode_a.mean_x;
        let b = self.mode_b.mean_x;
        (-(a * a) / (two * self.mode_a.squeezed_var()) - (b * b) / (two * self.mode_b.squeezed_var())).exp()
    }

    /// Normalization factor `f(φ)` of the two-mode Q function.
    pub fn f_phi(&self) -> T {
        T::one() + self.phase_phi.cos() * self.overlap()
    }

    /// State normalization `N₂`; equals `1/√2` when `cos φ = 0`.
    pub fn n2(&self) -> T {
        T::one() / (T::lit(2.0) * self.f_phi()).sqrt()
    }

    pub fn check(&self) -> Result<()> {
        self.mode_a.check("mode_a")?;
        self.mode_b.check("mode_b")?;
        if !self.phase_phi.is_finite() {
            return Err(Error::InvalidParameter { name: "phase_phi", reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// Parametric amplifier: `G(t) = e^{g t}` on x (g > 0) or on p (g < 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplifierSpec<T> {
    pub gain_rate_g: T,
    pub t_final: T,
    pub n_steps: usize,
}

impl<T: Real> AmplifierSpec<T> {
    pub fn new(gain_rate_g: T, t_final: T, n_steps: usize) -> Self {
        Self { gain_rate_g, t_final, n_steps }
    }

    /// Amplifier specified by the product `g·t_f`.
    pub fn from_gtf(gain_rate_g: T, gtf: T, n_steps: usize) -> Self {
        Self::new(gain_rate_g, gtf / gain_rate_g.abs(), n_steps)
    }

    pub fn gain(&self, t: T) -> T {
        (self.gain_rate_g * t).exp()
    }

    pub fn gain_final(&self) -> T {
        self.gain(self.t_final)
    }

    pub fn grid(&self) -> TimeGrid<T> {
        TimeGrid::uniform(self.t_final, self.n_steps)
    }

    pub fn check(&self) -> Result<()> {
        if self.gain_rate_g == T::zero() || !self.gain_rate_g.is_finite() {
            return Err(Error::ZeroGain);
        }
        if self.n_steps == 0 {
            return Err(Error::NonPositiveSteps);
        }
        if !(self.t_final > T::zero()) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter { name: "t_final", reason: "must be positive".into() });
        }
        Ok(())
    }

    pub(crate) fn check_time(&self, t: T) -> Result<()> {
        let slack = self.t_final * T::lit(1e-12);
        if !(t >= T::zero() - slack && t <= self.t_final + slack) {
            return Err(Error::TimeOutOfRange { t: t.to_f64_lossy(), t_final: self.t_final.to_f64_lossy() });
        }
        Ok(())
    }
}

/// Uniform recording grid `0 = t₀ < … < t_n = t_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T> {
    pub times: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn uniform(t_final: T, n_steps: usize) -> Self {
        let n = T::from_usize(n_steps).unwrap();
        let mut times: Vec<T> = (0..=n_steps).map(|i| t_final * T::from_usize(i).unwrap() / n).collect();
        times[n_steps] = t_final;
        Self { times }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_final(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn dt(&self) -> T {
        self.times[1] - self.times[0]
    }
}

/// Time-dependent Gaussian parameters of one amplified mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeAtTime<T> {
    pub gain: T,
    pub mean_x: T,
    pub var_x: T,
    pub var_p: T,
}

impl<T: Real> ModeAtTime<T> {
    /// `σ_x²(t) = 1 + G²(σ_x²(0)−1)`, `σ_p²(t) = 1 + (σ_p²(0)−1)/G²`.
    pub fn new(mode: &ModeSpec<T>, gain: T) -> Self {
        let g2 = gain * gain;
        Self {
            gain,
            mean_x: gain * mode.mean_x,
            var_x: T::one() + g2 * (mode.var_x() - T::one()),
            var_p: T::one() + (mode.var_p() - T::one()) / g2,
        }
    }
}

/// Measurement outcome branch, identified by the sign of the amplified
/// quadrature at t_f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// Sign classification; an exact zero belongs to `Plus`.
    pub fn of<T: Real>(x: T) -> Self {
        if x >= T::zero() {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }

    pub fn sign<T: Real>(self) -> T {
        match self {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    }
}

/// Single-mode scenario with derived constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeScenario<T> {
    pub spec: SuperpositionSpec<T>,
    pub amp: AmplifierSpec<T>,
    pub var_x: T,
    pub var_p: T,
    pub norm: T,
    pub gain_final: T,
}

/// Two-mode scenario with derived constants; both modes share `amp` unless
/// `amp_b` differs.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeScenario<T> {
    pub spec: TwoModeSpec<T>,
    pub amp_a: AmplifierSpec<T>,
    pub amp_b: AmplifierSpec<T>,
    pub n2: T,
    pub f_phi: T,
    pub gain_final_a: T,
    pub gain_final_b: T,
}

/// Either prepared state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec<T> {
    Single(SuperpositionSpec<T>),
    TwoMode(TwoModeSpec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario<T> {
    Single(SingleModeScenario<T>),
    TwoMode(TwoModeScenario<T>),
}

/// Checks parameters and precomputes the derived constants.
pub fn validate_scenario<T: Real>(spec: StateSpec<T>, amp: AmplifierSpec<T>) -> Result<Scenario<T>> {
    amp.check()?;
    match spec {
        StateSpec::Single(s) => validate_single(s, amp).map(Scenario::Single),
        StateSpec::TwoMode(s) => validate_two_mode(s, amp, amp).map(Scenario::TwoMode),
    }
}

pub fn validate_single<T: Real>(spec: SuperpositionSpec<T>, amp: AmplifierSpec<T>) -> Result<SingleModeScenario<T>> {
    amp.check()?;
    spec.check()?;
    Ok(SingleModeScenario {
        var_x: spec.mode.var_x(),
        var_p: spec.mode.var_p(),
        norm: spec.norm(),
        gain_final: amp.gain_final(),
        spec,
        amp,
    })
}

pub fn validate_two_mode<T: Real>(
    spec: TwoModeSpec<T>,
    amp_a: AmplifierSpec<T>,
    amp_b: AmplifierSpec<T>,
) -> Result<TwoModeScenario<T>> {
    amp_a.check()?;
    amp_b.check()?;
    spec.check()?;
    if amp_a.n_steps != amp_b.n_steps || amp_a.t_final != amp_b.t_final {
        return Err(Error::InvalidParameter { name: "amp_b", reason: "modes must share one time grid".into() });
    }
    Ok(TwoModeScenario {
        n2: spec.n2(),
        f_phi: spec.f_phi(),
        gain_final_a: amp_a.gain_final(),
        gain_final_b: amp_b.gain_final(),
        spec,
        amp_a,
        amp_b,
    })
}
