//! Weighted Gaussians plus one Gaussian-enveloped cosine fringe.
//!
//! Every closed form in the model has the shape
//!
//! ```text
//! ρ(z) = norm · [ Σᵢ wᵢ N(z; mᵢ, Vᵢ) + A · N(z; m_f, V_f) · cos(k·z + θ) ]
//! ```
//!
//! with diagonal covariances. The family is closed under marginalization,
//! conditioning on one coordinate, linear rescaling and convolution with a
//! diagonal Gaussian, all of which are done here in closed form.

use crate::scalar::{gauss, Real};

/// Diagonal Gaussian component with weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian<T> {
    pub weight: T,
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> Gaussian<T> {
    pub fn new(weight: T, mean: Vec<T>, var: Vec<T>) -> Self {
        debug_assert_eq!(mean.len(), var.len());
        Self { weight, mean, var }
    }

    /// Normalized density of the component (weight excluded).
    pub fn pdf(&self, z: &[T]) -> T {
        self.mean.iter().zip(&self.var).zip(z).map(|((&m, &v), &zi)| gauss(zi, m, v)).fold(T::one(), |a, b| a * b)
    }
}

/// `A · N(z; mean, var) · cos(wave·z + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fringe<T> {
    pub amplitude: T,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub wave: Vec<T>,
    pub phase: T,
}

impl<T: Real> Fringe<T> {
    pub fn envelope(&self, z: &[T]) -> T {
        self.mean.iter().zip(&self.var).zip(z).map(|((&m, &v), &zi)| gauss(zi, m, v)).fold(T::one(), |a, b| a * b)
    }

    pub fn argument(&self, z: &[T]) -> T {
        self.wave.iter().zip(z).fold(self.phase, |acc, (&k, &zi)| acc + k * zi)
    }

    pub fn eval(&self, z: &[T]) -> T {
        self.amplitude * self.envelope(z) * self.argument(z).cos()
    }

    /// Integral over all coordinates.
    pub fn mass(&self) -> T {
        let half = T::lit(0.5);
        let (mut arg, mut damp) = (self.phase, T::zero());
        for ((&k, &m), &v) in self.wave.iter().zip(&self.mean).zip(&self.var) {
            arg = arg + k * m;
            damp = damp + half * k * k * v;
        }
        self.amplitude * (-damp).exp() * arg.cos()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussFringeDensity<T> {
    dim: usize,
    pub gaussians: Vec<Gaussian<T>>,
    pub fringe: Option<Fringe<T>>,
    pub norm: T,
}

/// A [`GaussFringeDensity`] of dimension one.
pub type Marginal1D<T> = GaussFringeDensity<T>;

impl<T: Real> GaussFringeDensity<T> {
    pub fn new(dim: usize, gaussians: Vec<Gaussian<T>>, fringe: Option<Fringe<T>>, norm: T) -> Self {
        assert!(gaussians.iter().all(|g| g.mean.len() == dim && g.var.len() == dim), "component dimension mismatch");
        if let Some(f) = &fringe {
            assert!(f.mean.len() == dim && f.var.len() == dim && f.wave.len() == dim, "fringe dimension mismatch");
        }
        Self { dim, gaussians, fringe, norm }
    }

    /// A single normalized Gaussian.
    pub fn gaussian(mean: Vec<T>, var: Vec<T>) -> Self {
        let dim = mean.len();
        Self::new(dim, vec![Gaussian::new(T::one(), mean, var)], None, T::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, z: &[T]) -> T {
        debug_assert_eq!(z.len(), self.dim);
        let mut s = self.gaussians.iter().fold(T::zero(), |acc, g| acc + g.weight * g.pdf(z));
        if let Some(f) = &self.fringe {
            s = s + f.eval(z);
        }
        self.norm * s
    }

    /// Convenience for one-dimensional densities.
    pub fn eval1(&self, z: T) -> T {
        self.eval(&[z])
    }

    /// Closed-form integral over all of space.
    pub fn total_mass(&self) -> T {
        let w = self.gaussians.iter().fold(T::zero(), |acc, g| acc + g.weight);
        let f = self.fringe.as_ref().map_or(T::zero(), |f| f.mass());
        self.norm * (w + f)
    }

    pub fn fringe_amplitude(&self) -> T {
        self.fringe.as_ref().map_or(T::zero(), |f| f.amplitude)
    }

    /// Lower and upper coordinate bounds covering `nsigma` standard
    /// deviations around every component and the fringe envelope.
    pub fn bounds(&self, axis: usize, nsigma: T) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let comps = self.gaussians.iter().map(|g| (g.mean[axis], g.var[axis]));
        let env = self.fringe.iter().map(|f| (f.mean[axis], f.var[axis]));
        for (m, v) in comps.chain(env) {
            let s = nsigma * v.sqrt();
            lo = lo.min(m - s);
            hi = hi.max(m + s);
        }
        (lo, hi)
    }

    /// Integrates out every axis not listed in `keep` (kept in the given order).
    pub fn marginal(&self, keep: &[usize]) -> Self {
        let pick = |v: &Vec<T>| keep.iter().map(|&i| v[i]).collect::<Vec<T>>();
        let gaussians = self.gaussians.iter().map(|g| Gaussian::new(g.weight, pick(&g.mean), pick(&g.var))).collect();
        let fringe = self.fringe.as_ref().map(|f| {
            let half = T::lit(0.5);
            let (mut phase, mut damp) = (f.phase, T::zero());
            for i in (0..self.dim).filter(|i| !keep.contains(i)) {
                phase = phase + f.wave[i] * f.mean[i];
                damp = damp + half * f.wave[i] * f.wave[i] * f.var[i];
            }
            Fringe {
                amplitude: f.amplitude * (-damp).exp(),
                mean: pick(&f.mean),
                var: pick(&f.var),
                wave: pick(&f.wave),
                phase,
            }
        });
        Self::new(keep.len(), gaussians, fringe, self.norm)
    }

    /// Density of the remaining coordinates given `z[axis] = value`,
    /// normalized to unit mass.
    pub fn condition(&self, axis: usize, value: T) -> Self {
        let drop = |v: &Vec<T>| v.iter().enumerate().filter(|&(i, _)| i != axis).map(|(_, &x)| x).collect::<Vec<T>>();
        let gaussians = self
            .gaussians
            .iter()
            .map(|g| Gaussian::new(g.weight * gauss(value, g.mean[axis], g.var[axis]), drop(&g.mean), drop(&g.var)))
            .collect();
        let fringe = self.fringe.as_ref().map(|f| Fringe {
            amplitude: f.amplitude * gauss(value, f.mean[axis], f.var[axis]),
            mean: drop(&f.mean),
            var: drop(&f.var),
            wave: drop(&f.wave),
            phase: f.phase + f.wave[axis] * value,
        });
        let mut out = Self::new(self.dim - 1, gaussians, fringe, T::one());
        out.norm = T::one() / out.total_mass();
        out
    }

    /// Density of `z' = s ⊙ z` for per-axis factors `s ≠ 0`.
    pub fn scale(&self, factors: &[T]) -> Self {
        let sm = |v: &Vec<T>| v.iter().zip(factors).map(|(&x, &s)| x * s).collect::<Vec<T>>();
        let sv = |v: &Vec<T>| v.iter().zip(factors).map(|(&x, &s)| x * s * s).collect::<Vec<T>>();
        let gaussians = self.gaussians.iter().map(|g| Gaussian::new(g.weight, sm(&g.mean), sv(&g.var))).collect();
        let fringe = self.fringe.as_ref().map(|f| Fringe {
            amplitude: f.amplitude,
            mean: sm(&f.mean),
            var: sv(&f.var),
            wave: f.wave.iter().zip(factors).map(|(&k, &s)| k / s).collect(),
            phase: f.phase,
        });
        Self::new(self.dim, gaussians, fringe, self.norm)
    }

    /// Convolution with a centred diagonal Gaussian of variances `add_var`.
    pub fn convolve_gaussian(&self, add_var: &[T]) -> Self {
        let half = T::lit(0.5);
        let gaussians = self
            .gaussians
            .iter()
            .map(|g| Gaussian::new(g.weight, g.mean.clone(), g.var.iter().zip(add_var).map(|(&v, &u)| v + u).collect()))
            .collect();
        let fringe = self.fringe.as_ref().map(|f| {
            let mut amplitude = f.amplitude;
            let mut phase = f.phase;
            let mut var = Vec::with_capacity(self.dim);
            let mut wave = Vec::with_capacity(self.dim);
            for (i, &u) in add_var.iter().enumerate().take(self.dim) {
                let (k, m, v) = (f.wave[i], f.mean[i], f.var[i]);
                let w = v + u;
                let k_new = k * v / w;
                amplitude = amplitude * (-half * k * k * v * u / w).exp();
                phase = phase + (k - k_new) * m;
                var.push(w);
                wave.push(k_new);
            }
            Fringe { amplitude, mean: f.mean.clone(), var, wave, phase }
        });
        Self::new(self.dim, gaussians, fringe, self.norm)
    }

    /// Sum of Gaussian weights plus the absolute fringe amplitude, times
    /// `norm`. The rejection proposal integrates to this value.
    pub fn proposal_mass(&self) -> T {
        let w = self.gaussians.iter().fold(T::zero(), |acc, g| acc + g.weight);
        self.norm * (w + self.fringe_amplitude().abs())
    }

    /// Unnormalized rejection proposal evaluated at `z`.
    pub fn proposal(&self, z: &[T]) -> T {
        let mut s = self.gaussians.iter().fold(T::zero(), |acc, g| acc + g.weight * g.pdf(z));
        if let Some(f) = &self.fringe {
            s = s + f.amplitude.abs() * f.envelope(z);
        }
        self.norm * s
    }

    /// First and second moments of a one-dimensional density.
    pub fn moments1(&self) -> (T, T) {
        assert_eq!(self.dim, 1);
        let (mut m1, mut m2) = (T::zero(), T::zero());
        for g in &self.gaussians {
            let (m, v) = (g.mean[0], g.var[0]);
            m1 = m1 + g.weight * m;
            m2 = m2 + g.weight * (v + m * m);
        }
        if let Some(f) = &self.fringe {
            // E[z cos(kz+θ)] and E[z² cos(kz+θ)] under N(m, v).
            let (k, m, v) = (f.wave[0], f.mean[0], f.var[0]);
            let a = f.amplitude * (-T::lit(0.5) * k * k * v).exp();
            let th = f.phase + k * m;
            let (c, s) = (th.cos(), th.sin());
            let e1 = m * c - k * v * s;
            let e2 = (v + m * m - k * k * v * v) * c - T::lit(2.0) * m * k * v * s;
            m1 = m1 + a * e1;
            m2 = m2 + a * e2;
        }
        let mass = self.total_mass() / self.norm;
        let mean = m1 / mass;
        (mean, m2 / mass - mean * mean)
    }
}
