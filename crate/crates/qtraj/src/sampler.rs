//! Boundary and conditional samplers for the Gaussian-plus-fringe family.
//!
//! Fringed densities are sampled by rejection from the proposal
//! `Σ wᵢ Nᵢ + |A| · envelope`, which dominates the density pointwise because
//! `|A · env · cos(·)| ≤ |A| · env`.

use crate::analytic::conditional_p_given_x;
use crate::core::SuperpositionSpec;
use crate::density::GaussFringeDensity;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Points used to verify proposal domination before sampling.
pub const VERIFY_POINTS: usize = 10_000;

const ENVELOPE_SLACK: f64 = 1e-10;

/// Draws from `Σ wᵢ N(μᵢ, σᵢ²)` given `(weight, mean, variance)` triples:
/// one uniform picks the component, one normal draws from it.
pub fn sample_gauss_mixture(components: &[(f64, f64, f64)], rng: &mut RngStream) -> Result<f64> {
    let sum: f64 = components.iter().map(|c| c.0).sum();
    if components.is_empty() || components.iter().any(|c| !(c.0 >= 0.0) || !(c.2 > 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::BadWeights(sum));
    }
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut pick = components.len() - 1;
    for (i, c) in components.iter().enumerate() {
        acc += c.0;
        if u < acc {
            pick = i;
            break;
        }
    }
    let (_, m, v) = components[pick];
    Ok(m + v.sqrt() * rng.normal())
}

#[derive(Clone, Debug)]
struct Component {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

/// Rejection sampler for one density instance of any dimension.
#[derive(Clone, Debug)]
pub struct RejectionSampler {
    density: GaussFringeDensity<f64>,
    /// Cumulative proposal weights, normalized; the envelope comes last
    /// when the density has a fringe.
    cumulative: Vec<f64>,
    components: Vec<Component>,
    fringed: bool,
}

impl RejectionSampler {
    /// Builds the sampler and verifies `0 ≤ density ≤ proposal` on a grid
    /// of about [`VERIFY_POINTS`] points spanning ±8σ of every component.
    pub fn new(density: &GaussFringeDensity<f64>) -> Result<Self> {
        let s = Self::unverified(density)?;
        s.verify_grid()?;
        Ok(s)
    }

    /// Builds the sampler with structural checks only (nonnegative finite
    /// weights, positive variances). Every proposed point is still checked
    /// against the envelope while sampling.
    pub fn unverified(density: &GaussFringeDensity<f64>) -> Result<Self> {
        let mut weights = Vec::new();
        let mut components = Vec::new();
        for g in &density.gaussians {
            if !(g.weight >= 0.0) || !g.weight.is_finite() || g.var.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::BadWeights(g.weight));
            }
            weights.push(g.weight);
            components.push(Component { mean: g.mean.clone(), sd: g.var.iter().map(|v| v.sqrt()).collect() });
        }
        let fringed = match &density.fringe {
            Some(f) if f.amplitude != 0.0 => {
                if !f.amplitude.is_finite() || f.var.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::BadWeights(f.amplitude));
                }
                weights.push(f.amplitude.abs());
                components.push(Component { mean: f.mean.clone(), sd: f.var.iter().map(|v| v.sqrt()).collect() });
                true
            }
            _ => false,
        };
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::BadWeights(total));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(Self { density: density.clone(), cumulative, components, fringed })
    }

    pub fn density(&self) -> &GaussFringeDensity<f64> {
        &self.density
    }

    /// Lower bound on the acceptance rate, `mass / proposal mass`.
    pub fn acceptance_bound(&self) -> f64 {
        self.density.total_mass() / self.density.proposal_mass()
    }

    fn verify_grid(&self) -> Result<()> {
        let d = self.density.dim();
        let per_axis = (VERIFY_POINTS as f64).powf(1.0 / d as f64).ceil() as usize;
        let ranges: Vec<(f64, f64)> = (0..d).map(|a| self.density.bounds(a, 8.0)).collect();
        let total = per_axis.pow(d as u32);
        let mut z = vec![0.0; d];
        for idx in 0..total {
            let mut rest = idx;
            for (a, &(lo, hi)) in ranges.iter().enumerate() {
                let i = rest % per_axis;
                rest /= per_axis;
                z[a] = lo + (hi - lo) * i as f64 / (per_axis - 1).max(1) as f64;
            }
            self.check_point(&z)?;
        }
        Ok(())
    }

    #[inline]
    fn check_point(&self, z: &[f64]) -> Result<(f64, f64)> {
        let rho = self.density.eval(z);
        let prop = self.density.proposal(z);
        let slack = ENVELOPE_SLACK * prop + f64::MIN_POSITIVE;
        if rho > prop + slack || rho < -slack {
            return Err(Error::EnvelopeViolation { at: z[0], density: rho, proposal: prop });
        }
        Ok((rho, prop))
    }

    fn pick(&self, u: f64) -> usize {
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }

    /// Draws one point into `out`; returns the number of proposals used.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) -> Result<u64> {
        let mut tries = 0;
        loop {
            tries += 1;
            let c = &self.components[self.pick(rng.uniform())];
            for (k, o) in out.iter_mut().enumerate() {
                *o = c.mean[k] + c.sd[k] * rng.normal();
            }
            if !self.fringed {
                return Ok(tries);
            }
            let (rho, prop) = self.check_point(out)?;
            if rng.uniform() * prop < rho {
                return Ok(tries);
            }
        }
    }

    /// One draw from a one-dimensional density.
    pub fn sample1(&self, rng: &mut RngStream) -> Result<f64> {
        let mut z = [0.0];
        self.sample_into(rng, &mut z)?;
        Ok(z[0])
    }
}

/// One draw from a one-dimensional fringed density. Builds and verifies a
/// sampler per call; reuse a [`RejectionSampler`] for repeated draws.
pub fn sample_fringe_density(density: &GaussFringeDensity<f64>, rng: &mut RngStream) -> Result<f64> {
    RejectionSampler::new(density)?.sample1(rng)
}

/// Draws p(0) from `Q(p | x)` at t₀.
///
/// The conditional is `N(p; 0, σ_p²)(1 + c cos(φ + k p))` with
/// `0 ≤ c ≤ 1`, so the proposal is the Gaussian alone and a draw is
/// accepted with probability `(1 + c cos(φ + k p)) / (1 + c) ≥ 1/2`.
pub fn sample_p_given_x(spec: &SuperpositionSpec<f64>, x: f64, rng: &mut RngStream) -> Result<f64> {
    let c = conditional_p_given_x(spec, x);
    if !(c.contrast >= 0.0 && c.contrast <= 1.0 + ENVELOPE_SLACK) {
        return Err(Error::EnvelopeViolation { at: x, density: 1.0 + c.contrast, proposal: 2.0 });
    }
    let sd = c.var_p.sqrt();
    let bound = 1.0 + c.contrast;
    loop {
        let p = sd * rng.normal();
        if rng.uniform() * bound < 1.0 + c.contrast * (c.phase + c.wave * p).cos() {
            return Ok(p);
        }
    }
}
