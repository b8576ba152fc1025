//! Branch binning, loops, observed variances and collapsed-state inference.

use rayon::prelude::*;

use crate::analytic::conditional_given_xb;
use crate::core::{Branch, SuperpositionSpec, TwoModeSpec};
use crate::density::{Fringe, GaussFringeDensity, Gaussian};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, purpose, RngStream};
use crate::sampler::{sample_p_given_x, RejectionSampler};
use crate::sde_engine::{TrajectoryEnsemble, CHUNK};
use crate::stats::{batch_ranges, MomentEstimate, Moments, BATCHES};

/// Minimum sample count for variance estimates.
pub const MIN_SAMPLES: usize = 100;

/// Phase-space values at t₀ of the trajectories in one sign branch.
///
/// Single-mode ensembles fill `x0`/`p0`; two-mode ensembles also fill the
/// meter columns `xb0`/`pb0` (`x0`/`p0` then belong to system A). Samples
/// stay in trajectory-index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PostselectedEnsemble {
    pub branch: Option<Branch>,
    pub traj_index: Vec<usize>,
    pub x0: Vec<f64>,
    pub p0: Vec<f64>,
    pub xb0: Vec<f64>,
    pub pb0: Vec<f64>,
}

impl PostselectedEnsemble {
    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn is_two_mode(&self) -> bool {
        !self.xb0.is_empty()
    }
}

/// Splits by the sign of the amplified quadrature of `mode` at t_f
/// (exact zeros go to +).
pub fn bin_by_sign(ens: &TrajectoryEnsemble, mode: usize) -> Result<(PostselectedEnsemble, PostselectedEnsemble)> {
    if ens.count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let amplify_x = ens.gain_rates[mode] > 0.0;
    let two = ens.modes() == 2;
    let mut plus = PostselectedEnsemble { branch: Some(Branch::Plus), ..Default::default() };
    let mut minus = PostselectedEnsemble { branch: Some(Branch::Minus), ..Default::default() };
    for i in 0..ens.count {
        let key = ens.endpoints(i, mode);
        let v = if amplify_x { key.xf } else { key.pf };
        let dest = match Branch::of(v) {
            Branch::Plus => &mut plus,
            Branch::Minus => &mut minus,
        };
        let a = ens.endpoints(i, 0);
        dest.traj_index.push(i);
        dest.x0.push(a.x0);
        dest.p0.push(a.p0);
        if two {
            let b = ens.endpoints(i, 1);
            dest.xb0.push(b.x0);
            dest.pb0.push(b.p0);
        }
    }
    Ok((plus, minus))
}

/// Fraction of trajectories whose two modes end with the same sign of x.
pub fn sign_agreement(ens: &TrajectoryEnsemble) -> Result<f64> {
    if ens.count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let same =
        (0..ens.count).filter(|&i| Branch::of(ens.endpoints(i, 0).xf) == Branch::of(ens.endpoints(i, 1).xf)).count();
    Ok(same as f64 / ens.count as f64)
}

/// Attaches `multiplicity` draws of p(0) from `Q(p | x)` to every x(0),
/// forming loops. Draw `k` of trajectory `i` uses stream
/// `i·multiplicity + k` of a seed derived from `seed`.
pub fn build_loops(
    ens: &PostselectedEnsemble,
    spec: &SuperpositionSpec<f64>,
    seed: u64,
    multiplicity: usize,
) -> Result<PostselectedEnsemble> {
    if multiplicity == 0 {
        return Err(Error::InvalidParameter { name: "multiplicity", reason: "must be at least 1".into() });
    }
    let loop_seed = derive_seed(seed, purpose::LOOPS);
    let n = ens.n();
    let parts: Vec<(Vec<f64>, Vec<f64>, Vec<usize>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            let cap = (hi - lo) * multiplicity;
            let (mut xs, mut ps, mut idx) = (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
            for j in lo..hi {
                let (t, x) = (ens.traj_index[j], ens.x0[j]);
                for k in 0..multiplicity {
                    let mut rng = RngStream::new(loop_seed, (t * multiplicity + k) as u64);
                    xs.push(x);
                    ps.push(sample_p_given_x(spec, x, &mut rng)?);
                    idx.push(t);
                }
            }
            Ok((xs, ps, idx))
        })
        .collect::<Result<_>>()?;
    let mut out = PostselectedEnsemble { branch: ens.branch, ..Default::default() };
    for (xs, ps, idx) in parts {
        out.x0.extend(xs);
        out.p0.extend(ps);
        out.traj_index.extend(idx);
    }
    Ok(out)
}

/// Two-mode loops: replaces `(x_A0, p_A0, p_B0)` of every trajectory by a
/// draw from `Q(x_A, p_A, p_B | x_B0)`, keeping the meter value x_B0.
pub fn build_loops_two_mode(
    ens: &PostselectedEnsemble,
    spec: &TwoModeSpec<f64>,
    seed: u64,
) -> Result<PostselectedEnsemble> {
    if !ens.is_two_mode() {
        return Err(Error::InvalidParameter { name: "ensemble", reason: "needs meter values".into() });
    }
    let loop_seed = derive_seed(seed, purpose::TWO_MODE_LOOPS);
    let n = ens.n();
    let parts: Vec<Vec<[f64; 3]>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            let mut v = Vec::with_capacity(hi - lo);
            for j in lo..hi {
                let mut rng = RngStream::new(loop_seed, ens.traj_index[j] as u64);
                let s = RejectionSampler::unverified(&conditional_given_xb(spec, ens.xb0[j]))?;
                let mut z = [0.0; 3];
                s.sample_into(&mut rng, &mut z)?;
                v.push(z);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut out = PostselectedEnsemble {
        branch: ens.branch,
        traj_index: ens.traj_index.clone(),
        xb0: ens.xb0.clone(),
        ..Default::default()
    };
    for z in parts.into_iter().flatten() {
        out.x0.push(z[0]);
        out.p0.push(z[1]);
        out.pb0.push(z[2]);
    }
    Ok(out)
}

/// Observed variances (sample variance − 1) of x̂ and p̂ with batch
/// standard errors. Values below zero are reported as they are.
pub fn observed_variances(ens: &PostselectedEnsemble) -> Result<(MomentEstimate, MomentEstimate)> {
    observed_pair(&ens.x0, &ens.p0)
}

/// Observed meter variances of x̂_B and p̂_B.
pub fn meter_observed_variances(ens: &PostselectedEnsemble) -> Result<(MomentEstimate, MomentEstimate)> {
    observed_pair(&ens.xb0, &ens.pb0)
}

fn observed_pair(x: &[f64], p: &[f64]) -> Result<(MomentEstimate, MomentEstimate)> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: x.len() });
    }
    Ok((MomentEstimate::from_batches(x)?.shifted_variance(1.0), MomentEstimate::from_batches(p)?.shifted_variance(1.0)))
}

/// `ε = Δ(x̂|+) Δ(p̂|+)` with its batch standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyProduct {
    /// `√(ε²)`, or NaN when `ε² < 0`.
    pub epsilon: f64,
    /// Product of the observed variances.
    pub epsilon_sq: f64,
    pub std_error: f64,
    pub std_error_sq: f64,
    /// An observed variance came out negative.
    pub negative_variance: bool,
}

pub fn uncertainty_product(ens: &PostselectedEnsemble) -> Result<UncertaintyProduct> {
    product_of(&ens.x0, &ens.p0)
}

pub fn meter_uncertainty_product(ens: &PostselectedEnsemble) -> Result<UncertaintyProduct> {
    product_of(&ens.xb0, &ens.pb0)
}

fn product_of(x: &[f64], p: &[f64]) -> Result<UncertaintyProduct> {
    let (vx, vp) = observed_pair(x, p)?;
    let sq = vx.variance * vp.variance;
    let mut per_batch = Moments::default();
    for r in batch_ranges(x.len(), BATCHES) {
        let var = |s: &[f64]| {
            s.iter().fold(Moments::default(), |mut m, &v| {
                m.push(v);
                m
            })
        };
        per_batch.push((var(&x[r.clone()]).variance() - 1.0) * (var(&p[r]).variance() - 1.0));
    }
    let se_sq = (per_batch.variance() / BATCHES as f64).sqrt();
    let epsilon = if sq >= 0.0 { sq.sqrt() } else { f64::NAN };
    Ok(UncertaintyProduct {
        epsilon,
        epsilon_sq: sq,
        std_error: se_sq / (2.0 * epsilon),
        std_error_sq: se_sq,
        negative_variance: vx.variance < 0.0 || vp.variance < 0.0,
    })
}

/// Output grid for [`infer_state_a_numeric`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InferenceGrid {
    pub bins: usize,
    pub nsigma: f64,
}

impl Default for InferenceGrid {
    fn default() -> Self {
        Self { bins: 100, nsigma: 8.0 }
    }
}

/// Inferred Q function of system A for one meter branch.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredState {
    /// Mixture of the conditionals over the branch's meter values, as a
    /// closed-form density in `(x_A, p_A)`.
    pub density: GaussFringeDensity<f64>,
    /// Moments of x_A and p_A of the Q function with batch standard errors.
    pub x: MomentEstimate,
    pub p: MomentEstimate,
    pub x_centers: Vec<f64>,
    pub p_centers: Vec<f64>,
    /// Density at cell centres, x-major.
    pub values: Vec<f64>,
    /// Σ values · cell area.
    pub grid_mass: f64,
}

/// `Q(x_A, p_A | branch) = E[Q(x_A, p_A | x_B(0))]` over the branch's
/// backward-propagated meter values, tabulated on `grid`.
///
/// Each conditional shares the component means, variances and fringe
/// shape, so the mixture is again one closed-form density whose weights are
/// sample averages.
pub fn infer_state_a_numeric(
    ens: &PostselectedEnsemble,
    spec: &TwoModeSpec<f64>,
    grid: InferenceGrid,
) -> Result<InferredState> {
    crate::analytic::check_quarter_phase(spec.phase_phi)?;
    if ens.xb0.is_empty() {
        return Err(Error::EmptyBranch);
    }
    let weights: Vec<[f64; 3]> = ens
        .xb0
        .iter()
        .map(|&xb| {
            let c = conditional_given_xb(spec, xb);
            [c.norm * c.gaussians[0].weight, c.norm * c.gaussians[1].weight, c.norm * c.fringe_amplitude()]
        })
        .collect();
    let mixture = |w: &[[f64; 3]]| {
        let mut s = [0.0; 3];
        for v in w {
            for k in 0..3 {
                s[k] += v[k];
            }
        }
        let n = w.len() as f64;
        build_inferred(spec, [s[0] / n, s[1] / n, s[2] / n])
    };
    let density = mixture(&weights);
    let moments = |d: &GaussFringeDensity<f64>| {
        let (mx, vx) = d.marginal(&[0]).moments1();
        let (mp, vp) = d.marginal(&[1]).moments1();
        [mx, vx, mp, vp]
    };
    let full = moments(&density);
    let mut batch = [Moments::default(); 4];
    if weights.len() >= BATCHES {
        for r in batch_ranges(weights.len(), BATCHES) {
            let m = moments(&mixture(&weights[r]));
            for k in 0..4 {
                batch[k].push(m[k]);
            }
        }
    }
    let se = |k: usize| (batch[k].variance() / BATCHES as f64).sqrt();
    let n = weights.len();
    let x = MomentEstimate { mean: full[0], variance: full[1], std_error_mean: se(0), std_error_variance: se(1), n };
    let p = MomentEstimate { mean: full[2], variance: full[3], std_error_mean: se(2), std_error_variance: se(3), n };

    let (xlo, xhi) = density.bounds(0, grid.nsigma);
    let (plo, phi) = density.bounds(1, grid.nsigma);
    let (dx, dp) = ((xhi - xlo) / grid.bins as f64, (phi - plo) / grid.bins as f64);
    let x_centers: Vec<f64> = (0..grid.bins).map(|i| xlo + (i as f64 + 0.5) * dx).collect();
    let p_centers: Vec<f64> = (0..grid.bins).map(|i| plo + (i as f64 + 0.5) * dp).collect();
    let values: Vec<f64> = x_centers
        .iter()
        .flat_map(|&xa| p_centers.iter().map(move |&pa| (xa, pa)))
        .map(|(xa, pa)| density.eval(&[xa, pa]))
        .collect();
    let grid_mass = values.iter().sum::<f64>() * dx * dp;
    Ok(InferredState { density, x, p, x_centers, p_centers, values, grid_mass })
}

fn build_inferred(spec: &TwoModeSpec<f64>, w: [f64; 3]) -> GaussFringeDensity<f64> {
    let ma = &spec.mode_a;
    let (vxa, vpa, x1) = (ma.var_x(), ma.var_p(), ma.mean_x);
    let var = vec![vxa, vpa];
    // The fringe of Q(λ | x_B) integrated over p_B keeps its x_A/p_A shape
    // and picks up e^{−k_B² σ_pB²/2}.
    let kb = spec.mode_b.mean_x / spec.mode_b.var_x();
    GaussFringeDensity::new(
        2,
        vec![Gaussian::new(w[0], vec![x1, 0.0], var.clone()), Gaussian::new(w[1], vec![-x1, 0.0], var.clone())],
        Some(Fringe {
            amplitude: w[2] * (-0.5 * kb * kb * spec.mode_b.var_p()).exp(),
            mean: vec![0.0; 2],
            var,
            wave: vec![0.0, x1 / vxa],
            phase: spec.phase_phi,
        }),
        1.0,
    )
}
