//! Exact propagation of the forward-backward equations.
//!
//! The amplified quadrature obeys `dx/dt₋ = −g x + √(2g) ξ` in the negative
//! time direction and the attenuated one obeys the same equation forward in
//! time. Both are Ornstein–Uhlenbeck processes, stepped with the exact
//! transition kernel, so the recording grid carries no step-size bias.

use rayon::prelude::*;

use crate::analytic::{
    fbc_from_wigner, marginal_p_at_gain, marginal_x_at_gain, two_mode_marginal_x_at_gain, two_mode_q_at_gain,
};
use crate::core::{AmplifierSpec, SuperpositionSpec, TimeGrid, TwoModeSpec};
use crate::density::GaussFringeDensity;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::RejectionSampler;
use crate::stats::Moments;

/// Trajectories per work item. Fixed so that results do not depend on the
/// number of threads.
pub const CHUNK: usize = 4096;

/// Default number of full paths kept for export.
pub const DEFAULT_KEPT_PATHS: usize = 200;

/// Relative weight below which a two-mode interference term is dropped.
pub const NEGLIGIBLE_FRINGE: f64 = 1e-9;

/// How the future boundary of the amplified quadrature is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryMethod {
    /// From the analytic marginal at t_f.
    #[default]
    Direct,
    /// From the Wigner marginal scaled by the gain and convolved with unit
    /// noise (φ ∈ {0, π/2} only).
    Wigner,
}

/// What the engine records besides the endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recording {
    /// Step over every grid time, keep per-time moments and the first
    /// `keep_paths` full paths.
    #[default]
    Paths,
    /// One exact transition over the whole interval; endpoints only.
    EndpointsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub boundary: BoundaryMethod,
    pub recording: Recording,
    pub keep_paths: usize,
}

impl SimOptions {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            boundary: BoundaryMethod::Direct,
            recording: Recording::Paths,
            keep_paths: DEFAULT_KEPT_PATHS,
        }
    }

    pub fn boundary(mut self, b: BoundaryMethod) -> Self {
        self.boundary = b;
        self
    }

    pub fn recording(mut self, r: Recording) -> Self {
        self.recording = r;
        self
    }

    pub fn keep_paths(mut self, k: usize) -> Self {
        self.keep_paths = k;
        self
    }
}

/// Exact OU transition `v e^{−g dt} + N(0, 1 − e^{−2g dt})` for a relaxation
/// rate `g > 0`.
pub fn ou_step(value: f64, g: f64, dt: f64, rng: &mut RngStream) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt(dt));
    }
    if !(g > 0.0) {
        return Err(Error::InvalidParameter { name: "g", reason: "relaxation rate must be positive".into() });
    }
    Ok(OuKernel::new(g, dt).step(value, rng))
}

#[derive(Clone, Copy, Debug)]
struct OuKernel {
    decay: f64,
    sd: f64,
}

impl OuKernel {
    fn new(g: f64, dt: f64) -> Self {
        Self { decay: (-g * dt).exp(), sd: (-(-2.0 * g * dt).exp_m1()).sqrt() }
    }

    #[inline]
    fn step(&self, v: f64, rng: &mut RngStream) -> f64 {
        v * self.decay + self.sd * rng.normal()
    }
}

/// Quadrature values at the two ends of one trajectory of one mode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Endpoints {
    pub x0: f64,
    pub xf: f64,
    pub p0: f64,
    pub pf: f64,
}

/// Full x and p paths of one mode on the ensemble grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub x_path: Vec<f64>,
    pub p_path: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub grid: TimeGrid<f64>,
    /// Signed gain rate of each mode.
    pub gain_rates: Vec<f64>,
    pub seed: u64,
    pub count: usize,
    modes: usize,
    endpoints: Vec<Endpoints>,
    paths: Vec<Trajectory>,
    stats: Vec<Moments>,
}

impl TrajectoryEnsemble {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn endpoints(&self, traj: usize, mode: usize) -> &Endpoints {
        &self.endpoints[traj * self.modes + mode]
    }

    /// Endpoints of every trajectory for one mode.
    pub fn mode_endpoints(&self, mode: usize) -> impl Iterator<Item = &Endpoints> + '_ {
        self.endpoints.iter().skip(mode).step_by(self.modes)
    }

    pub fn kept_paths(&self) -> usize {
        self.paths.len() / self.modes
    }

    pub fn path(&self, traj: usize, mode: usize) -> Option<&Trajectory> {
        self.paths.get(traj * self.modes + mode)
    }

    /// Moments of x over the ensemble at grid index `t`; `None` for an
    /// endpoints-only run.
    pub fn x_moments(&self, t: usize, mode: usize) -> Option<&Moments> {
        self.stats.get((t * self.modes + mode) * 2)
    }

    pub fn p_moments(&self, t: usize, mode: usize) -> Option<&Moments> {
        self.stats.get((t * self.modes + mode) * 2 + 1)
    }

    pub fn has_time_stats(&self) -> bool {
        !self.stats.is_empty()
    }

    /// Amplified quadrature at t_f divided by the final gain: x(t_f)/G for
    /// g > 0, p(t_f)·G for g < 0.
    pub fn scaled_final_values(&self, mode: usize) -> Vec<f64> {
        let g = self.gain_rates[mode];
        let shrink = (-g.abs() * self.grid.t_final()).exp();
        self.mode_endpoints(mode).map(|e| shrink * if g > 0.0 { e.xf } else { e.pf }).collect()
    }

    /// Backward-propagated amplified quadrature at t₀.
    pub fn backward_values(&self, mode: usize) -> Vec<f64> {
        let g = self.gain_rates[mode];
        self.mode_endpoints(mode).map(|e| if g > 0.0 { e.x0 } else { e.p0 }).collect()
    }
}

/// Boundary densities and kernels of one propagation problem.
struct Plan {
    modes: usize,
    rates: Vec<f64>,
    /// Amplified quadratures of every mode at t_f.
    future: RejectionSampler,
    /// Attenuated quadratures of every mode at t₀.
    past: RejectionSampler,
    step: Vec<OuKernel>,
    whole: Vec<OuKernel>,
}

struct ChunkOut {
    endpoints: Vec<Endpoints>,
    paths: Vec<Trajectory>,
    stats: Vec<Moments>,
}

impl Plan {
    fn run(&self, grid: &TimeGrid<f64>, opts: &SimOptions) -> Result<TrajectoryEnsemble> {
        if opts.n_traj == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let n_chunks = opts.n_traj.div_ceil(CHUNK);
        let chunks: Vec<ChunkOut> =
            (0..n_chunks).into_par_iter().map(|c| self.chunk(c, grid, opts)).collect::<Result<_>>()?;
        let mut endpoints = Vec::with_capacity(opts.n_traj * self.modes);
        let mut paths = Vec::new();
        let mut stats = match opts.recording {
            Recording::Paths => vec![Moments::default(); grid.len() * self.modes * 2],
            Recording::EndpointsOnly => Vec::new(),
        };
        for c in chunks {
            endpoints.extend(c.endpoints);
            paths.extend(c.paths);
            for (s, o) in stats.iter_mut().zip(&c.stats) {
                s.merge(o);
            }
        }
        Ok(TrajectoryEnsemble {
            grid: grid.clone(),
            gain_rates: self.rates.clone(),
            seed: opts.seed,
            count: opts.n_traj,
            modes: self.modes,
            endpoints,
            paths,
            stats,
        })
    }

    fn chunk(&self, c: usize, grid: &TimeGrid<f64>, opts: &SimOptions) -> Result<ChunkOut> {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(opts.n_traj);
        let m = self.modes;
        let len = grid.len();
        let n = len - 1;
        let record = opts.recording == Recording::Paths;
        let mut out = ChunkOut {
            endpoints: Vec::with_capacity((hi - lo) * m),
            paths: Vec::new(),
            stats: if record { vec![Moments::default(); len * m * 2] } else { Vec::new() },
        };
        let mut fut = vec![0.0; m];
        let mut past = vec![0.0; m];
        let mut back = vec![0.0; len];
        let mut fwd = vec![0.0; len];
        for i in lo..hi {
            let mut rng = RngStream::new(opts.seed, i as u64);
            self.future.sample_into(&mut rng, &mut fut)?;
            self.past.sample_into(&mut rng, &mut past)?;
            for k in 0..m {
                let (b0, f_end) = if record {
                    back[n] = fut[k];
                    for j in (0..n).rev() {
                        back[j] = self.step[k].step(back[j + 1], &mut rng);
                    }
                    fwd[0] = past[k];
                    for j in 0..n {
                        fwd[j + 1] = self.step[k].step(fwd[j], &mut rng);
                    }
                    (back[0], fwd[n])
                } else {
                    (self.whole[k].step(fut[k], &mut rng), self.whole[k].step(past[k], &mut rng))
                };
                let amplify_x = self.rates[k] > 0.0;
                out.endpoints.push(if amplify_x {
                    Endpoints { x0: b0, xf: fut[k], p0: past[k], pf: f_end }
                } else {
                    Endpoints { x0: past[k], xf: f_end, p0: b0, pf: fut[k] }
                });
                if record {
                    let (xs, ps) = if amplify_x { (&back, &fwd) } else { (&fwd, &back) };
                    for t in 0..len {
                        out.stats[(t * m + k) * 2].push(xs[t]);
                        out.stats[(t * m + k) * 2 + 1].push(ps[t]);
                    }
                    if i < opts.keep_paths {
                        out.paths.push(Trajectory { x_path: xs.clone(), p_path: ps.clone() });
                    }
                }
            }
        }
        Ok(out)
    }
}

fn kernels(rates: &[f64], grid: &TimeGrid<f64>) -> (Vec<OuKernel>, Vec<OuKernel>) {
    let step = rates.iter().map(|g| OuKernel::new(g.abs(), grid.dt())).collect();
    let whole = rates.iter().map(|g| OuKernel::new(g.abs(), grid.t_final())).collect();
    (step, whole)
}

/// Single-mode ensemble: the amplified quadrature is drawn at t_f and
/// propagated backward, the other is drawn at t₀ and propagated forward.
pub fn simulate_single_mode(
    spec: &SuperpositionSpec<f64>,
    amp: &AmplifierSpec<f64>,
    n_traj: usize,
    seed: u64,
    boundary: BoundaryMethod,
) -> Result<TrajectoryEnsemble> {
    simulate_single_mode_with(spec, amp, &SimOptions::new(n_traj, seed).boundary(boundary))
}

pub fn simulate_single_mode_with(
    spec: &SuperpositionSpec<f64>,
    amp: &AmplifierSpec<f64>,
    opts: &SimOptions,
) -> Result<TrajectoryEnsemble> {
    spec.check()?;
    amp.check()?;
    let g = amp.gain_final();
    let amplify_x = amp.gain_rate_g > 0.0;
    let future = match opts.boundary {
        BoundaryMethod::Wigner => fbc_from_wigner(spec, amp)?,
        BoundaryMethod::Direct if amplify_x => marginal_x_at_gain(spec, g),
        BoundaryMethod::Direct => marginal_p_at_gain(spec, g),
    };
    let past = if amplify_x { marginal_p_at_gain(spec, 1.0) } else { marginal_x_at_gain(spec, 1.0) };
    let grid = amp.grid();
    let rates = vec![amp.gain_rate_g];
    let (step, whole) = kernels(&rates, &grid);
    let plan = Plan {
        modes: 1,
        future: RejectionSampler::new(&future)?,
        past: RejectionSampler::new(&past)?,
        rates,
        step,
        whole,
    };
    plan.run(&grid, opts)
}

/// p̂ measurement: the same machinery with g < 0, so p is amplified.
pub fn simulate_p_measurement(
    spec: &SuperpositionSpec<f64>,
    amp: &AmplifierSpec<f64>,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    if !(amp.gain_rate_g < 0.0) {
        return Err(Error::InvalidParameter { name: "g", reason: "p measurement needs g < 0".into() });
    }
    simulate_single_mode(spec, amp, n_traj, seed, BoundaryMethod::Direct)
}

/// Two-mode ensemble (mode 0 = system A, mode 1 = meter B), both amplified
/// on x.
pub fn simulate_two_mode(
    spec: &TwoModeSpec<f64>,
    amp_a: &AmplifierSpec<f64>,
    amp_b: &AmplifierSpec<f64>,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    simulate_two_mode_with(spec, amp_a, amp_b, &SimOptions::new(n_traj, seed))
}

pub fn simulate_two_mode_with(
    spec: &TwoModeSpec<f64>,
    amp_a: &AmplifierSpec<f64>,
    amp_b: &AmplifierSpec<f64>,
    opts: &SimOptions,
) -> Result<TrajectoryEnsemble> {
    crate::core::validate_two_mode(*spec, *amp_a, *amp_b)?;
    if !(amp_a.gain_rate_g > 0.0 && amp_b.gain_rate_g > 0.0) {
        return Err(Error::InvalidParameter { name: "g", reason: "two-mode runs amplify x on both modes".into() });
    }
    let future =
        fringe_free(two_mode_marginal_x_at_gain(spec, amp_a.gain_final(), amp_b.gain_final()), spec.phase_phi)?;
    let past = two_mode_q_at_gain(spec, 1.0, 1.0).marginal(&[1, 3]);
    let grid = amp_a.grid();
    let rates = vec![amp_a.gain_rate_g, amp_b.gain_rate_g];
    let (step, whole) = kernels(&rates, &grid);
    let plan = Plan {
        modes: 2,
        future: RejectionSampler::new(&future)?,
        past: RejectionSampler::new(&past)?,
        rates,
        step,
        whole,
    };
    plan.run(&grid, opts)
}

/// Drops a negligible interference term; a significant one is unsupported.
fn fringe_free(mut d: GaussFringeDensity<f64>, phi: f64) -> Result<GaussFringeDensity<f64>> {
    let w: f64 = d.gaussians.iter().map(|g| g.weight).sum();
    if d.fringe_amplitude().abs() > NEGLIGIBLE_FRINGE * w {
        return Err(Error::UnsupportedPhase(phi));
    }
    d.fringe = None;
    d.norm = 1.0 / w;
    Ok(d)
}
