//! Histograms, density comparison and Monte Carlo error estimates.

use crate::density::Marginal1D;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::normal_cdf;

/// Running central moments up to fourth order; merges are exact
/// (Pébay's pairwise formulas) so chunked accumulation in a fixed order is
/// reproducible.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let t1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += t1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += t1;
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let d = o.mean - self.mean;
        let d2 = d * d;
        let m2 = self.m2 + o.m2 + d2 * na * nb / n;
        let m3 = self.m3 + o.m3 + d * d2 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * o.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + o.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * o.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * o.m3 - nb * self.m3) / n;
        self.mean += d * nb / n;
        self.n += o.n;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.m2 / (self.n as f64 - 1.0)
    }

    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Asymptotic standard error of the sample variance,
    /// `√((μ₄ − σ⁴)/n)`.
    pub fn se_variance(&self) -> f64 {
        let n = self.n as f64;
        let mu4 = self.m4 / n;
        let s2 = self.m2 / n;
        ((mu4 - s2 * s2).max(0.0) / n).sqrt()
    }
}

/// Mean and variance with standard errors from 10 contiguous batches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error_mean: f64,
    pub std_error_variance: f64,
    pub n: usize,
}

pub const BATCHES: usize = 10;

impl MomentEstimate {
    /// Estimates from `values` in index order.
    pub fn from_batches(values: &[f64]) -> Result<Self> {
        Self::from_batches_with(values, BATCHES)
    }

    pub fn from_batches_with(values: &[f64], batches: usize) -> Result<Self> {
        if values.len() < 2 * batches {
            return Err(Error::TooFewSamples { needed: 2 * batches, got: values.len() });
        }
        let mut all = Moments::default();
        let mut means = Moments::default();
        let mut vars = Moments::default();
        for b in batch_ranges(values.len(), batches) {
            let mut m = Moments::default();
            values[b].iter().for_each(|&v| m.push(v));
            means.push(m.mean);
            vars.push(m.variance());
            all.merge(&m);
        }
        let k = batches as f64;
        Ok(Self {
            mean: all.mean,
            variance: all.variance(),
            std_error_mean: (means.variance() / k).sqrt(),
            std_error_variance: (vars.variance() / k).sqrt(),
            n: values.len(),
        })
    }

    /// Same estimate with the variance shifted by `-shift`.
    pub fn shifted_variance(mut self, shift: f64) -> Self {
        self.variance -= shift;
        self
    }
}

/// Contiguous index ranges of (almost) equal length.
pub fn batch_ranges(n: usize, batches: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..batches).map(move |b| (b * n / batches)..((b + 1) * n / batches))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// In-range sample count.
    pub n: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.n + self.underflow + self.overflow
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Counts divided by in-range count and bin width.
    pub fn density(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().zip(self.widths()).map(|(&c, w)| c as f64 / (n * w)).collect()
    }

    pub fn std_error(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts
            .iter()
            .zip(self.widths())
            .map(|(&c, w)| {
                let p = c as f64 / n;
                (p * (1.0 - p) / n).sqrt() / w
            })
            .collect()
    }
}

/// `n + 1` equally spaced edges.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    e[bins] = hi;
    e
}

pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadEdges);
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let bins = edges.len() - 1;
    let mut h = Histogram { edges: edges.to_vec(), counts: vec![0; bins], underflow: 0, overflow: 0, n: 0 };
    let (lo, hi) = (edges[0], edges[bins]);
    for &s in samples {
        if s < lo {
            h.underflow += 1;
        } else if s >= hi {
            h.overflow += 1;
        } else {
            // upper bound on the first edge greater than s
            let i = edges.partition_point(|&e| e <= s) - 1;
            h.counts[i.min(bins - 1)] += 1;
            h.n += 1;
        }
    }
    Ok(h)
}

/// Cumulative distribution of a one-dimensional density. Closed form when
/// the fringe has no oscillation, quadrature otherwise.
pub fn density_cdf(d: &Marginal1D<f64>, z: f64) -> f64 {
    assert_eq!(d.dim(), 1);
    let oscillating = d.fringe.as_ref().is_some_and(|f| f.wave[0] != 0.0);
    if !oscillating {
        let mut s = 0.0;
        for g in &d.gaussians {
            s += g.weight * normal_cdf((z - g.mean[0]) / g.var[0].sqrt());
        }
        if let Some(f) = &d.fringe {
            s += f.amplitude * f.phase.cos() * normal_cdf((z - f.mean[0]) / f.var[0].sqrt());
        }
        return d.norm * s;
    }
    let (lo, _) = d.bounds(0, 12.0);
    if z <= lo {
        return 0.0;
    }
    integrate(|x| d.eval1(x), lo, z, 1e-12)
}

/// Probability mass of `d` in each histogram bin.
pub fn bin_masses(d: &Marginal1D<f64>, edges: &[f64]) -> Vec<f64> {
    let oscillating = d.fringe.as_ref().is_some_and(|f| f.wave[0] != 0.0);
    if !oscillating {
        let c: Vec<f64> = edges.iter().map(|&e| density_cdf(d, e)).collect();
        return c.windows(2).map(|w| w[1] - w[0]).collect();
    }
    edges.windows(2).map(|w| integrate(|x| d.eval1(x), w[0], w[1], 1e-12)).collect()
}

/// Result of comparing a histogram with a target density.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityComparison {
    /// Largest per-bin |empirical − target mass| in units of the binomial
    /// standard error of the target mass.
    pub max_z: f64,
    /// Largest CDF difference over the bin edges.
    pub ks: f64,
    pub z: Vec<f64>,
}

pub fn compare_density(hist: &Histogram, target: &Marginal1D<f64>) -> DensityComparison {
    let total = hist.total() as f64;
    let masses = bin_masses(target, &hist.edges);
    let z: Vec<f64> = hist
        .counts
        .iter()
        .zip(&masses)
        .map(|(&c, &m)| {
            let m = m.max(0.0);
            let se = (m * (1.0 - m) / total).sqrt().max(1.0 / total);
            (c as f64 / total - m).abs() / se
        })
        .collect();
    let max_z = z.iter().copied().fold(0.0, f64::max);
    let mut emp = hist.underflow as f64 / total;
    let mut cdf = density_cdf(target, hist.edges[0]);
    let mut ks = (emp - cdf).abs();
    for (&c, &m) in hist.counts.iter().zip(&masses) {
        emp += c as f64 / total;
        cdf += m;
        ks = ks.max((emp - cdf).abs());
    }
    DensityComparison { max_z, ks, z }
}

/// Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Critical value of the one-sample KS statistic at significance `alpha`
/// (asymptotic Kolmogorov law with Stephens' finite-n correction).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let rn = (n as f64).sqrt();
    c / (rn + 0.12 + 0.11 / rn)
}
