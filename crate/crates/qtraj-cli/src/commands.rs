use std::path::Path;

use qtraj::analytic::{
    born_p, born_x, inferred_state_a_exact, marginal_p, marginal_x, meter_conditional_variances, scaled_final_marginal,
    two_mode_marginal_x_at_gain, two_mode_q_at_gain, variances_postselected_analytic, MeterDamping,
};
use qtraj::postselect::{
    bin_by_sign, build_loops, build_loops_two_mode, infer_state_a_numeric, meter_observed_variances,
    meter_uncertainty_product, observed_variances, sign_agreement, uncertainty_product, InferenceGrid,
    PostselectedEnsemble,
};
use qtraj::sde_engine::{simulate_single_mode_with, simulate_two_mode_with, Recording, SimOptions, TrajectoryEnsemble};
use qtraj::stats::{bin_masses, compare_density, histogram, uniform_edges};
use qtraj::{Amplifier, Branch, Marginal1D, TwoMode};

use crate::error::{CliError, Result};
use crate::output::{CsvFile, Meta};
use crate::scenario::{Kind, Scenario};

const HIST_BINS: usize = 100;
const HIST_NSIGMA: f64 = 8.0;
const SLICE_POINTS: usize = 201;

pub fn run(sc: &Scenario, out: &Path, meta: &Meta) -> Result<()> {
    let opts = SimOptions::new(sc.trajectories, sc.seed).boundary(sc.boundary).keep_paths(sc.keep_paths);
    let amp = sc.amp();
    if sc.kind == Kind::TwoMode {
        let spec = sc.two_mode(sc.x1b);
        let ens = simulate_two_mode_with(&spec, &amp, &amp, &opts)?;
        write_paths(&ens, out, meta)?;
        run_two_mode_tables(&ens, &spec, &amp, out, meta)
    } else {
        let spec = sc.single(sc.x1, sc.r);
        let ens = simulate_single_mode_with(&spec, &amp, &opts)?;
        write_paths(&ens, out, meta)?;

        let mut f = CsvFile::create(out, "summary.csv", meta, &summary_header(&["x", "p"]))?;
        for (k, &t) in ens.grid.times.iter().enumerate() {
            let targets = [marginal_x(&spec, &amp, t)?, marginal_p(&spec, &amp, t)?];
            let mut row = Vec::new();
            summary_cells(&ens, k, 0, &targets, &mut row);
            write_summary_row(&mut f, t, &row)?;
        }
        f.finish()?;

        let mut f = CsvFile::create(out, "marginals.csv", meta, &["t", "quadrature", "value", "density"])?;
        for k in slice_indices(ens.grid.len()) {
            let t = ens.grid.times[k];
            write_slice(&mut f, t, "x", &marginal_x(&spec, &amp, t)?)?;
            write_slice(&mut f, t, "p", &marginal_p(&spec, &amp, t)?)?;
        }
        f.finish()?;

        let mut f = CsvFile::create(out, "final_histogram.csv", meta, HIST_HEADER)?;
        let label = if amp.gain_rate_g > 0.0 { "x" } else { "p" };
        hist_rows(&mut f, label, &ens.scaled_final_values(0), &scaled_final_marginal(&spec, &amp))?;
        f.finish()
    }
}

fn run_two_mode_tables(
    ens: &TrajectoryEnsemble,
    spec: &TwoMode,
    amp: &Amplifier,
    out: &Path,
    meta: &Meta,
) -> Result<()> {
    let mut f = CsvFile::create(out, "summary.csv", meta, &summary_header(&["x", "p", "x_b", "p_b"]))?;
    for (k, &t) in ens.grid.times.iter().enumerate() {
        let g = amp.gain(t);
        let q = two_mode_q_at_gain(spec, g, g);
        let mut row = Vec::new();
        summary_cells(ens, k, 0, &[q.marginal(&[0]), q.marginal(&[1])], &mut row);
        summary_cells(ens, k, 1, &[q.marginal(&[2]), q.marginal(&[3])], &mut row);
        write_summary_row(&mut f, t, &row)?;
    }
    f.finish()?;

    let mut f = CsvFile::create(out, "marginals.csv", meta, &["t", "quadrature", "value", "density"])?;
    for k in slice_indices(ens.grid.len()) {
        let t = ens.grid.times[k];
        let g = amp.gain(t);
        let q = two_mode_q_at_gain(spec, g, g);
        for (axis, label) in ["x", "p", "x_b", "p_b"].into_iter().enumerate() {
            write_slice(&mut f, t, label, &q.marginal(&[axis]))?;
        }
    }
    f.finish()?;

    let g = amp.gain_final();
    let joint = two_mode_marginal_x_at_gain(spec, g, g);
    let mut f = CsvFile::create(out, "final_histogram.csv", meta, HIST_HEADER)?;
    for (mode, label) in [(0, "x"), (1, "x_b")] {
        hist_rows(&mut f, label, &ens.scaled_final_values(mode), &joint.marginal(&[mode]).scale(&[1.0 / g]))?;
    }
    f.finish()
}

fn write_paths(ens: &TrajectoryEnsemble, out: &Path, meta: &Meta) -> Result<()> {
    let header: &[&str] =
        if ens.modes() == 2 { &["traj_id", "t", "x", "p", "x_b", "p_b"] } else { &["traj_id", "t", "x", "p"] };
    let mut f = CsvFile::create(out, "trajectories.csv", meta, header)?;
    for i in 0..ens.kept_paths() {
        let a = ens.path(i, 0).expect("kept path");
        let b = (ens.modes() == 2).then(|| ens.path(i, 1).expect("kept path"));
        for (k, t) in ens.grid.times.iter().enumerate() {
            match b {
                Some(b) => f.row(&[&i, t, &a.x_path[k], &a.p_path[k], &b.x_path[k], &b.p_path[k]])?,
                None => f.row(&[&i, t, &a.x_path[k], &a.p_path[k]])?,
            }
        }
    }
    f.finish()
}

fn summary_header(labels: &[&str]) -> Vec<&'static str> {
    let mut h = vec!["t"];
    for l in labels {
        let cols: &[&'static str] = match *l {
            "x" => &["mean_x", "var_x", "se_var_x", "mean_x_analytic", "var_x_analytic"],
            "p" => &["mean_p", "var_p", "se_var_p", "mean_p_analytic", "var_p_analytic"],
            "x_b" => &["mean_x_b", "var_x_b", "se_var_x_b", "mean_x_b_analytic", "var_x_b_analytic"],
            _ => &["mean_p_b", "var_p_b", "se_var_p_b", "mean_p_b_analytic", "var_p_b_analytic"],
        };
        h.extend_from_slice(cols);
    }
    h
}

fn summary_cells(ens: &TrajectoryEnsemble, k: usize, mode: usize, targets: &[Marginal1D; 2], row: &mut Vec<f64>) {
    let stats = [ens.x_moments(k, mode).expect("recorded"), ens.p_moments(k, mode).expect("recorded")];
    for (m, target) in stats.iter().zip(targets) {
        let (mean, var) = target.moments1();
        row.extend([m.mean, m.variance(), m.se_variance(), mean, var]);
    }
}

fn write_summary_row(f: &mut CsvFile, t: f64, row: &[f64]) -> Result<()> {
    let mut cells: Vec<&dyn std::fmt::Display> = vec![&t];
    cells.extend(row.iter().map(|v| v as &dyn std::fmt::Display));
    f.row(&cells)
}

/// Grid indices at 0, ¼, ½, ¾ and 1 of the run.
fn slice_indices(len: usize) -> Vec<usize> {
    let n = len - 1;
    let mut v: Vec<usize> = (0..=4).map(|i| i * n / 4).collect();
    v.dedup();
    v
}

fn write_slice(f: &mut CsvFile, t: f64, label: &str, d: &Marginal1D) -> Result<()> {
    let (lo, hi) = d.bounds(0, 6.0);
    for i in 0..SLICE_POINTS {
        let z = lo + (hi - lo) * i as f64 / (SLICE_POINTS - 1) as f64;
        f.row(&[&t, &label, &z, &d.eval1(z)])?;
    }
    Ok(())
}

const HIST_HEADER: &[&str] =
    &["quadrature", "bin_lo", "bin_hi", "count", "density", "std_error", "target_density", "z"];

fn hist_rows(f: &mut CsvFile, label: &str, values: &[f64], target: &Marginal1D) -> Result<()> {
    let (lo, hi) = target.bounds(0, HIST_NSIGMA);
    let edges = uniform_edges(lo, hi, HIST_BINS);
    let h = histogram(values, &edges)?;
    let cmp = compare_density(&h, target);
    let (dens, se, mass) = (h.density(), h.std_error(), bin_masses(target, &edges));
    for i in 0..HIST_BINS {
        let w = edges[i + 1] - edges[i];
        f.row(&[&label, &edges[i], &edges[i + 1], &h.counts[i], &dens[i], &se[i], &(mass[i] / w), &cmp.z[i]])?;
    }
    Ok(())
}

fn require(sc: &Scenario, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} (state.kind = {})", sc.kind.name())))
    }
}

/// x̂ (g > 0) and p̂ (g < 0) measurements of the same state against the
/// Born densities.
pub fn born(sc: &Scenario, out: &Path, meta: &Meta) -> Result<()> {
    require(sc, sc.kind != Kind::TwoMode, "born needs a single-mode state")?;
    let spec = sc.single(sc.x1, sc.r);
    let opts = SimOptions::new(sc.trajectories, sc.seed).boundary(sc.boundary).recording(Recording::EndpointsOnly);
    let mut check = CsvFile::create(
        out,
        "born_check.csv",
        meta,
        &[
            "quadrature",
            "bin_lo",
            "bin_hi",
            "count",
            "density",
            "std_error",
            "born_density",
            "finite_gain_density",
            "z_born",
            "z_finite_gain",
        ],
    )?;
    let mut summary = CsvFile::create(
        out,
        "born_summary.csv",
        meta,
        &["quadrature", "n", "max_z_born", "max_z_finite_gain", "ks_born"],
    )?;
    for (label, g, target) in [("x", sc.g.abs(), born_x(&spec)), ("p", -sc.g.abs(), born_p(&spec))] {
        let amp = Amplifier::from_gtf(g, sc.gtf, sc.n_steps);
        let ens = simulate_single_mode_with(&spec, &amp, &opts)?;
        let values = ens.scaled_final_values(0);
        let finite = scaled_final_marginal(&spec, &amp);
        let (lo, hi) = target.bounds(0, HIST_NSIGMA);
        let edges = uniform_edges(lo, hi, HIST_BINS);
        let h = histogram(&values, &edges)?;
        let (cb, cf) = (compare_density(&h, &target), compare_density(&h, &finite));
        let (mb, mf) = (bin_masses(&target, &edges), bin_masses(&finite, &edges));
        let (dens, se) = (h.density(), h.std_error());
        for i in 0..HIST_BINS {
            let w = edges[i + 1] - edges[i];
            check.row(&[
                &label,
                &edges[i],
                &edges[i + 1],
                &h.counts[i],
                &dens[i],
                &se[i],
                &(mb[i] / w),
                &(mf[i] / w),
                &cb.z[i],
                &cf.z[i],
            ])?;
        }
        summary.row(&[&label, &values.len(), &cb.max_z, &cf.max_z, &cb.ks])?;
    }
    check.finish()?;
    summary.finish()
}

/// Sign-postselected variances and uncertainty product over the
/// `(sweep.r, sweep.x1)` grid.
pub fn postselect(sc: &Scenario, out: &Path, meta: &Meta) -> Result<()> {
    require(sc, sc.kind != Kind::TwoMode, "postselect needs a single-mode state; use collapse for two-mode states")?;
    require(sc, sc.g > 0.0, "postselect bins on the sign of x and needs amp.g > 0")?;
    let amp = sc.amp();
    let opts = SimOptions::new(sc.trajectories, sc.seed).boundary(sc.boundary).recording(Recording::EndpointsOnly);
    let mut f = CsvFile::create(
        out,
        "postselect.csv",
        meta,
        &[
            "r",
            "x1",
            "n",
            "n_plus",
            "var_x_obs",
            "se_var_x_obs",
            "var_p_obs",
            "se_var_p_obs",
            "var_x_obs_analytic",
            "var_p_obs_analytic",
            "epsilon",
            "se_epsilon",
            "epsilon_analytic",
            "negative_variance",
        ],
    )?;
    for (r, x1) in sc.sweep_points() {
        let spec = sc.single(x1, r);
        let ens = simulate_single_mode_with(&spec, &amp, &opts)?;
        let (plus, _) = bin_by_sign(&ens, 0)?;
        drop(ens);
        let loops = build_loops(&plus, &spec, sc.seed, sc.multiplicity)?;
        let (vx, vp) = observed_variances(&loops)?;
        let u = uncertainty_product(&loops)?;
        let (ax, ap) = match sc.kind {
            Kind::Squeezed => (spec.mode.var_x() - 1.0, spec.mode.var_p() - 1.0),
            _ if sc.c1_sq == 0.5 => variances_postselected_analytic(&spec)
                .map(|m| (m.observed_var_x(), m.observed_var_p()))
                .unwrap_or((f64::NAN, f64::NAN)),
            _ => (f64::NAN, f64::NAN),
        };
        let eps_a = (ax * ap).sqrt();
        f.row(&[
            &r,
            &x1,
            &sc.trajectories,
            &plus.n(),
            &vx.variance,
            &vx.std_error_variance,
            &vp.variance,
            &vp.std_error_variance,
            &ax,
            &ap,
            &u.epsilon,
            &u.std_error,
            &eps_a,
            &u.negative_variance,
        ])?;
    }
    f.finish()
}

/// Meter correlation, meter uncertainty product over `sweep.x1b`, and the
/// inferred state of system A at `meter.x1b`.
pub fn collapse(sc: &Scenario, out: &Path, meta: &Meta) -> Result<()> {
    require(sc, sc.kind == Kind::TwoMode, "collapse needs state.kind = two_mode")?;
    let amp = sc.amp();
    let opts = SimOptions::new(sc.trajectories, sc.seed).recording(Recording::EndpointsOnly);
    let mut corr = CsvFile::create(out, "meter_corr.csv", meta, &["x1b", "n", "n_plus", "sign_agreement"])?;
    let mut witness = CsvFile::create(
        out,
        "meter_witness.csv",
        meta,
        &[
            "x1b",
            "n_plus",
            "var_x_b_obs",
            "se_var_x_b_obs",
            "var_p_b_obs",
            "se_var_p_b_obs",
            "var_p_b_obs_analytic",
            "epsilon_b",
            "se_epsilon_b",
        ],
    )?;
    let mut inferred = None;
    for &x1b in &sc.sweep_x1b {
        let spec = sc.two_mode(x1b);
        let ens = simulate_two_mode_with(&spec, &amp, &amp, &opts)?;
        let agreement = sign_agreement(&ens)?;
        let (plus, minus) = bin_by_sign(&ens, 1)?;
        drop(ens);
        corr.row(&[&x1b, &sc.trajectories, &plus.n(), &agreement])?;
        let loops = build_loops_two_mode(&plus, &spec, sc.seed)?;
        let (vx, vp) = meter_observed_variances(&loops)?;
        let u = meter_uncertainty_product(&loops)?;
        let analytic =
            meter_conditional_variances(&spec, MeterDamping::General).map_or(f64::NAN, |m| m.observed_var_pb());
        witness.row(&[
            &x1b,
            &plus.n(),
            &vx.variance,
            &vx.std_error_variance,
            &vp.variance,
            &vp.std_error_variance,
            &analytic,
            &u.epsilon,
            &u.std_error,
        ])?;
        if x1b == sc.x1b && inferred.is_none() {
            inferred = Some((plus, minus));
        }
    }
    corr.finish()?;
    witness.finish()?;
    let spec = sc.two_mode(sc.x1b);
    let (plus, minus) = match inferred {
        Some(b) => b,
        None => {
            let ens = simulate_two_mode_with(&spec, &amp, &amp, &opts)?;
            bin_by_sign(&ens, 1)?
        }
    };
    write_inferred(&spec, &amp, [(&plus, Branch::Plus), (&minus, Branch::Minus)], out, meta)
}

fn write_inferred(
    spec: &TwoMode,
    amp: &Amplifier,
    branches: [(&PostselectedEnsemble, Branch); 2],
    out: &Path,
    meta: &Meta,
) -> Result<()> {
    let mut grid_f =
        CsvFile::create(out, "inferred_state.csv", meta, &["branch", "x", "p", "q_inferred", "q_finite_meter"])?;
    let mut sum_f = CsvFile::create(
        out,
        "inferred_summary.csv",
        meta,
        &[
            "branch",
            "n",
            "mean_x",
            "se_mean_x",
            "var_x",
            "se_var_x",
            "mean_p",
            "se_mean_p",
            "var_p",
            "se_var_p",
            "grid_mass",
            "mean_x_finite_meter",
            "var_x_finite_meter",
            "mean_p_finite_meter",
            "var_p_finite_meter",
        ],
    )?;
    for (ens, branch) in branches {
        let label = match branch {
            Branch::Plus => "+",
            Branch::Minus => "-",
        };
        let st = infer_state_a_numeric(ens, spec, InferenceGrid::default())?;
        let exact = inferred_state_a_exact(spec, amp, branch)?;
        let np = st.p_centers.len();
        for (i, x) in st.x_centers.iter().enumerate() {
            for (j, p) in st.p_centers.iter().enumerate() {
                grid_f.row(&[&label, x, p, &st.values[i * np + j], &exact.eval(&[*x, *p])])?;
            }
        }
        let (ex_mx, ex_vx) = exact.marginal(&[0]).moments1();
        let (ex_mp, ex_vp) = exact.marginal(&[1]).moments1();
        sum_f.row(&[
            &label,
            &ens.n(),
            &st.x.mean,
            &st.x.std_error_mean,
            &st.x.variance,
            &st.x.std_error_variance,
            &st.p.mean,
            &st.p.std_error_mean,
            &st.p.variance,
            &st.p.std_error_variance,
            &st.grid_mass,
            &ex_mx,
            &ex_vx,
            &ex_mp,
            &ex_vp,
        ])?;
    }
    grid_f.finish()?;
    sum_f.finish()
}
