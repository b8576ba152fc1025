use std::f64::consts::FRAC_PI_2;

use qtraj::analytic::{marginal_x_at_gain, scaled_final_marginal};
use qtraj::postselect::sign_agreement;
use qtraj::sde_engine::{
    simulate_p_measurement, simulate_single_mode, simulate_two_mode, simulate_two_mode_with, BoundaryMethod, Recording,
    SimOptions,
};
use qtraj::stats::{compare_density, density_cdf, histogram, ks_critical, ks_statistic, uniform_edges, Moments};
use qtraj::{Amplifier, Mode, Superposition, TwoMode};

const N: usize = 100_000;

fn moments(v: &[f64]) -> Moments {
    v.iter().fold(Moments::default(), |mut m, &x| {
        m.push(x);
        m
    })
}

#[test]
fn squeezed_state_returns_to_its_initial_moments() {
    let spec = Superposition::single(Mode::new(3.0, 3.0));
    let ens = simulate_single_mode(&spec, &Amplifier::from_gtf(1.0, 3.0, 300), N, 1, BoundaryMethod::Direct).unwrap();
    let m = moments(&ens.backward_values(0));
    assert!((m.mean - 3.0).abs() < 4.0 * m.se_mean());
    assert!((m.variance() - (1.0 + (-6.0f64).exp())).abs() < 4.0 * m.se_variance());
}

#[test]
fn coherent_noise_is_amplified() {
    let spec = Superposition::single(Mode::new(3.0, 0.0));
    let amp = Amplifier::from_gtf(1.0, 3.0, 300);
    let ens = simulate_single_mode(&spec, &amp, N, 2, BoundaryMethod::Direct).unwrap();
    let last = ens.x_moments(300, 0).unwrap();
    let g = amp.gain_final();
    assert!((last.variance() - (1.0 + g * g)).abs() < 4.0 * last.se_variance());
}

#[test]
fn wigner_boundary_reproduces_the_initial_marginal() {
    for phi in [0.0, FRAC_PI_2] {
        let spec = Superposition::symmetric(Mode::new(1.5, 0.3), phi);
        let amp = Amplifier::from_gtf(1.0, 3.0, 30);
        let ens = simulate_single_mode(&spec, &amp, N, 3, BoundaryMethod::Wigner).unwrap();
        let target = marginal_x_at_gain(&spec, 1.0);
        let ks = ks_statistic(&ens.backward_values(0), |x| density_cdf(&target, x));
        assert!(ks < ks_critical(N, 0.001), "phi={phi} ks={ks}");
    }
    let bad = Superposition::symmetric(Mode::new(1.5, 0.3), 1.0);
    let amp = Amplifier::from_gtf(1.0, 3.0, 30);
    assert!(simulate_single_mode(&bad, &amp, 10, 3, BoundaryMethod::Wigner).is_err());
}

#[test]
fn p_measurement_attenuates_x() {
    let spec = Superposition::symmetric(Mode::coherent(2.0), FRAC_PI_2);
    let amp = Amplifier::from_gtf(-1.0, 3.0, 300);
    let ens = simulate_p_measurement(&spec, &amp, N, 4).unwrap();
    let last = ens.x_moments(300, 0).unwrap();
    // x shrinks toward the vacuum: 1 + (σx²(0) − 1)/G².
    let (_, expect) = marginal_x_at_gain(&spec, (-3.0f64).exp()).moments1();
    assert!(expect < 1.05 && expect > 1.0);
    assert!((last.variance() - expect).abs() < 4.0 * last.se_variance(), "{} vs {expect}", last.variance());
}

#[test]
fn single_squeezed_p_measurement_has_no_fringes() {
    let spec = Superposition::single(Mode::new(2.0, 0.5));
    let amp = Amplifier::from_gtf(-1.0, 4.0, 40);
    let ens = simulate_p_measurement(&spec, &amp, N, 5).unwrap();
    let target = scaled_final_marginal(&spec, &amp);
    assert!(target.fringe.is_none());
    let (lo, hi) = target.bounds(0, 8.0);
    let c = compare_density(&histogram(&ens.scaled_final_values(0), &uniform_edges(lo, hi, 50)).unwrap(), &target);
    assert!(c.max_z < 4.5, "{}", c.max_z);
}

#[test]
fn halving_steps_keeps_marginals() {
    let spec = Superposition::symmetric(Mode::new(2.0, 1.0), FRAC_PI_2);
    let fine = simulate_single_mode(&spec, &Amplifier::from_gtf(1.0, 3.0, 200), N, 6, BoundaryMethod::Direct).unwrap();
    let coarse =
        simulate_single_mode(&spec, &Amplifier::from_gtf(1.0, 3.0, 100), N, 7, BoundaryMethod::Direct).unwrap();
    for (i, j) in [(0, 0), (50, 25), (100, 50), (200, 100)] {
        for (a, b) in [(fine.x_moments(i, 0), coarse.x_moments(j, 0)), (fine.p_moments(i, 0), coarse.p_moments(j, 0))] {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert!((a.mean - b.mean).abs() < 4.0 * a.se_mean().hypot(b.se_mean()));
            assert!((a.variance() - b.variance()).abs() < 4.0 * a.se_variance().hypot(b.se_variance()));
        }
    }
}

#[test]
fn endpoints_only_matches_stepped_run() {
    let spec = Superposition::symmetric(Mode::new(2.0, 0.5), FRAC_PI_2);
    let amp = Amplifier::from_gtf(1.0, 3.0, 100);
    let stepped = simulate_single_mode(&spec, &amp, N, 8, BoundaryMethod::Direct).unwrap();
    let jump = qtraj::sde_engine::simulate_single_mode_with(
        &spec,
        &amp,
        &SimOptions::new(N, 9).recording(Recording::EndpointsOnly),
    )
    .unwrap();
    assert!(!jump.has_time_stats());
    let a = moments(&stepped.backward_values(0));
    let b = moments(&jump.backward_values(0));
    assert!((a.variance() - b.variance()).abs() < 4.0 * a.se_variance().hypot(b.se_variance()));
    let pa = moments(&stepped.mode_endpoints(0).map(|e| e.pf).collect::<Vec<_>>());
    let pb = moments(&jump.mode_endpoints(0).map(|e| e.pf).collect::<Vec<_>>());
    assert!((pa.variance() - pb.variance()).abs() < 4.0 * pa.se_variance().hypot(pb.se_variance()));
}

#[test]
fn meter_correlation_depends_on_meter() {
    let amp = Amplifier::from_gtf(1.0, 3.0, 10);
    let opts = SimOptions::new(N, 10).recording(Recording::EndpointsOnly);
    let system = Mode::new(4.0, 1.5);
    let squeezed_meter = TwoMode::new(system, Mode::new(1.0, 4.0), FRAC_PI_2);
    let weak_meter = TwoMode::new(system, Mode::coherent(0.1), FRAC_PI_2);
    let s = sign_agreement(&simulate_two_mode_with(&squeezed_meter, &amp, &amp, &opts).unwrap()).unwrap();
    let w = sign_agreement(&simulate_two_mode_with(&weak_meter, &amp, &amp, &opts).unwrap()).unwrap();
    assert!(s > 0.99, "{s}");
    assert!(w < 0.9, "{w}");
}

#[test]
fn reproducible_across_thread_counts() {
    let spec = TwoMode::new(Mode::new(1.0, 0.5), Mode::coherent(1.0), FRAC_PI_2);
    let amp = Amplifier::from_gtf(1.0, 2.0, 20);
    let run = |t: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| {
            let e = simulate_two_mode(&spec, &amp, &amp, 10_000, 11).unwrap();
            let v: Vec<u64> =
                (0..e.count).flat_map(|i| [e.endpoints(i, 0).x0, e.endpoints(i, 1).p0]).map(f64::to_bits).collect();
            (v, e.x_moments(10, 1).unwrap().variance().to_bits())
        })
    };
    assert_eq!(run(1), run(3));
}
