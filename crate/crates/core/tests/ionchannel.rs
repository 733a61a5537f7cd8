use approx::assert_relative_eq;
use trunc_cgf::ionchannel::{
    empirical_density, observed_sojourn_density, observed_sojourn_mgf, simulate_observed_sojourns, truncated_sojourn_mgfs, ChannelSpec,
    ObservedCgf, SojournMethod, State,
};
use trunc_cgf::{CgfEvaluator, Distribution, Error};

fn markov() -> ChannelSpec {
    ChannelSpec::markov(2.0, 1.0, 0.2, 0.3).unwrap()
}

fn gamma_channel() -> ChannelSpec {
    ChannelSpec::new(Distribution::gamma(2.0, 4.0).unwrap(), Distribution::gamma(3.0, 2.0).unwrap(), 0.15, 0.25).unwrap()
}

fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Closed form of the observed open-sojourn MGF for exponential sojourns.
fn markov_open(lo: f64, lc: f64, to: f64, tc: f64, theta: f64) -> f64 {
    let d = lo / (lo - theta) * (-(lo - theta) * to).exp();
    let u = lc / (lc - theta) * (1.0 - (-(lc - theta) * tc).exp());
    let full = lo / (lo - theta);
    let (po, pc) = ((-lo * to).exp(), (-lc * tc).exp());
    d / po * pc / (1.0 - u * full)
}

#[test]
fn exponential_tail_example() {
    let spec = ChannelSpec::markov(1.0, 1.0, 0.2, 0.2).unwrap();
    let m = truncated_sojourn_mgfs(&spec, State::Open, 0.0, SojournMethod::Exact).unwrap();
    assert_relative_eq!(m.phi_d, (-0.2f64).exp(), max_relative = 1e-10);
    assert_relative_eq!(m.phi_u, 1.0 - (-0.2f64).exp(), max_relative = 1e-10);
    assert_relative_eq!(m.pi, (-0.2f64).exp(), max_relative = 1e-14);
    for theta in [-2.0, 0.3, 0.7] {
        let m = truncated_sojourn_mgfs(&spec, State::Open, theta, SojournMethod::Exact).unwrap();
        assert_relative_eq!(m.phi_d, 1.0 / (1.0 - theta) * (-(1.0 - theta) * 0.2f64).exp(), max_relative = 1e-9);
    }
}

#[test]
fn detection_identity_and_normalization_for_all_methods() {
    for spec in [markov(), gamma_channel()] {
        for state in [State::Open, State::Closed] {
            for method in SojournMethod::ALL {
                let m = truncated_sojourn_mgfs(&spec, state, 0.0, method).unwrap();
                assert_relative_eq!(m.phi_d, m.pi, max_relative = 1e-9);
                assert_relative_eq!(m.phi_u, 1.0 - m.pi, max_relative = 1e-9);
                let one = observed_sojourn_mgf(&spec, state, 0.0, method).unwrap();
                assert_relative_eq!(one, 1.0, max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn markov_closed_form() {
    let spec = markov();
    for theta in [-3.0, -0.5, 0.1, 0.4] {
        let got = observed_sojourn_mgf(&spec, State::Open, theta, SojournMethod::Exact).unwrap();
        assert_relative_eq!(got, markov_open(2.0, 1.0, 0.2, 0.3, theta), max_relative = 1e-10);
    }
}

#[test]
fn series_divergence_is_reported() {
    let cgf = ObservedCgf::new(&markov(), State::Open, SojournMethod::Exact).unwrap();
    let edge = cgf.domain().1;
    assert!(edge.is_finite() && edge < 2.0);
    match cgf.mgf(0.5 * (edge + 2.0)) {
        Err(Error::SeriesDivergence { .. }) | Err(Error::OutsideStrip { .. }) => {}
        other => panic!("expected divergence past {edge}, got {other:?}"),
    }
}

#[test]
fn simulation_is_deterministic() {
    let spec = gamma_channel();
    let a = simulate_observed_sojourns(&spec, State::Closed, 5000, 7).unwrap();
    let b = simulate_observed_sojourns(&spec, State::Closed, 5000, 7).unwrap();
    assert_eq!(a, b);
    let c = simulate_observed_sojourns(&spec, State::Closed, 5000, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn markov_empirical_mgf_matches() {
    let spec = markov();
    let x = simulate_observed_sojourns(&spec, State::Open, 400_000, 11).unwrap();
    let theta = 0.1;
    let e: Vec<f64> = x.iter().map(|t| (theta * t).exp()).collect();
    let (m, se) = mean_and_se(&e);
    let exact = observed_sojourn_mgf(&spec, State::Open, theta, SojournMethod::Exact).unwrap();
    assert!((m - exact).abs() < 3.0 * se, "empirical {m} +/- {se}, exact {exact}");
}

#[test]
fn gamma_channel_mean_matches_simulation() {
    let spec = gamma_channel();
    for state in [State::Open, State::Closed] {
        let cgf = ObservedCgf::new(&spec, state, SojournMethod::Exact).unwrap();
        let mean = cgf.eval(0.0).unwrap().k1;
        let x = simulate_observed_sojourns(&spec, state, 400_000, 23).unwrap();
        let (m, se) = mean_and_se(&x);
        assert!((m - mean).abs() < 3.0 * se, "{state}: simulated {m} +/- {se}, exact {mean}");
    }
}

#[test]
fn density_mass_on_grid_matches_simulation() {
    // First-order saddlepoint densities of exponential-type laws carry the
    // Stirling factor e / sqrt(2 pi), so the raw integral over a wide grid
    // overshoots by up to 8.5% and the shape is compared after normalizing.
    let spec = markov();
    let h = 0.01;
    let grid: Vec<f64> = (0..=1200).map(|i| 0.2 + 1e-4 + h * i as f64).collect();
    let dens = observed_sojourn_density(&spec, State::Open, &grid, SojournMethod::Exact).unwrap();
    let f: Vec<f64> = dens.iter().map(|d| d.as_ref().unwrap().density).collect();
    let trap = |i: usize, j: usize| f[i..=j].windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum::<f64>();
    let total = trap(0, grid.len() - 1);
    assert!(total > 1.0 && total < 1.09, "raw mass {total}");
    let x = simulate_observed_sojourns(&spec, State::Open, 400_000, 5).unwrap();
    for (i, j) in [(30, 280), (100, 600)] {
        let (lo, hi) = (grid[i], grid[j]);
        let mass = trap(i, j) / total;
        let sim = x.iter().filter(|&&t| t > lo && t < hi).count() as f64 / x.len() as f64;
        assert!((mass / sim - 1.0).abs() < 0.02, "({lo}, {hi}): saddlepoint mass {mass}, simulated {sim}");
    }
    let hist = empirical_density(&x, &grid);
    assert!(hist.iter().all(|h| h.is_finite()));
}

#[test]
fn vanishing_thresholds_recover_raw_density() {
    let spec = ChannelSpec::markov(2.0, 1.0, 1e-7, 1e-7).unwrap();
    let grid = [0.25, 0.5, 1.0, 2.0];
    let dens = observed_sojourn_density(&spec, State::Open, &grid, SojournMethod::Exact).unwrap();
    for (x, d) in grid.iter().zip(dens) {
        // The first-order saddlepoint density of an exponential is exact up
        // to Stirling's factor e / sqrt(2 pi).
        let raw = 2.0 * (-2.0 * x).exp() * std::f64::consts::E / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(d.unwrap().density, raw, max_relative = 1e-4);
    }
}

#[test]
fn conv_density_stays_close_to_exact() {
    // Sup log-density gap frozen from the reference run (0.2524, reached at
    // the low end of the grid where theta is far in the left tail).
    const FROZEN_GAP: f64 = 0.26;
    let spec = gamma_channel();
    let grid: Vec<f64> = (2..=30).map(|i| 0.1 * i as f64).collect();
    let exact = observed_sojourn_density(&spec, State::Open, &grid, SojournMethod::Exact).unwrap();
    let conv = observed_sojourn_density(&spec, State::Open, &grid, SojournMethod::Conv).unwrap();
    let gap =
        exact.iter().zip(&conv).map(|(e, c)| (e.as_ref().unwrap().ln_density - c.as_ref().unwrap().ln_density).abs()).fold(0.0, f64::max);
    assert!(gap < FROZEN_GAP, "sup log gap {gap}");
}

#[test]
fn chained_derivatives_agree_with_differences() {
    let spec = gamma_channel();
    let cgf = ObservedCgf::new(&spec, State::Closed, SojournMethod::Exact).unwrap();
    for theta in [-1.0, -0.3, 0.4] {
        let a = cgf.eval(theta).unwrap();
        let b = cgf.eval_by_differences(theta).unwrap();
        assert_relative_eq!(a.k1, b.k1, max_relative = 1e-6);
        assert_relative_eq!(a.k2, b.k2, max_relative = 1e-4);
    }
}

#[test]
fn spec_text_round_trip() {
    let text = "# channel\nopen = family=gamma shape=2 rate=4\nclosed: family=exponential rate=1\ntau = 0.1\n";
    let spec: ChannelSpec = text.parse().unwrap();
    assert_eq!(spec.tau_o, 0.1);
    assert_eq!(spec.tau_c, 0.1);
    let back: ChannelSpec = spec.to_string().parse().unwrap();
    assert_eq!(spec, back);
    assert!("open = family=normal\nclosed = family=exponential rate=1\ntau = 0.1".parse::<ChannelSpec>().is_err());
    assert!(format!("{text}colour = red").parse::<ChannelSpec>().is_err());
}
