use parstirap::design::{make_parallel_schedule, DesignParams, Schedule};
use parstirap::lambda::QuantumState;
use parstirap::noise::{
    field_peaks, monte_carlo, noise_grid, perturb_fields, realization_rng, NoiseConfig, NoiseDraw,
};
use parstirap::propagate::{propagate, DEFAULT_DT};

fn fig4() -> Schedule {
    make_parallel_schedule(&DesignParams::new(5.4).with_bump(0.1, 1.25)).unwrap()
}

#[test]
fn fig4_averages() {
    let s = fig4();
    let cfg = NoiseConfig {
        seed: 1,
        ..NoiseConfig::default()
    };
    let mc = monte_carlo(&s, &cfg).unwrap();
    assert_eq!(mc.realizations.len(), 400);
    assert!((mc.mean_p3 - 0.993).abs() < 0.005, "{}", mc.mean_p3);
    assert!(mc.stderr_p3 < 2e-3);
    assert!(mc.max_norm_drift <= 1e-6);
    for r in &mc.realizations {
        assert!((-0.5..0.5).contains(&r.r1));
    }
    let det = propagate(&s, &QuantumState::ground(), DEFAULT_DT).unwrap().p3();
    assert!((det - 0.996).abs() < 0.002, "{det}");
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let s = fig4();
    let se: Vec<f64> = [50, 200, 800]
        .iter()
        .map(|&n| {
            let cfg = NoiseConfig {
                n_realizations: n,
                seed: 77,
                ..NoiseConfig::default()
            };
            monte_carlo(&s, &cfg).unwrap().stderr_p3 * (n as f64).sqrt()
        })
        .collect();
    // stderr * sqrt(n) estimates the per-realization spread.
    let mean = se.iter().sum::<f64>() / 3.0;
    for x in &se {
        assert!((x / mean - 1.0).abs() < 0.3, "{se:?}");
    }
}

#[test]
fn shape_factor_silences_noise_where_fields_vanish() {
    let s = fig4();
    let t = noise_grid(&s, 0.01);
    let draw = NoiseDraw::sample(&mut realization_rng(4, 0), t.len() - 1);
    let fields = perturb_fields(s.source(), &t, field_peaks(&s), 0.5, &draw);
    let (first, last) = (fields[0][0], fields[fields.len() - 1][2]);
    let clean_first = s.source().field_at(t[0]);
    let (peak_p, peak_s) = field_peaks(&s);
    // Noise enters through omega / max(omega); at the edges both are tiny.
    assert!((first.omega_p - clean_first.omega_p).abs() <= clean_first.omega_p / peak_p);
    assert!(last.omega_s.abs() <= 1e-3 * peak_s * 2.0);
    let zero = perturb_fields(s.source(), &t, field_peaks(&s), 0.0, &draw);
    let none = perturb_fields(s.source(), &t, field_peaks(&s), 0.5, &NoiseDraw::zero(t.len() - 1));
    assert_eq!(zero, none);
}

#[test]
fn single_noiseless_realization_matches_propagation() {
    let s = fig4();
    let cfg = NoiseConfig {
        gamma: 0.0,
        n_realizations: 1,
        ..NoiseConfig::default()
    };
    let mc = monte_carlo(&s, &cfg).unwrap();
    let det = propagate(&s, &QuantumState::ground(), DEFAULT_DT).unwrap().p3();
    // Different step sizes, same dynamics.
    assert!((mc.mean_p3 - det).abs() < 1e-8, "{} vs {det}", mc.mean_p3);
}
