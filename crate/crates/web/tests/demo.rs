use capdist_web::{binary_curves, demo_channel, gaussian_curves, simulate_clean_state};

#[test]
fn gaussian_curves_are_ordered_and_saturate() {
    let c = gaussian_curves(1.0, 1.0, 1.0, 1.0, 60).unwrap();
    assert_eq!(c.d.len(), 60);
    assert!(c.d_min_adaptive <= c.d_min_nonadaptive && c.d_min_nonadaptive <= c.d_max);
    for (na, a) in c.nonadaptive.iter().zip(&c.adaptive) {
        assert!(*na <= a + 1e-12);
    }
    let last = c.adaptive.len() - 1;
    assert!((c.adaptive[last] - c.nonadaptive[last]).abs() < 1e-12);
    assert!(gaussian_curves(1.0, 1.0, 1.0, 1.0, 1).is_err());
    assert!(gaussian_curves(-1.0, 1.0, 1.0, 1.0, 10).is_err());
}

#[test]
fn binary_curves_cover_three_modes() {
    let c = binary_curves(0.5, 0.1, 0.05, 5).unwrap();
    assert_eq!(c.d.len(), 5);
    assert_eq!(*c.d.last().unwrap(), c.trivial_distortion);
    let top = |v: &[Option<f64>]| v.last().unwrap().expect("trivial budget is feasible");
    assert!(top(&c.nonadaptive) <= top(&c.adaptive) + 5e-3);
    assert!(top(&c.nocsi) <= top(&c.nonadaptive) + 5e-3);
    for curve in [&c.nonadaptive, &c.adaptive] {
        let rates: Vec<f64> = curve.iter().flatten().copied().collect();
        assert!(rates.windows(2).all(|w| w[1] >= w[0] - 5e-3), "{rates:?}");
    }
}

#[test]
fn demo_channel_rejects_bad_probabilities() {
    assert!(demo_channel(1.5, 0.1, 0.0).is_err());
    assert!(demo_channel(0.5, 0.1, 0.0).unwrap().is_valid());
}

#[test]
fn clean_state_simulation_tracks_prediction() {
    let r = simulate_clean_state(0.11, 2048, 10, 0.25, 7).unwrap();
    assert!((r.predicted_distortion - 0.11).abs() < 1e-9);
    assert!(
        (r.empirical_distortion - r.predicted_distortion).abs() <= 0.05,
        "{r:?}"
    );
    assert!(simulate_clean_state(0.11, 1 << 20, 4, 0.25, 3).is_err());
    assert!(simulate_clean_state(0.7, 64, 2, 0.0, 3).is_err());
}
