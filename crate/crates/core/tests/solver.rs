use capdist::channel::instances::{
    clean_state, constant_output, noiseless_input_action, xor_state,
};
use capdist::channel::{augment_state, reveal_actions_to_decoder, ChannelSpec};
use capdist::infotheory::{
    assemble_joint, conditional_mutual_information, entropy, nonadaptive_objective,
};
use capdist::solver::{
    min_distortion, solve_point, sweep_curve, unconstrained_capacity, Mode, Solver,
};
use capdist::{SolveOptions, Var};

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn opts(mode: Mode) -> SolveOptions {
    SolveOptions::default().with_mode(mode)
}

#[test]
fn clean_state_inactive_budget_gives_the_full_bit() {
    let p = solve_point(&clean_state(), 0.5, &opts(Mode::Nonadaptive)).unwrap();
    assert!((p.rate.unwrap() - 1.0).abs() < 5e-3, "{:?}", p.rate);
}

#[test]
fn clean_state_splits_the_bit_between_message_and_description() {
    let p = solve_point(&clean_state(), 0.11, &opts(Mode::Nonadaptive)).unwrap();
    let rate = p.rate.unwrap();
    assert!((rate - h2(0.11)).abs() < 1e-2, "{rate}");
    assert!(p.achieved_distortion.unwrap() <= 0.11 + 1e-9);
    assert!(p.feasibility_gap_at_opt.unwrap() >= -1e-9);
}

#[test]
fn clean_state_sweep_follows_binary_entropy() {
    let grid = [0.0, 0.1, 0.3, 0.5];
    let curve = sweep_curve(&clean_state(), &grid, &opts(Mode::Nonadaptive)).unwrap();
    for (d, r) in grid.iter().zip(curve.rates()) {
        let r = r.expect("feasible");
        assert!((r - h2(*d)).abs() < 1e-2, "D={d}: {r}");
    }
}

#[test]
fn known_interference_capacity_is_the_bsc_value() {
    let spec = xor_state(0.1);
    let want = 1.0 - h2(0.1);
    for mode in Mode::ALL {
        let p = solve_point(&spec, 1.0, &opts(mode)).unwrap();
        assert!(
            (p.rate.unwrap() - want).abs() < 5e-3,
            "{mode}: {:?}",
            p.rate
        );
    }
    let c = unconstrained_capacity(&spec, &SolveOptions::default()).unwrap();
    assert!((c - want).abs() < 5e-3);
}

#[test]
fn two_clean_bits_through_input_and_action() {
    let c = unconstrained_capacity(&noiseless_input_action(), &SolveOptions::default()).unwrap();
    assert!((c - 2.0).abs() < 1e-6, "{c}");
}

#[test]
fn minimum_distortion_of_reference_channels() {
    let d = min_distortion(&clean_state(), &SolveOptions::default()).unwrap();
    assert!(d.abs() < 1e-3, "{d}");
    let d = min_distortion(&constant_output(), &SolveOptions::default()).unwrap();
    assert!((d - 0.5).abs() < 1e-4, "{d}");
}

#[test]
fn budget_below_minimum_is_infeasible() {
    let p = solve_point(&constant_output(), 0.0, &opts(Mode::Nonadaptive)).unwrap();
    assert!(p.rate.is_none() && !p.is_feasible());
    assert!(solve_point(&clean_state(), -0.1, &SolveOptions::default()).is_err());
}

#[test]
fn grid_above_saturation_is_flat_at_capacity() {
    let spec = xor_state(0.2);
    let c = unconstrained_capacity(&spec, &SolveOptions::default()).unwrap();
    let curve = sweep_curve(&spec, &[0.6, 0.8, 1.0], &opts(Mode::Nonadaptive)).unwrap();
    for r in curve.rates() {
        assert!((r.unwrap() - c).abs() < 2e-3);
    }
}

#[test]
fn unsorted_grid_is_rejected() {
    assert!(sweep_curve(&clean_state(), &[0.3, 0.1], &SolveOptions::default()).is_err());
}

#[test]
fn augmented_state_leaves_the_value_unchanged() {
    let spec = clean_state();
    let aug = augment_state(&spec);
    for d in [0.11, 0.3] {
        let a = solve_point(&spec, d, &opts(Mode::Nonadaptive))
            .unwrap()
            .rate
            .unwrap();
        let b = solve_point(&aug, d, &opts(Mode::Nonadaptive))
            .unwrap()
            .rate
            .unwrap();
        assert!((a - b).abs() < 1e-3, "D={d}: {a} vs {b}");
    }
}

fn action_channel() -> ChannelSpec {
    ChannelSpec::from_fn(
        2,
        2,
        2,
        2,
        |a, s| [[0.9, 0.1], [0.4, 0.6]][a][s],
        |x, s, a, y| {
            let flip = [0.05, 0.2][a];
            if y == (x ^ s) {
                1.0 - flip
            } else {
                flip
            }
        },
        capdist::channel::hamming(2),
    )
}

#[test]
fn returned_policy_reproduces_the_reported_point() {
    let spec = action_channel();
    let solver = Solver::new(&spec, &SolveOptions::default()).unwrap();
    for mode in Mode::ALL {
        let p = solver.solve(0.15, mode).unwrap();
        let Some(rate) = p.rate else { continue };
        let policy = p.policy.as_ref().unwrap();
        let s = capdist::infotheory::summarize(&spec, policy).unwrap();
        assert!(s.expected_distortion <= 0.15 + 1e-9);
        match mode {
            Mode::Adaptive => {
                assert!((s.i_xa_y + s.i_u_y_given_xa - s.i_u_s_given_xa - rate).abs() < 1e-9)
            }
            _ => {
                assert!((s.nonadaptive_objective.max(0.0) - rate).abs() < 1e-9);
                assert!(s.feasibility_gap >= -1e-9);
            }
        }
    }
}

#[test]
fn modes_are_ordered_on_an_action_channel() {
    let spec = action_channel();
    let solver = Solver::new(&spec, &SolveOptions::default()).unwrap();
    for d in [0.05, 0.1, 0.2, 0.3, 0.5] {
        let r: Vec<f64> = [Mode::Nocsi, Mode::Nonadaptive, Mode::Adaptive]
            .iter()
            .map(|&m| {
                solver
                    .solve(d, m)
                    .unwrap()
                    .rate
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        assert!(r[0] <= r[1] + 2e-3 && r[1] <= r[2] + 2e-3, "D={d}: {r:?}");
    }
}

#[test]
fn decoder_sees_actions_form_matches_at_the_optimizer() {
    let spec = action_channel();
    let revealed = reveal_actions_to_decoder(&spec);
    let p = solve_point(&revealed, 0.2, &opts(Mode::Nonadaptive)).unwrap();
    let policy = p.policy.unwrap();
    let on_revealed = nonadaptive_objective(&assemble_joint(&revealed, &policy).unwrap());
    let mut original_policy = policy.clone();
    original_policy.estimator = capdist::Estimator::constant(
        policy.alpha_u(),
        spec.alpha_x,
        spec.alpha_a,
        spec.alpha_y,
        0,
    );
    let j = assemble_joint(&spec, &original_policy).unwrap();
    let ux = [Var::U, Var::X];
    let closed = entropy(&j, Var::A)
        + conditional_mutual_information(&j, ux, Var::Y, Var::A).unwrap()
        - conditional_mutual_information(&j, ux, Var::S, Var::A).unwrap();
    assert!((on_revealed - closed).abs() < 1e-9);
}
