use capdist::channel::instances::clean_state;
use capdist::channel::{hamming, ChannelSpec};
use capdist::oracle::{brute_force_point, OracleOptions};
use capdist::solver::{Mode, Solver};
use capdist::SolveOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_binary_channel(rng: &mut ChaCha8Rng) -> ChannelSpec {
    let ps: Vec<f64> = (0..2).map(|_| rng.random_range(0.05..0.95)).collect();
    let py: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
    ChannelSpec::from_fn(
        2,
        2,
        2,
        2,
        |a, s| if s == 1 { ps[a] } else { 1.0 - ps[a] },
        |x, s, a, y| {
            let p1 = py[(x * 2 + s) * 2 + a];
            if y == 1 {
                p1
            } else {
                1.0 - p1
            }
        },
        hamming(2),
    )
}

#[test]
fn clean_state_agrees_with_the_oracle() {
    let opts = OracleOptions {
        resolution: 33,
        ..Default::default()
    };
    let spec = clean_state();
    let solver = Solver::new(&spec, &SolveOptions::default()).unwrap();
    // budgets whose optimal test channels lie on the 1/32 lattice
    for d in [0.0625, 0.125, 0.3125, 0.5] {
        let o = brute_force_point(&spec, d, Mode::Nonadaptive, &opts)
            .unwrap()
            .rate
            .unwrap();
        let s = solver.solve(d, Mode::Nonadaptive).unwrap().rate.unwrap();
        assert!((s - o).abs() < 5e-3, "D={d}: solver {s} oracle {o}");
    }
}

#[test]
fn random_binary_channels_agree_with_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = OracleOptions {
        resolution: 33,
        u_cardinality: 2,
        exhaustive_estimators: false,
    };
    let sopts = SolveOptions {
        u_cardinality: Some(2),
        ..Default::default()
    };
    for _ in 0..3 {
        let spec = random_binary_channel(&mut rng);
        let solver = Solver::new(&spec, &sopts).unwrap();
        for d in [0.1, 0.2, 0.35] {
            for mode in [Mode::Nonadaptive, Mode::Adaptive] {
                let o = brute_force_point(&spec, d, mode, &opts).unwrap().rate;
                let s = solver.solve(d, mode).unwrap().rate;
                match (o, s) {
                    (Some(o), Some(s)) => {
                        assert!((s - o).abs() <= 5e-3, "{mode} D={d}: {s} vs {o}")
                    }
                    // a feasible lattice policy is feasible for the solver too
                    (Some(o), None) => panic!("{mode} D={d}: solver missed lattice value {o}"),
                    _ => {}
                }
            }
        }
    }
}
