//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line and then asserts the verdict.

use std::io::Write;
use std::time::{Duration, Instant};

use capdist::channel::instances::{
    clean_state, constant_output, noiseless_input_action, xor_state,
};
use capdist::channel::{hamming, mac_adapter, reveal_actions_to_decoder, ChannelSpec, MacSpec};
use capdist::gaussian::{
    gaussian_breakpoints, gaussian_capdist, saturation_rate, GaussianParams, Units,
};
use capdist::infotheory::{
    adaptive_objective, assemble_joint, conditional_mutual_information, entropy,
    mutual_information, nonadaptive_objective,
};
use capdist::oracle::{
    brute_force_mac, brute_force_min_distortion, brute_force_point, OracleOptions,
};
use capdist::sim::{
    derive_code_rates, empirical_mi_check, run_block_markov, MiEstimates, SimConfig,
};
use capdist::solver::{Mode, Solver};
use capdist::{Estimator, Policy, SolveOptions, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default solver tolerance; "within 2·tolerance" checks use twice this.
const TOL: f64 = 1e-3;

fn report(n: u32, ok: bool, detail: &str, started: Instant) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n}: {verdict} ({:.1}s) {detail}\n",
        started.elapsed().as_secs_f64()
    );
    // bypasses the test harness capture so the line always shows
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k)
        .map(|_| -rng.random_range(1e-6f64..1.0).ln())
        .collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Binary alphabets everywhere, Hamming distortion.
fn random_binary_channel(rng: &mut ChaCha8Rng) -> ChannelSpec {
    let ps: Vec<f64> = (0..2).map(|_| rng.random_range(0.05..0.95)).collect();
    let py: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
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

/// Small random alphabets (2 or 3 symbols each).
fn random_small_channel(rng: &mut ChaCha8Rng) -> ChannelSpec {
    let (na, nx, ns, ny) = (rng.random_range(2..=3), 2, 2, rng.random_range(2..=3));
    let ps: Vec<Vec<f64>> = (0..na).map(|_| random_pmf(rng, ns)).collect();
    let py: Vec<Vec<f64>> = (0..nx * ns * na).map(|_| random_pmf(rng, ny)).collect();
    ChannelSpec::from_fn(
        na,
        nx,
        ns,
        ny,
        |a, s| ps[a][s],
        |x, s, a, y| py[(x * ns + s) * na + a][y],
        hamming(2),
    )
}

fn random_policy(spec: &ChannelSpec, nu: usize, rng: &mut ChaCha8Rng) -> Policy {
    let p_a = random_pmf(rng, spec.alpha_a);
    let p_x = (0..spec.alpha_a)
        .map(|_| random_pmf(rng, spec.alpha_x))
        .collect();
    let q = (0..spec.alpha_x)
        .map(|_| {
            (0..spec.alpha_s)
                .map(|_| (0..spec.alpha_a).map(|_| random_pmf(rng, nu)).collect())
                .collect()
        })
        .collect();
    Policy::with_optimal_estimator(spec, p_a, p_x, q).unwrap()
}

/// Fixed channel whose actions shape the state and the noise.
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
        hamming(2),
    )
}

#[test]
fn criterion_1_gaussian_closed_form() {
    let t = Instant::now();
    let p = GaussianParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let bp = gaussian_breakpoints(&p);
    let mut fails = Vec::new();
    let mut check = |what: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            fails.push(format!("{what}={got:.6} want {want} ±{tol:e}"));
        }
    };
    check("D_min^A", bp.d_min_nonadaptive, 1.0 / 3.0, 1e-12);
    check("D_max", bp.d_max, 0.5, 1e-12);
    check("D_min^AA", bp.d_min_adaptive, 1.0 / 6.0, 1e-12);
    let na = gaussian_capdist(&p, 0.4, Mode::Nonadaptive).unwrap();
    let ad = gaussian_capdist(&p, 0.4, Mode::Adaptive).unwrap();
    // printed four-digit value; the exact substitution gives 0.5574
    check("C_na(0.4)", na, 0.5577, 5e-4);
    check("C_a(0.4)", ad, 0.6315, 5e-5);
    let sat = 0.5 * 3f64.log2();
    check("saturation", saturation_rate(&p, Units::Bits), sat, 1e-12);
    for d in [0.5, 0.6, 1.0, 10.0] {
        for mode in [Mode::Nonadaptive, Mode::Adaptive] {
            check(
                &format!("C_{mode}({d})"),
                gaussian_capdist(&p, d, mode).unwrap(),
                sat,
                1e-12,
            );
        }
    }
    // continuity: value just below each breakpoint against the value at it
    let h = 1e-12;
    for (mode, d_min) in [
        (Mode::Nonadaptive, bp.d_min_nonadaptive),
        (Mode::Adaptive, bp.d_min_adaptive),
    ] {
        for b in [d_min, bp.d_max] {
            let left = gaussian_capdist(&p, b - h, mode).unwrap();
            let at = gaussian_capdist(&p, b, mode).unwrap();
            if (left - at).abs() > 1e-9 {
                fails.push(format!("{mode} jumps by {:.4} at D={b:.6}", at - left));
            }
        }
    }
    let mut ordered = true;
    for i in 1..=100 {
        let d = 0.6 * i as f64 / 100.0;
        let a = gaussian_capdist(&p, d, Mode::Adaptive).unwrap();
        let n = gaussian_capdist(&p, d, Mode::Nonadaptive).unwrap();
        ordered &= a >= n - 1e-12;
    }
    if !ordered {
        fails.push("adaptive below nonadaptive on the grid".into());
    }
    let fast = t.elapsed() < Duration::from_secs(1);
    if !fast {
        fails.push("runtime over 1 s".into());
    }
    let detail = format!(
        "C_na(0.4)={na:.4} C_a(0.4)={ad:.4}; {}",
        if fails.is_empty() {
            "all checks met".into()
        } else {
            fails.join("; ")
        }
    );
    report(1, fails.is_empty(), &detail, t);
}

#[test]
fn criterion_2_oracle_equivalence() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_24);
    let oopts = OracleOptions {
        resolution: 33,
        u_cardinality: 2,
        exhaustive_estimators: false,
    };
    let sopts = SolveOptions {
        u_cardinality: Some(2),
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut misses = Vec::new();
    for c in 0..10 {
        let spec = random_binary_channel(&mut rng);
        let solver = Solver::new(&spec, &sopts).unwrap();
        let d_star = brute_force_min_distortion(&spec, Mode::Nonadaptive, &oopts)
            .unwrap()
            .unwrap_or(0.0);
        let trivial = spec.trivial_distortion();
        for k in 1..=3 {
            let d = d_star + k as f64 / 4.0 * (trivial - d_star);
            for mode in [Mode::Nonadaptive, Mode::Adaptive] {
                let o = brute_force_point(&spec, d, mode, &oopts).unwrap().rate;
                let s = solver.solve(d, mode).unwrap().rate;
                match (s, o) {
                    (Some(s), Some(o)) => {
                        compared += 1;
                        let gap = (s - o).abs();
                        worst = worst.max(gap);
                        if gap > 5e-3 {
                            misses.push(format!(
                                "ch{c} {mode} D={d:.4}: solver {s:.5} oracle {o:.5}"
                            ));
                        }
                    }
                    (None, None) => compared += 1,
                    (s, o) => {
                        misses.push(format!("ch{c} {mode} D={d:.4}: solver {s:?} oracle {o:?}"))
                    }
                }
            }
        }
    }
    let ok = misses.is_empty() && compared >= 60 && t.elapsed() < Duration::from_secs(600);
    let detail = format!(
        "{compared} points, max gap {worst:.2e}; {}",
        misses.join("; ")
    );
    report(2, ok, &detail, t);
}

#[test]
fn criterion_3_curve_properties() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut channels: Vec<(String, ChannelSpec)> = vec![
        ("clean".into(), clean_state()),
        ("xor".into(), xor_state(0.2)),
        ("const".into(), constant_output()),
        ("action".into(), action_channel()),
    ];
    for i in 0..3 {
        channels.push((format!("rand{i}"), random_binary_channel(&mut rng)));
    }
    let mut fails = Vec::new();
    let mut curves = 0;
    for (name, spec) in &channels {
        let solver = Solver::new(spec, &SolveOptions::default()).unwrap();
        for mode in [Mode::Nonadaptive, Mode::Adaptive] {
            let d_star = solver.min_distortion(mode).unwrap();
            let hi = spec.trivial_distortion().max(d_star + 0.05);
            let grid: Vec<f64> = (0..9)
                .map(|i| d_star + (hi - d_star) * i as f64 / 8.0)
                .collect();
            let curve = solver.sweep(&grid, mode).unwrap();
            curves += 1;
            let r: Vec<f64> = curve
                .rates()
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect();
            if r.iter().any(|v| v.is_nan()) {
                fails.push(format!("{name}/{mode}: infeasible grid point {r:?}"));
                continue;
            }
            for i in 1..r.len() {
                if r[i] < r[i - 1] - 2.0 * TOL {
                    fails.push(format!("{name}/{mode}: decreases at D={:.4}", grid[i]));
                }
            }
            for i in 1..r.len() - 1 {
                if r[i] < 0.5 * (r[i - 1] + r[i + 1]) - 2.0 * TOL {
                    fails.push(format!("{name}/{mode}: not concave at D={:.4}", grid[i]));
                }
            }
            if d_star > 1e-6 && r[0].abs() > 2.0 * TOL {
                fails.push(format!("{name}/{mode}: rate {:.4} at D*={d_star:.4}", r[0]));
            }
        }
    }
    let detail = format!(
        "{curves} curves; {}",
        if fails.is_empty() {
            "all properties hold".into()
        } else {
            fails.join("; ")
        }
    );
    report(3, fails.is_empty(), &detail, t);
}

#[test]
fn criterion_4_mode_ordering() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fails = Vec::new();
    for c in 0..20 {
        let spec = random_small_channel(&mut rng);
        let solver = Solver::new(&spec, &SolveOptions::default()).unwrap();
        let d_star = solver.min_distortion(Mode::Adaptive).unwrap();
        let trivial = spec.trivial_distortion();
        for f in [0.25, 0.6, 1.0] {
            let d = d_star + f * (trivial - d_star).max(0.0);
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
            if !(r[0] <= r[1] + 2.0 * TOL && r[1] <= r[2] + 2.0 * TOL) {
                fails.push(format!("ch{c} D={d:.4}: {r:?}"));
            }
        }
    }
    // outputs blind to the input: nonadaptive collapses to no-CSI
    let mut equal_checked = 0;
    for c in 0..3 {
        let py: Vec<Vec<f64>> = (0..4).map(|_| random_pmf(&mut rng, 2)).collect();
        let ps: Vec<Vec<f64>> = (0..2).map(|_| random_pmf(&mut rng, 2)).collect();
        let spec = ChannelSpec::from_fn(
            2,
            2,
            2,
            2,
            |a, s| ps[a][s],
            |_, s, a, y| py[s * 2 + a][y],
            hamming(2),
        );
        let solver = Solver::new(&spec, &SolveOptions::default()).unwrap();
        for d in [0.2, 0.35, 0.5] {
            let n = solver.solve(d, Mode::Nonadaptive).unwrap().rate;
            let o = solver.solve(d, Mode::Nocsi).unwrap().rate;
            equal_checked += 1;
            match (n, o) {
                (Some(n), Some(o)) if (n - o).abs() <= 2.0 * TOL => {}
                (None, None) => {}
                _ => fails.push(format!("blind{c} D={d}: nonadaptive {n:?} nocsi {o:?}")),
            }
        }
    }
    let detail = format!(
        "20 random channels x 3 budgets, {equal_checked} blind-output points; {}",
        fails.join("; ")
    );
    report(4, fails.is_empty(), &detail, t);
}

#[test]
fn criterion_5_unconstrained_capacity_invariance() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut channels = vec![
        clean_state(),
        xor_state(0.1),
        constant_output(),
        noiseless_input_action(),
        action_channel(),
    ];
    for _ in 0..5 {
        channels.push(random_small_channel(&mut rng));
    }
    let mut fails = Vec::new();
    for (i, spec) in channels.iter().enumerate() {
        let solver = Solver::new(spec, &SolveOptions::default()).unwrap();
        let c = solver.unconstrained_capacity();
        let d = spec.trivial_distortion();
        let n = solver
            .solve(d, Mode::Nonadaptive)
            .unwrap()
            .rate
            .unwrap_or(f64::NAN);
        let a = solver
            .solve(d, Mode::Adaptive)
            .unwrap()
            .rate
            .unwrap_or(f64::NAN);
        if !((n - a).abs() <= 2.0 * TOL && (n - c).abs() <= 2.0 * TOL) {
            fails.push(format!(
                "ch{i} D={d:.4}: nonadaptive {n:.5} adaptive {a:.5} capacity {c:.5}"
            ));
        }
    }
    let detail = format!("{} channels; {}", channels.len(), fails.join("; "));
    report(5, fails.is_empty(), &detail, t);
}

#[test]
fn criterion_6_decoder_sees_actions_identity() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let spec = random_small_channel(&mut rng);
        let nu = rng.random_range(1..=4);
        let policy = random_policy(&spec, nu, &mut rng);
        let revealed = reveal_actions_to_decoder(&spec);
        let mut on_revealed = policy.clone();
        on_revealed.estimator =
            Estimator::constant(nu, spec.alpha_x, spec.alpha_a, revealed.alpha_y, 0);
        let transformed = nonadaptive_objective(&assemble_joint(&revealed, &on_revealed).unwrap());
        let j = assemble_joint(&spec, &policy).unwrap();
        let ux = [Var::U, Var::X];
        let closed = entropy(&j, Var::A)
            + conditional_mutual_information(&j, ux, Var::Y, Var::A).unwrap()
            - conditional_mutual_information(&j, ux, Var::S, Var::A).unwrap();
        worst = worst.max((transformed - closed).abs());
    }
    report(
        6,
        worst <= 1e-9,
        &format!("100 policies, max deviation {worst:.2e}"),
        t,
    );
}

/// Binary MAC: `Y = X₁ ⊕ S` through a crossover that the second input sets.
fn binary_mac() -> MacSpec {
    let flip = [0.05, 0.25];
    MacSpec {
        alpha_x1: 2,
        alpha_x2: 2,
        alpha_s: 2,
        alpha_u_max: 2,
        alpha_shat: 2,
        alpha_y: 2,
        state_pmf: vec![0.7, 0.3],
        output_given_sx1x2: (0..2)
            .map(|s| {
                (0..2)
                    .map(|x1| {
                        (0..2)
                            .map(|x2| {
                                let clean = x1 ^ s;
                                (0..2)
                                    .map(|y| if y == clean { 1.0 - flip[x2] } else { flip[x2] })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        distortion: hamming(2),
    }
}

#[test]
fn criterion_7_mac_reduction() {
    let t = Instant::now();
    let mac = binary_mac();
    let spec = mac_adapter(&mac);
    let oopts = OracleOptions {
        resolution: 33,
        u_cardinality: 2,
        exhaustive_estimators: false,
    };
    let solver = Solver::new(
        &spec,
        &SolveOptions {
            u_cardinality: Some(2),
            ..Default::default()
        },
    )
    .unwrap();
    let mut fails = Vec::new();
    let mut rows = Vec::new();
    for d in [0.1, 0.2, 0.3] {
        let sym_solver = solver.solve(d, Mode::Adaptive).unwrap().rate;
        let asym_solver = solver.solve(d, Mode::Nonadaptive).unwrap().rate;
        let sym_direct = brute_force_mac(&mac, d, Mode::Adaptive, &oopts)
            .unwrap()
            .rate;
        let asym_direct = brute_force_mac(&mac, d, Mode::Nonadaptive, &oopts)
            .unwrap()
            .rate;
        rows.push(format!(
            "D={d}: sym {sym_solver:.4?}/{sym_direct:.4?} asym {asym_solver:.4?}/{asym_direct:.4?}"
        ));
        match (sym_solver, sym_direct) {
            (Some(s), Some(o)) if (s - o).abs() <= 5e-3 => {}
            (None, None) => {}
            other => fails.push(format!("D={d}: symmetric solver/direct {other:?}")),
        }
        let lo = |r: Option<f64>| r.unwrap_or(f64::NEG_INFINITY);
        if lo(asym_solver) > lo(sym_solver) + 1e-12 || lo(asym_direct) > lo(sym_direct) + 1e-12 {
            fails.push(format!("D={d}: asymmetric above symmetric"));
        }
    }
    let detail = format!("{}; {}", rows.join(", "), fails.join("; "));
    report(7, fails.is_empty(), &detail, t);
}

fn noisy_copy(spec: &ChannelSpec, flip: f64) -> Policy {
    let q = (0..spec.alpha_x)
        .map(|_| {
            (0..spec.alpha_s)
                .map(|s| {
                    (0..spec.alpha_a)
                        .map(|_| {
                            if s == 0 {
                                vec![1.0 - flip, flip]
                            } else {
                                vec![flip, 1.0 - flip]
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Policy::with_optimal_estimator(spec, vec![1.0], vec![vec![0.5, 0.5]], q).unwrap()
}

#[test]
fn criterion_8_simulator_soundness() {
    let t = Instant::now();
    let mut fails = Vec::new();
    let e1 = clean_state();

    // (a) plug-in estimates at n = 10^5
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = vec![
        (e1.clone(), noisy_copy(&e1, 0.0)),
        (e1.clone(), noisy_copy(&e1, 0.11)),
    ];
    for _ in 0..3 {
        let spec = random_small_channel(&mut rng);
        let policy = random_policy(&spec, 2, &mut rng);
        cases.push((spec, policy));
    }
    let mut worst_mi: f64 = 0.0;
    for (i, (spec, policy)) in cases.iter().enumerate() {
        let est = empirical_mi_check(spec, policy, 100_000, i as u64).unwrap();
        worst_mi = worst_mi.max(est.max_abs_diff(&MiEstimates::exact(spec, policy).unwrap()));
    }
    if worst_mi > 0.05 {
        fails.push(format!("(a) plug-in deviation {worst_mi:.3}"));
    }

    // (b) distortion on the clean-state channel, n = 2048, b = 10
    let policy = noisy_copy(&e1, 0.11);
    let want = capdist::infotheory::summarize(&e1, &policy)
        .unwrap()
        .expected_distortion;
    let mut dists = Vec::new();
    for seed in 0..5 {
        let cfg = SimConfig {
            n: 2048,
            b: 10,
            rate_r: 0.25,
            seed,
            ..Default::default()
        };
        let r = run_block_markov(&e1, &policy, &cfg).unwrap();
        dists.push(r.empirical_distortion);
    }
    if dists.iter().any(|d| (d - want).abs() > 0.05) {
        fails.push(format!("(b) distortions {dists:.3?} vs {want:.3}"));
    }

    // (c) noiseless, low rate
    let noiseless = noiseless_input_action();
    let flat =
        Policy::without_auxiliary(&noiseless, vec![0.5, 0.5], vec![vec![0.5, 0.5]; 2]).unwrap();
    let mut worst_err: f64 = 0.0;
    for seed in 0..5 {
        let cfg = SimConfig {
            n: 512,
            b: 8,
            rate_r: 0.5,
            seed,
            ..Default::default()
        };
        worst_err = worst_err.max(
            run_block_markov(&noiseless, &flat, &cfg)
                .unwrap()
                .empirical_message_error,
        );
    }
    if worst_err != 0.0 {
        fails.push(format!("(c) message error {worst_err}"));
    }

    // (d) covering failures fall from n = 512 to n = 2048
    let mut fewer = 0;
    let mut pairs = Vec::new();
    for seed in 0..5 {
        let run = |n| {
            let cfg = SimConfig {
                n,
                b: 10,
                rate_r: 0.25,
                seed: 100 + seed,
                ..Default::default()
            };
            run_block_markov(&e1, &policy, &cfg)
                .unwrap()
                .encoder_covering_failures
        };
        let (short, long) = (run(512), run(2048));
        pairs.push((short, long));
        fewer += usize::from(long < short);
    }
    if fewer < 4 {
        fails.push(format!("(d) decreases on {fewer} of 5 seeds {pairs:?}"));
    }
    if t.elapsed() > Duration::from_secs(300) {
        fails.push("runtime over 5 min".into());
    }
    let detail = format!(
        "mi dev {worst_mi:.3}, distortions {dists:.3?} (analytic {want:.3}), covering 512->2048 {pairs:?}; {}",
        fails.join("; ")
    );
    report(8, fails.is_empty(), &detail, t);
}

#[test]
fn criterion_9_algebraic_identities() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut markov, mut gap, mut chain, mut rates): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..200 {
        let spec = random_small_channel(&mut rng);
        let nu = rng.random_range(1..=4);
        let policy = random_policy(&spec, nu, &mut rng);
        let j = assemble_joint(&spec, &policy).unwrap();
        use Var::*;
        markov = markov.max(conditional_mutual_information(&j, X, S, A).unwrap().abs());
        let i_as = mutual_information(&j, A, S).unwrap();
        gap = gap.max((nonadaptive_objective(&j) - adaptive_objective(&j) - i_as).abs());
        let split = mutual_information(&j, [X, A], Y).unwrap()
            + conditional_mutual_information(&j, U, Y, [X, A]).unwrap();
        let whole = mutual_information(&j, [U, X, A], Y).unwrap();
        let ux_s = conditional_mutual_information(&j, [U, X], S, A).unwrap();
        let u_s = conditional_mutual_information(&j, U, S, [X, A]).unwrap();
        chain = chain.max((split - whole).abs()).max((ux_s - u_s).abs());
        let delta = 0.01;
        let r = derive_code_rates(&spec, &policy, delta).unwrap();
        if r.r_s_tilde > r.i_u_y_given_xa {
            rates = rates.max((r.r_max - (nonadaptive_objective(&j) - 3.0 * delta)).abs());
        }
    }
    let ok = markov <= 1e-12 && gap <= 1e-12 && chain <= 1e-12 && rates <= 1e-12;
    let detail = format!("I(X;S|A) {markov:.1e}, objective gap vs I(A;S) {gap:.1e}, chain rule {chain:.1e}, code rates {rates:.1e}");
    report(9, ok, &detail, t);
}
