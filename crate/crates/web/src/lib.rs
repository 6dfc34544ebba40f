//! Browser demo: Gaussian curves, a binary channel sweep and a small
//! block-Markov run. Each entry point returns a JSON string; the plain
//! functions are callable natively, the `#[wasm_bindgen]` wrappers only
//! convert errors.

use capdist::channel::instances::clean_state;
use capdist::channel::{hamming, ChannelSpec};
use capdist::gaussian::{gaussian_breakpoints, gaussian_capdist, GaussianParams};
use capdist::infotheory::summarize;
use capdist::sim::{run_block_markov, SimConfig};
use capdist::solver::Solver;
use capdist::{Mode, Policy, SolveOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid any demo call will evaluate.
const MAX_POINTS: usize = 400;

/// Block length cap; larger runs stall the page.
const MAX_BLOCK_LENGTH: usize = 4096;

#[derive(Debug, Serialize)]
pub struct GaussianCurves {
    pub d: Vec<f64>,
    pub nonadaptive: Vec<f64>,
    pub adaptive: Vec<f64>,
    pub d_min_nonadaptive: f64,
    pub d_min_adaptive: f64,
    pub d_max: f64,
}

fn points(count: usize) -> Result<usize, String> {
    if !(2..=MAX_POINTS).contains(&count) {
        return Err(format!("point count must be in 2..={MAX_POINTS}"));
    }
    Ok(count)
}

/// Both Gaussian curves on `(0, 1.25·D_max]`, in bits.
pub fn gaussian_curves(
    p_x: f64,
    p_a: f64,
    q: f64,
    n0: f64,
    count: usize,
) -> Result<GaussianCurves, String> {
    let count = points(count)?;
    let p = GaussianParams::new(p_x, p_a, q, n0).map_err(|e| e.to_string())?;
    let bp = gaussian_breakpoints(&p);
    let top = 1.25 * bp.d_max;
    let d: Vec<f64> = (1..=count).map(|k| top * k as f64 / count as f64).collect();
    let eval = |mode| {
        d.iter()
            .map(|&d| gaussian_capdist(&p, d, mode).map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()
    };
    Ok(GaussianCurves {
        nonadaptive: eval(Mode::Nonadaptive)?,
        adaptive: eval(Mode::Adaptive)?,
        d,
        d_min_nonadaptive: bp.d_min_nonadaptive,
        d_min_adaptive: bp.d_min_adaptive,
        d_max: bp.d_max,
    })
}

/// Binary channel `Y = X ⊕ S ⊕ Z`, `Z ~ Bern(noise)`. Action 0 leaves the
/// state at `Bern(q)`, action 1 quiets it to `Bern(q_quiet)`.
pub fn demo_channel(q: f64, q_quiet: f64, noise: f64) -> Result<ChannelSpec, String> {
    for (name, v) in [("q", q), ("q_quiet", q_quiet), ("noise", noise)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} must lie in [0, 1]"));
        }
    }
    let spec = ChannelSpec::from_fn(
        2,
        2,
        2,
        2,
        |a, s| {
            let p = if a == 0 { q } else { q_quiet };
            if s == 1 {
                p
            } else {
                1.0 - p
            }
        },
        |x, s, _, y| if (x ^ s) == y { 1.0 - noise } else { noise },
        hamming(2),
    )
    .with_u_max(2);
    Ok(spec)
}

#[derive(Debug, Serialize)]
pub struct BinaryCurves {
    pub d: Vec<f64>,
    /// `null` where the budget is below the mode's minimum distortion.
    pub nonadaptive: Vec<Option<f64>>,
    pub adaptive: Vec<Option<f64>>,
    pub nocsi: Vec<Option<f64>>,
    pub trivial_distortion: f64,
}

/// All three modes of [`demo_channel`] on `[0, trivial distortion]`.
pub fn binary_curves(
    q: f64,
    q_quiet: f64,
    noise: f64,
    count: usize,
) -> Result<BinaryCurves, String> {
    let count = points(count)?;
    let spec = demo_channel(q, q_quiet, noise)?;
    let top = spec.trivial_distortion();
    let d: Vec<f64> = (0..count)
        .map(|k| top * k as f64 / (count - 1) as f64)
        .collect();
    let opts = SolveOptions {
        u_cardinality: Some(2),
        ..Default::default()
    };
    let solver = Solver::new(&spec, &opts).map_err(|e| e.to_string())?;
    let curve = |mode| -> Result<Vec<Option<f64>>, String> {
        Ok(solver.sweep(&d, mode).map_err(|e| e.to_string())?.rates())
    };
    Ok(BinaryCurves {
        nonadaptive: curve(Mode::Nonadaptive)?,
        adaptive: curve(Mode::Adaptive)?,
        nocsi: curve(Mode::Nocsi)?,
        trivial_distortion: top,
        d,
    })
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub predicted_distortion: f64,
    pub empirical_distortion: f64,
    pub empirical_message_error: f64,
    pub encoder_covering_failures: usize,
    pub r_max: f64,
    pub engine: String,
}

/// Clean-state channel (`Y = X`, fair state) with `U` a noisy copy of `S`.
pub fn simulate_clean_state(
    flip: f64,
    n: usize,
    b: usize,
    rate: f64,
    seed: u64,
) -> Result<SimulationSummary, String> {
    if !(0.0..=0.5).contains(&flip) {
        return Err("flip must lie in [0, 0.5]".into());
    }
    if n > MAX_BLOCK_LENGTH {
        return Err(format!(
            "block length is capped at {MAX_BLOCK_LENGTH} in the browser"
        ));
    }
    let spec = clean_state();
    let test = |s: usize| {
        if s == 0 {
            vec![1.0 - flip, flip]
        } else {
            vec![flip, 1.0 - flip]
        }
    };
    let q = vec![(0..2).map(|s| vec![test(s)]).collect(); 2];
    let policy = Policy::with_optimal_estimator(&spec, vec![1.0], vec![vec![0.5, 0.5]], q)
        .map_err(|e| e.to_string())?;
    let predicted = summarize(&spec, &policy)
        .map_err(|e| e.to_string())?
        .expected_distortion;
    let config = SimConfig {
        n,
        b,
        rate_r: rate,
        seed,
        ..Default::default()
    };
    let r = run_block_markov(&spec, &policy, &config).map_err(|e| e.to_string())?;
    Ok(SimulationSummary {
        predicted_distortion: predicted,
        empirical_distortion: r.empirical_distortion,
        empirical_message_error: r.empirical_message_error,
        encoder_covering_failures: r.encoder_covering_failures,
        r_max: r.rates.r_max,
        engine: format!("{:?}", r.engine).to_lowercase(),
    })
}

fn to_js<T: Serialize>(v: Result<T, String>) -> Result<String, JsValue> {
    v.map(|v| serde_json::to_string(&v).expect("demo results serialize"))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = gaussianCurves)]
pub fn gaussian_curves_js(
    p_x: f64,
    p_a: f64,
    q: f64,
    n0: f64,
    count: usize,
) -> Result<String, JsValue> {
    to_js(gaussian_curves(p_x, p_a, q, n0, count))
}

#[wasm_bindgen(js_name = binaryCurves)]
pub fn binary_curves_js(q: f64, q_quiet: f64, noise: f64, count: usize) -> Result<String, JsValue> {
    to_js(binary_curves(q, q_quiet, noise, count))
}

#[wasm_bindgen(js_name = simulateCleanState)]
pub fn simulate_clean_state_js(
    flip: f64,
    n: usize,
    b: usize,
    rate: f64,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(simulate_clean_state(flip, n, b, rate, u64::from(seed)))
}
