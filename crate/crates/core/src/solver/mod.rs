//! Capacity–distortion solver.
//!
//! The search space is `p(a,x)` together with one auxiliary kernel
//! `q(u|s)` per input cell `(x, a)`. Because `I(X;S|A) = 0` for every
//! admissible policy, the rate splits as
//!
//! ```text
//! I(U,A,X;Y) − I(U,X;S|A) = I(X,A;Y) + Σ_{x,a} p(a,x) g_{x,a}(q)
//! I(U,X;Y|A) − I(U,X;S|A) = I(X;Y|A) + Σ_{x,a} p(a,x) g_{x,a}(q)
//! ```
//!
//! and the distortion is `Σ p(a,x) D_{x,a}(q)`. Each cell's `(D, g)`
//! frontier is built once; for a given `p(a,x)` the best kernels come from an
//! exact allocation across frontiers, and the outer search runs over the
//! single simplex of `p(a,x)`. The chosen policy is re-evaluated from its
//! joint distribution before it is reported.

mod capacity;
pub(crate) mod cell;
pub(crate) mod frontier;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use crate::channel::ChannelSpec;
use crate::infotheory::{self, Policy};
use crate::simplex::{self, SearchLimits};
use crate::{Error, Result, CONSTRAINT_SLACK};
use cell::{Cell, CellFrontier, CellPoint, FrontierConfig};
use frontier::{allocate, Allocation, Front, Query};

pub(crate) use capacity::{blahut_arimoto, information};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Actions depend on the message only. Rate `I(U,A,X;Y) − I(U,X;S|A)`
    /// subject to `I(U,X;Y|A) − I(U,X;S|A) ≥ 0`.
    Nonadaptive,
    /// Actions may also depend on past states. Rate
    /// `I(U,A,X;Y) − I(U,X;S|A)` subject only to a nonnegative rate.
    ///
    /// The literal expression `I(U,A,X;Y) − I(U,X,A;S)` subtracts `I(A;S)`
    /// and can fall below the nonadaptive value (take `S = A = Y`), so it is
    /// reported by [`infotheory::adaptive_objective`] but not optimized.
    Adaptive,
    /// No auxiliary: `I(X,A;Y)`.
    Nocsi,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Nocsi, Mode::Nonadaptive, Mode::Adaptive];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nonadaptive => "nonadaptive",
            Mode::Adaptive => "adaptive",
            Mode::Nocsi => "nocsi",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonadaptive" => Ok(Mode::Nonadaptive),
            "adaptive" => Ok(Mode::Adaptive),
            "nocsi" => Ok(Mode::Nocsi),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Auxiliary alphabet size; the channel's `alpha_u_max` when unset.
    pub u_cardinality: Option<usize>,
    /// Lattice levels per coordinate for the coarse `p(a,x)` grid.
    pub grid_resolution: usize,
    /// Sweeps of local refinement per start.
    pub refinement_iterations: usize,
    /// Grid starts refined, and random starts added.
    pub restarts: usize,
    pub seed: u64,
    /// Accuracy the caller expects; constraints themselves use a fixed slack.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Nonadaptive,
            u_cardinality: None,
            grid_resolution: 9,
            refinement_iterations: 200,
            restarts: 4,
            seed: 0,
            tolerance: 1e-3,
        }
    }
}

impl SolveOptions {
    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_cardinality == Some(0) {
            return Err(Error::InvalidArgument(
                "u_cardinality must be at least 1".into(),
            ));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidArgument(
                "grid_resolution must be at least 2".into(),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub distortion_budget: f64,
    /// Bits per channel use; `None` when no searched policy meets the budget.
    pub rate: Option<f64>,
    pub achieved_distortion: Option<f64>,
    pub mode: Mode,
    pub feasibility_gap_at_opt: Option<f64>,
    pub policy: Option<Policy>,
}

impl CurvePoint {
    pub fn is_feasible(&self) -> bool {
        self.rate.is_some()
    }

    fn infeasible(budget: f64, mode: Mode) -> Self {
        Self {
            distortion_budget: budget,
            rate: None,
            achieved_distortion: None,
            mode,
            feasibility_gap_at_opt: None,
            policy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub channel_fingerprint: String,
    pub options: SolveOptions,
}

impl Curve {
    pub fn rates(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

const INFEASIBLE: f64 = -1e3;
const THETA_LATTICE_CAP: f64 = 20_000.0;
const THIN_POINTS: usize = 32;
const CELL_LATTICE_RESOLUTION: usize = 33;
const CELL_BUDGETS: usize = 48;
const POLISH_ROUNDS: usize = 4;

/// A candidate: input law, one kernel per cell, and its rate or distortion.
#[derive(Debug, Clone)]
struct Found {
    theta: Vec<f64>,
    picks: Vec<CellPoint>,
    value: f64,
}

#[derive(Clone, Copy)]
enum Level {
    Thin,
    Full,
}

struct Rich {
    full: Vec<CellFrontier>,
    thin: Vec<Front>,
    /// thin front index to full point index, per cell
    thin_idx: Vec<Vec<usize>>,
}

/// Reusable solver state for one channel: cell models and frontiers are
/// built once and shared by every budget and mode.
pub struct Solver<'a> {
    spec: &'a ChannelSpec,
    opts: SolveOptions,
    nu: usize,
    nx: usize,
    cells: Vec<Cell>,
    /// `p(y|x,a)` per cell
    w: Vec<Vec<f64>>,
    trivial: Vec<CellFrontier>,
    rich: OnceLock<Rich>,
    cache: Mutex<HashMap<(Mode, u64), Option<Found>>>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)))
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Best index by score, lowest index on ties.
fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

impl<'a> Solver<'a> {
    pub fn new(spec: &'a ChannelSpec, opts: &SolveOptions) -> Result<Self> {
        spec.ensure_valid()?;
        opts.validate()?;
        let nu = opts.u_cardinality.unwrap_or(spec.alpha_u_max).max(1);
        let (na, nx) = (spec.alpha_a, spec.alpha_x);
        let mut cells = Vec::with_capacity(na * nx);
        let mut w = Vec::with_capacity(na * nx);
        let pyxa = spec.output_given_xa();
        for a in 0..na {
            for x in 0..nx {
                cells.push(Cell::new(spec, x, a));
                w.push(pyxa[a][x].clone());
            }
        }
        let trivial = cells.iter().map(CellFrontier::trivial).collect();
        Ok(Self {
            spec,
            opts: opts.clone(),
            nu,
            nx,
            cells,
            w,
            trivial,
            rich: OnceLock::new(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &ChannelSpec {
        self.spec
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    fn rich(&self) -> &Rich {
        self.rich.get_or_init(|| {
            let ns = self.spec.alpha_s;
            let cfg = FrontierConfig {
                search_labels: self.nu.min(ns + 1),
                max_labels: self.nu,
                lattice_resolution: CELL_LATTICE_RESOLUTION,
                random_seeds: 16 + 4 * self.opts.restarts,
                budgets: CELL_BUDGETS,
            };
            let idx: Vec<usize> = (0..self.cells.len()).collect();
            let full: Vec<CellFrontier> = map_ordered(&idx, |&c| {
                let mut rng = sub_rng(self.opts.seed, 1000 + c as u64);
                cell::build_frontier(&self.cells[c], cfg, &mut rng)
            });
            let (thin, thin_idx) = full.iter().map(|f| f.front.thin(THIN_POINTS)).unzip();
            Rich {
                full,
                thin,
                thin_idx,
            }
        })
    }

    fn fronts(&self, mode: Mode, level: Level) -> Vec<&Front> {
        match (mode, level) {
            (Mode::Nocsi, _) => self.trivial.iter().map(|f| &f.front).collect(),
            (_, Level::Thin) => self.rich().thin.iter().collect(),
            (_, Level::Full) => self.rich().full.iter().map(|f| &f.front).collect(),
        }
    }

    fn cell_frontiers(&self, mode: Mode) -> &[CellFrontier] {
        match mode {
            Mode::Nocsi => &self.trivial,
            _ => &self.rich().full,
        }
    }

    /// `(I(X,A;Y), I(X;Y|A))` for the joint input law `theta`.
    fn input_terms(&self, theta: &[f64]) -> (f64, f64) {
        let i_xa_y = information(theta, &self.w);
        let mut i_x_y_a = 0.0;
        for a in 0..self.spec.alpha_a {
            let row = &theta[a * self.nx..(a + 1) * self.nx];
            let pa: f64 = row.iter().sum();
            if pa > 0.0 {
                let cond: Vec<f64> = row.iter().map(|p| p / pa).collect();
                i_x_y_a += pa * information(&cond, &self.w[a * self.nx..(a + 1) * self.nx]);
            }
        }
        (i_xa_y, i_x_y_a)
    }

    /// Rate floor the auxiliary gain must not cross, per mode.
    fn gain_floor(mode: Mode, terms: (f64, f64)) -> f64 {
        match mode {
            Mode::Nonadaptive => -terms.1,
            Mode::Adaptive | Mode::Nocsi => -terms.0,
        }
    }

    fn allocate_at(
        &self,
        theta: &[f64],
        fronts: &[&Front],
        query: Query,
    ) -> (Option<Allocation>, Vec<usize>) {
        let active: Vec<usize> = (0..theta.len()).filter(|&c| theta[c] > 0.0).collect();
        let scaled: Vec<Front> = active.iter().map(|&c| fronts[c].scaled(theta[c])).collect();
        let refs: Vec<&Front> = scaled.iter().collect();
        (allocate(&refs, query), active)
    }

    fn rate_score(&self, theta: &[f64], mode: Mode, budget: f64, level: Level) -> f64 {
        let fronts = self.fronts(mode, level);
        let terms = self.input_terms(theta);
        let (alloc, _) = self.allocate_at(
            theta,
            &fronts,
            Query::MaxGain {
                budget: budget + CONSTRAINT_SLACK,
            },
        );
        let Some(alloc) = alloc else {
            let d_min: f64 = (0..theta.len()).map(|c| theta[c] * fronts[c].d[0]).sum();
            return INFEASIBLE - (d_min - budget).max(0.0);
        };
        let deficit = Self::gain_floor(mode, terms) - alloc.g;
        if deficit > CONSTRAINT_SLACK {
            return INFEASIBLE - deficit;
        }
        terms.0 + alloc.g
    }

    fn distortion_score(&self, theta: &[f64], mode: Mode, level: Level) -> f64 {
        let fronts = self.fronts(mode, level);
        let terms = self.input_terms(theta);
        let g_min = Self::gain_floor(mode, terms) - CONSTRAINT_SLACK;
        match self
            .allocate_at(theta, &fronts, Query::MinDistortion { g_min })
            .0
        {
            Some(a) => -a.d,
            None => INFEASIBLE,
        }
    }

    fn theta_lattice(&self) -> Vec<Vec<f64>> {
        let n = self.cells.len();
        let mut r = self.opts.grid_resolution;
        while r > 2 && simplex::composition_count(n, r - 1) > THETA_LATTICE_CAP {
            r -= 1;
        }
        simplex::lattice(n, r)
    }

    fn capacity_input(&self) -> Vec<f64> {
        blahut_arimoto(&self.w, 1e-12, 20_000).1
    }

    /// Coarse grid, then local refinement from the best grid points and a few
    /// extra starts. Returns the best refined input law and its score.
    fn outer_search(
        &self,
        score: impl Fn(&[f64]) -> f64 + Sync + Send,
        warm: &[Vec<f64>],
        stream: u64,
    ) -> (Vec<f64>, f64) {
        let n = self.cells.len();
        let grid = self.theta_lattice();
        let grid_scores = map_ordered(&grid, |t| score(t));
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&i, &j| grid_scores[j].total_cmp(&grid_scores[i]).then(i.cmp(&j)));
        let mut starts: Vec<Vec<f64>> = order
            .iter()
            .take(self.opts.restarts.max(1))
            .map(|&i| grid[i].clone())
            .collect();
        starts.push(self.capacity_input());
        starts.push(simplex::uniform(n));
        starts.extend(warm.iter().cloned());
        let mut rng = sub_rng(self.opts.seed, stream);
        for _ in 0..self.opts.restarts {
            let mut t: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            simplex::renormalize(&mut t);
            starts.push(t);
        }
        if n == 1 {
            return (vec![1.0], score(&[1.0]));
        }
        let step = 1.0 / (self.opts.grid_resolution.max(2) - 1) as f64;
        let limits = SearchLimits {
            initial_step: step,
            min_step: 1e-8,
            max_evals: self.opts.refinement_iterations.max(1) * n * (n - 1),
        };
        let refined: Vec<(Vec<f64>, f64)> = map_ordered(&starts, |t0| {
            let mut x = vec![t0.clone()];
            let v = simplex::pattern_search(&mut x, limits, |x| Some(score(&x[0])))
                .expect("scores are total");
            (x.pop().expect("one simplex"), v)
        });
        let scores: Vec<f64> = refined.iter().map(|r| r.1).collect();
        let best = argmax(&scores).expect("at least one start");
        refined[best].clone()
    }

    fn picks_from(
        &self,
        alloc: &Allocation,
        active: &[usize],
        fronts: &[CellFrontier],
    ) -> Vec<CellPoint> {
        let mut picks: Vec<CellPoint> = fronts.iter().map(|f| f.points[f.idle()].clone()).collect();
        for (k, &c) in active.iter().enumerate() {
            picks[c] = fronts[c].points[alloc.pick[k]].clone();
        }
        picks
    }

    fn fixed_terms(&self, theta: &[f64], picks: &[CellPoint]) -> (f64, f64) {
        let d = theta.iter().zip(picks).map(|(t, p)| t * p.d).sum();
        let g = theta.iter().zip(picks).map(|(t, p)| t * p.g).sum();
        (d, g)
    }

    fn search_rate(&self, mode: Mode, budget: f64, warm: &[Vec<f64>]) -> Option<Found> {
        if mode != Mode::Nocsi {
            self.rich();
        }
        // Near the minimum distortion the feasible input laws form a thin
        // sliver around the distortion-optimal one; start there too.
        let anchor = self
            .best_distortion(mode)
            .filter(|f| f.value <= budget + CONSTRAINT_SLACK);
        let mut warm = warm.to_vec();
        warm.extend(anchor.as_ref().map(|f| f.theta.clone()));
        let (theta, score) = self.outer_search(
            |t| self.rate_score(t, mode, budget, Level::Thin),
            &warm,
            mode as u64,
        );
        let mut starts = Vec::new();
        // The thinned frontiers may miss a feasible point near the boundary,
        // so an infeasible thin score is rechecked on the full frontiers.
        if score > INFEASIBLE / 2.0
            || self.rate_score(&theta, mode, budget, Level::Full) > INFEASIBLE / 2.0
        {
            starts.push((theta, None));
        }
        // the anchor's polished kernels are not on the shared frontiers
        starts.extend(anchor.map(|f| (f.theta, Some(f.picks))));
        starts
            .into_iter()
            .filter_map(|(t, extra)| self.finalize_rate(mode, budget, t, extra.as_deref()))
            .reduce(|a, b| if b.value > a.value { b } else { a })
    }

    /// Alternates exact allocation on the full frontiers, per-cell polishing
    /// at the allocated budgets, and input-law refinement with kernels fixed.
    fn finalize_rate(
        &self,
        mode: Mode,
        budget: f64,
        mut theta: Vec<f64>,
        extra: Option<&[CellPoint]>,
    ) -> Option<Found> {
        let mut fronts: Vec<CellFrontier> = self.cell_frontiers(mode).to_vec();
        for (c, p) in extra.into_iter().flatten().enumerate() {
            let mut pool = fronts[c].points.clone();
            pool.push(p.clone());
            fronts[c] = CellFrontier::from_pool(pool);
        }
        let mut best: Option<Found> = None;
        let cap = budget + CONSTRAINT_SLACK;
        for _ in 0..POLISH_ROUNDS {
            let front_refs: Vec<&Front> = fronts.iter().map(|f| &f.front).collect();
            let (alloc, active) =
                self.allocate_at(&theta, &front_refs, Query::MaxGain { budget: cap });
            let mut picks = alloc.as_ref().map(|a| self.picks_from(a, &active, &fronts));
            if mode != Mode::Nocsi {
                // Merging caps can leave the full allocation below the thin
                // one that the outer search scored; keep the better.
                let rich = self.rich();
                let thin_refs: Vec<&Front> = rich.thin.iter().collect();
                if let (Some(t), active) =
                    self.allocate_at(&theta, &thin_refs, Query::MaxGain { budget: cap })
                {
                    if alloc.as_ref().is_none_or(|a| t.g > a.g) {
                        let mut p: Vec<CellPoint> =
                            fronts.iter().map(|f| f.points[f.idle()].clone()).collect();
                        for (k, &c) in active.iter().enumerate() {
                            p[c] = rich.full[c].points[rich.thin_idx[c][t.pick[k]]].clone();
                        }
                        picks = Some(p);
                    }
                }
            }
            let Some(mut picks) = picks else { break };
            let unpolished = picks.clone();
            let (d0, _) = self.fixed_terms(&theta, &picks);

            if mode != Mode::Nocsi {
                let mut spare = (budget - d0).max(0.0);
                for &c in &active {
                    let room = picks[c].d + spare / theta[c];
                    let cand = cell::polish_at_budget(
                        &self.cells[c],
                        &picks[c].q,
                        room,
                        self.nu.min(self.spec.alpha_s + 1).max(picks[c].q[0].len()),
                    );
                    if cand.g > picks[c].g + 1e-13 && cand.q[0].len() <= self.nu {
                        spare -= theta[c] * (cand.d - picks[c].d);
                        spare = spare.max(0.0);
                        let mut pool = fronts[c].points.clone();
                        pool.push(cand.clone());
                        fronts[c] = CellFrontier::from_pool(pool);
                        picks[c] = cand;
                    }
                }
            }

            let terms = self.input_terms(&theta);
            let floor = Self::gain_floor(mode, terms) - CONSTRAINT_SLACK;
            let feasible = |picks: &[CellPoint]| {
                let (d, g) = self.fixed_terms(&theta, picks);
                d <= cap && g >= floor
            };
            if !feasible(&picks) {
                if !feasible(&unpolished) {
                    break;
                }
                picks = unpolished;
            }
            let (_, g) = self.fixed_terms(&theta, &picks);
            let value = terms.0 + g;

            // Input-law refinement with kernels fixed.
            let mut x = vec![theta.clone()];
            let n = theta.len();
            if n > 1 {
                let limits = SearchLimits {
                    initial_step: 0.02,
                    min_step: 1e-9,
                    max_evals: 200 * n * n,
                };
                simplex::pattern_search(&mut x, limits, |x| {
                    let t = &x[0];
                    let terms = self.input_terms(t);
                    let (d, g) = self.fixed_terms(t, &picks);
                    (d <= cap && g >= Self::gain_floor(mode, terms) - CONSTRAINT_SLACK)
                        .then_some(terms.0 + g)
                });
            }
            let moved = x.pop().expect("one simplex");
            let terms = self.input_terms(&moved);
            let (_, g) = self.fixed_terms(&moved, &picks);
            let (theta_next, value) = if terms.0 + g > value {
                (moved, terms.0 + g)
            } else {
                (theta.clone(), value)
            };
            let improved = best.as_ref().is_none_or(|b| value > b.value + 1e-11);
            if improved {
                best = Some(Found {
                    theta: theta_next.clone(),
                    picks,
                    value,
                });
                theta = theta_next;
            } else {
                break;
            }
        }
        best
    }

    fn search_distortion(&self, mode: Mode) -> Option<Found> {
        if mode != Mode::Nocsi {
            self.rich();
        }
        let (theta, score) = self.outer_search(
            |t| self.distortion_score(t, mode, Level::Thin),
            &[],
            100 + mode as u64,
        );
        if score <= INFEASIBLE / 2.0 {
            return None;
        }
        let mut fronts: Vec<CellFrontier> = self.cell_frontiers(mode).to_vec();
        let mut theta = theta;
        let mut best: Option<Found> = None;
        for _ in 0..POLISH_ROUNDS {
            let terms = self.input_terms(&theta);
            let g_min = Self::gain_floor(mode, terms) - CONSTRAINT_SLACK;
            let front_refs: Vec<&Front> = fronts.iter().map(|f| &f.front).collect();
            let (alloc, active) =
                self.allocate_at(&theta, &front_refs, Query::MinDistortion { g_min });
            let Some(alloc) = alloc else { break };
            let mut picks = self.picks_from(&alloc, &active, &fronts);
            if mode != Mode::Nocsi {
                for &c in &active {
                    let cell = &self.cells[c];
                    let floor = picks[c].g;
                    let k = self.nu.min(self.spec.alpha_s + 1).max(picks[c].q[0].len());
                    let mut x: Vec<Vec<f64>> = picks[c]
                        .q
                        .iter()
                        .map(|r| {
                            let mut r = r.clone();
                            r.resize(k, 0.0);
                            r
                        })
                        .collect();
                    simplex::pattern_search(
                        &mut x,
                        SearchLimits {
                            initial_step: 0.02,
                            min_step: 1e-9,
                            max_evals: 20_000,
                        },
                        |q| {
                            let (d, g) = cell.eval(q);
                            (g >= floor).then_some(-d)
                        },
                    );
                    let q = cell.compact(&x);
                    let (d, g) = cell.eval(&q);
                    if d < picks[c].d - 1e-13 && g >= floor && q[0].len() <= self.nu {
                        let cand = CellPoint { d, g, q };
                        let mut pool = fronts[c].points.clone();
                        pool.push(cand.clone());
                        fronts[c] = CellFrontier::from_pool(pool);
                        picks[c] = cand;
                    }
                }
            }
            let (d, _) = self.fixed_terms(&theta, &picks);
            let mut x = vec![theta.clone()];
            let n = theta.len();
            if n > 1 {
                let limits = SearchLimits {
                    initial_step: 0.02,
                    min_step: 1e-9,
                    max_evals: 200 * n * n,
                };
                simplex::pattern_search(&mut x, limits, |x| {
                    let t = &x[0];
                    let terms = self.input_terms(t);
                    let (d, g) = self.fixed_terms(t, &picks);
                    (g >= Self::gain_floor(mode, terms) - CONSTRAINT_SLACK).then_some(-d)
                });
            }
            let moved = x.pop().expect("one simplex");
            let (d_moved, _) = self.fixed_terms(&moved, &picks);
            let (theta_next, value) = if d_moved < d {
                (moved, d_moved)
            } else {
                (theta.clone(), d)
            };
            if best.as_ref().is_none_or(|b| value < b.value - 1e-12) {
                best = Some(Found {
                    theta: theta_next.clone(),
                    picks,
                    value,
                });
                theta = theta_next;
            } else {
                break;
            }
        }
        best
    }

    fn cache_get(&self, mode: Mode, key: f64) -> Option<Option<Found>> {
        self.cache
            .lock()
            .expect("cache lock")
            .get(&(mode, key.to_bits()))
            .cloned()
    }

    fn cache_put(&self, mode: Mode, key: f64, found: &Option<Found>) {
        self.cache
            .lock()
            .expect("cache lock")
            .insert((mode, key.to_bits()), found.clone());
    }

    /// Best policy for `mode`, also trying the optimum of every more
    /// restricted mode (their feasible sets are nested).
    fn best_rate(&self, mode: Mode, budget: f64, warm: &[Vec<f64>]) -> Option<Found> {
        if let Some(hit) = self.cache_get(mode, budget) {
            return hit;
        }
        let own = self.search_rate(mode, budget, warm);
        let inner = match mode {
            Mode::Nocsi => None,
            Mode::Nonadaptive => self.best_rate(Mode::Nocsi, budget, warm),
            Mode::Adaptive => self.best_rate(Mode::Nonadaptive, budget, warm),
        };
        let found = match (own, inner) {
            (Some(a), Some(b)) => Some(if b.value > a.value { b } else { a }),
            (a, b) => a.or(b),
        };
        self.cache_put(mode, budget, &found);
        found
    }

    fn best_distortion(&self, mode: Mode) -> Option<Found> {
        let key = f64::NAN;
        if let Some(hit) = self.cache_get(mode, key) {
            return hit;
        }
        let own = self.search_distortion(mode);
        let inner = match mode {
            Mode::Nocsi => None,
            Mode::Nonadaptive => self.best_distortion(Mode::Nocsi),
            Mode::Adaptive => self.best_distortion(Mode::Nonadaptive),
        };
        let found = match (own, inner) {
            (Some(a), Some(b)) => Some(if b.value < a.value { b } else { a }),
            (a, b) => a.or(b),
        };
        self.cache_put(mode, key, &found);
        found
    }

    fn policy_of(&self, found: &Found) -> Result<Policy> {
        let spec = self.spec;
        let (na, nx) = (spec.alpha_a, spec.alpha_x);
        let mut p_a = vec![0.0; na];
        let mut p_x_given_a = vec![vec![0.0; nx]; na];
        for a in 0..na {
            let row = &found.theta[a * nx..(a + 1) * nx];
            p_a[a] = row.iter().sum();
            if p_a[a] > 0.0 {
                p_x_given_a[a] = row.iter().map(|p| p / p_a[a]).collect();
                simplex::renormalize(&mut p_x_given_a[a]);
            } else {
                p_x_given_a[a] = simplex::uniform(nx);
            }
        }
        simplex::renormalize(&mut p_a);
        let mut q = vec![vec![vec![vec![0.0; self.nu]; na]; spec.alpha_s]; nx];
        for a in 0..na {
            for x in 0..nx {
                let pick = &found.picks[a * nx + x];
                for s in 0..spec.alpha_s {
                    let row = &mut q[x][s][a];
                    for (u, p) in pick.q[s].iter().enumerate() {
                        row[u] = *p;
                    }
                    simplex::renormalize(row);
                }
            }
        }
        Policy::with_optimal_estimator(spec, p_a, p_x_given_a, q)
    }

    fn point_of(&self, found: &Found, mode: Mode, budget: f64) -> Result<CurvePoint> {
        let policy = self.policy_of(found)?;
        let joint = infotheory::assemble_joint(self.spec, &policy)?;
        let rate = infotheory::nonadaptive_objective(&joint);
        let gap = infotheory::feasibility_gap(&joint);
        let achieved =
            infotheory::expected_distortion(&joint, &policy.estimator, &self.spec.distortion);
        Ok(CurvePoint {
            distortion_budget: budget,
            rate: Some(rate.max(0.0)),
            achieved_distortion: Some(achieved),
            mode,
            feasibility_gap_at_opt: Some(gap),
            policy: Some(policy),
        })
    }

    pub fn solve(&self, budget: f64, mode: Mode) -> Result<CurvePoint> {
        self.solve_warm(budget, mode, &[])
    }

    fn solve_warm(&self, budget: f64, mode: Mode, warm: &[Vec<f64>]) -> Result<CurvePoint> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "distortion must be ≥ 0, got {budget}"
            )));
        }
        match self.best_rate(mode, budget, warm) {
            Some(found) => self.point_of(&found, mode, budget),
            None => Ok(CurvePoint::infeasible(budget, mode)),
        }
    }

    pub fn sweep(&self, grid: &[f64], mode: Mode) -> Result<Curve> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "distortion grid must be strictly increasing".into(),
            ));
        }
        let mut points: Vec<CurvePoint> = Vec::with_capacity(grid.len());
        let mut warm: Vec<Vec<f64>> = Vec::new();
        for &d in grid {
            let mut p = self.solve_warm(d, mode, &warm)?;
            if let Some(pol) = &p.policy {
                warm = vec![joint_input(pol)];
            }
            // Monotone envelope: a policy feasible at a smaller budget stays feasible.
            if let Some(prev) = points.last() {
                if prev.rate.unwrap_or(f64::NEG_INFINITY) > p.rate.unwrap_or(f64::NEG_INFINITY) {
                    let budget = p.distortion_budget;
                    p = prev.clone();
                    p.distortion_budget = budget;
                }
            }
            points.push(p);
        }
        Ok(Curve {
            points,
            channel_fingerprint: self.spec.fingerprint(),
            options: self.opts.with_mode(mode),
        })
    }

    pub fn min_distortion(&self, mode: Mode) -> Result<f64> {
        let found = self.best_distortion(mode).ok_or_else(|| {
            Error::InvalidArgument("no policy satisfies the rate constraints".into())
        })?;
        let policy = self.policy_of(&found)?;
        let joint = infotheory::assemble_joint(self.spec, &policy)?;
        Ok(infotheory::expected_distortion(
            &joint,
            &policy.estimator,
            &self.spec.distortion,
        ))
    }

    pub fn unconstrained_capacity(&self) -> f64 {
        blahut_arimoto(&self.w, 1e-12, 20_000).0
    }
}

/// `p(a,x)` of a policy, flattened `a`-major.
pub(crate) fn joint_input(policy: &Policy) -> Vec<f64> {
    policy
        .p_a
        .iter()
        .zip(&policy.p_x_given_a)
        .flat_map(|(pa, row)| row.iter().map(move |px| pa * px))
        .collect()
}

/// Maximizes the mode's rate at distortion budget `d`.
pub fn solve_point(spec: &ChannelSpec, d: f64, opts: &SolveOptions) -> Result<CurvePoint> {
    Solver::new(spec, opts)?.solve(d, opts.mode)
}

/// Solves a strictly increasing grid with warm starts and a monotone envelope.
pub fn sweep_curve(spec: &ChannelSpec, grid: &[f64], opts: &SolveOptions) -> Result<Curve> {
    Solver::new(spec, opts)?.sweep(grid, opts.mode)
}

/// Smallest distortion reachable while the mode's rate constraints hold.
pub fn min_distortion(spec: &ChannelSpec, opts: &SolveOptions) -> Result<f64> {
    Solver::new(spec, opts)?.min_distortion(opts.mode)
}

/// `max I(X,A;Y)` over `p(a) p(x|a)`.
pub fn unconstrained_capacity(spec: &ChannelSpec, opts: &SolveOptions) -> Result<f64> {
    Ok(Solver::new(spec, opts)?.unconstrained_capacity())
}
