//! Per-cell description problem.
//!
//! Conditioned on an input pair `(x, a)`, the auxiliary kernel `q(u|s)`
//! contributes `g = I(U;Y|x,a) − I(U;S|x,a) ≤ 0` to the rate and `D` to the
//! distortion (the estimator sees `u` and `y`). Both the objective and the
//! distortion are weighted sums of these cell terms with weights `p(a,x)`, so
//! each cell's `(D, g)` frontier can be built once and reused.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::frontier::Front;
use crate::channel::ChannelSpec;
use crate::simplex::{self, SearchLimits};

#[derive(Debug, Clone)]
pub(crate) struct Cell {
    /// `p(s|a)`
    pub pi: Vec<f64>,
    /// `p(y|x,s,a)` indexed `[s][y]`
    pub w: Vec<Vec<f64>>,
    pub dist: Vec<Vec<f64>>,
    h_y: f64,
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

impl Cell {
    pub fn new(spec: &ChannelSpec, x: usize, a: usize) -> Self {
        let pi = spec.state_given_action[a].clone();
        let w: Vec<Vec<f64>> = (0..spec.alpha_s)
            .map(|s| spec.output_given_xsa[x][s][a].clone())
            .collect();
        let h_y = (0..spec.alpha_y)
            .map(|y| h((0..spec.alpha_s).map(|s| pi[s] * w[s][y]).sum()))
            .sum();
        Cell {
            pi,
            w,
            dist: spec.distortion.clone(),
            h_y,
        }
    }

    pub fn ns(&self) -> usize {
        self.pi.len()
    }

    fn ny(&self) -> usize {
        self.w[0].len()
    }

    /// `(D, g)` of kernel `q[s][u]`.
    pub fn eval(&self, q: &[Vec<f64>]) -> (f64, f64) {
        let nu = q[0].len();
        let ny = self.ny();
        let nt = self.dist[0].len();
        let mut h_u_s = 0.0;
        for (s, row) in q.iter().enumerate() {
            if self.pi[s] > 0.0 {
                h_u_s += self.pi[s] * row.iter().map(|&p| h(p)).sum::<f64>();
            }
        }
        let mut h_uy = 0.0;
        let mut d = 0.0;
        let mut cost = [0.0f64; 16];
        let mut cost_vec;
        let cost: &mut [f64] = if nt <= 16 {
            &mut cost[..nt]
        } else {
            cost_vec = vec![0.0; nt];
            &mut cost_vec
        };
        for u in 0..nu {
            for y in 0..ny {
                let mut p_uy = 0.0;
                cost.iter_mut().for_each(|c| *c = 0.0);
                for s in 0..self.ns() {
                    let p = self.pi[s] * q[s][u] * self.w[s][y];
                    if p > 0.0 {
                        p_uy += p;
                        for (t, c) in cost.iter_mut().enumerate() {
                            *c += p * self.dist[s][t];
                        }
                    }
                }
                if p_uy > 0.0 {
                    h_uy += h(p_uy);
                    d += cost.iter().copied().fold(f64::INFINITY, f64::min);
                }
            }
        }
        // I(U;Y) − I(U;S) = H(U|S) − H(U|Y)
        let g = h_u_s - (h_uy - self.h_y);
        (d, g)
    }

    /// Distortion when the auxiliary carries nothing.
    pub fn const_distortion(&self) -> f64 {
        self.eval(&vec![vec![1.0]; self.ns()]).0
    }

    /// Drops labels of negligible mass and merges labels with equal
    /// posteriors on `S`; neither changes `(D, g)`.
    pub fn compact(&self, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let ns = self.ns();
        let nu = q[0].len();
        let mass: Vec<f64> = (0..nu)
            .map(|u| (0..ns).map(|s| self.pi[s] * q[s][u]).sum())
            .collect();
        let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
        for u in 0..nu {
            if mass[u] <= 1e-15 {
                continue;
            }
            let post: Vec<f64> = (0..ns).map(|s| self.pi[s] * q[s][u] / mass[u]).collect();
            match groups
                .iter_mut()
                .find(|(p, _)| p.iter().zip(&post).all(|(a, b)| (a - b).abs() <= 1e-12))
            {
                Some((_, members)) => members.push(u),
                None => groups.push((post, vec![u])),
            }
        }
        if groups.is_empty() {
            return vec![vec![1.0]; ns];
        }
        let mut out: Vec<Vec<f64>> = (0..ns)
            .map(|s| {
                groups
                    .iter()
                    .map(|(_, members)| members.iter().map(|&u| q[s][u]).sum())
                    .collect()
            })
            .collect();
        for row in out.iter_mut() {
            simplex::renormalize(row);
        }
        out
    }
}

/// One frontier point and its kernel (labels compacted).
#[derive(Debug, Clone)]
pub(crate) struct CellPoint {
    pub d: f64,
    pub g: f64,
    pub q: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct CellFrontier {
    pub front: Front,
    pub points: Vec<CellPoint>,
}

impl CellFrontier {
    pub(crate) fn from_pool(pool: Vec<CellPoint>) -> Self {
        let pairs: Vec<(f64, f64)> = pool.iter().map(|p| (p.d, p.g)).collect();
        let (front, kept) = Front::from_points(&pairs);
        let mut slots: Vec<Option<CellPoint>> = pool.into_iter().map(Some).collect();
        let points = kept
            .into_iter()
            .map(|k| slots[k].take().expect("kept once"))
            .collect();
        CellFrontier { front, points }
    }

    /// Frontier with a single auxiliary symbol.
    pub fn trivial(cell: &Cell) -> Self {
        let q = vec![vec![1.0]; cell.ns()];
        let (d, g) = cell.eval(&q);
        CellFrontier::from_pool(vec![CellPoint {
            d,
            g: g.min(0.0),
            q,
        }])
    }

    /// Index of the zero-gain point (last on the frontier).
    pub fn idle(&self) -> usize {
        self.front.len() - 1
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FrontierConfig {
    /// Labels the local searches use.
    pub search_labels: usize,
    /// Labels a stored kernel may use, bounding time-sharing mixtures.
    pub max_labels: usize,
    pub lattice_resolution: usize,
    pub random_seeds: usize,
    pub budgets: usize,
}

const LATTICE_CAP: f64 = 40_000.0;
const DETERMINISTIC_CAP: f64 = 4096.0;
const LAMBDAS: usize = 13;
const HULL_ROUNDS: usize = 40;
const HULL_GAIN_TOL: f64 = 1e-5;
const MIX_STEPS: usize = 16;
const FRONT_CAP: usize = 4096;
/// Target mixture points across the whole distortion range.
const MIX_DENSITY: f64 = 1024.0;

fn random_kernel(rng: &mut ChaCha8Rng, ns: usize, k: usize, sparse: bool) -> Vec<Vec<f64>> {
    (0..ns)
        .map(|_| {
            let mut row: Vec<f64> = (0..k)
                .map(|_| {
                    let e: f64 = Exp1.sample(rng);
                    if sparse && rng.random_bool(0.5) {
                        0.0
                    } else {
                        e
                    }
                })
                .collect();
            if row.iter().all(|&p| p == 0.0) {
                row[rng.random_range(0..k)] = 1.0;
            }
            simplex::renormalize(&mut row);
            row
        })
        .collect()
}

fn deterministic_kernels(ns: usize, k: usize) -> Vec<Vec<Vec<f64>>> {
    if (k as f64).powi(ns as i32) > DETERMINISTIC_CAP {
        // identity-like maps only
        return vec![(0..ns).map(|s| simplex::point_mass(k, s % k)).collect()];
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; ns];
    loop {
        out.push(idx.iter().map(|&u| simplex::point_mass(k, u)).collect());
        let mut c = 0;
        loop {
            if c == ns {
                return out;
            }
            idx[c] += 1;
            if idx[c] < k {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

fn lattice_kernels(ns: usize, k: usize, resolution: usize) -> Vec<Vec<Vec<f64>>> {
    let mut r = resolution;
    while r > 2 && simplex::composition_count(k, r - 1).powi(ns as i32) > LATTICE_CAP {
        r -= 1;
    }
    if simplex::composition_count(k, r - 1).powi(ns as i32) > LATTICE_CAP {
        return Vec::new();
    }
    let rows = simplex::lattice(k, r);
    let mut out = Vec::new();
    let mut idx = vec![0usize; ns];
    loop {
        out.push(idx.iter().map(|&i| rows[i].clone()).collect());
        let mut c = 0;
        loop {
            if c == ns {
                return out;
            }
            idx[c] += 1;
            if idx[c] < rows.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

fn pad(q: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    q.iter()
        .map(|row| {
            let mut r = row.clone();
            r.resize(k, 0.0);
            r
        })
        .collect()
}

fn search_limits(step: f64, ns: usize, k: usize) -> SearchLimits {
    SearchLimits {
        initial_step: step,
        min_step: 1e-7,
        max_evals: 400 * ns * k * k.max(2),
    }
}

/// Builds the `(D, g)` frontier of one cell.
pub(crate) fn build_frontier(
    cell: &Cell,
    cfg: FrontierConfig,
    rng: &mut ChaCha8Rng,
) -> CellFrontier {
    let ns = cell.ns();
    let k = cfg.search_labels.max(1);
    if k == 1 {
        return CellFrontier::trivial(cell);
    }
    let mut pool: Vec<CellPoint> = Vec::new();
    let push = |pool: &mut Vec<CellPoint>, q: Vec<Vec<f64>>| {
        let q = cell.compact(&q);
        let (d, g) = cell.eval(&q);
        pool.push(CellPoint { d, g, q });
    };

    push(&mut pool, vec![vec![1.0]; ns]);
    for q in deterministic_kernels(ns, k) {
        push(&mut pool, q);
    }
    for q in lattice_kernels(ns, k, cfg.lattice_resolution) {
        push(&mut pool, q);
    }
    for i in 0..cfg.random_seeds {
        let q = random_kernel(rng, ns, k, i % 2 == 1);
        push(&mut pool, q);
    }

    // Lagrangian sweep: maximize g − λD from the best pool points.
    let d_hi = cell.const_distortion();
    let mut lambdas = vec![0.0];
    lambdas.extend((0..LAMBDAS).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (LAMBDAS - 1) as f64)));
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for &lambda in &lambdas {
        let score = |p: &CellPoint| p.g - lambda * p.d;
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&i, &j| score(&pool[j]).total_cmp(&score(&pool[i])).then(i.cmp(&j)));
        let mut starts: Vec<Vec<Vec<f64>>> =
            order.iter().take(2).map(|&i| pad(&pool[i].q, k)).collect();
        if let Some(p) = prev.take() {
            starts.push(p);
        }
        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for mut q in starts {
            let v = simplex::pattern_search(&mut q, search_limits(0.25, ns, k), |q| {
                let (d, g) = cell.eval(q);
                Some(g - lambda * d)
            })
            .expect("unconstrained search");
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, q));
            }
        }
        let q = best.expect("at least one start").1;
        prev = Some(q.clone());
        push(&mut pool, q);
    }
    refine_hull(cell, &mut pool, k);

    // Budget-constrained refinement between the frontier's ends.
    let frontier = CellFrontier::from_pool(pool.clone());
    let d_lo = frontier.front.d[0];
    if d_hi > d_lo {
        for i in 1..cfg.budgets {
            let budget = d_lo + (d_hi - d_lo) * i as f64 / cfg.budgets as f64;
            let Some(j) = frontier.front.best_under(budget) else {
                continue;
            };
            let mut q = pad(&frontier.points[j].q, k);
            simplex::pattern_search(&mut q, search_limits(0.05, ns, k), |q| {
                let (d, g) = cell.eval(q);
                (d <= budget).then_some(g)
            });
            push(&mut pool, q);
        }
    }

    let frontier = CellFrontier::from_pool(pool);
    with_mixtures(cell, frontier, cfg.max_labels)
}

/// Refines the upper concave envelope: every hull edge is probed at its own
/// slope, and a new vertex is kept when it clears the edge by more than
/// `HULL_GAIN_TOL`.
fn refine_hull(cell: &Cell, pool: &mut Vec<CellPoint>, k: usize) {
    let ns = cell.ns();
    let mut tried: Vec<(u64, u64)> = Vec::new();
    for _ in 0..HULL_ROUNDS {
        let frontier = CellFrontier::from_pool(pool.clone());
        let hull = frontier.front.hull();
        let mut added = false;
        for pair in hull.windows(2) {
            let (i, j) = (pair[0], pair[1]);
            let (d1, g1) = (frontier.front.d[i], frontier.front.g[i]);
            let (d2, g2) = (frontier.front.d[j], frontier.front.g[j]);
            let key = (d1.to_bits(), d2.to_bits());
            if d2 - d1 < 1e-6 || tried.contains(&key) {
                continue;
            }
            tried.push(key);
            let lambda = (g2 - g1) / (d2 - d1);
            let chord = g1 - lambda * d1;
            for start in [&frontier.points[i].q, &frontier.points[j].q] {
                let mut q = pad(start, k);
                let v = simplex::pattern_search(&mut q, search_limits(0.1, ns, k), |q| {
                    let (d, g) = cell.eval(q);
                    Some(g - lambda * d)
                })
                .expect("unconstrained search");
                if v > chord + HULL_GAIN_TOL {
                    let q = cell.compact(&q);
                    let (d, g) = cell.eval(&q);
                    pool.push(CellPoint { d, g, q });
                    added = true;
                    break;
                }
            }
        }
        if !added {
            break;
        }
    }
}

/// Adds time-sharing points between adjacent hull vertices whose kernels fit
/// together in `max_labels` symbols. With disjoint labels both `D` and `g` are
/// linear in the mixing weight, so points under a mixable hull edge are
/// dropped. The result is thinned to `FRONT_CAP` points.
fn with_mixtures(cell: &Cell, frontier: CellFrontier, max_labels: usize) -> CellFrontier {
    let hull = frontier.front.hull();
    let n = frontier.front.len();
    let spacing = (frontier.front.d[n - 1] - frontier.front.d[0]) / MIX_DENSITY;
    let mut keep = vec![true; n];
    let mut mixes = Vec::new();
    for pair in hull.windows(2) {
        let (a, b) = (&frontier.points[pair[0]], &frontier.points[pair[1]]);
        let (ka, kb) = (a.q[0].len(), b.q[0].len());
        if ka + kb > max_labels {
            continue;
        }
        keep[pair[0] + 1..pair[1]]
            .iter_mut()
            .for_each(|k| *k = false);
        let steps = (((b.d - a.d) / spacing).ceil() as usize).clamp(1, MIX_STEPS);
        for m in 1..steps {
            let t = m as f64 / steps as f64;
            let q: Vec<Vec<f64>> = (0..cell.ns())
                .map(|s| {
                    a.q[s]
                        .iter()
                        .map(|p| p * (1.0 - t))
                        .chain(b.q[s].iter().map(|p| p * t))
                        .collect()
                })
                .collect();
            let (d, g) = cell.eval(&q);
            mixes.push(CellPoint { d, g, q });
        }
    }
    let mut pool: Vec<CellPoint> = frontier
        .points
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect();
    pool.extend(mixes);
    let full = CellFrontier::from_pool(pool);
    if full.front.len() <= FRONT_CAP {
        return full;
    }
    let (_, idx) = full.front.thin(FRONT_CAP);
    CellFrontier::from_pool(idx.into_iter().map(|i| full.points[i].clone()).collect())
}

/// Locally improves `q` for a cell at a fixed distortion budget.
pub(crate) fn polish_at_budget(
    cell: &Cell,
    q: &[Vec<f64>],
    budget: f64,
    labels: usize,
) -> CellPoint {
    let ns = cell.ns();
    let k = labels.max(q[0].len());
    let mut x = pad(q, k);
    simplex::pattern_search(&mut x, search_limits(0.02, ns, k), |q| {
        let (d, g) = cell.eval(q);
        (d <= budget).then_some(g)
    });
    let x = cell.compact(&x);
    let (d, g) = cell.eval(&x);
    CellPoint { d, g, q: x }
}
