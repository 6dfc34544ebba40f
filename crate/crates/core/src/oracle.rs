//! Brute-force references over quantized policy lattices.
//!
//! Everything here is computed from scratch with its own entropy code so it
//! can check the solver and the estimator rather than repeat them. The search
//! is exact over the lattice: for fixed `(p(a), p(x|a))` the auxiliary kernels
//! of different `(a, x)` cells are independent, so the best kernel choice is a
//! multiple-choice knapsack solved exactly on Pareto sets of lattice kernels.

use serde::{Deserialize, Serialize};

use crate::infotheory::{Estimator, JointDistribution};
use crate::solver::Mode;
use crate::{ChannelSpec, Error, MacSpec, Result};

/// Work cap, in kernel evaluations plus input-law evaluations.
pub const EVALUATION_CAP: f64 = 1e8;
/// Cap on the number of estimator maps enumerated.
pub const ESTIMATOR_CAP: f64 = 1e7;
/// Largest Pareto set a partial merge may hold.
const MERGE_CAP: usize = 2_000_000;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Lattice levels per coordinate; coordinates are multiples of `1/(resolution−1)`.
    pub resolution: usize,
    pub u_cardinality: usize,
    /// Enumerate estimator maps per kernel instead of taking the per-cell minimum.
    pub exhaustive_estimators: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            resolution: 9,
            u_cardinality: 2,
            exhaustive_estimators: false,
        }
    }
}

impl OracleOptions {
    fn check(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(
                "oracle resolution must be at least 2".into(),
            ));
        }
        if self.u_cardinality == 0 {
            return Err(Error::InvalidArgument(
                "u_cardinality must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Best rate on the lattice; `None` when no lattice policy meets the budget.
    pub rate: Option<f64>,
    /// Distortion of the maximizing policy.
    pub distortion: Option<f64>,
    /// Number of quantized policies the lattice represents.
    pub lattice_size: f64,
    /// Kernel and input-law evaluations actually performed.
    pub evaluated: u64,
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Points of the simplex in `dim` coordinates with denominator `resolution−1`.
pub fn simplex_points(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    let total = resolution - 1;
    let mut out = Vec::new();
    let mut cur = vec![0usize; dim];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.iter().map(|&c| c as f64 / total as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, total, out);
        }
    }
    if dim == 1 {
        return vec![vec![1.0]];
    }
    rec(0, total, &mut cur, total, &mut out);
    out
}

fn simplex_count(dim: usize, resolution: usize) -> f64 {
    choose(resolution - 1 + dim - 1, dim - 1)
}

/// One `(action, input)` cell: state prior, output kernel and distortion.
#[derive(Debug, Clone)]
pub struct CellModel {
    pub prior: Vec<f64>,
    /// `p(y|s)` for this cell
    pub output: Vec<Vec<f64>>,
    pub distortion: Vec<Vec<f64>>,
}

impl CellModel {
    /// `(D, I(U;Y) − I(U;S))` for kernel `q[s][u]`; the estimator picks the
    /// cheapest reconstruction per `(u, y)`, or enumerates every map when
    /// `exhaustive` is set.
    pub fn evaluate(&self, q: &[Vec<f64>], exhaustive: bool) -> (f64, f64) {
        let ns = self.prior.len();
        let nu = q[0].len();
        let ny = self.output[0].len();
        let nt = self.distortion[0].len();
        // p(s,u,y)
        let mut p = vec![0.0; ns * nu * ny];
        for s in 0..ns {
            for u in 0..nu {
                let psu = self.prior[s] * q[s][u];
                for y in 0..ny {
                    p[(s * nu + u) * ny + y] = psu * self.output[s][y];
                }
            }
        }
        let h = |keep: &dyn Fn(usize, usize, usize) -> usize, size: usize| -> f64 {
            let mut m = vec![0.0; size];
            for s in 0..ns {
                for u in 0..nu {
                    for y in 0..ny {
                        m[keep(s, u, y)] += p[(s * nu + u) * ny + y];
                    }
                }
            }
            m.into_iter().map(plogp).sum()
        };
        let h_u = h(&|_, u, _| u, nu);
        let h_s = h(&|s, _, _| s, ns);
        let h_y = h(&|_, _, y| y, ny);
        let h_us = h(&|s, u, _| s * nu + u, ns * nu);
        let h_uy = h(&|_, u, y| u * ny + y, nu * ny);
        let i_uy = h_u + h_y - h_uy;
        let i_us = h_u + h_s - h_us;

        // cost[u,y][t] = Σ_s p(s,u,y) d(s,t)
        let mut cost = vec![vec![0.0; nt]; nu * ny];
        for s in 0..ns {
            for u in 0..nu {
                for y in 0..ny {
                    let m = p[(s * nu + u) * ny + y];
                    if m > 0.0 {
                        for t in 0..nt {
                            cost[u * ny + y][t] += m * self.distortion[s][t];
                        }
                    }
                }
            }
        }
        let d = if exhaustive {
            enumerate_min(&cost).1
        } else {
            cost.iter()
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .sum()
        };
        (d, i_uy - i_us)
    }
}

/// Lexicographically first map minimizing `Σ_i cost[i][map_i]`, by
/// enumeration.
fn enumerate_min(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let nt = cost.first().map_or(1, |c| c.len());
    let mut map = vec![0usize; n];
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + cost[i][0];
    }
    let mut best = (map.clone(), prefix[n]);
    loop {
        // odometer, last position least significant
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            map[i] += 1;
            if map[i] < nt {
                break;
            }
            map[i] = 0;
        }
        for j in i..n {
            prefix[j + 1] = prefix[j] + cost[j][map[j]];
        }
        if prefix[n] < best.1 - 1e-12 * best.1.abs().max(1e-300) {
            best = (map.clone(), prefix[n]);
        }
    }
}

/// Minimum-distortion estimator found by enumerating every deterministic map
/// `(u, x, a, y) → ŝ`.
pub fn exhaustive_estimator_search(
    joint: &JointDistribution,
    distortion: &[Vec<f64>],
) -> Result<(Estimator, f64)> {
    let (na, nx, ns, nu, ny) = (
        joint.alpha_a,
        joint.alpha_x,
        joint.alpha_s,
        joint.alpha_u,
        joint.alpha_y,
    );
    if distortion.len() != ns || distortion.iter().any(|r| r.len() != distortion[0].len()) {
        return Err(Error::AlphabetMismatch(
            "distortion rows must match the state alphabet".into(),
        ));
    }
    let nt = distortion[0].len();
    let cells = nu * nx * na * ny;
    let count = (nt as f64).powi(cells as i32);
    if count > ESTIMATOR_CAP {
        return Err(Error::CapExceeded {
            what: "estimator maps".into(),
            estimate: count,
            cap: ESTIMATOR_CAP,
        });
    }
    // cell order matches the estimator layout [u][x][a][y]
    let mut cost = vec![vec![0.0; nt]; cells];
    for u in 0..nu {
        for x in 0..nx {
            for a in 0..na {
                for y in 0..ny {
                    let c = ((u * nx + x) * na + a) * ny + y;
                    for s in 0..ns {
                        let m = joint.get(a, x, s, u, y);
                        if m > 0.0 {
                            for t in 0..nt {
                                cost[c][t] += m * distortion[s][t];
                            }
                        }
                    }
                }
            }
        }
    }
    let (map, value) = enumerate_min(&cost);
    let est = Estimator::from_fn(nu, nx, na, ny, |u, x, a, y| {
        map[((u * nx + x) * na + a) * ny + y]
    });
    Ok((est, value))
}

/// Pareto set of `(distortion, gain)` points: increasing `d`, strictly
/// increasing `g`.
#[derive(Debug, Clone, Default)]
pub struct Pareto {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
}

impl Pareto {
    pub fn from_points(mut pts: Vec<(f64, f64)>) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut out = Pareto::default();
        for (d, g) in pts {
            if out.g.last().is_none_or(|&last| g > last) {
                out.d.push(d);
                out.g.push(g);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    fn sum(&self, other: &Pareto, wa: f64, wb: f64) -> Result<Pareto> {
        let mut pts = Vec::with_capacity(self.len() * other.len());
        for i in 0..self.len() {
            for j in 0..other.len() {
                pts.push((
                    wa * self.d[i] + wb * other.d[j],
                    wa * self.g[i] + wb * other.g[j],
                ));
            }
        }
        let out = Pareto::from_points(pts);
        if out.len() > MERGE_CAP {
            return Err(Error::CapExceeded {
                what: "merged Pareto set".into(),
                estimate: out.len() as f64,
                cap: MERGE_CAP as f64,
            });
        }
        Ok(out)
    }
}

/// Pareto set of every lattice kernel `q[s][u]` of one cell.
pub fn lattice_cell_frontier(cell: &CellModel, opts: &OracleOptions) -> Pareto {
    let ns = cell.prior.len();
    let rows = simplex_points(opts.u_cardinality, opts.resolution);
    let mut idx = vec![0usize; ns];
    let mut pts = Vec::new();
    loop {
        let q: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        pts.push(cell.evaluate(&q, opts.exhaustive_estimators));
        let mut c = 0;
        loop {
            if c == ns {
                return Pareto::from_points(pts);
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

/// Best total gain with total distortion `≤ budget` over weighted Pareto
/// sets, one point each. Exact.
pub fn best_allocation(sets: &[(f64, &Pareto)], budget: f64) -> Result<Option<(f64, f64)>> {
    let mut acc = Pareto {
        d: vec![0.0],
        g: vec![0.0],
    };
    let Some(((w_last, last), rest)) = sets.split_last() else {
        return Ok((budget >= 0.0).then_some((0.0, 0.0)));
    };
    for (w, p) in rest {
        acc = acc.sum(p, 1.0, *w)?;
    }
    Ok(pair_best(&acc, last, *w_last, budget))
}

/// Best `acc + w·other` under `budget`, two-pointer over both sets.
fn pair_best(acc: &Pareto, other: &Pareto, w: f64, budget: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut i = acc.len();
    for j in 0..other.len() {
        let room = budget - w * other.d[j];
        while i > 0 && acc.d[i - 1] > room {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let g = acc.g[i - 1] + w * other.g[j];
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((acc.d[i - 1] + w * other.d[j], g));
        }
    }
    best
}

/// Least total distortion with total gain `≥ g_min`.
fn pair_least(acc: &Pareto, other: &Pareto, w: f64, g_min: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for j in 0..other.len() {
        let need = g_min - w * other.g[j];
        let i = acc.g.partition_point(|&g| g < need);
        if i < acc.len() {
            let d = acc.d[i] + w * other.d[j];
            if best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
    }
    best
}

/// A brute-force instance: groups of cells sharing the first input (the
/// action), with `p(y|group, member)` for the input terms.
struct Problem {
    groups: usize,
    members: usize,
    cells: Vec<CellModel>,
    /// `p(y|g,m)`, indexed `g·members + m`
    w: Vec<Vec<f64>>,
}

impl Problem {
    fn from_channel(spec: &ChannelSpec) -> Self {
        let (na, nx, ns, ny) = (spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y);
        let mut cells = Vec::new();
        let mut w = Vec::new();
        for a in 0..na {
            for x in 0..nx {
                let output: Vec<Vec<f64>> = (0..ns)
                    .map(|s| spec.output_given_xsa[x][s][a].clone())
                    .collect();
                let mut py = vec![0.0; ny];
                for s in 0..ns {
                    for y in 0..ny {
                        py[y] += spec.state_given_action[a][s] * output[s][y];
                    }
                }
                w.push(py);
                cells.push(CellModel {
                    prior: spec.state_given_action[a].clone(),
                    output,
                    distortion: spec.distortion.clone(),
                });
            }
        }
        Problem {
            groups: na,
            members: nx,
            cells,
            w,
        }
    }

    fn from_mac(mac: &MacSpec) -> Self {
        let (n1, n2, ns, ny) = (mac.alpha_x1, mac.alpha_x2, mac.alpha_s, mac.alpha_y);
        let mut cells = Vec::new();
        let mut w = Vec::new();
        for x2 in 0..n2 {
            for x1 in 0..n1 {
                let output: Vec<Vec<f64>> = (0..ns)
                    .map(|s| mac.output_given_sx1x2[s][x1][x2].clone())
                    .collect();
                let mut py = vec![0.0; ny];
                for s in 0..ns {
                    for y in 0..ny {
                        py[y] += mac.state_pmf[s] * output[s][y];
                    }
                }
                w.push(py);
                cells.push(CellModel {
                    prior: mac.state_pmf.clone(),
                    output,
                    distortion: mac.distortion.clone(),
                });
            }
        }
        Problem {
            groups: n2,
            members: n1,
            cells,
            w,
        }
    }

    fn ns(&self) -> usize {
        self.cells[0].prior.len()
    }

    fn nt(&self) -> usize {
        self.cells[0].distortion[0].len()
    }

    fn ny(&self) -> usize {
        self.w[0].len()
    }

    fn input_laws(&self, r: usize) -> f64 {
        simplex_count(self.groups, r) * simplex_count(self.members, r).powi(self.groups as i32)
    }

    fn lattice_size(&self, opts: &OracleOptions, nu: usize) -> f64 {
        self.input_laws(opts.resolution)
            * simplex_count(nu, opts.resolution).powi((self.ns() * self.cells.len()) as i32)
    }

    fn work_estimate(&self, opts: &OracleOptions, nu: usize) -> f64 {
        let kernels = simplex_count(nu, opts.resolution).powi(self.ns() as i32);
        let per_kernel = if opts.exhaustive_estimators {
            (self.nt() as f64).powi((nu * self.ny()) as i32)
        } else {
            1.0
        };
        self.cells.len() as f64 * kernels * per_kernel + self.input_laws(opts.resolution)
    }

    fn check_caps(&self, opts: &OracleOptions, nu: usize) -> Result<()> {
        if opts.exhaustive_estimators {
            let maps = (self.nt() as f64).powi((nu * self.ny()) as i32);
            if maps > ESTIMATOR_CAP {
                return Err(Error::CapExceeded {
                    what: "estimator maps per kernel".into(),
                    estimate: maps,
                    cap: ESTIMATOR_CAP,
                });
            }
        }
        let work = self.work_estimate(opts, nu);
        if work > EVALUATION_CAP {
            return Err(Error::CapExceeded {
                what: "oracle lattice evaluations".into(),
                estimate: work,
                cap: EVALUATION_CAP,
            });
        }
        Ok(())
    }

    /// `(I(G,M;Y), I(M;Y|G))` for the joint input law `p(g)p(m|g)`.
    fn input_terms(&self, pg: &[f64], pm: &[&Vec<f64>]) -> (f64, f64) {
        let ny = self.ny();
        let mut py = vec![0.0; ny];
        let mut h_y_given_all = 0.0;
        let mut h_y_given_g = 0.0;
        for g in 0..self.groups {
            let mut py_g = vec![0.0; ny];
            for m in 0..self.members {
                let wgt = pm[g][m];
                let row = &self.w[g * self.members + m];
                h_y_given_all += pg[g] * wgt * row.iter().copied().map(plogp).sum::<f64>();
                for y in 0..ny {
                    py_g[y] += wgt * row[y];
                }
            }
            h_y_given_g += pg[g] * py_g.iter().copied().map(plogp).sum::<f64>();
            for y in 0..ny {
                py[y] += pg[g] * py_g[y];
            }
        }
        let h_y: f64 = py.into_iter().map(plogp).sum();
        (
            (h_y - h_y_given_all).max(0.0),
            (h_y_given_g - h_y_given_all).max(0.0),
        )
    }

    fn cell_sets(&self, opts: &OracleOptions, nu: usize) -> Vec<Pareto> {
        let o = OracleOptions {
            u_cardinality: nu,
            ..*opts
        };
        map(&self.cells, |c| lattice_cell_frontier(c, &o))
    }

    /// Per group and per `p(m|g)` lattice point, the weighted sum of the
    /// group's cell sets.
    fn group_sets(&self, cells: &[Pareto], laws: &[Vec<f64>]) -> Result<Vec<Vec<Pareto>>> {
        let mut out = Vec::with_capacity(self.groups);
        for g in 0..self.groups {
            let sets: Vec<Result<Pareto>> = map(laws, |law| {
                let mut acc = Pareto {
                    d: vec![0.0],
                    g: vec![0.0],
                };
                for m in 0..self.members {
                    if law[m] > 0.0 {
                        acc = acc.sum(&cells[g * self.members + m], 1.0, law[m])?;
                    }
                }
                Ok(acc)
            });
            out.push(sets.into_iter().collect::<Result<Vec<_>>>()?);
        }
        Ok(out)
    }
}

#[cfg(feature = "parallel")]
fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

fn floor_for(mode: Mode, terms: (f64, f64)) -> f64 {
    match mode {
        Mode::Nonadaptive => -terms.1,
        Mode::Adaptive | Mode::Nocsi => -terms.0,
    }
}

/// Iterates `(p(g), p(m|g) indices)` over the input lattice.
fn for_each_input(groups: usize, laws: usize, r: usize, mut f: impl FnMut(&[f64], &[usize])) {
    let pgs = simplex_points(groups, r);
    let mut idx = vec![0usize; groups];
    for pg in &pgs {
        idx.iter_mut().for_each(|i| *i = 0);
        loop {
            f(pg, &idx);
            let mut c = 0;
            loop {
                if c == groups {
                    break;
                }
                idx[c] += 1;
                if idx[c] < laws {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == groups {
                break;
            }
        }
    }
}

fn solve_problem(
    problem: &Problem,
    d: f64,
    mode: Mode,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    opts.check()?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distortion must be ≥ 0, got {d}"
        )));
    }
    let nu = if mode == Mode::Nocsi {
        1
    } else {
        opts.u_cardinality
    };
    problem.check_caps(opts, nu)?;
    let cells = problem.cell_sets(opts, nu);
    let laws = simplex_points(problem.members, opts.resolution);
    let groups = problem.group_sets(&cells, &laws)?;
    let mut best: Option<(f64, f64)> = None;
    let mut evaluated = (problem.cells.len() as f64
        * simplex_count(nu, opts.resolution).powi(problem.ns() as i32))
        as u64;
    let mut failure: Option<Error> = None;
    for_each_input(problem.groups, laws.len(), opts.resolution, |pg, idx| {
        if failure.is_some() {
            return;
        }
        evaluated += 1;
        let pm: Vec<&Vec<f64>> = idx.iter().map(|&i| &laws[i]).collect();
        let terms = problem.input_terms(pg, &pm);
        let sets: Vec<(f64, &Pareto)> = (0..problem.groups)
            .filter(|&g| pg[g] > 0.0)
            .map(|g| (pg[g], &groups[g][idx[g]]))
            .collect();
        let alloc = match best_allocation(&sets, d + SLACK) {
            Ok(a) => a,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let Some((dist, gain)) = alloc else { return };
        if gain < floor_for(mode, terms) - SLACK {
            return;
        }
        let rate = terms.0 + gain;
        if best.is_none_or(|(r, _)| rate > r) {
            best = Some((rate, dist));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OracleResult {
        rate: best.map(|b| b.0.max(0.0)),
        distortion: best.map(|b| b.1),
        lattice_size: problem.lattice_size(opts, nu),
        evaluated,
    })
}

fn least_distortion(problem: &Problem, mode: Mode, opts: &OracleOptions) -> Result<Option<f64>> {
    opts.check()?;
    let nu = if mode == Mode::Nocsi {
        1
    } else {
        opts.u_cardinality
    };
    problem.check_caps(opts, nu)?;
    let cells = problem.cell_sets(opts, nu);
    let laws = simplex_points(problem.members, opts.resolution);
    let groups = problem.group_sets(&cells, &laws)?;
    let mut best: Option<f64> = None;
    let mut failure: Option<Error> = None;
    for_each_input(problem.groups, laws.len(), opts.resolution, |pg, idx| {
        if failure.is_some() {
            return;
        }
        let pm: Vec<&Vec<f64>> = idx.iter().map(|&i| &laws[i]).collect();
        let g_min = floor_for(mode, problem.input_terms(pg, &pm)) - SLACK;
        let mut sets: Vec<(f64, &Pareto)> = (0..problem.groups)
            .filter(|&g| pg[g] > 0.0)
            .map(|g| (pg[g], &groups[g][idx[g]]))
            .collect();
        let (w_last, last) = sets.pop().expect("some action has mass");
        let mut acc = Pareto {
            d: vec![0.0],
            g: vec![0.0],
        };
        for (w, p) in sets {
            match acc.sum(p, 1.0, w) {
                Ok(a) => acc = a,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
        if let Some(v) = pair_least(&acc, last, w_last, g_min) {
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(best)
}

/// Exact maximum of the mode's objective over the quantized policy lattice,
/// subject to expected distortion `≤ d`.
pub fn brute_force_point(
    spec: &ChannelSpec,
    d: f64,
    mode: Mode,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    spec.ensure_valid()?;
    solve_problem(&Problem::from_channel(spec), d, mode, opts)
}

/// Least expected distortion over the lattice among policies meeting the
/// mode's rate constraint.
pub fn brute_force_min_distortion(
    spec: &ChannelSpec,
    mode: Mode,
    opts: &OracleOptions,
) -> Result<Option<f64>> {
    spec.ensure_valid()?;
    least_distortion(&Problem::from_channel(spec), mode, opts)
}

/// Direct lattice maximization of `I(U,X₂,X₁;Y) − I(U,X₁;S|X₂)` for a MAC
/// with a common message, built from the MAC's own indexing. `Mode::Adaptive`
/// gives the symmetric value (objective nonnegative), `Mode::Nonadaptive`
/// the asymmetric one (additionally `I(U,X₁;Y|X₂) ≥ I(U,X₁;S|X₂)`).
pub fn brute_force_mac(
    mac: &MacSpec,
    d: f64,
    mode: Mode,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let violations = mac.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidSpec(msg.join("; ")));
    }
    solve_problem(&Problem::from_mac(mac), d, mode, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::instances::{clean_state, constant_output, xor_state};
    use crate::infotheory::{assemble_joint, optimal_estimator, Policy};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h2(p: f64) -> f64 {
        plogp(p) + plogp(1.0 - p)
    }

    #[test]
    fn lattice_counts_match_enumeration() {
        for (dim, r) in [(1, 5), (2, 9), (3, 5), (4, 3)] {
            let pts = simplex_points(dim, r);
            assert_eq!(pts.len() as f64, simplex_count(dim, r));
            for p in &pts {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clean_state_full_budget_is_one_bit() {
        let r = brute_force_point(
            &clean_state(),
            0.5,
            Mode::Nonadaptive,
            &OracleOptions::default(),
        )
        .unwrap();
        assert!((r.rate.unwrap() - 1.0).abs() < 2e-2);
        assert!(r.evaluated > 0 && r.lattice_size > 1e3);
    }

    #[test]
    fn known_interference_reaches_bsc_capacity() {
        let opts = OracleOptions {
            resolution: 17,
            ..Default::default()
        };
        for mode in Mode::ALL {
            let r = brute_force_point(&xor_state(0.1), 1.0, mode, &opts).unwrap();
            assert!((r.rate.unwrap() - (1.0 - h2(0.1))).abs() < 2e-2, "{mode}");
        }
    }

    #[test]
    fn constant_output_carries_nothing() {
        let r = brute_force_point(
            &constant_output(),
            0.5,
            Mode::Adaptive,
            &OracleOptions::default(),
        )
        .unwrap();
        assert!(r.rate.unwrap().abs() < 1e-12);
        let d = brute_force_min_distortion(
            &constant_output(),
            Mode::Nonadaptive,
            &OracleOptions::default(),
        )
        .unwrap();
        assert!((d.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oversized_lattice_is_refused() {
        let opts = OracleOptions {
            resolution: 33,
            u_cardinality: 6,
            exhaustive_estimators: false,
        };
        match brute_force_point(&clean_state(), 0.3, Mode::Nonadaptive, &opts) {
            Err(Error::CapExceeded { estimate, .. }) => assert!(estimate > EVALUATION_CAP),
            other => panic!("expected a cap error, got {other:?}"),
        }
    }

    #[test]
    fn exhaustive_estimators_agree_with_per_cell_minimum() {
        let fast = OracleOptions {
            resolution: 5,
            ..Default::default()
        };
        let slow = OracleOptions {
            exhaustive_estimators: true,
            ..fast
        };
        for d in [0.1, 0.25] {
            let a = brute_force_point(&xor_state(0.2), d, Mode::Nonadaptive, &fast).unwrap();
            let b = brute_force_point(&xor_state(0.2), d, Mode::Nonadaptive, &slow).unwrap();
            assert_eq!(a.rate.is_some(), b.rate.is_some());
            if let (Some(x), Some(y)) = (a.rate, b.rate) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modes_are_nested_on_the_lattice() {
        let opts = OracleOptions {
            resolution: 5,
            ..Default::default()
        };
        let spec = ChannelSpec::from_fn(
            2,
            2,
            2,
            2,
            |a, s| [[0.7, 0.3], [0.2, 0.8]][a][s],
            |x, s, a, y| {
                let f = [0.1, 0.3][a];
                if y == (x ^ s) {
                    1.0 - f
                } else {
                    f
                }
            },
            crate::channel::hamming(2),
        );
        for d in [0.1, 0.2, 0.4] {
            let r: Vec<f64> = [Mode::Nocsi, Mode::Nonadaptive, Mode::Adaptive]
                .iter()
                .map(|&m| {
                    brute_force_point(&spec, d, m, &opts)
                        .unwrap()
                        .rate
                        .unwrap_or(-1.0)
                })
                .collect();
            assert!(r[0] <= r[1] && r[1] <= r[2], "{r:?}");
        }
    }

    fn random_joint(rng: &mut ChaCha8Rng, dims: [usize; 5]) -> JointDistribution {
        let [na, nx, ns, nu, ny] = dims;
        let mut p: Vec<f64> = (0..na * nx * ns * nu * ny)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        JointDistribution::from_table([na, nx, ns, nu, ny], p).unwrap()
    }

    #[test]
    fn exhaustive_search_matches_the_optimal_estimator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let j = random_joint(&mut rng, [1, 2, 2, 2, 2]);
            let d: Vec<Vec<f64>> = (0..2)
                .map(|s| {
                    (0..2)
                        .map(|t| if s == t { 0.0 } else { rng.random::<f64>() })
                        .collect()
                })
                .collect();
            let (est, v) = exhaustive_estimator_search(&j, &d).unwrap();
            let (opt, w) = optimal_estimator(&j, &d);
            assert!((v - w).abs() < 1e-15);
            assert_eq!(est, opt);
        }
    }

    #[test]
    fn exhaustive_search_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = random_joint(&mut rng, [1, 2, 2, 1, 2]);
        let (_, v) = exhaustive_estimator_search(&j, &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(v, 0.0);
        let mut p = vec![0.0; 8];
        p[0b101] = 1.0; // x = 1, s = 0, y = 1
        let point = JointDistribution::from_table([1, 2, 2, 1, 2], p).unwrap();
        let (_, v) =
            exhaustive_estimator_search(&point, &[vec![0.3, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn estimator_cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = random_joint(&mut rng, [2, 3, 2, 3, 3]);
        assert!(matches!(
            exhaustive_estimator_search(&j, &crate::channel::hamming(2)),
            Err(Error::CapExceeded { .. })
        ));
    }

    proptest! {
        #[test]
        fn cell_terms_match_the_full_joint(seed in 0u64..500) {
            // Σ p(a,x)·cell gain plus I(X,A;Y) must equal the literal
            // non-adaptive objective of the assembled joint.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = ChannelSpec::from_fn(
                2, 2, 2, 2,
                |a, s| [[0.6, 0.4], [0.25, 0.75]][a][s],
                |x, s, a, y| { let f = [0.15, 0.35][(x + s + a) % 2]; if y == (x ^ s) { 1.0 - f } else { f } },
                crate::channel::hamming(2),
            );
            let mut row = |n: usize| {
                let mut r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
                let z: f64 = r.iter().sum();
                r.iter_mut().for_each(|v| *v /= z);
                r
            };
            let p_a = row(2);
            let p_x_given_a = vec![row(2), row(2)];
            let q: Vec<Vec<Vec<Vec<f64>>>> = (0..2)
                .map(|_| (0..2).map(|_| (0..2).map(|_| row(3)).collect()).collect())
                .collect();
            let policy = Policy::with_optimal_estimator(&spec, p_a.clone(), p_x_given_a.clone(), q.clone()).unwrap();
            let joint = assemble_joint(&spec, &policy).unwrap();
            let summary = crate::infotheory::summarize(&spec, &policy).unwrap();

            let problem = Problem::from_channel(&spec);
            let pm: Vec<&Vec<f64>> = p_x_given_a.iter().collect();
            let terms = problem.input_terms(&p_a, &pm);
            let mut gain = 0.0;
            let mut dist = 0.0;
            for a in 0..2 {
                for x in 0..2 {
                    let kernel: Vec<Vec<f64>> = (0..2).map(|s| q[x][s][a].clone()).collect();
                    let (dc, gc) = problem.cells[a * 2 + x].evaluate(&kernel, false);
                    gain += p_a[a] * p_x_given_a[a][x] * gc;
                    dist += p_a[a] * p_x_given_a[a][x] * dc;
                }
            }
            prop_assert!((terms.0 + gain - crate::infotheory::nonadaptive_objective(&joint)).abs() < 1e-10);
            prop_assert!((terms.1 + gain - summary.feasibility_gap).abs() < 1e-10);
            prop_assert!((dist - summary.expected_distortion).abs() < 1e-12);
        }
    }
}
