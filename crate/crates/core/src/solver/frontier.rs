//! Pareto frontiers of `(distortion, gain)` pairs and budget allocation
//! across independent cells.
//!
//! A frontier is sorted by increasing distortion with strictly increasing
//! gain, so the best point under a budget is the last one that fits.

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Front {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
}

const GAIN_EPS: f64 = 1e-14;

impl Front {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    /// Pareto-prunes `points`; returns the frontier and, for each kept point,
    /// its position in the input.
    pub fn from_points(points: &[(f64, f64)]) -> (Front, Vec<usize>) {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| {
            points[i]
                .0
                .total_cmp(&points[j].0)
                .then(points[j].1.total_cmp(&points[i].1))
                .then(i.cmp(&j))
        });
        let mut front = Front::default();
        let mut kept = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for i in order {
            let (d, g) = points[i];
            if g > best + GAIN_EPS {
                front.d.push(d);
                front.g.push(g);
                kept.push(i);
                best = g;
            }
        }
        (front, kept)
    }

    pub fn scaled(&self, w: f64) -> Front {
        Front {
            d: self.d.iter().map(|d| d * w).collect(),
            g: self.g.iter().map(|g| g * w).collect(),
        }
    }

    /// Index of the highest-gain point with `d ≤ budget`.
    pub fn best_under(&self, budget: f64) -> Option<usize> {
        let n = self.d.partition_point(|&d| d <= budget);
        n.checked_sub(1)
    }

    /// Index of the lowest-distortion point with `g ≥ g_min`.
    pub fn first_reaching(&self, g_min: f64) -> Option<usize> {
        let i = self.g.partition_point(|&g| g < g_min);
        (i < self.len()).then_some(i)
    }

    /// Keeps at most `m` points spread evenly in distortion, always including
    /// both ends. Returns the kept indices.
    pub fn thin(&self, m: usize) -> (Front, Vec<usize>) {
        let n = self.len();
        if n <= m || m < 2 {
            return (self.clone(), (0..n).collect());
        }
        let (lo, hi) = (self.d[0], self.d[n - 1]);
        let mut idx = vec![0];
        for k in 1..m - 1 {
            let target = lo + (hi - lo) * k as f64 / (m - 1) as f64;
            // highest-gain point not exceeding the target distortion
            let i = self.best_under(target).unwrap_or(0);
            if i > *idx.last().expect("nonempty") {
                idx.push(i);
            }
        }
        if *idx.last().expect("nonempty") != n - 1 {
            idx.push(n - 1);
        }
        let front = Front {
            d: idx.iter().map(|&i| self.d[i]).collect(),
            g: idx.iter().map(|&i| self.g[i]).collect(),
        };
        (front, idx)
    }

    /// Vertices of the upper concave envelope, as indices.
    pub fn hull(&self) -> Vec<usize> {
        let mut h: Vec<usize> = Vec::new();
        for i in 0..self.len() {
            while h.len() >= 2 {
                let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
                let cross = (self.d[b] - self.d[a]) * (self.g[i] - self.g[a])
                    - (self.g[b] - self.g[a]) * (self.d[i] - self.d[a]);
                if cross >= 0.0 {
                    h.pop();
                } else {
                    break;
                }
            }
            h.push(i);
        }
        h
    }
}

/// Minkowski sum of two frontiers, Pareto-pruned, with the source pair of
/// every kept point.
pub(crate) fn merge(a: &Front, b: &Front) -> (Front, Vec<(u32, u32)>) {
    let mut pts = Vec::with_capacity(a.len() * b.len());
    let mut src = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            pts.push((a.d[i] + b.d[j], a.g[i] + b.g[j]));
            src.push((i as u32, j as u32));
        }
    }
    let (front, kept) = Front::from_points(&pts);
    (front, kept.into_iter().map(|k| src[k]).collect())
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Query {
    /// Maximize total gain subject to total distortion `≤ budget`.
    MaxGain { budget: f64 },
    /// Minimize total distortion subject to total gain `≥ g_min`.
    MinDistortion { g_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Allocation {
    /// Chosen index into each input frontier.
    pub pick: Vec<usize>,
    pub d: f64,
    pub g: f64,
}

fn pair_max_gain(a: &Front, b: &Front, budget: f64) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    let mut i = a.best_under(budget - b.d[0])?;
    for j in 0..b.len() {
        let room = budget - b.d[j];
        while a.d[i] > room {
            if i == 0 {
                return best.map(|(_, i, j)| (i, j));
            }
            i -= 1;
        }
        let g = a.g[i] + b.g[j];
        if best.is_none_or(|(bg, _, _)| g > bg) {
            best = Some((g, i, j));
        }
    }
    best.map(|(_, i, j)| (i, j))
}

fn pair_min_distortion(a: &Front, b: &Front, g_min: f64) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for j in 0..b.len() {
        if let Some(i) = a.first_reaching(g_min - b.g[j]) {
            let d = a.d[i] + b.d[j];
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

const MERGE_CAP: usize = 2048;

fn capped(f: &Front) -> (Front, Option<Vec<usize>>) {
    if f.len() > MERGE_CAP {
        let (t, idx) = f.thin(MERGE_CAP);
        (t, Some(idx))
    } else {
        (f.clone(), None)
    }
}

/// Multiple-choice allocation over independent frontiers; exact while every
/// input and partial sum stays under `MERGE_CAP` points.
///
/// Frontiers must already be scaled by their cell weights.
pub(crate) fn allocate(fronts: &[&Front], query: Query) -> Option<Allocation> {
    let n = fronts.len();
    if n == 0 {
        return match query {
            Query::MaxGain { budget } if budget >= 0.0 => Some(Allocation {
                pick: vec![],
                d: 0.0,
                g: 0.0,
            }),
            Query::MinDistortion { g_min } if g_min <= 0.0 => Some(Allocation {
                pick: vec![],
                d: 0.0,
                g: 0.0,
            }),
            _ => None,
        };
    }
    if n == 1 {
        let f = fronts[0];
        let i = match query {
            Query::MaxGain { budget } => f.best_under(budget)?,
            Query::MinDistortion { g_min } => f.first_reaching(g_min)?,
        };
        return Some(Allocation {
            pick: vec![i],
            d: f.d[i],
            g: f.g[i],
        });
    }
    // Merge all but the last frontier, keeping provenance for backtracking.
    // Inputs and partial sums are thinned to `MERGE_CAP` points so memory
    // stays bounded; the kept points are the best under evenly spaced budgets.
    let (first, first_map) = capped(fronts[0]);
    let mut acc = first;
    let mut trails: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n - 2);
    for f in &fronts[1..n - 1] {
        let (f, f_map) = capped(f);
        let (m, mut t) = merge(&acc, &f);
        if let Some(map) = &f_map {
            t.iter_mut().for_each(|p| p.1 = map[p.1 as usize] as u32);
        }
        let (m, keep) = if m.len() > MERGE_CAP {
            m.thin(MERGE_CAP)
        } else {
            let k = (0..m.len()).collect();
            (m, k)
        };
        acc = m;
        trails.push(keep.into_iter().map(|k| t[k]).collect());
    }
    let last = fronts[n - 1];
    let (i, j) = match query {
        Query::MaxGain { budget } => pair_max_gain(&acc, last, budget)?,
        Query::MinDistortion { g_min } => pair_min_distortion(&acc, last, g_min)?,
    };
    let mut pick = vec![0; n];
    pick[n - 1] = j;
    let mut cur = i;
    for (level, t) in trails.iter().enumerate().rev() {
        let (p, q) = t[cur];
        pick[level + 1] = q as usize;
        cur = p as usize;
    }
    pick[0] = first_map.map_or(cur, |m| m[cur]);
    let d = (0..n).map(|c| fronts[c].d[pick[c]]).sum();
    let g = (0..n).map(|c| fronts[c].g[pick[c]]).sum();
    Some(Allocation { pick, d, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn front(pts: &[(f64, f64)]) -> Front {
        Front::from_points(pts).0
    }

    #[test]
    fn pruning_drops_dominated_points() {
        let (f, kept) = Front::from_points(&[(0.5, -1.0), (0.2, -2.0), (0.6, -1.5), (0.9, 0.0)]);
        assert_eq!(f.d, vec![0.2, 0.5, 0.9]);
        assert_eq!(kept, vec![1, 0, 3]);
    }

    #[test]
    fn hull_skips_concave_dents() {
        let f = front(&[(0.0, -2.0), (0.1, -1.9), (0.5, -0.5), (1.0, 0.0)]);
        assert_eq!(f.hull(), vec![0, 2, 3]);
    }

    fn brute(fronts: &[Front], query: Query) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; fronts.len()];
        loop {
            let d: f64 = idx.iter().enumerate().map(|(c, &i)| fronts[c].d[i]).sum();
            let g: f64 = idx.iter().enumerate().map(|(c, &i)| fronts[c].g[i]).sum();
            match query {
                Query::MaxGain { budget } if d <= budget => {
                    best = Some(best.map_or(g, |b: f64| b.max(g)))
                }
                Query::MinDistortion { g_min } if g >= g_min => {
                    best = Some(best.map_or(d, |b: f64| b.min(d)))
                }
                _ => {}
            }
            let mut c = 0;
            loop {
                if c == fronts.len() {
                    return best;
                }
                idx[c] += 1;
                if idx[c] < fronts[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }

    fn arb_front() -> impl Strategy<Value = Front> {
        prop::collection::vec((0.0f64..1.0, -2.0f64..0.0), 1..7).prop_map(|p| front(&p))
    }

    proptest! {
        #[test]
        fn allocation_matches_enumeration(
            fronts in prop::collection::vec(arb_front(), 1..4),
            budget in 0.0f64..2.0,
            g_min in -4.0f64..0.0,
        ) {
            let refs: Vec<&Front> = fronts.iter().collect();
            for query in [Query::MaxGain { budget }, Query::MinDistortion { g_min }] {
                let got = allocate(&refs, query);
                let want = brute(&fronts, query);
                prop_assert_eq!(got.is_some(), want.is_some());
                if let (Some(a), Some(w)) = (got, want) {
                    match query {
                        Query::MaxGain { budget } => {
                            prop_assert!((a.g - w).abs() < 1e-12);
                            prop_assert!(a.d <= budget + 1e-12);
                        }
                        Query::MinDistortion { g_min } => {
                            prop_assert!((a.d - w).abs() < 1e-12);
                            prop_assert!(a.g >= g_min - 1e-12);
                        }
                    }
                }
            }
        }

        #[test]
        fn thinning_keeps_endpoints(pts in prop::collection::vec((0.0f64..1.0, -2.0f64..0.0), 1..50), m in 2usize..10) {
            let f = front(&pts);
            let (t, idx) = f.thin(m);
            prop_assert!(t.len() <= m);
            prop_assert_eq!(idx[0], 0);
            prop_assert_eq!(*idx.last().unwrap(), f.len() - 1);
        }
    }
}
