//! Quantized simplices and a derivative-free local search on products of
//! simplices.

/// Number of ways to write `total` as an ordered sum of `parts` nonnegative
/// integers. Returned as `f64` because lattice sizes are compared to caps.
pub fn composition_count(parts: usize, total: usize) -> f64 {
    if parts == 0 {
        return if total == 0 { 1.0 } else { 0.0 };
    }
    // C(total + parts - 1, parts - 1)
    let k = parts - 1;
    let n = total + k;
    (0..k)
        .fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        .round()
}

/// All compositions of `total` into `parts`, in lexicographic order.
pub fn compositions(parts: usize, total: usize) -> Compositions {
    Compositions {
        current: if parts == 0 {
            None
        } else {
            let mut v = vec![0; parts];
            v[parts - 1] = total;
            Some(v)
        },
    }
}

pub struct Compositions {
    current: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let v = self.current.as_mut()?;
        let out = v.clone();
        let n = v.len();
        // Rightmost position with mass after it takes one unit from the tail.
        let mut suffix = v[n - 1];
        let mut advanced = false;
        for i in (0..n - 1).rev() {
            if suffix > 0 {
                v[i] += 1;
                v[i + 1..].iter_mut().for_each(|e| *e = 0);
                v[n - 1] = suffix - 1;
                advanced = true;
                break;
            }
            suffix += v[i];
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

/// Points of the simplex in `dim` coordinates with `resolution` levels per
/// coordinate (coordinates are multiples of `1/(resolution-1)`).
pub fn lattice(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    let total = resolution.saturating_sub(1).max(1);
    compositions(dim, total)
        .map(|c| c.into_iter().map(|k| k as f64 / total as f64).collect())
        .collect()
}

pub fn uniform(dim: usize) -> Vec<f64> {
    vec![1.0 / dim as f64; dim]
}

pub fn point_mass(dim: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[at] = 1.0;
    v
}

/// Rescales to unit sum after clearing tiny negatives left by transfers.
pub fn renormalize(v: &mut [f64]) {
    for p in v.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|p| *p /= s);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|p| *p = 1.0 / n);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            min_step: 1e-9,
            max_evals: 20_000,
        }
    }
}

/// Compass search over a product of simplices.
///
/// A move shifts mass `step` (or whatever is left) from one coordinate of one
/// simplex to another. `f` returns `None` for rejected points. The step halves
/// whenever a full sweep finds no improvement. Returns the best value.
pub fn pattern_search<F>(x: &mut [Vec<f64>], limits: SearchLimits, mut f: F) -> Option<f64>
where
    F: FnMut(&[Vec<f64>]) -> Option<f64>,
{
    let mut best = f(x)?;
    let mut evals = 1;
    let mut step = limits.initial_step;
    while step >= limits.min_step && evals < limits.max_evals {
        let mut improved = false;
        for b in 0..x.len() {
            let n = x[b].len();
            for i in 0..n {
                for j in 0..n {
                    if i == j || x[b][i] <= 0.0 {
                        continue;
                    }
                    let t = step.min(x[b][i]);
                    let (oi, oj) = (x[b][i], x[b][j]);
                    x[b][i] = oi - t;
                    x[b][j] = oj + t;
                    evals += 1;
                    match f(x) {
                        Some(v) if v > best + 1e-15 => {
                            best = v;
                            improved = true;
                        }
                        _ => {
                            x[b][i] = oi;
                            x[b][j] = oj;
                        }
                    }
                    if evals >= limits.max_evals {
                        return Some(best);
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(best)
}
