//! Robust typicality and exact laws of independent sequences under it.
//!
//! A sequence of tuples is ε-typical when every tuple's count lies in
//! `[n(1−ε)p, n(1+ε)p]`; tuples with `p = 0` must not occur.
//!
//! Sequences drawn independently of a fixed "grouping" sequence are handled
//! group by group: inside a group the new symbols are i.i.d., so their counts
//! are multinomial and typicality is a box constraint on those counts. The
//! box probability and the law of the counts conditioned on the box are
//! computed by dynamic programming in log space.

use rand::seq::SliceRandom;
use rand::Rng;

/// Count interval a tuple of probability `p` may take in a length-`n`
/// ε-typical sequence. Empty intervals have `lo > hi`.
pub fn count_bounds(n: usize, p: f64, eps: f64) -> (usize, usize) {
    if p <= 0.0 {
        return (0, 0);
    }
    let nf = n as f64;
    let lo = (nf * p * (1.0 - eps) - 1e-9).ceil().max(0.0) as usize;
    let hi = (nf * p * (1.0 + eps) + 1e-9).floor().min(nf) as usize;
    (lo, hi)
}

/// Slack rungs tried in turn when no candidate passes at the configured
/// slack; rung 0 is the configured slack itself.
pub const RUNGS: usize = 17;

/// Slack of rung `r`, growing by a factor 1.25 per rung.
pub fn rung_eps(eps: f64, r: usize) -> f64 {
    eps * 1.25f64.powi(r as i32)
}

/// Typicality of observed tuple counts against the target pmf.
pub fn is_typical(counts: &[usize], target: &[f64], eps: f64) -> bool {
    let n: usize = counts.iter().sum();
    counts.iter().zip(target).all(|(&c, &p)| {
        let (lo, hi) = count_bounds(n, p, eps);
        c >= lo && c <= hi
    })
}

const REJECTION_TRIES: usize = 4096;

/// Natural-log factorials up to a fixed size.
#[derive(Debug, Clone)]
pub struct LogFactorials(Vec<f64>);

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let mut v = Vec::with_capacity(n + 1);
        v.push(0.0);
        for k in 1..=n {
            let prev = v[k - 1];
            v.push(prev + (k as f64).ln());
        }
        Self(v)
    }

    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }

    /// `ln P(Bin(n, rho) = c)` with exact handling of `rho ∈ {0, 1}`.
    fn ln_binomial(&self, n: usize, c: usize, rho: f64) -> f64 {
        if rho <= 0.0 {
            return if c == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        if rho >= 1.0 {
            return if c == n { 0.0 } else { f64::NEG_INFINITY };
        }
        self.ln_choose(n, c) + c as f64 * rho.ln() + (n - c) as f64 * (-rho).ln_1p()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Multinomial counts of `n` draws from `law`, each confined to `bounds`.
pub struct BoxedMultinomial {
    n: usize,
    rho: Vec<f64>,
    bounds: Vec<(usize, usize)>,
    /// `tail[k][t]`: ln P(categories `k..` take exactly `t` draws, all in bounds)
    tail: Vec<Vec<f64>>,
}

impl BoxedMultinomial {
    pub fn new(n: usize, law: &[f64], bounds: &[(usize, usize)], lf: &LogFactorials) -> Self {
        let k = law.len();
        // sequential binomial parameters
        let mut rho = vec![0.0; k];
        let mut rest: f64 = law.iter().sum();
        for i in 0..k {
            rho[i] = if rest > 0.0 {
                (law[i] / rest).min(1.0)
            } else {
                0.0
            };
            rest -= law[i];
        }
        if let Some(last) = (0..k).rev().find(|&i| law[i] > 0.0) {
            rho[last] = 1.0;
        }
        let mut tail = vec![vec![f64::NEG_INFINITY; n + 1]; k + 1];
        tail[k][0] = 0.0;
        for i in (0..k).rev() {
            let (lo, hi) = bounds[i];
            for t in 0..=n {
                let mut acc = f64::NEG_INFINITY;
                if lo <= hi {
                    for c in lo..=hi.min(t) {
                        let next = tail[i + 1][t - c];
                        if next == f64::NEG_INFINITY {
                            continue;
                        }
                        acc = log_add(acc, lf.ln_binomial(t, c, rho[i]) + next);
                    }
                }
                tail[i][t] = acc;
            }
        }
        Self {
            n,
            rho,
            bounds: bounds.to_vec(),
            tail,
        }
    }

    /// Natural log of the probability that every count is in bounds.
    pub fn ln_probability(&self) -> f64 {
        self.tail[0][self.n]
    }

    /// Counts drawn from the multinomial conditioned on the box; `None` when
    /// the box has probability zero.
    pub fn sample<R: Rng + ?Sized>(&self, lf: &LogFactorials, rng: &mut R) -> Option<Vec<usize>> {
        if self.ln_probability() == f64::NEG_INFINITY {
            return None;
        }
        let k = self.rho.len();
        let mut t = self.n;
        let mut out = vec![0; k];
        for i in 0..k {
            let (lo, hi) = self.bounds[i];
            let base = self.tail[i][t];
            let mut u: f64 = rng.random();
            let mut pick = None;
            for c in lo..=hi.min(t) {
                let w = (lf.ln_binomial(t, c, self.rho[i]) + self.tail[i + 1][t - c] - base).exp();
                if w > 0.0 {
                    pick = Some(c);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            let c = pick.expect("positive mass in a feasible box");
            out[i] = c;
            t -= c;
        }
        Some(out)
    }
}

/// Positions of a fixed sequence split by group label.
#[derive(Debug, Clone)]
pub struct Groups {
    pub positions: Vec<Vec<usize>>,
}

impl Groups {
    pub fn new(labels: &[usize], count: usize) -> Self {
        let mut positions = vec![Vec::new(); count];
        for (i, &g) in labels.iter().enumerate() {
            positions[g].push(i);
        }
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }
}

/// A new symbol sequence drawn i.i.d. per position from `law[g]` given the
/// position's group `g`, tested for typicality of the `(g, v)` tuples against
/// `target[g·nv + v]`.
#[derive(Clone, Copy)]
pub struct Independent<'a> {
    pub groups: &'a Groups,
    /// `law[g][v]`
    pub law: &'a [Vec<f64>],
    pub target: &'a [f64],
    pub eps: f64,
}

impl Independent<'_> {
    fn nv(&self) -> usize {
        self.law.first().map_or(1, Vec::len)
    }

    fn total(&self) -> usize {
        self.groups.positions.iter().map(Vec::len).sum()
    }

    fn boxes(&self, lf: &LogFactorials) -> Vec<BoxedMultinomial> {
        let n = self.total();
        let nv = self.nv();
        (0..self.groups.len())
            .map(|g| {
                let bounds: Vec<(usize, usize)> = (0..nv)
                    .map(|v| count_bounds(n, self.target[g * nv + v], self.eps))
                    .collect();
                BoxedMultinomial::new(self.groups.positions[g].len(), &self.law[g], &bounds, lf)
            })
            .collect()
    }

    /// Natural log of the probability that the new sequence is typical.
    pub fn ln_probability(&self, lf: &LogFactorials) -> f64 {
        self.boxes(lf)
            .iter()
            .map(BoxedMultinomial::ln_probability)
            .sum()
    }

    /// A sequence drawn conditionally on being typical, or `None` if that
    /// event is impossible.
    pub fn sample_typical<R: Rng + ?Sized>(
        &self,
        lf: &LogFactorials,
        rng: &mut R,
    ) -> Option<Vec<usize>> {
        let counts = self
            .boxes(lf)
            .iter()
            .map(|b| b.sample(lf, rng))
            .collect::<Option<Vec<_>>>()?;
        Some(self.arrange(&counts, rng))
    }

    /// A sequence with the given per-group value counts, shuffled in place.
    fn arrange<R: Rng + ?Sized>(&self, counts: &[Vec<usize>], rng: &mut R) -> Vec<usize> {
        let mut seq = vec![0usize; self.total()];
        for (g, c) in counts.iter().enumerate() {
            let mut symbols: Vec<usize> = c
                .iter()
                .enumerate()
                .flat_map(|(v, &k)| std::iter::repeat_n(v, k))
                .collect();
            symbols.shuffle(rng);
            for (&pos, v) in self.groups.positions[g].iter().zip(symbols) {
                seq[pos] = v;
            }
        }
        seq
    }

    /// A sequence drawn without conditioning.
    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut seq = vec![0usize; self.total()];
        for (g, pos) in self.groups.positions.iter().enumerate() {
            for &i in pos {
                seq[i] = draw(&self.law[g], rng);
            }
        }
        seq
    }

    /// The same test at rung `r` of the slack ladder.
    pub fn at_rung(&self, r: usize) -> Self {
        Self {
            eps: rung_eps(self.eps, r),
            ..*self
        }
    }

    fn counts(&self, seq: &[usize]) -> Vec<usize> {
        let nv = self.nv();
        let mut counts = vec![0usize; self.groups.len() * nv];
        for (g, pos) in self.groups.positions.iter().enumerate() {
            for &i in pos {
                counts[g * nv + seq[i]] += 1;
            }
        }
        counts
    }

    /// Typicality of a given candidate sequence.
    pub fn check(&self, seq: &[usize]) -> bool {
        is_typical(&self.counts(seq), self.target, self.eps)
    }

    /// First ladder rung at which the candidate passes.
    pub fn rung(&self, seq: &[usize]) -> Option<usize> {
        let counts = self.counts(seq);
        (0..RUNGS).find(|&r| is_typical(&counts, self.target, rung_eps(self.eps, r)))
    }

    /// A sequence typical at rung `r` but not at rung `r − 1`, by rejection
    /// on the sampled counts with a bounded number of tries.
    pub fn sample_at_rung<R: Rng + ?Sized>(
        &self,
        r: usize,
        lf: &LogFactorials,
        rng: &mut R,
    ) -> Option<Vec<usize>> {
        let boxes = self.at_rung(r).boxes(lf);
        let n = self.total();
        let nv = self.nv();
        let narrower = |counts: &[Vec<usize>]| {
            let eps = rung_eps(self.eps, r - 1);
            counts.iter().enumerate().all(|(g, c)| {
                c.iter().enumerate().all(|(v, &k)| {
                    let (lo, hi) = count_bounds(n, self.target[g * nv + v], eps);
                    k >= lo && k <= hi
                })
            })
        };
        let mut counts = Vec::new();
        for _ in 0..REJECTION_TRIES {
            counts = boxes
                .iter()
                .map(|b| b.sample(lf, rng))
                .collect::<Option<Vec<_>>>()?;
            if r == 0 || !narrower(&counts) {
                break;
            }
        }
        Some(self.arrange(&counts, rng))
    }
}

/// One draw from a pmf.
pub fn draw<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.random();
    let mut last = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            last = i;
            if u < p {
                return i;
            }
            u -= p;
        }
    }
    last
}
