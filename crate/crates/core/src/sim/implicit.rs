//! Codebook-free engine with the law of the explicit one.
//!
//! Only the transmitted codewords and the chosen description are ever
//! materialized. Every other codeword of a block is independent of the
//! observed sequences, so the number of them passing a typicality test is
//! `Bin(N, p)` with `p` the exact box probability, and a passing codeword is
//! drawn from the i.i.d. law conditioned on the test.
//!
//! Decoder candidates passing only at a widened slack rung are counted among those
//! that failed the rung below, and drawn from the widened box by bounded
//! rejection of the narrower one.
//!
//! Two approximations remain, both documented on the run result:
//! - description bin-mates of the chosen index that were also typical with
//!   the state are placed by a binomial split instead of a hypergeometric one;
//! - the remaining bin-mates are tested with the unconditional law rather
//!   than the law conditioned on failing the covering test.

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::typical::{LogFactorials, RUNGS};
use super::{
    log_factorials, random_index, random_other, stream, Cloud, Code, Covering, Description,
    Exponents, Model, Past, Sent, SimConfig, CODEBOOK_STREAM, DECODER_STREAM, ENCODER_STREAM,
};

const LN_2: f64 = std::f64::consts::LN_2;

/// Largest exact trial count handed to the binomial sampler.
const EXACT_TRIALS: u64 = 1 << 52;

/// Expected counts beyond this are reported as [`Tally::Huge`].
const HUGE_MEAN: f64 = 1e12;

/// Typical bin-mates drawn one by one; beyond this the typical fraction is
/// estimated from this many draws.
const BIN_MATE_CAP: u64 = 64;

/// A sampled count of typical candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tally {
    Exact(u64),
    Huge,
}

impl Tally {
    fn is_zero(self) -> bool {
        self == Tally::Exact(0)
    }
}

/// Number of independent candidates, exact or as a natural log.
#[derive(Debug, Clone, Copy)]
enum Trials {
    Exact(u64),
    Ln(f64),
}

impl Trials {
    fn pow2(e: u64) -> Self {
        if e < 52 {
            Trials::Exact(1 << e)
        } else {
            Trials::Ln(e as f64 * LN_2)
        }
    }

    fn pow2_minus_one(e: u64) -> Self {
        if e < 52 {
            Trials::Exact((1 << e) - 1)
        } else {
            Trials::Ln(e as f64 * LN_2)
        }
    }

    fn times_pow2(self, e: u64) -> Self {
        match self {
            Trials::Exact(0) => Trials::Exact(0),
            Trials::Exact(n)
                if e < 52 && n.checked_shl(e as u32).is_some_and(|v| v < EXACT_TRIALS) =>
            {
                Trials::Exact(n << e)
            }
            t => Trials::Ln(t.ln() + e as f64 * LN_2),
        }
    }

    fn ln(self) -> f64 {
        match self {
            Trials::Exact(0) => f64::NEG_INFINITY,
            Trials::Exact(n) => (n as f64).ln(),
            Trials::Ln(v) => v,
        }
    }

    /// Removes `t` candidates; negligible against a count kept in logs.
    fn minus(self, t: Tally) -> Self {
        match (self, t) {
            (Trials::Exact(n), Tally::Exact(k)) => Trials::Exact(n.saturating_sub(k)),
            (Trials::Exact(_), Tally::Huge) => Trials::Exact(0),
            (ln, _) => ln,
        }
    }
}

/// Count of successes among `trials` independent tests passing with
/// probability `exp(ln_p)`.
fn sample_count(trials: Trials, ln_p: f64, rng: &mut ChaCha8Rng) -> Tally {
    let ln_n = trials.ln();
    if ln_p == f64::NEG_INFINITY || ln_n == f64::NEG_INFINITY {
        return Tally::Exact(0);
    }
    let p = ln_p.exp().min(1.0);
    match trials {
        Trials::Exact(n) if n <= EXACT_TRIALS => {
            if p <= 0.0 {
                return Tally::Exact(0);
            }
            Tally::Exact(Binomial::new(n, p).expect("valid binomial").sample(rng))
        }
        _ => {
            let ln_mean = ln_n + ln_p;
            if ln_mean < -30.0 {
                return Tally::Exact(u64::from(rng.random::<f64>() < ln_mean.exp()));
            }
            let mean = ln_mean.exp();
            if mean > HUGE_MEAN {
                return Tally::Huge;
            }
            Tally::Exact(Poisson::new(mean).expect("valid poisson").sample(rng) as u64)
        }
    }
}

/// Count among `trials` candidates that all failed the rung below (pass
/// probability `exp(ln_below)`) of those passing the current rung (pass
/// probability `exp(ln_now)`, nested over the rung below).
fn sample_newly(trials: Trials, ln_now: f64, ln_below: f64, rng: &mut ChaCha8Rng) -> Tally {
    let ln_p = if ln_below == f64::NEG_INFINITY {
        ln_now
    } else if ln_now <= ln_below {
        f64::NEG_INFINITY
    } else {
        ln_now + (-(ln_below - ln_now).exp()).ln_1p() - (-ln_below.exp()).ln_1p()
    };
    sample_count(trials, ln_p, rng)
}

/// Category drawn with probability proportional to its tally; `None` when
/// all tallies are zero.
fn pick(weights: &[Tally], rng: &mut ChaCha8Rng) -> Option<usize> {
    let huge: Vec<usize> = (0..weights.len())
        .filter(|&i| weights[i] == Tally::Huge)
        .collect();
    if !huge.is_empty() {
        return Some(huge[rng.random_range(0..huge.len())]);
    }
    let counts: Vec<u128> = weights
        .iter()
        .map(|t| match t {
            Tally::Exact(c) => *c as u128,
            Tally::Huge => unreachable!(),
        })
        .collect();
    let total: u128 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let mut r = rng.random_range(0..total);
    for (i, &c) in counts.iter().enumerate() {
        if r < c {
            return Some(i);
        }
        r -= c;
    }
    unreachable!()
}

/// Category drawn with probability proportional to `exp(ln_w)`.
fn pick_ln(ln_w: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let m = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|&v| (v - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut r = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &wi) in w.iter().enumerate() {
        if wi > 0.0 {
            last = i;
            if r < wi {
                return i;
            }
            r -= wi;
        }
    }
    last
}

/// Covering candidates other than the chosen one that also passed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TypicalCount {
    pub others: Tally,
    /// `ln` of their expected number, used when `others` is huge.
    pub ln_mean: f64,
}

impl TypicalCount {
    pub const NONE: TypicalCount = TypicalCount {
        others: Tally::Exact(0),
        ln_mean: f64::NEG_INFINITY,
    };
}

pub(crate) struct ImplicitCode<'m> {
    model: &'m Model<'m>,
    eps_enc: f64,
    eps_dec: f64,
    exps: Exponents,
    n: usize,
    lf: LogFactorials,
    codewords: ChaCha8Rng,
    enc: ChaCha8Rng,
    dec: ChaCha8Rng,
}

impl<'m> ImplicitCode<'m> {
    pub fn new(model: &'m Model<'m>, config: &SimConfig, exps: Exponents) -> Self {
        Self {
            model,
            eps_enc: config.epsilon_enc,
            eps_dec: config.epsilon_dec,
            exps,
            n: config.n,
            lf: log_factorials(config.n),
            codewords: stream(config.seed, CODEBOOK_STREAM),
            enc: stream(config.seed, ENCODER_STREAM),
            dec: stream(config.seed, DECODER_STREAM),
        }
    }

    /// Index in bin `l` other than `avoid` when `avoid` lies in that bin.
    fn index_in_bin(&mut self, l: &BigUint, avoid: &BigUint) -> BigUint {
        let d = self.exps.bin_width();
        let base = l << d;
        if (avoid >> d) == *l {
            let offset = avoid - &base;
            base + random_other(d, &offset, &mut self.dec)
        } else {
            base + random_index(d, &mut self.dec)
        }
    }
}

impl Code for ImplicitCode<'_> {
    fn transmit(&mut self, _block: usize, _m: &BigUint, _l: &BigUint) -> (Vec<usize>, Vec<usize>) {
        let p = self.model.policy;
        let a: Vec<usize> = (0..self.n)
            .map(|_| super::draw(&p.p_a, &mut self.codewords))
            .collect();
        let x = a
            .iter()
            .map(|&a| super::draw(&p.p_x_given_a[a], &mut self.codewords))
            .collect();
        (a, x)
    }

    fn cover(&mut self, _block: usize, sent: &Sent, s: &[usize]) -> Covering {
        let m = self.model;
        let groups = m.groups_axs(&sent.a, &sent.x, s);
        let test = m.covering_test(&groups, self.eps_enc);
        let ln_p = test.ln_probability(&self.lf);
        let total = sample_count(Trials::pow2(self.exps.description), ln_p, &mut self.enc);
        let k = random_index(self.exps.description, &mut self.enc);
        if total.is_zero() {
            return Covering {
                k,
                u: m.free_description(&sent.a, &sent.x, &mut self.enc),
                ok: false,
                typical_others: TypicalCount::NONE,
            };
        }
        let u = test
            .sample_typical(&self.lf, &mut self.enc)
            .expect("a passing candidate exists");
        let others = match total {
            Tally::Exact(c) => Tally::Exact(c - 1),
            Tally::Huge => Tally::Huge,
        };
        Covering {
            k,
            u,
            ok: true,
            typical_others: TypicalCount {
                others,
                ln_mean: Trials::pow2_minus_one(self.exps.description).ln() + ln_p,
            },
        }
    }

    fn step1(&mut self, block: usize, sent: &Sent, y: &[usize]) -> Cloud {
        let m = self.model;
        let e = self.exps;
        let known_l = block == 1;
        let gy = m.groups_y(y);
        let joint_test = m.step1_test(&gy, self.eps_dec);
        let true_rung = joint_test.rung(&m.ax_value(&sent.a, &sent.x));

        let gay = m.groups_ay(&sent.a, y);
        let input_test = super::typical::Independent {
            groups: &gay,
            law: &m.law_x,
            target: &m.target_axy_by_ay,
            eps: self.eps_dec,
        };
        let same_m = if known_l {
            Trials::Exact(0)
        } else {
            Trials::pow2_minus_one(e.bin)
        };
        let other_m = Trials::pow2_minus_one(e.message).times_pow2(if known_l { 0 } else { e.bin });

        let mut unique = false;
        let mut below = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut decision = None;
        for r in 0..RUNGS {
            let ln_same = input_test.at_rung(r).ln_probability(&self.lf);
            let ln_other = joint_test.at_rung(r).ln_probability(&self.lf);
            let t_same = sample_newly(same_m, ln_same, below.0, &mut self.dec);
            let t_other = sample_newly(other_m, ln_other, below.1, &mut self.dec);
            let t_true = true_rung == Some(r);
            if r == 0 {
                unique = t_true && t_same.is_zero() && t_other.is_zero();
            }
            if let Some(i) = pick(
                &[Tally::Exact(u64::from(t_true)), t_same, t_other],
                &mut self.dec,
            ) {
                decision = Some((i, r));
                break;
            }
            below = (ln_same, ln_other);
        }
        let (choice, rung) = match decision {
            Some((i, r)) => (i, Some(r)),
            None => (
                pick_ln(&[0.0, same_m.ln(), other_m.ln()], &mut self.dec),
                None,
            ),
        };
        match choice {
            0 => Cloud {
                m: sent.m.clone(),
                l_prev: sent.l_prev.clone(),
                a: sent.a.clone(),
                x: sent.x.clone(),
                unique,
            },
            1 => {
                let x = rung
                    .and_then(|r| input_test.sample_at_rung(r, &self.lf, &mut self.dec))
                    .unwrap_or_else(|| input_test.sample_free(&mut self.dec));
                Cloud {
                    m: sent.m.clone(),
                    l_prev: random_other(e.bin, &sent.l_prev, &mut self.dec),
                    a: sent.a.clone(),
                    x,
                    unique,
                }
            }
            _ => {
                let v = rung
                    .and_then(|r| joint_test.sample_at_rung(r, &self.lf, &mut self.dec))
                    .unwrap_or_else(|| joint_test.sample_free(&mut self.dec));
                let (a, x) = m.split_ax(&v);
                Cloud {
                    m: random_other(e.message, &sent.m, &mut self.dec),
                    l_prev: if known_l {
                        sent.l_prev.clone()
                    } else {
                        random_index(e.bin, &mut self.dec)
                    },
                    a,
                    x,
                    unique,
                }
            }
        }
    }

    fn step2(&mut self, _block: usize, past: &Past, l_hat: &BigUint) -> Description {
        let m = self.model;
        let d = self.exps.bin_width();
        let cloud = &past.cloud;
        let groups = m.groups_axy(&cloud.a, &cloud.x, &past.y);
        let test = m.step2_test(&groups, self.eps_dec);
        let cloud_ok = cloud.m == past.sent.m && cloud.l_prev == past.sent.l_prev;

        if !cloud_ok {
            // every candidate in the decoded cloud is independent of the truth
            let mut below = f64::NEG_INFINITY;
            let mut u = None;
            for r in 0..RUNGS {
                let ln_p = test.at_rung(r).ln_probability(&self.lf);
                if !sample_newly(Trials::pow2(d), ln_p, below, &mut self.dec).is_zero() {
                    u = test.sample_at_rung(r, &self.lf, &mut self.dec);
                    break;
                }
                below = ln_p;
            }
            let u = u.unwrap_or_else(|| m.free_description(&cloud.a, &cloud.x, &mut self.dec));
            let k = (l_hat << d) + random_index(d, &mut self.dec);
            return Description { k, u };
        }

        let cov = &past.covering;
        let in_bin = (&cov.k >> d) == *l_hat;
        let true_rung = if in_bin { test.rung(&cov.u) } else { None };
        let others = if in_bin {
            Trials::pow2_minus_one(d)
        } else {
            Trials::pow2(d)
        };
        let rest = Trials::pow2_minus_one(self.exps.description).ln();
        let ln_share = others.ln() - rest;
        let mates = if rest == f64::NEG_INFINITY {
            Tally::Exact(0)
        } else {
            match cov.typical_others.others {
                Tally::Exact(0) => Tally::Exact(0),
                Tally::Exact(c) => sample_count(Trials::Exact(c), ln_share, &mut self.dec),
                Tally::Huge => sample_count(
                    Trials::Ln(cov.typical_others.ln_mean),
                    ln_share,
                    &mut self.dec,
                ),
            }
        };
        let mates = match (mates, others) {
            (Tally::Exact(c), Trials::Exact(o)) => Tally::Exact(c.min(o)),
            (t, _) => t,
        };

        // bin-mates typical with the state, tested against the output
        let gs = m.groups_axs(&past.sent.a, &past.sent.x, &past.s);
        let cover_test = m.covering_test(&gs, self.eps_enc);
        let drawn = match mates {
            Tally::Exact(c) => c.min(BIN_MATE_CAP),
            Tally::Huge => BIN_MATE_CAP,
        };
        let mut mate_words = Vec::new();
        for _ in 0..drawn {
            let Some(u) = cover_test.sample_typical(&self.lf, &mut self.dec) else {
                break;
            };
            let r = test.rung(&u);
            mate_words.push((u, r));
        }
        let outside = others.minus(mates);

        let mut below = f64::NEG_INFINITY;
        let mut decision = None;
        for r in 0..RUNGS {
            let passing: Vec<usize> = (0..mate_words.len())
                .filter(|&i| mate_words[i].1 == Some(r))
                .collect();
            let t_mates = match mates {
                Tally::Exact(c) if c <= BIN_MATE_CAP => Tally::Exact(passing.len() as u64),
                Tally::Exact(c) => {
                    Tally::Exact((c as f64 * passing.len() as f64 / drawn as f64).round() as u64)
                }
                Tally::Huge if passing.is_empty() => Tally::Exact(0),
                Tally::Huge => Tally::Huge,
            };
            let ln_py = test.at_rung(r).ln_probability(&self.lf);
            let t_rest = sample_newly(outside, ln_py, below, &mut self.dec);
            let t_true = true_rung == Some(r);
            let weights = [Tally::Exact(u64::from(t_true)), t_mates, t_rest];
            if let Some(i) = pick(&weights, &mut self.dec) {
                decision = Some((i, r, passing));
                break;
            }
            below = ln_py;
        }
        let (choice, rung, pool) = match decision {
            Some((i, r, passing)) => (i, Some(r), passing),
            None => {
                let ln_mates = match mates {
                    Tally::Exact(c) => Trials::Exact(c).ln(),
                    Tally::Huge => cov.typical_others.ln_mean + ln_share,
                };
                let ln_true = if in_bin { 0.0 } else { f64::NEG_INFINITY };
                (
                    pick_ln(&[ln_true, ln_mates, outside.ln()], &mut self.dec),
                    None,
                    (0..mate_words.len()).collect(),
                )
            }
        };
        match choice {
            0 => Description {
                k: cov.k.clone(),
                u: cov.u.clone(),
            },
            1 => {
                let u = if pool.is_empty() {
                    cover_test
                        .sample_typical(&self.lf, &mut self.dec)
                        .unwrap_or_else(|| m.free_description(&cloud.a, &cloud.x, &mut self.dec))
                } else {
                    mate_words[pool[self.dec.random_range(0..pool.len())]]
                        .0
                        .clone()
                };
                let k = self.index_in_bin(l_hat, &cov.k);
                Description { k, u }
            }
            _ => {
                let u = rung
                    .and_then(|r| test.sample_at_rung(r, &self.lf, &mut self.dec))
                    .unwrap_or_else(|| m.free_description(&cloud.a, &cloud.x, &mut self.dec));
                let k = self.index_in_bin(l_hat, &cov.k);
                Description { k, u }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn trial_counts_switch_to_logs_for_large_exponents() {
        assert!(matches!(Trials::pow2(10), Trials::Exact(1024)));
        assert!(matches!(Trials::pow2_minus_one(3), Trials::Exact(7)));
        assert!(matches!(Trials::Exact(3).times_pow2(4), Trials::Exact(48)));
        let big = Trials::pow2(400);
        assert!((big.ln() - 400.0 * LN_2).abs() < 1e-9);
        assert!(matches!(Trials::pow2_minus_one(0), Trials::Exact(0)));
    }

    #[test]
    fn counts_follow_binomial_and_poisson_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            sample_count(Trials::Exact(100), f64::NEG_INFINITY, &mut rng),
            Tally::Exact(0)
        );
        assert_eq!(
            sample_count(Trials::Exact(100), 0.0, &mut rng),
            Tally::Exact(100)
        );
        assert_eq!(
            sample_count(Trials::Ln(500.0), -10.0, &mut rng),
            Tally::Huge
        );
        let mut total = 0;
        for _ in 0..2000 {
            if let Tally::Exact(c) = sample_count(Trials::Ln(200.0 * LN_2), -198.0 * LN_2, &mut rng)
            {
                total += c;
            }
        }
        // mean 4
        let mean = total as f64 / 2000.0;
        assert!((mean - 4.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn newly_passing_counts_use_the_conditional_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let none = sample_newly(Trials::Exact(1000), 0.5f64.ln(), 0.5f64.ln(), &mut rng);
        assert_eq!(none, Tally::Exact(0));
        // (0.6 − 0.2) / (1 − 0.2) = 0.5
        let mut total = 0;
        for _ in 0..400 {
            if let Tally::Exact(c) =
                sample_newly(Trials::Exact(100), 0.6f64.ln(), 0.2f64.ln(), &mut rng)
            {
                total += c;
            }
        }
        let mean = total as f64 / 400.0;
        assert!((mean - 50.0).abs() < 1.0, "{mean}");
    }

    #[test]
    fn picks_respect_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(pick(&[Tally::Exact(0), Tally::Exact(0)], &mut rng), None);
        assert_eq!(pick(&[Tally::Exact(5), Tally::Huge], &mut rng), Some(1));
        let hits = (0..4000)
            .filter(|_| pick(&[Tally::Exact(1), Tally::Exact(3)], &mut rng) == Some(1))
            .count();
        assert!((hits as f64 / 4000.0 - 0.75).abs() < 0.03);
        let hits = (0..4000)
            .filter(|_| pick_ln(&[0.0, 3f64.ln()], &mut rng) == 1)
            .count();
        assert!((hits as f64 / 4000.0 - 0.75).abs() < 0.03);
    }
}
