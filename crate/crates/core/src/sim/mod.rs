//! Monte Carlo block-Markov random coding with state-description binning.
//!
//! Each of `b` blocks carries a fresh message `m_j` and the bin index
//! `l_{j−1}` of the previous block's state description. The action sequence
//! depends on the message only; the channel input is superposed on it and
//! carries `(m_j, l_{j−1})`. At the end of block `j` the encoder covers the
//! observed state with a description `u^n(k_j)` and sends its bin
//! `l_j = bin(k_j)` in block `j+1`. The decoder first recovers
//! `(m_{j+1}, l_j)` from `y^n(j+1)`, then the description index inside bin
//! `l_j` from `y^n(j)`, and finally reconstructs the states of block `j`.
//!
//! Indices are 0-based; the first block carries `l_0 = 0`, known to both
//! ends. Every block uses an independently drawn codebook. Distortion is
//! averaged over blocks `1..b−1`: the description of the last block is never
//! delivered.
//!
//! The encoder picks uniformly among the covering candidates, and uniformly
//! among all of them when none passes. The decoder also picks uniformly among
//! passing candidates. When none passes, usually because the observed output
//! is itself atypical at this block length, it widens the slack along
//! [`typical::rung_eps`] and picks at the first rung with a passing
//! candidate. Such a decode still counts as ambiguous.
//!
//! Two engines produce the same law:
//! - [`Engine::Explicit`] draws the codebooks and searches them exhaustively.
//! - [`Engine::Implicit`] never stores a codebook. Codewords that are not
//!   the transmitted ones are independent of everything observed, so the
//!   number of them that pass a typicality test is binomial with an exactly
//!   computable success probability, and a passing codeword can be drawn
//!   from its conditional law. This reaches block lengths whose codebooks
//!   could not be stored.

mod explicit;
mod implicit;
pub mod typical;

pub use explicit::{generate_codebook, Codebook, CODEBOOK_SYMBOL_CAP};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::infotheory::{
    assemble_joint, check_policy, conditional_mutual_information, mutual_information,
    JointDistribution, Policy, Var,
};
use crate::{Error, Result};
use typical::{draw, Groups, Independent, LogFactorials};

/// Which code representation drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Explicit when the codebook fits under [`CODEBOOK_SYMBOL_CAP`].
    #[default]
    Auto,
    Explicit,
    Implicit,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "explicit" => Ok(Engine::Explicit),
            "implicit" => Ok(Engine::Implicit),
            other => Err(Error::InvalidArgument(format!(
                "unknown engine '{other}' (expected auto, explicit or implicit)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Block length.
    pub n: usize,
    /// Number of blocks.
    pub b: usize,
    /// Message rate in bits per symbol.
    pub rate_r: f64,
    pub delta: f64,
    /// Encoder (covering) typicality slack ε′.
    pub epsilon_enc: f64,
    /// Decoder typicality slack ε; must exceed ε′.
    pub epsilon_dec: f64,
    pub seed: u64,
    pub engine: Engine,
    /// Run even when `rate_r` exceeds the derived `R_max`.
    pub allow_rate_above_max: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 512,
            b: 8,
            rate_r: 0.0,
            delta: 0.01,
            epsilon_enc: 0.1,
            epsilon_dec: 0.2,
            seed: 0,
            engine: Engine::Auto,
            allow_rate_above_max: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n == 0 {
            return bad("block length n must be at least 1");
        }
        if self.b < 2 {
            return bad("number of blocks b must be at least 2");
        }
        if !(self.rate_r.is_finite() && self.rate_r >= 0.0) {
            return bad("rate must be a finite nonnegative number");
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad("margin delta must be positive");
        }
        if !(self.epsilon_enc > 0.0
            && self.epsilon_dec > self.epsilon_enc
            && self.epsilon_dec.is_finite())
        {
            return bad("typicality slacks must satisfy epsilon_dec > epsilon_enc > 0");
        }
        Ok(())
    }
}

/// Rates of the superposition/binning code for a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeRates {
    /// Description rate `R̃_S = I(U;S|X,A) + δ`.
    pub r_s_tilde: f64,
    /// Bin rate `R_S = max(R̃_S − I(U;Y|X,A), 0) + δ`.
    pub r_s: f64,
    /// Largest message rate `I(X,A;Y) − R_S − δ`; negative when the policy
    /// supports no positive rate at this margin.
    pub r_max: f64,
    pub i_xa_y: f64,
    pub i_u_s_given_xa: f64,
    pub i_u_y_given_xa: f64,
}

impl CodeRates {
    pub fn supports_positive_rate(&self) -> bool {
        self.r_max > 0.0
    }
}

pub fn derive_code_rates(spec: &ChannelSpec, policy: &Policy, delta: f64) -> Result<CodeRates> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(
            "margin delta must be positive".into(),
        ));
    }
    let joint = assemble_joint(spec, policy)?;
    let xa = [Var::X, Var::A];
    let i_xa_y = mutual_information(&joint, xa, Var::Y)?;
    let i_u_s_given_xa = conditional_mutual_information(&joint, Var::U, Var::S, xa)?;
    let i_u_y_given_xa = conditional_mutual_information(&joint, Var::U, Var::Y, xa)?;
    let r_s_tilde = i_u_s_given_xa + delta;
    let r_s = (r_s_tilde - i_u_y_given_xa).max(0.0) + delta;
    Ok(CodeRates {
        r_s_tilde,
        r_s,
        r_max: i_xa_y - r_s - delta,
        i_xa_y,
        i_u_s_given_xa,
        i_u_y_given_xa,
    })
}

/// Codebook sizes as powers of two: `2^message` messages, `2^bin` bins and
/// `2^description` descriptions per cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exponents {
    pub message: u64,
    pub bin: u64,
    pub description: u64,
}

impl Exponents {
    /// Ceiling of each `n·rate`; the bin exponent is clamped to the
    /// description exponent (bins of one index).
    pub fn new(n: usize, rate_r: f64, rates: &CodeRates) -> Self {
        let up = |r: f64| ((n as f64 * r) - 1e-9).ceil().max(0.0) as u64;
        let description = up(rates.r_s_tilde);
        Self {
            message: up(rate_r),
            bin: up(rates.r_s).min(description),
            description,
        }
    }

    /// Descriptions per bin, as a power of two.
    pub fn bin_width(&self) -> u64 {
        self.description - self.bin
    }

    /// `log2` of the symbols an explicit codebook stores.
    pub fn log2_codebook_symbols(&self, n: usize) -> f64 {
        let l = self.bin as f64;
        let k = self.description as f64;
        (n as f64).log2() + self.message as f64 + log2_add(0.0, l + log2_add(0.0, k))
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + (2f64.powf(a - m) + 2f64.powf(b - m)).log2()
}

/// One line of the per-block log. Indices are hexadecimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: usize,
    pub m: String,
    pub m_hat: String,
    pub l: String,
    /// Decoded in the next block; absent for the last block.
    pub l_hat: Option<String>,
    pub k: String,
    pub k_hat: Option<String>,
    pub covering_ok: bool,
    /// Step 1 found exactly one typical candidate and it was the sent one.
    pub decode_ok: bool,
    pub distortion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Fraction of blocks whose message was wrong or whose decode was ambiguous.
    pub empirical_message_error: f64,
    /// Mean per-symbol distortion over blocks `1..b−1`.
    pub empirical_distortion: f64,
    pub encoder_covering_failures: usize,
    /// Blocks `1..b−1` whose description index was decoded wrongly.
    pub description_errors: usize,
    pub engine: Engine,
    pub rates: CodeRates,
    pub exponents: Exponents,
    pub config: SimConfig,
    pub blocks: Vec<BlockRecord>,
}

impl SimResult {
    /// Tab-separated per-block log with a header line.
    pub fn log_lines(&self) -> String {
        let mut out = String::from("block\tm\tm_hat\tl\tl_hat\tk\tk_hat\tcovering_ok\tdecode_ok\n");
        for r in &self.blocks {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.block,
                r.m,
                r.m_hat,
                r.l,
                r.l_hat.as_deref().unwrap_or("-"),
                r.k,
                r.k_hat.as_deref().unwrap_or("-"),
                r.covering_ok,
                r.decode_ok
            ));
        }
        out
    }
}

/// Everything a run needs from `(spec, policy)`, with the typicality targets
/// laid out as `(group, value)` tables.
pub(crate) struct Model<'a> {
    pub spec: &'a ChannelSpec,
    pub policy: &'a Policy,
    pub na: usize,
    pub nx: usize,
    pub ns: usize,
    pub nu: usize,
    pub ny: usize,
    /// `p(u|x,a)` indexed `[a·nx + x][u]`.
    pub p_u_given_xa: Vec<Vec<f64>>,
    /// Group `(a, y)`, value `x`.
    pub law_x: Vec<Vec<f64>>,
    pub target_axy_by_ay: Vec<f64>,
    /// Group `y`, value `(a, x)`.
    pub law_ax: Vec<Vec<f64>>,
    pub target_axy_by_y: Vec<f64>,
    /// Group `(a, x, s)`, value `u`.
    pub law_u_by_axs: Vec<Vec<f64>>,
    pub target_axsu: Vec<f64>,
    /// Group `(a, x, y)`, value `u`.
    pub law_u_by_axy: Vec<Vec<f64>>,
    pub target_axyu: Vec<f64>,
}

impl<'a> Model<'a> {
    pub fn new(spec: &'a ChannelSpec, policy: &'a Policy) -> Result<Self> {
        check_policy(spec, policy)?;
        let joint = assemble_joint(spec, policy)?;
        let (na, nx, ns, ny) = (spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y);
        let nu = policy.alpha_u();
        let mut p_u_given_xa = vec![vec![0.0; nu]; na * nx];
        for a in 0..na {
            for x in 0..nx {
                for s in 0..ns {
                    let ps = spec.state_given_action[a][s];
                    for u in 0..nu {
                        p_u_given_xa[a * nx + x][u] += ps * policy.p_u_given_xsa[x][s][a][u];
                    }
                }
            }
        }
        let sum = |f: &dyn Fn(usize, usize, usize, usize, usize) -> bool| {
            let mut t = 0.0;
            for a in 0..na {
                for x in 0..nx {
                    for s in 0..ns {
                        for u in 0..nu {
                            for y in 0..ny {
                                if f(a, x, s, u, y) {
                                    t += joint.get(a, x, s, u, y);
                                }
                            }
                        }
                    }
                }
            }
            t
        };
        let p_axy = |a, x, y| sum(&|a2, x2, _, _, y2| a2 == a && x2 == x && y2 == y);
        let mut law_x = Vec::new();
        let mut target_axy_by_ay = Vec::new();
        for a in 0..na {
            for y in 0..ny {
                law_x.push(policy.p_x_given_a[a].clone());
                for x in 0..nx {
                    target_axy_by_ay.push(p_axy(a, x, y));
                }
            }
        }
        let p_ax: Vec<f64> = (0..na)
            .flat_map(|a| (0..nx).map(move |x| (a, x)))
            .map(|(a, x)| policy.p_a[a] * policy.p_x_given_a[a][x])
            .collect();
        let mut law_ax = Vec::new();
        let mut target_axy_by_y = Vec::new();
        for y in 0..ny {
            law_ax.push(p_ax.clone());
            for a in 0..na {
                for x in 0..nx {
                    target_axy_by_y.push(p_axy(a, x, y));
                }
            }
        }
        let mut law_u_by_axs = Vec::new();
        let mut target_axsu = Vec::new();
        for a in 0..na {
            for x in 0..nx {
                for s in 0..ns {
                    law_u_by_axs.push(p_u_given_xa[a * nx + x].clone());
                    for u in 0..nu {
                        target_axsu.push(sum(&|a2, x2, s2, u2, _| {
                            a2 == a && x2 == x && s2 == s && u2 == u
                        }));
                    }
                }
            }
        }
        let mut law_u_by_axy = Vec::new();
        let mut target_axyu = Vec::new();
        for a in 0..na {
            for x in 0..nx {
                for y in 0..ny {
                    law_u_by_axy.push(p_u_given_xa[a * nx + x].clone());
                    for u in 0..nu {
                        target_axyu.push(sum(&|a2, x2, _, u2, y2| {
                            a2 == a && x2 == x && u2 == u && y2 == y
                        }));
                    }
                }
            }
        }
        Ok(Self {
            spec,
            policy,
            na,
            nx,
            ns,
            nu,
            ny,
            p_u_given_xa,
            law_x,
            target_axy_by_ay,
            law_ax,
            target_axy_by_y,
            law_u_by_axs,
            target_axsu,
            law_u_by_axy,
            target_axyu,
        })
    }

    pub fn state<R: Rng + ?Sized>(&self, a: &[usize], rng: &mut R) -> Vec<usize> {
        a.iter()
            .map(|&a| draw(&self.spec.state_given_action[a], rng))
            .collect()
    }

    pub fn output<R: Rng + ?Sized>(
        &self,
        a: &[usize],
        x: &[usize],
        s: &[usize],
        rng: &mut R,
    ) -> Vec<usize> {
        (0..a.len())
            .map(|i| draw(&self.spec.output_given_xsa[x[i]][s[i]][a[i]], rng))
            .collect()
    }

    pub fn groups_ay(&self, a: &[usize], y: &[usize]) -> Groups {
        let labels: Vec<usize> = a.iter().zip(y).map(|(&a, &y)| a * self.ny + y).collect();
        Groups::new(&labels, self.na * self.ny)
    }

    pub fn groups_y(&self, y: &[usize]) -> Groups {
        Groups::new(y, self.ny)
    }

    pub fn groups_axs(&self, a: &[usize], x: &[usize], s: &[usize]) -> Groups {
        let labels: Vec<usize> = (0..a.len())
            .map(|i| (a[i] * self.nx + x[i]) * self.ns + s[i])
            .collect();
        Groups::new(&labels, self.na * self.nx * self.ns)
    }

    pub fn groups_axy(&self, a: &[usize], x: &[usize], y: &[usize]) -> Groups {
        let labels: Vec<usize> = (0..a.len())
            .map(|i| (a[i] * self.nx + x[i]) * self.ny + y[i])
            .collect();
        Groups::new(&labels, self.na * self.nx * self.ny)
    }

    /// Typicality test of `(a, x, y)` against the decoder slack.
    pub fn step1_test<'g>(&'g self, groups_y: &'g Groups, eps: f64) -> Independent<'g> {
        Independent {
            groups: groups_y,
            law: &self.law_ax,
            target: &self.target_axy_by_y,
            eps,
        }
    }

    pub fn ax_value(&self, a: &[usize], x: &[usize]) -> Vec<usize> {
        a.iter().zip(x).map(|(&a, &x)| a * self.nx + x).collect()
    }

    pub fn split_ax(&self, v: &[usize]) -> (Vec<usize>, Vec<usize>) {
        (
            v.iter().map(|&v| v / self.nx).collect(),
            v.iter().map(|&v| v % self.nx).collect(),
        )
    }

    pub fn covering_test<'g>(&'g self, groups: &'g Groups, eps: f64) -> Independent<'g> {
        Independent {
            groups,
            law: &self.law_u_by_axs,
            target: &self.target_axsu,
            eps,
        }
    }

    pub fn step2_test<'g>(&'g self, groups: &'g Groups, eps: f64) -> Independent<'g> {
        Independent {
            groups,
            law: &self.law_u_by_axy,
            target: &self.target_axyu,
            eps,
        }
    }

    /// Description codeword drawn from `p(u|x,a)` per position.
    pub fn free_description<R: Rng + ?Sized>(
        &self,
        a: &[usize],
        x: &[usize],
        rng: &mut R,
    ) -> Vec<usize> {
        (0..a.len())
            .map(|i| draw(&self.p_u_given_xa[a[i] * self.nx + x[i]], rng))
            .collect()
    }

    /// Per-symbol distortion of the reconstruction from `(u, x, a, y)`.
    pub fn distortion(
        &self,
        s: &[usize],
        u: &[usize],
        x: &[usize],
        a: &[usize],
        y: &[usize],
    ) -> f64 {
        let est = &self.policy.estimator;
        let total: f64 = (0..s.len())
            .map(|i| self.spec.distortion[s[i]][est.get(u[i], x[i], a[i], y[i])])
            .sum();
        total / s.len() as f64
    }
}

/// Independent RNG stream derived from the run seed.
pub(crate) fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

pub(crate) const SOURCE_STREAM: u64 = 1;
pub(crate) const ENCODER_STREAM: u64 = 2;
pub(crate) const DECODER_STREAM: u64 = 3;
pub(crate) const CODEBOOK_STREAM: u64 = 1 << 32;

/// Uniform index in `[0, 2^bits)`.
pub(crate) fn random_index<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    if bits == 0 {
        return BigUint::ZERO;
    }
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill(&mut buf[..]);
    let spare = (bytes as u64 * 8 - bits) as u32;
    buf[bytes - 1] &= 0xFFu8 >> spare;
    BigUint::from_bytes_le(&buf)
}

/// Uniform index in `[0, 2^bits)` other than `avoid`; needs `bits ≥ 1`.
pub(crate) fn random_other<R: Rng + ?Sized>(bits: u64, avoid: &BigUint, rng: &mut R) -> BigUint {
    assert!(bits >= 1, "a one-element range has no other index");
    loop {
        let v = random_index(bits, rng);
        if &v != avoid {
            return v;
        }
    }
}

/// Encoder and decoder decisions that differ between engines.
pub(crate) trait Code {
    /// Codewords `a^n(m)` and `x^n(m, l)` of block `block`.
    fn transmit(&mut self, block: usize, m: &BigUint, l: &BigUint) -> (Vec<usize>, Vec<usize>);

    fn cover(&mut self, block: usize, sent: &Sent, s: &[usize]) -> Covering;

    /// Step 1: joint recovery of `(m_j, l_{j−1})` from `y^n(j)`.
    fn step1(&mut self, block: usize, sent: &Sent, y: &[usize]) -> Cloud;

    /// Step 2: the description index of block `block` inside bin `l_hat`.
    fn step2(&mut self, block: usize, past: &Past, l_hat: &BigUint) -> Description;
}

/// What the encoder transmitted in a block.
pub(crate) struct Sent {
    pub m: BigUint,
    pub l_prev: BigUint,
    pub a: Vec<usize>,
    pub x: Vec<usize>,
}

pub(crate) struct Covering {
    pub k: BigUint,
    pub u: Vec<usize>,
    pub ok: bool,
    /// Engine-private memory of the other covering candidates.
    pub typical_others: implicit::TypicalCount,
}

/// Step-1 decision: a cloud and its codewords as the decoder sees them.
pub(crate) struct Cloud {
    pub m: BigUint,
    pub l_prev: BigUint,
    pub a: Vec<usize>,
    pub x: Vec<usize>,
    pub unique: bool,
}

pub(crate) struct Description {
    pub k: BigUint,
    pub u: Vec<usize>,
}

/// A finished block awaiting its description decode.
pub(crate) struct Past {
    pub sent: Sent,
    pub s: Vec<usize>,
    pub y: Vec<usize>,
    pub covering: Covering,
    pub cloud: Cloud,
}

fn hex(v: &BigUint) -> String {
    format!("{v:x}")
}

/// Runs `b` blocks of the scheme and reports error and distortion.
pub fn run_block_markov(
    spec: &ChannelSpec,
    policy: &Policy,
    config: &SimConfig,
) -> Result<SimResult> {
    config.validate()?;
    let model = Model::new(spec, policy)?;
    let rates = derive_code_rates(spec, policy, config.delta)?;
    if config.rate_r > rates.r_max + 1e-12 && !config.allow_rate_above_max {
        return Err(Error::InvalidArgument(format!(
            "rate {} exceeds R_max = {:.6} for this policy and margin",
            config.rate_r, rates.r_max
        )));
    }
    let exps = Exponents::new(config.n, config.rate_r, &rates);
    let fits = exps.log2_codebook_symbols(config.n) <= (CODEBOOK_SYMBOL_CAP as f64).log2();
    let engine = match config.engine {
        Engine::Auto if fits => Engine::Explicit,
        Engine::Auto => Engine::Implicit,
        e => e,
    };
    let mut code: Box<dyn Code + '_> = match engine {
        Engine::Explicit => Box::new(explicit::ExplicitCode::new(&model, config, exps)?),
        _ => Box::new(implicit::ImplicitCode::new(&model, config, exps)),
    };
    let mut source = stream(config.seed, SOURCE_STREAM);

    let mut records: Vec<BlockRecord> = Vec::with_capacity(config.b);
    let mut message_errors = 0usize;
    let mut covering_failures = 0usize;
    let mut description_errors = 0usize;
    let mut distortion_sum = 0.0;
    let mut l_prev = BigUint::ZERO;
    let mut past: Option<Past> = None;
    for block in 1..=config.b {
        let m = random_index(exps.message, &mut source);
        let (a, x) = code.transmit(block, &m, &l_prev);
        let s = model.state(&a, &mut source);
        let y = model.output(&a, &x, &s, &mut source);
        let sent = Sent { m, l_prev, a, x };
        let covering = code.cover(block, &sent, &s);
        if !covering.ok {
            covering_failures += 1;
        }
        let l = &covering.k >> exps.bin_width();
        let cloud = code.step1(block, &sent, &y);
        let decode_ok = cloud.unique && cloud.m == sent.m && cloud.l_prev == sent.l_prev;
        if !(cloud.unique && cloud.m == sent.m) {
            message_errors += 1;
        }
        records.push(BlockRecord {
            block,
            m: hex(&sent.m),
            m_hat: hex(&cloud.m),
            l: hex(&l),
            l_hat: None,
            k: hex(&covering.k),
            k_hat: None,
            covering_ok: covering.ok,
            decode_ok,
            distortion: None,
        });
        if let Some(prev) = past.take() {
            let l_hat = cloud.l_prev.clone();
            let desc = code.step2(block - 1, &prev, &l_hat);
            let d = model.distortion(&prev.s, &desc.u, &prev.cloud.x, &prev.cloud.a, &prev.y);
            distortion_sum += d;
            if desc.k != prev.covering.k {
                description_errors += 1;
            }
            let r = &mut records[block - 2];
            r.l_hat = Some(hex(&l_hat));
            r.k_hat = Some(hex(&desc.k));
            r.distortion = Some(d);
        }
        l_prev = l;
        past = Some(Past {
            sent,
            s,
            y,
            covering,
            cloud,
        });
    }
    Ok(SimResult {
        empirical_message_error: message_errors as f64 / config.b as f64,
        empirical_distortion: distortion_sum / (config.b - 1) as f64,
        encoder_covering_failures: covering_failures,
        description_errors,
        engine,
        rates,
        exponents: exps,
        config: config.clone(),
        blocks: records,
    })
}

/// Plug-in estimates of the single-letter quantities behind the code rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimates {
    /// `I(U,A,X;Y)`
    pub i_uax_y: f64,
    /// `I(U,X;S|A)`
    pub i_ux_s_given_a: f64,
    /// `I(U;S|X,A)`
    pub i_u_s_given_xa: f64,
    /// `I(U;Y|X,A)`
    pub i_u_y_given_xa: f64,
}

impl MiEstimates {
    fn of(joint: &JointDistribution) -> Result<Self> {
        use Var::*;
        Ok(Self {
            i_uax_y: mutual_information(joint, [U, A, X], Y)?,
            i_ux_s_given_a: conditional_mutual_information(joint, [U, X], S, A)?,
            i_u_s_given_xa: conditional_mutual_information(joint, U, S, [X, A])?,
            i_u_y_given_xa: conditional_mutual_information(joint, U, Y, [X, A])?,
        })
    }

    /// Exact values on the policy-induced joint.
    pub fn exact(spec: &ChannelSpec, policy: &Policy) -> Result<Self> {
        Self::of(&assemble_joint(spec, policy)?)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.i_uax_y - other.i_uax_y,
            self.i_ux_s_given_a - other.i_ux_s_given_a,
            self.i_u_s_given_xa - other.i_u_s_given_xa,
            self.i_u_y_given_xa - other.i_u_y_given_xa,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Draws `n` i.i.d. tuples from the policy-induced joint and evaluates the
/// quantities on their empirical distribution.
pub fn empirical_mi_check(
    spec: &ChannelSpec,
    policy: &Policy,
    n: usize,
    seed: u64,
) -> Result<MiEstimates> {
    check_policy(spec, policy)?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let nu = policy.alpha_u();
    let sizes = [spec.alpha_a, spec.alpha_x, spec.alpha_s, nu, spec.alpha_y];
    let mut counts = vec![0u64; sizes.iter().product()];
    let mut rng = stream(seed, SOURCE_STREAM);
    for _ in 0..n {
        let a = draw(&policy.p_a, &mut rng);
        let x = draw(&policy.p_x_given_a[a], &mut rng);
        let s = draw(&spec.state_given_action[a], &mut rng);
        let u = draw(&policy.p_u_given_xsa[x][s][a], &mut rng);
        let y = draw(&spec.output_given_xsa[x][s][a], &mut rng);
        counts[(((a * sizes[1] + x) * sizes[2] + s) * sizes[3] + u) * sizes[4] + y] += 1;
    }
    let p = counts.iter().map(|&c| c as f64 / n as f64).collect();
    MiEstimates::of(&JointDistribution::from_table(sizes, p)?)
}

pub(crate) fn log_factorials(n: usize) -> LogFactorials {
    LogFactorials::new(n)
}
