//! Stored codebooks and exhaustive typicality search.

use std::collections::HashMap;
use std::ops::Range;

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::implicit::TypicalCount;
use super::typical::draw;
use super::{
    derive_code_rates, stream, Cloud, Code, CodeRates, Covering, Description, Exponents, Model,
    Past, Sent, SimConfig, CODEBOOK_STREAM, DECODER_STREAM, ENCODER_STREAM,
};
use crate::channel::ChannelSpec;
use crate::infotheory::Policy;
use crate::{Error, Result};

/// Largest number of symbols an explicit codebook may hold.
pub const CODEBOOK_SYMBOL_CAP: usize = 1 << 24;

/// One block's random code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub n: usize,
    pub exponents: Exponents,
    /// `a^n(m)`
    pub actions: Vec<Vec<u16>>,
    /// `x^n(m, l)` at `m·L + l`
    pub inputs: Vec<Vec<u16>>,
    /// `u^n(k | m, l)` at `(m·L + l)·K + k`
    pub descriptions: Vec<Vec<u16>>,
}

impl Codebook {
    pub fn messages(&self) -> usize {
        1 << self.exponents.message
    }

    pub fn bins(&self) -> usize {
        1 << self.exponents.bin
    }

    /// Descriptions per `(m, l)` cloud.
    pub fn descriptions_per_cloud(&self) -> usize {
        1 << self.exponents.description
    }

    pub fn bin_of(&self, k: usize) -> usize {
        k >> self.exponents.bin_width()
    }

    /// Description indices of bin `l`; all bins have equal size.
    pub fn bin(&self, l: usize) -> Range<usize> {
        let w = self.exponents.bin_width();
        (l << w)..((l + 1) << w)
    }

    pub fn action(&self, m: usize) -> &[u16] {
        &self.actions[m]
    }

    pub fn input(&self, m: usize, l: usize) -> &[u16] {
        &self.inputs[m * self.bins() + l]
    }

    pub fn description(&self, m: usize, l: usize, k: usize) -> &[u16] {
        &self.descriptions[(m * self.bins() + l) * self.descriptions_per_cloud() + k]
    }

    /// SHA-256 over every codeword, in storage order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for w in self
            .actions
            .iter()
            .chain(&self.inputs)
            .chain(&self.descriptions)
        {
            for s in w {
                h.update(s.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_size(exps: &Exponents, n: usize) -> Result<()> {
    let log2 = exps.log2_codebook_symbols(n);
    let cap = CODEBOOK_SYMBOL_CAP as f64;
    if log2 > cap.log2() {
        return Err(Error::CapExceeded {
            what: "explicit codebook symbols".into(),
            estimate: 2f64.powf(log2),
            cap,
        });
    }
    Ok(())
}

fn draw_codebook(
    model: &Model,
    exps: Exponents,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Codebook> {
    check_size(&exps, n)?;
    if model.na.max(model.nx).max(model.nu) > u16::MAX as usize + 1 {
        return Err(Error::InvalidArgument(
            "alphabets beyond 65536 symbols are not simulated".into(),
        ));
    }
    let p = model.policy;
    let (nm, nl, nk) = (
        1usize << exps.message,
        1usize << exps.bin,
        1usize << exps.description,
    );
    let actions: Vec<Vec<u16>> = (0..nm)
        .map(|_| (0..n).map(|_| draw(&p.p_a, rng) as u16).collect())
        .collect();
    let mut inputs = Vec::with_capacity(nm * nl);
    let mut descriptions = Vec::with_capacity(nm * nl * nk);
    for a in &actions {
        for _ in 0..nl {
            let x: Vec<u16> = a
                .iter()
                .map(|&a| draw(&p.p_x_given_a[a as usize], rng) as u16)
                .collect();
            for _ in 0..nk {
                let u: Vec<u16> = (0..n)
                    .map(|i| {
                        draw(
                            &model.p_u_given_xa[a[i] as usize * model.nx + x[i] as usize],
                            rng,
                        ) as u16
                    })
                    .collect();
                descriptions.push(u);
            }
            inputs.push(x);
        }
    }
    Ok(Codebook {
        n,
        exponents: exps,
        actions,
        inputs,
        descriptions,
    })
}

/// The first block's codebook of a run with this configuration.
pub fn generate_codebook(
    spec: &ChannelSpec,
    policy: &Policy,
    config: &SimConfig,
    rates: &CodeRates,
) -> Result<Codebook> {
    config.validate()?;
    let model = Model::new(spec, policy)?;
    let exps = Exponents::new(config.n, config.rate_r, rates);
    draw_codebook(&model, exps, config.n, &mut block_stream(config.seed, 1))
}

fn block_stream(seed: u64, block: usize) -> ChaCha8Rng {
    stream(seed, CODEBOOK_STREAM + block as u64)
}

fn widen(w: &[u16]) -> Vec<usize> {
    w.iter().map(|&s| s as usize).collect()
}

fn small(v: &BigUint) -> usize {
    u64::try_from(v).expect("explicit indices fit in u64") as usize
}

pub(crate) struct ExplicitCode<'m> {
    model: &'m Model<'m>,
    eps_enc: f64,
    eps_dec: f64,
    exps: Exponents,
    n: usize,
    seed: u64,
    books: HashMap<usize, Codebook>,
    enc: ChaCha8Rng,
    dec: ChaCha8Rng,
}

impl<'m> ExplicitCode<'m> {
    pub fn new(model: &'m Model<'m>, config: &SimConfig, exps: Exponents) -> Result<Self> {
        check_size(&exps, config.n)?;
        // keeps the rates consistent with the policy the model was built from
        debug_assert!(derive_code_rates(model.spec, model.policy, config.delta).is_ok());
        Ok(Self {
            model,
            eps_enc: config.epsilon_enc,
            eps_dec: config.epsilon_dec,
            exps,
            n: config.n,
            seed: config.seed,
            books: HashMap::new(),
            enc: stream(config.seed, ENCODER_STREAM),
            dec: stream(config.seed, DECODER_STREAM),
        })
    }

    fn book(&mut self, block: usize) -> &Codebook {
        if !self.books.contains_key(&block) {
            // only the current and previous blocks are ever consulted
            self.books.retain(|&b, _| b + 1 >= block);
            let cb = draw_codebook(
                self.model,
                self.exps,
                self.n,
                &mut block_stream(self.seed, block),
            )
            .expect("size checked at construction");
            self.books.insert(block, cb);
        }
        &self.books[&block]
    }
}

/// Decoder pick: uniform among the candidates at the lowest passing rung, or
/// among all candidates when none passes at any rung.
fn choose(rungs: &[Option<usize>], rng: &mut ChaCha8Rng) -> (usize, Option<usize>) {
    let best = rungs.iter().flatten().min().copied();
    let pool: Vec<usize> = match best {
        Some(r) => (0..rungs.len()).filter(|&i| rungs[i] == Some(r)).collect(),
        None => (0..rungs.len()).collect(),
    };
    (pool[rng.random_range(0..pool.len())], best)
}

impl Code for ExplicitCode<'_> {
    fn transmit(&mut self, block: usize, m: &BigUint, l: &BigUint) -> (Vec<usize>, Vec<usize>) {
        let (m, l) = (small(m), small(l));
        let cb = self.book(block);
        (widen(cb.action(m)), widen(cb.input(m, l)))
    }

    fn cover(&mut self, block: usize, sent: &Sent, s: &[usize]) -> Covering {
        let (m, l) = (small(&sent.m), small(&sent.l_prev));
        let model = self.model;
        let eps = self.eps_enc;
        let groups = model.groups_axs(&sent.a, &sent.x, s);
        let test = model.covering_test(&groups, eps);
        let cb = self.book(block);
        let nk = cb.descriptions_per_cloud();
        let passing: Vec<usize> = (0..nk)
            .filter(|&k| test.check(&widen(cb.description(m, l, k))))
            .collect();
        let ok = !passing.is_empty();
        let k = if ok {
            passing[self.enc.random_range(0..passing.len())]
        } else {
            self.enc.random_range(0..nk)
        };
        let u = widen(self.book(block).description(m, l, k));
        Covering {
            k: BigUint::from(k),
            u,
            ok,
            typical_others: TypicalCount::NONE,
        }
    }

    fn step1(&mut self, block: usize, sent: &Sent, y: &[usize]) -> Cloud {
        let model = self.model;
        let eps = self.eps_dec;
        let gy = model.groups_y(y);
        let test = model.step1_test(&gy, eps);
        let known = (block == 1).then(|| small(&sent.l_prev));
        let cb = self.book(block);
        let ls: Vec<usize> = match known {
            Some(l) => vec![l],
            None => (0..cb.bins()).collect(),
        };
        let candidates: Vec<(usize, usize)> = (0..cb.messages())
            .flat_map(|m| ls.iter().map(move |&l| (m, l)))
            .collect();
        let rungs: Vec<Option<usize>> = candidates
            .iter()
            .map(|&(m, l)| test.rung(&model.ax_value(&widen(cb.action(m)), &widen(cb.input(m, l)))))
            .collect();
        let truth = (small(&sent.m), small(&sent.l_prev));
        let passing: Vec<usize> = (0..candidates.len())
            .filter(|&i| rungs[i] == Some(0))
            .collect();
        let unique = passing.len() == 1 && candidates[passing[0]] == truth;
        let (m, l) = candidates[choose(&rungs, &mut self.dec).0];
        let cb = self.book(block);
        Cloud {
            m: BigUint::from(m),
            l_prev: BigUint::from(l),
            a: widen(cb.action(m)),
            x: widen(cb.input(m, l)),
            unique,
        }
    }

    fn step2(&mut self, block: usize, past: &Past, l_hat: &BigUint) -> Description {
        let model = self.model;
        let eps = self.eps_dec;
        let cloud = &past.cloud;
        let groups = model.groups_axy(&cloud.a, &cloud.x, &past.y);
        let test = model.step2_test(&groups, eps);
        let (m, l_prev, l) = (small(&cloud.m), small(&cloud.l_prev), small(l_hat));
        let cb = self.book(block);
        let bin: Vec<usize> = cb.bin(l).collect();
        let rungs: Vec<Option<usize>> = bin
            .iter()
            .map(|&k| test.rung(&widen(cb.description(m, l_prev, k))))
            .collect();
        let k = bin[choose(&rungs, &mut self.dec).0];
        let cb = self.book(block);
        Description {
            k: BigUint::from(k),
            u: widen(cb.description(m, l_prev, k)),
        }
    }
}
