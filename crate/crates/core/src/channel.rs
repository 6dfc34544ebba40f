//! Discrete channels with action-dependent state.
//!
//! A [`ChannelSpec`] holds the state law `p(s|a)`, the output kernel
//! `p(y|x,s,a)` and a distortion matrix `d(s,ŝ)`. Kernels are stored in the
//! general form that may depend on the action; a kernel of the form
//! `p(y|x,s)` is simply constant along `a`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::{Error, Result, PROB_TOL};

/// Entries in `[-NEG_CLAMP, 0)` are treated as serialization noise and clamped.
const NEG_CLAMP: f64 = 1e-12;

/// One failed invariant, with an index path such as `p_s_given_a[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub alpha_a: usize,
    pub alpha_x: usize,
    pub alpha_s: usize,
    /// Upper bound on the auxiliary alphabet used by the solver.
    pub alpha_u_max: usize,
    pub alpha_shat: usize,
    pub alpha_y: usize,
    /// `p(s|a)`, indexed `[a][s]`.
    pub state_given_action: Vec<Vec<f64>>,
    /// `p(y|x,s,a)`, indexed `[x][s][a][y]`.
    pub output_given_xsa: Vec<Vec<Vec<Vec<f64>>>>,
    /// `d(s,ŝ)`, indexed `[s][ŝ]`.
    pub distortion: Vec<Vec<f64>>,
}

/// Auxiliary cardinality used when a file does not set one.
pub fn default_u_max(alpha_x: usize, alpha_s: usize, alpha_a: usize) -> usize {
    alpha_x * alpha_s * alpha_a + 2
}

/// Hamming distortion on an alphabet of size `n` (reconstruction alphabet = state alphabet).
pub fn hamming(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|s| (0..n).map(|t| if s == t { 0.0 } else { 1.0 }).collect())
        .collect()
}

impl ChannelSpec {
    /// Builds a spec from closures. `alpha_u_max` defaults to `|X||S||A|+2`.
    pub fn from_fn(
        alpha_a: usize,
        alpha_x: usize,
        alpha_s: usize,
        alpha_y: usize,
        state: impl Fn(usize, usize) -> f64,
        output: impl Fn(usize, usize, usize, usize) -> f64,
        distortion: Vec<Vec<f64>>,
    ) -> Self {
        let alpha_shat = distortion.first().map_or(0, Vec::len);
        Self {
            alpha_a,
            alpha_x,
            alpha_s,
            alpha_u_max: default_u_max(alpha_x, alpha_s, alpha_a),
            alpha_shat,
            alpha_y,
            state_given_action: (0..alpha_a)
                .map(|a| (0..alpha_s).map(|s| state(a, s)).collect())
                .collect(),
            output_given_xsa: (0..alpha_x)
                .map(|x| {
                    (0..alpha_s)
                        .map(|s| {
                            (0..alpha_a)
                                .map(|a| (0..alpha_y).map(|y| output(x, s, a, y)).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            distortion,
        }
    }

    pub fn with_u_max(mut self, u_max: usize) -> Self {
        self.alpha_u_max = u_max;
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_channel(self)
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::InvalidSpec(msgs.join("; ")))
        }
    }

    /// `p(y|x,a) = Σ_s p(s|a) p(y|x,s,a)`, indexed `[a][x][y]`.
    pub fn output_given_xa(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.alpha_a)
            .map(|a| {
                (0..self.alpha_x)
                    .map(|x| {
                        (0..self.alpha_y)
                            .map(|y| {
                                (0..self.alpha_s)
                                    .map(|s| {
                                        self.state_given_action[a][s]
                                            * self.output_given_xsa[x][s][a][y]
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest expected distortion any policy can incur once the estimator is
    /// allowed to see the action: `max_a min_ŝ Σ_s p(s|a) d(s,ŝ)`. Budgets at
    /// or above this value leave the distortion constraint inactive.
    pub fn trivial_distortion(&self) -> f64 {
        self.state_given_action
            .iter()
            .map(|ps| {
                (0..self.alpha_shat)
                    .map(|t| {
                        ps.iter()
                            .enumerate()
                            .map(|(s, p)| p * self.distortion[s][t])
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// True when `p(y|x,s,a)` does not depend on `x` (within `tol`).
    pub fn output_ignores_input(&self, tol: f64) -> bool {
        (1..self.alpha_x).all(|x| {
            (0..self.alpha_s).all(|s| {
                (0..self.alpha_a).all(|a| {
                    (0..self.alpha_y).all(|y| {
                        (self.output_given_xsa[x][s][a][y] - self.output_given_xsa[0][s][a][y])
                            .abs()
                            <= tol
                    })
                })
            })
        })
    }

    /// Short content hash used to tag curves and manifests.
    pub fn fingerprint(&self) -> String {
        let text = self.to_json();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            alpha: ChannelAlphabets {
                a: self.alpha_a,
                x: self.alpha_x,
                s: self.alpha_s,
                u_max: Some(self.alpha_u_max),
                shat: self.alpha_shat,
                y: self.alpha_y,
            },
            p_s_given_a: self.state_given_action.clone(),
            p_y_given_xsa: self.output_given_xsa.clone(),
            distortion: self.distortion.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("channel serializes")
    }

    /// Parses the channel file format. Shapes are not checked here; run
    /// [`validate_channel`] on the result.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text)?;
        Ok(file.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAlphabets {
    pub a: usize,
    pub x: usize,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<usize>,
    pub shat: usize,
    pub y: usize,
}

/// On-disk channel format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub alpha: ChannelAlphabets,
    pub p_s_given_a: Vec<Vec<f64>>,
    pub p_y_given_xsa: Vec<Vec<Vec<Vec<f64>>>>,
    pub distortion: Vec<Vec<f64>>,
}

impl From<ChannelFile> for ChannelSpec {
    fn from(f: ChannelFile) -> Self {
        let mut spec = ChannelSpec {
            alpha_a: f.alpha.a,
            alpha_x: f.alpha.x,
            alpha_s: f.alpha.s,
            alpha_u_max: f
                .alpha
                .u_max
                .unwrap_or_else(|| default_u_max(f.alpha.x, f.alpha.s, f.alpha.a)),
            alpha_shat: f.alpha.shat,
            alpha_y: f.alpha.y,
            state_given_action: f.p_s_given_a,
            output_given_xsa: f.p_y_given_xsa,
            distortion: f.distortion,
        };
        spec.state_given_action
            .iter_mut()
            .flatten()
            .for_each(clamp_noise);
        spec.output_given_xsa
            .iter_mut()
            .flatten()
            .flatten()
            .flatten()
            .for_each(clamp_noise);
        spec
    }
}

fn clamp_noise(p: &mut f64) {
    if *p < 0.0 && *p >= -NEG_CLAMP {
        *p = 0.0;
    }
}

fn check_pmf(row: &[f64], len: usize, path: &str, out: &mut Vec<Violation>) {
    if row.len() != len {
        out.push(Violation::new(
            path,
            format!("expected {len} entries, found {}", row.len()),
        ));
        return;
    }
    for (i, p) in row.iter().enumerate() {
        if !p.is_finite() || *p < 0.0 {
            out.push(Violation::new(
                format!("{path}[{i}]"),
                format!("probability {p} is not a finite nonnegative number"),
            ));
        }
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        out.push(Violation::new(path, format!("sums to {total}, expected 1")));
    }
}

fn check_len<T>(v: &[T], len: usize, path: &str, out: &mut Vec<Violation>) -> bool {
    if v.len() == len {
        true
    } else {
        out.push(Violation::new(
            path,
            format!("expected {len} entries, found {}", v.len()),
        ));
        false
    }
}

fn check_distortion(d: &[Vec<f64>], alpha_s: usize, alpha_shat: usize, out: &mut Vec<Violation>) {
    if !check_len(d, alpha_s, "distortion", out) {
        return;
    }
    for (s, row) in d.iter().enumerate() {
        let path = format!("distortion[{s}]");
        if !check_len(row, alpha_shat, &path, out) {
            continue;
        }
        for (t, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                out.push(Violation::new(
                    format!("{path}[{t}]"),
                    format!("distortion {v} is not a finite nonnegative number"),
                ));
            }
        }
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        if row.is_empty() || min != 0.0 {
            out.push(Violation::new(
                path,
                format!("no zero-distortion reconstruction (row minimum {min})"),
            ));
        }
    }
}

fn check_alphabets(sizes: &[(&str, usize)], out: &mut Vec<Violation>) -> bool {
    let mut ok = true;
    for (name, n) in sizes {
        if *n == 0 {
            out.push(Violation::new(
                format!("alpha.{name}"),
                "alphabet size must be positive",
            ));
            ok = false;
        }
    }
    ok
}

/// Reports every invariant violation; an empty list means the spec is valid.
pub fn validate_channel(spec: &ChannelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if !check_alphabets(
        &[
            ("a", spec.alpha_a),
            ("x", spec.alpha_x),
            ("s", spec.alpha_s),
            ("u_max", spec.alpha_u_max),
            ("shat", spec.alpha_shat),
            ("y", spec.alpha_y),
        ],
        &mut out,
    ) {
        return out;
    }
    if check_len(
        &spec.state_given_action,
        spec.alpha_a,
        "p_s_given_a",
        &mut out,
    ) {
        for (a, row) in spec.state_given_action.iter().enumerate() {
            check_pmf(row, spec.alpha_s, &format!("p_s_given_a[{a}]"), &mut out);
        }
    }
    if check_len(
        &spec.output_given_xsa,
        spec.alpha_x,
        "p_y_given_xsa",
        &mut out,
    ) {
        for (x, by_s) in spec.output_given_xsa.iter().enumerate() {
            let px = format!("p_y_given_xsa[{x}]");
            if !check_len(by_s, spec.alpha_s, &px, &mut out) {
                continue;
            }
            for (s, by_a) in by_s.iter().enumerate() {
                let ps = format!("{px}[{s}]");
                if !check_len(by_a, spec.alpha_a, &ps, &mut out) {
                    continue;
                }
                for (a, row) in by_a.iter().enumerate() {
                    check_pmf(row, spec.alpha_y, &format!("{ps}[{a}]"), &mut out);
                }
            }
        }
    }
    check_distortion(&spec.distortion, spec.alpha_s, spec.alpha_shat, &mut out);
    out
}

/// Folds the action into the state: `S' = (S, A)` with index `s*|A| + a'`.
///
/// The new kernel depends on `(x, s')` only and the distortion ignores the
/// action component.
pub fn augment_state(spec: &ChannelSpec) -> ChannelSpec {
    let na = spec.alpha_a;
    let ns = spec.alpha_s * na;
    let mut out = spec.clone();
    out.alpha_s = ns;
    out.state_given_action = (0..na)
        .map(|a| {
            (0..ns)
                .map(|sp| {
                    let (s, ap) = (sp / na, sp % na);
                    if ap == a {
                        spec.state_given_action[a][s]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    out.output_given_xsa = (0..spec.alpha_x)
        .map(|x| {
            (0..ns)
                .map(|sp| {
                    let (s, ap) = (sp / na, sp % na);
                    (0..na)
                        .map(|_| spec.output_given_xsa[x][s][ap].clone())
                        .collect()
                })
                .collect()
        })
        .collect();
    out.distortion = (0..ns).map(|sp| spec.distortion[sp / na].clone()).collect();
    out
}

/// Makes the action visible at the decoder: `Y' = (Y, A)` with index `y*|A| + a'`.
pub fn reveal_actions_to_decoder(spec: &ChannelSpec) -> ChannelSpec {
    let na = spec.alpha_a;
    let ny = spec.alpha_y * na;
    let mut out = spec.clone();
    out.alpha_y = ny;
    out.output_given_xsa = spec
        .output_given_xsa
        .iter()
        .map(|by_s| {
            by_s.iter()
                .map(|by_a| {
                    by_a.iter()
                        .enumerate()
                        .map(|(a, row)| {
                            (0..ny)
                                .map(|yp| if yp % na == a { row[yp / na] } else { 0.0 })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    out
}

/// State-dependent multiple-access channel with a common message.
#[derive(Debug, Clone, PartialEq)]
pub struct MacSpec {
    pub alpha_x1: usize,
    pub alpha_x2: usize,
    pub alpha_s: usize,
    pub alpha_u_max: usize,
    pub alpha_shat: usize,
    pub alpha_y: usize,
    pub state_pmf: Vec<f64>,
    /// `p(y|s,x1,x2)`, indexed `[s][x1][x2][y]`.
    pub output_given_sx1x2: Vec<Vec<Vec<Vec<f64>>>>,
    pub distortion: Vec<Vec<f64>>,
}

impl MacSpec {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !check_alphabets(
            &[
                ("x1", self.alpha_x1),
                ("x2", self.alpha_x2),
                ("s", self.alpha_s),
                ("u_max", self.alpha_u_max),
                ("shat", self.alpha_shat),
                ("y", self.alpha_y),
            ],
            &mut out,
        ) {
            return out;
        }
        check_pmf(&self.state_pmf, self.alpha_s, "p_s", &mut out);
        if check_len(
            &self.output_given_sx1x2,
            self.alpha_s,
            "p_y_given_sx1x2",
            &mut out,
        ) {
            for (s, by_x1) in self.output_given_sx1x2.iter().enumerate() {
                let ps = format!("p_y_given_sx1x2[{s}]");
                if !check_len(by_x1, self.alpha_x1, &ps, &mut out) {
                    continue;
                }
                for (x1, by_x2) in by_x1.iter().enumerate() {
                    let px = format!("{ps}[{x1}]");
                    if !check_len(by_x2, self.alpha_x2, &px, &mut out) {
                        continue;
                    }
                    for (x2, row) in by_x2.iter().enumerate() {
                        check_pmf(row, self.alpha_y, &format!("{px}[{x2}]"), &mut out);
                    }
                }
            }
        }
        check_distortion(&self.distortion, self.alpha_s, self.alpha_shat, &mut out);
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MacFile = serde_json::from_str(text)?;
        Ok(file.into())
    }

    pub fn to_json(&self) -> String {
        let file = MacFile {
            alpha: MacAlphabets {
                x1: self.alpha_x1,
                x2: self.alpha_x2,
                s: self.alpha_s,
                u_max: Some(self.alpha_u_max),
                shat: self.alpha_shat,
                y: self.alpha_y,
            },
            p_s: self.state_pmf.clone(),
            p_y_given_sx1x2: self.output_given_sx1x2.clone(),
            distortion: self.distortion.clone(),
        };
        serde_json::to_string(&file).expect("mac serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacAlphabets {
    pub x1: usize,
    pub x2: usize,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<usize>,
    pub shat: usize,
    pub y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacFile {
    pub alpha: MacAlphabets,
    pub p_s: Vec<f64>,
    pub p_y_given_sx1x2: Vec<Vec<Vec<Vec<f64>>>>,
    pub distortion: Vec<Vec<f64>>,
}

impl From<MacFile> for MacSpec {
    fn from(f: MacFile) -> Self {
        let mut mac = MacSpec {
            alpha_x1: f.alpha.x1,
            alpha_x2: f.alpha.x2,
            alpha_s: f.alpha.s,
            alpha_u_max: f
                .alpha
                .u_max
                .unwrap_or_else(|| default_u_max(f.alpha.x1, f.alpha.s, f.alpha.x2)),
            alpha_shat: f.alpha.shat,
            alpha_y: f.alpha.y,
            state_pmf: f.p_s,
            output_given_sx1x2: f.p_y_given_sx1x2,
            distortion: f.distortion,
        };
        mac.state_pmf.iter_mut().for_each(clamp_noise);
        mac.output_given_sx1x2
            .iter_mut()
            .flatten()
            .flatten()
            .flatten()
            .for_each(clamp_noise);
        mac
    }
}

/// Casts a MAC as an action channel: `A = X₂`, `X = X₁`, `p(s|a) = p(s)`.
pub fn mac_adapter(mac: &MacSpec) -> ChannelSpec {
    ChannelSpec {
        alpha_a: mac.alpha_x2,
        alpha_x: mac.alpha_x1,
        alpha_s: mac.alpha_s,
        alpha_u_max: mac.alpha_u_max,
        alpha_shat: mac.alpha_shat,
        alpha_y: mac.alpha_y,
        state_given_action: vec![mac.state_pmf.clone(); mac.alpha_x2],
        output_given_xsa: (0..mac.alpha_x1)
            .map(|x| {
                (0..mac.alpha_s)
                    .map(|s| mac.output_given_sx1x2[s][x].clone())
                    .collect()
            })
            .collect(),
        distortion: mac.distortion.clone(),
    }
}

/// Either kind of specification file, detected from its fields.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecFile {
    Channel(ChannelSpec),
    Mac(MacSpec),
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("p_y_given_sx1x2").is_some() {
            Ok(SpecFile::Mac(
                serde_json::from_value::<MacFile>(value)?.into(),
            ))
        } else {
            Ok(SpecFile::Channel(
                serde_json::from_value::<ChannelFile>(value)?.into(),
            ))
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            SpecFile::Channel(c) => c.validate(),
            SpecFile::Mac(m) => m.validate(),
        }
    }

    /// The channel the solver works on (MACs go through [`mac_adapter`]).
    pub fn into_channel(self) -> ChannelSpec {
        match self {
            SpecFile::Channel(c) => c,
            SpecFile::Mac(m) => mac_adapter(&m),
        }
    }
}

/// Instances used throughout the tests and examples.
pub mod instances {
    use super::*;

    /// Clean-state channel: one action, `Y = X` noiselessly, `S ~ Bern(½)`
    /// independent of everything, Hamming distortion.
    pub fn clean_state() -> ChannelSpec {
        ChannelSpec::from_fn(
            1,
            2,
            2,
            2,
            |_, _| 0.5,
            |x, _, _, y| if x == y { 1.0 } else { 0.0 },
            hamming(2),
        )
    }

    /// Known-interference channel: one action, `Y = X ⊕ S` with `S ~ Bern(q)`.
    pub fn xor_state(q: f64) -> ChannelSpec {
        ChannelSpec::from_fn(
            1,
            2,
            2,
            2,
            |_, s| if s == 1 { q } else { 1.0 - q },
            |x, s, _, y| if (x ^ s) == y { 1.0 } else { 0.0 },
            hamming(2),
        )
    }

    /// Output constant, `S ~ Bern(½)`: nothing reaches the decoder.
    pub fn constant_output() -> ChannelSpec {
        ChannelSpec::from_fn(1, 2, 2, 1, |_, _| 0.5, |_, _, _, _| 1.0, hamming(2))
    }

    /// Noiseless `Y = (X, A)` with binary input and action; `y = 2a + x`.
    /// The state is a fair bit the decoder never sees.
    pub fn noiseless_input_action() -> ChannelSpec {
        ChannelSpec::from_fn(
            2,
            2,
            2,
            4,
            |_, _| 0.5,
            |x, _, a, y| if y == 2 * a + x { 1.0 } else { 0.0 },
            hamming(2),
        )
    }
}
