//! Joint distributions over `(A, X, S, U, Y)` and the information
//! quantities evaluated on them. All logarithms are base 2.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::channel::ChannelSpec;
use crate::{Error, Result, PROB_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    A,
    X,
    S,
    U,
    Y,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::A, Var::X, Var::S, Var::U, Var::Y];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Var::A => "A",
            Var::X => "X",
            Var::S => "S",
            Var::U => "U",
            Var::Y => "Y",
        };
        f.write_str(name)
    }
}

/// A subset of `{A, X, S, U, Y}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn contains(self, v: Var) -> bool {
        self.0 & v.bit() != 0
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }
}

impl From<Var> for VarSet {
    fn from(v: Var) -> Self {
        VarSet(v.bit())
    }
}

impl<const N: usize> From<[Var; N]> for VarSet {
    fn from(vs: [Var; N]) -> Self {
        VarSet(vs.iter().fold(0, |m, v| m | v.bit()))
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Deterministic reconstruction map `ŝ(u, x, a, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    into = "Vec<Vec<Vec<Vec<usize>>>>",
    try_from = "Vec<Vec<Vec<Vec<usize>>>>"
)]
pub struct Estimator {
    nu: usize,
    nx: usize,
    na: usize,
    ny: usize,
    map: Vec<usize>,
}

impl Estimator {
    pub fn constant(nu: usize, nx: usize, na: usize, ny: usize, shat: usize) -> Self {
        Self {
            nu,
            nx,
            na,
            ny,
            map: vec![shat; nu * nx * na * ny],
        }
    }

    pub fn from_fn(
        nu: usize,
        nx: usize,
        na: usize,
        ny: usize,
        f: impl Fn(usize, usize, usize, usize) -> usize,
    ) -> Self {
        let mut e = Self::constant(nu, nx, na, ny, 0);
        for u in 0..nu {
            for x in 0..nx {
                for a in 0..na {
                    for y in 0..ny {
                        e.set(u, x, a, y, f(u, x, a, y));
                    }
                }
            }
        }
        e
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.nu, self.nx, self.na, self.ny)
    }

    fn idx(&self, u: usize, x: usize, a: usize, y: usize) -> usize {
        ((u * self.nx + x) * self.na + a) * self.ny + y
    }

    pub fn get(&self, u: usize, x: usize, a: usize, y: usize) -> usize {
        self.map[self.idx(u, x, a, y)]
    }

    pub fn set(&mut self, u: usize, x: usize, a: usize, y: usize, shat: usize) {
        let i = self.idx(u, x, a, y);
        self.map[i] = shat;
    }

    pub fn max_symbol(&self) -> usize {
        self.map.iter().copied().max().unwrap_or(0)
    }
}

impl From<Estimator> for Vec<Vec<Vec<Vec<usize>>>> {
    fn from(e: Estimator) -> Self {
        (0..e.nu)
            .map(|u| {
                (0..e.nx)
                    .map(|x| {
                        (0..e.na)
                            .map(|a| (0..e.ny).map(|y| e.get(u, x, a, y)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

impl TryFrom<Vec<Vec<Vec<Vec<usize>>>>> for Estimator {
    type Error = String;

    fn try_from(v: Vec<Vec<Vec<Vec<usize>>>>) -> std::result::Result<Self, String> {
        let nu = v.len();
        let nx = v.first().map_or(0, Vec::len);
        let na = v.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let ny = v
            .first()
            .and_then(|r| r.first())
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        let mut map = Vec::with_capacity(nu * nx * na * ny);
        for by_x in &v {
            if by_x.len() != nx {
                return Err("estimator array is ragged".into());
            }
            for by_a in by_x {
                if by_a.len() != na {
                    return Err("estimator array is ragged".into());
                }
                for row in by_a {
                    if row.len() != ny {
                        return Err("estimator array is ragged".into());
                    }
                    map.extend_from_slice(row);
                }
            }
        }
        Ok(Estimator {
            nu,
            nx,
            na,
            ny,
            map,
        })
    }
}

/// Factorized decision variables `p(a) p(x|a) p(u|x,s,a)` and `ŝ(u,x,a,y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub p_a: Vec<f64>,
    /// Indexed `[a][x]`.
    pub p_x_given_a: Vec<Vec<f64>>,
    /// Indexed `[x][s][a][u]`.
    pub p_u_given_xsa: Vec<Vec<Vec<Vec<f64>>>>,
    pub estimator: Estimator,
}

/// On-disk policy format; the estimator is derived when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub p_a: Vec<f64>,
    pub p_x_given_a: Vec<Vec<f64>>,
    pub p_u_given_xsa: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
}

impl Policy {
    pub fn alpha_u(&self) -> usize {
        self.p_u_given_xsa
            .first()
            .and_then(|r| r.first())
            .and_then(|r| r.first())
            .map_or(0, Vec::len)
    }

    /// Policy with a single auxiliary symbol and the best estimator.
    pub fn without_auxiliary(
        spec: &ChannelSpec,
        p_a: Vec<f64>,
        p_x_given_a: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let q = vec![vec![vec![vec![1.0]; spec.alpha_a]; spec.alpha_s]; spec.alpha_x];
        Policy::with_optimal_estimator(spec, p_a, p_x_given_a, q)
    }

    /// Builds a policy whose estimator is [`optimal_estimator`] for the induced joint.
    pub fn with_optimal_estimator(
        spec: &ChannelSpec,
        p_a: Vec<f64>,
        p_x_given_a: Vec<Vec<f64>>,
        p_u_given_xsa: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let nu = p_u_given_xsa
            .first()
            .and_then(|r| r.first())
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        let mut policy = Policy {
            p_a,
            p_x_given_a,
            p_u_given_xsa,
            estimator: Estimator::constant(nu, spec.alpha_x, spec.alpha_a, spec.alpha_y, 0),
        };
        let joint = assemble_joint(spec, &policy)?;
        policy.estimator = optimal_estimator(&joint, &spec.distortion).0;
        Ok(policy)
    }

    pub fn from_file(spec: &ChannelSpec, file: PolicyFile) -> Result<Self> {
        match file.estimator {
            Some(estimator) => {
                let policy = Policy {
                    p_a: file.p_a,
                    p_x_given_a: file.p_x_given_a,
                    p_u_given_xsa: file.p_u_given_xsa,
                    estimator,
                };
                check_policy(spec, &policy)?;
                Ok(policy)
            }
            None => {
                Policy::with_optimal_estimator(spec, file.p_a, file.p_x_given_a, file.p_u_given_xsa)
            }
        }
    }

    pub fn from_json_str(spec: &ChannelSpec, text: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(text)?;
        Policy::from_file(spec, file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }
}

fn check_dist(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(Error::AlphabetMismatch(format!(
            "{what} has {} entries, expected {len}",
            row.len()
        )));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidPolicy(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidPolicy(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// Checks that `policy` matches the alphabets of `spec` and is normalized.
pub fn check_policy(spec: &ChannelSpec, policy: &Policy) -> Result<()> {
    let nu = policy.alpha_u();
    if nu == 0 {
        return Err(Error::AlphabetMismatch(
            "auxiliary alphabet is empty".into(),
        ));
    }
    check_dist(&policy.p_a, spec.alpha_a, "p_a")?;
    if policy.p_x_given_a.len() != spec.alpha_a {
        return Err(Error::AlphabetMismatch(
            "p_x_given_a has wrong action count".into(),
        ));
    }
    for (a, row) in policy.p_x_given_a.iter().enumerate() {
        check_dist(row, spec.alpha_x, &format!("p_x_given_a[{a}]"))?;
    }
    if policy.p_u_given_xsa.len() != spec.alpha_x {
        return Err(Error::AlphabetMismatch(
            "p_u_given_xsa has wrong input count".into(),
        ));
    }
    for (x, by_s) in policy.p_u_given_xsa.iter().enumerate() {
        if by_s.len() != spec.alpha_s {
            return Err(Error::AlphabetMismatch(format!(
                "p_u_given_xsa[{x}] has wrong state count"
            )));
        }
        for (s, by_a) in by_s.iter().enumerate() {
            if by_a.len() != spec.alpha_a {
                return Err(Error::AlphabetMismatch(format!(
                    "p_u_given_xsa[{x}][{s}] has wrong action count"
                )));
            }
            for (a, row) in by_a.iter().enumerate() {
                check_dist(row, nu, &format!("p_u_given_xsa[{x}][{s}][{a}]"))?;
            }
        }
    }
    let dims = policy.estimator.dims();
    if dims != (nu, spec.alpha_x, spec.alpha_a, spec.alpha_y) {
        return Err(Error::AlphabetMismatch(format!(
            "estimator has shape {dims:?}, expected {:?}",
            (nu, spec.alpha_x, spec.alpha_a, spec.alpha_y)
        )));
    }
    if policy.estimator.max_symbol() >= spec.alpha_shat {
        return Err(Error::InvalidPolicy(
            "estimator symbol outside reconstruction alphabet".into(),
        ));
    }
    Ok(())
}

/// The pmf `p(a,x,s,u,y)` stored flat in `[a][x][s][u][y]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub p: Vec<f64>,
    pub alpha_a: usize,
    pub alpha_x: usize,
    pub alpha_s: usize,
    pub alpha_u: usize,
    pub alpha_y: usize,
}

impl JointDistribution {
    pub fn sizes(&self) -> [usize; 5] {
        [
            self.alpha_a,
            self.alpha_x,
            self.alpha_s,
            self.alpha_u,
            self.alpha_y,
        ]
    }

    pub fn index(&self, a: usize, x: usize, s: usize, u: usize, y: usize) -> usize {
        (((a * self.alpha_x + x) * self.alpha_s + s) * self.alpha_u + u) * self.alpha_y + y
    }

    pub fn get(&self, a: usize, x: usize, s: usize, u: usize, y: usize) -> f64 {
        self.p[self.index(a, x, s, u, y)]
    }

    /// Builds a joint from an arbitrary nonnegative table (used by tests and
    /// the simulator's plug-in estimates).
    pub fn from_table(sizes: [usize; 5], p: Vec<f64>) -> Result<Self> {
        let n: usize = sizes.iter().product();
        if p.len() != n {
            return Err(Error::AlphabetMismatch(format!(
                "table has {} entries, expected {n}",
                p.len()
            )));
        }
        Ok(Self {
            p,
            alpha_a: sizes[0],
            alpha_x: sizes[1],
            alpha_s: sizes[2],
            alpha_u: sizes[3],
            alpha_y: sizes[4],
        })
    }

    fn for_each(&self, mut f: impl FnMut([usize; 5], f64)) {
        let mut i = 0;
        for a in 0..self.alpha_a {
            for x in 0..self.alpha_x {
                for s in 0..self.alpha_s {
                    for u in 0..self.alpha_u {
                        for y in 0..self.alpha_y {
                            f([a, x, s, u, y], self.p[i]);
                            i += 1;
                        }
                    }
                }
            }
        }
    }

    fn sub_index(&self, set: VarSet, t: &[usize; 5]) -> usize {
        let sizes = self.sizes();
        let mut idx = 0;
        for v in set.iter() {
            let k = v as usize;
            idx = idx * sizes[k] + t[k];
        }
        idx
    }

    fn sub_len(&self, set: VarSet) -> usize {
        let sizes = self.sizes();
        set.iter().map(|v| sizes[v as usize]).product()
    }

    /// Marginal over the variables in `set`, mixed-radix in `A,X,S,U,Y` order.
    pub fn marginal(&self, set: VarSet) -> Vec<f64> {
        let mut m = vec![0.0; self.sub_len(set)];
        self.for_each(|t, p| m[self.sub_index(set, &t)] += p);
        m
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Forms `p(a) p(x|a) p(s|a) p(u|x,s,a) p(y|x,s,a)`.
pub fn assemble_joint(spec: &ChannelSpec, policy: &Policy) -> Result<JointDistribution> {
    check_policy(spec, policy)?;
    let nu = policy.alpha_u();
    let mut j = JointDistribution {
        p: vec![0.0; spec.alpha_a * spec.alpha_x * spec.alpha_s * nu * spec.alpha_y],
        alpha_a: spec.alpha_a,
        alpha_x: spec.alpha_x,
        alpha_s: spec.alpha_s,
        alpha_u: nu,
        alpha_y: spec.alpha_y,
    };
    for a in 0..spec.alpha_a {
        for x in 0..spec.alpha_x {
            let pax = policy.p_a[a] * policy.p_x_given_a[a][x];
            for s in 0..spec.alpha_s {
                let pxs = pax * spec.state_given_action[a][s];
                let w = &spec.output_given_xsa[x][s][a];
                for u in 0..nu {
                    let pu = pxs * policy.p_u_given_xsa[x][s][a][u];
                    for y in 0..spec.alpha_y {
                        let i = j.index(a, x, s, u, y);
                        j.p[i] = pu * w[y];
                    }
                }
            }
        }
    }
    Ok(j)
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `H(set)` in bits.
pub fn entropy(joint: &JointDistribution, set: impl Into<VarSet>) -> f64 {
    joint.marginal(set.into()).into_iter().map(plogp).sum()
}

/// `I(left; right)` in bits.
pub fn mutual_information(
    joint: &JointDistribution,
    left: impl Into<VarSet>,
    right: impl Into<VarSet>,
) -> Result<f64> {
    conditional_mutual_information(joint, left, right, VarSet::EMPTY)
}

/// `I(left; right | cond)` in bits, evaluated as a relative entropy
/// `Σ p(l,r,c) log[p(l,r,c) p(c) / (p(l,c) p(r,c))]` and clamped at zero.
pub fn conditional_mutual_information(
    joint: &JointDistribution,
    left: impl Into<VarSet>,
    right: impl Into<VarSet>,
    cond: impl Into<VarSet>,
) -> Result<f64> {
    let (l, r, c) = (left.into(), right.into(), cond.into());
    if l.is_empty() || r.is_empty() {
        return Err(Error::InvalidArgument("empty variable set".into()));
    }
    if l.intersects(r) || l.intersects(c) || r.intersects(c) {
        return Err(Error::OverlappingVariables(format!("{l}, {r}, {c}")));
    }
    let all = l.union(r).union(c);
    let lc = l.union(c);
    let rc = r.union(c);
    let p_all = joint.marginal(all);
    let p_lc = joint.marginal(lc);
    let p_rc = joint.marginal(rc);
    let p_c = joint.marginal(c);
    let sizes = joint.sizes();
    let vars: Vec<Var> = all.iter().collect();
    let mut t = [0usize; 5];
    let mut total = 0.0;
    for (idx, &p) in p_all.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let mut rem = idx;
        for v in vars.iter().rev() {
            let k = *v as usize;
            t[k] = rem % sizes[k];
            rem /= sizes[k];
        }
        let num = p * p_c[joint.sub_index(c, &t)];
        let den = p_lc[joint.sub_index(lc, &t)] * p_rc[joint.sub_index(rc, &t)];
        total += p * (num / den).log2();
    }
    Ok(total.max(0.0))
}

fn mi(joint: &JointDistribution, l: VarSet, r: VarSet, c: VarSet) -> f64 {
    conditional_mutual_information(joint, l, r, c).expect("fixed disjoint sets")
}

/// `I(U,A,X;Y) − I(U,X;S|A)`.
pub fn nonadaptive_objective(joint: &JointDistribution) -> f64 {
    use Var::*;
    mi(joint, [U, A, X].into(), Y.into(), VarSet::EMPTY)
        - mi(joint, [U, X].into(), S.into(), A.into())
}

/// `I(U,A,X;Y) − I(U,X,A;S)`, the literal expression for adaptive actions.
///
/// The solver's adaptive mode does not maximize this expression; see
/// [`crate::solver::Mode::Adaptive`].
pub fn adaptive_objective(joint: &JointDistribution) -> f64 {
    use Var::*;
    mi(joint, [U, A, X].into(), Y.into(), VarSet::EMPTY)
        - mi(joint, [U, X, A].into(), S.into(), VarSet::EMPTY)
}

/// `I(U,X;Y|A) − I(U,X;S|A)`; nonnegative for admissible nonadaptive policies.
pub fn feasibility_gap(joint: &JointDistribution) -> f64 {
    use Var::*;
    mi(joint, [U, X].into(), Y.into(), A.into()) - mi(joint, [U, X].into(), S.into(), A.into())
}

/// `H(A) + I(U,X;Y|A) − I(U,X;S|A)`: the rate expression when the decoder
/// also observes the actions.
pub fn decoder_sees_actions_objective(joint: &JointDistribution) -> f64 {
    use Var::*;
    entropy(joint, A) + feasibility_gap(joint)
}

/// Bayes estimator of `S` from `(U, X, A, Y)` and its expected distortion.
///
/// Ties go to the lowest `ŝ`; cells of zero probability map to `ŝ = 0`.
pub fn optimal_estimator(joint: &JointDistribution, distortion: &[Vec<f64>]) -> (Estimator, f64) {
    let nshat = distortion.first().map_or(1, Vec::len);
    let mut est = Estimator::constant(
        joint.alpha_u,
        joint.alpha_x,
        joint.alpha_a,
        joint.alpha_y,
        0,
    );
    let mut total = 0.0;
    let mut cost = vec![0.0; nshat];
    for a in 0..joint.alpha_a {
        for x in 0..joint.alpha_x {
            for u in 0..joint.alpha_u {
                for y in 0..joint.alpha_y {
                    cost.iter_mut().for_each(|c| *c = 0.0);
                    let mut mass = 0.0;
                    for s in 0..joint.alpha_s {
                        let p = joint.get(a, x, s, u, y);
                        if p > 0.0 {
                            mass += p;
                            for (t, c) in cost.iter_mut().enumerate() {
                                *c += p * distortion[s][t];
                            }
                        }
                    }
                    if mass <= 0.0 {
                        continue;
                    }
                    let mut best = 0;
                    for t in 1..nshat {
                        if cost[t] < cost[best] {
                            best = t;
                        }
                    }
                    est.set(u, x, a, y, best);
                    total += cost[best];
                }
            }
        }
    }
    (est, total)
}

/// `Σ p(a,x,s,u,y) d(s, ŝ(u,x,a,y))`.
pub fn expected_distortion(
    joint: &JointDistribution,
    estimator: &Estimator,
    distortion: &[Vec<f64>],
) -> f64 {
    let mut total = 0.0;
    for a in 0..joint.alpha_a {
        for x in 0..joint.alpha_x {
            for u in 0..joint.alpha_u {
                for y in 0..joint.alpha_y {
                    let t = estimator.get(u, x, a, y);
                    for s in 0..joint.alpha_s {
                        let p = joint.get(a, x, s, u, y);
                        if p > 0.0 {
                            total += p * distortion[s][t];
                        }
                    }
                }
            }
        }
    }
    total
}

/// Every quantity the CLI and solver report for a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub nonadaptive_objective: f64,
    pub adaptive_objective: f64,
    pub feasibility_gap: f64,
    pub expected_distortion: f64,
    pub i_xa_y: f64,
    pub i_u_s_given_xa: f64,
    pub i_u_y_given_xa: f64,
}

pub fn summarize(spec: &ChannelSpec, policy: &Policy) -> Result<PolicySummary> {
    use Var::*;
    let joint = assemble_joint(spec, policy)?;
    Ok(PolicySummary {
        nonadaptive_objective: nonadaptive_objective(&joint),
        adaptive_objective: adaptive_objective(&joint),
        feasibility_gap: feasibility_gap(&joint),
        expected_distortion: expected_distortion(&joint, &policy.estimator, &spec.distortion),
        i_xa_y: mi(&joint, [X, A].into(), Y.into(), VarSet::EMPTY),
        i_u_s_given_xa: mi(&joint, U.into(), S.into(), [X, A].into()),
        i_u_y_given_xa: mi(&joint, U.into(), Y.into(), [X, A].into()),
    })
}
