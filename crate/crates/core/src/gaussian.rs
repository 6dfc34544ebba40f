//! Closed-form capacity–distortion curves for `Y = X + A + S̃ + Z`, where the
//! state is `S = A + S̃` with `S̃ ~ N(0, Q)`, `Z ~ N(0, N)` and power limits
//! `P_X`, `P_A` on the channel input and the action.
//!
//! Rates are in bits unless [`Units::Nats`] is requested.

use serde::{Deserialize, Serialize};

use crate::solver::Mode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub p_x: f64,
    pub p_a: f64,
    pub q: f64,
    pub n0: f64,
}

impl GaussianParams {
    pub fn new(p_x: f64, p_a: f64, q: f64, n0: f64) -> Result<Self> {
        let params = Self { p_x, p_a, q, n0 };
        params.check()?;
        Ok(params)
    }

    pub fn check(&self) -> Result<()> {
        let positive = [("p_x", self.p_x), ("q", self.q), ("n0", self.n0)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.p_a.is_finite() && self.p_a >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "p_a must be nonnegative, got {}",
                self.p_a
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBreakpoints {
    pub d_min_nonadaptive: f64,
    pub d_min_adaptive: f64,
    pub d_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    fn half_log(self, x: f64) -> f64 {
        match self {
            Units::Bits => 0.5 * x.log2(),
            Units::Nats => 0.5 * x.ln(),
        }
    }
}

/// Received power with fully adaptive actions, `P_X+Q+N+P_A+2√(P_A P_X)`.
pub fn adaptive_power(p: &GaussianParams) -> f64 {
    p.p_x + p.q + p.n0 + p.p_a + 2.0 * (p.p_a * p.p_x).sqrt()
}

/// Received power usable at budget `d` with message-only actions.
/// Only meaningful on `[d_min_nonadaptive, d_max)`.
pub fn nonadaptive_power(p: &GaussianParams, d: f64) -> f64 {
    let radicand = p.p_x - (p.q * p.n0 / d - (p.q + p.n0));
    debug_assert!(radicand >= -1e-12 * p.p_x.max(1.0), "radicand {radicand}");
    p.p_x + p.q + p.n0 + p.p_a + 2.0 * (p.p_a * radicand.max(0.0)).sqrt()
}

pub fn gaussian_breakpoints(p: &GaussianParams) -> GaussianBreakpoints {
    let qn = p.q * p.n0;
    GaussianBreakpoints {
        d_min_nonadaptive: qn / (p.p_x + p.q + p.n0),
        d_min_adaptive: qn / adaptive_power(p),
        d_max: qn / (p.q + p.n0),
    }
}

/// Unconstrained capacity `½ log(1 + (√P_X+√P_A)²/(Q+N))`, reached for `D ≥ d_max`.
pub fn saturation_rate(p: &GaussianParams, units: Units) -> f64 {
    let amp = p.p_x.sqrt() + p.p_a.sqrt();
    units.half_log(1.0 + amp * amp / (p.q + p.n0))
}

pub fn gaussian_capdist(p: &GaussianParams, d: f64, mode: Mode) -> Result<f64> {
    gaussian_capdist_in(p, d, mode, Units::Bits)
}

/// Piecewise capacity–distortion value: zero below the mode's minimum
/// distortion, `½ log(P/(QN/D))` up to `d_max`, then the saturation value.
pub fn gaussian_capdist_in(p: &GaussianParams, d: f64, mode: Mode, units: Units) -> Result<f64> {
    p.check()?;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distortion must be positive, got {d}"
        )));
    }
    let bp = gaussian_breakpoints(p);
    if d >= bp.d_max {
        return Ok(saturation_rate(p, units));
    }
    let d_min = match mode {
        Mode::Nonadaptive => bp.d_min_nonadaptive,
        Mode::Adaptive => bp.d_min_adaptive,
        Mode::Nocsi => {
            return Err(Error::InvalidArgument(
                "the Gaussian closed form covers the nonadaptive and adaptive modes only".into(),
            ))
        }
    };
    if d < d_min {
        return Ok(0.0);
    }
    let power = match mode {
        Mode::Nonadaptive => nonadaptive_power(p, d),
        _ => adaptive_power(p),
    };
    Ok(units.half_log(power * d / (p.q * p.n0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> GaussianParams {
        GaussianParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn unit_breakpoints() {
        let bp = gaussian_breakpoints(&unit());
        assert!((bp.d_min_nonadaptive - 1.0 / 3.0).abs() < 1e-15);
        assert!((bp.d_max - 0.5).abs() < 1e-15);
        assert!((bp.d_min_adaptive - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unit_values() {
        let p = unit();
        let na = gaussian_capdist(&p, 0.4, Mode::Nonadaptive).unwrap();
        let ad = gaussian_capdist(&p, 0.4, Mode::Adaptive).unwrap();
        let want = 0.5 * ((4.0 + 2.0 * 0.5f64.sqrt()) / 2.5).log2();
        assert!(
            (na - want).abs() < 1e-12 && (na - 0.5574).abs() < 1e-4,
            "{na}"
        );
        assert!((ad - 0.6315).abs() < 1e-4, "{ad}");
        for d in [0.5, 0.6, 10.0] {
            for m in [Mode::Nonadaptive, Mode::Adaptive] {
                let v = gaussian_capdist(&p, d, m).unwrap();
                assert!((v - 0.5 * 3f64.log2()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn silent_actions_collapse_breakpoints() {
        let p = GaussianParams::new(2.0, 0.0, 1.5, 0.5).unwrap();
        let bp = gaussian_breakpoints(&p);
        assert_eq!(bp.d_min_adaptive, bp.d_min_nonadaptive);
        for d in [0.2, 0.3, 0.35, 0.4] {
            let base = if d < bp.d_min_nonadaptive {
                0.0
            } else if d >= bp.d_max {
                0.5 * (1.0 + p.p_x / (p.q + p.n0)).log2()
            } else {
                0.5 * ((p.p_x + p.q + p.n0) / (p.q * p.n0 / d)).log2()
            };
            for m in [Mode::Nonadaptive, Mode::Adaptive] {
                assert!((gaussian_capdist(&p, d, m).unwrap() - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nats_scale_bits() {
        let p = unit();
        let b = gaussian_capdist_in(&p, 0.4, Mode::Adaptive, Units::Bits).unwrap();
        let n = gaussian_capdist_in(&p, 0.4, Mode::Adaptive, Units::Nats).unwrap();
        assert!((n - b * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(GaussianParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(GaussianParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(gaussian_capdist(&unit(), 0.0, Mode::Adaptive).is_err());
        assert!(gaussian_capdist(&unit(), 0.4, Mode::Nocsi).is_err());
    }

    #[test]
    fn adaptive_middle_branch_meets_saturation() {
        let p = unit();
        let bp = gaussian_breakpoints(&p);
        let below = gaussian_capdist(&p, bp.d_max * (1.0 - 1e-12), Mode::Adaptive).unwrap();
        let at = gaussian_capdist(&p, bp.d_max, Mode::Adaptive).unwrap();
        assert!((below - at).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn curves_are_ordered_and_monotone(
            p_x in 0.1f64..5.0, p_a in 0.0f64..5.0, q in 0.1f64..5.0, n0 in 0.1f64..5.0,
        ) {
            let p = GaussianParams::new(p_x, p_a, q, n0).unwrap();
            let bp = gaussian_breakpoints(&p);
            prop_assert!(bp.d_min_adaptive <= bp.d_min_nonadaptive);
            prop_assert!(bp.d_min_nonadaptive <= bp.d_max);
            let mut prev = [0.0f64; 2];
            for k in 1..=200 {
                let d = bp.d_max * 1.2 * k as f64 / 200.0;
                let na = gaussian_capdist(&p, d, Mode::Nonadaptive).unwrap();
                let ad = gaussian_capdist(&p, d, Mode::Adaptive).unwrap();
                prop_assert!(ad >= na - 1e-12);
                prop_assert!(na >= prev[0] - 1e-12 && ad >= prev[1] - 1e-12);
                prev = [na, ad];
            }
        }
    }
}
