//! The scalar functions used to build comparison witnesses by functional
//! calculus: the ramp `f_δ`, its quotient `g_δ = f_δ / t`, the homotopy
//! `h_s` from the identity to a steep ramp, the matching quotients
//! `g_{δ,s}`, and the pair `r_s, w_s` that homotope both factors to 1.
//!
//! Identities that hold for every `t, s ∈ [0,1]`:
//! `t·g_δ(t) = f_δ(t)`, `h_s(t)·g_{δ,s}(t) = f_δ(t)` and
//! `f_δ(t) ≤ r_s(t)·w_s(t) ≤ 1`.
//!
//! `f_δ, h_s, r_s, w_s` map `[0,1]` into `[0,1]`. The quotients `g_δ` and
//! `g_{δ,s}` (for `s < 1`) are continuous but reach `1/δ` at `t = δ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KitFunction {
    F,
    G,
    H,
    #[serde(rename = "g_s")]
    GS,
    R,
    W,
}

impl KitFunction {
    pub const ALL: [KitFunction; 6] = [
        KitFunction::F,
        KitFunction::G,
        KitFunction::H,
        KitFunction::GS,
        KitFunction::R,
        KitFunction::W,
    ];

    /// Whether the function maps `[0,1]` into `[0,1]` for every parameter.
    pub fn is_unit_interval_valued(self) -> bool {
        !matches!(self, KitFunction::G | KitFunction::GS)
    }
}

impl fmt::Display for KitFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KitFunction::F => "f",
            KitFunction::G => "g",
            KitFunction::H => "h",
            KitFunction::GS => "g_s",
            KitFunction::R => "r",
            KitFunction::W => "w",
        };
        f.write_str(s)
    }
}

impl FromStr for KitFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f" => Ok(KitFunction::F),
            "g" => Ok(KitFunction::G),
            "h" => Ok(KitFunction::H),
            "g_s" | "gs" => Ok(KitFunction::GS),
            "r" => Ok(KitFunction::R),
            "w" => Ok(KitFunction::W),
            other => Err(format!("unknown kit function {other:?} (expected f, g, h, g_s, r, w)")),
        }
    }
}

/// Parameters `δ ∈ (0,1]` and `s ∈ [0,1]` of the function family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarKit {
    pub delta: f64,
    pub s: f64,
}

impl ScalarKit {
    pub fn new(delta: f64, s: f64) -> Self {
        assert!(delta > 0.0 && delta <= 1.0, "delta must lie in (0,1], got {delta}");
        assert!((0.0..=1.0).contains(&s), "s must lie in [0,1], got {s}");
        Self { delta, s }
    }

    pub fn eval(&self, which: KitFunction, t: f64) -> f64 {
        match which {
            KitFunction::F => self.f(t),
            KitFunction::G => self.g(t),
            KitFunction::H => self.h(t),
            KitFunction::GS => self.g_s(t),
            KitFunction::R => self.r(t),
            KitFunction::W => self.w(t),
        }
    }

    /// 0 on `[0, δ/2]`, `(2t − δ)/δ` on `(δ/2, δ)`, 1 on `[δ, 1]`.
    pub fn f(&self, t: f64) -> f64 {
        let d = self.delta;
        if t <= d / 2.0 {
            0.0
        } else if t < d {
            (2.0 * t - d) / d
        } else {
            1.0
        }
    }

    /// `f_δ(t)/t`, extended by 0 on `[0, δ/2]`.
    pub fn g(&self, t: f64) -> f64 {
        if t <= self.delta / 2.0 {
            0.0
        } else {
            self.f(t) / t
        }
    }

    /// The endpoint `h_1`: `2t/δ` on `[0, δ/2]`, 1 beyond.
    pub fn h1(&self, t: f64) -> f64 {
        let d = self.delta;
        if t <= d / 2.0 {
            2.0 * t / d
        } else {
            1.0
        }
    }

    /// `h_s(t) = (1 − s)·t + s·h_1(t)`, so `h_0(t) = t`.
    pub fn h(&self, t: f64) -> f64 {
        if self.s == 0.0 {
            return t;
        }
        if self.s == 1.0 {
            return self.h1(t);
        }
        (1.0 - self.s) * t + self.s * self.h1(t)
    }

    /// `f_δ(t)/h_s(t)`, extended by 0 on `[0, δ/2]`.
    pub fn g_s(&self, t: f64) -> f64 {
        if t <= self.delta / 2.0 {
            0.0
        } else {
            self.f(t) / self.h(t)
        }
    }

    /// `max{s, √h_1(t)}`.
    pub fn r(&self, t: f64) -> f64 {
        self.s.max(self.h1(t).sqrt())
    }

    /// `max{s, √g_{δ,1}(t)}`; `g_{δ,1} = f_δ` since `h_1 = 1` past `δ/2`.
    pub fn w(&self, t: f64) -> f64 {
        let g1 = if t <= self.delta / 2.0 {
            0.0
        } else {
            self.f(t) / self.h1(t)
        };
        self.s.max(g1.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_midpoint() {
        for &d in &[0.1, 0.5, 0.8, 1.0] {
            let kit = ScalarKit::new(d, 0.0);
            assert!((kit.f(0.75 * d) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn quotient_identity_at_breakpoints() {
        let kit = ScalarKit::new(0.4, 0.3);
        for &t in &[0.0, 0.2, 0.3, 0.4, 1.0] {
            assert!((t * kit.g(t) - kit.f(t)).abs() < 1e-15, "t = {t}");
        }
    }

    #[test]
    fn homotopy_endpoints() {
        let start = ScalarKit::new(0.3, 0.0);
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            assert_eq!(start.h(t), t);
        }
        let end = ScalarKit::new(0.3, 1.0);
        assert!((end.h(0.15) - 1.0).abs() < 1e-15);
        assert_eq!(end.h(0.9), 1.0);
        // r and w start at h_1 / g_{δ,1} (under the square root) and end at 1
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            assert!((start.r(t) - end.h1(t).sqrt()).abs() < 1e-15);
            let top = ScalarKit::new(0.3, 1.0);
            assert_eq!(top.r(t), 1.0);
            assert_eq!(top.w(t), 1.0);
        }
    }

    #[test]
    fn quotient_exceeds_one_near_delta() {
        let kit = ScalarKit::new(0.25, 0.0);
        assert!((kit.g(0.25) - 4.0).abs() < 1e-12);
        assert!(!KitFunction::G.is_unit_interval_valued());
    }

    #[test]
    fn parse_names() {
        for f in KitFunction::ALL {
            assert_eq!(f.to_string().parse::<KitFunction>().unwrap(), f);
        }
        assert!("q".parse::<KitFunction>().is_err());
    }
}
