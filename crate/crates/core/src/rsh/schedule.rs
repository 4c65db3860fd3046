//! The tolerance schedule `δ_k = N·√δ_{k−1}` used stage by stage.

use serde::Serialize;

/// Default growth constant `N` of the single-stage comparison step.
pub const DEFAULT_N: u64 = 49;

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSchedule {
    /// `δ_0, …, δ_l` by the recursion.
    pub recursion: Vec<f64>,
    /// `δ_0^{1/2^k}·Π_{j<k} N^{1/2^j}`.
    pub closed_form: Vec<f64>,
    /// `max_k |recursion − closed| / |closed|`.
    pub max_rel_error: f64,
}

impl DeltaSchedule {
    pub fn agrees(&self, rel_tol: f64) -> bool {
        self.max_rel_error <= rel_tol
    }
}

pub fn delta_schedule(delta0: f64, l: usize, n: u64) -> DeltaSchedule {
    assert!(delta0 > 0.0 && n > 0, "delta0 and N must be positive");
    let nf = n as f64;
    let mut recursion = Vec::with_capacity(l + 1);
    recursion.push(delta0);
    for k in 1..=l {
        recursion.push(nf * recursion[k - 1].sqrt());
    }
    let closed_form: Vec<f64> = (0..=l)
        .map(|k| {
            let root = delta0.powf(0.5f64.powi(k as i32));
            (0..k).fold(root, |acc, j| acc * nf.powf(0.5f64.powi(j as i32)))
        })
        .collect();
    let max_rel_error = recursion
        .iter()
        .zip(&closed_form)
        .map(|(r, c)| ((r - c) / c).abs())
        .fold(0.0, f64::max);
    DeltaSchedule {
        recursion,
        closed_form,
        max_rel_error,
    }
}

/// `δ_0 = 10^{−j}` for the least integer `j` with `δ_l < ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RequiredDelta0 {
    pub exponent: i64,
    /// `log10 δ_l` for this choice.
    pub log10_delta_l: f64,
}

impl RequiredDelta0 {
    /// `10^{−j}`; underflows to 0 once `j` passes about 323.
    pub fn delta0(&self) -> f64 {
        10f64.powi(-(self.exponent as i32))
    }
}

/// `log10 δ_l = log10(δ_0)/2^l + 2(1 − 2^{−l})·log10 N`.
fn log10_delta_l(exponent: i64, l: usize, n: u64) -> f64 {
    let scale = 0.5f64.powi(l as i32);
    -(exponent as f64) * scale + 2.0 * (1.0 - scale) * (n as f64).log10()
}

/// Works with exponents, so it stays exact for `l` far beyond where `δ_0`
/// itself underflows.
pub fn required_delta0(eps: f64, l: usize, n: u64) -> RequiredDelta0 {
    assert!(eps > 0.0 && n > 0, "eps and N must be positive");
    let target = eps.log10();
    let scale = 2f64.powi(l as i32);
    // solve −j/2^l + c < log10 ε for j, then correct for rounding
    let c = 2.0 * (1.0 - 1.0 / scale) * (n as f64).log10();
    let mut j = ((c - target) * scale).floor() as i64;
    while log10_delta_l(j, l, n) < target {
        j -= 1;
    }
    while log10_delta_l(j, l, n) >= target {
        j += 1;
    }
    RequiredDelta0 {
        exponent: j,
        log10_delta_l: log10_delta_l(j, l, n),
    }
}
