//! Sample-size kernels, caps and precision-parameter formulas shared by
//! SSA and D-SSA.
//!
//! Anything involving `C(n, k)` is carried in log space; the binomial
//! itself is never formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 - 1/e`, the greedy approximation factor.
pub const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// Slack on the static precision constraint check.
pub const EPS_CONSTRAINT_TOL: f64 = 1e-12;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("delta must be in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `(2 + 2 eps / 3) * ln(1 / delta) / eps^2`, with `ln(1 / delta)` given.
pub fn upsilon_ln(eps: f64, ln_inv_delta: f64) -> f64 {
    (2.0 + 2.0 * eps / 3.0) * ln_inv_delta / (eps * eps)
}

/// Chernoff sample-count kernel `(2 + 2 eps / 3) ln(1/delta) / eps^2`.
pub fn upsilon(eps: f64, delta: f64) -> Result<f64> {
    check_eps(eps)?;
    check_delta(delta)?;
    Ok(upsilon_ln(eps, -delta.ln()))
}

/// Below this `min(k, n - k)` the log-binomial is summed term by term.
const LN_CHOOSE_DIRECT_MAX: u64 = 100_000;

/// Remainder of Stirling's series, `ln Gamma(x) - ((x - 1/2) ln x - x + ln(2 pi) / 2)`.
/// Only called with `x > LN_CHOOSE_DIRECT_MAX`, where three terms are exact
/// to machine precision.
fn stirling_remainder(x: f64) -> f64 {
    let x2 = x * x;
    (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * x2)) / x2) / x
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::arg(format!("k = {k} exceeds n = {n}")));
    }
    let kk = k.min(n - k);
    if kk == 0 {
        return Ok(0.0);
    }
    if kk <= LN_CHOOSE_DIRECT_MAX {
        // sum_{i=1..kk} ln((n - kk + i) / i), Neumaier-compensated
        let base = (n - kk) as f64;
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for i in 1..=kk {
            let term = (base / i as f64).ln_1p();
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        return Ok(sum + comp);
    }
    // C(n, k) = 1 / ((n + 1) B(a, b)) with a = kk + 1, b = n - kk + 1. The
    // leading Stirling terms of ln B are regrouped around ln(a / (a + b))
    // so the large logarithms cancel analytically.
    let a = kk as f64 + 1.0;
    let b = (n - kk) as f64 + 1.0;
    let s = a + b;
    let ln_beta = 0.5 * (2.0 * std::f64::consts::PI).ln()
        + (a - 0.5) * (-(b / a).ln_1p())
        + (b - 0.5) * (-(a / b).ln_1p())
        - 0.5 * s.ln()
        + stirling_remainder(a)
        + stirling_remainder(b)
        - stirling_remainder(s);
    Ok(-(n as f64 + 1.0).ln() - ln_beta)
}

/// Precision split `(eps1, eps2, eps3)` for SSA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSplit {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl EpsilonSplit {
    pub fn new(eps1: f64, eps2: f64, eps3: f64) -> Self {
        EpsilonSplit { eps1, eps2, eps3 }
    }

    /// Left-hand side of the static constraint:
    /// `(1 - 1/e)(e1 + e2 + e1 e2 + e3) / ((1 + e1)(1 + e2))`.
    pub fn combined(&self) -> f64 {
        let EpsilonSplit { eps1, eps2, eps3 } = *self;
        ONE_MINUS_INV_E * (eps1 + eps2 + eps1 * eps2 + eps3) / ((1.0 + eps1) * (1.0 + eps2))
    }

    /// Checks the field domains and the constraint for SSA use.
    pub fn validate_for(&self, eps: f64) -> Result<()> {
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) {
            return Err(Error::arg(format!(
                "eps1 must be positive, got {}",
                self.eps1
            )));
        }
        for (name, v) in [("eps2", self.eps2), ("eps3", self.eps3)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::arg(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        if !check_epsilon_constraint(self, eps) {
            return Err(Error::arg(format!(
                "split {self:?} gives {} > eps = {eps}",
                self.combined()
            )));
        }
        Ok(())
    }
}

pub fn check_epsilon_constraint(split: &EpsilonSplit, eps: f64) -> bool {
    split.combined() <= eps + EPS_CONSTRAINT_TOL
}

/// Default SSA split: `eps2 = eps3 = eps / (2 (1 - 1/e))`,
/// `eps1 = (1 + eps / (2 (1 - 1/e - eps))) / (1 + eps2) - 1`.
pub fn default_epsilon_split(eps: f64) -> Result<EpsilonSplit> {
    check_eps(eps)?;
    if eps >= ONE_MINUS_INV_E {
        return Err(Error::arg(format!(
            "epsilon {eps} must be below 1 - 1/e for the default split"
        )));
    }
    let eps2 = eps / 2.0 / ONE_MINUS_INV_E;
    let eps1 = (1.0 + eps / 2.0 / (ONE_MINUS_INV_E - eps)) / (1.0 + eps2) - 1.0;
    Ok(EpsilonSplit {
        eps1,
        eps2,
        eps3: eps2,
    })
}

/// Sample caps shared by SSA and D-SSA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    /// Cap on the main pool size.
    pub n_max: f64,
    /// Iteration cap (`i_max` for SSA, `t_max` for D-SSA).
    pub i_max: u32,
    /// Initial pool size `Upsilon(eps, delta / (3 i_max))`.
    pub lambda: f64,
    /// D-SSA coverage threshold `1 + (1 + eps) Upsilon(eps, delta / (3 t_max))`.
    pub dssa_lambda1: f64,
    /// `ln(3 i_max / delta)`, the per-iteration failure budget in log form.
    pub ln_inv_delta_iter: f64,
}

impl Caps {
    /// SSA coverage threshold `(1 + e1)(1 + e2) Upsilon(e3, delta / (3 i_max))`.
    pub fn ssa_lambda1(&self, split: &EpsilonSplit) -> f64 {
        (1.0 + split.eps1) * (1.0 + split.eps2) * upsilon_ln(split.eps3, self.ln_inv_delta_iter)
    }

    /// Per-iteration failure probability `delta / (3 i_max)`.
    pub fn delta_iter(&self) -> f64 {
        (-self.ln_inv_delta_iter).exp()
    }
}

pub fn caps_for(n: usize, k: usize, eps: f64, delta: f64) -> Result<Caps> {
    check_eps(eps)?;
    check_delta(delta)?;
    if !(eps < 1.0) {
        return Err(Error::arg(format!("epsilon must be below 1, got {eps}")));
    }
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} must be in 1..={n}")));
    }
    let ln_c = ln_choose(n as u64, k as u64)?;
    let ln_inv_delta = -delta.ln();
    let cap_kernel = upsilon_ln(eps, (6.0f64).ln() + ln_inv_delta + ln_c);
    let n_max = 8.0 * ONE_MINUS_INV_E / (2.0 + 2.0 * eps / 3.0) * cap_kernel * n as f64 / k as f64;
    let i_max = (2.0 * n_max / upsilon_ln(eps, (3.0f64).ln() + ln_inv_delta))
        .log2()
        .ceil()
        .max(1.0) as u32;
    let ln_inv_delta_iter = (3.0 * i_max as f64).ln() + ln_inv_delta;
    let lambda = upsilon_ln(eps, ln_inv_delta_iter);
    Ok(Caps {
        n_max,
        i_max,
        lambda,
        dssa_lambda1: 1.0 + (1.0 + eps) * lambda,
        ln_inv_delta_iter,
    })
}

/// Estimate-Inf success threshold `1 + (1 + eps') Upsilon(eps', delta')`.
pub fn estimate_threshold(eps: f64, delta: f64) -> Result<f64> {
    Ok(1.0 + (1.0 + eps) * upsilon(eps, delta)?)
}

/// Earlier fixed RR-set thresholds, kept for benchmark comparison. Each
/// takes the (normally unknown) optimum `opt` explicitly.
pub mod reference {
    use super::{ln_choose, Result, ONE_MINUS_INV_E};

    /// TIM: `(8 + 2 eps) n (ln(2/delta) + ln C(n,k)) / (eps^2 OPT)`.
    pub fn tim_threshold(n: usize, k: usize, eps: f64, delta: f64, opt: f64) -> Result<f64> {
        let lc = ln_choose(n as u64, k as u64)?;
        Ok((8.0 + 2.0 * eps) * n as f64 * ((2.0 / delta).ln() + lc) / (eps * eps * opt))
    }

    /// IMM: `2 n ((1 - 1/e) alpha + beta)^2 / (eps^2 OPT)`.
    pub fn imm_threshold(n: usize, k: usize, eps: f64, delta: f64, opt: f64) -> Result<f64> {
        let lc = ln_choose(n as u64, k as u64)?;
        let l2 = (2.0 / delta).ln();
        let alpha = l2.sqrt();
        let beta = (ONE_MINUS_INV_E * (l2 + lc)).sqrt();
        let mix = ONE_MINUS_INV_E * alpha + beta;
        Ok(2.0 * n as f64 * mix * mix / (eps * eps * opt))
    }

    /// Relaxed IMM threshold `4 (1 - 1/e) n (2 ln(2/delta) + ln C(n,k)) / (eps^2 OPT)`.
    pub fn imm_simplified_threshold(
        n: usize,
        k: usize,
        eps: f64,
        delta: f64,
        opt: f64,
    ) -> Result<f64> {
        let lc = ln_choose(n as u64, k as u64)?;
        Ok(4.0 * ONE_MINUS_INV_E * n as f64 * (2.0 * (2.0 / delta).ln() + lc) / (eps * eps * opt))
    }

    /// OPT-free upper bound `8 (1 - 1/e) (ln(2/delta) + ln C(n,k)) / eps^2 * n / k`,
    /// valid because `OPT >= k`.
    pub fn imm_simplified_bound(n: usize, k: usize, eps: f64, delta: f64) -> Result<f64> {
        let lc = ln_choose(n as u64, k as u64)?;
        Ok(8.0 * ONE_MINUS_INV_E * ((2.0 / delta).ln() + lc) / (eps * eps) * n as f64 / k as f64)
    }
}
