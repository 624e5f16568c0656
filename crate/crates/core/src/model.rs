//! Model parameters and the single-agent closed forms.
//!
//! The controlled state follows dX = -δX dt + σX dW + dν with ν nondecreasing.
//! Reflecting the state upward at a barrier a > 0 yields a stationary law with
//! a Pareto tail,
//!
//! ```text
//! p_a(dx) = ((2δ+σ²)/σ²) · a^(2δ/σ²+1) · x^(-2δ/σ²-2) · 1{x ≥ a} dx,
//! ```
//!
//! whose k-th moment is ((2δ+σ²)/(2δ+σ²(1-k))) · a^k for 0 ≤ k ≤ 2. The
//! long-run average payoff of the barrier policy against a price weight p is
//!
//! ```text
//! C(a, p) = (2δ+σ²) · ( p·a^α/(2δ+σ²(1-α)) - (q/2)·a ),
//! ```
//!
//! maximized over a by `optimal_barrier`. Everything in this module is a pure
//! function of its value inputs and safe for concurrent use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance on α+β-1 when classifying the regime.
pub const DEFAULT_REGIME_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible multiplier: q*delta - lambda = {0} must be positive")]
    InfeasibleMultiplier(f64),
}

/// The five model scalars. Construction does not validate so that parameter
/// sweeps can represent infeasible cells; call [`ModelParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mean-reversion rate δ > 0.
    pub delta: f64,
    /// Volatility σ > 0, subject to 2δ - σ² > 0.
    pub sigma: f64,
    /// Unit control cost q > 0.
    pub q: f64,
    /// Own-state exponent α ∈ (0, 1).
    pub alpha: f64,
    /// Interaction exponent β ∈ (0, 1).
    pub beta: f64,
}

/// Sign of α+β-1, with a tolerance band around the knife edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn classify(alpha: f64, beta: f64, tol: f64) -> Regime {
        let s = alpha + beta - 1.0;
        if s.abs() <= tol {
            Regime::Critical
        } else if s < 0.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }
}

/// Report-style validation outcome: `ok` plus one entry per violated
/// constraint, each naming the constraint that failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

impl ModelParams {
    pub fn new(delta: f64, sigma: f64, q: f64, alpha: f64, beta: f64) -> Self {
        Self { delta, sigma, q, alpha, beta }
    }

    /// Checks positivity of (δ, σ, q), the open-interval constraints on α and
    /// β, and the dissipativity condition 2δ - σ² > 0.
    ///
    /// The negated comparisons make NaN inputs count as violations.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !(self.delta > 0.0) {
            violations.push(format!("delta > 0 fails (delta = {})", self.delta));
        }
        if !(self.sigma > 0.0) {
            violations.push(format!("sigma > 0 fails (sigma = {})", self.sigma));
        }
        if !(self.q > 0.0) {
            violations.push(format!("q > 0 fails (q = {})", self.q));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            violations.push(format!("0 < alpha < 1 fails (alpha = {})", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            violations.push(format!("0 < beta < 1 fails (beta = {})", self.beta));
        }
        if !(2.0 * self.delta - self.sigma * self.sigma > 0.0) {
            violations.push(format!(
                "2*delta - sigma^2 > 0 fails (value = {})",
                2.0 * self.delta - self.sigma * self.sigma
            ));
        }
        ValidationReport { ok: violations.is_empty(), violations }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().ok
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.alpha, self.beta, DEFAULT_REGIME_TOL)
    }

    pub fn regime_with_tol(&self, tol: f64) -> Regime {
        Regime::classify(self.alpha, self.beta, tol)
    }

    /// 2δ + σ².
    pub fn two_delta_plus_sigma2(&self) -> f64 {
        2.0 * self.delta + self.sigma * self.sigma
    }

    /// Tail exponent γ = 2δ/σ² of the reflected stationary law.
    pub fn gamma_exponent(&self) -> f64 {
        2.0 * self.delta / (self.sigma * self.sigma)
    }

    /// 2δ + σ²(1-k), the denominator of the k-th reflected moment.
    pub fn moment_denominator(&self, k: f64) -> f64 {
        2.0 * self.delta + self.sigma * self.sigma * (1.0 - k)
    }
}

/// A reflection level a > 0 together with the model it lives in; carries the
/// stationary law of the reflected process.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BarrierPolicy {
    pub a: f64,
    pub params: ModelParams,
}

impl BarrierPolicy {
    pub fn new(a: f64, params: ModelParams) -> Self {
        Self { a, params }
    }

    /// Stationary density at x: ((2δ+σ²)/σ²)·a^(γ+1)·x^(-γ-2) on [a, ∞), 0
    /// below the barrier. Errors on x ≤ 0.
    pub fn stationary_density(&self, x: f64) -> Result<f64, ModelError> {
        if x <= 0.0 {
            return Err(ModelError::Domain(format!(
                "density is defined for x > 0, got x = {x}"
            )));
        }
        if x < self.a {
            return Ok(0.0);
        }
        let g = self.params.gamma_exponent();
        let s2 = self.params.sigma * self.params.sigma;
        // Evaluated in log space: a^(γ+1) overflows for small σ.
        let ln = ((2.0 * self.params.delta + s2) / s2).ln() + (g + 1.0) * self.a.ln()
            - (g + 2.0) * x.ln();
        Ok(ln.exp())
    }

    /// Closed-form k-th stationary moment, valid for 0 ≤ k ≤ 2.
    pub fn stationary_moment(&self, k: f64) -> Result<f64, ModelError> {
        if !(0.0..=2.0).contains(&k) {
            return Err(ModelError::Domain(format!(
                "moment order must lie in [0, 2], got k = {k}"
            )));
        }
        let num = self.params.two_delta_plus_sigma2();
        let den = self.params.moment_denominator(k);
        Ok(num / den * self.a.powf(k))
    }

    /// First moment ((2δ+σ²)/(2δ))·a, exact.
    pub fn stationary_mean(&self) -> f64 {
        self.params.two_delta_plus_sigma2() / (2.0 * self.params.delta) * self.a
    }
}

/// Long-run average reward C(a, p) of the reflection policy at `a` when the
/// instantaneous profit is p·x^α and pushing costs q per unit.
pub fn ergodic_reward(params: &ModelParams, a: f64, p: f64) -> f64 {
    let tds = params.two_delta_plus_sigma2();
    tds * (p * a.powf(params.alpha) / params.moment_denominator(params.alpha) - 0.5 * params.q * a)
}

/// Barrier maximizing the auxiliary ergodic objective with price weight `p`
/// and linear term λ·x:
///
/// ```text
/// a*(p, λ) = ( (2αδ/(2δ+σ²(1-α))) · p/(qδ-λ) )^(1/(1-α))
/// ```
///
/// Requires qδ - λ > 0; evaluated in log space since 1/(1-α) can be large.
pub fn optimal_barrier(params: &ModelParams, p: f64, lambda: f64) -> Result<f64, ModelError> {
    let gap = params.q * params.delta - lambda;
    if gap <= 0.0 {
        return Err(ModelError::InfeasibleMultiplier(gap));
    }
    if p <= 0.0 {
        return Err(ModelError::Domain(format!("price must be positive, got p = {p}")));
    }
    let ln_base = (2.0 * params.alpha * params.delta / params.moment_denominator(params.alpha))
        .ln()
        + p.ln()
        - gap.ln();
    Ok((ln_base / (1.0 - params.alpha)).exp())
}

/// Constant K = (2α/(q(2δ+σ²(1-α))))^(1/(1-α)); the best response to a fixed
/// price factor p is the reflection at K·p^(1/(1-α)).
pub fn deviation_constant(params: &ModelParams) -> f64 {
    let ln_base = (2.0 * params.alpha / (params.q * params.moment_denominator(params.alpha))).ln();
    (ln_base / (1.0 - params.alpha)).exp()
}
