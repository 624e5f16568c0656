//! Closed-form solvers and checkers for the three solution concepts.
//!
//! With c̃ = ((2δ+σ²)/(2δ+σ²(1-α)))·(2δ/(2δ+σ²))^α and c₁ = qδ, the planner's
//! reduced objective over the stationary mean θ is
//!
//! ```text
//! f(θ) = c̃·θ^(α+β) - c₁·θ,
//! ```
//!
//! strictly concave for α+β < 1 with unique maximizer θ̂. The competitive
//! fixed point sits at θ* with ((2δ+σ²)/(2δ))·K·(θ*)^(β/(1-α)) = θ*, and the
//! two coarse-correlated classes are governed by moment inequalities
//!
//! ```text
//! c_β·E[θ^β]^(1/(1-α)) + c₁·E[θ]  ≤  c·E[θ^(α+β)],
//! ```
//!
//! with c = c_{α+β} (constant-rate recommendations) or c = c̃ (reflection at a
//! random barrier). Every function here is pure and reentrant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    deviation_constant, ModelParams, Regime, DEFAULT_REGIME_TOL,
};
use crate::numerics::{bisect, ln_gamma};

#[derive(Debug, Error, PartialEq)]
pub enum EquilibriaError {
    #[error("no Nash equilibrium exists at alpha + beta = 1; outperformance is undefined")]
    NoNashEquilibrium,
    #[error("no sign change of the knife-edge residual on ({0}, {1})")]
    NoRoot(f64, f64),
    #[error("invalid moment triple: {0}")]
    InvalidMoments(String),
    #[error("invalid gamma law: shape and scale must be positive (u = {0}, v = {1})")]
    InvalidGammaLaw(f64, f64),
}

/// (E[θ^β], E[θ], E[θ^(α+β)]) of a candidate stationary-mean law; the
/// sufficient statistic for every CCE inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTriple {
    pub m_beta: f64,
    pub m_one: f64,
    pub m_ab: f64,
}

impl MomentTriple {
    pub fn new(m_beta: f64, m_one: f64, m_ab: f64) -> Result<Self, EquilibriaError> {
        if !(m_beta > 0.0 && m_one > 0.0 && m_ab > 0.0) {
            return Err(EquilibriaError::InvalidMoments(format!(
                "all moments must be positive, got ({m_beta}, {m_one}, {m_ab})"
            )));
        }
        Ok(Self { m_beta, m_one, m_ab })
    }

    /// Point mass at θ: m_k = θ^k. This embeds every Nash equilibrium as a
    /// CCE with deterministic device.
    pub fn degenerate(params: &ModelParams, theta: f64) -> Self {
        Self {
            m_beta: theta.powf(params.beta),
            m_one: theta,
            m_ab: theta.powf(params.alpha + params.beta),
        }
    }

    /// Advisory Jensen-consistency flags. For a genuine law and α+β ≤ 1,
    /// concavity of t^k forces E[θ^β] ≤ E[θ]^β and E[θ^(α+β)] ≤ E[θ]^(α+β).
    pub fn jensen_consistent(&self, params: &ModelParams) -> bool {
        let ab = params.alpha + params.beta;
        if ab > 1.0 {
            return true;
        }
        self.m_beta <= self.m_one.powf(params.beta) * (1.0 + 1e-12)
            && self.m_ab <= self.m_one.powf(ab) * (1.0 + 1e-12)
    }
}

/// Gamma law for the random stationary mean: shape u, scale v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLaw {
    pub shape: f64,
    pub scale: f64,
}

impl GammaLaw {
    pub fn new(shape: f64, scale: f64) -> Result<Self, EquilibriaError> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(EquilibriaError::InvalidGammaLaw(shape, scale));
        }
        Ok(Self { shape, scale })
    }
}

/// k-th moment of Γ(u, v): Γ(u+k)/Γ(u) · v^k, evaluated in log space.
pub fn gamma_moment(law: &GammaLaw, k: f64) -> f64 {
    assert!(k >= 0.0, "moment order must be nonnegative, got {k}");
    if k == 0.0 {
        return 1.0;
    }
    (ln_gamma(law.shape + k) - ln_gamma(law.shape) + k * law.scale.ln()).exp()
}

/// Assembles the (β, 1, α+β) moments of a Gamma stationary-mean law.
pub fn gamma_moments_triple(params: &ModelParams, law: &GammaLaw) -> MomentTriple {
    MomentTriple {
        m_beta: gamma_moment(law, params.beta),
        m_one: gamma_moment(law, 1.0),
        m_ab: gamma_moment(law, params.alpha + params.beta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Mfc,
    Nash,
    CceRegular,
    CceSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumStatus {
    Unique,
    InfinitelyMany,
    NonExistent,
    IllPosed,
    NullOptimal,
}

/// Tagged result of an equilibrium computation. Solution fields are present
/// exactly when the status is `Unique` or `NullOptimal` (the null control is
/// reported as the degenerate barrier 0 with reward 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub status: EquilibriumStatus,
    pub barrier: Option<f64>,
    pub theta: Option<f64>,
    pub reward: Option<f64>,
}

/// Reduced planner objective f(θ) = c̃·θ^(α+β) - qδ·θ.
pub fn mfc_f(params: &ModelParams, theta: f64) -> f64 {
    let c = cce_constants(params);
    c.c_ab_tilde * theta.powf(params.alpha + params.beta) - c.c_one * theta
}

/// Exact derivative f'(θ) = (α+β)·c̃·θ^(α+β-1) - qδ.
pub fn mfc_f_prime(params: &ModelParams, theta: f64) -> f64 {
    let c = cce_constants(params);
    let ab = params.alpha + params.beta;
    ab * c.c_ab_tilde * theta.powf(ab - 1.0) - c.c_one
}

/// Multiplier λ(θ) = qδ - ((2δ+σ²)/(2δ))^(1-α) · (2δα/(2δ+σ²(1-α))) · θ^(α+β-1).
///
/// By construction qδ - λ(θ) > 0, and reflecting at the barrier
/// `optimal_barrier(θ^β, λ(θ))` reproduces the stationary mean θ exactly.
pub fn lagrange_multiplier(params: &ModelParams, theta: f64) -> f64 {
    let mean_ratio = params.two_delta_plus_sigma2() / (2.0 * params.delta);
    let coef = mean_ratio.powf(1.0 - params.alpha) * 2.0 * params.delta * params.alpha
        / params.moment_denominator(params.alpha);
    params.q * params.delta - coef * theta.powf(params.alpha + params.beta - 1.0)
}

fn mean_ratio(params: &ModelParams) -> f64 {
    params.two_delta_plus_sigma2() / (2.0 * params.delta)
}

/// Whether the critical-case coefficient of f is negative, i.e. c̃ < qδ; when
/// it holds at α+β = 1 the null control is optimal, otherwise the problem is
/// ill-posed.
pub fn critical_null_condition(params: &ModelParams) -> bool {
    cce_constants(params).c_ab_tilde < params.q * params.delta
}

/// Solves the cooperative (central planner) problem.
pub fn mfc_solve(params: &ModelParams) -> EquilibriumReport {
    mfc_solve_with_tol(params, DEFAULT_REGIME_TOL)
}

pub fn mfc_solve_with_tol(params: &ModelParams, regime_tol: f64) -> EquilibriumReport {
    let kind = EquilibriumKind::Mfc;
    match params.regime_with_tol(regime_tol) {
        Regime::Supercritical => EquilibriumReport {
            kind,
            status: EquilibriumStatus::IllPosed,
            barrier: None,
            theta: None,
            reward: None,
        },
        Regime::Critical => {
            if critical_null_condition(params) {
                EquilibriumReport {
                    kind,
                    status: EquilibriumStatus::NullOptimal,
                    barrier: Some(0.0),
                    theta: Some(0.0),
                    reward: Some(0.0),
                }
            } else {
                EquilibriumReport {
                    kind,
                    status: EquilibriumStatus::IllPosed,
                    barrier: None,
                    theta: None,
                    reward: None,
                }
            }
        }
        Regime::Subcritical => {
            let ab = params.alpha + params.beta;
            let inv = 1.0 / (1.0 - ab);
            // Composed in log space: each factor alone can overflow near the
            // critical regime.
            let ln_bracket =
                (2.0 * ab / (params.q * params.moment_denominator(params.alpha))).ln();
            let ln_ratio = mean_ratio(params).ln();
            let a_hat = (inv * (ln_bracket + params.beta * ln_ratio)).exp();
            let theta_hat = ((1.0 - params.alpha) * inv * ln_ratio + inv * ln_bracket).exp();
            EquilibriumReport {
                kind,
                status: EquilibriumStatus::Unique,
                barrier: Some(a_hat),
                theta: Some(theta_hat),
                reward: Some(mfc_f(params, theta_hat)),
            }
        }
    }
}

/// Residual of the knife-edge condition at α+β = 1:
///
/// ```text
/// 1 + σ²/(2δ) - (qδ/α)^(1/(1-α)) · (1 + (1-α)σ²/(2δ))^(1/(1-α)).
/// ```
///
/// A root means ((2δ+σ²)/(2δ))·K = 1, so every θ > 0 supports a reflecting
/// Nash equilibrium.
pub fn knife_edge_residual(delta: f64, sigma: f64, q: f64, alpha: f64) -> f64 {
    let r = sigma * sigma / (2.0 * delta);
    let inv = 1.0 / (1.0 - alpha);
    1.0 + r - ((q * delta / alpha).ln() * inv + (1.0 + (1.0 - alpha) * r).ln() * inv).exp()
}

/// Solves the competitive mean-field game.
pub fn nash_solve(params: &ModelParams) -> EquilibriumReport {
    nash_solve_with_tol(params, DEFAULT_REGIME_TOL)
}

pub fn nash_solve_with_tol(params: &ModelParams, regime_tol: f64) -> EquilibriumReport {
    let kind = EquilibriumKind::Nash;
    match params.regime_with_tol(regime_tol) {
        Regime::Critical => {
            // Infinitely many reflecting equilibria exactly on the knife
            // edge, none otherwise; tested in relative terms.
            let lhs = 1.0 + params.sigma * params.sigma / (2.0 * params.delta);
            let residual = knife_edge_residual(params.delta, params.sigma, params.q, params.alpha);
            let status = if residual.abs() <= 1e-10 * lhs.abs() {
                EquilibriumStatus::InfinitelyMany
            } else {
                EquilibriumStatus::NonExistent
            };
            EquilibriumReport { kind, status, barrier: None, theta: None, reward: None }
        }
        _ => {
            let inv = 1.0 / (1.0 - params.alpha - params.beta);
            let ln_ratio = mean_ratio(params).ln();
            let ln_k_base =
                (2.0 * params.alpha / (params.q * params.moment_denominator(params.alpha))).ln();
            let a_star = (params.beta * inv * ln_ratio + inv * ln_k_base).exp();
            let theta_star = ((1.0 - params.alpha) * inv * ln_ratio + inv * ln_k_base).exp();
            EquilibriumReport {
                kind,
                status: EquilibriumStatus::Unique,
                barrier: Some(a_star),
                theta: Some(theta_star),
                reward: Some(mfc_f(params, theta_star)),
            }
        }
    }
}

/// The four positive constants of the CCE inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CceConstants {
    /// c_β = ((2δ+σ²)q/2)·K·(1-α)/α, the deviator's reward coefficient.
    pub c_beta: f64,
    /// c₁ = qδ, the linear cost coefficient.
    pub c_one: f64,
    /// c_{α+β} = (2δ/σ²)^α · Γ(2δ/σ²+1-α)/Γ(2δ/σ²+1) for the constant-rate class.
    pub c_ab: f64,
    /// c̃_{α+β} = ((2δ+σ²)/(2δ+σ²(1-α)))·(2δ/(2δ+σ²))^α for the reflecting class.
    pub c_ab_tilde: f64,
}

pub fn cce_constants(params: &ModelParams) -> CceConstants {
    let g = params.gamma_exponent();
    let c_beta = params.two_delta_plus_sigma2() * params.q / 2.0
        * deviation_constant(params)
        * (1.0 - params.alpha)
        / params.alpha;
    let c_ab =
        (params.alpha * g.ln() + ln_gamma(g + 1.0 - params.alpha) - ln_gamma(g + 1.0)).exp();
    let c_ab_tilde = params.two_delta_plus_sigma2() / params.moment_denominator(params.alpha)
        * (2.0 * params.delta / params.two_delta_plus_sigma2()).powf(params.alpha);
    CceConstants { c_beta, c_one: params.q * params.delta, c_ab, c_ab_tilde }
}

/// k-th moment of the constant-rate recommendation's stationary kernel at
/// mean θ: (γθ)^k · Γ(γ+1-k)/Γ(γ+1) with γ = 2δ/σ². Finite iff γ+1-k > 0.
pub fn regular_kernel_moment(params: &ModelParams, theta: f64, k: f64) -> f64 {
    let g = params.gamma_exponent();
    assert!(
        g + 1.0 - k > 0.0,
        "kernel moment of order {k} diverges: 2delta/sigma^2 + 1 - k must be positive"
    );
    (k * (g * theta).ln() + ln_gamma(g + 1.0 - k) - ln_gamma(g + 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CceClass {
    Regular,
    Singular,
}

/// Payoff of the optimal deviation: c_β · E[θ^β]^(1/(1-α)).
pub fn reward_deviator(params: &ModelParams, m: &MomentTriple) -> f64 {
    cce_constants(params).c_beta * m.m_beta.powf(1.0 / (1.0 - params.alpha))
}

/// Payoff of the constant-rate recommendation: c_{α+β}·E[θ^(α+β)] - qδ·E[θ].
pub fn reward_regular(params: &ModelParams, m: &MomentTriple) -> f64 {
    let c = cce_constants(params);
    c.c_ab * m.m_ab - c.c_one * m.m_one
}

/// Payoff of the random-barrier recommendation: c̃_{α+β}·E[θ^(α+β)] - qδ·E[θ].
pub fn reward_singular(params: &ModelParams, m: &MomentTriple) -> f64 {
    let c = cce_constants(params);
    c.c_ab_tilde * m.m_ab - c.c_one * m.m_one
}

pub fn reward_cce(params: &ModelParams, class: CceClass, m: &MomentTriple) -> f64 {
    match class {
        CceClass::Regular => reward_regular(params, m),
        CceClass::Singular => reward_singular(params, m),
    }
}

/// Outcome of the CCE moment inequality: `slack = RHS - LHS` in reward units,
/// plus the RHS-normalized slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CceCheck {
    pub holds: bool,
    pub slack: f64,
    pub slack_rel: f64,
}

/// Checks whether a law with moments `m` supports a CCE of the given class:
/// c_β·E[θ^β]^(1/(1-α)) + c₁·E[θ] ≤ c·E[θ^(α+β)].
pub fn cce_check(params: &ModelParams, m: &MomentTriple, class: CceClass) -> CceCheck {
    let consts = cce_constants(params);
    let c = match class {
        CceClass::Regular => consts.c_ab,
        CceClass::Singular => consts.c_ab_tilde,
    };
    let lhs = consts.c_beta * m.m_beta.powf(1.0 / (1.0 - params.alpha)) + consts.c_one * m.m_one;
    let rhs = c * m.m_ab;
    let slack = rhs - lhs;
    CceCheck { holds: slack >= 0.0, slack, slack_rel: slack / rhs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outperformance {
    pub holds: bool,
    pub margin: f64,
}

/// Margin of the class reward under a Gamma law over the Nash payoff f(θ*).
/// Undefined on the knife edge, where no unique Nash baseline exists.
pub fn outperforms_nash(
    params: &ModelParams,
    law: &GammaLaw,
    class: CceClass,
) -> Result<Outperformance, EquilibriaError> {
    let nash = nash_solve(params);
    let Some(nash_reward) = nash.reward else {
        return Err(EquilibriaError::NoNashEquilibrium);
    };
    let m = gamma_moments_triple(params, law);
    let margin = reward_cce(params, class, &m) - nash_reward;
    Ok(Outperformance { holds: margin >= 0.0, margin })
}

/// Finds ᾱ ∈ (0, 1) solving the knife-edge condition for fixed (δ, σ, q):
/// scans a 1000-point grid for a sign change, then bisects to |residual| <
/// 1e-12.
pub fn alpha_bar_solve(delta: f64, sigma: f64, q: f64) -> Result<f64, EquilibriaError> {
    let lo = 1e-4;
    let hi = 1.0 - 1e-4;
    let n = 1000;
    let resid = |alpha: f64| knife_edge_residual(delta, sigma, q, alpha);
    let mut prev_x = lo;
    let mut prev_f = resid(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let fx = resid(x);
        if prev_f == 0.0 {
            return Ok(prev_x);
        }
        if prev_f * fx < 0.0 {
            return Ok(bisect(resid, prev_x, x, 1e-12, 400));
        }
        prev_x = x;
        prev_f = fx;
    }
    Err(EquilibriaError::NoRoot(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{optimal_barrier, BarrierPolicy, ModelParams};
    use crate::numerics::integrate;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn fig1() -> ModelParams {
        ModelParams::new(0.1, 0.2, 2.0, 0.3, 0.5)
    }

    fn random_subcritical(rng: &mut StdRng) -> ModelParams {
        loop {
            let delta: f64 = rng.gen_range(0.05..2.0);
            let sigma = rng.gen_range(0.05..(2.0 * delta).sqrt() * 0.95);
            let q = rng.gen_range(0.2..4.0);
            let alpha = rng.gen_range(0.05..0.9);
            let beta = rng.gen_range(0.05..(1.0 - alpha) * 0.95);
            let p = ModelParams::new(delta, sigma, q, alpha, beta);
            if p.is_valid() && p.regime() == Regime::Subcritical {
                return p;
            }
        }
    }

    #[test]
    fn f_is_linear_on_the_knife_edge() {
        let p = ModelParams::new(0.1, 0.2, 2.0, 0.3, 0.7);
        let r1 = mfc_f(&p, 0.5) / 0.5;
        let r2 = mfc_f(&p, 7.0) / 7.0;
        let r3 = mfc_f(&p, 4200.0) / 4200.0;
        assert!((r1 - r2).abs() < 1e-12 * r1.abs().max(1.0));
        assert!((r1 - r3).abs() < 1e-9 * r1.abs().max(1.0));
    }

    #[test]
    fn f_prime_matches_central_difference() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_subcritical(&mut rng);
            let theta = rng.gen_range(0.1..50.0);
            let h = 1e-6 * theta;
            let fd = (mfc_f(&p, theta + h) - mfc_f(&p, theta - h)) / (2.0 * h);
            let exact = mfc_f_prime(&p, theta);
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12),
                "fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn multiplier_keeps_feasibility_margin() {
        let p = fig1();
        for i in 0..=120 {
            let theta = 10f64.powf(-6.0 + 12.0 * i as f64 / 120.0);
            let lam = lagrange_multiplier(&p, theta);
            assert!(p.q * p.delta - lam > 0.0, "margin lost at theta = {theta}");
        }
    }

    #[test]
    fn multiplier_reproduces_the_prescribed_mean() {
        // Reflecting at optimal_barrier(θ^β, λ(θ)) must give stationary mean θ.
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let p = random_subcritical(&mut rng);
            let theta = rng.gen_range(0.05..100.0);
            let lam = lagrange_multiplier(&p, theta);
            let a = optimal_barrier(&p, theta.powf(p.beta), lam).unwrap();
            let mean = BarrierPolicy::new(a, p).stationary_mean();
            assert!(
                (mean - theta).abs() <= 1e-10 * theta,
                "mean {mean} vs theta {theta}"
            );
        }
    }

    #[test]
    fn envelope_identity() {
        // f'(θ) + λ(θ) = β·θ^(β-1)·c̃·θ^α.
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_subcritical(&mut rng);
            let theta = rng.gen_range(0.05..50.0);
            let lhs = mfc_f_prime(&p, theta) + lagrange_multiplier(&p, theta);
            let rhs = p.beta
                * theta.powf(p.beta - 1.0)
                * cce_constants(&p).c_ab_tilde
                * theta.powf(p.alpha);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn mfc_critical_branches_match_reference_sets() {
        // Null-optimal when c̃ < qδ, ill-posed otherwise.
        let null = mfc_solve(&ModelParams::new(1.0, 1.0, 1.0, 0.3, 0.7));
        assert_eq!(null.status, EquilibriumStatus::NullOptimal);
        assert_eq!(null.reward, Some(0.0));

        let ill = mfc_solve(&ModelParams::new(0.1, 0.2, 2.0, 0.3, 0.7));
        assert_eq!(ill.status, EquilibriumStatus::IllPosed);
        assert!(ill.reward.is_none());

        let sup = mfc_solve(&ModelParams::new(0.1, 0.2, 2.0, 0.6, 0.6));
        assert_eq!(sup.status, EquilibriumStatus::IllPosed);
    }

    #[test]
    fn mfc_subcritical_matches_golden_section_argmax() {
        let p = fig1();
        let rep = mfc_solve(&p);
        assert_eq!(rep.status, EquilibriumStatus::Unique);
        let theta_hat = rep.theta.unwrap();
        let (ln_best, _) = crate::numerics::golden_section_max(
            |ln_t| mfc_f(&p, ln_t.exp()),
            -18.0,
            18.0,
            300,
        );
        let theta_gold = ln_best.exp();
        assert!(
            (theta_hat - theta_gold).abs() <= 1e-6 * theta_hat,
            "closed form {theta_hat} vs golden {theta_gold}"
        );
        // Mean-consistency between the barrier and the stationary mean.
        let a_hat = rep.barrier.unwrap();
        let mean = BarrierPolicy::new(a_hat, p).stationary_mean();
        assert!((mean - theta_hat).abs() <= 1e-12 * theta_hat);
    }

    #[test]
    fn nash_fixed_point_and_price_of_anarchy() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..100 {
            let p = random_subcritical(&mut rng);
            let nash = nash_solve(&p);
            assert_eq!(nash.status, EquilibriumStatus::Unique);
            let ts = nash.theta.unwrap();
            let k = deviation_constant(&p);
            let ratio = p.two_delta_plus_sigma2() / (2.0 * p.delta);
            let recomputed = ratio * k * ts.powf(p.beta / (1.0 - p.alpha));
            assert!(
                (recomputed - ts).abs() <= 1e-10 * ts,
                "fixed point violated: {recomputed} vs {ts}"
            );
            let mfc = mfc_solve(&p);
            assert!(
                mfc.reward.unwrap() > nash.reward.unwrap(),
                "planner must strictly beat Nash"
            );
        }
    }

    #[test]
    fn nash_knife_edge_branches() {
        let (delta, sigma, q) = (0.1, 0.2, 2.0);
        let ab = alpha_bar_solve(delta, sigma, q).unwrap();
        assert!(knife_edge_residual(delta, sigma, q, ab).abs() < 1e-12);

        let exact = nash_solve(&ModelParams::new(delta, sigma, q, ab, 1.0 - ab));
        assert_eq!(exact.status, EquilibriumStatus::InfinitelyMany);

        for da in [-0.01, 0.01] {
            let a = ab + da;
            let off = nash_solve(&ModelParams::new(delta, sigma, q, a, 1.0 - a));
            assert_eq!(off.status, EquilibriumStatus::NonExistent);
        }
    }

    #[test]
    fn constants_alpha_to_zero_limits() {
        let p = ModelParams::new(0.1, 0.2, 2.0, 1e-9, 0.5);
        let c = cce_constants(&p);
        assert!((c.c_ab - 1.0).abs() < 1e-6);
        assert!((c.c_ab_tilde - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constants_positive_for_random_params() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let p = random_subcritical(&mut rng);
            let c = cce_constants(&p);
            assert!(c.c_beta > 0.0 && c.c_one > 0.0 && c.c_ab > 0.0 && c.c_ab_tilde > 0.0);
        }
    }

    #[test]
    fn regular_kernel_alpha_moment_matches_quadrature() {
        // E[x^α] under the inverse-gamma-type kernel, against adaptive
        // quadrature of the unnormalized density x^(-γ-2)·exp(-γθ/x).
        let p = fig1();
        let g = p.gamma_exponent();
        let theta = 1.7;
        let kernel = |x: f64| (-(g + 2.0) * x.ln() - g * theta / x).exp();
        let peak = g * theta / (g + 2.0);
        let num = integrate(|x| x.powf(p.alpha) * kernel(x), peak * 1e-4, peak * 1e4, 1e-13);
        let den = integrate(kernel, peak * 1e-4, peak * 1e4, 1e-13);
        let quad = num / den;
        let formula = regular_kernel_moment(&p, theta, p.alpha);
        assert!(
            (quad - formula).abs() <= 1e-6 * formula,
            "quadrature {quad} vs formula {formula}"
        );
        // And the same constant drives c_ab: E[x^α] = c_ab·θ^α.
        let via_cab = cce_constants(&p).c_ab * theta.powf(p.alpha);
        assert!((formula - via_cab).abs() <= 1e-12 * via_cab);
    }

    #[test]
    fn regular_kernel_mean_is_theta() {
        let p = fig1();
        for theta in [0.3, 1.0, 42.0] {
            let m1 = regular_kernel_moment(&p, theta, 1.0);
            assert!((m1 - theta).abs() <= 1e-12 * theta);
        }
    }

    #[test]
    fn degenerate_nash_law_rewards_coincide() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..100 {
            let p = random_subcritical(&mut rng);
            let ts = nash_solve(&p).theta.unwrap();
            let m = MomentTriple::degenerate(&p, ts);
            let f_star = mfc_f(&p, ts);
            let sing = reward_singular(&p, &m);
            assert!((sing - f_star).abs() <= 1e-12 * f_star.abs().max(1e-12));
            let dev = reward_deviator(&p, &m);
            assert!(
                (dev - sing).abs() <= 1e-10 * sing.abs().max(1e-12),
                "deviator {dev} vs singular {sing}"
            );
        }
    }

    #[test]
    fn nash_point_has_zero_singular_slack() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..100 {
            let p = random_subcritical(&mut rng);
            let ts = nash_solve(&p).theta.unwrap();
            let m = MomentTriple::degenerate(&p, ts);
            let chk = cce_check(&p, &m, CceClass::Singular);
            let rhs = cce_constants(&p).c_ab_tilde * m.m_ab;
            assert!(
                chk.slack.abs() <= 1e-9 * rhs,
                "slack {} not within 1e-9 of zero (rhs {rhs})",
                chk.slack
            );
        }
    }

    #[test]
    fn inflated_beta_moment_breaks_the_inequality() {
        let p = fig1();
        let m = MomentTriple::new(1e9, 1.0, 1.0).unwrap();
        assert!(!cce_check(&p, &m, CceClass::Regular).holds);
        assert!(!cce_check(&p, &m, CceClass::Singular).holds);
    }

    #[test]
    fn reference_gamma_point_is_a_singular_cce() {
        // An interior point of the feasible region for the reference
        // parameter set (positive slack verified against the scan).
        let p = fig1();
        let m = gamma_moments_triple(&p, &GammaLaw::new(1.0, 12.0).unwrap());
        assert!(cce_check(&p, &m, CceClass::Singular).holds);
    }

    #[test]
    fn gamma_moment_basics() {
        let law = GammaLaw::new(2.0, 3.0).unwrap();
        assert_eq!(gamma_moment(&law, 0.0), 1.0);
        assert!((gamma_moment(&law, 1.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_half_moment_matches_quadrature() {
        // E[θ^0.5] for Γ(2, 3) against quadrature of the density.
        let law = GammaLaw::new(2.0, 3.0).unwrap();
        let dens = |x: f64| x * (-x / 3.0).exp() / 9.0; // shape 2, scale 3
        let quad = integrate(|x| x.sqrt() * dens(x), 0.0, 200.0, 1e-12);
        let formula = gamma_moment(&law, 0.5);
        assert!(
            (quad - formula).abs() <= 1e-8 * formula,
            "quad {quad} vs formula {formula}"
        );
    }

    #[test]
    fn outperformance_margin_vanishes_for_concentrating_law() {
        let p = fig1();
        let ts = nash_solve(&p).theta.unwrap();
        let mut prev = f64::INFINITY;
        for u in [1e2, 1e4, 1e6] {
            let law = GammaLaw::new(u, ts / u).unwrap();
            let out = outperforms_nash(&p, &law, CceClass::Singular).unwrap();
            assert!(out.margin.abs() < prev);
            prev = out.margin.abs();
        }
        assert!(prev < 1e-4 * mfc_f(&p, ts).abs());
    }

    #[test]
    fn outperformance_requires_a_nash_baseline() {
        let p = ModelParams::new(0.1, 0.2, 2.0, 0.3, 0.7);
        let law = GammaLaw::new(1.0, 1.0).unwrap();
        assert_eq!(
            outperforms_nash(&p, &law, CceClass::Singular),
            Err(EquilibriaError::NoNashEquilibrium)
        );
    }

    #[test]
    fn fig_region_point_outperforms_for_both_classes() {
        let p = fig1();
        // (u, v) inside the outperforming region of the reference scan, for
        // both recommendation classes.
        let law = GammaLaw::new(0.5, 60.0).unwrap();
        let m = gamma_moments_triple(&p, &law);
        for class in [CceClass::Singular, CceClass::Regular] {
            assert!(cce_check(&p, &m, class).holds, "{class:?} infeasible");
            let out = outperforms_nash(&p, &law, class).unwrap();
            assert!(out.holds, "{class:?} should outperform at this point");
        }
    }

    #[test]
    fn alpha_bar_contract() {
        let root = alpha_bar_solve(0.1, 0.2, 2.0).unwrap();
        assert!(root > 0.0 && root < 1.0);
        assert!(knife_edge_residual(0.1, 0.2, 2.0, root).abs() < 1e-12);
    }

    #[test]
    fn moment_triple_validation() {
        assert!(MomentTriple::new(1.0, 1.0, 1.0).is_ok());
        assert!(MomentTriple::new(0.0, 1.0, 1.0).is_err());
        let p = fig1();
        let m = gamma_moments_triple(&p, &GammaLaw::new(2.0, 2.0).unwrap());
        assert!(m.jensen_consistent(&p));
    }
}
