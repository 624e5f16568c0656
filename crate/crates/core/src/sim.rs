//! Monte Carlo engine: Euler-Maruyama paths for the reflected and
//! drift-controlled dynamics, ergodic time-average estimators, and the
//! N-player harness for the approximation error of mean-field solutions.
//!
//! Reflection uses the projection scheme: from the proposal
//! x' = x·(1 - δ·dt + σ·√dt·Z), the next state is max(a, x') and the control
//! increment is the projection residual max(0, a - x'). Complementarity
//! (the control acts only when the proposal falls below the barrier) holds
//! by construction at every step.
//!
//! Every path owns an RNG stream derived deterministically from
//! (seed, unit index), so results are bit-identical regardless of how work
//! is distributed over threads; aggregation is compensated and runs in index
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma as GammaDist, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{
    gamma_moments_triple, mfc_f, mfc_solve, nash_solve,
    regular_kernel_moment, reward_cce, reward_deviator, CceClass, GammaLaw, MomentTriple,
};
use crate::model::{deviation_constant, ergodic_reward, BarrierPolicy, ModelParams};
use crate::numerics::Kahan;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("state became nonfinite at path {path}, step {step}; reduce dt")]
    UnstableStep { path: u64, step: u64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Initial condition of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    Point(f64),
    Gamma { shape: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub x0: InitialLaw,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, burn_in: f64, n_paths: usize, seed: u64) -> Self {
        SimConfig { dt, horizon, burn_in, n_paths, seed, x0: InitialLaw::Point(1.0) }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 < dt < horizon, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 <= burn_in < horizon, got burn_in = {}",
                self.burn_in
            )));
        }
        if self.n_paths == 0 {
            return Err(SimError::InvalidConfig("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    fn steps(&self) -> (u64, u64) {
        let n = (self.horizon / self.dt).round() as u64;
        let burn = (self.burn_in / self.dt).round() as u64;
        (n, burn.min(n.saturating_sub(1)))
    }
}

/// Time averages gathered over [burn_in, horizon] of one path (or, after
/// aggregation, averaged across paths).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    /// Time average of p·x^α dt - q·dν over the window.
    pub time_avg_reward: f64,
    /// Time averages of x^k for each requested exponent k.
    pub time_avg_moments: Vec<(f64, f64)>,
    /// Total control dispensed over the window, per unit time.
    pub terminal_control: f64,
    /// Time average of x over the window.
    pub empirical_mean: f64,
    /// Smallest state visited after the first step.
    pub min_state: f64,
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_initial(law: &InitialLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        InitialLaw::Point(x0) => *x0,
        InitialLaw::Gamma { shape, scale } => {
            GammaDist::new(*shape, *scale).expect("positive gamma parameters").sample(rng)
        }
    }
}

struct WindowAccum {
    reward: Kahan,
    moments: Vec<Kahan>,
    mean: Kahan,
    time: Kahan,
    control: Kahan,
    min_state: f64,
}

impl WindowAccum {
    fn new(n_moments: usize) -> Self {
        WindowAccum {
            reward: Kahan::default(),
            moments: vec![Kahan::default(); n_moments],
            mean: Kahan::default(),
            time: Kahan::default(),
            control: Kahan::default(),
            min_state: f64::INFINITY,
        }
    }

    fn finish(self, exponents: &[f64]) -> PathStats {
        let w = self.time.total();
        PathStats {
            time_avg_reward: self.reward.total() / w,
            time_avg_moments: exponents
                .iter()
                .zip(&self.moments)
                .map(|(&k, acc)| (k, acc.total() / w))
                .collect(),
            terminal_control: self.control.total() / w,
            empirical_mean: self.mean.total() / w,
            min_state: self.min_state,
        }
    }
}

fn run_reflected_path(
    params: &ModelParams,
    a: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
    index: u64,
) -> Result<PathStats, SimError> {
    let mut rng = stream_rng(cfg.seed, index);
    let mut x = draw_initial(&cfg.x0, &mut rng);
    let (n_steps, burn_steps) = cfg.steps();
    let sqrt_dt = cfg.dt.sqrt();
    let drift = 1.0 - params.delta * cfg.dt;
    let vol = params.sigma * sqrt_dt;
    let mut acc = WindowAccum::new(exponents.len());
    for step in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let proposal = x * (drift + vol * z);
        if !proposal.is_finite() {
            return Err(SimError::UnstableStep { path: index, step });
        }
        let dnu = (a - proposal).max(0.0);
        x = proposal + dnu;
        debug_assert!(x >= a);
        debug_assert!(dnu == 0.0 || proposal < a);
        if step >= burn_steps {
            acc.reward.add(price * x.powf(params.alpha) * cfg.dt);
            acc.reward.add(-params.q * dnu);
            for (k, m) in exponents.iter().zip(acc.moments.iter_mut()) {
                m.add(x.powf(*k) * cfg.dt);
            }
            acc.mean.add(x * cfg.dt);
            acc.control.add(dnu);
            acc.time.add(cfg.dt);
            acc.min_state = acc.min_state.min(x);
        }
    }
    Ok(acc.finish(exponents))
}

fn run_regular_path(
    params: &ModelParams,
    theta: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
    index: u64,
) -> Result<PathStats, SimError> {
    let mut rng = stream_rng(cfg.seed, index);
    let mut x = draw_initial(&cfg.x0, &mut rng);
    let (n_steps, burn_steps) = cfg.steps();
    let sqrt_dt = cfg.dt.sqrt();
    // Euler steps can cross zero even though the continuous process cannot.
    let floor = 1e-12 * theta.max(1.0);
    let control_rate = params.delta * theta;
    let mut acc = WindowAccum::new(exponents.len());
    for step in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += params.delta * (theta - x) * cfg.dt + params.sigma * x * sqrt_dt * z;
        if !x.is_finite() {
            return Err(SimError::UnstableStep { path: index, step });
        }
        x = x.max(floor);
        if step >= burn_steps {
            acc.reward.add((price * x.powf(params.alpha) - params.q * control_rate) * cfg.dt);
            for (k, m) in exponents.iter().zip(acc.moments.iter_mut()) {
                m.add(x.powf(*k) * cfg.dt);
            }
            acc.mean.add(x * cfg.dt);
            acc.control.add(control_rate * cfg.dt);
            acc.time.add(cfg.dt);
            acc.min_state = acc.min_state.min(x);
        }
    }
    Ok(acc.finish(exponents))
}

/// Averages per-path statistics (minimum for `min_state`), in index order
/// with compensated sums.
pub fn aggregate_paths(paths: &[PathStats]) -> PathStats {
    let n = paths.len() as f64;
    let mut reward = Kahan::default();
    let mut mean = Kahan::default();
    let mut control = Kahan::default();
    let mut min_state = f64::INFINITY;
    let n_moments = paths.first().map_or(0, |p| p.time_avg_moments.len());
    let mut moments = vec![Kahan::default(); n_moments];
    for p in paths {
        reward.add(p.time_avg_reward);
        mean.add(p.empirical_mean);
        control.add(p.terminal_control);
        min_state = min_state.min(p.min_state);
        for (acc, (_, v)) in moments.iter_mut().zip(&p.time_avg_moments) {
            acc.add(*v);
        }
    }
    PathStats {
        time_avg_reward: reward.total() / n,
        time_avg_moments: paths
            .first()
            .map(|p| {
                p.time_avg_moments
                    .iter()
                    .zip(&moments)
                    .map(|(&(k, _), acc)| (k, acc.total() / n))
                    .collect()
            })
            .unwrap_or_default(),
        terminal_control: control.total() / n,
        empirical_mean: mean.total() / n,
        min_state,
    }
}

/// Per-path statistics for the reflected dynamics at barrier `a` with profit
/// weight `price`.
pub fn simulate_reflected_paths(
    params: &ModelParams,
    a: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
) -> Result<Vec<PathStats>, SimError> {
    cfg.validate()?;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| run_reflected_path(params, a, price, cfg, exponents, i))
        .collect()
}

/// Cross-path aggregate for the reflected dynamics.
pub fn simulate_reflected(
    params: &ModelParams,
    a: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
) -> Result<PathStats, SimError> {
    Ok(aggregate_paths(&simulate_reflected_paths(params, a, price, cfg, exponents)?))
}

/// Per-path statistics for the drift-controlled dynamics
/// dX = δ(θ - X)dt + σX dW with control cost qδθ per unit time.
pub fn simulate_regular_paths(
    params: &ModelParams,
    theta: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
) -> Result<Vec<PathStats>, SimError> {
    cfg.validate()?;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| run_regular_path(params, theta, price, cfg, exponents, i))
        .collect()
}

pub fn simulate_regular(
    params: &ModelParams,
    theta: f64,
    price: f64,
    cfg: &SimConfig,
    exponents: &[f64],
) -> Result<PathStats, SimError> {
    Ok(aggregate_paths(&simulate_regular_paths(params, theta, price, cfg, exponents)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Reflected(f64),
    Regular(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardEstimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
}

fn mean_ci(values: &[f64]) -> RewardEstimate {
    let n = values.len() as f64;
    let mut sum = Kahan::default();
    for v in values {
        sum.add(*v);
    }
    let mean = sum.total() / n;
    let mut var = Kahan::default();
    for v in values {
        var.add((v - mean) * (v - mean));
    }
    let sd = if values.len() > 1 { (var.total() / (n - 1.0)).sqrt() } else { 0.0 };
    RewardEstimate { mean, ci_halfwidth: 1.96 * sd / n.sqrt() }
}

/// Across-path mean of the time-average reward with a normal-approximation
/// 95% confidence interval.
pub fn estimate_reward(
    params: &ModelParams,
    policy: Policy,
    price: f64,
    cfg: &SimConfig,
) -> Result<RewardEstimate, SimError> {
    let paths = match policy {
        Policy::Reflected(a) => simulate_reflected_paths(params, a, price, cfg, &[])?,
        Policy::Regular(theta) => simulate_regular_paths(params, theta, price, cfg, &[])?,
    };
    let rewards: Vec<f64> = paths.iter().map(|p| p.time_avg_reward).collect();
    Ok(mean_ci(&rewards))
}

/// Which stationary law to compare empirical moments against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticLaw {
    /// Pareto-tailed law of the process reflected at `a`.
    ReflectedBarrier(f64),
    /// Inverse-gamma-type kernel of the drift-controlled process at mean θ.
    RegularKernel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub k: f64,
    pub empirical: f64,
    pub analytic: f64,
    pub rel_error: f64,
}

/// Relative errors between gathered time-average moments and the analytic
/// stationary moments.
pub fn ks_moment_check(
    params: &ModelParams,
    stats: &PathStats,
    law: AnalyticLaw,
) -> Vec<MomentCheck> {
    stats
        .time_avg_moments
        .iter()
        .map(|&(k, emp)| {
            let analytic = match law {
                AnalyticLaw::ReflectedBarrier(a) => BarrierPolicy::new(a, *params)
                    .stationary_moment(k)
                    .expect("moment order outside [0, 2]"),
                AnalyticLaw::RegularKernel(theta) => regular_kernel_moment(params, theta, k),
            };
            MomentCheck { k, empirical: emp, analytic, rel_error: (emp - analytic) / analytic }
        })
        .collect()
}

/// Which equilibrium the moderator recommends in the N-player harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumSpec {
    CceSingular(GammaLaw),
    CceRegular(GammaLaw),
    Nash,
    CentralPlanner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    pub sim: SimConfig,
    /// Independent draws of the correlation device; each draw is shared by
    /// every recommended player of that replication.
    pub replications: usize,
    /// Size of the recommended-player reference pool used as the common
    /// empirical baseline (must exceed the largest N).
    pub reference_pool: usize,
}

impl EpsilonConfig {
    pub fn new(sim: SimConfig, replications: usize) -> Self {
        EpsilonConfig { sim, replications, reference_pool: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub n_players: usize,
    /// Estimated best-deviation gain minus recommendation payoff.
    pub gap: f64,
    pub ci_halfwidth: f64,
    /// Player 1's estimated payoff when following the recommendation.
    pub rec_payoff: f64,
    pub rec_ci: f64,
}

struct RepOutcome {
    payload: Vec<f64>,
    rec: Vec<f64>,
}

/// Estimates the deviation gap of a recommended profile in the N-player game
/// for each N in `n_list`.
///
/// Per replication, one draw of θ∞ is shared by all recommended players.
/// Player 1's deviation is the closed-form best response to the theoretical
/// moment E[θ∞^β], i.e. the reflection at K·E[θ∞^β]^(1/(1-α)), played
/// against the other N-1 recommended players' empirical average.
///
/// Estimator: the gap splits into its exact mean-field value (closed form in
/// the law's moments) plus a finite-N interaction term. For reflection
/// recommendations, the deviator driven by the same noise as player 1 is the
/// exact scalar multiple (a_dev/a_rec)·X₁ of her state, so the interaction
/// reduces to (r^α - 1)·avg[X₁^α·((θ̄_N)^β - (θ̄_pool)^β)], where the pool
/// average (the same scheme at large population) cancels the discretization
/// bias of θ̄_N. Fluctuation terms with exactly known
/// conditional means are omitted from the average (they contribute zero mean
/// and only variance). The Nash profile is its own best response, so its
/// deviator runs on an independent stream and the reported gap is a noisy
/// zero.
pub fn estimate_epsilon_n(
    params: &ModelParams,
    spec: EquilibriumSpec,
    n_list: &[usize],
    cfg: &EpsilonConfig,
) -> Result<Vec<EpsilonEstimate>, SimError> {
    cfg.sim.validate()?;
    if cfg.replications < 2 {
        return Err(SimError::InvalidConfig("need at least 2 replications".into()));
    }
    if n_list.iter().any(|&n| n < 2) {
        return Err(SimError::InvalidConfig("every N must be at least 2".into()));
    }
    let max_n = *n_list.iter().max().unwrap();
    let pool = cfg.reference_pool.max(4 * (max_n - 1)).max(8);

    let k_const = deviation_constant(params);
    // Law moments and the exact mean-field gap component.
    let (m_triple, mf_gap): (MomentTriple, f64) = match spec {
        EquilibriumSpec::CceSingular(law) => {
            let m = gamma_moments_triple(params, &law);
            (m, reward_deviator(params, &m) - reward_cce(params, CceClass::Singular, &m))
        }
        EquilibriumSpec::CceRegular(law) => {
            let m = gamma_moments_triple(params, &law);
            (m, reward_deviator(params, &m) - reward_cce(params, CceClass::Regular, &m))
        }
        EquilibriumSpec::Nash => {
            let theta = nash_solve(params)
                .theta
                .ok_or_else(|| SimError::InvalidConfig("no unique Nash equilibrium here".into()))?;
            (MomentTriple::degenerate(params, theta), 0.0)
        }
        EquilibriumSpec::CentralPlanner => {
            let theta = mfc_solve(params)
                .theta
                .filter(|t| *t > 0.0)
                .ok_or_else(|| SimError::InvalidConfig("planner problem has no barrier solution".into()))?;
            let m = MomentTriple::degenerate(params, theta);
            let a_dev = k_const * m.m_beta.powf(1.0 / (1.0 - params.alpha));
            let gap = ergodic_reward(params, a_dev, m.m_beta) - mfc_f(params, theta);
            (m, gap)
        }
    };
    let a_dev = k_const * m_triple.m_beta.powf(1.0 / (1.0 - params.alpha));
    let barrier_of = |theta: f64| 2.0 * params.delta / params.two_delta_plus_sigma2() * theta;

    let outcomes: Vec<RepOutcome> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(params, spec, n_list, &cfg.sim, pool, a_dev, barrier_of, rep))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let payloads: Vec<f64> = outcomes.iter().map(|o| o.payload[j]).collect();
        let recs: Vec<f64> = outcomes.iter().map(|o| o.rec[j]).collect();
        let pay = mean_ci(&payloads);
        let rec = mean_ci(&recs);
        out.push(EpsilonEstimate {
            n_players: n,
            gap: mf_gap + pay.mean,
            ci_halfwidth: pay.ci_halfwidth.max(f64::MIN_POSITIVE),
            rec_payoff: rec.mean,
            rec_ci: rec.ci_halfwidth,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn run_replication(
    params: &ModelParams,
    spec: EquilibriumSpec,
    n_list: &[usize],
    sim: &SimConfig,
    pool: usize,
    a_dev: f64,
    barrier_of: impl Fn(f64) -> f64,
    rep: u64,
) -> Result<RepOutcome, SimError> {
    let mut rng = stream_rng(sim.seed, rep);
    let theta_inf = match spec {
        EquilibriumSpec::CceSingular(law) | EquilibriumSpec::CceRegular(law) => {
            GammaDist::new(law.shape, law.scale)
                .expect("positive gamma parameters")
                .sample(&mut rng)
        }
        EquilibriumSpec::Nash => nash_solve(params).theta.unwrap(),
        EquilibriumSpec::CentralPlanner => mfc_solve(params).theta.unwrap(),
    };
    let regular_rec = matches!(spec, EquilibriumSpec::CceRegular(_));
    let nash_mode = matches!(spec, EquilibriumSpec::Nash);
    let a_rec = barrier_of(theta_inf);

    let (n_steps, burn_steps) = sim.steps();
    let dt = sim.dt;
    let sqrt_dt = dt.sqrt();
    let drift = 1.0 - params.delta * dt;
    let vol = params.sigma * sqrt_dt;
    let floor = 1e-12 * theta_inf.max(1.0);
    let ratio_coef = (a_dev / a_rec).powf(params.alpha) - 1.0;

    let mut others = vec![if regular_rec { theta_inf } else { a_rec }; pool];
    let mut x1 = if regular_rec { theta_inf } else { a_rec };
    // Deviator state: simulated only when the scalar coupling to x1 does not
    // apply (regular recommendations, independent Nash deviator).
    let mut xd = a_dev;
    let mut cuts: Vec<usize> = n_list.iter().map(|&n| n - 1).collect();
    cuts.sort_unstable();

    let mut payload = vec![Kahan::default(); n_list.len()];
    let mut rec_profit = vec![Kahan::default(); n_list.len()];
    let mut dev_cost = Kahan::default();
    let mut rec_cost = Kahan::default();
    let mut dev_profit = vec![Kahan::default(); n_list.len()];
    let mut time = Kahan::default();
    let mut partial = vec![0.0f64; n_list.len()];

    for step in 0..n_steps {
        // Recommended pool.
        let mut sum = 0.0;
        let mut next_cut = 0usize;
        for (j, x) in others.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let nx = if regular_rec {
                (*x + params.delta * (theta_inf - *x) * dt + params.sigma * *x * sqrt_dt * z)
                    .max(floor)
            } else {
                (*x * (drift + vol * z)).max(a_rec)
            };
            if !nx.is_finite() {
                return Err(SimError::UnstableStep { path: rep, step });
            }
            *x = nx;
            sum += nx;
            while next_cut < cuts.len() && j + 1 == cuts[next_cut] {
                partial[next_cut] = sum;
                next_cut += 1;
            }
        }
        let pool_mean_b = (sum / pool as f64).powf(params.beta);

        // Player 1 under the recommendation.
        let z1: f64 = rng.sample(StandardNormal);
        let dnu1;
        if regular_rec {
            x1 = (x1 + params.delta * (theta_inf - x1) * dt + params.sigma * x1 * sqrt_dt * z1)
                .max(floor);
            dnu1 = params.delta * theta_inf * dt;
        } else {
            let proposal = x1 * (drift + vol * z1);
            dnu1 = (a_rec - proposal).max(0.0);
            x1 = proposal + dnu1;
        }
        if !x1.is_finite() {
            return Err(SimError::UnstableStep { path: rep, step });
        }

        // Explicit deviator path where needed: same noise as player 1 for
        // the regular recommendation, independent noise for Nash.
        let mut dnud = 0.0;
        if regular_rec || nash_mode {
            let zd: f64 = if nash_mode { rng.sample(StandardNormal) } else { z1 };
            let proposal = xd * (drift + vol * zd);
            dnud = (a_dev - proposal).max(0.0);
            xd = proposal + dnud;
            if !xd.is_finite() {
                return Err(SimError::UnstableStep { path: rep, step });
            }
        }

        if step >= burn_steps {
            let x1a = x1.powf(params.alpha);
            time.add(dt);
            rec_cost.add(if regular_rec { params.q * params.delta * theta_inf * dt } else { params.q * dnu1 });
            if regular_rec || nash_mode {
                dev_cost.add(params.q * dnud);
            }
            let xda = if regular_rec || nash_mode { xd.powf(params.alpha) } else { 0.0 };
            for (idx, &cut) in cuts.iter().enumerate() {
                let theta_bar_b = (partial[idx] / cut as f64).powf(params.beta);
                rec_profit[idx].add(x1a * theta_bar_b * dt);
                if nash_mode {
                    dev_profit[idx].add(xda * theta_bar_b * dt);
                } else if regular_rec {
                    payload[idx].add((xda - x1a) * (theta_bar_b - pool_mean_b) * dt);
                } else {
                    payload[idx].add(x1a * (theta_bar_b - pool_mean_b) * dt);
                }
            }
        }
    }

    let w = time.total();
    let mut payload_out = vec![0.0; n_list.len()];
    let mut rec_out = vec![0.0; n_list.len()];
    // cuts are sorted; map back to the caller's N order.
    let mut order: Vec<usize> = (0..n_list.len()).collect();
    order.sort_unstable_by_key(|&i| n_list[i]);
    for (sorted_idx, &orig_idx) in order.iter().enumerate() {
        let rec = (rec_profit[sorted_idx].total() - rec_cost.total()) / w;
        rec_out[orig_idx] = rec;
        payload_out[orig_idx] = if nash_mode {
            (dev_profit[sorted_idx].total() - dev_cost.total()) / w - rec
        } else if matches!(spec, EquilibriumSpec::CceRegular(_)) {
            payload[sorted_idx].total() / w
        } else {
            ratio_coef * payload[sorted_idx].total() / w
        };
    }
    Ok(RepOutcome { payload: payload_out, rec: rec_out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn fig1() -> ModelParams {
        ModelParams::new(0.1, 0.2, 2.0, 0.3, 0.5)
    }

    fn quick_cfg(seed: u64) -> SimConfig {
        SimConfig { dt: 1e-3, horizon: 300.0, burn_in: 50.0, n_paths: 16, seed, x0: InitialLaw::Point(1.0) }
    }

    #[test]
    fn config_validation() {
        let mut cfg = quick_cfg(1);
        assert!(cfg.validate().is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = quick_cfg(1);
        cfg.burn_in = 400.0;
        assert!(cfg.validate().is_err());
        let mut cfg = quick_cfg(1);
        cfg.n_paths = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reflected_paths_stay_above_barrier() {
        let p = fig1();
        let mut cfg = quick_cfg(2);
        cfg.x0 = InitialLaw::Point(0.2); // starts below the barrier
        let stats = simulate_reflected(&p, 1.0, 1.0, &cfg, &[]).unwrap();
        assert!(stats.min_state >= 1.0);
    }

    #[test]
    fn reflected_mean_matches_closed_form() {
        let p = fig1();
        let mut cfg = quick_cfg(3);
        cfg.horizon = 600.0;
        cfg.burn_in = 60.0;
        cfg.x0 = InitialLaw::Point(1.0);
        let stats = simulate_reflected(&p, 1.0, 1.0, &cfg, &[]).unwrap();
        let want = BarrierPolicy::new(1.0, p).stationary_mean();
        let rel = (stats.empirical_mean - want).abs() / want;
        assert!(rel < 0.02, "mean {} vs {want} (rel {rel:.4})", stats.empirical_mean);
    }

    #[test]
    fn reflected_reward_matches_ergodic_functional() {
        let p = fig1();
        let mut cfg = quick_cfg(4);
        cfg.horizon = 600.0;
        cfg.burn_in = 60.0;
        let stats = simulate_reflected(&p, 1.0, 1.0, &cfg, &[]).unwrap();
        let want = ergodic_reward(&p, 1.0, 1.0);
        let rel = (stats.time_avg_reward - want).abs() / want.abs();
        assert!(rel < 0.02, "reward {} vs {want}", stats.time_avg_reward);
    }

    #[test]
    fn control_is_nondecreasing_across_checkpoints() {
        // Same stream prefix: a longer horizon accumulates at least as much
        // control as a shorter one.
        let p = fig1();
        let short = SimConfig { dt: 1e-3, horizon: 50.0, burn_in: 0.0, n_paths: 4, seed: 5, x0: InitialLaw::Point(1.0) };
        let long = SimConfig { horizon: 100.0, ..short };
        let s = simulate_reflected(&p, 1.0, 1.0, &short, &[]).unwrap();
        let l = simulate_reflected(&p, 1.0, 1.0, &long, &[]).unwrap();
        // terminal_control is per unit time; totals must be nondecreasing.
        assert!(l.terminal_control * 100.0 >= s.terminal_control * 50.0);
    }

    #[test]
    fn regular_mean_approaches_theta() {
        // Small-scale smoke test; the default-scale run in the integration
        // suite holds the 1% line.
        let p = fig1();
        let mut cfg = quick_cfg(6);
        cfg.horizon = 600.0;
        cfg.burn_in = 60.0;
        cfg.x0 = InitialLaw::Point(2.0);
        let theta = 2.0;
        let stats = simulate_regular(&p, theta, theta.powf(p.beta), &cfg, &[]).unwrap();
        let rel = (stats.empirical_mean - theta).abs() / theta;
        assert!(rel < 0.025, "mean {} vs {theta}", stats.empirical_mean);
    }

    #[test]
    fn regular_alpha_moment_matches_kernel() {
        let p = fig1();
        let mut cfg = quick_cfg(7);
        cfg.horizon = 600.0;
        cfg.burn_in = 60.0;
        cfg.x0 = InitialLaw::Point(1.0);
        let stats = simulate_regular(&p, 1.0, 1.0, &cfg, &[p.alpha]).unwrap();
        let want = regular_kernel_moment(&p, 1.0, p.alpha);
        let got = stats.time_avg_moments[0].1;
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");
    }

    #[test]
    fn regular_with_zero_theta_decays() {
        let p = fig1();
        let early = SimConfig { dt: 1e-3, horizon: 10.0, burn_in: 0.0, n_paths: 8, seed: 8, x0: InitialLaw::Point(5.0) };
        let late = SimConfig { horizon: 40.0, burn_in: 20.0, ..early };
        let e = simulate_regular(&p, 0.0, 0.0, &early, &[]).unwrap();
        let l = simulate_regular(&p, 0.0, 0.0, &late, &[]).unwrap();
        assert!(l.empirical_mean < e.empirical_mean);
    }

    #[test]
    fn gamma_initial_condition_is_deterministic() {
        let p = fig1();
        let mut cfg = quick_cfg(9);
        cfg.x0 = InitialLaw::Gamma { shape: 2.0, scale: 1.0 };
        let a = simulate_reflected(&p, 1.0, 1.0, &cfg, &[]).unwrap();
        let b = simulate_reflected(&p, 1.0, 1.0, &cfg, &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_seed_same_result_across_thread_counts() {
        let p = fig1();
        let cfg = quick_cfg(10);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| simulate_reflected(&p, 1.0, 1.0, &cfg, &[0.5]).unwrap());
        let b = multi.install(|| simulate_reflected(&p, 1.0, 1.0, &cfg, &[0.5]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn unstable_step_is_reported() {
        let p = fig1();
        let cfg = SimConfig {
            dt: 1e300,
            horizon: 1e303,
            burn_in: 0.0,
            n_paths: 1,
            seed: 11,
            x0: InitialLaw::Point(1.0),
        };
        match simulate_regular(&p, 1.0, 1.0, &cfg, &[]) {
            Err(SimError::UnstableStep { .. }) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn reward_estimate_prefers_the_optimal_barrier() {
        let p = fig1();
        let price = 1.0;
        let a_star = crate::model::optimal_barrier(&p, price, 0.0).unwrap();
        let mut cfg = quick_cfg(12);
        cfg.horizon = 400.0;
        cfg.burn_in = 40.0;
        cfg.n_paths = 24;
        let best = estimate_reward(&p, Policy::Reflected(a_star), price, &cfg).unwrap();
        for factor in [0.5, 2.0] {
            let off = estimate_reward(&p, Policy::Reflected(factor * a_star), price, &cfg).unwrap();
            assert!(
                best.mean - best.ci_halfwidth > off.mean + off.ci_halfwidth,
                "optimal barrier not separated from {factor}x barrier"
            );
        }
    }

    #[test]
    fn zero_price_reward_is_nonpositive() {
        let p = fig1();
        let cfg = quick_cfg(13);
        let r = estimate_reward(&p, Policy::Reflected(1.0), 0.0, &cfg).unwrap();
        assert!(r.mean <= 0.0);
        let r = estimate_reward(&p, Policy::Regular(1.0), 0.0, &cfg).unwrap();
        assert!(r.mean <= 0.0);
    }

    #[test]
    fn ci_shrinks_with_path_count() {
        let p = fig1();
        let mut cfg16 = quick_cfg(14);
        cfg16.n_paths = 16;
        let mut cfg64 = quick_cfg(14);
        cfg64.n_paths = 64;
        let a = estimate_reward(&p, Policy::Reflected(1.0), 1.0, &cfg16).unwrap();
        let b = estimate_reward(&p, Policy::Reflected(1.0), 1.0, &cfg64).unwrap();
        let ratio = a.ci_halfwidth / b.ci_halfwidth;
        // CLT predicts 2; allow a factor-2 band around it.
        assert!(ratio > 1.0 && ratio < 4.0, "CI ratio {ratio}");
    }

    #[test]
    fn moment_checks_on_both_laws() {
        let p = fig1();
        let mut cfg = quick_cfg(15);
        cfg.horizon = 600.0;
        cfg.burn_in = 60.0;
        let ks = [0.0, 0.5, 1.0, p.alpha, p.alpha + p.beta];
        let stats = simulate_reflected(&p, 1.0, 1.0, &cfg, &ks).unwrap();
        let checks = ks_moment_check(&p, &stats, AnalyticLaw::ReflectedBarrier(1.0));
        assert_eq!(checks[0].rel_error, 0.0, "zeroth moment must be exact");
        for c in &checks[1..] {
            assert!(c.rel_error.abs() < 0.02, "k = {}: rel {}", c.k, c.rel_error);
        }
        let stats = simulate_regular(&p, 1.0, 1.0, &cfg, &[1.0]).unwrap();
        let checks = ks_moment_check(&p, &stats, AnalyticLaw::RegularKernel(1.0));
        assert!(checks[0].rel_error.abs() < 0.01);
    }

    #[test]
    fn second_moment_bounded_by_quadratic_envelope() {
        let p = fig1();
        // Closed-form coefficient of the k = 2 moment, with 10% headroom.
        let c = p.two_delta_plus_sigma2() / (2.0 * p.delta - p.sigma * p.sigma) * 1.1;
        for a in [0.5, 1.0, 2.0] {
            let mut cfg = quick_cfg(16);
            cfg.x0 = InitialLaw::Point(a);
            let stats = simulate_reflected(&p, a, 1.0, &cfg, &[2.0]).unwrap();
            let x2 = stats.time_avg_moments[0].1;
            assert!(x2 <= c * (1.0 + a * a), "a = {a}: {x2} vs bound {}", c * (1.0 + a * a));
        }
    }

    #[test]
    fn halving_dt_moves_reward_less_than_ci() {
        let p = fig1();
        let mut coarse = quick_cfg(17);
        coarse.dt = 2e-3;
        coarse.horizon = 400.0;
        coarse.burn_in = 40.0;
        coarse.n_paths = 32;
        let mut fine = coarse;
        fine.dt = 1e-3;
        let a = estimate_reward(&p, Policy::Reflected(1.0), 1.0, &coarse).unwrap();
        let b = estimate_reward(&p, Policy::Reflected(1.0), 1.0, &fine).unwrap();
        assert!((a.mean - b.mean).abs() < a.ci_halfwidth + b.ci_halfwidth);
    }

    #[test]
    fn nash_recommendation_payoff_matches_f_theta_star() {
        let p = fig1();
        let sim = SimConfig { dt: 2e-3, horizon: 400.0, burn_in: 40.0, n_paths: 1, seed: 18, x0: InitialLaw::Point(1.0) };
        let cfg = EpsilonConfig { sim, replications: 24, reference_pool: 16 };
        let est = estimate_epsilon_n(&p, EquilibriumSpec::Nash, &[4], &cfg).unwrap();
        let want = mfc_f(&p, nash_solve(&p).theta.unwrap());
        let rel = (est[0].rec_payoff - want).abs() / want.abs();
        assert!(rel < 0.02, "rec payoff {} vs f(theta*) {want}", est[0].rec_payoff);
        assert!(est[0].gap.abs() < 3.0 * est[0].ci_halfwidth.max(0.02 * want.abs()));
        assert!(est[0].ci_halfwidth > 0.0);
    }

    #[test]
    fn epsilon_gaps_decay_for_singular_cce() {
        let p = fig1();
        let law = GammaLaw { shape: 1.0, scale: 30.0 };
        let sim = SimConfig { dt: 1e-2, horizon: 800.0, burn_in: 100.0, n_paths: 1, seed: 19, x0: InitialLaw::Point(1.0) };
        let cfg = EpsilonConfig { sim, replications: 64, reference_pool: 64 };
        let est = estimate_epsilon_n(&p, EquilibriumSpec::CceSingular(law), &[2, 32], &cfg).unwrap();
        let (g2, g32) = (est[0].gap, est[1].gap);
        assert!(
            g32 < g2 + est[0].ci_halfwidth + est[1].ci_halfwidth,
            "gap(32) = {g32} not below gap(2) = {g2} within noise"
        );
    }

    #[test]
    fn central_planner_profile_is_exploitable() {
        // Individual deviation from the cooperative profile gains a positive
        // margin that persists in N.
        let p = fig1();
        let sim = SimConfig { dt: 5e-3, horizon: 300.0, burn_in: 50.0, n_paths: 1, seed: 20, x0: InitialLaw::Point(1.0) };
        let cfg = EpsilonConfig { sim, replications: 16, reference_pool: 16 };
        let est = estimate_epsilon_n(&p, EquilibriumSpec::CentralPlanner, &[4], &cfg).unwrap();
        assert!(est[0].gap > 0.0, "gap {}", est[0].gap);
    }
}
