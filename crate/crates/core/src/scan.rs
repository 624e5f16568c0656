//! Numerical search over the Gamma(u, v) family: region masks, constrained
//! reward maximization, the critical-case u* curves, and the comparative
//! statics sweeps.
//!
//! Everything here is deterministic: no RNG, fixed iteration orders, so
//! identical inputs reproduce bit-identical outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{
    cce_check, cce_constants, gamma_moments_triple, mfc_solve, nash_solve, reward_cce, CceClass,
    EquilibriumStatus, GammaLaw,
};
use crate::model::ModelParams;
use crate::numerics::{bisect, ln_gamma, nelder_mead_max};

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("outperformance is undefined at alpha + beta = 1 (no unique Nash baseline)")]
    OutperformanceUndefined,
    #[error("u_star requires beta = 1 - alpha, got alpha = {0}, beta = {1}")]
    NotCritical(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Rectangular search window over (u, v) with its resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    /// 200x200 log-spaced over [1e-2, 1e2]^2; covers the plotted regions at
    /// the reference parameters while keeping scans fast.
    pub fn default_region() -> Self {
        GridSpec {
            u_min: 1e-2,
            u_max: 1e2,
            v_min: 1e-2,
            v_max: 1e2,
            nu: 200,
            nv: 200,
            spacing: Spacing::Log,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.u_min > 0.0 && self.v_min > 0.0) {
            return Err(ScanError::InvalidGrid("grid bounds must be positive".into()));
        }
        if !(self.u_min < self.u_max && self.v_min < self.v_max) {
            return Err(ScanError::InvalidGrid("min must be below max".into()));
        }
        if self.nu < 2 || self.nv < 2 {
            return Err(ScanError::InvalidGrid("need at least 2 points per axis".into()));
        }
        Ok(())
    }

    fn axis(&self, min: f64, max: f64, n: usize) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => (0..n)
                .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
                .collect(),
            Spacing::Log => {
                let (lo, hi) = (min.ln(), max.ln());
                (0..n)
                    .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
    }

    pub fn u_axis(&self) -> Vec<f64> {
        self.axis(self.u_min, self.u_max, self.nu)
    }

    pub fn v_axis(&self) -> Vec<f64> {
        self.axis(self.v_min, self.v_max, self.nv)
    }
}

/// One grid cell of a region scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub u: f64,
    pub v: f64,
    pub exists_cce: bool,
    pub outperforms: bool,
    pub reward: f64,
}

/// Evaluates the class inequality (and, when requested, outperformance over
/// the Nash payoff) on every grid cell, in row-major order with u as the
/// outer axis.
pub fn scan_region(
    params: &ModelParams,
    grid: &GridSpec,
    class: CceClass,
    outperform: bool,
) -> Result<Vec<RegionCell>, ScanError> {
    grid.validate()?;
    let nash_reward = if outperform {
        match nash_solve(params).reward {
            Some(r) => Some(r),
            None => return Err(ScanError::OutperformanceUndefined),
        }
    } else {
        None
    };
    let us = grid.u_axis();
    let vs = grid.v_axis();
    let mut cells = Vec::with_capacity(us.len() * vs.len());
    for &u in &us {
        for &v in &vs {
            let law = GammaLaw { shape: u, scale: v };
            let m = gamma_moments_triple(params, &law);
            let check = cce_check(params, &m, class);
            let reward = reward_cce(params, class, &m);
            let outperforms = match nash_reward {
                Some(nr) => check.holds && reward - nr >= 0.0,
                None => false,
            };
            cells.push(RegionCell { u, v, exists_cce: check.holds, outperforms, reward });
        }
    }
    Ok(cells)
}

/// Best feasible point of a constrained reward maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestCce {
    pub u: f64,
    pub v: f64,
    pub reward: f64,
}

/// Maximizes the class reward over Gamma laws subject to the class CCE
/// inequality: deterministic coarse-grid seeding inside `bounds`, then
/// Nelder-Mead refinement in log coordinates (free to leave the seed box).
/// Returns `None` when no grid cell is feasible.
pub fn best_cce(params: &ModelParams, class: CceClass, bounds: &GridSpec) -> Option<BestCce> {
    bounds.validate().ok()?;
    let us = bounds.u_axis();
    let vs = bounds.v_axis();
    let mut incumbent: Option<BestCce> = None;
    for &u in &us {
        for &v in &vs {
            let m = gamma_moments_triple(params, &GammaLaw { shape: u, scale: v });
            if !cce_check(params, &m, class).holds {
                continue;
            }
            let reward = reward_cce(params, class, &m);
            if incumbent.is_none_or(|b| reward > b.reward) {
                incumbent = Some(BestCce { u, v, reward });
            }
        }
    }
    let seed = incumbent?;

    // Penalized objective in (ln u, ln v). The penalty slope is steep enough
    // that the simplex tracks the constraint boundary.
    let objective = |x: [f64; 2]| {
        let (u, v) = (x[0].exp(), x[1].exp());
        if !u.is_finite() || !v.is_finite() || u <= 0.0 || v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let m = gamma_moments_triple(params, &GammaLaw { shape: u, scale: v });
        let check = cce_check(params, &m, class);
        let reward = reward_cce(params, class, &m);
        if !reward.is_finite() || !check.slack.is_finite() {
            return f64::NEG_INFINITY;
        }
        reward + 1e3 * check.slack.min(0.0)
    };
    let (x, _) = nelder_mead_max(objective, [seed.u.ln(), seed.v.ln()], 0.5, 1e-10, 500);
    let (u, v) = (x[0].exp(), x[1].exp());
    let m = gamma_moments_triple(params, &GammaLaw { shape: u, scale: v });
    let check = cce_check(params, &m, class);
    let reward = reward_cce(params, class, &m);
    let consts = cce_constants(params);
    let rhs = match class {
        CceClass::Regular => consts.c_ab,
        CceClass::Singular => consts.c_ab_tilde,
    } * m.m_ab;
    if check.slack >= -1e-9 * rhs.abs() && reward >= seed.reward {
        Some(BestCce { u, v, reward })
    } else {
        Some(seed)
    }
}

/// Outcome of the critical-case maximal-shape computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UStar {
    Finite(f64),
    Infinite,
    Zero,
}

const U_CAP: f64 = 1e6;
const U_FLOOR: f64 = 1e-8;
const U_PROBES: usize = 2400;

/// At β = 1 - α the Gamma-law inequality no longer involves the scale v:
/// substituting the moments and dividing by v leaves
///
/// ```text
/// c_β · (Γ(1-α+u)/Γ(u))^(1/(1-α))  ≤  (c - c₁) · u,
/// ```
///
/// with c = c_{α+β} (regular) or c̃_{α+β} (singular). `u_star` returns the
/// maximal u below which the inequality holds for every smaller shape:
/// log-spaced probes up to 1e6 locate the first sign change, bisection
/// refines it. `Infinite` means no probe fails below the cap, `Zero` that the
/// inequality already fails as u → 0.
pub fn u_star(params: &ModelParams, class: CceClass) -> Result<UStar, ScanError> {
    if (params.alpha + params.beta - 1.0).abs() > 1e-9 {
        return Err(ScanError::NotCritical(params.alpha, params.beta));
    }
    let consts = cce_constants(params);
    let c = match class {
        CceClass::Regular => consts.c_ab,
        CceClass::Singular => consts.c_ab_tilde,
    };
    let inv = 1.0 / (1.0 - params.alpha);
    // Margin h(u) = RHS - LHS, evaluated through ln Γ so large shapes stay
    // finite.
    let margin = |u: f64| {
        (c - consts.c_one) * u
            - consts.c_beta * ((ln_gamma(1.0 - params.alpha + u) - ln_gamma(u)) * inv).exp()
    };
    let ln_lo = U_FLOOR.ln();
    let ln_hi = U_CAP.ln();
    let mut prev_u = U_FLOOR;
    if margin(prev_u) < 0.0 {
        return Ok(UStar::Zero);
    }
    for i in 1..=U_PROBES {
        let u = (ln_lo + (ln_hi - ln_lo) * i as f64 / U_PROBES as f64).exp();
        if margin(u) < 0.0 {
            let root = bisect(margin, prev_u, u, f64::MIN_POSITIVE, 200);
            return Ok(UStar::Finite(root));
        }
        prev_u = u;
    }
    Ok(UStar::Infinite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Sigma,
    Beta,
}

/// One point of a comparative-statics sweep. Reward fields are present only
/// when the corresponding solver reported a solution (or, for the CCE
/// columns, when a feasible Gamma law exists in the search window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub valid: bool,
    pub mfc_status: Option<EquilibriumStatus>,
    pub nash_status: Option<EquilibriumStatus>,
    pub mfc_reward: Option<f64>,
    pub nash_reward: Option<f64>,
    pub best_singular: Option<f64>,
    pub best_regular: Option<f64>,
}

/// Sweeps σ or β over `[lo, hi]` with `n` evenly spaced points, solving the
/// planner problem, the Nash problem, and both best-CCE searches per point.
/// Invalid parameter cells are recorded as infeasible, not fatal.
pub fn sweep(
    template: &ModelParams,
    variable: SweepVariable,
    lo: f64,
    hi: f64,
    n: usize,
    bounds: &GridSpec,
) -> Vec<SweepPoint> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let value = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        let mut p = *template;
        match variable {
            SweepVariable::Sigma => p.sigma = value,
            SweepVariable::Beta => p.beta = value,
        }
        if !p.is_valid() {
            out.push(SweepPoint {
                value,
                valid: false,
                mfc_status: None,
                nash_status: None,
                mfc_reward: None,
                nash_reward: None,
                best_singular: None,
                best_regular: None,
            });
            continue;
        }
        let mfc = mfc_solve(&p);
        let nash = nash_solve(&p);
        let best_s = best_cce(&p, CceClass::Singular, bounds).map(|b| b.reward);
        let best_r = best_cce(&p, CceClass::Regular, bounds).map(|b| b.reward);
        out.push(SweepPoint {
            value,
            valid: true,
            mfc_status: Some(mfc.status),
            nash_status: Some(nash.status),
            mfc_reward: mfc.reward,
            nash_reward: nash.reward,
            best_singular: best_s,
            best_regular: best_r,
        });
    }
    out
}
