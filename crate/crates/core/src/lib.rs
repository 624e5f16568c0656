//! Equilibria of an ergodic singular-control mean-field game.
//!
//! The state of a representative agent is a geometric Brownian motion
//! dX = -δX dt + σX dW pushed upward by a nondecreasing control, and agents
//! maximize a long-run average payoff with profit x^α·θ^β against the
//! population's stationary mean θ and a proportional control cost q. This
//! crate computes and cross-validates the three solution concepts in closed
//! form: the cooperative (central planner) optimum, the competitive Nash
//! equilibrium, and two classes of coarse correlated equilibria driven by a
//! random stationary mean. It also estimates their N-player approximation
//! quality by Monte Carlo.
//!
//! Modules:
//! - [`model`]: parameters, the reflected stationary law, and the
//!   single-agent barrier optimum.
//! - [`equilibria`]: the planner/Nash solvers, CCE constants, moment
//!   inequalities, and Gamma-law utilities.
//! - [`scan`]: region scans, constrained best-CCE search, critical-case u*
//!   curves, and comparative-statics sweeps.
//! - [`sim`]: Euler-Maruyama path simulation and the N-player deviation-gap
//!   harness.
//! - [`numerics`]: log-gamma, adaptive quadrature, and derivative-free
//!   optimizers shared by the above.

pub mod equilibria;
pub mod model;
pub mod numerics;
pub mod scan;
pub mod sim;

pub use equilibria::{
    alpha_bar_solve, cce_check, cce_constants, gamma_moment, gamma_moments_triple,
    knife_edge_residual, lagrange_multiplier, mfc_f, mfc_f_prime, mfc_solve, nash_solve,
    outperforms_nash, reward_cce, reward_deviator, reward_regular, reward_singular, CceCheck,
    CceClass, CceConstants, EquilibriaError, EquilibriumKind, EquilibriumReport,
    EquilibriumStatus, GammaLaw, MomentTriple, Outperformance,
};
pub use model::{
    deviation_constant, ergodic_reward, optimal_barrier, BarrierPolicy, ModelError, ModelParams,
    Regime, ValidationReport, DEFAULT_REGIME_TOL,
};
pub use scan::{
    best_cce, scan_region, sweep, u_star, BestCce, GridSpec, RegionCell, ScanError, Spacing,
    SweepPoint, SweepVariable, UStar,
};
pub use sim::{
    aggregate_paths, estimate_epsilon_n, estimate_reward, ks_moment_check, simulate_reflected,
    simulate_reflected_paths, simulate_regular, simulate_regular_paths, AnalyticLaw,
    EpsilonConfig, EpsilonEstimate, EquilibriumSpec, InitialLaw, MomentCheck, PathStats, Policy,
    RewardEstimate, SimConfig, SimError,
};
