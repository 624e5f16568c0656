//! `mfg`: command-line front-end for the ergodic mean-field game toolkit.
//!
//! Subcommands: mfc, nash, cce-check, cce-scan, best-cce, sweep, ustar,
//! simulate, epsilon. Each command resolves its inputs as command-line flags
//! over config-file values (`--config`, JSON) over built-in defaults, writes
//! CSV data files when `--out` applies, and prints a JSON summary to stdout.
//!
//! Exit codes: 0 success, 1 I/O, 2 validation failure, 3 undefined request
//! (e.g. outperformance on the knife edge), 4 numerical instability.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::RunConfig;
use ergodic_mfg::{
    aggregate_paths, alpha_bar_solve, best_cce, cce_check, ergodic_reward, estimate_epsilon_n,
    gamma_moments_triple, ks_moment_check, lagrange_multiplier, mfc_solve, nash_solve, scan_region,
    simulate_reflected_paths, simulate_regular_paths, sweep, u_star, AnalyticLaw, BarrierPolicy,
    CceClass, EpsilonConfig, EquilibriumSpec, EquilibriumStatus, GammaLaw, GridSpec, InitialLaw,
    ModelParams, MomentTriple, PathStats, SimConfig, SimError, Spacing, SweepVariable, UStar,
};
use output::{emit_json, fmt_f64, fmt_opt, CsvWriter, SCHEMA_VERSION};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_UNDEFINED: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "mfg", version, about = "Equilibria of an ergodic singular-control mean-field game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonOpts {
    /// Mean-reversion rate delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Volatility sigma.
    #[arg(long)]
    sigma: Option<f64>,
    /// Unit control cost q.
    #[arg(long)]
    q: Option<f64>,
    /// Own-state exponent alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Interaction exponent beta.
    #[arg(long)]
    beta: Option<f64>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<String>,
    /// Output file for commands that write CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (flags > MFG_SEED env > config > 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default, Clone)]
struct GridOpts {
    #[arg(long)]
    u_min: Option<f64>,
    #[arg(long)]
    u_max: Option<f64>,
    #[arg(long)]
    v_min: Option<f64>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    /// Grid spacing: linear or log.
    #[arg(long)]
    spacing: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
struct SimOpts {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Point-mass initial condition.
    #[arg(long)]
    x0: Option<f64>,
    /// Gamma initial condition: shape (with --x0-scale).
    #[arg(long)]
    x0_shape: Option<f64>,
    /// Gamma initial condition: scale (with --x0-shape).
    #[arg(long)]
    x0_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cooperative (central planner) problem.
    Mfc(MfcArgs),
    /// Solve the competitive mean-field game.
    Nash(NashArgs),
    /// Check the CCE moment inequality for a law.
    CceCheck(CceCheckArgs),
    /// Scan the Gamma(u, v) plane for CCEs.
    CceScan(CceScanArgs),
    /// Maximize the class reward over feasible Gamma laws.
    BestCce(BestCceArgs),
    /// Comparative statics over sigma or beta.
    Sweep(SweepArgs),
    /// Critical-case maximal shapes u* on an alpha grid (beta = 1 - alpha).
    Ustar(UstarArgs),
    /// Simulate a barrier or constant-rate policy and compare with closed forms.
    Simulate(SimulateArgs),
    /// Estimate N-player deviation gaps of a recommended profile.
    Epsilon(EpsilonArgs),
}

#[derive(Args)]
struct MfcArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct NashArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct CceCheckArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Recommendation class: regular or singular.
    #[arg(long)]
    class: Option<String>,
    /// Gamma-law shape of the random stationary mean.
    #[arg(long)]
    u: Option<f64>,
    /// Gamma-law scale of the random stationary mean.
    #[arg(long)]
    v: Option<f64>,
    /// Explicit E[theta^beta] (alternative to --u/--v).
    #[arg(long)]
    m_beta: Option<f64>,
    /// Explicit E[theta].
    #[arg(long)]
    m_one: Option<f64>,
    /// Explicit E[theta^(alpha+beta)].
    #[arg(long)]
    m_ab: Option<f64>,
}

#[derive(Args)]
struct CceScanArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[arg(long)]
    class: Option<String>,
    /// Also mark cells whose reward beats the Nash payoff.
    #[arg(long)]
    outperform: bool,
}

#[derive(Args)]
struct BestCceArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    grid: GridOpts,
    /// Swept variable: sigma or beta.
    #[arg(long)]
    variable: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct UstarArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    sim: SimOpts,
    /// Policy kind: reflected or regular.
    #[arg(long)]
    policy: Option<String>,
    /// Reflection barrier (reflected policy).
    #[arg(long)]
    a: Option<f64>,
    /// Target mean (regular policy).
    #[arg(long)]
    theta: Option<f64>,
    /// Profit weight p of p*x^alpha.
    #[arg(long)]
    price: Option<f64>,
}

#[derive(Args)]
struct EpsilonArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    sim: SimOpts,
    /// Recommendation: singular, regular, nash, or central-planner.
    #[arg(long)]
    kind: Option<String>,
    /// Gamma-law shape (CCE kinds).
    #[arg(long)]
    u: Option<f64>,
    /// Gamma-law scale (CCE kinds).
    #[arg(long)]
    v: Option<f64>,
    /// Comma-separated list of player counts.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    /// Recommended-player reference pool size.
    #[arg(long)]
    pool: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mfc(a) => cmd_mfc(a),
        Command::Nash(a) => cmd_nash(a),
        Command::CceCheck(a) => cmd_cce_check(a),
        Command::CceScan(a) => cmd_cce_scan(a),
        Command::BestCce(a) => cmd_best_cce(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ustar(a) => cmd_ustar(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Epsilon(a) => cmd_epsilon(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}

// ── resolution helpers ──────────────────────────────────────────────────

fn load_config(common: &CommonOpts) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => RunConfig::load(path).map_err(|m| CliError::new(EXIT_IO, m)),
        None => Ok(RunConfig::default()),
    }
}

fn resolve_params(common: &CommonOpts, cfg: &RunConfig) -> Result<ModelParams, CliError> {
    let block = cfg.params.unwrap_or_default();
    let get = |flag: Option<f64>, conf: Option<f64>, name: &str| {
        flag.or(conf).ok_or_else(|| {
            CliError::new(EXIT_VALIDATION, format!("missing model parameter --{name}"))
        })
    };
    let params = ModelParams::new(
        get(common.delta, block.delta, "delta")?,
        get(common.sigma, block.sigma, "sigma")?,
        get(common.q, block.q, "q")?,
        get(common.alpha, block.alpha, "alpha")?,
        get(common.beta, block.beta, "beta")?,
    );
    let report = params.validate();
    if !report.ok {
        let doc = serde_json::to_string(&report).unwrap();
        return Err(CliError::new(EXIT_VALIDATION, format!("invalid parameters: {doc}")));
    }
    Ok(params)
}

fn resolve_seed(common: &CommonOpts, cfg: &RunConfig) -> u64 {
    common
        .seed
        .or_else(|| std::env::var("MFG_SEED").ok().and_then(|s| s.parse().ok()))
        .or(cfg.seed)
        .unwrap_or(0)
}

fn resolve_out(common: &CommonOpts, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::new(EXIT_VALIDATION, "this command writes CSV; pass --out PATH"))
}

fn resolve_grid(opts: &GridOpts, cfg: &RunConfig) -> Result<GridSpec, CliError> {
    let block = cfg.grid.clone().unwrap_or_default();
    let d = GridSpec::default_region();
    let spacing = match opts.spacing.clone().or(block.spacing).as_deref() {
        None => d.spacing,
        Some("linear") => Spacing::Linear,
        Some("log") => Spacing::Log,
        Some(other) => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                format!("unknown spacing '{other}' (expected linear or log)"),
            ))
        }
    };
    let grid = GridSpec {
        u_min: opts.u_min.or(block.u_min).unwrap_or(d.u_min),
        u_max: opts.u_max.or(block.u_max).unwrap_or(d.u_max),
        v_min: opts.v_min.or(block.v_min).unwrap_or(d.v_min),
        v_max: opts.v_max.or(block.v_max).unwrap_or(d.v_max),
        nu: opts.nu.or(block.nu).unwrap_or(d.nu),
        nv: opts.nv.or(block.nv).unwrap_or(d.nv),
        spacing,
    };
    grid.validate()
        .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
    Ok(grid)
}

fn parse_class(name: Option<&str>) -> Result<CceClass, CliError> {
    match name {
        Some("regular") => Ok(CceClass::Regular),
        Some("singular") => Ok(CceClass::Singular),
        Some(other) => Err(CliError::new(
            EXIT_VALIDATION,
            format!("unknown class '{other}' (expected regular or singular)"),
        )),
        None => Err(CliError::new(EXIT_VALIDATION, "missing --class (regular or singular)")),
    }
}

fn resolve_sim(opts: &SimOpts, cfg: &RunConfig, seed: u64, default_x0: f64) -> SimConfig {
    let block = cfg.sim.clone().unwrap_or_default();
    let x0 = match (
        opts.x0_shape.or(block.x0_shape),
        opts.x0_scale.or(block.x0_scale),
        opts.x0.or(block.x0),
    ) {
        (Some(shape), Some(scale), _) => InitialLaw::Gamma { shape, scale },
        (_, _, Some(point)) => InitialLaw::Point(point),
        _ => InitialLaw::Point(default_x0),
    };
    SimConfig {
        dt: opts.dt.or(block.dt).unwrap_or(1e-3),
        horizon: opts.horizon.or(block.horizon).unwrap_or(2000.0),
        burn_in: opts.burn_in.or(block.burn_in).unwrap_or(200.0),
        n_paths: opts.paths.or(block.n_paths).unwrap_or(64),
        seed,
        x0,
    }
}

fn status_str(s: EquilibriumStatus) -> &'static str {
    match s {
        EquilibriumStatus::Unique => "unique",
        EquilibriumStatus::InfinitelyMany => "infinitely_many",
        EquilibriumStatus::NonExistent => "non_existent",
        EquilibriumStatus::IllPosed => "ill_posed",
        EquilibriumStatus::NullOptimal => "null_optimal",
    }
}

fn sim_error(e: SimError) -> CliError {
    let code = match e {
        SimError::UnstableStep { .. } => EXIT_UNSTABLE,
        SimError::InvalidConfig(_) => EXIT_VALIDATION,
    };
    CliError::new(code, e.to_string())
}

// ── commands ────────────────────────────────────────────────────────────

fn cmd_mfc(args: MfcArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let rep = mfc_solve(&params);
    let lambda = match rep.status {
        EquilibriumStatus::Unique => rep.theta.map(|t| lagrange_multiplier(&params, t)),
        _ => None,
    };
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "mfc",
        "status": status_str(rep.status),
        "a_hat": rep.barrier,
        "theta_hat": rep.theta,
        "reward": rep.reward,
        "lambda_at_theta_hat": lambda,
    }));
    Ok(())
}

fn cmd_nash(args: NashArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let rep = nash_solve(&params);
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "nash",
        "status": status_str(rep.status),
        "a_star": rep.barrier,
        "theta_star": rep.theta,
        "reward": rep.reward,
    }));
    Ok(())
}

fn cmd_cce_check(args: CceCheckArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let class = parse_class(
        args.class
            .as_deref()
            .or(cfg.scan.as_ref().and_then(|s| s.class.as_deref())),
    )?;
    let law_block = cfg.law.unwrap_or_default();
    let (m, law_json) = match (args.u.or(law_block.u), args.v.or(law_block.v)) {
        (Some(u), Some(v)) => {
            let law = GammaLaw::new(u, v)
                .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
            (gamma_moments_triple(&params, &law), json!({"u": u, "v": v}))
        }
        _ => match (args.m_beta, args.m_one, args.m_ab) {
            (Some(mb), Some(m1), Some(mab)) => {
                let triple = MomentTriple::new(mb, m1, mab)
                    .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
                (triple, Value::Null)
            }
            _ => {
                return Err(CliError::new(
                    EXIT_VALIDATION,
                    "pass either --u/--v or all of --m-beta/--m-one/--m-ab",
                ))
            }
        },
    };
    let check = cce_check(&params, &m, class);
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "cce-check",
        "class": if class == CceClass::Regular { "regular" } else { "singular" },
        "law": law_json,
        "m_beta": m.m_beta,
        "m_one": m.m_one,
        "m_ab": m.m_ab,
        "holds": check.holds,
        "slack": check.slack,
        "slack_rel": check.slack_rel,
    }));
    Ok(())
}

fn cmd_cce_scan(args: CceScanArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let grid = resolve_grid(&args.grid, &cfg)?;
    let scan_block = cfg.scan.clone().unwrap_or_default();
    let class = parse_class(args.class.as_deref().or(scan_block.class.as_deref()))?;
    let outperform = args.outperform || scan_block.outperform.unwrap_or(false);
    let out = resolve_out(&args.common, &cfg)?;
    let cells = scan_region(&params, &grid, class, outperform)
        .map_err(|e| CliError::new(EXIT_UNDEFINED, e.to_string()))?;
    let mut csv = CsvWriter::new(&["schema_version", "u", "v", "exists", "outperforms", "reward"]);
    for c in &cells {
        csv.row(&[
            SCHEMA_VERSION.into(),
            fmt_f64(c.u),
            fmt_f64(c.v),
            c.exists_cce.to_string(),
            c.outperforms.to_string(),
            fmt_f64(c.reward),
        ]);
    }
    csv.write(&out).map_err(|m| CliError::new(EXIT_IO, m))?;
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "cce-scan",
        "rows": cells.len(),
        "feasible": cells.iter().filter(|c| c.exists_cce).count(),
        "outperforming": cells.iter().filter(|c| c.outperforms).count(),
        "out": out.display().to_string(),
    }));
    Ok(())
}

fn cmd_best_cce(args: BestCceArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let grid = resolve_grid(&args.grid, &cfg)?;
    let class = parse_class(
        args.class
            .as_deref()
            .or(cfg.scan.as_ref().and_then(|s| s.class.as_deref())),
    )?;
    let best = best_cce(&params, class, &grid);
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "best-cce",
        "class": if class == CceClass::Regular { "regular" } else { "singular" },
        "found": best.is_some(),
        "u": best.map(|b| b.u),
        "v": best.map(|b| b.v),
        "reward": best.map(|b| b.reward),
    }));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let grid = resolve_grid(&args.grid, &cfg)?;
    let block = cfg.sweep.clone().unwrap_or_default();
    let variable = match args
        .variable
        .as_deref()
        .or(block.variable.as_deref())
    {
        Some("sigma") => SweepVariable::Sigma,
        Some("beta") => SweepVariable::Beta,
        Some(other) => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                format!("unknown sweep variable '{other}' (expected sigma or beta)"),
            ))
        }
        None => return Err(CliError::new(EXIT_VALIDATION, "missing --variable (sigma or beta)")),
    };
    let from = args
        .from
        .or(block.from)
        .ok_or_else(|| CliError::new(EXIT_VALIDATION, "missing --from"))?;
    let to = args
        .to
        .or(block.to)
        .ok_or_else(|| CliError::new(EXIT_VALIDATION, "missing --to"))?;
    let points = args.points.or(block.points).unwrap_or(25);
    if points == 0 {
        return Err(CliError::new(EXIT_VALIDATION, "--points must be positive"));
    }
    let out = resolve_out(&args.common, &cfg)?;
    let rows = sweep(&params, variable, from, to, points, &grid);
    let mut csv = CsvWriter::new(&[
        "schema_version",
        "value",
        "mfc",
        "nash",
        "best_singular",
        "best_regular",
        "valid",
        "mfc_status",
        "nash_status",
    ]);
    for r in &rows {
        csv.row(&[
            SCHEMA_VERSION.into(),
            fmt_f64(r.value),
            fmt_opt(r.mfc_reward),
            fmt_opt(r.nash_reward),
            fmt_opt(r.best_singular),
            fmt_opt(r.best_regular),
            r.valid.to_string(),
            r.mfc_status.map(status_str).unwrap_or_default().to_string(),
            r.nash_status.map(status_str).unwrap_or_default().to_string(),
        ]);
    }
    csv.write(&out).map_err(|m| CliError::new(EXIT_IO, m))?;
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "points": rows.len(),
        "out": out.display().to_string(),
    }));
    Ok(())
}

fn cmd_ustar(args: UstarArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let block = cfg.params.unwrap_or_default();
    let need = |flag: Option<f64>, conf: Option<f64>, name: &str| {
        flag.or(conf).ok_or_else(|| {
            CliError::new(EXIT_VALIDATION, format!("missing model parameter --{name}"))
        })
    };
    let delta = need(args.common.delta, block.delta, "delta")?;
    let sigma = need(args.common.sigma, block.sigma, "sigma")?;
    let q = need(args.common.q, block.q, "q")?;
    // Validate the three scalars through a placeholder exponent pair.
    let report = ModelParams::new(delta, sigma, q, 0.5, 0.4).validate();
    if !report.ok {
        let doc = serde_json::to_string(&report).unwrap();
        return Err(CliError::new(EXIT_VALIDATION, format!("invalid parameters: {doc}")));
    }
    let ustar_block = cfg.ustar.clone().unwrap_or_default();
    let alpha_min = args.alpha_min.or(ustar_block.alpha_min).unwrap_or(0.02);
    let alpha_max = args.alpha_max.or(ustar_block.alpha_max).unwrap_or(0.98);
    let points = args.points.or(ustar_block.points).unwrap_or(49);
    if !(0.0 < alpha_min && alpha_min < alpha_max && alpha_max < 1.0) || points < 2 {
        return Err(CliError::new(EXIT_VALIDATION, "need 0 < alpha_min < alpha_max < 1 and points >= 2"));
    }
    let out = resolve_out(&args.common, &cfg)?;

    let alpha_bar = alpha_bar_solve(delta, sigma, q).ok();
    let mut alphas: Vec<f64> = (0..points)
        .map(|i| alpha_min + (alpha_max - alpha_min) * i as f64 / (points - 1) as f64)
        .collect();
    // The knife-edge root is where the singular shape cap diverges; include
    // it as an explicit row.
    if let Some(ab) = alpha_bar {
        if ab > alpha_min && ab < alpha_max && !alphas.contains(&ab) {
            alphas.push(ab);
            alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
    }

    let mut csv = CsvWriter::new(&[
        "schema_version",
        "alpha",
        "u_star_regular",
        "u_star_singular",
        "regular_infinite",
        "singular_infinite",
    ]);
    let encode = |u: UStar| -> (String, String) {
        match u {
            UStar::Finite(x) => (fmt_f64(x), "false".into()),
            UStar::Zero => (fmt_f64(0.0), "false".into()),
            UStar::Infinite => (String::new(), "true".into()),
        }
    };
    for &alpha in &alphas {
        let p = ModelParams::new(delta, sigma, q, alpha, 1.0 - alpha);
        let reg = u_star(&p, CceClass::Regular)
            .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
        let sin = u_star(&p, CceClass::Singular)
            .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
        let (reg_v, reg_inf) = encode(reg);
        let (sin_v, sin_inf) = encode(sin);
        csv.row(&[
            SCHEMA_VERSION.into(),
            fmt_f64(alpha),
            reg_v,
            sin_v,
            reg_inf,
            sin_inf,
        ]);
    }
    csv.write(&out).map_err(|m| CliError::new(EXIT_IO, m))?;
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "ustar",
        "alpha_bar": alpha_bar,
        "rows": alphas.len(),
        "out": out.display().to_string(),
    }));
    Ok(())
}

fn moment_exponents(params: &ModelParams) -> [f64; 4] {
    [0.5, 1.0, params.alpha, params.alpha + params.beta]
}

fn paths_csv(paths: &[PathStats], out: &Path) -> Result<(), String> {
    let mut csv = CsvWriter::new(&[
        "schema_version",
        "path",
        "time_avg_reward",
        "empirical_mean",
        "terminal_control",
        "min_state",
        "moment_half",
        "moment_one",
        "moment_alpha",
        "moment_alpha_beta",
    ]);
    for (i, p) in paths.iter().enumerate() {
        csv.row(&[
            SCHEMA_VERSION.into(),
            i.to_string(),
            fmt_f64(p.time_avg_reward),
            fmt_f64(p.empirical_mean),
            fmt_f64(p.terminal_control),
            fmt_f64(p.min_state),
            fmt_f64(p.time_avg_moments[0].1),
            fmt_f64(p.time_avg_moments[1].1),
            fmt_f64(p.time_avg_moments[2].1),
            fmt_f64(p.time_avg_moments[3].1),
        ]);
    }
    csv.write(out)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let seed = resolve_seed(&args.common, &cfg);
    let policy_block = cfg.policy.clone().unwrap_or_default();
    let kind = args
        .policy
        .as_deref()
        .or(policy_block.kind.as_deref())
        .ok_or_else(|| CliError::new(EXIT_VALIDATION, "missing --policy (reflected or regular)"))?
        .to_string();
    let price = args.price.or(cfg.price).unwrap_or(1.0);
    let out = resolve_out(&args.common, &cfg)?;
    let exps = moment_exponents(&params);

    match kind.as_str() {
        "reflected" => {
            let a = args
                .a
                .or(policy_block.a)
                .ok_or_else(|| CliError::new(EXIT_VALIDATION, "reflected policy needs --a"))?;
            if a <= 0.0 {
                return Err(CliError::new(EXIT_VALIDATION, "barrier --a must be positive"));
            }
            let sim = resolve_sim(&args.sim, &cfg, seed, a);
            let paths =
                simulate_reflected_paths(&params, a, price, &sim, &exps).map_err(sim_error)?;
            paths_csv(&paths, &out).map_err(|m| CliError::new(EXIT_IO, m))?;
            let agg = aggregate_paths(&paths);
            let policy = BarrierPolicy::new(a, params);
            let mean_oracle = policy.stationary_mean();
            let reward_oracle = ergodic_reward(&params, a, price);
            let checks = ks_moment_check(&params, &agg, AnalyticLaw::ReflectedBarrier(a));
            emit_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "simulate",
                "policy": "reflected",
                "a": a,
                "price": price,
                "paths": paths.len(),
                "empirical_mean": agg.empirical_mean,
                "time_avg_reward": agg.time_avg_reward,
                "oracle_mean": mean_oracle,
                "mean_rel_error": (agg.empirical_mean - mean_oracle) / mean_oracle,
                "oracle_reward": reward_oracle,
                "reward_rel_error": (agg.time_avg_reward - reward_oracle) / reward_oracle.abs(),
                "moment_checks": checks.iter().map(|c| json!({
                    "k": c.k, "empirical": c.empirical, "analytic": c.analytic,
                    "rel_error": c.rel_error,
                })).collect::<Vec<_>>(),
                "out": out.display().to_string(),
            }));
        }
        "regular" => {
            let theta = args
                .theta
                .or(policy_block.theta)
                .ok_or_else(|| CliError::new(EXIT_VALIDATION, "regular policy needs --theta"))?;
            if theta <= 0.0 {
                return Err(CliError::new(EXIT_VALIDATION, "--theta must be positive"));
            }
            let sim = resolve_sim(&args.sim, &cfg, seed, theta);
            let paths =
                simulate_regular_paths(&params, theta, price, &sim, &exps).map_err(sim_error)?;
            paths_csv(&paths, &out).map_err(|m| CliError::new(EXIT_IO, m))?;
            let agg = aggregate_paths(&paths);
            let checks = ks_moment_check(&params, &agg, AnalyticLaw::RegularKernel(theta));
            emit_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "simulate",
                "policy": "regular",
                "theta": theta,
                "price": price,
                "paths": paths.len(),
                "empirical_mean": agg.empirical_mean,
                "time_avg_reward": agg.time_avg_reward,
                "oracle_mean": theta,
                "mean_rel_error": (agg.empirical_mean - theta) / theta,
                "oracle_reward": Value::Null,
                "reward_rel_error": Value::Null,
                "moment_checks": checks.iter().map(|c| json!({
                    "k": c.k, "empirical": c.empirical, "analytic": c.analytic,
                    "rel_error": c.rel_error,
                })).collect::<Vec<_>>(),
                "out": out.display().to_string(),
            }));
        }
        other => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                format!("unknown policy '{other}' (expected reflected or regular)"),
            ))
        }
    }
    Ok(())
}

fn cmd_epsilon(args: EpsilonArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let params = resolve_params(&args.common, &cfg)?;
    let seed = resolve_seed(&args.common, &cfg);
    let block = cfg.epsilon.clone().unwrap_or_default();
    let law_block = cfg.law.unwrap_or_default();
    let kind = args
        .kind
        .as_deref()
        .or(block.kind.as_deref())
        .ok_or_else(|| {
            CliError::new(
                EXIT_VALIDATION,
                "missing --kind (singular, regular, nash, or central-planner)",
            )
        })?
        .to_string();
    let law = || -> Result<GammaLaw, CliError> {
        match (args.u.or(law_block.u), args.v.or(law_block.v)) {
            (Some(u), Some(v)) => {
                GammaLaw::new(u, v).map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))
            }
            _ => Err(CliError::new(EXIT_VALIDATION, "CCE kinds need --u and --v")),
        }
    };
    let spec = match kind.as_str() {
        "singular" => EquilibriumSpec::CceSingular(law()?),
        "regular" => EquilibriumSpec::CceRegular(law()?),
        "nash" => EquilibriumSpec::Nash,
        "central-planner" => EquilibriumSpec::CentralPlanner,
        other => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                format!("unknown kind '{other}'"),
            ))
        }
    };
    let n_list = args
        .n
        .clone()
        .or(block.n_players.clone())
        .unwrap_or_else(|| vec![2, 4, 8, 16, 32]);
    let out = resolve_out(&args.common, &cfg)?;
    // The harness defaults trade step resolution for replication count and
    // horizon; the pool baseline cancels the discretization bias.
    let sim_block = cfg.sim.clone().unwrap_or_default();
    let sim = SimConfig {
        dt: args.sim.dt.or(sim_block.dt).unwrap_or(1e-2),
        horizon: args.sim.horizon.or(sim_block.horizon).unwrap_or(3000.0),
        burn_in: args.sim.burn_in.or(sim_block.burn_in).unwrap_or(300.0),
        n_paths: 1,
        seed,
        x0: InitialLaw::Point(1.0),
    };
    let eps_cfg = EpsilonConfig {
        sim,
        replications: args.replications.or(block.replications).unwrap_or(200),
        reference_pool: args.pool.or(block.reference_pool).unwrap_or(128),
    };
    let estimates = estimate_epsilon_n(&params, spec, &n_list, &eps_cfg).map_err(sim_error)?;
    let mut csv = CsvWriter::new(&[
        "schema_version",
        "n_players",
        "gap",
        "ci_halfwidth",
        "rec_payoff",
        "rec_ci",
    ]);
    for e in &estimates {
        csv.row(&[
            SCHEMA_VERSION.into(),
            e.n_players.to_string(),
            fmt_f64(e.gap),
            fmt_f64(e.ci_halfwidth),
            fmt_f64(e.rec_payoff),
            fmt_f64(e.rec_ci),
        ]);
    }
    csv.write(&out).map_err(|m| CliError::new(EXIT_IO, m))?;
    // Least-squares slope of gap against ln N.
    let slope = {
        let n = estimates.len() as f64;
        let xs: Vec<f64> = estimates.iter().map(|e| (e.n_players as f64).ln()).collect();
        let ys: Vec<f64> = estimates.iter().map(|e| e.gap).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if var > 0.0 {
            Some(cov / var)
        } else {
            None
        }
    };
    emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "epsilon",
        "kind": kind,
        "rows": estimates.len(),
        "fitted_log_slope": slope,
        "out": out.display().to_string(),
    }));
    Ok(())
}
