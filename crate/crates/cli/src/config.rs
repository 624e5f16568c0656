//! JSON run configuration. Every field is optional; effective values are
//! resolved as command-line flags over config-file values over defaults.

use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Option<ParamsBlock>,
    pub grid: Option<GridBlock>,
    pub scan: Option<ScanBlock>,
    pub sweep: Option<SweepBlock>,
    pub ustar: Option<UstarBlock>,
    pub sim: Option<SimBlock>,
    pub policy: Option<PolicyBlock>,
    pub price: Option<f64>,
    pub law: Option<LawBlock>,
    pub epsilon: Option<EpsilonBlock>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub nu: Option<usize>,
    pub nv: Option<usize>,
    pub spacing: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub class: Option<String>,
    pub outperform: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub variable: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UstarBlock {
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub burn_in: Option<f64>,
    pub n_paths: Option<usize>,
    pub x0: Option<f64>,
    pub x0_shape: Option<f64>,
    pub x0_scale: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    pub kind: Option<String>,
    pub a: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawBlock {
    pub u: Option<f64>,
    pub v: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonBlock {
    pub kind: Option<String>,
    pub n_players: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub reference_pool: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {path}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("cannot parse config {path}: {e}"))
    }
}
