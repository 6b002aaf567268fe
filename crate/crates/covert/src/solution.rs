//! JSON form of a capacity solution, written by `capacity --out` and read by
//! `simulate --solution`.

use std::path::Path;

use covert_core::capacity::{AuxDistribution, Diagnostics};
use covert_core::probability::{ConditionalPmf, Pmf};
use covert_core::{CapacitySolution, Mode, StateDmc, StrategyMap};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDoc {
    pub maps_enumerated: usize,
    pub maps_feasible: usize,
    pub best_map_index: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub restarts_to_best: Option<usize>,
    pub nonconverged_runs: usize,
    pub fw_gap_nats: f64,
    pub dual_gap_nats: Option<f64>,
    pub oracle_gap_bits: Option<f64>,
}

impl From<&Diagnostics> for DiagnosticsDoc {
    fn from(d: &Diagnostics) -> Self {
        Self {
            maps_enumerated: d.maps_enumerated,
            maps_feasible: d.maps_feasible,
            best_map_index: d.best_map_index,
            iterations: d.iterations,
            restarts: d.restarts,
            restarts_to_best: d.restarts_to_best,
            nonconverged_runs: d.nonconverged_runs,
            fw_gap_nats: d.fw_gap_nats,
            dual_gap_nats: d.dual_gap_nats,
            oracle_gap_bits: d.oracle_gap_bits,
        }
    }
}

impl From<&DiagnosticsDoc> for Diagnostics {
    fn from(d: &DiagnosticsDoc) -> Self {
        Self {
            maps_enumerated: d.maps_enumerated,
            maps_feasible: d.maps_feasible,
            best_map_index: d.best_map_index,
            iterations: d.iterations,
            restarts: d.restarts,
            restarts_to_best: d.restarts_to_best,
            nonconverged_runs: d.nonconverged_runs,
            fw_gap_nats: d.fw_gap_nats,
            dual_gap_nats: d.dual_gap_nats,
            oracle_gap_bits: d.oracle_gap_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    /// `causal` or `noncausal`.
    pub mode: String,
    pub rate_bits: f64,
    pub key_deficit_bits: f64,
    pub key_rate_bits: f64,
    pub key_feasible: bool,
    pub cost_used: f64,
    pub covert_residual_nats: f64,
    /// `map[a][s]` is the input sent for auxiliary symbol `a` in state `s`.
    pub map: Vec<Vec<usize>>,
    /// Causal solutions: `P_V`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_v: Option<Vec<f64>>,
    /// Noncausal solutions: `P_{U|S}` as `[s][u]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_u_given_s: Option<Vec<Vec<f64>>>,
    pub diagnostics: DiagnosticsDoc,
    pub channel_sha256: String,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Causal => "causal",
        Mode::Noncausal => "noncausal",
    }
}

impl SolutionDoc {
    pub fn new(sol: &CapacitySolution, ch: &StateDmc, channel_sha256: &str) -> Self {
        let map = (0..sol.map.aux_size()).map(|a| sol.map.row(a).to_vec()).collect();
        let (p_v, p_u_given_s) = match &sol.aux {
            AuxDistribution::Causal(p) => (Some(p.probs().to_vec()), None),
            AuxDistribution::Noncausal(q) => (None, Some((0..q.rows()).map(|s| q.row(s).to_vec()).collect())),
        };
        Self {
            mode: mode_name(sol.mode).into(),
            rate_bits: sol.rate_bits,
            key_deficit_bits: sol.key_deficit_bits,
            key_rate_bits: ch.key_rate_bits(),
            key_feasible: sol.key_feasible,
            cost_used: sol.cost_used,
            covert_residual_nats: sol.covert_residual_nats,
            map,
            p_v,
            p_u_given_s,
            diagnostics: (&sol.diagnostics).into(),
            channel_sha256: channel_sha256.into(),
        }
    }

    /// Rebuilds the solution against `ch`, checking shapes.
    pub fn to_solution(&self, ch: &StateDmc) -> CliResult<CapacitySolution> {
        let bad = |m: String| CliError::Parse(format!("solution file: {m}"));
        let aux_size = self.map.len();
        let table: Vec<usize> = self.map.concat();
        let map = StrategyMap::new(aux_size, ch.ns(), ch.nx(), table).map_err(|e| bad(e.to_string()))?;
        let (mode, aux) = match (self.mode.as_str(), &self.p_v, &self.p_u_given_s) {
            ("causal", Some(p), None) => {
                (Mode::Causal, AuxDistribution::Causal(Pmf::new(p.clone()).map_err(|e| bad(e.to_string()))?))
            }
            ("noncausal", None, Some(q)) => (
                Mode::Noncausal,
                AuxDistribution::Noncausal(ConditionalPmf::from_rows(q.clone()).map_err(|e| bad(e.to_string()))?),
            ),
            (m, _, _) => {
                return Err(bad(format!("mode `{m}` needs exactly one of p_v (causal) or p_u_given_s (noncausal)")))
            }
        };
        let sol = CapacitySolution {
            mode,
            rate_bits: self.rate_bits,
            aux,
            map,
            key_deficit_bits: self.key_deficit_bits,
            key_feasible: self.key_feasible,
            cost_used: self.cost_used,
            covert_residual_nats: self.covert_residual_nats,
            diagnostics: (&self.diagnostics).into(),
        };
        // shape check of the auxiliary law against the map and channel
        sol.joint(ch).map_err(|e| bad(e.to_string()))?;
        Ok(sol)
    }
}

pub fn save_solution(doc: &SolutionDoc, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::write(path, e))? + "\n";
    std::fs::write(path, text).map_err(|e| CliError::write(path, e))
}

pub fn load_solution(path: &Path) -> CliResult<SolutionDoc> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
