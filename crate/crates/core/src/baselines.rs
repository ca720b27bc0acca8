//! Reference clustering policies: nearest-ORU and channel-gain margin.

use serde::{Deserialize, Serialize};

use crate::channel::LinkGeometry;
use crate::config::{db_to_linear, ScenarioConfig};
use crate::environment::{NetworkState, PowerAllocation};
use crate::error::{ConfigError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpportunisticConfig {
    /// An ORU joins a user's cluster when its mean gain is within this many dB of the best link.
    pub inclusion_margin_db: f64,
}

impl Default for OpportunisticConfig {
    fn default() -> Self {
        Self {
            inclusion_margin_db: 10.0,
        }
    }
}

impl OpportunisticConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.inclusion_margin_db >= 0.0 {
            Ok(())
        } else {
            Err(ConfigError::Invariant(
                "opportunistic.inclusion_margin_db must be >= 0".into(),
            ))
        }
    }
}

/// Each active user is served by its nearest ORU (3D distance, lowest index
/// on ties) at `p_max_w`.
pub fn closest_policy(state: &NetworkState, config: &ScenarioConfig) -> PowerAllocation {
    let mut p = Matrix::zeros(state.uavs.len(), config.n_orus());
    for (i, uav) in state.uavs.iter().enumerate().filter(|(_, u)| u.active) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, oru) in config.oru_positions.iter().enumerate() {
            let d = uav.position.distance(oru);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        p[(i, best)] = config.p_max_w;
    }
    PowerAllocation { p }
}

/// Every ORU whose mean gain `G0·L·h_ik` is within the margin of the user's
/// best link joins the cluster; each ORU splits its budget equally among the
/// users that selected it, capped at `p_max_w`.
pub fn opportunistic_policy(
    state: &NetworkState,
    config: &ScenarioConfig,
    opp: &OpportunisticConfig,
) -> Result<PowerAllocation> {
    let geometry = LinkGeometry::new(state, config)?;
    let n = state.uavs.len();
    let k = config.n_orus();
    let peak = config.array.peak_gain();
    let ratio = db_to_linear(opp.inclusion_margin_db);

    let mut selected = vec![false; n * k];
    let mut load = vec![0usize; k];
    for i in (0..n).filter(|&i| state.uavs[i].active) {
        let gains: Vec<f64> = (0..k).map(|j| peak * geometry.path_gain(i, j)).collect();
        let best = gains.iter().cloned().fold(0.0, f64::max);
        for (j, g) in gains.iter().enumerate() {
            if *g >= best / ratio {
                selected[i * k + j] = true;
                load[j] += 1;
            }
        }
    }

    let mut p = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            if selected[i * k + j] {
                p[(i, j)] = (config.p_oru_budget_w / load[j] as f64).min(config.p_max_w);
            }
        }
    }
    Ok(PowerAllocation { p })
}

/// A baseline selectable at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    Closest,
    Opportunistic(OpportunisticConfig),
}

impl Baseline {
    pub fn act(&self, state: &NetworkState, config: &ScenarioConfig) -> Result<PowerAllocation> {
        match self {
            Baseline::Closest => Ok(closest_policy(state, config)),
            Baseline::Opportunistic(opp) => opportunistic_policy(state, config, opp),
        }
    }
}
