//! The clustering/power-allocation MDP.
//!
//! A step takes an `N_max × K` action, projects it onto the feasible power
//! set, derives clusters, evaluates per-user outage, scores the step, and then
//! advances mobility, LOS and the active user population.
//!
//! Reward for `N_act` active users, stability indicator `s_i = 1[M_i(t) = M_i(t−1)]`
//! and violation indicator `v_i = 1[ε_i > ε_max(position_i)]`:
//!
//! ```text
//! r = ω1/N_act · Σ s_i − ω2/N_act · Σ v_i + (1 − ω3·q3)
//! q1 = 1 − Σ s_i / N_act,  q2 = Σ v_i / N_act,  q3 = Σ P / (K·P_budget)
//! ```

use rand::Rng;

use crate::channel::{link_budget, LinkState};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::matrix::Matrix;
use crate::mobility::{mobility_step, observed_position, Area, UavKinematics};
use crate::outage::{outage_probability, ExponentialSum};
use crate::rng::{RandomSource, Stream};

/// ORU indices serving one user, ascending.
pub type Cluster = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub t: u64,
    pub uavs: Vec<UavKinematics>,
    pub los: LinkState,
    pub prev_clusters: Vec<Cluster>,
    /// Last reported (noisy) position of each slot.
    pub observed: Vec<Point3>,
}

impl NetworkState {
    pub fn n_active(&self) -> usize {
        self.uavs.iter().filter(|u| u.active).count()
    }

    pub fn active_mask(&self) -> Vec<bool> {
        self.uavs.iter().map(|u| u.active).collect()
    }
}

/// Transmit power per (user slot, ORU), watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

/// Entries per slot: active flag, x, y, K LOS bits, zone flag.
pub fn observation_len(config: &ScenarioConfig) -> usize {
    config.n_max_users * (4 + config.n_orus())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// An active user ended up with no serving ORU.
    EmptyCluster { slot: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub eps: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// `ω1/N_act · Σ 1[M_i(t) = M_i(t−1)]`.
    pub stability_term: f64,
    pub reward: f64,
    pub violations: Vec<Violation>,
    pub n_active: usize,
    /// Per-slot: active during evaluation.
    pub active: Vec<bool>,
    /// Per-slot: cluster differs from the previous step.
    pub reconfigured: Vec<bool>,
    /// Per-slot: true position lies in a reliability zone.
    pub in_zone: Vec<bool>,
    /// Per-slot: ε exceeds the local requirement.
    pub outage_violation: Vec<bool>,
    pub power: PowerAllocation,
}

/// Per-environment random streams.
#[derive(Debug, Clone)]
pub struct EnvRngs {
    pub mobility: Vec<RandomSource>,
    pub los: RandomSource,
    pub arrivals: RandomSource,
    pub observation: RandomSource,
}

impl EnvRngs {
    pub fn new(seed: u64, n_max: usize) -> Self {
        Self {
            mobility: (0..n_max)
                .map(|i| RandomSource::named(seed, Stream::Mobility(i)))
                .collect(),
            los: RandomSource::named(seed, Stream::Los),
            arrivals: RandomSource::named(seed, Stream::Arrivals),
            observation: RandomSource::named(seed, Stream::Observation),
        }
    }
}

fn area(config: &ScenarioConfig) -> Area {
    Area {
        x: config.area_x_m,
        y: config.area_y_m,
    }
}

/// Fresh episode: every slot active at a uniform position with a uniform
/// waypoint and zero velocity; no previous clusters.
pub fn reset_state(config: &ScenarioConfig, seed: u64) -> (NetworkState, EnvRngs) {
    let mut rngs = EnvRngs::new(seed, config.n_max_users);
    let mut placement = RandomSource::named(seed, Stream::Placement);
    let area = area(config);
    let uavs: Vec<UavKinematics> = (0..config.n_max_users)
        .map(|_| {
            let xy = area.uniform_point(&mut placement);
            let waypoint = area.uniform_point(&mut placement);
            UavKinematics::at_rest(xy, waypoint, &config.mobility)
        })
        .collect();
    let mut state = NetworkState {
        t: 0,
        los: LinkState::all_los(config.n_max_users, config.n_orus()),
        prev_clusters: vec![Vec::new(); config.n_max_users],
        observed: uavs.iter().map(|u| u.position).collect(),
        uavs,
    };
    refresh_links_and_reports(&mut state, config, &mut rngs);
    (state, rngs)
}

fn refresh_links_and_reports(state: &mut NetworkState, config: &ScenarioConfig, rngs: &mut EnvRngs) {
    let positions: Vec<Point3> = state.uavs.iter().map(|u| u.position).collect();
    let active = state.active_mask();
    state.los.redraw(&positions, &active, config, &mut rngs.los);
    for (slot, uav) in state.uavs.iter().enumerate() {
        // always draw, so inactive slots do not shift later reports
        let reported = observed_position(uav, &config.mobility, &mut rngs.observation);
        if uav.active {
            state.observed[slot] = reported;
        }
    }
}

/// Flattened observation; inactive slots are all zeros.
pub fn observe(state: &NetworkState, config: &ScenarioConfig) -> Observation {
    let mut out = Vec::with_capacity(observation_len(config));
    for (slot, uav) in state.uavs.iter().enumerate() {
        if !uav.active {
            out.extend(std::iter::repeat_n(0.0, 4 + config.n_orus()));
            continue;
        }
        let seen = state.observed[slot];
        out.push(1.0);
        out.push((seen.x / config.area_x_m).clamp(0.0, 1.0));
        out.push((seen.y / config.area_y_m).clamp(0.0, 1.0));
        out.extend(state.los.row(slot).iter().map(|&l| if l { 1.0 } else { 0.0 }));
        out.push(if config.zone_at(seen.x, seen.y).is_some() { 1.0 } else { 0.0 });
    }
    Observation(out)
}

fn check_shape(m: &Matrix, config: &ScenarioConfig) -> Result<()> {
    if m.rows() != config.n_max_users || m.cols() != config.n_orus() {
        return Err(Error::InputRange(format!(
            "action must be {}x{}, got {}x{}",
            config.n_max_users,
            config.n_orus(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Zeroes inactive rows, then scales down every ORU column whose total
/// exceeds `p_oru_budget_w`. Entries must already lie in `[0, p_max_w]`.
pub fn project_power(mut p: Matrix, state: &NetworkState, config: &ScenarioConfig) -> PowerAllocation {
    for (i, uav) in state.uavs.iter().enumerate() {
        if !uav.active {
            p.row_mut(i).fill(0.0);
        }
    }
    for k in 0..p.cols() {
        let total = p.column_sum(k);
        if total > config.p_oru_budget_w {
            let mut scale = config.p_oru_budget_w / total;
            let column: Vec<f64> = (0..p.rows()).map(|i| p[(i, k)]).collect();
            // rounding can leave the scaled sum a few ulps over budget
            loop {
                for (i, v) in column.iter().enumerate() {
                    p[(i, k)] = v * scale;
                }
                if p.column_sum(k) <= config.p_oru_budget_w {
                    break;
                }
                scale = scale.next_down();
            }
        }
    }
    PowerAllocation { p }
}

/// Maps a raw `[0, 1]` action to watts and projects it onto the feasible set.
pub fn project_action(raw: &Matrix, state: &NetworkState, config: &ScenarioConfig) -> Result<PowerAllocation> {
    check_shape(raw, config)?;
    let mut p = raw.clone();
    for i in 0..raw.rows() {
        for k in 0..raw.cols() {
            let v = raw[(i, k)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InputRange(format!(
                    "action[{i}][{k}] = {v} is outside [0, 1]"
                )));
            }
            p[(i, k)] = v * config.p_max_w;
        }
    }
    Ok(project_power(p, state, config))
}

/// Validates a power matrix against C1 and projects it.
pub fn project_watts(p: &Matrix, state: &NetworkState, config: &ScenarioConfig) -> Result<PowerAllocation> {
    check_shape(p, config)?;
    if let Some(v) = p.as_slice().iter().find(|v| !(0.0..=config.p_max_w).contains(*v)) {
        return Err(Error::InputRange(format!(
            "transmit power {v} W is outside [0, {}] W",
            config.p_max_w
        )));
    }
    Ok(project_power(p.clone(), state, config))
}

/// `M_i = {k : p_ik > cluster_power_threshold_w}`.
pub fn derive_clusters(power: &PowerAllocation, config: &ScenarioConfig) -> Vec<Cluster> {
    (0..power.p.rows())
        .map(|i| {
            power
                .p
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > config.cluster_power_threshold_w)
                .map(|(k, _)| k)
                .collect()
        })
        .collect()
}

/// Scores a projected allocation on the current state without advancing it.
pub fn evaluate(state: &NetworkState, power: PowerAllocation, config: &ScenarioConfig) -> Result<StepOutcome> {
    let n = state.uavs.len();
    let clusters = derive_clusters(&power, config);
    let budget = link_budget(state, &power, config)?;
    let gamma = config.gamma_th_linear();

    let active = state.active_mask();
    let mut eps = vec![0.0; n];
    let mut violations = Vec::new();
    let mut reconfigured = vec![false; n];
    let mut in_zone = vec![false; n];
    let mut outage_violation = vec![false; n];
    let mut stable = 0usize;
    let mut outages = 0usize;

    for i in (0..n).filter(|&i| active[i]) {
        let pos = state.uavs[i].position;
        eps[i] = if clusters[i].is_empty() {
            violations.push(Violation::EmptyCluster { slot: i });
            1.0
        } else {
            let means = clusters[i].iter().map(|&k| budget.alpha[(i, k)]).collect();
            outage_probability(&ExponentialSum::perturbed(means)?, gamma, budget.beta[i])?
        };
        reconfigured[i] = clusters[i] != state.prev_clusters[i];
        in_zone[i] = config.zone_at(pos.x, pos.y).is_some();
        outage_violation[i] = eps[i] > config.eps_max_at(&pos);
        stable += usize::from(!reconfigured[i]);
        outages += usize::from(outage_violation[i]);
    }

    let n_active = active.iter().filter(|a| **a).count();
    let [w1, w2, w3] = config.reward_weights;
    let q3 = (0..config.n_orus())
        .map(|k| power.p.column_sum(k) / config.p_oru_budget_w)
        .sum::<f64>()
        / config.n_orus() as f64;
    let (q1, q2, stability_term, outage_term) = if n_active == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let na = n_active as f64;
        (
            (n_active - stable) as f64 / na,
            outages as f64 / na,
            w1 * stable as f64 / na,
            w2 * outages as f64 / na,
        )
    };
    let reward = stability_term - outage_term + (1.0 - w3 * q3);

    Ok(StepOutcome {
        eps,
        clusters,
        q1,
        q2,
        q3,
        stability_term,
        reward,
        violations,
        n_active,
        active,
        reconfigured,
        in_zone,
        outage_violation,
        power,
    })
}

/// Moves the world forward one step after scoring: clusters become history,
/// UAVs move, users leave and arrive, LOS and reports refresh.
pub fn advance(state: &mut NetworkState, clusters: &[Cluster], config: &ScenarioConfig, rngs: &mut EnvRngs) {
    let area = area(config);
    state.t += 1;
    for (slot, uav) in state.uavs.iter_mut().enumerate() {
        if !uav.active {
            continue;
        }
        state.prev_clusters[slot] = clusters[slot].clone();
        *uav = mobility_step(uav, &config.mobility, area, config.step_duration_s, &mut rngs.mobility[slot]);
    }

    let was_active = state.active_mask();
    for (slot, uav) in state.uavs.iter_mut().enumerate() {
        let leave: f64 = rngs.arrivals.random();
        let outside = !area.contains(uav.position.x, uav.position.y);
        if was_active[slot] && (leave < config.departure_prob || outside) {
            uav.active = false;
            state.prev_clusters[slot].clear();
        }
    }
    for (slot, uav) in state.uavs.iter_mut().enumerate() {
        let arrive: f64 = rngs.arrivals.random();
        if !was_active[slot] && arrive < config.arrival_prob {
            let entry = area.boundary_point(&mut rngs.arrivals);
            let waypoint = area.uniform_point(&mut rngs.arrivals);
            *uav = UavKinematics::at_rest(entry, waypoint, &config.mobility);
            state.prev_clusters[slot].clear();
        }
    }

    refresh_links_and_reports(state, config, rngs);
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Observation,
    pub outcome: StepOutcome,
    pub done: bool,
}

/// Single-owner environment instance.
#[derive(Debug, Clone)]
pub struct Environment {
    config: ScenarioConfig,
    episode: Option<(NetworkState, EnvRngs)>,
}

impl Environment {
    pub fn new(config: ScenarioConfig) -> Self {
        Self { config, episode: None }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn observation_len(&self) -> usize {
        observation_len(&self.config)
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        let (state, rngs) = reset_state(&self.config, seed);
        let obs = observe(&state, &self.config);
        self.episode = Some((state, rngs));
        obs
    }

    pub fn state(&self) -> Option<&NetworkState> {
        self.episode.as_ref().map(|(s, _)| s)
    }

    fn started(&self) -> Result<&NetworkState> {
        self.state()
            .ok_or_else(|| Error::InputRange("step called before reset".into()))
    }

    /// Steps with a raw action in `[0, 1]^{N_max×K}`.
    pub fn step(&mut self, raw: &Matrix) -> Result<Transition> {
        let power = project_action(raw, self.started()?, &self.config)?;
        self.step_projected(power)
    }

    /// Steps with a power matrix in watts (used by the baselines).
    pub fn step_watts(&mut self, p: &Matrix) -> Result<Transition> {
        let power = project_watts(p, self.started()?, &self.config)?;
        self.step_projected(power)
    }

    fn step_projected(&mut self, power: PowerAllocation) -> Result<Transition> {
        let (state, rngs) = self.episode.as_mut().expect("checked by caller");
        let outcome = evaluate(state, power, &self.config)?;
        advance(state, &outcome.clusters, &self.config, rngs);
        Ok(Transition {
            observation: observe(state, &self.config),
            done: state.t >= self.config.episode_len,
            outcome,
        })
    }
}
