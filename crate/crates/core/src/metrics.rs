//! Episode runner and the CSV metric pipeline.
//!
//! A run writes five files into the output directory:
//!
//! - `outage_cdf.csv`: `zone,log10_eps,cdf` — empirical CDF of `log10 ε` per
//!   active user-step, split into `inside` / `outside` the reliability zones
//!   (`ε` floored at `1e-300` before the logarithm).
//! - `power_cdf.csv`: `power_fraction,cdf` — empirical CDF of `q3` per step.
//! - `cluster_size_pdf.csv`: `cluster_size,probability` for sizes `0..=K`.
//! - `reconfig_rate.csv`: `step,n_active,reconfigured,rate` — per-step count
//!   and fraction of active users whose cluster changed.
//! - `summary.csv`: `metric,value` aggregate rows.

use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::baselines::Baseline;
use crate::config::ScenarioConfig;
use crate::environment::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::protocol::{serve_stream, Session};

/// Floor applied to `ε` before taking `log10`.
pub const EPS_FLOOR: f64 = 1e-300;

/// Right-continuous empirical CDF: one `(value, fraction ≤ value)` pair per distinct sample.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("empirical CDF needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (idx, &v) in sorted.iter().enumerate() {
        let frac = (idx + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub step: u64,
    pub slot: usize,
    pub eps: f64,
    pub in_zone: bool,
    pub cluster_size: usize,
    pub reconfigured: bool,
    pub outage_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub n_active: usize,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub reward: f64,
}

/// Append-only log of a run: one user row per active user per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub users: Vec<UserRecord>,
    pub steps: Vec<StepRecord>,
}

impl RunLog {
    pub fn record(&mut self, outcome: &StepOutcome) {
        let step = self.steps.len() as u64;
        for slot in (0..outcome.active.len()).filter(|&i| outcome.active[i]) {
            self.users.push(UserRecord {
                step,
                slot,
                eps: outcome.eps[slot],
                in_zone: outcome.in_zone[slot],
                cluster_size: outcome.clusters[slot].len(),
                reconfigured: outcome.reconfigured[slot],
                outage_violation: outcome.outage_violation[slot],
            });
        }
        self.steps.push(StepRecord {
            step,
            n_active: outcome.n_active,
            q1: outcome.q1,
            q2: outcome.q2,
            q3: outcome.q3,
            reward: outcome.reward,
        });
    }

    /// `log10 ε` samples of users inside (`true`) or outside the zones.
    pub fn log_outage_samples(&self, inside: bool) -> Vec<f64> {
        self.users
            .iter()
            .filter(|u| u.in_zone == inside)
            .map(|u| u.eps.max(EPS_FLOOR).log10())
            .collect()
    }

    pub fn power_samples(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.q3).collect()
    }

    /// Probability of each cluster size `0..=k` over user rows.
    pub fn cluster_size_pdf(&self, k: usize) -> Vec<f64> {
        let mut counts = vec![0usize; k + 1];
        for u in &self.users {
            counts[u.cluster_size.min(k)] += 1;
        }
        let total = self.users.len().max(1) as f64;
        counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Fraction of user rows whose cluster changed.
    pub fn reconfiguration_rate(&self) -> f64 {
        mean(self.users.iter().map(|u| f64::from(u8::from(u.reconfigured))))
    }

    pub fn write_csvs(&self, out_dir: &Path, k: usize) -> Result<()> {
        fs::create_dir_all(out_dir)?;

        let mut w = csv::Writer::from_path(out_dir.join("outage_cdf.csv"))?;
        w.write_record(["zone", "log10_eps", "cdf"])?;
        for (zone, inside) in [("inside", true), ("outside", false)] {
            let samples = self.log_outage_samples(inside);
            if samples.is_empty() {
                continue;
            }
            for (v, c) in empirical_cdf(&samples)? {
                w.write_record([zone, &v.to_string(), &c.to_string()])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("power_cdf.csv"))?;
        w.write_record(["power_fraction", "cdf"])?;
        if !self.steps.is_empty() {
            for (v, c) in empirical_cdf(&self.power_samples())? {
                w.write_record([v.to_string(), c.to_string()])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("cluster_size_pdf.csv"))?;
        w.write_record(["cluster_size", "probability"])?;
        for (size, p) in self.cluster_size_pdf(k).iter().enumerate() {
            w.write_record([size.to_string(), p.to_string()])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("reconfig_rate.csv"))?;
        w.write_record(["step", "n_active", "reconfigured", "rate"])?;
        for s in &self.steps {
            let changed = (s.q1 * s.n_active as f64).round() as usize;
            w.write_record([
                s.step.to_string(),
                s.n_active.to_string(),
                changed.to_string(),
                s.q1.to_string(),
            ])?;
        }
        w.flush()?;

        let inside: Vec<&UserRecord> = self.users.iter().filter(|u| u.in_zone).collect();
        let outside: Vec<&UserRecord> = self.users.iter().filter(|u| !u.in_zone).collect();
        let violation_rate =
            |rows: &[&UserRecord]| mean(rows.iter().map(|u| f64::from(u8::from(u.outage_violation))));
        let rows: Vec<(&str, f64)> = vec![
            ("steps", self.steps.len() as f64),
            ("user_samples", self.users.len() as f64),
            ("user_samples_inside", inside.len() as f64),
            ("user_samples_outside", outside.len() as f64),
            ("mean_reward", mean(self.steps.iter().map(|s| s.reward))),
            ("mean_q1", mean(self.steps.iter().map(|s| s.q1))),
            ("mean_q2", mean(self.steps.iter().map(|s| s.q2))),
            ("mean_q3", mean(self.steps.iter().map(|s| s.q3))),
            ("outage_violation_rate_inside", violation_rate(&inside)),
            ("outage_violation_rate_outside", violation_rate(&outside)),
            ("mean_cluster_size", mean(self.users.iter().map(|u| u.cluster_size as f64))),
            ("reconfiguration_rate", self.reconfiguration_rate()),
        ];
        let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
        w.write_record(["metric", "value"])?;
        for (name, v) in rows {
            w.write_record([name.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Where an external agent is reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Wait for the agent to connect on `host:port`.
    Listen(String),
    /// Connect out to an agent waiting on `host:port`.
    Connect(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Algo {
    Baseline(Baseline),
    /// Actions come from an agent speaking the wire protocol; the agent also
    /// chooses the reset seed.
    External(Endpoint),
}

/// Runs `steps` environment steps and writes the CSV set into `out_dir`.
///
/// Baselines reset with `seed` and, whenever an episode ends, with
/// `seed + episode index`.
pub fn run(config: &ScenarioConfig, algo: &Algo, steps: u64, seed: u64, out_dir: &Path) -> Result<RunLog> {
    let log = match algo {
        Algo::Baseline(baseline) => run_baseline(config, baseline, steps, seed)?,
        Algo::External(endpoint) => run_external(config, endpoint, steps)?,
    };
    log.write_csvs(out_dir, config.n_orus())?;
    Ok(log)
}

pub fn run_baseline(config: &ScenarioConfig, baseline: &Baseline, steps: u64, seed: u64) -> Result<RunLog> {
    let mut env = Environment::new(config.clone());
    let mut log = RunLog::default();
    let mut episode = 0u64;
    env.reset(seed);
    for _ in 0..steps {
        let state = env.state().expect("environment was reset");
        let power = baseline.act(state, config)?;
        let tr = env.step_watts(&power.p)?;
        log.record(&tr.outcome);
        if tr.done {
            episode += 1;
            env.reset(seed.wrapping_add(episode));
        }
    }
    Ok(log)
}

fn run_external(config: &ScenarioConfig, endpoint: &Endpoint, steps: u64) -> Result<RunLog> {
    let stream = match endpoint {
        Endpoint::Listen(addr) => {
            let listener = TcpListener::bind(addr).map_err(|source| Error::Endpoint {
                addr: addr.clone(),
                source,
            })?;
            listener.accept()?.0
        }
        Endpoint::Connect(addr) => TcpStream::connect(addr).map_err(|source| Error::Endpoint {
            addr: addr.clone(),
            source,
        })?,
    };
    let log = Arc::new(Mutex::new(RunLog::default()));
    let sink = Arc::clone(&log);
    let mut session = Session::new(config.clone())
        .with_step_limit(steps)
        .on_step(move |outcome| sink.lock().expect("log lock").record(outcome));
    serve_stream(stream, &mut session)?;
    drop(session);
    let log = Arc::try_unwrap(log).expect("session released the log");
    Ok(log.into_inner().expect("log lock"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::OpportunisticConfig;

    #[test]
    fn cdf_of_three_points() {
        let cdf = empirical_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(cdf, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
    }

    #[test]
    fn constant_samples_jump_once() {
        assert_eq!(empirical_cdf(&[4.0; 7]).unwrap(), vec![(4.0, 1.0)]);
    }

    #[test]
    fn empty_cdf_is_an_error() {
        assert!(matches!(empirical_cdf(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn zero_outage_is_floored() {
        let mut log = RunLog::default();
        log.users.push(UserRecord {
            step: 0,
            slot: 0,
            eps: 0.0,
            in_zone: false,
            cluster_size: 1,
            reconfigured: false,
            outage_violation: false,
        });
        assert_eq!(log.log_outage_samples(false), vec![-300.0]);
        assert!(log.log_outage_samples(true).is_empty());
    }

    #[test]
    fn closest_run_has_unit_clusters() {
        let cfg = ScenarioConfig::reference_scenario();
        let log = run_baseline(&cfg, &Baseline::Closest, 200, 3).unwrap();
        let pdf = log.cluster_size_pdf(cfg.n_orus());
        assert_eq!(pdf[1], 1.0);
        assert_eq!(log.users.len(), log.steps.iter().map(|s| s.n_active).sum::<usize>());
    }

    #[test]
    fn all_inclusive_opportunistic_run() {
        let cfg = ScenarioConfig::reference_scenario();
        let opp = OpportunisticConfig { inclusion_margin_db: 400.0 };
        let log = run_baseline(&cfg, &Baseline::Opportunistic(opp), 50, 3).unwrap();
        let pdf = log.cluster_size_pdf(cfg.n_orus());
        assert_eq!(pdf[cfg.n_orus()], 1.0);
        assert!((pdf.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn csv_set_is_written() {
        let cfg = ScenarioConfig::reference_scenario();
        let dir = tempfile::tempdir().unwrap();
        let log = run(&cfg, &Algo::Baseline(Baseline::Closest), 30, 1, dir.path()).unwrap();
        for name in ["outage_cdf.csv", "power_cdf.csv", "cluster_size_pdf.csv", "reconfig_rate.csv", "summary.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let reconfig = fs::read_to_string(dir.path().join("reconfig_rate.csv")).unwrap();
        assert_eq!(reconfig.lines().count(), 31);
        // first step always changes every cluster
        let first: Vec<&str> = reconfig.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[1], first[2]);
        assert_eq!(log.steps.len(), 30);
    }
}
