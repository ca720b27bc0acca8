//! Newline-delimited JSON request/response protocol.
//!
//! One JSON object per line in each direction, strictly one response per
//! request, in order:
//!
//! | request                                   | response payload                                            |
//! |-------------------------------------------|-------------------------------------------------------------|
//! | `{"cmd":"hello"}`                         | `n_max`, `k`, `obs_len`, `protocol_version`                 |
//! | `{"cmd":"reset","seed":42}`               | `obs`                                                       |
//! | `{"cmd":"step","action":[[..],..]}`       | `obs`, `reward`, `q1`, `q2`, `q3`, `eps`, `clusters`, `done` |
//! | `{"cmd":"close"}`                         | none; the session ends                                      |
//!
//! Every response carries `ok`; failures carry `ok:false` and `error` and
//! leave the session state untouched. Reals are written with 17 significant
//! digits.

use std::io::{self, BufRead, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::environment::{Environment, StepOutcome};
use crate::matrix::Matrix;

pub const PROTOCOL_VERSION: u32 = 1;

/// A real written as `{:.16e}` (17 significant digits).
#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

#[derive(Serialize)]
struct Hello {
    ok: bool,
    n_max: usize,
    k: usize,
    obs_len: usize,
    protocol_version: u32,
}

#[derive(Serialize)]
struct Reset {
    ok: bool,
    obs: Vec<Real>,
}

#[derive(Serialize)]
struct Step<'a> {
    ok: bool,
    obs: Vec<Real>,
    reward: Real,
    q1: Real,
    q2: Real,
    q3: Real,
    eps: Vec<Real>,
    clusters: &'a [Vec<usize>],
    done: bool,
}

#[derive(Serialize)]
struct Closed {
    ok: bool,
}

#[derive(Serialize)]
struct Failure<'a> {
    ok: bool,
    error: &'a str,
}

/// Whether the session continues after a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Close,
}

type StepHook = Box<dyn FnMut(&StepOutcome) + Send>;

/// Protocol state machine for one connection.
pub struct Session {
    env: Environment,
    started: bool,
    steps: u64,
    step_limit: Option<u64>,
    on_step: Option<StepHook>,
}

impl Session {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            env: Environment::new(config),
            started: false,
            steps: 0,
            step_limit: None,
            on_step: None,
        }
    }

    /// Caps the number of steps served; the last allowed step reports `done`.
    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = Some(limit);
        self
    }

    /// Called with every successful step outcome.
    pub fn on_step(mut self, hook: impl FnMut(&StepOutcome) + Send + 'static) -> Self {
        self.on_step = Some(Box::new(hook));
        self
    }

    pub fn steps_served(&self) -> u64 {
        self.steps
    }

    /// Handles one request line and returns the response line (no newline).
    pub fn handle_line(&mut self, line: &str) -> (String, Control) {
        match self.dispatch(line) {
            Ok(reply) => reply,
            Err(msg) => (to_line(&Failure { ok: false, error: &msg }), Control::Continue),
        }
    }

    fn dispatch(&mut self, line: &str) -> Result<(String, Control), String> {
        let request: Value =
            serde_json::from_str(line).map_err(|e| format!("malformed request: {e}"))?;
        let cmd = request
            .get("cmd")
            .and_then(Value::as_str)
            .ok_or("malformed request: missing string field `cmd`")?;
        match cmd {
            "hello" => {
                let cfg = self.env.config();
                Ok((
                    to_line(&Hello {
                        ok: true,
                        n_max: cfg.n_max_users,
                        k: cfg.n_orus(),
                        obs_len: self.env.observation_len(),
                        protocol_version: PROTOCOL_VERSION,
                    }),
                    Control::Continue,
                ))
            }
            "reset" => {
                let seed = request
                    .get("seed")
                    .and_then(Value::as_u64)
                    .ok_or("reset needs a non-negative integer `seed`")?;
                let obs = self.env.reset(seed);
                self.started = true;
                Ok((to_line(&Reset { ok: true, obs: reals(&obs.0) }), Control::Continue))
            }
            "step" => self.step(&request).map(|l| (l, Control::Continue)),
            "close" => Ok((to_line(&Closed { ok: true }), Control::Close)),
            other => Err(format!("unknown cmd `{other}`")),
        }
    }

    fn step(&mut self, request: &Value) -> Result<String, String> {
        if !self.started {
            return Err("step before reset".into());
        }
        if self.step_limit.is_some_and(|limit| self.steps >= limit) {
            return Err("step budget of this session is exhausted".into());
        }
        let action = parse_action(request.get("action").ok_or("step needs `action`")?)?;
        let tr = self.env.step(&action).map_err(|e| e.to_string())?;
        self.steps += 1;
        if let Some(hook) = self.on_step.as_mut() {
            hook(&tr.outcome);
        }
        let o = &tr.outcome;
        let done = tr.done || self.step_limit.is_some_and(|limit| self.steps >= limit);
        Ok(to_line(&Step {
            ok: true,
            obs: reals(&tr.observation.0),
            reward: Real(o.reward),
            q1: Real(o.q1),
            q2: Real(o.q2),
            q3: Real(o.q3),
            eps: reals(&o.eps),
            clusters: &o.clusters,
            done,
        }))
    }
}

fn parse_action(value: &Value) -> Result<Matrix, String> {
    let rows = value.as_array().ok_or("`action` must be an array of arrays")?;
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or("`action` must be an array of arrays")?
                .iter()
                .map(|v| v.as_f64().ok_or("`action` entries must be numbers"))
                .collect::<Result<Vec<f64>, &str>>()
        })
        .collect::<Result<_, _>>()?;
    Matrix::from_rows(&rows).ok_or_else(|| "`action` rows must have equal length".into())
}

fn to_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response types always serialize")
}

/// Runs one session over a line-oriented byte stream until `close` or EOF.
pub fn serve<R: BufRead, W: Write>(reader: R, writer: W, session: &mut Session) -> io::Result<()> {
    let mut writer = BufWriter::new(writer);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, control) = session.handle_line(&line);
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if control == Control::Close {
            break;
        }
    }
    Ok(())
}

/// Serves a session over an established TCP stream.
pub fn serve_stream(stream: TcpStream, session: &mut Session) -> io::Result<()> {
    let reader = io::BufReader::new(stream.try_clone()?);
    serve(reader, stream, session)
}

/// Accepts connections forever, one independent session per connection.
pub fn listen(addr: impl ToSocketAddrs, config: ScenarioConfig) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    for stream in listener.incoming() {
        let stream = stream?;
        let config = config.clone();
        std::thread::spawn(move || {
            let mut session = Session::new(config);
            if let Err(e) = serve_stream(stream, &mut session) {
                eprintln!("session ended with error: {e}");
            }
        });
    }
    Ok(())
}
