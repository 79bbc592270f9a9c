//! Deterministic synthetic crowds.
//!
//! A [`Scenario`] scripts each agent as a sequence of timed behaviour phases
//! (spawning, attending a speaker, mingling, standing in a circle, flying,
//! being away). [`run_scenario`] plays the scripts at per-agent tick rates
//! and returns the tick stream a set of instrumented clients would have
//! logged. The same scenario and seed always produce the same stream.

mod emit;
pub mod presets;

pub use emit::{emit, DeliveryReport, EmitError, RetryPolicy, Sink};

use crate::geom::{Quat, Vec3};
use crate::telemetry::{EpochMillis, RoomGeometry, TickEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::TAU;
use thiserror::Error;

/// Client frame-rate distribution used when an agent has no explicit rate.
pub const DEFAULT_RATE_MEAN_HZ: f64 = 43.67;
pub const DEFAULT_RATE_SD_HZ: f64 = 15.3;
pub const RATE_CLAMP_HZ: (f64, f64) = (10.0, 90.0);

pub const DEFAULT_WALK_SPEED: f64 = 1.4;
pub const DEFAULT_FLY_SPEED: f64 = 5.0;

/// 2020-04-29 14:10:00 UTC.
pub const DEFAULT_START_TS: EpochMillis = 1_588_169_400_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behaviour {
    /// Appear at `point`, offset uniformly within a disc of radius `jitter`,
    /// and stand still.
    Spawn { point: Vec3, jitter: f64 },
    /// Stay in place and look towards `target`, off by a uniform random
    /// angle in `[-jitter_deg, jitter_deg]` on every tick.
    Attend { target: Vec3, jitter_deg: f64 },
    /// Walk through `waypoints` cyclically, pausing `dwell_s` at each.
    Mingle { waypoints: Vec<Vec3>, dwell_s: f64 },
    /// Walk to slot `slot` of `slots` evenly spaced around a circle and face
    /// its centre.
    Circle { centre: Vec3, radius: f64, slot: usize, slots: usize },
    /// Rise or sink to `altitude`, optionally attending `target`.
    Fly {
        altitude: f64,
        #[serde(default)]
        target: Option<Vec3>,
        #[serde(default)]
        jitter_deg: f64,
    },
    /// Not in the room: no ticks are logged.
    Leave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub duration_s: f64,
    #[serde(flatten)]
    pub behaviour: Behaviour,
}

impl Phase {
    pub fn new(duration_s: f64, behaviour: Behaviour) -> Self {
        Phase { duration_s, behaviour }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentScript {
    pub user_id: String,
    /// Tick rate; drawn from the default client distribution when absent.
    #[serde(default)]
    pub rate_hz: Option<f64>,
    pub phases: Vec<Phase>,
}

fn default_start() -> EpochMillis {
    DEFAULT_START_TS
}

fn default_walk() -> f64 {
    DEFAULT_WALK_SPEED
}

fn default_fly() -> f64 {
    DEFAULT_FLY_SPEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub room: RoomGeometry,
    pub duration_s: f64,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start_ts: EpochMillis,
    /// Standard deviation of per-tick floor-position noise, meters.
    #[serde(default)]
    pub position_noise: f64,
    #[serde(default = "default_walk")]
    pub walk_speed: f64,
    #[serde(default = "default_fly")]
    pub fly_speed: f64,
    pub agents: Vec<AgentScript>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario duration must be positive")]
    InvalidDuration,
    #[error("scenario has no agents")]
    NoAgents,
    #[error(transparent)]
    Room(#[from] crate::telemetry::InvalidRoom),
    #[error("duplicate agent id `{0}`")]
    DuplicateAgent(String),
    #[error("agent `{agent}`: phases last {sum} s but the scenario lasts {duration} s")]
    PhasesDoNotTile { agent: String, sum: f64, duration: f64 },
    #[error("agent `{agent}`: {reason}")]
    InvalidScript { agent: String, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialise")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ScenarioError::InvalidDuration);
        }
        if self.agents.is_empty() {
            return Err(ScenarioError::NoAgents);
        }
        self.room.check()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.walk_speed) || !positive(self.fly_speed) {
            return Err(ScenarioError::Invalid("speeds must be positive".into()));
        }
        if !(self.position_noise.is_finite() && self.position_noise >= 0.0) {
            return Err(ScenarioError::Invalid("position_noise must be non-negative".into()));
        }
        let mut seen = BTreeSet::new();
        for agent in &self.agents {
            if !seen.insert(agent.user_id.as_str()) {
                return Err(ScenarioError::DuplicateAgent(agent.user_id.clone()));
            }
            let bad = |reason: &str| ScenarioError::InvalidScript {
                agent: agent.user_id.clone(),
                reason: reason.to_owned(),
            };
            if let Some(rate) = agent.rate_hz {
                if !positive(rate) {
                    return Err(bad("rate_hz must be positive"));
                }
            }
            let mut sum = 0.0;
            for phase in &agent.phases {
                if !(phase.duration_s.is_finite() && phase.duration_s >= 0.0) {
                    return Err(bad("phase durations must be non-negative"));
                }
                sum += phase.duration_s;
                check_behaviour(&phase.behaviour).map_err(|r| bad(&r))?;
            }
            if (sum - self.duration_s).abs() > 1e-6 {
                return Err(ScenarioError::PhasesDoNotTile {
                    agent: agent.user_id.clone(),
                    sum,
                    duration: self.duration_s,
                });
            }
        }
        Ok(())
    }
}

fn check_behaviour(b: &Behaviour) -> Result<(), String> {
    let finite = |v: &Vec3| v.is_finite();
    let jitter_ok = |j: f64| (0.0..=180.0).contains(&j);
    match b {
        Behaviour::Spawn { point, jitter } => {
            if !finite(point) || !(jitter.is_finite() && *jitter >= 0.0) {
                return Err("spawn needs a finite point and non-negative jitter".into());
            }
        }
        Behaviour::Attend { target, jitter_deg } => {
            if !finite(target) || !jitter_ok(*jitter_deg) {
                return Err("attend needs a finite target and jitter in [0, 180] degrees".into());
            }
        }
        Behaviour::Mingle { waypoints, dwell_s } => {
            if waypoints.is_empty() || !waypoints.iter().all(finite) || !(dwell_s.is_finite() && *dwell_s >= 0.0) {
                return Err("mingle needs finite waypoints and a non-negative dwell".into());
            }
        }
        Behaviour::Circle { centre, radius, slot, slots } => {
            if !finite(centre) || !(radius.is_finite() && *radius >= 0.0) || *slots == 0 || slot >= slots {
                return Err("circle needs a finite centre, non-negative radius and slot < slots".into());
            }
        }
        Behaviour::Fly { altitude, target, jitter_deg } => {
            if !altitude.is_finite() || target.as_ref().is_some_and(|t| !finite(t)) || !jitter_ok(*jitter_deg) {
                return Err("fly needs a finite altitude and target".into());
            }
        }
        Behaviour::Leave => {}
    }
    Ok(())
}

/// Direction from `from` towards `target`, turned sideways by `offset`
/// radians within the plane that contains the bearing and the vertical.
/// The angle between the result and the exact bearing is `|offset|`.
pub fn gaze_with_offset(from: Vec3, target: Vec3, offset: f64) -> Option<Vec3> {
    let bearing = (target - from).normalized()?;
    let axis = (Vec3::UP - bearing * Vec3::UP.dot(bearing))
        .normalized()
        .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    bearing.rotate_about(axis, offset).normalized()
}

fn horizontal_heading(dir: Vec3) -> Option<Vec3> {
    Vec3::new(dir.x, 0.0, dir.z).normalized()
}

fn yaw_vector(yaw: f64) -> Vec3 {
    Vec3::new(yaw.cos(), 0.0, yaw.sin())
}

/// Moves `pos` towards `dest` by at most `step` meters; returns whether it arrived.
fn step_towards(pos: &mut Vec3, dest: Vec3, step: f64) -> bool {
    let delta = dest - *pos;
    let dist = delta.norm();
    if dist <= step || dist == 0.0 {
        *pos = dest;
        true
    } else {
        *pos = *pos + delta * (step / dist);
        false
    }
}

struct AgentState {
    position: Vec3,
    direction: Vec3,
    waypoint: usize,
    dwell_until: Option<f64>,
}

struct AgentRun<'a> {
    scenario: &'a Scenario,
    script: &'a AgentScript,
    rng: ChaCha8Rng,
    rate: f64,
    muted: bool,
    mic_level: f64,
}

impl AgentRun<'_> {
    fn jitter(&mut self, jitter_deg: f64) -> f64 {
        if jitter_deg == 0.0 {
            0.0
        } else {
            self.rng.gen_range(-jitter_deg..=jitter_deg).to_radians()
        }
    }

    fn noise(&mut self) -> Vec3 {
        let sd = self.scenario.position_noise;
        if sd == 0.0 {
            return Vec3::ZERO;
        }
        let n = Normal::new(0.0, sd).expect("validated noise");
        Vec3::new(n.sample(&mut self.rng), 0.0, n.sample(&mut self.rng))
    }

    fn events(mut self) -> Vec<TickEvent> {
        let sc = self.scenario;
        let period = 1.0 / self.rate;
        let offset = self.rng.gen_range(0.0..period);
        let mut state = AgentState {
            position: Vec3::ZERO,
            direction: yaw_vector(self.rng.gen_range(0.0..TAU)),
            waypoint: 0,
            dwell_until: None,
        };
        let mut out = Vec::with_capacity((sc.duration_s * self.rate) as usize + 2);
        let mut phase_start = 0.0;
        let mut last_t = 0.0;
        let mut k: u64 = 0;
        for (pi, phase) in self.script.phases.iter().enumerate() {
            let phase_end = phase_start + phase.duration_s;
            let last_phase = pi + 1 == self.script.phases.len();
            self.enter(&phase.behaviour, &mut state);
            loop {
                let t = offset + k as f64 * period;
                if t >= phase_end && !(last_phase && t < sc.duration_s) {
                    break;
                }
                if t >= sc.duration_s {
                    break;
                }
                let dt = (t - last_t).max(0.0);
                last_t = t;
                k += 1;
                if let Some(event) = self.tick(&phase.behaviour, &mut state, t, dt) {
                    out.push(event);
                }
            }
            phase_start = phase_end;
        }
        out
    }

    fn enter(&mut self, behaviour: &Behaviour, state: &mut AgentState) {
        match behaviour {
            Behaviour::Spawn { point, jitter } => {
                let r = jitter * self.rng.gen::<f64>().sqrt();
                let a = self.rng.gen_range(0.0..TAU);
                state.position = *point + Vec3::new(r * a.cos(), 0.0, r * a.sin());
                state.direction = yaw_vector(self.rng.gen_range(0.0..TAU));
            }
            Behaviour::Mingle { .. } => {
                state.waypoint = 0;
                state.dwell_until = None;
            }
            _ => {}
        }
    }

    fn tick(&mut self, behaviour: &Behaviour, state: &mut AgentState, t: f64, dt: f64) -> Option<TickEvent> {
        let sc = self.scenario;
        let walk = sc.walk_speed * dt;
        let mut gaze_target = None;
        match behaviour {
            Behaviour::Leave => return None,
            Behaviour::Spawn { .. } => {}
            Behaviour::Attend { target, jitter_deg } => gaze_target = Some((*target, *jitter_deg)),
            Behaviour::Mingle { waypoints, dwell_s } => {
                let centroid = waypoints.iter().fold(Vec3::ZERO, |acc, w| acc + *w) * (1.0 / waypoints.len() as f64);
                match state.dwell_until {
                    Some(until) if t < until => {}
                    Some(_) => {
                        state.dwell_until = None;
                        state.waypoint = (state.waypoint + 1) % waypoints.len();
                    }
                    None => {}
                }
                if state.dwell_until.is_none() {
                    let dest = waypoints[state.waypoint];
                    let before = state.position;
                    if step_towards(&mut state.position, dest, walk) {
                        state.dwell_until = Some(t + dwell_s);
                        if let Some(d) = horizontal_heading(centroid - state.position) {
                            state.direction = d;
                        }
                    } else if let Some(d) = horizontal_heading(state.position - before) {
                        state.direction = d;
                    }
                }
            }
            Behaviour::Circle { centre, radius, slot, slots } => {
                let a = TAU * *slot as f64 / *slots as f64;
                let dest = *centre + Vec3::new(radius * a.cos(), 0.0, radius * a.sin());
                let before = state.position;
                if step_towards(&mut state.position, dest, walk) {
                    if let Some(d) = horizontal_heading(*centre - state.position) {
                        state.direction = d;
                    }
                } else if let Some(d) = horizontal_heading(state.position - before) {
                    state.direction = d;
                }
            }
            Behaviour::Fly { altitude, target, jitter_deg } => {
                let dest = Vec3::new(state.position.x, *altitude, state.position.z);
                step_towards(&mut state.position, dest, sc.fly_speed * dt);
                gaze_target = target.map(|t| (t, *jitter_deg));
            }
        }

        let position = state.position + self.noise();
        let direction = match gaze_target {
            Some((target, jitter_deg)) => {
                let offset = self.jitter(jitter_deg);
                gaze_with_offset(position, target, offset).unwrap_or(state.direction)
            }
            None => state.direction,
        };
        Some(TickEvent {
            user_id: self.script.user_id.clone(),
            ts_utc: sc.start_ts + (t * 1000.0).floor() as i64,
            entered: true,
            position,
            direction,
            orientation: Quat::looking_along(direction),
            fps: self.rate,
            muted: self.muted,
            mic_level: Some(if self.muted { 0.0 } else { self.mic_level }),
            audio_dampened: Some(false),
            room_id: sc.room.room_id.clone(),
        })
    }
}

/// Plays every agent script and returns the merged stream sorted by
/// `(ts_utc, user_id)`.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<TickEvent>, ScenarioError> {
    scenario.validate()?;
    let rate_dist = Normal::new(DEFAULT_RATE_MEAN_HZ, DEFAULT_RATE_SD_HZ).expect("valid normal");
    let mut events = Vec::new();
    for (index, script) in scenario.agents.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(index as u64 + 1);
        let drawn: f64 = rate_dist.sample(&mut rng);
        let rate = script.rate_hz.unwrap_or_else(|| drawn.clamp(RATE_CLAMP_HZ.0, RATE_CLAMP_HZ.1));
        let muted = rng.gen_bool(0.5);
        let mic_level = rng.gen_range(0.05..0.6);
        let run = AgentRun { scenario, script, rng, rate, muted, mic_level };
        events.extend(run.events());
    }
    events.sort_by(|a, b| a.ts_utc.cmp(&b.ts_utc).then_with(|| a.user_id.cmp(&b.user_id)));
    Ok(events)
}
