//! Ready-made scenarios for the session types of a virtual workshop.

use super::{AgentScript, Behaviour, Phase, Scenario, DEFAULT_FLY_SPEED, DEFAULT_START_TS, DEFAULT_WALK_SPEED};
use crate::geom::Vec3;
use crate::telemetry::RoomGeometry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub const PRESET_NAMES: [&str; 5] = ["keynote", "breakout", "first-break", "second-break", "spawn-pileup"];

/// Builds a named preset with default parameters.
pub fn by_name(name: &str, seed: u64) -> Option<Scenario> {
    Some(match name {
        "keynote" => keynote(seed),
        "breakout" => breakout_circle(seed, 5, 1.5),
        "first-break" => first_break(seed),
        "second-break" => second_break(seed),
        "spawn-pileup" => spawn_pileup(seed),
        _ => return None,
    })
}

fn agent_id(i: usize) -> String {
    format!("agent-{i:02}")
}

fn base(room: RoomGeometry, duration_s: f64, seed: u64, agents: Vec<AgentScript>) -> Scenario {
    Scenario {
        room,
        duration_s,
        seed,
        start_ts: DEFAULT_START_TS,
        position_noise: 0.05,
        walk_speed: DEFAULT_WALK_SPEED,
        fly_speed: DEFAULT_FLY_SPEED,
        agents,
    }
}

fn place(point: Vec3) -> Phase {
    Phase::new(0.0, Behaviour::Spawn { point, jitter: 0.0 })
}

/// Layout of a plenary talk in the large hall.
#[derive(Debug, Clone, PartialEq)]
pub struct KeynoteConfig {
    pub seed: u64,
    pub duration_s: f64,
    /// Seats form a `columns x rows` lattice spanning the crowd box corners.
    pub columns: usize,
    pub rows: usize,
    /// Crowd box `(min_x, max_x, min_z, max_z)`.
    pub crowd_box: (f64, f64, f64, f64),
    pub speaker: Vec3,
    pub jitter_deg: f64,
    /// Altitudes of the rows farthest from the speaker, which fly; rows
    /// beyond this list stay on the floor.
    pub flying_rows: Vec<f64>,
}

impl Default for KeynoteConfig {
    fn default() -> Self {
        KeynoteConfig {
            seed: 42,
            duration_s: 600.0,
            columns: 4,
            rows: 4,
            crowd_box: (-10.0, 10.0, 0.0, 15.0),
            // Centre of the south (+z) wall.
            speaker: Vec3::new(0.0, 1.7, 20.0),
            jitter_deg: 60.0,
            flying_rows: vec![3.0],
        }
    }
}

impl KeynoteConfig {
    pub fn seats(&self) -> Vec<Vec3> {
        let (x0, x1, z0, z1) = self.crowd_box;
        let frac = |i: usize, n: usize| if n <= 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
        let mut seats = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.columns {
                seats.push(Vec3::new(x0 + (x1 - x0) * frac(c, self.columns), 0.0, z0 + (z1 - z0) * frac(r, self.rows)));
            }
        }
        seats
    }

    pub fn build(&self) -> Scenario {
        let agents = self
            .seats()
            .into_iter()
            .enumerate()
            .map(|(i, seat)| {
                let row = i / self.columns.max(1);
                let attend = match self.flying_rows.get(row) {
                    Some(&altitude) => Behaviour::Fly {
                        altitude,
                        target: Some(self.speaker),
                        jitter_deg: self.jitter_deg,
                    },
                    None => Behaviour::Attend { target: self.speaker, jitter_deg: self.jitter_deg },
                };
                AgentScript {
                    user_id: agent_id(i),
                    rate_hz: None,
                    phases: vec![place(seat), Phase::new(self.duration_s, attend)],
                }
            })
            .collect();
        base(RoomGeometry::outdoor_meetup(), self.duration_s, self.seed, agents)
    }
}

/// Sixteen attendees facing a speaker on the south wall of the 70 x 40 m hall.
pub fn keynote(seed: u64) -> Scenario {
    KeynoteConfig { seed, ..KeynoteConfig::default() }.build()
}

/// `n` people standing on a circle of `radius` meters in the breakout room.
pub fn breakout_circle(seed: u64, n: usize, radius: f64) -> Scenario {
    let duration = 600.0;
    let centre = Vec3::ZERO;
    let agents = (0..n)
        .map(|slot| {
            let a = TAU * slot as f64 / n as f64;
            AgentScript {
                user_id: agent_id(slot),
                rate_hz: None,
                phases: vec![
                    place(centre + Vec3::new(radius * a.cos(), 0.0, radius * a.sin())),
                    Phase::new(duration, Behaviour::Circle { centre, radius, slot, slots: n }),
                ],
            }
        })
        .collect();
    base(RoomGeometry::lake_office(), duration, seed, agents)
}

fn disc_point(rng: &mut ChaCha8Rng, centre: Vec3, radius: f64) -> Vec3 {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..TAU);
    centre + Vec3::new(r * a.cos(), 0.0, r * a.sin())
}

fn blob_agents(rng: &mut ChaCha8Rng, first_id: usize, count: usize, centre: Vec3, radius: f64, duration: f64) -> Vec<AgentScript> {
    (0..count)
        .map(|i| {
            let start = disc_point(rng, centre, radius);
            let waypoints = (0..4).map(|_| disc_point(rng, centre, radius)).collect();
            AgentScript {
                user_id: agent_id(first_id + i),
                rate_hz: None,
                phases: vec![place(start), Phase::new(duration, Behaviour::Mingle { waypoints, dwell_s: 20.0 })],
            }
        })
        .collect()
}

pub const BREAK_CENTRE: Vec3 = Vec3::new(0.0, 0.0, 5.0);

/// One loose crowd of sixteen milling around the middle of the hall.
pub fn first_break(seed: u64) -> Scenario {
    let duration = 600.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB1);
    let agents = blob_agents(&mut rng, 0, 16, BREAK_CENTRE, 1.4, duration);
    base(RoomGeometry::outdoor_meetup(), duration, seed, agents)
}

/// Group centres of [`second_break`]: the large group first, then the
/// five satellites.
pub fn second_break_centroids() -> Vec<Vec3> {
    let mut out = vec![BREAK_CENTRE];
    out.extend((0..5).map(|k| {
        let a = TAU * k as f64 / 5.0 + 0.3;
        BREAK_CENTRE + Vec3::new(7.0 * a.cos(), 0.0, 7.0 * a.sin())
    }));
    out
}

/// A central group of ten ringed by five trios.
pub fn second_break(seed: u64) -> Scenario {
    let duration = 600.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB2);
    let centroids = second_break_centroids();
    let mut agents = blob_agents(&mut rng, 0, 10, centroids[0], 1.2, duration);
    for &centre in &centroids[1..] {
        for slot in 0..3 {
            let id = agents.len();
            let a = TAU * slot as f64 / 3.0;
            let seat = centre + Vec3::new(0.6 * a.cos(), 0.0, 0.6 * a.sin());
            agents.push(AgentScript {
                user_id: agent_id(id),
                rate_hz: None,
                phases: vec![
                    place(seat),
                    Phase::new(duration, Behaviour::Circle { centre, radius: 0.6, slot, slots: 3 }),
                ],
            });
        }
    }
    base(RoomGeometry::outdoor_meetup(), duration, seed, agents)
}

pub const SPAWN_POINT: Vec3 = Vec3::new(0.0, 0.0, 12.0);

/// Twelve people joining the breakout room in three waves through a single
/// spawn point, lingering there briefly, then walking to their own spots.
pub fn spawn_pileup(seed: u64) -> Scenario {
    let duration = 180.0;
    let linger = 8.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5A);
    let waves: [(f64, usize); 3] = [(0.0, 6), (60.0, 4), (120.0, 2)];
    let mut agents = Vec::new();
    for (wave_start, count) in waves {
        for j in 0..count {
            let id = agents.len();
            let join = wave_start + j as f64 * 1.5 + rng.gen_range(0.0..0.5);
            // Destinations on a lattice 2.5 m apart, well away from the spawn point.
            let spot = Vec3::new(-5.0 + 2.5 * (id % 5) as f64, 0.0, -4.0 + 2.5 * (id / 5) as f64);
            let mut phases = Vec::new();
            if join > 0.0 {
                phases.push(Phase::new(join, Behaviour::Leave));
            }
            phases.push(Phase::new(linger, Behaviour::Spawn { point: SPAWN_POINT, jitter: 0.3 }));
            phases.push(Phase::new(
                duration - join - linger,
                Behaviour::Mingle { waypoints: vec![spot], dwell_s: duration },
            ));
            agents.push(AgentScript { user_id: agent_id(id), rate_hz: None, phases });
        }
    }
    let mut sc = base(RoomGeometry::lake_office(), duration, seed, agents);
    sc.position_noise = 0.02;
    sc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            by_name(name, 1).unwrap().validate().unwrap();
        }
        assert!(by_name("gala-dinner", 1).is_none());
    }

    #[test]
    fn keynote_seats_span_crowd_box() {
        let cfg = KeynoteConfig::default();
        let seats = cfg.seats();
        assert_eq!(seats.len(), 16);
        let xs: Vec<f64> = seats.iter().map(|s| s.x).collect();
        let zs: Vec<f64> = seats.iter().map(|s| s.z).collect();
        assert_eq!(xs.iter().cloned().fold(f64::INFINITY, f64::min), -10.0);
        assert_eq!(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 10.0);
        assert_eq!(zs.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 15.0);
    }
}
