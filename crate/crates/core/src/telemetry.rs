//! Tick records logged by in-world clients, and their validation.
//!
//! A tick is one sample of an avatar's pose and device state. Records arrive
//! as loosely-typed JSON from browser probes; [`validate_tick`] turns them
//! into [`TickEvent`]s with unit-norm direction and orientation.

use crate::geom::{Quat, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Largest accepted deviation of a direction/orientation norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-3;

/// Vectors already this close to unit length are left untouched, which keeps
/// validation idempotent bit-for-bit.
const RENORM_EPS: f64 = 1e-12;

/// UTC timestamp in milliseconds since the Unix epoch.
pub type EpochMillis = i64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickEvent {
    pub user_id: String,
    pub ts_utc: EpochMillis,
    pub entered: bool,
    pub position: Vec3,
    pub direction: Vec3,
    pub orientation: Quat,
    pub fps: f64,
    pub muted: bool,
    pub mic_level: Option<f64>,
    pub audio_dampened: Option<bool>,
    pub room_id: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("record is not a JSON object")]
    NotAnObject,
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` should be {expected}")]
    WrongType {
        field: &'static str,
        expected: &'static str,
    },
    #[error("field `{0}` has a non-finite component")]
    NonFinite(&'static str),
    #[error("field `{field}` has norm {norm}, more than {NORM_TOLERANCE} from unit")]
    NormDeviation { field: &'static str, norm: f64 },
    #[error("field `{0}` must be non-negative")]
    Negative(&'static str),
}

impl TickEvent {
    /// Checks the numeric invariants and renormalises near-unit vectors.
    pub fn validated(mut self) -> Result<Self, ValidationError> {
        if !self.position.is_finite() {
            return Err(ValidationError::NonFinite("position"));
        }
        if !self.direction.is_finite() {
            return Err(ValidationError::NonFinite("direction"));
        }
        if !self.orientation.is_finite() {
            return Err(ValidationError::NonFinite("orientation"));
        }
        if !self.fps.is_finite() {
            return Err(ValidationError::NonFinite("fps"));
        }
        if self.fps < 0.0 {
            return Err(ValidationError::Negative("fps"));
        }
        if let Some(level) = self.mic_level {
            if !level.is_finite() {
                return Err(ValidationError::NonFinite("mic_level"));
            }
            if level < 0.0 {
                return Err(ValidationError::Negative("mic_level"));
            }
        }

        let n = self.direction.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(ValidationError::NormDeviation { field: "direction", norm: n });
        }
        if (n - 1.0).abs() > RENORM_EPS {
            self.direction = self.direction * (1.0 / n);
        }

        let n = self.orientation.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(ValidationError::NormDeviation { field: "orientation", norm: n });
        }
        if (n - 1.0).abs() > RENORM_EPS {
            self.orientation = self.orientation.scale(1.0 / n);
        }
        Ok(self)
    }

    /// Canonical single-line JSON encoding.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("tick events always serialise")
    }
}

/// Parses and validates one raw record. Unknown keys are ignored.
pub fn validate_tick(raw: &Value) -> Result<TickEvent, ValidationError> {
    let obj = raw.as_object().ok_or(ValidationError::NotAnObject)?;
    let event = TickEvent {
        user_id: string_field(obj, "user_id")?,
        ts_utc: int_field(obj, "ts_utc")?,
        entered: bool_field(obj, "entered")?,
        position: Vec3::from(array_field::<3>(obj, "position")?),
        direction: Vec3::from(array_field::<3>(obj, "direction")?),
        orientation: Quat::from(array_field::<4>(obj, "orientation")?),
        fps: number_field(obj, "fps")?,
        muted: bool_field(obj, "muted")?,
        mic_level: optional(obj, "mic_level", |v| {
            v.as_f64().ok_or(ValidationError::WrongType { field: "mic_level", expected: "a number" })
        })?,
        audio_dampened: optional(obj, "audio_dampened", |v| {
            v.as_bool().ok_or(ValidationError::WrongType { field: "audio_dampened", expected: "a boolean" })
        })?,
        room_id: string_field(obj, "room_id")?,
    };
    event.validated()
}

fn required<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<&'a Value, ValidationError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(ValidationError::MissingField(field)),
        Some(v) => Ok(v),
    }
}

fn optional<T>(
    obj: &Map<String, Value>,
    field: &'static str,
    parse: impl FnOnce(&Value) -> Result<T, ValidationError>,
) -> Result<Option<T>, ValidationError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => parse(v).map(Some),
    }
}

fn string_field(obj: &Map<String, Value>, field: &'static str) -> Result<String, ValidationError> {
    required(obj, field)?
        .as_str()
        .map(str::to_owned)
        .ok_or(ValidationError::WrongType { field, expected: "a string" })
}

fn bool_field(obj: &Map<String, Value>, field: &'static str) -> Result<bool, ValidationError> {
    required(obj, field)?
        .as_bool()
        .ok_or(ValidationError::WrongType { field, expected: "a boolean" })
}

fn int_field(obj: &Map<String, Value>, field: &'static str) -> Result<i64, ValidationError> {
    required(obj, field)?
        .as_i64()
        .ok_or(ValidationError::WrongType { field, expected: "an integer" })
}

fn number_field(obj: &Map<String, Value>, field: &'static str) -> Result<f64, ValidationError> {
    required(obj, field)?
        .as_f64()
        .ok_or(ValidationError::WrongType { field, expected: "a number" })
}

fn array_field<const N: usize>(
    obj: &Map<String, Value>,
    field: &'static str,
) -> Result<[f64; N], ValidationError> {
    let wrong = ValidationError::WrongType {
        field,
        expected: if N == 3 { "an array of 3 numbers" } else { "an array of 4 numbers" },
    };
    let items = required(obj, field)?.as_array().ok_or(wrong.clone())?;
    if items.len() != N {
        return Err(wrong);
    }
    let mut out = [0.0; N];
    for (slot, item) in out.iter_mut().zip(items) {
        *slot = item.as_f64().ok_or(wrong.clone())?;
    }
    Ok(out)
}

/// Floor-plan geometry of a room, centred on the world origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomGeometry {
    pub room_id: String,
    /// Extent along x, in meters.
    pub bounds_x: f64,
    /// Extent along z, in meters.
    pub bounds_z: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("room bounds must be finite and strictly positive (got {bounds_x} x {bounds_z})")]
pub struct InvalidRoom {
    pub bounds_x: f64,
    pub bounds_z: f64,
}

impl RoomGeometry {
    pub fn new(
        room_id: impl Into<String>,
        bounds_x: f64,
        bounds_z: f64,
        label: impl Into<String>,
    ) -> Result<Self, InvalidRoom> {
        let room = RoomGeometry {
            room_id: room_id.into(),
            bounds_x,
            bounds_z,
            label: label.into(),
        };
        room.check()?;
        Ok(room)
    }

    pub fn check(&self) -> Result<(), InvalidRoom> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.bounds_x) && ok(self.bounds_z) {
            Ok(())
        } else {
            Err(InvalidRoom { bounds_x: self.bounds_x, bounds_z: self.bounds_z })
        }
    }

    /// The 70 m x 40 m main hall used for plenary sessions.
    pub fn outdoor_meetup() -> Self {
        RoomGeometry {
            room_id: "outdoor-meetup".into(),
            bounds_x: 70.0,
            bounds_z: 40.0,
            label: "Outdoor Meetup".into(),
        }
    }

    /// The 20 m x 30 m breakout room.
    pub fn lake_office() -> Self {
        RoomGeometry {
            room_id: "lake-office".into(),
            bounds_x: 20.0,
            bounds_z: 30.0,
            label: "Lake Office".into(),
        }
    }

    pub fn min_x(&self) -> f64 {
        -self.bounds_x / 2.0
    }

    pub fn min_z(&self) -> f64 {
        -self.bounds_z / 2.0
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let (hx, hz) = (self.bounds_x / 2.0, self.bounds_z / 2.0);
        (-hx..hx).contains(&x) && (-hz..hz).contains(&z)
    }
}

/// A collection of validated tick events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    pub events: Vec<TickEvent>,
}

impl SessionLog {
    pub fn new(events: Vec<TickEvent>) -> Self {
        SessionLog { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn user_ids(&self) -> BTreeSet<&str> {
        self.events.iter().map(|e| e.user_id.as_str()).collect()
    }

    pub fn room_ids(&self) -> BTreeSet<&str> {
        self.events.iter().map(|e| e.room_id.as_str()).collect()
    }

    /// Earliest and latest timestamp, if any events exist.
    pub fn time_span(&self) -> Option<(EpochMillis, EpochMillis)> {
        let min = self.events.iter().map(|e| e.ts_utc).min()?;
        let max = self.events.iter().map(|e| e.ts_utc).max()?;
        Some((min, max))
    }

    /// Stable sort by `(ts_utc, user_id)`.
    pub fn sort(&mut self) {
        self.events
            .sort_by(|a, b| a.ts_utc.cmp(&b.ts_utc).then_with(|| a.user_id.cmp(&b.user_id)));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamKey {
    pub user_id: String,
    pub room_id: String,
}

/// Per-(user, room) time-ordered event streams.
pub type Streams = BTreeMap<StreamKey, Vec<TickEvent>>;

/// Sorts the log by time and splits it into one stream per (user, room).
pub fn sort_and_segment(mut log: SessionLog) -> Streams {
    log.sort();
    let mut streams = Streams::new();
    for event in log.events {
        let key = StreamKey { user_id: event.user_id.clone(), room_id: event.room_id.clone() };
        streams.entry(key).or_default().push(event);
    }
    streams
}
