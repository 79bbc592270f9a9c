//! HTTP collection endpoint for batched tick uploads.
//!
//! Clients buffer ticks and POST them in bulk as a [`BatchEnvelope`]. Every
//! event that passes [`validate_tick`](crate::telemetry::validate_tick) is
//! appended to a JSON-lines log before the [`Ack`] goes out; invalid events
//! are skipped and counted.

mod log;
mod server;

pub use log::{encode_lines, read_log, AppendLog, LogReadout, LogWriter, ReadLogError};
pub use server::{router, serve, IngestConfig, IngestState};

use crate::telemetry::{validate_tick, TickEvent};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Upper bound on events per POST unless configured otherwise.
pub const DEFAULT_MAX_BATCH: usize = 4000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchEnvelope {
    pub client_session_id: String,
    pub events: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed batch body: {0}")]
    Malformed(String),
    #[error("batch contains no events")]
    EmptyBatch,
    #[error("batch of {len} events exceeds the limit of {max}")]
    TooLarge { len: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("failed to persist batch: {0}")]
    Io(#[from] std::io::Error),
}

/// A parsed batch split into valid events and a reject count.
#[derive(Debug, Default)]
pub struct DecodedBatch {
    pub client_session_id: String,
    pub accepted: Vec<TickEvent>,
    pub rejected: usize,
}

pub fn decode_batch(body: &[u8], max_batch: usize) -> Result<DecodedBatch, ProtocolError> {
    let envelope: BatchEnvelope =
        serde_json::from_slice(body).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    if envelope.events.is_empty() {
        return Err(ProtocolError::EmptyBatch);
    }
    if envelope.events.len() > max_batch {
        return Err(ProtocolError::TooLarge { len: envelope.events.len(), max: max_batch });
    }
    let mut out = DecodedBatch {
        client_session_id: envelope.client_session_id,
        accepted: Vec::with_capacity(envelope.events.len()),
        rejected: 0,
    };
    for raw in &envelope.events {
        match validate_tick(raw) {
            Ok(event) => out.accepted.push(event),
            Err(e) => {
                tracing::debug!(session = %out.client_session_id, error = %e, "rejected tick");
                out.rejected += 1;
            }
        }
    }
    Ok(out)
}

/// Decodes a request body and persists its valid events.
///
/// Protocol errors leave the log untouched. The returned ack is only
/// produced after the accepted lines have been flushed.
pub async fn handle_batch(
    writer: &LogWriter,
    body: &[u8],
    max_batch: usize,
) -> Result<Ack, IngestError> {
    let batch = decode_batch(body, max_batch)?;
    if !batch.accepted.is_empty() {
        writer.append(&batch.accepted).await?;
    }
    Ok(Ack { accepted: batch.accepted.len(), rejected: batch.rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Quat, Vec3};
    use serde_json::json;

    fn event(i: usize) -> TickEvent {
        TickEvent {
            user_id: format!("u{}", i % 3),
            ts_utc: 1_000 + i as i64,
            entered: true,
            position: Vec3::new(i as f64, 0.0, 0.0),
            direction: Vec3::new(0.0, 0.0, -1.0),
            orientation: Quat::IDENTITY,
            fps: 30.0,
            muted: true,
            mic_level: None,
            audio_dampened: None,
            room_id: "hall".into(),
        }
    }

    fn body(events: Vec<Value>) -> Vec<u8> {
        serde_json::to_vec(&BatchEnvelope { client_session_id: "c1".into(), events }).unwrap()
    }

    fn valid(n: usize) -> Vec<Value> {
        (0..n).map(|i| serde_json::to_value(event(i)).unwrap()).collect()
    }

    #[tokio::test]
    async fn full_batch_is_accepted_and_logged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ticks.jsonl");
        let writer = LogWriter::spawn(AppendLog::open(&path).unwrap());
        let ack = handle_batch(&writer, &body(valid(4000)), DEFAULT_MAX_BATCH).await.unwrap();
        assert_eq!(ack, Ack { accepted: 4000, rejected: 0 });
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4000);
        let back = read_log(&path).unwrap();
        assert_eq!(back.log.events, (0..4000).map(event).collect::<Vec<_>>());
    }

    #[tokio::test]
    async fn garbage_body_leaves_log_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ticks.jsonl");
        let writer = LogWriter::spawn(AppendLog::open(&path).unwrap());
        let err = handle_batch(&writer, b"not json", DEFAULT_MAX_BATCH).await.unwrap_err();
        assert!(matches!(err, IngestError::Protocol(ProtocolError::Malformed(_))));
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);
    }

    #[tokio::test]
    async fn invalid_events_are_skipped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ticks.jsonl");
        let writer = LogWriter::spawn(AppendLog::open(&path).unwrap());
        let mut events = valid(10);
        events[4].as_object_mut().unwrap().remove("position");
        let ack = handle_batch(&writer, &body(events), DEFAULT_MAX_BATCH).await.unwrap();
        assert_eq!(ack, Ack { accepted: 9, rejected: 1 });
        assert_eq!(read_log(&path).unwrap().log.len(), 9);
    }

    #[test]
    fn oversized_and_empty_batches_are_protocol_errors() {
        assert!(matches!(
            decode_batch(&body(valid(11)), 10),
            Err(ProtocolError::TooLarge { len: 11, max: 10 })
        ));
        assert!(matches!(decode_batch(&body(vec![]), 10), Err(ProtocolError::EmptyBatch)));
        let missing_events = serde_json::to_vec(&json!({"client_session_id": "x"})).unwrap();
        assert!(matches!(decode_batch(&missing_events, 10), Err(ProtocolError::Malformed(_))));
    }

    #[test]
    fn non_object_events_count_as_rejected() {
        let mut events = valid(2);
        events.push(json!(42));
        events.push(json!(null));
        let batch = decode_batch(&body(events), 10).unwrap();
        assert_eq!(batch.accepted.len(), 2);
        assert_eq!(batch.rejected, 2);
    }
}
