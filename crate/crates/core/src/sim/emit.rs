use crate::ingest::{encode_lines, Ack, DEFAULT_MAX_BATCH};
use crate::telemetry::TickEvent;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::thread;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Attempts per batch, including the first.
    pub max_attempts: u32,
    /// Delay before the first retry; doubled after each further failure.
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_millis(100) }
    }
}

#[derive(Debug, Clone)]
pub enum Sink {
    /// Canonical JSON lines, one event per line; the file is replaced.
    File(PathBuf),
    /// Bulk POSTs of at most `threshold` events to an ingest endpoint.
    Http {
        url: String,
        threshold: usize,
        client_session_id: String,
        retry: RetryPolicy,
    },
}

impl Sink {
    pub fn http(url: impl Into<String>) -> Self {
        Sink::Http {
            url: url.into(),
            threshold: DEFAULT_MAX_BATCH,
            client_session_id: "simulator".into(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DeliveryReport {
    pub batches_sent: usize,
    pub batches_acked: usize,
    pub events_sent: usize,
    pub events_acked: usize,
    pub events_rejected: usize,
    /// Failed attempts, retries included.
    pub failures: usize,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write events: {0}")]
    Io(#[from] io::Error),
    #[error("delivery stopped after {} of {} batches: {message}", report.batches_acked, report.batches_sent)]
    Delivery { report: DeliveryReport, message: String },
    #[error("batch threshold must be at least 1")]
    InvalidThreshold,
}

#[derive(Serialize)]
struct Outgoing<'a> {
    client_session_id: &'a str,
    events: &'a [TickEvent],
}

enum Attempt {
    Acked(Ack),
    Retry(String),
    Fatal(String),
}

fn post_once(agent: &ureq::Agent, url: &str, body: &str) -> Attempt {
    match agent.post(url).set("Content-Type", "application/json").send_string(body) {
        Ok(resp) => {
            let parsed = resp
                .into_string()
                .map_err(|e| e.to_string())
                .and_then(|text| serde_json::from_str::<Ack>(&text).map_err(|e| e.to_string()));
            match parsed {
                Ok(ack) => Attempt::Acked(ack),
                Err(e) => Attempt::Fatal(format!("unreadable ack: {e}")),
            }
        }
        Err(ureq::Error::Status(code, resp)) => {
            let text = resp.into_string().unwrap_or_default();
            let message = format!("server answered {code}: {}", text.trim());
            if code >= 500 {
                Attempt::Retry(message)
            } else {
                Attempt::Fatal(message)
            }
        }
        Err(ureq::Error::Transport(t)) => Attempt::Retry(t.to_string()),
    }
}

/// Delivers `events` to `sink` in order.
///
/// HTTP batches that fail with a transport error or a 5xx status are
/// retried with exponential backoff; once a batch exhausts its attempts (or
/// gets a 4xx) delivery stops and the error carries the partial report.
pub fn emit(events: &[TickEvent], sink: &Sink) -> Result<DeliveryReport, EmitError> {
    match sink {
        Sink::File(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            out.write_all(encode_lines(events).as_bytes())?;
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            Ok(DeliveryReport {
                batches_sent: 1,
                batches_acked: 1,
                events_sent: events.len(),
                events_acked: events.len(),
                events_rejected: 0,
                failures: 0,
            })
        }
        Sink::Http { url, threshold, client_session_id, retry } => {
            if *threshold == 0 {
                return Err(EmitError::InvalidThreshold);
            }
            let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build();
            let mut report = DeliveryReport::default();
            for batch in events.chunks(*threshold) {
                let body = serde_json::to_string(&Outgoing { client_session_id, events: batch })
                    .expect("tick events always serialise");
                report.batches_sent += 1;
                report.events_sent += batch.len();
                let mut backoff = retry.initial_backoff;
                let mut attempt = 0;
                loop {
                    attempt += 1;
                    match post_once(&agent, url, &body) {
                        Attempt::Acked(ack) => {
                            report.batches_acked += 1;
                            report.events_acked += ack.accepted;
                            report.events_rejected += ack.rejected;
                            break;
                        }
                        Attempt::Retry(message) if attempt < retry.max_attempts.max(1) => {
                            report.failures += 1;
                            tracing::warn!(attempt, %message, "batch delivery failed, retrying");
                            thread::sleep(backoff);
                            backoff = backoff.saturating_mul(2);
                        }
                        Attempt::Retry(message) | Attempt::Fatal(message) => {
                            report.failures += 1;
                            return Err(EmitError::Delivery { report, message });
                        }
                    }
                }
            }
            Ok(report)
        }
    }
}
