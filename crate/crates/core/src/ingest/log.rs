//! Append-only JSON-lines persistence for accepted tick events.

use crate::telemetry::{SessionLog, TickEvent};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use thiserror::Error;
use tokio::sync::oneshot;

/// Serialises events into newline-terminated canonical JSON lines.
pub fn encode_lines(events: &[TickEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 256);
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}

/// An open append log. Not shareable; wrap it in a [`LogWriter`] for
/// concurrent producers.
#[derive(Debug)]
pub struct AppendLog {
    path: PathBuf,
    file: File,
    records: u64,
    sync: bool,
}

impl AppendLog {
    /// Opens (or creates) the log. A trailing unterminated line left by a
    /// crash is truncated so that new records start on a fresh line.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;

        let mut contents = Vec::new();
        file.read_to_end(&mut contents)?;
        let complete = contents.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < contents.len() {
            tracing::warn!(
                path = %path.display(),
                bytes = contents.len() - complete,
                "truncating partial trailing record"
            );
            file.set_len(complete as u64)?;
        }
        file.seek(SeekFrom::End(0))?;
        let records = contents[..complete]
            .split(|&b| b == b'\n')
            .filter(|l| !l.iter().all(u8::is_ascii_whitespace))
            .count() as u64;

        Ok(AppendLog { path, file, records, sync: false })
    }

    /// Also `fsync` after every append, not just flush to the OS.
    pub fn with_sync(mut self, sync: bool) -> Self {
        self.sync = sync;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of records in the file, including those present at open.
    pub fn records(&self) -> u64 {
        self.records
    }

    /// Writes pre-encoded lines as a single contiguous write.
    pub fn append_encoded(&mut self, lines: &str, count: usize) -> io::Result<usize> {
        debug_assert!(lines.is_empty() || lines.ends_with('\n'));
        self.file.write_all(lines.as_bytes())?;
        self.file.flush()?;
        if self.sync {
            self.file.sync_data()?;
        }
        self.records += count as u64;
        Ok(count)
    }

    pub fn append(&mut self, events: &[TickEvent]) -> io::Result<usize> {
        self.append_encoded(&encode_lines(events), events.len())
    }
}

struct WriteJob {
    lines: String,
    count: usize,
    reply: oneshot::Sender<io::Result<usize>>,
}

/// Single-writer queue in front of an [`AppendLog`].
///
/// Producers hand over fully encoded batches; one dedicated thread writes
/// them in arrival order, so lines from different batches never interleave.
#[derive(Clone)]
pub struct LogWriter {
    tx: mpsc::Sender<WriteJob>,
}

impl LogWriter {
    pub fn spawn(mut log: AppendLog) -> Self {
        let (tx, rx) = mpsc::channel::<WriteJob>();
        thread::Builder::new()
            .name("append-log".into())
            .spawn(move || {
                for job in rx {
                    let result = log.append_encoded(&job.lines, job.count);
                    if let Err(e) = &result {
                        tracing::error!(path = %log.path().display(), error = %e, "append failed");
                    }
                    let _ = job.reply.send(result);
                }
            })
            .expect("spawn append-log thread");
        LogWriter { tx }
    }

    /// Appends and resolves once the lines have been flushed.
    pub async fn append(&self, events: &[TickEvent]) -> io::Result<usize> {
        let (reply, done) = oneshot::channel();
        let job = WriteJob { lines: encode_lines(events), count: events.len(), reply };
        self.tx
            .send(job)
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "append-log writer stopped"))?;
        done.await
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "append-log writer stopped"))?
    }

    pub fn append_blocking(&self, events: &[TickEvent]) -> io::Result<usize> {
        let (reply, done) = oneshot::channel();
        let job = WriteJob { lines: encode_lines(events), count: events.len(), reply };
        self.tx
            .send(job)
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "append-log writer stopped"))?;
        done.blocking_recv()
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "append-log writer stopped"))?
    }
}

#[derive(Debug, Error)]
pub enum ReadLogError {
    #[error("cannot read log: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    CorruptLine { line: usize, reason: String },
}

/// Result of reading a log back.
#[derive(Debug, Default)]
pub struct LogReadout {
    pub log: SessionLog,
    /// Unterminated, unparseable trailing lines that were dropped.
    pub dropped_partial: usize,
}

/// Reads every record of an append log.
///
/// An unterminated final line is kept if it decodes to a valid event and
/// otherwise dropped and counted. Corruption anywhere else is an error.
pub fn read_log(path: impl AsRef<Path>) -> Result<LogReadout, ReadLogError> {
    let mut reader = BufReader::with_capacity(1 << 20, File::open(path)?);
    let mut out = LogReadout::default();
    let mut buf = Vec::with_capacity(512);
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let terminated = buf.last() == Some(&b'\n');
        let body = buf.trim_ascii();
        if body.is_empty() {
            continue;
        }
        let parsed = serde_json::from_slice::<TickEvent>(body)
            .map_err(|e| e.to_string())
            .and_then(|e| e.validated().map_err(|e| e.to_string()));
        match parsed {
            Ok(event) => out.log.events.push(event),
            Err(_) if !terminated => {
                tracing::warn!(line = line_no, "dropping partial trailing record");
                out.dropped_partial += 1;
            }
            Err(reason) => return Err(ReadLogError::CorruptLine { line: line_no, reason }),
        }
    }
    Ok(out)
}
