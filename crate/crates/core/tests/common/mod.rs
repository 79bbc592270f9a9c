#![allow(dead_code)]

use proxemics::ingest::{serve, IngestConfig};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use tokio::runtime::Runtime;
use tokio::sync::oneshot;

/// A real ingest server on an ephemeral port, stopped on drop.
pub struct TestServer {
    pub addr: SocketAddr,
    pub log_path: PathBuf,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
    rt: Runtime,
}

impl TestServer {
    pub fn start(dir: &Path, max_batch: usize) -> Self {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap();
        let log_path = dir.join("ticks.jsonl");
        let mut config = IngestConfig::new(addr, &log_path);
        config.max_batch = max_batch;
        config.max_body_bytes = 8 << 20;
        let (stop, stopped) = oneshot::channel::<()>();
        let task = rt.spawn(async move {
            serve(listener, &config, async {
                let _ = stopped.await;
            })
            .await
        });
        TestServer { addr, log_path, stop: Some(stop), task: Some(task), rt }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn stop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(task) = self.task.take() {
            self.rt.block_on(task).unwrap().unwrap();
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn log_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).map(|t| t.lines().count()).unwrap_or(0)
}
