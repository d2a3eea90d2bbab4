//! Adapter for models running in a separate process.
//!
//! Protocol: line-delimited JSON on the child's stdin/stdout. Each request is
//! `{"id": <int>, "features": [60 numbers]}`; each response is
//! `{"id": <int>, "prediction": <number>}`. Requests go out in batches of at
//! most `batch_size`, each terminated by `{"end": true}`, and every request of
//! a batch must be answered within the timeout before the next batch counts.
//! When all batches are answered the adapter closes stdin.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::models::FeatureVector;

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;
pub const MAX_BATCH: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEndpoint {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Per-batch timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

fn default_batch() -> usize {
    MAX_BATCH
}

impl ExternalEndpoint {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            timeout_s: DEFAULT_TIMEOUT_S,
            batch_size: MAX_BATCH,
        }
    }
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    prediction: serde_json::Value,
}

struct ChildGuard(Child);

impl Drop for ChildGuard {
    fn drop(&mut self) {
        if let Ok(None) = self.0.try_wait() {
            let _ = self.0.kill();
        }
        let _ = self.0.wait();
    }
}

/// Runs `inputs` through the external model, returning predictions in input
/// order. Any failure of the process is an error; partial results are never
/// returned.
pub fn external_predict_batch(endpoint: &ExternalEndpoint, inputs: &[FeatureVector]) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let batch = endpoint.batch_size.clamp(1, MAX_BATCH);
    let timeout = Duration::from_secs_f64(endpoint.timeout_s.max(0.001));

    let mut child = Command::new(&endpoint.program)
        .args(&endpoint.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::protocol(None, format!("cannot start `{}`: {e}", endpoint.program)))?;
    let mut stdin = child.stdin.take().expect("stdin piped");
    let stdout = child.stdout.take().expect("stdout piped");
    let mut guard = ChildGuard(child);

    // Requests are pre-rendered so the writer thread owns plain strings.
    let mut payloads: Vec<String> = Vec::with_capacity(inputs.len().div_ceil(batch));
    for (b, chunk) in inputs.chunks(batch).enumerate() {
        let mut text = String::new();
        for (i, f) in chunk.iter().enumerate() {
            let id = (b * batch + i) as u64;
            text.push_str(&json!({ "id": id, "features": f.as_slice() }).to_string());
            text.push('\n');
        }
        text.push_str("{\"end\":true}\n");
        payloads.push(text);
    }
    let (write_tx, write_rx) = mpsc::channel::<std::io::Error>();
    let writer = thread::spawn(move || {
        for p in payloads {
            if let Err(e) = stdin.write_all(p.as_bytes()).and_then(|_| stdin.flush()) {
                let _ = write_tx.send(e);
                return;
            }
        }
        // dropping stdin signals end of input
    });

    let (line_tx, line_rx) = mpsc::channel::<std::io::Result<String>>();
    let reader = thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let stop = line.is_err();
            if line_tx.send(line).is_err() || stop {
                break;
            }
        }
    });

    let mut out: Vec<Option<f64>> = vec![None; inputs.len()];
    let result = (|| {
        for (b, chunk) in inputs.chunks(batch).enumerate() {
            let first = b * batch;
            let deadline = Instant::now() + timeout;
            let mut received = 0;
            while received < chunk.len() {
                let pending = (first..first + chunk.len()).find(|&i| out[i].is_none()).map(|i| i as u64);
                let left = deadline.saturating_duration_since(Instant::now());
                let line = match line_rx.recv_timeout(left) {
                    Ok(Ok(line)) => line,
                    Ok(Err(e)) => return Err(Error::protocol(pending, format!("read failed: {e}"))),
                    Err(mpsc::RecvTimeoutError::Timeout) => {
                        return Err(Error::protocol(
                            pending,
                            format!("timed out after {:.1} s", timeout.as_secs_f64()),
                        ))
                    }
                    Err(mpsc::RecvTimeoutError::Disconnected) => {
                        let why = write_rx
                            .try_recv()
                            .map(|e| format!(" (write failed: {e})"))
                            .unwrap_or_default();
                        return Err(Error::protocol(
                            pending,
                            format!("process closed its output before answering{why}"),
                        ));
                    }
                };
                if line.trim().is_empty() {
                    continue;
                }
                let resp: Response = serde_json::from_str(&line).map_err(|e| {
                    Error::protocol(pending, format!("malformed response `{}`: {e}", line.trim()))
                })?;
                let id = resp.id;
                let idx = usize::try_from(id).ok().filter(|i| (first..first + chunk.len()).contains(i));
                let Some(idx) = idx else {
                    return Err(Error::protocol(Some(id), "response id not in the current batch"));
                };
                if out[idx].is_some() {
                    return Err(Error::protocol(Some(id), "duplicate response"));
                }
                let value = resp
                    .prediction
                    .as_f64()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::protocol(Some(id), format!("non-finite prediction {}", resp.prediction))
                    })?;
                out[idx] = Some(value);
                received += 1;
            }
        }
        Ok(())
    })();

    if result.is_err() {
        let _ = guard.0.kill();
    }
    let _ = writer.join();
    if result.is_ok() {
        // give a well-behaved child a moment to exit on EOF before the guard kills it
        let until = Instant::now() + Duration::from_millis(500);
        while Instant::now() < until {
            if let Ok(Some(_)) = guard.0.try_wait() {
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
    drop(guard);
    let _ = reader.join();
    result?;
    Ok(out.into_iter().map(|v| v.expect("all answered")).collect())
}
