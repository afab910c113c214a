//! Adapter for an out-of-process evaluator speaking line-delimited JSON.
//!
//! For each replicate a fresh child is spawned, sent exactly one request
//! line `{"genome":[...],"seed":N}` on stdin, and expected to answer with
//! exactly one line `{"fitness":X}` on stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::EvaluatorError;

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEvaluatorConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

impl ExternalEvaluatorConfig {
    pub fn new(command: Vec<String>) -> Self {
        ExternalEvaluatorConfig { command, timeout_secs: default_timeout() }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.0))
    }
}

#[derive(Serialize)]
struct Request<'a> {
    genome: &'a [f64],
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    fitness: f64,
}

/// The exact request line (without the trailing newline).
pub fn request_line(genome: &[f64], seed: u64) -> String {
    serde_json::to_string(&Request { genome, seed }).expect("finite genome serializes")
}

pub fn parse_response(line: &str) -> Result<f64, EvaluatorError> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    serde_json::from_str::<Response>(trimmed)
        .map(|r| r.fitness)
        .map_err(|e| EvaluatorError::Protocol { line: trimmed.to_string(), reason: e.to_string() })
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

pub fn external_evaluate(cfg: &ExternalEvaluatorConfig, genome: &[f64], seed: u64) -> Result<f64, EvaluatorError> {
    let (program, args) = cfg
        .command
        .split_first()
        .ok_or_else(|| EvaluatorError::Protocol { line: String::new(), reason: "empty evaluator command".into() })?;
    let deadline = Instant::now() + cfg.timeout();
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|source| EvaluatorError::Spawn { command: cfg.command.join(" "), source })?;

    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let line = request_line(genome, seed);
        // A child that exits without reading closes the pipe; its exit
        // status is the better diagnostic, so a write error is not fatal.
        let _ = writeln!(stdin, "{line}").and_then(|_| stdin.flush());
    }

    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut line = String::new();
        let res = BufReader::new(stdout).read_line(&mut line).map(|_| line);
        let _ = tx.send(res);
    });

    let line = match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
        Ok(Ok(line)) => line,
        Ok(Err(e)) => {
            kill(&mut child);
            return Err(EvaluatorError::Io(e));
        }
        Err(_) => {
            kill(&mut child);
            return Err(EvaluatorError::Timeout(cfg.timeout()));
        }
    };

    // Reap the child, bounded by the same deadline.
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                kill(&mut child);
                return Err(EvaluatorError::Timeout(cfg.timeout()));
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    };
    if !status.success() {
        return Err(EvaluatorError::NonZeroExit(status.to_string()));
    }
    if line.is_empty() {
        return Err(EvaluatorError::Protocol { line, reason: "no response line".into() });
    }
    parse_response(&line)
}
