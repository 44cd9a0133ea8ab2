use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use super::{DomainBox, Objective};
use crate::error::{Error, Result};

/// An objective served by a child process over a line protocol.
///
/// Each query writes one line of whitespace-separated coordinates to the
/// child's stdin and reads one line holding a single number from its stdout.
/// A timeout, a closed pipe or an unparsable reply makes `evaluate` return
/// NaN; the failure text is kept in `last_error`.
pub struct ExternalObjective {
    name: String,
    domain: DomainBox,
    timeout: Duration,
    inner: Mutex<Channel>,
}

struct Channel {
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    last_error: Option<String>,
}

impl ExternalObjective {
    pub fn spawn(program: &str, args: &[String], domain: DomainBox, timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Io(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| Error::Io("child stdout unavailable".into()))?;
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalObjective {
            name: program.to_string(),
            domain,
            timeout,
            inner: Mutex::new(Channel {
                child,
                stdin,
                replies: rx,
                last_error: None,
            }),
        })
    }

    pub fn last_error(&self) -> Option<String> {
        self.inner.lock().ok().and_then(|c| c.last_error.clone())
    }

    fn query(&self, ch: &mut Channel, x: &[f64]) -> std::result::Result<f64, String> {
        let stdin = ch.stdin.as_mut().ok_or("stdin closed")?;
        let line = x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ");
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| format!("write failed: {e}"))?;
        let reply = match ch.replies.recv_timeout(self.timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => return Err(format!("no reply within {:?}", self.timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err("child exited".into()),
        };
        reply
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("unparsable reply {reply:?}"))
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let Ok(mut ch) = self.inner.lock() else {
            return f64::NAN;
        };
        match self.query(&mut ch, x) {
            Ok(v) => v,
            Err(e) => {
                ch.last_error = Some(e);
                f64::NAN
            }
        }
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        if let Ok(ch) = self.inner.get_mut() {
            ch.stdin.take();
            let _ = ch.child.kill();
            let _ = ch.child.wait();
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str, timeout_ms: u64) -> ExternalObjective {
        ExternalObjective::spawn(
            "sh",
            &["-c".into(), script.into()],
            DomainBox::cube(2, -1.0, 1.0),
            Duration::from_millis(timeout_ms),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        // replies with the negated sum of the two coordinates
        let f = sh("while read a b; do awk -v a=$a -v b=$b 'BEGIN{print -(a+b)}'; done", 5000);
        assert_eq!(f.evaluate(&[0.25, 0.5]), -0.75);
        assert_eq!(f.evaluate(&[1.0, 1.0]), -2.0);
        assert!(f.last_error().is_none());
    }

    #[test]
    fn failures_become_nan() {
        let bad = sh("while read l; do echo nope; done", 5000);
        assert!(bad.evaluate(&[0.0, 0.0]).is_nan());
        assert!(bad.last_error().unwrap().contains("unparsable"));

        let slow = sh("while read l; do sleep 5; echo 1; done", 50);
        assert!(slow.evaluate(&[0.0, 0.0]).is_nan());

        let dead = sh("exit 0", 2000);
        assert!(dead.evaluate(&[0.0, 0.0]).is_nan());
    }

    #[test]
    fn missing_program() {
        assert!(ExternalObjective::spawn(
            "/nonexistent/objective",
            &[],
            DomainBox::cube(1, 0.0, 1.0),
            Duration::from_secs(1)
        )
        .is_err());
    }
}
