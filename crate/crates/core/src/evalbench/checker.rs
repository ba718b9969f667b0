// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::EvalError;

/// External functional check, e.g. a simulator run against a testbench.
///
/// `{design}` and `{testbench}` in any argument are replaced by file paths.
/// Exit status 0 means pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckerConfig {
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub reason: Option<String>,
}

impl CheckerConfig {
    /// Writes `design` to a temporary file and runs the command on it.
    /// Spawn failures are errors; a timeout counts as a failed check.
    pub fn run(&self, design: &str, testbench: &Path) -> Result<CheckOutcome, EvalError> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| EvalError::Checker("empty checker command".into()))?;
        let mut file = tempfile::Builder::new().suffix(".v").tempfile()?;
        file.write_all(design.as_bytes())?;
        file.flush()?;
        let subst = |s: &str| {
            s.replace("{design}", &file.path().to_string_lossy())
                .replace("{testbench}", &testbench.to_string_lossy())
        };
        let mut child = Command::new(subst(program))
            .args(args.iter().map(|a| subst(a)))
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EvalError::Checker(format!("cannot run `{program}`: {e}")))?;

        let deadline = Instant::now() + Duration::from_secs_f64(self.timeout_s.max(0.0));
        loop {
            if let Some(status) = child.try_wait()? {
                return Ok(CheckOutcome {
                    passed: status.success(),
                    reason: (!status.success()).then(|| format!("checker exited with {status}")),
                });
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(CheckOutcome {
                    passed: false,
                    reason: Some(format!("timed out after {}s", self.timeout_s)),
                });
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
}
