//! Subprocess driver for external syntax and model checking tools.
//!
//! Tool command lines come from a TOML file named by the
//! `TLABENCH_TOOLS` environment variable, e.g.
//!
//! ```toml
//! sany = "java -cp tla2tools.jar tla2sany.SANY {spec}"
//! tlc = "java -cp tla2tools.jar tlc2.TLC -config {config} -workers {workers} {spec}"
//! tlc_simulate = "java -cp tla2tools.jar tlc2.TLC -config {config} -simulate num={runs} -depth {depth} -seed {seed} {spec}"
//! ```
//!
//! Placeholders: `{spec}` `{config}` `{workers}` `{depth}` `{seed}`
//! `{runs}`. Missing `tlc_simulate` falls back to `tlc`.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::CheckerError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolCommands {
    pub sany: String,
    pub tlc: String,
    pub tlc_simulate: Option<String>,
}

impl ToolCommands {
    pub fn from_toml(text: &str) -> Result<Self, CheckerError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CheckerError::ToolUnavailable(format!("bad tools file: {e}")))?;
        let get = |key: &str| -> Option<String> {
            table.get(key).and_then(|v| v.as_str()).map(String::from)
        };
        let sany = get("sany")
            .ok_or_else(|| CheckerError::ToolUnavailable("tools file lacks `sany`".into()))?;
        let tlc = get("tlc")
            .ok_or_else(|| CheckerError::ToolUnavailable("tools file lacks `tlc`".into()))?;
        Ok(ToolCommands {
            sany,
            tlc,
            tlc_simulate: get("tlc_simulate"),
        })
    }
}

/// Loads tool commands from `TLABENCH_TOOLS` if it is set.
pub fn tools_from_env() -> Result<Option<ToolCommands>, CheckerError> {
    let Ok(path) = std::env::var("TLABENCH_TOOLS") else {
        return Ok(None);
    };
    if path.trim().is_empty() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CheckerError::ToolUnavailable(format!("cannot read tools file {path}: {e}"))
    })?;
    ToolCommands::from_toml(&text).map(Some)
}

#[derive(Debug, Clone)]
pub struct ExternalOutput {
    pub stdout: String,
    pub stderr: String,
    pub status: Option<i32>,
    pub timed_out: bool,
    pub duration: Duration,
}

pub fn substitute(template: &str, subs: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (key, value) in subs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

const KILL_GRACE: Duration = Duration::from_secs(10);

/// Runs a shell command with a wall-clock budget. The process gets the
/// budget plus a short grace period, then is killed. Output streams are
/// drained on reader threads so a chatty tool cannot deadlock on a full
/// pipe.
pub fn run_command(command: &str, budget: Duration) -> Result<ExternalOutput, CheckerError> {
    let start = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| CheckerError::ToolUnavailable(format!("cannot spawn `{command}`: {e}")))?;

    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let out_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let err_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = start + budget + KILL_GRACE;
    let mut timed_out = false;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {
                if Instant::now() >= deadline {
                    timed_out = true;
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                std::thread::sleep(Duration::from_millis(25));
            }
            Err(e) => return Err(CheckerError::ToolCrash(format!("wait failed: {e}"))),
        }
    };

    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    let code = status.and_then(|s| s.code());
    if timed_out {
        return Ok(ExternalOutput {
            stdout,
            stderr,
            status: None,
            timed_out: true,
            duration: start.elapsed(),
        });
    }
    if code == Some(127) {
        return Err(CheckerError::ToolUnavailable(format!(
            "command not found: `{command}`"
        )));
    }
    Ok(ExternalOutput {
        stdout,
        stderr,
        status: code,
        timed_out: false,
        duration: start.elapsed(),
    })
}

/// Writes stdout/stderr captures next to each other under `dir`,
/// named by `label`. Best effort: archiving failures are not fatal.
pub fn archive(dir: &Path, label: &str, output: &ExternalOutput) {
    let _ = std::fs::create_dir_all(dir);
    let _ = std::fs::write(dir.join(format!("{label}.stdout.txt")), &output.stdout);
    let _ = std::fs::write(dir.join(format!("{label}.stderr.txt")), &output.stderr);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_placeholders() {
        let cmd = substitute(
            "tlc -config {config} -workers {workers} {spec}",
            &[
                ("config", "m.cfg".into()),
                ("workers", "4".into()),
                ("spec", "m.tla".into()),
            ],
        );
        assert_eq!(cmd, "tlc -config m.cfg -workers 4 m.tla");
    }

    #[test]
    fn captures_output_and_status() {
        let out = run_command("echo hi; echo oops >&2; exit 3", Duration::from_secs(5)).unwrap();
        assert_eq!(out.stdout.trim(), "hi");
        assert_eq!(out.stderr.trim(), "oops");
        assert_eq!(out.status, Some(3));
        assert!(!out.timed_out);
    }

    #[test]
    fn missing_tool_is_reported_as_unavailable() {
        let err = run_command("definitely_not_a_real_tool_9x", Duration::from_secs(5));
        assert!(matches!(err, Err(CheckerError::ToolUnavailable(_))));
    }

    #[test]
    fn tools_file_requires_both_entries() {
        let t = ToolCommands::from_toml("sany = \"sany {spec}\"\ntlc = \"tlc {spec}\"\n").unwrap();
        assert_eq!(t.sany, "sany {spec}");
        assert!(t.tlc_simulate.is_none());
        assert!(ToolCommands::from_toml("sany = \"x\"").is_err());
    }
}
