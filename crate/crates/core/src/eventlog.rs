//! Plain-text event logs.
//!
//! One event per line, LF-terminated (including the last line):
//!
//! ```text
//! 0.4711 1 E
//! 0.9 2 A
//! P 3
//! ```
//!
//! `<time> <bath> <E|A>` is an emission or absorption in bath 1 or 2 and
//! `P <index>` marks a gate pulse. Jump times strictly increase. Pulse lines
//! are optional, so a log of bath quanta alone is a valid input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::thermo::Bath;
use crate::trajectory::{EventKind, TrajectoryEvent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogEntry {
    Jump { time: f64, bath: Bath, emission: bool },
    Pulse(usize),
}

impl LogEntry {
    pub fn is_pulse(&self) -> bool {
        matches!(self, LogEntry::Pulse(_))
    }
}

impl From<&TrajectoryEvent> for LogEntry {
    fn from(e: &TrajectoryEvent) -> Self {
        match e.kind {
            EventKind::Emission(bath) => LogEntry::Jump {
                time: e.time,
                bath,
                emission: true,
            },
            EventKind::Absorption(bath) => LogEntry::Jump {
                time: e.time,
                bath,
                emission: false,
            },
            EventKind::Pulse(k) => LogEntry::Pulse(k),
        }
    }
}

/// Renders events in log format. Times use the shortest representation that
/// parses back to the same `f64`.
pub fn format_log<'a>(entries: impl IntoIterator<Item = &'a LogEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        match *e {
            LogEntry::Jump { time, bath, emission } => {
                writeln!(out, "{time} {} {}", bath.label(), if emission { 'E' } else { 'A' }).unwrap();
            }
            LogEntry::Pulse(k) => writeln!(out, "P {k}").unwrap(),
        }
    }
    out
}

pub fn format_events(events: &[TrajectoryEvent]) -> String {
    let entries: Vec<LogEntry> = events.iter().map(LogEntry::from).collect();
    format_log(&entries)
}

/// Drops pulse markers, leaving only what a bath calorimeter would see.
pub fn strip_pulses(entries: &[LogEntry]) -> Vec<LogEntry> {
    entries.iter().filter(|e| !e.is_pulse()).copied().collect()
}

/// Parses a log; `file` is used only for error messages.
pub fn parse_log(text: &str, file: &Path) -> Result<Vec<LogEntry>> {
    let err = |line: usize, message: String| Error::Parse {
        file: file.to_path_buf(),
        line,
        message,
    };
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let n_lines = text.split_inclusive('\n').count();
    if !text.ends_with('\n') {
        return Err(err(n_lines, "missing trailing newline".into()));
    }
    let mut entries = Vec::new();
    let mut last_time: Option<f64> = None;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let lineno = i + 1;
        let line = &line[..line.len() - 1];
        let fields: Vec<&str> = line.split(' ').collect();
        match fields.as_slice() {
            ["P", idx] => {
                let k = idx
                    .parse::<usize>()
                    .map_err(|_| err(lineno, format!("invalid pulse index {idx:?}")))?;
                entries.push(LogEntry::Pulse(k));
            }
            [t, b, d] => {
                let time = t
                    .parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| err(lineno, format!("invalid time {t:?}")))?;
                let bath = b
                    .parse::<u8>()
                    .ok()
                    .and_then(Bath::from_label)
                    .ok_or_else(|| err(lineno, format!("unknown bath label {b:?}")))?;
                let emission = match *d {
                    "E" => true,
                    "A" => false,
                    _ => return Err(err(lineno, format!("direction must be E or A, got {d:?}"))),
                };
                if let Some(prev) = last_time {
                    if time <= prev {
                        return Err(err(lineno, format!("time {time} does not exceed previous {prev}")));
                    }
                }
                last_time = Some(time);
                entries.push(LogEntry::Jump { time, bath, emission });
            }
            _ => return Err(err(lineno, format!("unrecognized line {line:?}"))),
        }
    }
    Ok(entries)
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, path)
}

pub fn write_log(path: &Path, entries: &[LogEntry]) -> Result<()> {
    std::fs::write(path, format_log(entries)).map_err(|e| Error::io(PathBuf::from(path), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.log")
    }

    #[test]
    fn round_trip_is_exact() {
        let entries = vec![
            LogEntry::Pulse(0),
            LogEntry::Jump { time: 0.1 + 0.2, bath: Bath::One, emission: true },
            LogEntry::Jump { time: 1e-9 + 0.5, bath: Bath::Two, emission: false },
            LogEntry::Pulse(1),
            LogEntry::Jump { time: 123.456789012345678, bath: Bath::Two, emission: true },
        ];
        let text = format_log(&entries);
        assert!(text.ends_with("2 E\n"));
        assert!(text.starts_with("P 0\n0.30000000000000004 1 E\n"));
        assert_eq!(parse_log(&text, p()).unwrap(), entries);
        assert_eq!(strip_pulses(&entries).len(), 3);
    }

    #[test]
    fn empty_log_is_valid() {
        assert!(parse_log("", p()).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("0.1 1 E\n0.2 3 A\n", 2),
            ("0.1 1 E\n0.1 2 A\n", 2),
            ("0.1 1 E\n0.2 1 X\n", 2),
            ("0.1 1 E\nP x\n", 2),
            ("0.1 1 E\n\n", 2),
            ("0.1 1 E\n0.2 2 A", 2),
            ("abc 1 E\n", 1),
            ("0.1  1 E\n", 1),
        ];
        for (text, line) in cases {
            match parse_log(text, p()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
