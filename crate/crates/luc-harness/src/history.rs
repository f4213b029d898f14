//! Concurrent history events and their line-oriented text format.
//!
//! A history is a sequence of invocation and response events in global
//! order, one event per line:
//!
//! ```text
//! INV <pid> <opcode> [<arg> ...]
//! RES <pid> <value>
//! ```
//!
//! Line order *is* the global order: an operation A precedes B in real time
//! exactly when A's `RES` line appears before B's `INV` line.

use luc::{ProcId, Value};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HistoryEvent {
    Inv {
        pid: ProcId,
        opcode: String,
        args: Vec<Value>,
    },
    Res {
        pid: ProcId,
        value: Value,
    },
}

impl HistoryEvent {
    pub fn pid(&self) -> ProcId {
        match self {
            HistoryEvent::Inv { pid, .. } | HistoryEvent::Res { pid, .. } => *pid,
        }
    }
}

impl fmt::Display for HistoryEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryEvent::Inv { pid, opcode, args } => {
                write!(f, "INV {pid} {opcode}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            HistoryEvent::Res { pid, value } => write!(f, "RES {pid} {value}"),
        }
    }
}

/// Serialize a history, one event per line, trailing newline included.
pub fn write_history(events: &[HistoryEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&ev.to_string());
        out.push('\n');
    }
    out
}

/// Parse the text format produced by [`write_history`]. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_history(text: &str) -> Result<Vec<HistoryEvent>, String> {
    let mut events = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap();
        let err = |msg: &str| format!("line {}: {msg}: {line}", lineno + 1);
        let pid: ProcId = fields
            .next()
            .ok_or_else(|| err("missing pid"))?
            .parse()
            .map_err(|_| err("bad pid"))?;
        match tag {
            "INV" => {
                let opcode = fields.next().ok_or_else(|| err("missing opcode"))?.to_string();
                let args = fields
                    .map(|a| a.parse::<Value>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| err(&e))?;
                events.push(HistoryEvent::Inv { pid, opcode, args });
            }
            "RES" => {
                let value: Value = fields
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|e: String| err(&e))?;
                if fields.next().is_some() {
                    return Err(err("trailing fields after value"));
                }
                events.push(HistoryEvent::Res { pid, value });
            }
            _ => return Err(err("unknown event tag")),
        }
    }
    Ok(events)
}

/// Check per-process shape: events of each pid strictly alternate
/// INV, RES, INV, RES, ... starting with INV, and every INV has a matching
/// RES (the history is complete).
pub fn well_formed(events: &[HistoryEvent]) -> Result<(), String> {
    use std::collections::HashMap;
    let mut open: HashMap<ProcId, bool> = HashMap::new();
    for (i, ev) in events.iter().enumerate() {
        let slot = open.entry(ev.pid()).or_insert(false);
        match ev {
            HistoryEvent::Inv { pid, .. } => {
                if *slot {
                    return Err(format!("event {i}: pid {pid} invoked while an operation is open"));
                }
                *slot = true;
            }
            HistoryEvent::Res { pid, .. } => {
                if !*slot {
                    return Err(format!("event {i}: pid {pid} responded with no open operation"));
                }
                *slot = false;
            }
        }
    }
    for (pid, is_open) in open {
        if is_open {
            return Err(format!("pid {pid} has an operation with no response"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<HistoryEvent> {
        vec![
            HistoryEvent::Inv { pid: 0, opcode: "enqueue".into(), args: vec![Value::Int(1)] },
            HistoryEvent::Inv { pid: 1, opcode: "enqueue".into(), args: vec![Value::Int(2)] },
            HistoryEvent::Res { pid: 1, value: Value::Nil },
            HistoryEvent::Res { pid: 0, value: Value::Nil },
            HistoryEvent::Inv { pid: 0, opcode: "dequeue".into(), args: vec![] },
            HistoryEvent::Res { pid: 0, value: Value::Int(2) },
        ]
    }

    #[test]
    fn text_roundtrip() {
        let h = sample();
        let text = write_history(&h);
        assert_eq!(
            text,
            "INV 0 enqueue 1\nINV 1 enqueue 2\nRES 1 nil\nRES 0 nil\nINV 0 dequeue\nRES 0 2\n"
        );
        assert_eq!(parse_history(&text).unwrap(), h);
    }

    #[test]
    fn parser_skips_comments_and_rejects_garbage() {
        let h = parse_history("# header\n\nINV 3 read\nRES 3 17\n").unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h[1], HistoryEvent::Res { pid: 3, value: Value::Int(17) });
        assert!(parse_history("FOO 1 x\n").is_err());
        assert!(parse_history("INV x read\n").is_err());
        assert!(parse_history("RES 0\n").is_err());
        assert!(parse_history("RES 0 1 2\n").is_err());
    }

    #[test]
    fn well_formedness() {
        assert!(well_formed(&sample()).is_ok());
        let mut dangling = sample();
        dangling.pop();
        assert!(well_formed(&dangling).is_err());
        let double_inv = vec![
            HistoryEvent::Inv { pid: 0, opcode: "read".into(), args: vec![] },
            HistoryEvent::Inv { pid: 0, opcode: "read".into(), args: vec![] },
        ];
        assert!(well_formed(&double_inv).is_err());
        let stray_res = vec![HistoryEvent::Res { pid: 0, value: Value::Nil }];
        assert!(well_formed(&stray_res).is_err());
    }
}
