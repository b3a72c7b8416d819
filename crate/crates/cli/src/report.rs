use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Value};
use sevq_core::Error;

/// A failed command: what went wrong and which exit code reports it.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
            code: 2,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }

    pub fn emit(&self) {
        let body = json!({
            "error": {
                "kind": self.kind,
                "message": self.message.trim_end(),
                "exit_code": self.code,
            }
        });
        eprintln!("{body}");
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Io { .. } => ("io", 2),
            Error::InvalidArgument(_) => ("config", 2),
            Error::Invariant(_) => ("internal", 4),
            _ => ("data", 3),
        };
        Self {
            kind,
            message: e.to_string(),
            code,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Writes `text` to `path`, or to standard output without a path.
pub fn emit(text: &str, path: Option<&Path>) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => println!("{text}"),
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// CSV with a header row; `None` cells are left empty.
pub fn csv_table(header: &[&str], rows: &[Vec<Value>]) -> String {
    let mut out = header.join(",");
    for row in rows {
        out.push('\n');
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
    }
    out
}
