//! Command reports and their JSON rendering.
//!
//! Floats are written as `{:.16e}`, 17 significant digits, so every binary64
//! value survives a serialize/parse round trip.

use std::collections::BTreeMap;
use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::linalg::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub verdicts: Value,
    /// Wall-clock milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub tolerances_used: Tolerances,
}

impl Report {
    pub fn new(command: impl Into<String>, tol: Tolerances) -> Self {
        Self {
            command: command.into(),
            inputs: BTreeMap::new(),
            verdicts: Value::Object(Default::default()),
            timings: BTreeMap::new(),
            tolerances_used: tol,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(key.to_string(), to_value(value));
        self
    }

    /// Sets `verdicts[key]`.
    pub fn verdict(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        if let Value::Object(map) = &mut self.verdicts {
            map.insert(key.to_string(), to_value(value));
        }
        self
    }

    /// Runs `f` and records its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn without_timings(&self) -> Self {
        Self {
            timings: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Serializes to a `Value`; non-finite floats become `null`.
pub fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// Pretty-printed JSON with floats at 17 significant digits.
pub fn to_json_string(value: &impl Serialize) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter::default());
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Default)]
struct RoundTripFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Plain-text rendering: one `path = value` line per scalar leaf, matrices
/// printed row by row.
pub fn to_text(report: &Report) -> String {
    let mut out = format!("command = {}\n", report.command);
    for (k, v) in &report.inputs {
        render_text(&mut out, &format!("inputs.{k}"), v);
    }
    render_text(&mut out, "", &report.verdicts);
    out
}

fn render_text(out: &mut String, path: &str, value: &Value) {
    let join = |k: &str| {
        if path.is_empty() {
            k.to_string()
        } else {
            format!("{path}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            if let Some(rows) = matrix_rows(value) {
                out.push_str(&format!("{path} =\n"));
                for row in rows {
                    out.push_str(&format!("  [{row}]\n"));
                }
                return;
            }
            for (k, v) in map {
                render_text(out, &join(k), v);
            }
        }
        Value::Array(items) if items.iter().any(|v| v.is_object()) => {
            for (i, v) in items.iter().enumerate() {
                render_text(out, &format!("{path}[{i}]"), v);
            }
        }
        Value::String(s) => out.push_str(&format!("{path} = {s}\n")),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => out.push_str(&format!("{path} = {x:e}\n")),
            _ => out.push_str(&format!("{path} = {n}\n")),
        },
        other => out.push_str(&format!("{path} = {other}\n")),
    }
}

/// Recognizes a serialized `Matrix` and formats its rows.
fn matrix_rows(value: &Value) -> Option<Vec<String>> {
    let rows = value.get("rows")?.as_u64()? as usize;
    let cols = value.get("cols")?.as_u64()? as usize;
    let data = value.get("data")?.as_array()?;
    if data.len() != rows * cols {
        return None;
    }
    let entry = |v: &Value| -> Option<String> {
        let pair = v.as_array()?;
        let (re, im) = (pair.first()?.as_f64()?, pair.get(1)?.as_f64()?);
        Some(if im == 0.0 {
            format!("{re:>12.6e}")
        } else {
            format!("{re:.6e}{im:+.6e}i")
        })
    };
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| entry(&data[i * cols + j]))
                .collect::<Option<Vec<_>>>()
                .map(|r| r.join(", "))
        })
        .collect()
}
