//! Number formatting shared by the CSV and JSON writers. Every float is
//! printed with 17 significant digits, so reports round-trip exactly and
//! identical runs produce identical bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON with fixed-precision floats.
struct FixedFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for FixedFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = FixedFormatter {
        pretty: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// `# key = value` lines for every leaf of a JSON object, dotted paths for
/// nested fields.
pub fn header_lines<T: Serialize>(value: &T) -> Vec<String> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<String>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, child, out);
                }
            }
            serde_json::Value::Array(items) if items.iter().all(|x| x.is_number()) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|x| fmt_f64(x.as_f64().unwrap_or(f64::NAN)))
                    .collect();
                out.push(format!("# {prefix} = {}", joined.join(",")));
            }
            serde_json::Value::Number(n) if n.is_f64() => {
                out.push(format!("# {prefix} = {}", fmt_f64(n.as_f64().unwrap())));
            }
            serde_json::Value::String(s) => out.push(format!("# {prefix} = {s}")),
            other => out.push(format!("# {prefix} = {other}")),
        }
    }
    let mut out = Vec::new();
    walk(
        "",
        &serde_json::to_value(value).expect("header serializes"),
        &mut out,
    );
    out
}

pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|&x| fmt_f64(x))
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Option<f64>,
            c: f64,
            n: u32,
        }
        let text = to_json(&S {
            a: 0.1,
            b: None,
            c: f64::NAN,
            n: 3,
        });
        assert!(text.contains("\"a\": 1.0000000000000001e-1"));
        assert!(text.contains("\"b\": null"));
        assert!(text.contains("\"c\": null"));
        assert!(text.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn header_flattens_nested_fields() {
        let v = serde_json::json!({"grid": {"n": 4, "vmax": 2.5}, "name": "x", "list": [1.0, 2.0]});
        let lines = header_lines(&v);
        assert!(lines.contains(&"# grid.n = 4".to_string()));
        assert!(lines.contains(&"# grid.vmax = 2.5000000000000000e0".to_string()));
        assert!(lines.contains(&"# name = x".to_string()));
        assert!(lines
            .iter()
            .any(|l| l.starts_with("# list = 1.0000000000000000e0,")));
    }
}
