//! Report envelope, 17-significant-digit JSON, and CSV emission.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

/// Pretty JSON with every float printed as `{:.16e}`; non-finite floats
/// become `null` upstream in serde_json.
struct Sig17 {
    inner: PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.inner.$name(w)
        })*
    };
}

impl Formatter for Sig17 {
    delegate!(begin_array, end_array, begin_object, end_object, end_array_value, end_object_value);

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17 { inner: PrettyFormatter::with_indent(b"  ") });
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn envelope(config: Value, result: Value) -> Value {
    json!({
        "tool": "hwd",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "result": result,
    })
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Rows of pre-formatted cells under a header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// `key,value` rows for the scalar fields of a flat JSON object.
pub fn scalar_table(result: &Value) -> Option<Table> {
    let obj = result.as_object()?;
    let mut t = Table::new(vec!["quantity", "value"]);
    for (k, v) in obj {
        let cell = match v {
            Value::Number(n) => n.as_f64().map(fmt_f64)?,
            Value::Bool(b) => b.to_string(),
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            _ => return None,
        };
        t.push(vec![k.clone(), cell]);
    }
    Some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json(&json!({"a": 0.1, "b": 1.0, "c": 3, "d": f64::NAN})).unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"b\": 1.0000000000000000e0"));
        assert!(s.contains("\"c\": 3"));
        assert!(s.contains("\"d\": null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new(vec!["label", "value"]);
        t.push(vec!["a, b".into(), fmt_f64(2.0)]);
        t.push(vec!["nan".into(), fmt_f64(f64::NAN)]);
        assert_eq!(t.render(), "label,value\n\"a, b\",2.0000000000000000e0\nnan,\n");
    }
}
