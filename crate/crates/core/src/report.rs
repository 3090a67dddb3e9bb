//! Verification reports, deterministic JSON output and Matrix Market export.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub check: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub dims: BTreeMap<String, usize>,
    pub ranks: BTreeMap<String, usize>,
    pub residuals: BTreeMap<String, f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(check: &str) -> Self {
        Self { check: check.to_string(), pass: true, ..Default::default() }
    }

    pub fn param<V: Serialize>(&mut self, key: &str, value: V) -> &mut Self {
        let v = serde_json::to_value(value).expect("parameters serialize");
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn dim(&mut self, key: &str, value: usize) -> &mut Self {
        self.dims.insert(key.to_string(), value);
        self
    }

    pub fn rank(&mut self, key: &str, value: usize) -> &mut Self {
        self.ranks.insert(key.to_string(), value);
        self
    }

    /// Records `value` under `key`, keeping the largest value seen.
    pub fn residual(&mut self, key: &str, value: f64) -> &mut Self {
        let slot = self.residuals.entry(key.to_string()).or_insert(0.0);
        if value > *slot || value.is_nan() {
            *slot = value;
        }
        self
    }

    pub fn note(&mut self, msg: impl Into<String>) -> &mut Self {
        self.notes.push(msg.into());
        self
    }

    pub fn fail(&mut self, msg: impl Into<String>) -> &mut Self {
        self.pass = false;
        self.notes.push(msg.into());
        self
    }

    /// Fails with `msg` unless `ok`.
    pub fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) -> &mut Self {
        if !ok {
            self.fail(msg());
        }
        self
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serialization into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Writes the nonzero entries of `m` in Matrix Market coordinate format.
pub fn write_matrix_market<W: Write>(writer: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 {
                entries.push((i, j, m[(i, j)]));
            }
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    writeln!(writer, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(writer, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(writer, "{} {} {v:.16e}", i + 1, j + 1)?;
    }
    Ok(())
}

/// Parses a Matrix Market coordinate file back into a dense matrix.
pub fn read_matrix_market(text: &str) -> Result<DMatrix<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let header = lines.next().ok_or("missing size line")?;
    let sizes: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad size line {header:?}")))
        .collect::<Result<_, _>>()?;
    if sizes.len() != 3 {
        return Err(format!("bad size line {header:?}"));
    }
    let mut m = DMatrix::zeros(sizes[0], sizes[1]);
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(format!("bad entry {line:?}"));
        }
        let i: usize = t[0].parse().map_err(|_| format!("bad row in {line:?}"))?;
        let j: usize = t[1].parse().map_err(|_| format!("bad column in {line:?}"))?;
        let v: f64 = t[2].parse().map_err(|_| format!("bad value in {line:?}"))?;
        m[(i - 1, j - 1)] = v;
    }
    Ok(m)
}
