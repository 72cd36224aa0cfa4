//! Typed CSV tables with `# key: value` header lines, and whitespace
//! matrices for plotting.
//!
//! Floats are written in shortest round-trip form, so parsing a written
//! table gives back the same bits. Files are written to a temporary name
//! in the target directory and renamed into place.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Float,
    Int,
    Text,
}

impl ColumnType {
    fn code(&self) -> &'static str {
        match self {
            ColumnType::Float => "f",
            ColumnType::Int => "i",
            ColumnType::Text => "s",
        }
    }

    fn from_code(s: &str) -> Result<ColumnType> {
        match s {
            "f" => Ok(ColumnType::Float),
            "i" => Ok(ColumnType::Int),
            "s" => Ok(ColumnType::Text),
            _ => Err(Error::Config(format!("unknown column type `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
}

impl PartialEq for Value {
    /// Floats compare by bits so that NaN round-trips.
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    pub fn column_type(&self) -> ColumnType {
        match self {
            Value::Float(_) => ColumnType::Float,
            Value::Int(_) => ColumnType::Int,
            Value::Text(_) => ColumnType::Text,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            Value::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn parse(s: &str, t: ColumnType) -> Result<Value> {
        let bad = || Error::Config(format!("cannot parse `{s}` as {t:?}"));
        Ok(match t {
            ColumnType::Float => Value::Float(s.parse().map_err(|_| bad())?),
            ColumnType::Int => Value::Int(s.parse().map_err(|_| bad())?),
            ColumnType::Text => Value::Text(s.to_string()),
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Value {
        Value::Float(x)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Value {
        Value::Int(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Value {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Value {
        Value::Int(x as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Value {
        Value::Text(s)
    }
}

/// Ordered `# key: value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Named, typed columns and their rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, ColumnType)>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[(&str, ColumnType)]) -> Table {
        Table {
            columns: columns.iter().map(|(n, t)| (n.to_string(), *t)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Numeric(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, (name, t)) in row.iter().zip(&self.columns) {
            if v.column_type() != *t {
                return Err(Error::Numeric(format!("column `{name}` expects {t:?}, got {v:?}")));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name)
    }

    /// Values of a numeric column.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    fn types_line(&self) -> String {
        self.columns
            .iter()
            .map(|(_, t)| t.code())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Header lines, a `# types:` line, then the CSV body.
    pub fn to_csv(&self, header: &Header) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &header.entries {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# types: {}\n", self.types_line()));
        out.push_str(&self.body()?);
        Ok(out)
    }

    /// The CSV body alone: column names and rows.
    pub fn body(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(n, _)| n.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<(Header, Table)> {
        let mut header = Header::default();
        let mut types = None;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            let (k, v) = rest
                .split_once(": ")
                .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| Error::Config(format!("malformed header line `{line}`")))?;
            if k == "types" {
                types = Some(
                    v.split(',')
                        .map(ColumnType::from_code)
                        .collect::<Result<Vec<_>>>()?,
                );
            } else {
                header.push(k, v);
            }
        }
        let types = types.ok_or_else(|| Error::Config("missing `# types:` line".into()))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if names.len() != types.len() {
            return Err(Error::Config(format!(
                "{} column names but {} types",
                names.len(),
                types.len()
            )));
        }
        let mut table = Table {
            columns: names.into_iter().zip(types.iter().copied()).collect(),
            rows: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .zip(&types)
                .map(|(s, t)| Value::parse(s, *t))
                .collect::<Result<Vec<_>>>()?;
            table.push(row)?;
        }
        Ok((header, table))
    }

    pub fn write(&self, path: &Path, header: &Header) -> Result<()> {
        write_atomic(path, self.to_csv(header)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<(Header, Table)> {
        Table::parse(&fs::read_to_string(path)?)
    }
}

/// Writes `bytes` to a temporary file beside `path` and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp.{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Whitespace-separated matrix with `#` comment lines, for contour and
/// surface plots.
pub fn write_matrix(path: &Path, comments: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let mut t = Table::new(&[
            ("x", ColumnType::Float),
            ("k", ColumnType::Int),
            ("code", ColumnType::Text),
        ]);
        for (x, k, s) in [
            (0.1, 1, "R^1E^1"),
            (1e-300, -3, "a,b"),
            (f64::NAN, 0, "quote\"d"),
            (-0.0, i64::MAX, ""),
            (f64::INFINITY, 7, "0"),
        ] {
            t.push(vec![x.into(), k.into(), s.into()]).unwrap();
        }
        let mut h = Header::default();
        h.push("seed", "7");
        h.push("note", "a: b");
        let text = t.to_csv(&h).unwrap();
        let (h2, t2) = Table::parse(&text).unwrap();
        assert_eq!(h, h2);
        assert_eq!(t, t2);
    }

    #[test]
    fn push_checks_types() {
        let mut t = Table::new(&[("x", ColumnType::Float)]);
        assert!(t.push(vec![1i64.into()]).is_err());
        assert!(t.push(vec![]).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, b"hello").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"hello");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
