//! Report model shared by all commands, with JSON and CSV writers.
//!
//! Floating-point values are printed with 17 significant digits so that a
//! report can be read back without loss.

use std::io::{self, Write};

use fanning::Mat;
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};
use serde_json::ser::Formatter;

#[derive(Debug, Clone)]
pub enum Field {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    Matrix(Mat),
    Null,
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Number(x)
    }
}

impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Integer(x as i64)
    }
}

impl From<bool> for Field {
    fn from(x: bool) -> Self {
        Field::Bool(x)
    }
}

impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}

impl From<Mat> for Field {
    fn from(m: Mat) -> Self {
        Field::Matrix(m)
    }
}

impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(x: Option<T>) -> Self {
        x.map_or(Field::Null, Into::into)
    }
}

/// Ordered named fields.
#[derive(Debug, Clone, Default)]
pub struct Fields(pub Vec<(String, Field)>);

impl Fields {
    pub fn push(&mut self, name: impl Into<String>, value: impl Into<Field>) {
        self.0.push((name.into(), value.into()));
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub fields: Fields,
}

/// Command output: top-level fields followed by per-time samples.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub meta: Fields,
    pub samples: Vec<Sample>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            meta: Fields::default(),
            samples: Vec::new(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        write_json(out, self)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "name", "i", "j", "value"])?;
        for (name, field) in &self.meta.0 {
            write_field(&mut writer, "", name, field)?;
        }
        for sample in &self.samples {
            let t = format_f64(sample.t);
            for (name, field) in &sample.fields.0 {
                write_field(&mut writer, &t, name, field)?;
            }
        }
        writer.flush()
    }
}

fn write_field<W: Write>(writer: &mut csv::Writer<W>, t: &str, name: &str, field: &Field) -> io::Result<()> {
    let mut row = |i: usize, j: usize, value: String| writer.write_record([t, name, &i.to_string(), &j.to_string(), &value]);
    match field {
        Field::Number(x) => row(0, 0, format_f64(*x))?,
        Field::Integer(x) => row(0, 0, x.to_string())?,
        Field::Bool(x) => row(0, 0, x.to_string())?,
        Field::Text(s) => row(0, 0, s.clone())?,
        Field::Null => row(0, 0, String::new())?,
        Field::Matrix(m) => {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    row(i, j, format_f64(m[(i, j)]))?;
                }
            }
        }
    }
    Ok(())
}

/// Pretty-printed JSON with every float at 17 significant digits.
pub fn write_json<W: Write, T: Serialize + ?Sized>(out: W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(out, FullPrecision::default());
    value.serialize(&mut ser).map_err(io::Error::other)
}

/// 17 significant digits in scientific notation; non-finite values as `NaN`/`inf`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON formatter printing every float with 17 significant digits.
#[derive(Default)]
struct FullPrecision(serde_json::ser::PrettyFormatter<'static>);

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
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

struct Rows<'a>(&'a Mat);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let m = self.0;
        let mut seq = serializer.serialize_seq(Some(m.nrows()))?;
        for row in m.row_iter() {
            let values: Vec<f64> = row.iter().cloned().collect();
            seq.serialize_element(&values)?;
        }
        seq.end()
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Field::Number(x) => serializer.serialize_f64(*x),
            Field::Integer(x) => serializer.serialize_i64(*x),
            Field::Bool(x) => serializer.serialize_bool(*x),
            Field::Text(s) => serializer.serialize_str(s),
            Field::Matrix(m) => Rows(m).serialize(serializer),
            Field::Null => serializer.serialize_unit(),
        }
    }
}

impl Serialize for Sample {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.fields.0.len() + 1))?;
        map.serialize_entry("t", &self.t)?;
        for (name, field) in &self.fields.0 {
            map.serialize_entry(name, field)?;
        }
        map.end()
    }
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("command", self.command)?;
        for (name, field) in &self.meta.0 {
            map.serialize_entry(name, field)?;
        }
        if !self.samples.is_empty() {
            map.serialize_entry("samples", &self.samples)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let mut report = Report::new("demo");
        report.meta.push("x", 0.1);
        report.meta.push("m", Mat::from_row_slice(1, 2, &[1.0 / 3.0, -2.0]));
        let mut out = Vec::new();
        report.write_json(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["x"].as_f64(), Some(0.1));
        assert_eq!(value["m"][0][0].as_f64(), Some(1.0 / 3.0));
    }

    #[test]
    fn csv_flattens_matrices_row_major() {
        let mut report = Report::new("demo");
        let mut fields = Fields::default();
        fields.push("kappa", Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        report.samples.push(Sample { t: 0.5, fields });
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,name,i,j,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("5.0000000000000000e-1,kappa,0,1,2.0"));
    }
}
