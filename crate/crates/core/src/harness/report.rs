//! Run reports and their JSON encoding.
//!
//! Floats are written with 17 significant digits in exponent form so that
//! a report can be diffed byte for byte against an earlier run.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::checks::Record;
use super::sampling::PreparedPoint;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub scenario_sha256: String,
    pub seed: u64,
    pub tool: &'static str,
    pub tool_version: &'static str,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub points: usize,
    pub rejected_samples: usize,
    /// Largest value per `check/residual`.
    pub max_residuals: BTreeMap<String, f64>,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn from_records(records: &[Record], points: usize, rejected: usize) -> Summary {
        let mut max_residuals = BTreeMap::new();
        for r in records {
            let e = max_residuals.entry(format!("{}/{}", r.check, r.residual)).or_insert(f64::NEG_INFINITY);
            if r.value > *e || r.value.is_nan() {
                *e = r.value;
            }
        }
        let passed = records.iter().filter(|r| r.pass).count();
        Summary {
            records: records.len(),
            passed,
            failed: records.len() - passed,
            points,
            rejected_samples: rejected,
            max_residuals,
            wall_time_s: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: Option<String>,
    pub provenance: Provenance,
    pub metrics: Vec<String>,
    pub points: Vec<PreparedPoint>,
    pub records: Vec<Record>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// The deterministic part of the report: records and summary without
    /// the wall time.
    pub fn residual_section(&self) -> String {
        let mut summary = self.summary.clone();
        summary.wall_time_s = 0.0;
        to_json(&(&self.records, &summary))
    }
}

struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report values serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_significant_digits() {
        let s = to_json(&vec![0.1, 1.0 / 3.0, 0.0, -2.5e-300]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"));
        assert!(s.contains("0.0000000000000000e0"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], 1.0 / 3.0);
    }

    #[test]
    fn non_finite_values_become_null() {
        assert!(to_json(&vec![f64::NAN]).contains("null"));
    }
}
