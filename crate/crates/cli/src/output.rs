use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Units tag carried by every numeric output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Bits,
    Nats,
    Prob,
    Count,
    Ratio,
    /// Same units as the Gaussian source samples.
    Amplitude,
    Seconds,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Nats => "nats",
            Unit::Prob => "prob",
            Unit::Count => "count",
            Unit::Ratio => "ratio",
            Unit::Amplitude => "amplitude",
            Unit::Seconds => "s",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Unit> {
        Ok(match s {
            "bits" => Unit::Bits,
            "nats" => Unit::Nats,
            "prob" => Unit::Prob,
            "count" => Unit::Count,
            "ratio" => Unit::Ratio,
            "amplitude" => Unit::Amplitude,
            "s" => Unit::Seconds,
            _ => {
                return Err(CliError::Format {
                    what: "units tag",
                    message: format!("unknown units `{s}`"),
                })
            }
        })
    }
}

/// A CSV column: header `name[unit]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: Unit,
}

impl Column {
    pub fn new(name: &str, unit: Unit) -> Column {
        Column {
            name: name.to_string(),
            unit,
        }
    }

    pub fn header(&self) -> String {
        format!("{}[{}]", self.name, self.unit)
    }

    pub fn parse_header(h: &str) -> CliResult<Column> {
        let bad = || CliError::Format {
            what: "CSV header",
            message: format!("`{h}` is not of the form name[unit]"),
        };
        let (name, rest) = h.split_once('[').ok_or_else(bad)?;
        let unit = rest.strip_suffix(']').ok_or_else(bad)?;
        if name.is_empty() || name.contains(']') {
            return Err(bad());
        }
        Ok(Column::new(name, unit.parse()?))
    }
}

/// A curve table with unit-tagged columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Table {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str, unit: Unit) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c.name == name && c.unit == unit)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        let fail = |e: csv::Error| CliError::Io {
            path: "<output>".into(),
            source: e.into(),
        };
        out.write_record(self.columns.iter().map(Column::header))
            .map_err(fail)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(fail)?;
        }
        out.flush().map_err(|e| CliError::Io {
            path: "<output>".into(),
            source: e,
        })
    }

    pub fn read_csv<R: Read>(r: R) -> CliResult<Table> {
        let bad = |m: String| CliError::Format {
            what: "CSV",
            message: m,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let columns = headers
            .iter()
            .map(Column::parse_header)
            .collect::<CliResult<Vec<_>>>()?;
        if columns.is_empty() {
            return Err(bad("no columns".into()));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(bad(format!("duplicate column {}", c.header())));
            }
        }
        let mut table = Table::new(columns);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
            if row.len() != table.columns.len() {
                return Err(bad(format!("row {} has {} fields", line + 1, row.len())));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// A scalar result with its units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    #[serde(with = "tagged_float")]
    pub value: f64,
    pub units: Unit,
}

impl Quantity {
    pub fn new(name: &str, value: f64, units: Unit) -> Quantity {
        Quantity {
            name: name.to_string(),
            value,
            units,
        }
    }
}

/// Finite values as JSON numbers, the rest as `"nan"`, `"inf"` or `"-inf"`.
mod tagged_float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Tag(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("`{t}` is not a number"))),
            },
        }
    }
}

/// One JSON-lines record per experiment or report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub results: Vec<Quantity>,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl OutputRecord {
    pub fn new(command: &str, seed: Option<u64>, params: serde_json::Value) -> OutputRecord {
        OutputRecord {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            params,
            results: Vec::new(),
            flags: BTreeMap::new(),
            wall_time_s: None,
        }
    }

    pub fn push(&mut self, name: &str, value: f64, units: Unit) {
        self.results.push(Quantity::new(name, value, units));
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.results.iter().find(|q| q.name == name)
    }
}

pub fn write_records<W: Write>(mut w: W, records: &[OutputRecord]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io {
        path: "<output>".into(),
        source: e,
    };
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| CliError::Format {
            what: "record",
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads JSON-lines records, skipping blank lines.
pub fn read_records<R: BufRead>(r: R) -> CliResult<Vec<OutputRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io {
            path: "<input>".into(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CliError::Format {
            what: "record",
            message: format!("line {}: {e}", i + 1),
        })?;
        out.push(rec);
    }
    Ok(out)
}
