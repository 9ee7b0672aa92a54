//! CSV and JSON rendering. Floats are written with 17 significant digits so
//! they round-trip exactly.

use cavsqueeze::sweep_opt::PointResult;
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A JSON value whose floats serialize with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum J {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<J>),
    Obj(Vec<(String, J)>),
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for J {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            J::Null => s.serialize_unit(),
            J::Bool(b) => s.serialize_bool(*b),
            J::Int(i) => s.serialize_i64(*i),
            J::Num(x) if x.is_finite() => {
                RawValue::from_string(fmt_float(*x)).map_err(serde::ser::Error::custom)?.serialize(s)
            }
            J::Num(_) => s.serialize_unit(),
            J::Str(t) => s.serialize_str(t),
            J::Arr(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            J::Obj(fields) => {
                let mut map = s.serialize_map(Some(fields.len()))?;
                for (k, v) in fields {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

impl From<&Value> for J {
    fn from(v: &Value) -> Self {
        match v {
            Value::Null => J::Null,
            Value::Bool(b) => J::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => J::Int(i),
                None => J::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            Value::String(s) => J::Str(s.clone()),
            Value::Array(a) => J::Arr(a.iter().map(J::from).collect()),
            Value::Object(o) => J::Obj(o.iter().map(|(k, v)| (k.clone(), J::from(v))).collect()),
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Empty,
    Num(f64),
    Int(usize),
    Bool(bool),
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Num(x) => fmt_float(x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(self) -> J {
        match self {
            Cell::Empty => J::Null,
            Cell::Num(x) => J::Num(x),
            Cell::Int(i) => J::Int(i as i64),
            Cell::Bool(b) => J::Bool(b),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Rows sharing one header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.csv())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn to_json(&self) -> J {
        J::Arr(
            self.rows
                .iter()
                .map(|row| J::Obj(self.columns.iter().zip(row).map(|(k, c)| (k.to_string(), c.json())).collect()))
                .collect(),
        )
    }
}

pub const OBSERVABLE_COLUMNS: [&str; 14] = [
    "axis_value",
    "a22",
    "cpae",
    "cpae_max",
    "coherence_re",
    "coherence_im",
    "purity",
    "variance",
    "variance_min",
    "identity_residual",
    "cavity_n",
    "free_space_variance",
    "n_max_used",
    "residual",
];

/// A row of the observables table. Missing data (no axis, failed solve,
/// no free-space value) leaves cells empty.
pub fn observable_row(axis_value: Option<f64>, point: Option<&PointResult>, free_space: Option<f64>) -> Vec<Cell> {
    let mut row = vec![Cell::from(axis_value)];
    match point {
        Some(p) => {
            let o = &p.observables;
            row.extend(
                [
                    o.a22,
                    o.cpae,
                    o.cpae_max,
                    o.coherence.re,
                    o.coherence.im,
                    o.purity,
                    o.variance,
                    o.variance_min,
                    o.identity_residual,
                    o.cavity_n,
                ]
                .map(Cell::Num),
            );
            row.push(free_space.into());
            row.push(Cell::Int(p.n_max_used));
            row.push(Cell::Num(p.residual));
        }
        None => {
            row.extend([Cell::Empty; 10]);
            row.push(free_space.into());
            row.extend([Cell::Empty; 2]);
        }
    }
    row
}

/// Command output: a main table, optional scalar result and optional trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub config: J,
    pub records: Table,
    pub result: Option<Vec<(&'static str, Cell)>>,
    pub trace: Option<Table>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut sections = vec![self.records.to_csv()];
                if let Some(result) = &self.result {
                    let mut t = Table::new(&result.iter().map(|(k, _)| *k).collect::<Vec<_>>());
                    t.push(result.iter().map(|(_, c)| *c).collect());
                    sections.push(t.to_csv());
                }
                if let Some(trace) = &self.trace {
                    sections.push(trace.to_csv());
                }
                sections.join("\n")
            }
            Format::Json => {
                let mut fields = vec![
                    (
                        "metadata".to_string(),
                        J::Obj(vec![
                            ("program".into(), J::Str("cavsqueeze".into())),
                            ("version".into(), J::Str(env!("CARGO_PKG_VERSION").into())),
                            ("command".into(), J::Str(self.command.into())),
                            ("config".into(), self.config.clone()),
                        ]),
                    ),
                    ("records".to_string(), self.records.to_json()),
                ];
                if let Some(result) = &self.result {
                    fields.push((
                        "result".into(),
                        J::Obj(result.iter().map(|(k, c)| (k.to_string(), c.json())).collect()),
                    ));
                }
                if let Some(trace) = &self.trace {
                    fields.push(("trace".into(), trace.to_json()));
                }
                let mut s = serde_json::to_string_pretty(&J::Obj(fields)).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -0.23581234567890123, 1e-300, 13.0 / 300.0, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn json_numbers_are_raw_and_non_finite_is_null() {
        let j = J::Arr(vec![J::Num(0.5), J::Num(f64::NAN), J::Int(3)]);
        assert_eq!(serde_json::to_string(&j).unwrap(), "[5.0000000000000000e-1,null,3]");
        let back: Value = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back[0].as_f64(), Some(0.5));
    }

    #[test]
    fn failed_row_keeps_width() {
        assert_eq!(observable_row(Some(1.0), None, Some(0.2)).len(), OBSERVABLE_COLUMNS.len());
    }

    #[test]
    fn csv_sections() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Num(1.0), Cell::Empty]);
        let r = Report {
            command: "x",
            config: J::Null,
            records: t,
            result: Some(vec![("k", Cell::Bool(true))]),
            trace: None,
        };
        assert_eq!(r.render(Format::Csv), "a,b\n1.0000000000000000e0,\n\nk\ntrue\n");
    }
}
