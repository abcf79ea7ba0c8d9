use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{usage, Error, Result};
use crate::sweep::{Direction, SweepVariable, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// Swept parameter: power in mW or detuning in MHz.
    pub x: f64,
    /// Measured lower-branch shift, MHz.
    pub shift: f64,
    pub direction: Direction,
}

/// What the records were swept over and the value held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMeta {
    pub variable: SweepVariable,
    /// Detuning (MHz) for power sweeps, power (mW) for detuning sweeps.
    pub fixed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    /// Records in acquisition order; within one direction this is scan order.
    pub records: Vec<Record>,
    /// Required for fitting; files carry no metadata, so loaded sets start without it.
    pub meta: Option<SweepMeta>,
}

impl DataSet {
    pub fn new(records: Vec<Record>, meta: Option<SweepMeta>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !r.x.is_finite() || !r.shift.is_finite() {
                return Err(usage(format!("record {i} is not finite")));
            }
        }
        if let Some(m) = meta {
            if !m.fixed.is_finite() {
                return Err(usage("fixed sweep parameter must be finite"));
            }
        }
        Ok(DataSet { records, meta })
    }

    /// Concatenate traces (typically forward then backward) of one sweep.
    pub fn from_traces(traces: &[&Trace], fixed: f64) -> Result<Self> {
        let first = traces.first().ok_or_else(|| usage("no traces given"))?;
        if traces.iter().any(|t| t.variable != first.variable) {
            return Err(usage("traces sweep different variables"));
        }
        let records = traces
            .iter()
            .flat_map(|t| t.points.iter().map(|p| Record { x: p.param, shift: p.shift, direction: t.direction }))
            .collect();
        DataSet::new(records, Some(SweepMeta { variable: first.variable, fixed }))
    }

    pub fn with_meta(mut self, meta: SweepMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_direction(&self, direction: Direction) -> bool {
        self.records.iter().any(|r| r.direction == direction)
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.shift).collect()
    }
}

fn parse_direction(token: &str) -> Option<Direction> {
    match token.trim().to_ascii_lowercase().as_str() {
        "fwd" | "forward" => Some(Direction::Forward),
        "bwd" | "backward" => Some(Direction::Backward),
        _ => None,
    }
}

/// Read `param, shift_MHz, direction` columns (the trace export's
/// `delta_LP_MHz` is accepted for the shift); other columns are ignored.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DataSet> {
    read_csv(File::open(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<DataSet> {
    let parse = |line: u64, message: String| Error::Parse { line, message };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);

    let headers = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(parse(1, "empty file".into()));
    }
    let column = |names: &[&str]| headers.iter().position(|h| names.contains(&h));
    let ix = column(&["param"]).ok_or_else(|| parse(1, "missing column `param`".into()))?;
    let is = column(&["shift_MHz", "delta_LP_MHz"]).ok_or_else(|| parse(1, "missing column `shift_MHz`".into()))?;
    let id = column(&["direction"]).ok_or_else(|| parse(1, "missing column `direction`".into()))?;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let number = |i: usize, name: &str| -> Result<f64> {
            let raw = row.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| parse(line, format!("{name}: cannot parse `{raw}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse(line, format!("{name}: non-finite value `{raw}`")))
            }
        };
        let x = number(ix, "param")?;
        let shift = number(is, "shift")?;
        let token = row.get(id).unwrap_or("");
        let direction = parse_direction(token).ok_or_else(|| parse(line, format!("unknown direction `{token}`")))?;
        records.push(Record { x, shift, direction });
    }
    if records.is_empty() {
        return Err(parse(1, "no data rows".into()));
    }
    Ok(DataSet { records, meta: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<DataSet> {
        read_csv(text.as_bytes())
    }

    #[test]
    fn keeps_row_order() {
        let ds = read("param,shift_MHz,direction\n0,0,fwd\n10,1.5,forward\n5,2.5,bwd\n").unwrap();
        let xs: Vec<f64> = ds.records.iter().map(|r| r.x).collect();
        assert_eq!(xs, [0.0, 10.0, 5.0]);
        assert_eq!(ds.records[2].direction, Direction::Backward);
        assert!(ds.meta.is_none());
    }

    #[test]
    fn bad_direction_names_its_line() {
        let err = read("param,shift_MHz,direction\n0,0,fwd\n1,0.2,sideways\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("sideways"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_and_missing_columns() {
        assert!(matches!(read("param,shift_MHz,direction\n1,NaN,fwd\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read("param,direction\n1,fwd\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read("param,shift_MHz,direction\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn accepts_trace_export_columns() {
        let ds = read("param,delta_LP_MHz,delta_UP_MHz,direction,switch\n1,2,0.13,bwd,0\n").unwrap();
        assert_eq!(ds.records[0], Record { x: 1.0, shift: 2.0, direction: Direction::Backward });
    }
}
