use std::io::{Read, Write};

use super::StlError;

/// Finite sequence of equally spaced, equal-dimension states `s_0 .. s_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dim: usize,
    data: Vec<f64>,
}

impl Trace {
    /// Builds a trace from a list of states.
    pub fn new(states: &[Vec<f64>]) -> Result<Self, StlError> {
        let first = states
            .first()
            .ok_or_else(|| StlError::InvalidTrace("trace has no states".into()))?;
        let mut trace = Self::empty(first.len())?;
        for s in states {
            trace.push(s)?;
        }
        Ok(trace)
    }

    /// A trace of dimension `dim` with no states yet. Evaluation functions
    /// reject empty traces; this is a starting point for [`Trace::push`].
    pub fn empty(dim: usize) -> Result<Self, StlError> {
        if dim == 0 {
            return Err(StlError::InvalidTrace("state dimension must be at least 1".into()));
        }
        Ok(Self { dim, data: Vec::new() })
    }

    /// Builds a trace from row-major flat storage.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self, StlError> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(StlError::InvalidTrace(format!(
                "{} values cannot be split into states of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(StlError::InvalidTrace("trace contains non-finite values".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn push(&mut self, state: &[f64]) -> Result<(), StlError> {
        if state.len() != self.dim {
            return Err(StlError::DimensionMismatch {
                expected: self.dim,
                got: state.len(),
            });
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(StlError::InvalidTrace("state contains non-finite values".into()));
        }
        self.data.extend_from_slice(state);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states, `k + 1`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// State at time `t`. Panics when `t` is out of range.
    pub fn state(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// States `start ..= end` as a new trace whose time 0 is `start`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self, StlError> {
        if start > end || end >= self.len() {
            return Err(StlError::TimeOutOfRange {
                t: end.max(start),
                len: self.len(),
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self.data[start * self.dim..(end + 1) * self.dim].to_vec(),
        })
    }

    /// Reads a CSV trace with header `t,x0,...,xN` and rows `t = 0, 1, 2, ...`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, StlError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| StlError::InvalidTrace(e.to_string()))?
            .clone();
        if headers.len() < 2 || &headers[0] != "t" {
            return Err(StlError::InvalidTrace(
                "header must be t,x0,...,xN with at least one state column".into(),
            ));
        }
        for (i, h) in headers.iter().skip(1).enumerate() {
            if h != format!("x{i}") {
                return Err(StlError::InvalidTrace(format!(
                    "column {} is named '{h}', expected 'x{i}'",
                    i + 2
                )));
            }
        }
        let mut trace = Self::empty(headers.len() - 1)?;
        let mut row = Vec::with_capacity(trace.dim);
        for (expected_t, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| StlError::InvalidTrace(e.to_string()))?;
            let t: usize = record[0].parse().map_err(|_| {
                StlError::InvalidTrace(format!(
                    "row {}: time '{}' is not an integer",
                    expected_t + 1,
                    &record[0]
                ))
            })?;
            if t != expected_t {
                return Err(StlError::InvalidTrace(format!(
                    "row {}: expected t = {expected_t}, found {t}",
                    expected_t + 1
                )));
            }
            row.clear();
            for field in record.iter().skip(1) {
                let v: f64 = field.parse().map_err(|_| {
                    StlError::InvalidTrace(format!("row {}: '{field}' is not a number", expected_t + 1))
                })?;
                row.push(v);
            }
            trace.push(&row)?;
        }
        if trace.is_empty() {
            return Err(StlError::InvalidTrace("trace has no rows".into()));
        }
        Ok(trace)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StlError> {
        let io = |e: csv::Error| StlError::InvalidTrace(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(io)?;
        for (t, s) in self.states().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(s.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| StlError::InvalidTrace(e.to_string()))
    }
}
