use std::path::Path;

use serde::Serialize;

use super::CliError;

/// CSV cell; numbers are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "holds")]
    Holds,
    #[serde(rename = "violated")]
    Violated,
    #[serde(rename = "not-applicable")]
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub status: Status,
    pub worst_residual: Option<f64>,
    pub at_t: Option<f64>,
    #[serde(rename = "at_T")]
    pub at_temp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn new(claim: &str, status: Status) -> Self {
        Self {
            claim: claim.into(),
            status,
            worst_residual: None,
            at_t: None,
            at_temp: None,
            detail: None,
        }
    }

    pub fn with_point(mut self, residual: f64, t: f64, temp: f64) -> Self {
        self.worst_residual = residual.is_finite().then_some(residual);
        self.at_t = t.is_finite().then_some(t);
        self.at_temp = temp.is_finite().then_some(temp);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Tracks the worst point of a `value >= -tol * scale` claim.
#[derive(Debug, Clone, Copy)]
pub struct LowerBound {
    tol: f64,
    worst_margin: f64,
    residual: f64,
    t: f64,
    temp: f64,
    seen: bool,
}

impl LowerBound {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            worst_margin: f64::INFINITY,
            residual: f64::NAN,
            t: f64::NAN,
            temp: f64::NAN,
            seen: false,
        }
    }

    pub fn record(&mut self, value: f64, scale: f64, t: f64, temp: f64) {
        let margin = if value.is_nan() { f64::NEG_INFINITY } else { value / scale.max(1.0) };
        if !self.seen || margin < self.worst_margin {
            self.worst_margin = margin;
            self.residual = value;
            self.t = t;
            self.temp = temp;
            self.seen = true;
        }
    }

    pub fn holds(&self) -> bool {
        self.worst_margin >= -self.tol
    }

    pub fn verdict(&self, claim: &str) -> Verdict {
        if !self.seen {
            return Verdict::new(claim, Status::NotApplicable);
        }
        let status = if self.holds() { Status::Holds } else { Status::Violated };
        Verdict::new(claim, status).with_point(self.residual, self.t, self.temp)
    }

    /// Report the worst point without asserting the bound.
    pub fn informational(&self, claim: &str, why: &str) -> Verdict {
        let mut v = self.verdict(claim);
        v.status = Status::NotApplicable;
        v.with_detail(why)
    }
}

/// First point where a value drops below `-tol * scale`, plus the minimum seen.
#[derive(Debug, Clone, Copy)]
pub struct FirstNegative {
    pub first: Option<(f64, f64, f64)>,
    min: (f64, f64, f64),
    tol: f64,
}

impl Default for FirstNegative {
    fn default() -> Self {
        Self::new(0.0)
    }
}

impl FirstNegative {
    pub fn new(tol: f64) -> Self {
        Self {
            first: None,
            min: (f64::INFINITY, f64::NAN, f64::NAN),
            tol,
        }
    }

    pub fn record(&mut self, value: f64, scale: f64, t: f64, temp: f64) {
        if value < -self.tol * scale {
            let earlier = self.first.is_none_or(|(_, ft, _)| t < ft);
            if earlier {
                self.first = Some((value, t, temp));
            }
        }
        if value < self.min.0 {
            self.min = (value, t, temp);
        }
    }

    pub fn verdict(&self, claim: &str, missing: Status) -> Verdict {
        match self.first {
            Some((v, t, temp)) => Verdict::new(claim, Status::Holds)
                .with_point(v, t, temp)
                .with_detail(format!("first negative value at t = {t}; minimum {}", self.min.0)),
            None => Verdict::new(claim, missing)
                .with_point(self.min.0, self.min.1, self.min.2)
                .with_detail(format!("no negative value found; closest approach {}", self.min.0)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a, S: Serialize> {
    pub scenario: &'a S,
    pub study: &'a str,
    pub model_hash: &'a str,
    pub verdicts: &'a [Verdict],
    pub timing: Timing,
}
