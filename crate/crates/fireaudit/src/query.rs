//! Textual predicate mini-language over detection records.
//!
//! Grammar (hand-written recursive descent):
//!
//! ```text
//! predicate  := comparison ( "and" comparison )*
//! comparison := field "==" value
//! value      := quoted string | number
//! ```
//!
//! Example: `daynight == "N" and confidence == "l"`. Text fields compare by
//! string equality; numeric fields compare by value. `acq_time` compares
//! against the HHMM integer (e.g. `acq_time == 830` means 08:30).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::FireDetection;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum QueryError {
    #[error("query syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}` cannot be compared with {found}")]
    TypeMismatch { field: String, found: String },
}

/// Record fields addressable from a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Latitude,
    Longitude,
    BrightTi4,
    BrightTi5,
    Scan,
    Track,
    AcqDate,
    AcqTime,
    Satellite,
    Instrument,
    Confidence,
    Version,
    Frp,
    DayNight,
}

impl Field {
    fn from_name(name: &str) -> Option<Field> {
        Some(match name {
            "latitude" => Field::Latitude,
            "longitude" => Field::Longitude,
            "bright_ti4" => Field::BrightTi4,
            "bright_ti5" => Field::BrightTi5,
            "scan" => Field::Scan,
            "track" => Field::Track,
            "acq_date" => Field::AcqDate,
            "acq_time" => Field::AcqTime,
            "satellite" => Field::Satellite,
            "instrument" => Field::Instrument,
            "confidence" => Field::Confidence,
            "version" => Field::Version,
            "frp" => Field::Frp,
            "daynight" => Field::DayNight,
            _ => return None,
        })
    }

    fn is_numeric(self) -> bool {
        matches!(
            self,
            Field::Latitude
                | Field::Longitude
                | Field::BrightTi4
                | Field::BrightTi5
                | Field::Scan
                | Field::Track
                | Field::AcqTime
                | Field::Frp
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Text(String),
    Number(f64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::Number(n) => write!(f, "{n}"),
        }
    }
}

/// One `field == value` clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub field: Field,
    pub value: Value,
}

/// A conjunction of equality comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub clauses: Vec<Comparison>,
    text: String,
}

impl Predicate {
    /// Parse a predicate string.
    pub fn parse(input: &str) -> Result<Predicate, QueryError> {
        let mut p = Parser { input: input.as_bytes(), pos: 0 };
        let clauses = p.predicate()?;
        p.skip_ws();
        if p.pos != p.input.len() {
            return Err(QueryError::Syntax {
                pos: p.pos,
                msg: "trailing input after predicate".into(),
            });
        }
        Ok(Predicate { clauses, text: input.to_string() })
    }

    /// The original query text.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Evaluate against one record.
    pub fn matches(&self, rec: &FireDetection) -> bool {
        self.clauses.iter().all(|c| clause_matches(c, rec))
    }
}

fn clause_matches(c: &Comparison, rec: &FireDetection) -> bool {
    match (&c.field, &c.value) {
        (Field::Latitude, Value::Number(v)) => rec.latitude == *v,
        (Field::Longitude, Value::Number(v)) => rec.longitude == *v,
        (Field::BrightTi4, Value::Number(v)) => rec.bright_ti4 == *v,
        (Field::BrightTi5, Value::Number(v)) => rec.bright_ti5 == Some(*v),
        (Field::Scan, Value::Number(v)) => rec.scan == *v,
        (Field::Track, Value::Number(v)) => rec.track == *v,
        (Field::AcqTime, Value::Number(v)) => {
            let hhmm = (rec.acq_time / 60) * 100 + rec.acq_time % 60;
            f64::from(hhmm) == *v
        }
        (Field::Frp, Value::Number(v)) => rec.frp == *v,
        (Field::AcqDate, Value::Text(s)) => rec.acq_date.format("%Y-%m-%d").to_string() == *s,
        (Field::Satellite, Value::Text(s)) => rec.satellite == *s,
        (Field::Instrument, Value::Text(s)) => rec.instrument == *s,
        (Field::Confidence, Value::Text(s)) => rec.confidence.as_str() == s,
        (Field::Version, Value::Text(s)) => rec.version == *s,
        (Field::DayNight, Value::Text(s)) => rec.daynight.as_str() == s,
        // Type mismatches are rejected at parse time; anything left is false.
        _ => false,
    }
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn predicate(&mut self) -> Result<Vec<Comparison>, QueryError> {
        let mut clauses = vec![self.comparison()?];
        loop {
            let save = self.pos;
            self.skip_ws();
            if self.take_keyword("and") {
                clauses.push(self.comparison()?);
            } else {
                self.pos = save;
                return Ok(clauses);
            }
        }
    }

    fn comparison(&mut self) -> Result<Comparison, QueryError> {
        self.skip_ws();
        let name = self.identifier()?;
        let field = Field::from_name(&name).ok_or(QueryError::UnknownField(name.clone()))?;
        self.skip_ws();
        if !self.take_literal("==") {
            return Err(QueryError::Syntax { pos: self.pos, msg: "expected `==`".into() });
        }
        self.skip_ws();
        let value = self.value()?;
        match (&value, field.is_numeric()) {
            (Value::Number(_), false) => Err(QueryError::TypeMismatch {
                field: name,
                found: "a number".into(),
            }),
            (Value::Text(_), true) => Err(QueryError::TypeMismatch {
                field: name,
                found: "a quoted string".into(),
            }),
            _ => Ok(Comparison { field, value }),
        }
    }

    fn value(&mut self) -> Result<Value, QueryError> {
        match self.peek() {
            Some(b'"') => {
                self.pos += 1;
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b == b'"' {
                        let s = std::str::from_utf8(&self.input[start..self.pos])
                            .map_err(|_| QueryError::Syntax {
                                pos: start,
                                msg: "invalid UTF-8 in string".into(),
                            })?
                            .to_string();
                        self.pos += 1;
                        return Ok(Value::Text(s));
                    }
                    self.pos += 1;
                }
                Err(QueryError::Syntax { pos: start, msg: "unterminated string".into() })
            }
            Some(b) if b == b'-' || b.is_ascii_digit() => {
                let start = self.pos;
                self.pos += 1;
                while let Some(b) = self.peek() {
                    if b.is_ascii_digit() || b == b'.' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
                text.parse::<f64>().map(Value::Number).map_err(|_| QueryError::Syntax {
                    pos: start,
                    msg: format!("invalid number `{text}`"),
                })
            }
            _ => Err(QueryError::Syntax {
                pos: self.pos,
                msg: "expected a quoted string or a number".into(),
            }),
        }
    }

    fn identifier(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(QueryError::Syntax { pos: start, msg: "expected a field name".into() });
        }
        Ok(std::str::from_utf8(&self.input[start..self.pos]).unwrap().to_string())
    }

    fn take_keyword(&mut self, kw: &str) -> bool {
        if self.input[self.pos..].starts_with(kw.as_bytes()) {
            let after = self.pos + kw.len();
            let boundary = self
                .input
                .get(after)
                .map(|b| !b.is_ascii_alphanumeric() && *b != b'_')
                .unwrap_or(true);
            if boundary {
                self.pos = after;
                return true;
            }
        }
        false
    }

    fn take_literal(&mut self, lit: &str) -> bool {
        if self.input[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }
}
