use std::io::{self, Write};

use brjuno::Interval;
use rug::float::Round;
use rug::Float;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i128),
    Str(String),
    Bool(bool),
    Nums(Vec<f64>),
    Null,
}

impl Cell {
    pub fn float(x: &Float, round: Round) -> Cell {
        Cell::Num(x.to_f64_round(round))
    }

    pub fn lo(i: &Interval) -> Cell {
        Cell::float(i.lo(), Round::Down)
    }

    pub fn hi(i: &Interval) -> Cell {
        Cell::float(i.hi(), Round::Up)
    }

    pub fn opt<T: Into<Cell>>(v: Option<T>) -> Cell {
        v.map_or(Cell::Null, Into::into)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Cell {
        Cell::Int(x.into())
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i128)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x.into())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Cell {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Cell {
        Cell::Str(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Cell {
        Cell::Str(x)
    }
}

pub type Row = Vec<(&'static str, Cell)>;

/// 17 significant digits in scientific notation; non-finite values as text.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // signed exponent, as serde_json prints it
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
            _ => s,
        }
    }
}

fn json_num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format_num(x).parse::<Number>().expect("valid number literal"))
    } else {
        Value::String(format_num(x))
    }
}

fn to_json(cell: &Cell) -> Value {
    match cell {
        Cell::Num(x) => json_num(*x),
        Cell::Int(n) => Value::Number(n.to_string().parse().expect("integer literal")),
        Cell::Str(s) => Value::String(s.clone()),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Nums(xs) => Value::Array(xs.iter().map(|&x| json_num(x)).collect()),
        Cell::Null => Value::Null,
    }
}

fn to_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_num(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Str(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Nums(xs) => xs.iter().map(|&x| format_num(x)).collect::<Vec<_>>().join(";"),
        Cell::Null => String::new(),
    }
}

/// Writes rows as JSON lines, or as CSV with a header taken from the first
/// row. All rows passed to one writer share a schema.
pub fn write_rows(format: Format, rows: &[Row]) -> io::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            for row in rows {
                let obj: Map<String, Value> = row.iter().map(|(k, v)| (k.to_string(), to_json(v))).collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = rows.first() {
                w.write_record(first.iter().map(|(k, _)| *k))?;
            }
            for row in rows {
                w.write_record(row.iter().map(|(_, v)| to_text(v)))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
