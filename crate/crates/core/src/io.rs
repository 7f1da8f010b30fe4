//! Series input and number formatting shared by the study and backtest outputs.

use std::io::Read;

use crate::error::{Result, TailError};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Empty string for a missing value.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// A series read from CSV with optional timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub timestamps: Option<Vec<String>>,
    pub values: Vec<f64>,
}

/// Reads a CSV with a header row and either a single `value` column or
/// `timestamp,value` columns. Other layouts are accepted when a column is
/// named `value`.
pub fn read_series_csv<R: Read>(reader: R) -> Result<SeriesTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| TailError::Config(format!("csv header: {e}")))?.clone();
    let value_col = match headers.iter().position(|h| h == "value") {
        Some(i) => i,
        None if headers.len() == 1 => 0,
        None => {
            return Err(TailError::Config(format!(
                "csv needs a `value` column, found [{}]",
                headers.iter().collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let ts_col = headers.iter().position(|h| h == "timestamp");
    let mut values = Vec::new();
    let mut timestamps = ts_col.map(|_| Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| TailError::Config(format!("csv row {}: {e}", row + 2)))?;
        let raw = rec.get(value_col).unwrap_or("");
        let v: f64 = raw
            .parse()
            .map_err(|_| TailError::Config(format!("csv row {}: `{raw}` is not a number", row + 2)))?;
        if !v.is_finite() {
            return Err(TailError::NonFiniteInput(row));
        }
        values.push(v);
        if let (Some(ts), Some(i)) = (timestamps.as_mut(), ts_col) {
            ts.push(rec.get(i).unwrap_or("").to_string());
        }
    }
    Ok(SeriesTable { timestamps, values })
}

/// `x_t = -log(P_t / P_{t-1})`; the first timestamp is dropped.
pub fn neg_log_returns(table: &SeriesTable) -> Result<SeriesTable> {
    if let Some(i) = table.values.iter().position(|&p| !(p > 0.0)) {
        return Err(TailError::Config(format!(
            "price at row {} is not positive; log-returns are undefined",
            i + 2
        )));
    }
    let values = table.values.windows(2).map(|w| -(w[1] / w[0]).ln()).collect();
    let timestamps = table.timestamps.as_ref().map(|ts| ts.iter().skip(1).cloned().collect());
    Ok(SeriesTable { timestamps, values })
}
