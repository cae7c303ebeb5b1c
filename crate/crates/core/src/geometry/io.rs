use std::path::Path;

use super::{Point2, PolygonalCurve};
use crate::error::{Error, Result};

/// JSON array of `[x, y]` pairs.
pub fn parse_curve_json(text: &str) -> Result<PolygonalCurve> {
    let pts: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    PolygonalCurve::from_points(pts.into_iter().map(Point2::from).collect())
}

/// Two-column CSV; a non-numeric first row is treated as a header.
pub fn parse_curve_csv(text: &str) -> Result<PolygonalCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut pts = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::Parse(format!("row {}: expected 2 columns", row + 1)));
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => pts.push(Point2::new(v[0], v[1])),
            Err(_) if row == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", row + 1))),
        }
    }
    PolygonalCurve::from_points(pts)
}

/// Sniffs JSON (leading `[`) versus CSV.
pub fn parse_curve(text: &str) -> Result<PolygonalCurve> {
    if text.trim_start().starts_with('[') {
        parse_curve_json(text)
    } else {
        parse_curve_csv(text)
    }
}

pub fn read_curve(path: &Path) -> Result<PolygonalCurve> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_curve(&text)
}

pub fn write_curve_json(curve: &PolygonalCurve) -> String {
    serde_json::to_string(curve).expect("points serialize")
}
