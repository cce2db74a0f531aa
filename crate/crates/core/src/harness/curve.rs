//! Latency/quality curve points ingested from result tables. Quality values
//! are carried through as given; nothing here scores translations.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::evaluate::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatencyAxis {
    Token,
    #[default]
    Word,
}

impl FromStr for LatencyAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(LatencyAxis::Token),
            "word" => Ok(LatencyAxis::Word),
            other => Err(Error::InvalidParameter(format!(
                "unknown latency axis {other:?} (expected token or word)"
            ))),
        }
    }
}

/// One point; the text fields hold the values exactly as they were read.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub label: String,
    pub param: String,
    pub latency: String,
    pub quality: String,
    #[serde(skip)]
    latency_value: f64,
}

impl CurvePoint {
    pub fn new(label: &str, param: &str, latency: &str, quality: &str) -> Result<Self> {
        let number = |field: &str, v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("{field} {v:?} is not a number")))
        };
        let latency_value = number("latency", latency)?;
        number("quality", quality)?;
        Ok(CurvePoint {
            label: label.to_owned(),
            param: param.to_owned(),
            latency: latency.to_owned(),
            quality: quality.to_owned(),
            latency_value,
        })
    }

    pub fn latency_value(&self) -> f64 {
        self.latency_value
    }
}

fn bold_label(line: &str) -> Option<&str> {
    let start = line.find("\\textbf{")? + "\\textbf{".len();
    let len = line[start..].find('}')?;
    Some(line[start..start + len].trim())
}

fn numeric_cells(line: &str) -> Option<Vec<&str>> {
    let body = line.split("\\\\").next()?;
    let cells: Vec<&str> = body.split('&').map(str::trim).collect();
    (cells.len() == 4 && cells.iter().all(|c| c.parse::<f64>().is_ok())).then_some(cells)
}

/// Parse a LaTeX-style result table: a `\textbf{Label}` line opens a
/// system, and each `param & token AL & word AL & quality` row adds a point.
pub fn parse_latex_table(text: &str, axis: LatencyAxis) -> Result<Vec<CurvePoint>> {
    let mut label: Option<String> = None;
    let mut points = Vec::new();
    for line in text.lines() {
        if let Some(l) = bold_label(line) {
            label = Some(l.to_owned());
            continue;
        }
        let Some(cells) = numeric_cells(line) else { continue };
        let latency = match axis {
            LatencyAxis::Token => cells[1],
            LatencyAxis::Word => cells[2],
        };
        let label = label.as_deref().unwrap_or("");
        points.push(CurvePoint::new(label, cells[0], latency, cells[3])?);
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("no result rows found in table".into()));
    }
    Ok(points)
}

/// Parse CSV with a header naming `label`, `latency` and `quality` columns
/// (`param` optional).
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| names.iter().position(|n| *n == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            column: 1,
            message: format!("CSV header lacks a {name:?} column"),
        })
    };
    let (label, latency, quality) = (need("label")?, need("latency")?, need("quality")?);
    let param = col("param");

    let mut points = Vec::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::InvalidParameter(format!(
                "line {}: expected {} fields, found {}",
                line_no + 1,
                names.len(),
                cells.len()
            )));
        }
        let p = param.map_or("", |i| cells[i]);
        points.push(CurvePoint::new(cells[label], p, cells[latency], cells[quality])?);
    }
    Ok(points)
}

/// Keep systems in order of first appearance and sort each by latency.
fn sorted(points: &[CurvePoint]) -> Vec<&CurvePoint> {
    let mut labels: Vec<&str> = Vec::new();
    for p in points {
        if !labels.contains(&p.label.as_str()) {
            labels.push(&p.label);
        }
    }
    let mut out = Vec::with_capacity(points.len());
    for label in labels {
        let mut series: Vec<&CurvePoint> = points.iter().filter(|p| p.label == label).collect();
        series.sort_by(|a, b| a.latency_value.total_cmp(&b.latency_value));
        out.extend(series);
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn emit_curve(points: &[CurvePoint], format: OutputFormat) -> Result<String> {
    let points = sorted(points);
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("label,param,latency,quality\n");
            for p in points {
                let _ = writeln!(out, "{},{},{},{}", csv_field(&p.label), csv_field(&p.param), p.latency, p.quality);
            }
            Ok(out)
        }
        OutputFormat::Json => serde_json::to_string_pretty(&points)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::InvalidParameter(e.to_string())),
        OutputFormat::Text => Err(Error::InvalidParameter(
            "curve output supports csv and json only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = r"
        \multicolumn{4}{c}{\textbf{Token-level Wait-k}} \\ \hline
        k & token AL & word AL & BLEU \\
        1 & 1.95 & 1.91 & 32.32 \\
        3 & 3.83 & 3.43 & 38.90 \\ \hline
        \multicolumn{4}{c}{\textbf{Word-level Wait-k}} \\ \hline
        k & token AL & word AL & BLEU \\
        3 & 4.18 & 3.32 & 39.36 \\
        1 & 2.24 & 1.74 & 32.43 \\
        0.9 &13.36 & 11.00 & 41.53 \\ \hline
    ";

    #[test]
    fn latex_rows_by_system() {
        let points = parse_latex_table(TABLE, LatencyAxis::Word).unwrap();
        assert_eq!(points.len(), 5);
        assert_eq!(points[3].label, "Word-level Wait-k");
        assert_eq!((points[3].latency.as_str(), points[3].quality.as_str()), ("1.74", "32.43"));
        assert_eq!(points[4].latency, "11.00");
        let token = parse_latex_table(TABLE, LatencyAxis::Token).unwrap();
        assert_eq!(token[0].latency, "1.95");
        assert!(parse_latex_table("k & a & b \\\\", LatencyAxis::Word).is_err());
    }

    #[test]
    fn csv_output_is_sorted_and_verbatim() {
        let points = parse_latex_table(TABLE, LatencyAxis::Word).unwrap();
        let csv = emit_curve(&points, OutputFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "label,param,latency,quality\n\
             Token-level Wait-k,1,1.91,32.32\n\
             Token-level Wait-k,3,3.43,38.90\n\
             Word-level Wait-k,1,1.74,32.43\n\
             Word-level Wait-k,3,3.32,39.36\n\
             Word-level Wait-k,0.9,11.00,41.53\n"
        );
        let back = parse_curve_csv(&csv).unwrap();
        assert_eq!(emit_curve(&back, OutputFormat::Csv).unwrap(), csv);
    }

    #[test]
    fn json_and_unknown_format() {
        let points = vec![CurvePoint::new("a", "1", "2.0", "30.10").unwrap()];
        let json: serde_json::Value = serde_json::from_str(&emit_curve(&points, OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(json[0]["quality"], "30.10");
        assert!(matches!(emit_curve(&points, OutputFormat::Text), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn csv_errors() {
        assert!(parse_curve_csv("label,quality\nx,1").is_err());
        assert!(parse_curve_csv("label,latency,quality\nx,1").is_err());
        assert!(parse_curve_csv("label,latency,quality\nx,fast,1").is_err());
        assert_eq!(parse_curve_csv("").unwrap_err(), Error::EmptyInput);
    }
}
