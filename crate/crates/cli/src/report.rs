//! Metric computation and JSON / CSV rendering of reports.

use clap::ValueEnum;
use rbtr_core::imaging::MetricReport;
use rbtr_core::RbTensor;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

const TENSOR_PSNR_FORMULA: &str = "10*log10(max^2/(||X_hat-X||_F^2/N)), N = 4 real components per entry, max = 1";

/// Colour-component metrics for images, all four real components for raw
/// tensors.
pub fn metrics(x_hat: &RbTensor, x: &RbTensor, colour: bool) -> Result<MetricReport, CliError> {
    if colour {
        return Ok(MetricReport::compute(x_hat, x)?);
    }
    let rse = x_hat.relative_error(x)?;
    let err = (x_hat - x).frobenius_sqr();
    let psnr = if err == 0.0 { f64::INFINITY } else { 10.0 * (4.0 * x.len() as f64 / err).log10() };
    Ok(MetricReport {
        psnr,
        rse,
        storage_cost: None,
        compression_ratio: None,
        psnr_formula: TENSOR_PSNR_FORMULA.to_string(),
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        // per-iteration histories only make sense in JSON
        Value::Array(_) => {}
        Value::String(s) => out.push((prefix.to_string(), csv_field(s))),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(report: &Map<String, Value>, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report).map_err(rbtr_core::RbError::from)? + "\n"),
        Format::Csv => {
            let mut fields = Vec::new();
            flatten("", &Value::Object(report.clone()), &mut fields);
            let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
            let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            Ok(format!("{}\n{}\n", header.join(","), values.join(",")))
        }
    }
}

pub fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v).map_err(rbtr_core::RbError::from)?)
}
