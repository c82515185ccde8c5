//! CSV ingestion, dataset manifests and JSON result files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{FitError, FitResult, TimeSeries};
use crate::kernels::{Kernel, KernelError};
use crate::models::{ModelError, ModelFamily, ModelParams, ModelSpec};

/// Current version of the result file layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: time {t} does not increase on the previous row")]
    NotIncreasing { line: u64, t: f64 },
    #[error("{0}")]
    Series(#[from] FitError),
    #[error("dataset does not match manifest `{manifest}`: {message}")]
    Manifest { manifest: String, message: String },
    #[error("result file: {0}")]
    Schema(String),
    #[error("result file has schema_version {found}, expected {expected}")]
    Version { found: u64, expected: u32 },
}

fn io_error(path: &Path, source: io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// Provenance and sampling design of one of the case-study datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: &'static str,
    pub source: &'static str,
    /// What t = 0 corresponds to.
    pub origin: &'static str,
    pub time_unit: &'static str,
    pub value_unit: &'static str,
    /// Number of points, when the study design fixes it.
    pub count: Option<usize>,
    pub t_start: f64,
    pub t_step: f64,
}

impl DatasetManifest {
    pub fn gdp() -> Self {
        DatasetManifest {
            name: "gdp",
            source: "World Bank, GDP per capita (current US$), 1966-2011 every 5 years",
            origin: "t = 0 is the year 1966",
            time_unit: "years",
            value_unit: "US$ per capita",
            count: Some(10),
            t_start: 0.0,
            t_step: 5.0,
        }
    }

    pub fn cooling() -> Self {
        DatasetManifest {
            name: "cooling",
            source: "100 ml of water in a beaker, initially at 100 C, ambient 23 C, read every minute",
            origin: "t = 0 is the first reading (T0 = 100 C)",
            time_unit: "minutes",
            value_unit: "degrees C",
            count: None,
            t_start: 0.0,
            t_step: 1.0,
        }
    }

    pub fn bombay() -> Self {
        DatasetManifest {
            name: "bombay",
            source: "Bombay plague, weekly deaths October 1905 - September 1906 (Kermack & McKendrick, Table IX)",
            origin: "t = 0 is the week of 1 October 1905",
            time_unit: "weeks",
            value_unit: "deaths",
            count: Some(52),
            t_start: 0.0,
            t_step: 1.0,
        }
    }

    pub fn population() -> Self {
        DatasetManifest {
            name: "population",
            source: "UN World Population Prospects, population by continent, 1950-2010 every 5 years",
            origin: "t = 0 is the year 1950",
            time_unit: "years",
            value_unit: "millions",
            count: Some(13),
            t_start: 0.0,
            t_step: 5.0,
        }
    }

    pub fn builtin() -> [DatasetManifest; 4] {
        [Self::gdp(), Self::cooling(), Self::bombay(), Self::population()]
    }

    pub fn by_name(name: &str) -> Option<DatasetManifest> {
        Self::builtin().into_iter().find(|m| m.name == name)
    }

    /// Checks the point count and the time grid against the study design.
    pub fn validate(&self, series: &TimeSeries) -> Result<(), DataError> {
        let mismatch = |message: String| DataError::Manifest { manifest: self.name.to_string(), message };
        if let Some(n) = self.count {
            if series.len() != n {
                return Err(mismatch(format!("expected {n} points, found {}", series.len())));
            }
        }
        for (i, &t) in series.times().iter().enumerate() {
            let want = self.t_start + self.t_step * i as f64;
            if (t - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(mismatch(format!(
                    "point {} has t = {t}, expected {want} ({} {} steps from {})",
                    i + 1,
                    self.t_step,
                    self.time_unit,
                    self.t_start
                )));
            }
        }
        Ok(())
    }
}

/// Parses two-column `t,value` CSV text. A non-numeric first row is taken as
/// a header; blank lines and `#` comments are ignored.
pub fn parse_csv(text: &str) -> Result<TimeSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let is_first = std::mem::take(&mut first);
        if record.len() != 2 {
            return Err(DataError::Parse {
                line,
                message: format!("expected 2 columns (t,value), found {}", record.len()),
            });
        }
        let parse = |field: &str, what: &str| -> Result<f64, String> {
            let v: f64 = field.parse().map_err(|_| format!("{what} `{field}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{what} `{field}` is not finite"))
            }
        };
        let (t, y) = match (parse(&record[0], "time"), parse(&record[1], "value")) {
            (Ok(t), Ok(y)) => (t, y),
            (Err(_), Err(_)) if is_first => continue,
            (Err(message), _) | (_, Err(message)) => return Err(DataError::Parse { line, message }),
        };
        if let Some(&prev) = ts.last() {
            if t <= prev {
                return Err(DataError::NotIncreasing { line, t });
            }
        }
        ts.push(t);
        ys.push(y);
    }
    Ok(TimeSeries::new(ts, ys)?)
}

/// Reads a CSV file, optionally validating it against a manifest.
pub fn load_csv(path: &Path, manifest: Option<&DatasetManifest>) -> Result<TimeSeries, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut series = parse_csv(&text)?;
    if let Some(m) = manifest {
        m.validate(&series)?;
        series.label = Some(m.name.to_string());
        series.unit = Some(m.value_unit.to_string());
    }
    Ok(series)
}

/// Writes `t,value` rows with shortest round-trip number formatting.
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["t", "value"]).map_err(|e| csv_io(path, e))?;
    for (t, y) in series.times().iter().zip(series.values()) {
        w.write_record([t.to_string(), y.to_string()]).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> DataError {
    io_error(path, io::Error::other(e.to_string()))
}

/// On-disk layout of a fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultRecord {
    schema_version: u64,
    family: String,
    kernel: String,
    b: Option<f64>,
    alpha: f64,
    origin: f64,
    params: BTreeMap<String, f64>,
    error: f64,
    efficiency: Option<f64>,
    converged: bool,
    iterations: usize,
    seed: u64,
    free_params: usize,
    residuals: Vec<f64>,
}

/// A fit result together with its efficiency against a classical baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredResult {
    pub result: FitResult,
    pub efficiency: Option<f64>,
}

/// JSON text of a result, with a trailing newline.
pub fn result_to_json(result: &FitResult, efficiency: Option<f64>) -> String {
    let names = result.spec.family.param_names();
    let params = names.iter().map(|n| n.to_string()).zip(result.params.to_vec()).collect();
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION as u64,
        family: result.spec.family.name().to_string(),
        kernel: result.spec.kernel.to_string(),
        b: result.spec.kernel.shape(),
        alpha: result.spec.alpha,
        origin: result.spec.origin,
        params,
        error: result.error,
        efficiency,
        converged: result.converged,
        iterations: result.iterations,
        seed: result.seed,
        free_params: result.free_params,
        residuals: result.residuals.clone(),
    };
    let mut s = serde_json::to_string_pretty(&record).expect("result record serialises");
    s.push('\n');
    s
}

pub fn result_from_json(text: &str) -> Result<StoredResult, DataError> {
    let schema = |m: String| DataError::Schema(m);
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| schema("missing field `schema_version`".into()))?
        .as_u64()
        .ok_or_else(|| schema("`schema_version` must be a non-negative integer".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(DataError::Version { found: version, expected: SCHEMA_VERSION });
    }
    let rec: ResultRecord = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;

    let family: ModelFamily = rec.family.parse().map_err(|e: ModelError| schema(e.to_string()))?;
    let kernel: Kernel = rec.kernel.parse().map_err(|e: KernelError| schema(e.to_string()))?;
    if kernel.shape() != rec.b {
        return Err(schema(format!("`b` = {:?} disagrees with kernel `{}`", rec.b, rec.kernel)));
    }
    let mut values = Vec::new();
    for name in family.param_names() {
        let v = rec
            .params
            .get(*name)
            .ok_or_else(|| schema(format!("missing field `params.{name}`")))?;
        values.push(*v);
    }
    if let Some(extra) = rec.params.keys().find(|k| !family.param_names().contains(&k.as_str())) {
        return Err(schema(format!("unknown parameter `{extra}` for family {family}")));
    }
    let params = ModelParams::from_slice(family, &values).map_err(|e| schema(e.to_string()))?;
    let spec = ModelSpec { family, kernel, alpha: rec.alpha, origin: rec.origin };
    spec.validate().map_err(|e| schema(e.to_string()))?;
    Ok(StoredResult {
        result: FitResult {
            spec,
            params,
            error: rec.error,
            iterations: rec.iterations,
            converged: rec.converged,
            residuals: rec.residuals,
            seed: rec.seed,
            free_params: rec.free_params,
        },
        efficiency: rec.efficiency,
    })
}

pub fn save_result(result: &FitResult, path: &Path) -> Result<(), DataError> {
    save_result_with(result, None, path)
}

pub fn save_result_with(result: &FitResult, efficiency: Option<f64>, path: &Path) -> Result<(), DataError> {
    fs::write(path, result_to_json(result, efficiency)).map_err(|e| io_error(path, e))
}

pub fn load_result(path: &Path) -> Result<FitResult, DataError> {
    Ok(load_stored(path)?.result)
}

pub fn load_stored(path: &Path) -> Result<StoredResult, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    result_from_json(&text)
}
