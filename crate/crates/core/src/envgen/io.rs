//! CSV persistence for datasets and the JSON sidecar manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! written dataset reads back bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Dataset, DatasetError, EnvironmentSample, GeneratorParams, OracleConstants, EMI_POSITIONS,
};

pub const CSV_HEADER: &str =
    "emi_00,emi_01,emi_02,emi_03,emi_04,emi_05,emi_06,emi_07,emi_08,emi_09,\
emi_10,emi_11,emi_12,emi_13,emi_14,emi_15,emi_16,emi_17,emi_18,emi_19,\
emi_20,emi_21,emi_22,emi_23,emi_24,emi_25,emi_26,emi_27,emi_28,emi_29,\
temperature,humidity,throughput";

const COLUMNS: usize = EMI_POSITIONS + 3;

/// Recorded next to every generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub samples: usize,
    pub seed: u64,
    pub generator: GeneratorParams,
    pub oracle: OracleConstants,
    pub columns: Vec<String>,
}

impl DatasetManifest {
    pub fn new(ds: &Dataset, generator: GeneratorParams, oracle: OracleConstants) -> Self {
        Self {
            samples: ds.len(),
            seed: ds.seed,
            generator,
            oracle,
            columns: CSV_HEADER.split(',').map(str::to_owned).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::with_capacity(ds.len() * 600);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &ds.samples {
        for v in s.emi {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", s.temperature, s.humidity, s.throughput);
    }
    out
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, to_csv_string(ds))?;
    Ok(())
}

/// Reads a dataset CSV; row order becomes the sample id.
pub fn read_csv(path: &Path, seed: u64) -> Result<Dataset, DatasetError> {
    parse_csv(&fs::read_to_string(path)?, seed)
}

pub fn parse_csv(text: &str, seed: u64) -> Result<Dataset, DatasetError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(DatasetError::Parse {
                line: 1,
                reason: "missing or unexpected header".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| DatasetError::Parse {
            line: idx + 1,
            reason,
        };
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(e.to_string()))?;
        if values.len() != COLUMNS {
            return Err(parse_err(format!(
                "expected {COLUMNS} columns, found {}",
                values.len()
            )));
        }
        let mut emi = [0.0; EMI_POSITIONS];
        emi.copy_from_slice(&values[..EMI_POSITIONS]);
        let sample = EnvironmentSample {
            id: samples.len(),
            emi,
            temperature: values[EMI_POSITIONS],
            humidity: values[EMI_POSITIONS + 1],
            throughput: values[EMI_POSITIONS + 2],
        };
        sample.validate()?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(Dataset {
        samples,
        seed,
        normalization: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::generate_dataset;

    #[test]
    fn header_has_33_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 33);
        assert!(CSV_HEADER.starts_with("emi_00,"));
    }

    #[test]
    fn csv_shape_and_determinism() {
        let a = to_csv_string(&generate_dataset(416, 7).unwrap());
        let b = to_csv_string(&generate_dataset(416, 7).unwrap());
        assert_eq!(a, b);
        let rows: Vec<&str> = a.lines().collect();
        assert_eq!(rows.len(), 417);
        assert!(rows.iter().all(|r| r.split(',').count() == 33));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn csv_reads_back_exactly() {
        let ds = generate_dataset(20, 9).unwrap();
        let back = parse_csv(&to_csv_string(&ds), 9).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn malformed_rows_rejected() {
        assert!(parse_csv("a,b\n1,2\n", 0).is_err());
        let short = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(matches!(
            parse_csv(&short, 0),
            Err(DatasetError::Parse { line: 2, .. })
        ));
        let mut row = vec!["1"; 33];
        row[31] = "120";
        let wet = format!("{CSV_HEADER}\n{}\n", row.join(","));
        assert!(matches!(
            parse_csv(&wet, 0),
            Err(DatasetError::InvalidSample { .. })
        ));
    }
}
