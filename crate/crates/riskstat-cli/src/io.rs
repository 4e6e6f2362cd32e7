//! Scenario ingestion: CSV and JSON, flat serialization order.
//!
//! CSV: first line declares the shape (`k=2,1`), then one flat row per
//! scenario vector (block 1 left to right, then block 2, ...). JSON:
//! `{"shape": [2, 1], "vectors": [[1.0, 3.0, 2.0], ...]}`.
//! An empty data section is an empty list, not an error; malformed rows
//! report their 1-based data row number.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use riskstat::{ScenarioSpace, ScenarioVector};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: cannot infer format from extension (expected .csv or .json); pass --input-format")]
    UnknownFormat { path: String },
    #[error("{path}: missing header line `k=<comma-separated ints>`")]
    MissingHeader { path: String },
    #[error("{path}: bad shape header {header:?}: {message}")]
    BadHeader {
        path: String,
        header: String,
        message: String,
    },
    #[error("{path}: row {row}: expected {expected} values, got {got}")]
    RowLen {
        path: String,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: row {row}: non-numeric cell {cell:?}")]
    BadCell {
        path: String,
        row: usize,
        cell: String,
    },
    #[error("{path}: row {row}: {message}")]
    BadRow {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    BadShape { path: String, message: String },
    #[error("{path}: shape {got:?} does not match configured space {expected:?}")]
    SpaceMismatch {
        path: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
}

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

fn infer_format(path: &Path) -> Option<Format> {
    match path.extension()?.to_str()? {
        "csv" => Some(Format::Csv),
        "json" => Some(Format::Json),
        _ => None,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonScenarios {
    shape: Vec<usize>,
    vectors: Vec<Vec<f64>>,
}

/// Loads scenario vectors from `path`, inferring the format from the
/// extension unless one is given. The shape declared by the file must
/// match `space` when provided.
pub fn load_scenarios(
    path: &Path,
    format: Option<Format>,
    space: Option<&ScenarioSpace>,
) -> Result<Vec<ScenarioVector>, LoadError> {
    let format = format
        .or_else(|| infer_format(path))
        .ok_or_else(|| LoadError::UnknownFormat {
            path: path.display().to_string(),
        })?;
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Read {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        Format::Csv => parse_csv(path, &text, space),
        Format::Json => parse_json(path, &text, space),
    }
}

fn check_space(
    path: &Path,
    declared: ScenarioSpace,
    expected: Option<&ScenarioSpace>,
) -> Result<ScenarioSpace, LoadError> {
    if let Some(expected) = expected {
        if &declared != expected {
            return Err(LoadError::SpaceMismatch {
                path: path.display().to_string(),
                expected: expected.block_lens().to_vec(),
                got: declared.block_lens().to_vec(),
            });
        }
    }
    Ok(declared)
}

fn parse_csv(
    path: &Path,
    text: &str,
    space: Option<&ScenarioSpace>,
) -> Result<Vec<ScenarioVector>, LoadError> {
    let p = || path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .find(|line| !line.trim().is_empty())
        .ok_or_else(|| LoadError::MissingHeader { path: p() })?;
    let header = header.trim();
    let Some(shape_list) = header.strip_prefix("k=") else {
        return Err(LoadError::BadHeader {
            path: p(),
            header: header.to_string(),
            message: "expected `k=<comma-separated ints>`".to_string(),
        });
    };
    let k = shape_list
        .split(',')
        .map(|cell| cell.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| LoadError::BadHeader {
            path: p(),
            header: header.to_string(),
            message: e.to_string(),
        })?;
    let declared = ScenarioSpace::new(k).map_err(|e| LoadError::BadHeader {
        path: p(),
        header: header.to_string(),
        message: e.to_string(),
    })?;
    let space = check_space(path, declared, space)?;

    let mut vectors = Vec::new();
    let mut row = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != space.total_len() {
            return Err(LoadError::RowLen {
                path: p(),
                row,
                expected: space.total_len(),
                got: cells.len(),
            });
        }
        let mut flat = Vec::with_capacity(cells.len());
        for cell in cells {
            let value: f64 = cell.parse().map_err(|_| LoadError::BadCell {
                path: p(),
                row,
                cell: cell.to_string(),
            })?;
            flat.push(value);
        }
        let vector =
            ScenarioVector::from_flat(space.clone(), &flat).map_err(|e| LoadError::BadRow {
                path: p(),
                row,
                message: e.to_string(),
            })?;
        vectors.push(vector);
    }
    Ok(vectors)
}

fn parse_json(
    path: &Path,
    text: &str,
    space: Option<&ScenarioSpace>,
) -> Result<Vec<ScenarioVector>, LoadError> {
    let p = || path.display().to_string();
    let parsed: JsonScenarios =
        serde_json::from_str(text).map_err(|source| LoadError::Json { path: p(), source })?;
    let declared = ScenarioSpace::new(parsed.shape).map_err(|e| LoadError::BadShape {
        path: p(),
        message: e.to_string(),
    })?;
    let space = check_space(path, declared, space)?;
    parsed
        .vectors
        .iter()
        .enumerate()
        .map(|(index, flat)| {
            ScenarioVector::from_flat(space.clone(), flat).map_err(|e| LoadError::BadRow {
                path: p(),
                row: index + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes scenario vectors in the CSV exchange format.
pub fn scenarios_to_csv(space: &ScenarioSpace, vectors: &[ScenarioVector]) -> String {
    let mut out = format!(
        "k={}\n",
        space
            .block_lens()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    );
    for vector in vectors {
        let row = vector
            .to_flat()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("riskstat-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn csv_round_trip_example() {
        let path = write_temp("basic.csv", "k=2,1\n1,3,2\n");
        let vectors = load_scenarios(&path, None, None).unwrap();
        assert_eq!(vectors.len(), 1);
        assert_eq!(vectors[0].blocks(), &[vec![1.0, 3.0], vec![2.0]]);
    }

    #[test]
    fn csv_empty_data_is_empty_list() {
        let path = write_temp("empty.csv", "k=2,1\n");
        let vectors = load_scenarios(&path, None, None).unwrap();
        assert!(vectors.is_empty());
    }

    #[test]
    fn csv_short_row_names_row_one() {
        let path = write_temp("short.csv", "k=2,1\n1,3\n");
        let err = load_scenarios(&path, None, None).unwrap_err();
        match err {
            LoadError::RowLen {
                row, expected, got, ..
            } => {
                assert_eq!((row, expected, got), (1, 3, 2));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn csv_bad_cell_names_row() {
        let path = write_temp("cell.csv", "k=1\n1\nfoo\n");
        let err = load_scenarios(&path, None, None).unwrap_err();
        match err {
            LoadError::BadCell { row, cell, .. } => {
                assert_eq!(row, 2);
                assert_eq!(cell, "foo");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn csv_missing_header_is_an_error() {
        let path = write_temp("noheader.csv", "1,2,3\n");
        assert!(matches!(
            load_scenarios(&path, None, None),
            Err(LoadError::BadHeader { .. })
        ));
        let path = write_temp("blank.csv", "\n\n");
        assert!(matches!(
            load_scenarios(&path, None, None),
            Err(LoadError::MissingHeader { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let path = write_temp(
            "basic.json",
            r#"{"shape": [2, 1], "vectors": [[1.0, 3.0, 2.0], [0.0, 0.0, 0.0]]}"#,
        );
        let vectors = load_scenarios(&path, None, None).unwrap();
        assert_eq!(vectors.len(), 2);
        assert_eq!(vectors[0].blocks(), &[vec![1.0, 3.0], vec![2.0]]);
    }

    #[test]
    fn declared_shape_must_match_configured_space() {
        let path = write_temp("mismatch.csv", "k=3\n1,2,3\n");
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        assert!(matches!(
            load_scenarios(&path, None, Some(&space)),
            Err(LoadError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn csv_writer_round_trips() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let vectors = vec![ScenarioVector::from_flat(space.clone(), &[1.0, 3.0, 2.0]).unwrap()];
        let text = scenarios_to_csv(&space, &vectors);
        let path = write_temp("rt.csv", &text);
        let back = load_scenarios(&path, None, Some(&space)).unwrap();
        assert_eq!(back, vectors);
    }
}
