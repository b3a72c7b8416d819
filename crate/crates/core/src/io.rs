//! Reading and writing features, models and tokens.
//!
//! Features come as CSV (one frame per line, optional `#` header) or as raw
//! little-endian `f32` with a JSON sidecar `{"rows": T, "cols": H}` next to
//! it at `<path>.json`. Models are a single JSON document tagged with
//! [`MODEL_FORMAT_VERSION`]. Floats are written in shortest round-trip form,
//! so every `f64` reads back bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::entropy::Partition;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::FeatureGraph;
use crate::quantizer::{Assignment, CodecModel, ModelMetadata, StageModel, TokenSequence};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    RawF32,
}

impl FeatureFormat {
    /// `.f32` and `.bin` files are raw; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("f32" | "bin") => FeatureFormat::RawF32,
            _ => FeatureFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenFormat {
    Csv,
    Json,
}

impl TokenFormat {
    /// `.json` files are JSON; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => TokenFormat::Json,
            _ => TokenFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Sidecar {
    rows: usize,
    cols: usize,
}

/// Path of the shape sidecar for a raw feature file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix> {
    match format {
        FeatureFormat::Csv => parse_features_csv(&read(path)?),
        FeatureFormat::RawF32 => {
            let side = sidecar_path(path);
            let sidecar: Sidecar =
                serde_json::from_slice(&read(&side)?).map_err(|e| Error::Corrupt {
                    path: side.clone(),
                    message: e.to_string(),
                })?;
            parse_features_f32(&read(path)?, sidecar.rows, sidecar.cols)
        }
    }
}

/// Parses CSV feature text. Lines starting with `#` are skipped.
pub fn parse_features_csv(bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: rows,
            col: 0,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Shape(format!(
                "row {rows} has {} columns, expected {expected}",
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: rows,
                col,
                message: format!("not a number: {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            data.push(value);
        }
        rows += 1;
    }
    FeatureMatrix::new(rows, cols.unwrap_or(0), data)
}

/// Decodes little-endian `f32` values into a `rows x cols` matrix.
pub fn parse_features_f32(bytes: &[u8], rows: usize, cols: usize) -> Result<FeatureMatrix> {
    let expected = rows * cols * 4;
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "{rows}x{cols} f32 matrix needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i / cols,
            col: i % cols,
        });
    }
    FeatureMatrix::new(rows, cols, data)
}

/// Writes features. Raw output rounds every value to `f32` and writes the
/// sidecar alongside.
pub fn save_features(x: &FeatureMatrix, path: &Path, format: FeatureFormat) -> Result<()> {
    match format {
        FeatureFormat::Csv => write(path, features_to_csv(x)),
        FeatureFormat::RawF32 => {
            let bytes: Vec<u8> = x
                .as_slice()
                .iter()
                .flat_map(|&v| (v as f32).to_le_bytes())
                .collect();
            write(path, bytes)?;
            let sidecar = Sidecar {
                rows: x.rows(),
                cols: x.cols(),
            };
            write(
                &sidecar_path(path),
                serde_json::to_vec(&sidecar).expect("serializable"),
            )
        }
    }
}

pub fn features_to_csv(x: &FeatureMatrix) -> String {
    let mut out = String::new();
    for row in x.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct StageRecord {
    centroids: Vec<Vec<f64>>,
    member_counts: Vec<usize>,
    anchors: Option<Vec<Vec<f64>>>,
    anchor_labels: Option<Vec<usize>>,
    tau: f64,
    assignment: Assignment,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    dim: usize,
    stages: Vec<StageRecord>,
    metadata: ModelMetadata,
}

/// Serializes a model to its JSON document.
pub fn model_to_json(model: &CodecModel) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        dim: model.dim(),
        stages: model
            .stages()
            .iter()
            .map(|s| StageRecord {
                centroids: s.codebook().centroids.to_rows(),
                member_counts: s.codebook().member_counts.clone(),
                anchors: s.anchors().map(FeatureMatrix::to_rows),
                anchor_labels: s.anchor_labels().map(<[usize]>::to_vec),
                tau: s.tau(),
                assignment: s.assignment(),
            })
            .collect(),
        metadata: model.metadata().clone(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Parses a model document; `path` only labels errors.
pub fn model_from_json(text: &str, path: &Path) -> Result<CodecModel> {
    let corrupt = |message: String| Error::Corrupt {
        path: path.to_path_buf(),
        message,
    };
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let stages = file
        .stages
        .into_iter()
        .map(|r| {
            let codebook = Codebook::new(FeatureMatrix::from_rows(&r.centroids)?, r.member_counts)?;
            let anchors = match (r.anchors, r.anchor_labels) {
                (Some(a), Some(l)) => Some((FeatureMatrix::from_rows(&a)?, l)),
                (None, None) => None,
                _ => {
                    return Err(Error::Shape(
                        "anchors and anchor labels must appear together".into(),
                    ))
                }
            };
            match (anchors, r.assignment) {
                (None, Assignment::Euclidean) => Ok(StageModel::euclidean(codebook)),
                (anchors, assignment) => StageModel::new(codebook, anchors, r.tau, assignment),
            }
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| corrupt(e.to_string()))?;
    CodecModel::new(file.dim, stages, file.metadata).map_err(|e| corrupt(e.to_string()))
}

pub fn save_model(model: &CodecModel, path: &Path) -> Result<()> {
    write(path, model_to_json(model))
}

pub fn load_model(path: &Path) -> Result<CodecModel> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    model_from_json(&text, path)
}

#[derive(Serialize, Deserialize)]
struct TokenFile {
    frames: usize,
    stages: usize,
    tokens: Vec<Vec<u32>>,
}

/// One frame per line, comma-separated, no trailing newline.
pub fn tokens_to_csv(tokens: &TokenSequence) -> String {
    (0..tokens.frames())
        .map(|t| {
            tokens
                .frame(t)
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn tokens_to_json(tokens: &TokenSequence) -> String {
    serde_json::to_string(&TokenFile {
        frames: tokens.frames(),
        stages: tokens.stages(),
        tokens: tokens.to_rows(),
    })
    .expect("tokens serialize")
}

pub fn parse_tokens_csv(text: &str) -> Result<TokenSequence> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(row, line)| {
            line.split(',')
                .enumerate()
                .map(|(col, f)| {
                    f.trim().parse::<u32>().map_err(|_| Error::Parse {
                        row,
                        col,
                        message: format!("not a token: {f:?}"),
                    })
                })
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TokenSequence::from_rows(&rows)
}

pub fn save_tokens(tokens: &TokenSequence, path: &Path, format: TokenFormat) -> Result<()> {
    match format {
        TokenFormat::Csv => write(path, tokens_to_csv(tokens)),
        TokenFormat::Json => write(path, tokens_to_json(tokens)),
    }
}

pub fn load_tokens(path: &Path, format: TokenFormat) -> Result<TokenSequence> {
    let bytes = read(path)?;
    let corrupt = |message: String| Error::Corrupt {
        path: path.to_path_buf(),
        message,
    };
    let text = std::str::from_utf8(&bytes).map_err(|e| corrupt(e.to_string()))?;
    match format {
        TokenFormat::Csv => parse_tokens_csv(text),
        TokenFormat::Json => {
            let file: TokenFile = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
            let tokens = TokenSequence::from_rows(&file.tokens)?;
            if (tokens.frames(), tokens.stages()) != (file.frames, file.stages) {
                return Err(corrupt(format!(
                    "declared {}x{} tokens, found {}x{}",
                    file.frames,
                    file.stages,
                    tokens.frames(),
                    tokens.stages()
                )));
            }
            Ok(tokens)
        }
    }
}

/// Writes `i,j,weight` for every edge with `i < j`.
pub fn save_edge_list(g: &FeatureGraph, path: &Path) -> Result<()> {
    let mut out = String::from("# i,j,weight\n");
    for (i, j, w) in g.edges() {
        out.push_str(&format!("{i},{j},{w}\n"));
    }
    write(path, out)
}

/// Writes `{"clusters": [[...], ...]}`.
pub fn save_partition(p: &Partition, path: &Path) -> Result<()> {
    write(
        path,
        serde_json::json!({ "clusters": p.clusters() }).to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_identity_rows() {
        let x = parse_features_csv(b"1,0\n0,1").unwrap();
        assert_eq!((x.rows(), x.cols()), (2, 2));
        assert_eq!(x.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_header_and_errors() {
        let x = parse_features_csv(b"# a,b\n1.5, -2\n").unwrap();
        assert_eq!(x.as_slice(), &[1.5, -2.0]);
        assert!(matches!(
            parse_features_csv(b"1,2\n3,x"),
            Err(Error::Parse { row: 1, col: 1, .. })
        ));
        assert!(matches!(
            parse_features_csv(b"1,inf"),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            parse_features_csv(b"1,2\n3"),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn raw_shape_arithmetic() {
        let bytes: Vec<u8> = [1.0f32, 2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let x = parse_features_f32(&bytes, 1, 2).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
        assert!(matches!(
            parse_features_f32(&bytes, 2, 2),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn token_csv_layout() {
        let t = TokenSequence::from_rows(&[[3u32, 1], [0, 2]]).unwrap();
        assert_eq!(tokens_to_csv(&t), "3,1\n0,2");
        assert_eq!(parse_tokens_csv("3,1\n0,2").unwrap(), t);
        assert!(parse_tokens_csv("").is_err());
    }

    #[test]
    fn version_is_checked_first() {
        let err = model_from_json(r#"{"format_version": 2}"#, Path::new("m.json")).unwrap_err();
        assert!(matches!(
            err,
            Error::Version {
                found: 2,
                expected: 1,
                ..
            }
        ));
        let err =
            model_from_json(r#"{"format_version": 1, "dim": "#, Path::new("m.json")).unwrap_err();
        assert!(matches!(err, Error::Corrupt { .. }));
    }
}
