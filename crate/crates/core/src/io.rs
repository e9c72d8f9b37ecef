//! Correspondence files (schema version `"1"`).
//!
//! A JSON document:
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "image_size": [1280, 720],
//!   "ground_truth": { "fx": 1000.0, "fy": 1000.0, "cx": 640.0, "cy": 360.0 },
//!   "initial_intrinsics": { "fx": 1020.0, "fy": 985.0, "cx": 650.0, "cy": 352.0 },
//!   "triplets": [
//!     { "views": ["img_000", "img_001", "img_002"],
//!       "triples": [[x, y, x2, y2, x3, y3], ...] }
//!   ]
//! }
//! ```
//!
//! `ground_truth` and `initial_intrinsics` are optional. Every triplet block
//! needs at least seven triples of six finite numbers. Numbers are written
//! with shortest round-trip formatting, so export and re-import is lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::MIN_TRIPLES;
use crate::geometry::{Intrinsics, PointTriple};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletBlock {
    pub views: [String; 3],
    pub triples: Vec<[f64; 6]>,
}

impl TripletBlock {
    pub fn new(views: [String; 3], triples: &[PointTriple]) -> Self {
        Self { views, triples: triples.iter().map(|t| t.to_array()).collect() }
    }

    pub fn point_triples(&self) -> Vec<PointTriple> {
        self.triples.iter().map(|&t| PointTriple::from_array(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceFile {
    pub schema_version: String,
    pub image_size: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Intrinsics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_intrinsics: Option<Intrinsics>,
    pub triplets: Vec<TripletBlock>,
}

impl CorrespondenceFile {
    pub fn new(image_size: [u32; 2], triplets: Vec<TripletBlock>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            image_size,
            ground_truth: None,
            initial_intrinsics: None,
            triplets,
        }
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        let file: Self = serde_json::from_str(text).map_err(|e| FileError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("correspondence file is always serializable")
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|source| FileError::Io { path: path.display().to_string(), source })
    }

    pub fn validate(&self) -> Result<(), FileError> {
        let invalid = |field: String, message: String| Err(FileError::Invalid { field, message });
        if self.schema_version != SCHEMA_VERSION {
            return invalid(
                "schema_version".into(),
                format!("unsupported version {:?}, expected {SCHEMA_VERSION:?}", self.schema_version),
            );
        }
        for (name, k) in [("ground_truth", &self.ground_truth), ("initial_intrinsics", &self.initial_intrinsics)] {
            if let Some(k) = k {
                if let Err(e) = k.validate() {
                    return invalid(name.into(), e.to_string());
                }
            }
        }
        if self.triplets.is_empty() {
            return invalid("triplets".into(), "at least one triplet block is required".into());
        }
        for (b, block) in self.triplets.iter().enumerate() {
            if block.triples.len() < MIN_TRIPLES {
                return invalid(
                    format!("triplets[{b}].triples"),
                    format!("{} triples, at least {MIN_TRIPLES} required", block.triples.len()),
                );
            }
            if let Some(i) = block.triples.iter().position(|t| !t.iter().all(|v| v.is_finite())) {
                return invalid(format!("triplets[{b}].triples[{i}]"), "non-finite coordinate".into());
            }
        }
        Ok(())
    }
}
