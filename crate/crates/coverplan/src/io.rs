//! Versioned JSON files.
//!
//! Every file carries a top-level `"schema": 1`. Points are `[x, y]` arrays
//! and polygons are `{"vertices": [[x, y], ...]}` in either orientation.

use std::fs;
use std::path::{Path, PathBuf};

use coverplan_core::geometry::{Point2, Polygon};
use coverplan_core::sim::{LidarSpec, RobotSpec, SimReport, WorldEvent, WorldSpec};
use coverplan_core::stitch::{ComparisonRow, CoveragePlan};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vertices: Vec<Point2>,
}

impl PolygonFile {
    pub fn new(name: Option<String>, polygon: &Polygon) -> Self {
        PolygonFile {
            schema: SCHEMA_VERSION,
            name,
            vertices: polygon.vertices().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub schema: u32,
    pub boundary: Polygon,
    #[serde(default)]
    pub events: Vec<WorldEvent>,
    #[serde(default)]
    pub lidar: LidarSpec,
    #[serde(default)]
    pub robot: RobotSpec,
}

impl WorldFile {
    pub fn into_spec(self) -> WorldSpec {
        WorldSpec {
            boundary: self.boundary,
            events: self.events,
            lidar: self.lidar,
            robot: self.robot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub polygon: Polygon,
    pub msa_edge: usize,
    pub span: f64,
    pub sweep_count: usize,
    pub turn_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub schema: u32,
    pub radius: f64,
    pub tolerance: f64,
    pub start: Point2,
    /// Polygon after simplification; the plan was made on this.
    pub polygon: Polygon,
    pub cells: Vec<CellRecord>,
    pub plan: CoveragePlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classic: Option<CoveragePlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<CoveragePlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: u32,
    pub radius: f64,
    pub resolution: f64,
    #[serde(flatten)]
    pub report: SimReport,
}

/// Reads a JSON file, reporting the JSON pointer of the first field that
/// fails to parse and rejecting unknown schema versions.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        pointer: String::new(),
        message: e.to_string(),
    })?;
    match value.get("schema") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => {
            return Err(CliError::Schema {
                path: path.to_path_buf(),
                pointer: "/schema".into(),
                message: format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
            })
        }
        None => {
            return Err(CliError::Schema {
                path: path.to_path_buf(),
                pointer: "/schema".into(),
                message: "missing field `schema`".into(),
            })
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        pointer: to_pointer(e.path()),
        message: e.into_inner().to_string(),
    })
}

fn to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `*.json` files directly under `dir`, sorted by file name.
pub fn json_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
