//! Result rows and their CSV / JSON forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Version string of this build: crate version plus `git describe`.
pub fn build_id() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("SPARSE_KSUM_GIT_DESCRIBE"))
}

/// One flat record: what was run, with which parameters and seed, and what came out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub build: String,
    /// Arguments that reproduce the run (output flags removed).
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, String>,
}

impl ResultRow {
    pub fn new(argv: &[String], seed: Option<u64>) -> Self {
        ResultRow {
            schema_version: SCHEMA_VERSION,
            build: build_id(),
            argv: argv.to_vec(),
            seed,
            params: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn metric(&mut self, key: &str, value: impl ToString) {
        self.metrics.insert(key.into(), value.to_string());
    }

    /// Metrics that must reproduce exactly; wall-clock timings are excluded.
    pub fn stable_metrics(&self) -> BTreeMap<&str, &str> {
        self.metrics
            .iter()
            .filter(|(k, _)| !k.starts_with("time_"))
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect()
    }
}

const FIXED: [&str; 4] = ["schema_version", "build", "seed", "argv"];

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let params: BTreeSet<&String> = rows.iter().flat_map(|r| r.params.keys()).collect();
    let metrics: BTreeSet<&String> = rows.iter().flat_map(|r| r.metrics.keys()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = FIXED
        .iter()
        .map(|s| s.to_string())
        .chain(params.iter().map(|p| format!("param:{p}")))
        .chain(metrics.iter().map(|m| format!("metric:{m}")))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![
            row.schema_version.to_string(),
            row.build.clone(),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            serde_json::to_string(&row.argv)?,
        ];
        rec.extend(params.iter().map(|p| row.params.get(*p).cloned().unwrap_or_default()));
        rec.extend(metrics.iter().map(|m| row.metrics.get(*m).cloned().unwrap_or_default()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).map_err(|e| Error::Config(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |name: &str| header.iter().position(|h| h == name).and_then(|i| rec.get(i)).unwrap_or("");
        let version = get("schema_version")
            .parse()
            .map_err(|_| Error::Config("row has no schema_version".into()))?;
        let seed = match get("seed") {
            "" => None,
            s => Some(s.parse().map_err(|_| Error::Config(format!("bad seed {s:?}")))?),
        };
        let mut row = ResultRow {
            schema_version: version,
            build: get("build").into(),
            argv: serde_json::from_str(get("argv"))?,
            seed,
            params: BTreeMap::new(),
            metrics: BTreeMap::new(),
        };
        for (h, v) in header.iter().zip(rec.iter()) {
            if v.is_empty() {
                continue;
            }
            if let Some(p) = h.strip_prefix("param:") {
                row.params.insert(p.into(), v.into());
            } else if let Some(m) = h.strip_prefix("metric:") {
                row.metrics.insert(m.into(), v.into());
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Reads rows from a JSON object, a JSON array or CSV.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        Ok(serde_json::from_str(&text)?)
    } else if trimmed.starts_with('{') {
        Ok(vec![serde_json::from_str(&text)?])
    } else {
        rows_from_csv(&text)
    }
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
