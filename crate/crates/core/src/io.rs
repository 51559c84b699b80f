//! File formats: JSONL path ensembles and CSV tables. See FORMATS.md at the
//! repository root for one worked example of each format.

use crate::error::Result;
use crate::grid_paths::Path;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Header record written as the first line of a sample JSONL file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleHeader {
    pub kind: String,
    pub u: f64,
    pub v: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub dx: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub cfg: serde_json::Value,
    pub git: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PathRecord {
    grid: crate::grid_paths::Grid,
    values: Vec<f64>,
}

/// Write a header followed by one path per line.
pub fn write_paths_jsonl<W: Write>(mut w: W, header: &SampleHeader, paths: &[Path]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for p in paths {
        let rec = PathRecord { grid: p.grid, values: p.values.clone() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read back a sample file written by [`write_paths_jsonl`].
pub fn read_paths_jsonl<R: BufRead>(r: R) -> Result<(SampleHeader, Vec<Path>)> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| crate::error::Error::input("empty JSONL file"))??;
    let header: SampleHeader = serde_json::from_str(&first)?;
    let mut paths = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PathRecord = serde_json::from_str(&line)?;
        paths.push(Path::new(rec.grid, rec.values)?);
    }
    Ok((header, paths))
}

/// CSV export of a single path as `x,value` rows.
pub fn write_path_csv<W: Write>(mut w: W, path: &Path) -> Result<()> {
    writeln!(w, "x,value")?;
    for (i, v) in path.values.iter().enumerate() {
        writeln!(w, "{},{}", fmt(path.grid.x(i)), fmt(*v))?;
    }
    Ok(())
}

/// Full-precision float formatting shared by every CSV writer so repeated
/// runs with the same seed emit identical bytes.
pub fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        // shortest representation that round-trips
        let mut s = format!("{v}");
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
            s.push_str(".0");
        }
        s
    }
}

/// `git describe --always --dirty` of the working tree, or "unknown".
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}
