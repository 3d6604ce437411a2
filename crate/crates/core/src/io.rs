//! Result directories and atomic file output.
//!
//! A P-function run writes `grid_exact.*`, `grid_min.*` and `meta.json` into
//! its own directory, plus `margins.csv` for Monte Carlo runs. Files are
//! written next to their target and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::experiments::Computed;
use crate::pfunction::{PFunction, Probability};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(crate::Error::InvalidConfig(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json_atomic(path: &Path, value: &Value) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn grid_bytes<T: Probability>(p: &PFunction<T>, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            p.write_csv(&mut buf)?;
            Ok(buf)
        }
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(&p.to_json(true))?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

/// Writes one P-function run into `dir`; returns the files written.
pub fn write_run(dir: &Path, computed: &Computed, format: Format, extra_meta: Value) -> Result<Vec<PathBuf>> {
    let ext = format.extension();
    let exact_path = dir.join(format!("grid_exact.{ext}"));
    let min_path = dir.join(format!("grid_min.{ext}"));
    let (exact_bytes, min_bytes) = match computed.rational() {
        Some(p) => (grid_bytes(p, format)?, grid_bytes(&p.min_view(), format)?),
        None => {
            let p = computed.grid();
            (grid_bytes(&p, format)?, grid_bytes(&p.min_view(), format)?)
        }
    };
    write_atomic(&exact_path, &exact_bytes)?;
    write_atomic(&min_path, &min_bytes)?;
    let mut written = vec![exact_path, min_path];
    let grid = computed.grid();
    let mut meta = json!({
        "strategy": grid.strategy(),
        "config": grid.config(),
        "provenance": grid.provenance(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    match computed {
        Computed::Estimated(e) => {
            let path = dir.join("margins.csv");
            let mut buf = Vec::new();
            e.write_margins_csv(&mut buf)?;
            write_atomic(&path, &buf)?;
            written.push(path);
        }
        Computed::Oracle { placements, .. } => meta["placements"] = json!(placements),
        Computed::Exact(_) => {}
    }
    merge(&mut meta, extra_meta);
    let meta_path = dir.join("meta.json");
    write_json_atomic(&meta_path, &meta)?;
    written.push(meta_path);
    Ok(written)
}

/// Shallow merge of object `extra` into `base`.
pub fn merge(base: &mut Value, extra: Value) {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_pfunction, Mode};
    use crate::game::GameConfig;
    use crate::mc::SamplingPlan;
    use crate::strategy::StrategySpec;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn run_layout() {
        let dir = tempfile::tempdir().unwrap();
        let c = GameConfig::full(4).unwrap();
        let plan = SamplingPlan::new(50, 1);
        let mc = run_pfunction(&StrategySpec::ks0(), &c, &plan, Mode::Mc).unwrap();
        let files = write_run(dir.path(), &mc, Format::Csv, json!({"seed": 1})).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["grid_exact.csv", "grid_min.csv", "margins.csv", "meta.json"]);
        let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
        assert_eq!(meta["strategy"], "ks0");
        assert_eq!(meta["seed"], 1);
        assert_eq!(meta["provenance"]["plan"]["s"], 50);

        let ex = run_pfunction(&StrategySpec::ks0(), &c, &plan, Mode::Exact).unwrap();
        write_run(dir.path(), &ex, Format::Json, json!({})).unwrap();
        let grid: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("grid_exact.json")).unwrap()).unwrap();
        assert_eq!(grid["exact"][3][4], "1/1");
    }
}
