//! Report files. The first line of every CSV and JSON file carries the
//! generation time and runtime; everything after it is a pure function of
//! the configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const TOOL: &str = concat!("polaron ", env!("CARGO_PKG_VERSION"));

pub struct Emitter {
    dir: PathBuf,
    config_lines: Vec<String>,
    started: Instant,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Emitter {
    pub fn new(dir: &Path, config_lines: &[String]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Emitter { dir: dir.to_path_buf(), config_lines: config_lines.to_vec(), started: Instant::now() })
    }

    fn runtime(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn save(&mut self, name: &str, text: String) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// CSV with `#` comment lines for the header and the configuration echo.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut text = format!("# {TOOL} | generated_unix={} | runtime_s={:.3}\n", unix_now(), self.runtime());
        for line in &self.config_lines {
            text.push_str(&format!("# config: {line}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        text.push_str(std::str::from_utf8(&w.into_inner()?)?);
        self.save(name, text)
    }

    /// A compact header object on the first line, then the pretty-printed
    /// body `{config, report}`.
    pub fn json<T: Serialize>(&mut self, name: &str, report: &T, timings: Value) -> Result<PathBuf> {
        let header = json!({
            "tool": TOOL,
            "generated_unix": unix_now(),
            "runtime_s": self.runtime(),
            "timings_s": timings,
        });
        let body = json!({ "config": self.config_lines, "report": report });
        let text = format!("{}\n{}\n", serde_json::to_string(&header)?, serde_json::to_string_pretty(&body)?);
        self.save(name, text)
    }

    pub fn svg(&mut self, name: &str, svg: String) -> Result<PathBuf> {
        self.save(name, svg)
    }
}

/// Fixed-format float for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}
