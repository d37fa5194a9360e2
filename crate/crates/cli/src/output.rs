//! Artifact directory: CSV tables, JSON documents, the run log and
//! `metadata.json`. CSV bodies depend only on the configuration and seed;
//! timestamps and host details live in the metadata alone.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub struct RunDir {
    root: PathBuf,
    log: Mutex<File>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<RunDir> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let log = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(root.join("run.log"))
            .context("opening run.log")?;
        Ok(RunDir { root: root.to_path_buf(), log: Mutex::new(log) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Appends a line to run.log (flushed immediately so that failed runs
    /// keep their partial log) and echoes it to stderr.
    pub fn log(&self, msg: &str) {
        eprintln!("{msg}");
        if let Ok(mut f) = self.log.lock() {
            let _ = writeln!(f, "{msg}");
            let _ = f.flush();
        }
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<CsvSink> {
        CsvSink::create(&self.path(name), header)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(value)? + "\n")?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

/// CSV writer: comma separated, LF line endings, header row, shortest
/// round-trip decimal representation of floats.
pub struct CsvSink {
    w: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvSink> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(f));
        w.write_record(header)?;
        Ok(CsvSink { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn floats(&mut self, values: &[f64]) -> Result<()> {
        self.row(values.iter().map(|v| fmt_f64(*v)))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Formats integers without a fractional part and everything else in the
/// shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Commit of the working tree the binary runs in, if it is a git checkout.
pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn unix_time() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
