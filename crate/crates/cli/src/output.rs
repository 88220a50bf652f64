//! Byte-stable CSV and JSON emission. Every file carries the toolkit version
//! and the config hash. Files are assembled in memory and written only after
//! the whole scenario succeeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identity stamped into every output.
#[derive(Clone, Debug, Serialize)]
pub struct Stamp {
    pub version: String,
    pub config_sha256: String,
}

impl Stamp {
    /// Hash of the config bytes plus any command-line seed override.
    pub fn new(config_bytes: &[u8], seed_override: Option<u64>) -> Self {
        let mut h = Sha256::new();
        h.update(config_bytes);
        if let Some(s) = seed_override {
            h.update(format!("\n--seed {s}").as_bytes());
        }
        let digest = h.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Stamp { version: TOOLKIT_VERSION.to_string(), config_sha256: hex }
    }
}

/// Shortest round-trip text of a double. Plain notation in the ordinary
/// range, exponent notation for very large or very small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        if v == 0.0 {
            return "0".into();
        }
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A CSV table under construction.
pub struct Csv {
    columns: Vec<String>,
    rows: Vec<String>,
}

pub enum Cell {
    F(f64),
    I(u64),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl Csv {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Csv { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        let text: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => fmt_f64(v),
                Cell::I(v) => v.to_string(),
                Cell::Empty => String::new(),
            })
            .collect();
        self.rows.push(text.join(","));
    }

    pub fn render(&self, stamp: &Stamp) -> String {
        let mut out = format!("# settomo {} config_sha256={}\n", stamp.version, stamp.config_sha256);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    toolkit: &'a Stamp,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a `toolkit` block in front. `body` must serialize as a map.
pub fn stamped_json<T: Serialize>(stamp: &Stamp, body: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Stamped { toolkit: stamp, body })?;
    s.push('\n');
    Ok(s)
}

/// Named output files, written together.
#[derive(Default)]
pub struct OutputSet {
    pub files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }

    /// Write every file through a temporary name and rename into place.
    pub fn write_all(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut staged = Vec::new();
        for (name, body) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(e) = std::fs::write(&tmp, body) {
                for (t, _) in &staged {
                    let _ = std::fs::remove_file(t);
                }
                let _ = std::fs::remove_file(&tmp);
                return Err(e);
            }
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, dst) in staged {
            std::fs::rename(&tmp, &dst)?;
            written.push(dst);
        }
        Ok(written)
    }
}
