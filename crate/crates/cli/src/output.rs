use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

/// Formats a float with 12 significant digits, then prints the shortest
/// decimal that round-trips the rounded value.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Accumulates CSV rows in memory; the caller writes them out atomically.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut c = Csv { buf: String::new(), width: header.len() };
        c.row(header);
        c
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(cell.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Output directory that tracks the files written into it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write(&mut self, rel: &str, contents: &str) -> io::Result<()> {
        let target = self.root.join(rel);
        let dir = target.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| e.error)?;
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub struct Manifest {
    fields: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &str, started: f64) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        fields.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        fields.insert("started_unix".into(), json!(started));
        Manifest { fields }
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.fields.insert(key.into(), value);
        self
    }

    /// Adds end time and output list, then writes `rel` atomically.
    pub fn finish(mut self, out: &mut OutDir, rel: &str) -> io::Result<()> {
        self.fields.insert("finished_unix".into(), json!(unix_seconds()));
        let mut outputs: Vec<String> = out.written().to_vec();
        outputs.push(rel.to_string());
        self.fields.insert("outputs".into(), json!(outputs));
        let mut text = serde_json::to_string_pretty(&Value::Object(self.fields)).map_err(io::Error::other)?;
        text.push('\n');
        out.write(rel, &text)
    }
}

/// One value per line.
pub fn lines<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for v in values {
        let _ = writeln!(s, "{}", v.to_string());
    }
    s
}
