use std::fs::{self, File};
use std::path::{Path, PathBuf};

use pspin_core::MixtureSpec;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// Version of the JSON and CSV layouts written by every subcommand.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides the output directory when `--out`
/// is absent.
pub const OUT_DIR_ENV: &str = "PSPIN_OUT_DIR";

pub struct Outputs {
    dir: PathBuf,
    stem: String,
}

impl Outputs {
    pub fn new(flag: Option<&Path>, config: &Path) -> Self {
        let dir = match flag {
            Some(d) => d.to_path_buf(),
            None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        };
        let stem = config.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        Self { dir, stem }
    }

    /// `configured`, or `<config stem>_<command>.<ext>`, resolved against the
    /// output directory.
    pub fn path(&self, configured: Option<&str>, command: &str, ext: &str) -> PathBuf {
        match configured {
            Some(p) => self.dir.join(p),
            None => self.dir.join(format!("{}_{command}.{ext}", self.stem)),
        }
    }
}

/// `<stem>_<suffix>.csv` next to `base`.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn prepare(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    prepare(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        prepare(path)?;
        let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file);
        writer.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { path: path.to_path_buf(), writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::Io(format!("{}: {e}", self.path.display())))
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::Io(format!("{}: {e}", self.path.display())))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// As [`num`], empty for `None`.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn mixture_json(m: &MixtureSpec) -> Value {
    let coeffs: Vec<Value> = m.coeffs().map(|(p, g)| json!({ "p": p, "gamma": g })).collect();
    json!({ "coefficients": coeffs, "h": m.h(), "even": m.is_even() })
}

/// Common header of every JSON document.
pub fn header(command: &str, config: &Path, m: &MixtureSpec) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    map.insert("config".into(), json!(config.display().to_string()));
    map.insert("mixture".into(), mixture_json(m));
    map
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}
