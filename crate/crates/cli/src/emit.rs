//! Report files: `report.json`, one CSV per curve, `manifest.json` and
//! `runtime.txt`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use anilap_core::harness::ExperimentReport;

use crate::error::CliError;

/// Floats with 17 significant digits, enough to round-trip every `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Pretty JSON whose floats are printed by [`fmt17`].
struct Json17<'a>(PrettyFormatter<'a>);

impl Formatter for Json17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Json17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("reports always serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// File name for a curve; anything but ASCII alphanumerics becomes `_`.
pub fn curve_file(name: &str) -> String {
    let stem: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{stem}.csv")
}

fn curve_csv(curve: &anilap_core::harness::Curve) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&curve.columns)?;
    for row in &curve.rows {
        w.write_record(row.iter().map(|v| fmt17(*v)))?;
    }
    Ok(w.into_inner().expect("writing to memory cannot fail"))
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub experiment: &'a str,
    pub seed: u64,
    pub config_file: Option<String>,
    /// The config as parsed, in canonical form; rerunning it reproduces the report.
    pub config: String,
    pub conventions: Vec<&'static str>,
    pub files: Vec<String>,
}

/// Writes every report file into `dir` and returns the paths written.
pub fn emit_report(
    report: &ExperimentReport,
    manifest: &mut Manifest,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let p = dir.join(name);
        write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("report.json", to_json(report).as_bytes())?;
    let mut files = vec!["report.json".to_string()];
    for curve in &report.curves {
        let name = curve_file(&curve.name);
        let bytes = curve_csv(curve).map_err(|e| CliError::Write {
            path: dir.join(&name),
            source: io::Error::other(e),
        })?;
        put(&name, &bytes)?;
        files.push(name);
    }
    let runtime = report.runtime_seconds.map_or("unknown\n".to_string(), |s| format!("{s:.3}\n"));
    put("runtime.txt", runtime.as_bytes())?;
    files.push("runtime.txt".into());
    files.push("manifest.json".into());
    manifest.files = files;
    put("manifest.json", to_json(manifest).as_bytes())?;
    Ok(written)
}
