//! CSV / JSON writers and plot-data files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv|json)")),
        }
    }
}

/// Free-form provenance written ahead of the records. Keys are sorted, so
/// output is byte-identical across runs.
pub type Metadata = BTreeMap<String, serde_json::Value>;

/// Metadata every artifact carries: crate name and version.
pub fn base_metadata() -> Metadata {
    let mut m = Metadata::new();
    m.insert("artifact".into(), env!("CARGO_PKG_NAME").into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A record with a fixed column schema.
pub trait Tabular: Serialize {
    const HEADER: &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write records as CSV (metadata as leading `#` lines) or JSON.
pub fn emit_results<R: Tabular>(
    records: &[R],
    destination: &Path,
    format: Format,
    metadata: &Metadata,
) -> Result<()> {
    if let Some(parent) = destination.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(destination).map_err(io_err(destination))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            for (k, v) in metadata {
                writeln!(out, "# {k}: {v}").map_err(io_err(destination))?;
            }
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |source| Error::Csv {
                path: destination.to_path_buf(),
                source,
            };
            w.write_record(R::HEADER).map_err(csv_err)?;
            for r in records {
                w.write_record(r.row()).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(destination))?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, R> {
                metadata: &'a Metadata,
                records: &'a [R],
            }
            serde_json::to_writer_pretty(&mut out, &Doc { metadata, records }).map_err(
                |source| Error::Json {
                    path: destination.to_path_buf(),
                    source,
                },
            )?;
            writeln!(out).map_err(io_err(destination))?;
            out.flush().map_err(io_err(destination))?;
        }
    }
    Ok(())
}

/// Write two-column `x y` series, one file per entry, with `#` headers.
pub fn write_columns(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = (f64, f64)>,
    metadata: &Metadata,
) -> Result<PathBuf> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}").map_err(io_err(path))?;
    }
    writeln!(out, "# {}", header.join(" ")).map_err(io_err(path))?;
    for (x, y) in rows {
        writeln!(out, "{} {}", fmt_f64(x), fmt_f64(y)).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}
