//! CSV and JSON-lines writers for result rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

pub fn write_rows<S: Serialize, W: Write>(rows: &[S], w: W, format: Format) -> Result<(), HarnessError> {
    match format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            for r in rows {
                wr.serialize(r)?;
            }
            wr.flush()?;
        }
        Format::Jsonl => {
            let mut w = w;
            for r in rows {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_rows_to<S: Serialize>(rows: &[S], path: &Path, format: Format) -> Result<(), HarnessError> {
    write_rows(rows, BufWriter::new(File::create(path)?), format)
}

/// `dir/name.tag.ext` for `dir/name.ext`.
pub fn sibling(path: &Path, tag: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "result".into());
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format.extension().into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}
