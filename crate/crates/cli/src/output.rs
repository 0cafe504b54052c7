//! Output collection: each command assembles named documents, which are
//! written once, atomically, in the selected formats. CSV cells are rendered
//! through the same JSON number formatter so both mirrors carry identical
//! digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{CliError, Format};

/// Formats a float exactly as serde_json prints it.
pub fn fmt_f64(x: f64) -> String {
    serde_json::Number::from_f64(x)
        .map(|n| n.to_string())
        .unwrap_or_else(|| "null".to_string())
}

/// A CSV table: header plus rows of pre-rendered cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "ragged table row");
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// One output document with a JSON body and optional CSV mirrors.
pub struct Document {
    pub stem: String,
    pub json: serde_json::Value,
    /// (suffix, table): written as `<stem><suffix>.csv`.
    pub tables: Vec<(String, Table)>,
}

pub struct OutputSet {
    documents: Vec<Document>,
    /// Verbatim files (e.g. JSON-lines streams) written in every format.
    extra_files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new() -> Self {
        OutputSet {
            documents: Vec::new(),
            extra_files: Vec::new(),
        }
    }

    pub fn push(&mut self, doc: Document) {
        self.documents.push(doc);
    }

    pub fn with_extra_file(mut self, name: &str, content: String) -> Self {
        self.extra_files.push((name.to_string(), content));
        self
    }

    /// Writes every document; files land complete or not at all.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for doc in &self.documents {
            if matches!(format, Format::Json | Format::Both) {
                let path = dir.join(format!("{}.json", doc.stem));
                let body = serde_json::to_string_pretty(&doc.json)
                    .map_err(|e| CliError::Io(format!("serialize {}: {e}", doc.stem)))?;
                atomic_write(&path, &(body + "\n"))?;
                written.push(path);
            }
            if matches!(format, Format::Csv | Format::Both) {
                for (suffix, table) in &doc.tables {
                    let path = dir.join(format!("{}{}.csv", doc.stem, suffix));
                    atomic_write(&path, &table.render())?;
                    written.push(path);
                }
            }
        }
        for (name, content) in &self.extra_files {
            let path = dir.join(name);
            atomic_write(&path, content)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn atomic_write(path: &Path, content: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot move into {}: {e}", path.display())))?;
    Ok(())
}
