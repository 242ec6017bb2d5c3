use std::io::Write;
use std::path::Path;

use traceforge_core::formats::{parse_event_lines_from, parse_xes_with, read_dataset_xes};
use traceforge_core::{Dataset, MetamodelSchema, ParseMode, ParseReport, TraceSet, XesKeys};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xes,
    Lines,
}

impl Format {
    pub fn detect(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("xes") | Some("xml") => Format::Xes,
            _ => Format::Lines,
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::write(path, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::write(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::read(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::input("json", format!("{}: {e}", path.display())))
}

pub fn read_schema(path: &Path) -> Result<MetamodelSchema, CliError> {
    let schema: MetamodelSchema = read_json(path)?;
    schema.validate()?;
    Ok(schema)
}

fn file_label(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace-1").to_string()
}

/// Reads a trace set from XES or event-line text. A line file holds one
/// trace named after the file stem.
pub fn read_traces(
    path: &Path,
    format: Format,
    mode: ParseMode,
    keys: &XesKeys,
) -> Result<(TraceSet, ParseReport), CliError> {
    let (set, mut report) = match format {
        Format::Xes => parse_xes_with(&read_bytes(path)?, mode, keys)?,
        Format::Lines => {
            let (trace, report) = parse_event_lines_from(&read_text(path)?, mode, &file_label(path))?;
            (TraceSet::new("", vec![trace]), report)
        }
    };
    report.source = path.display().to_string();
    set.validate()?;
    Ok((set, report))
}

pub fn read_dataset(path: &Path, keys: &XesKeys) -> Result<Dataset, CliError> {
    let name = file_label(path);
    let dataset = match Format::detect(path) {
        Format::Xes => read_dataset_xes(&read_bytes(path)?, ParseMode::Lenient, keys, &name)?.0,
        Format::Lines => {
            let (set, _) = read_traces(path, Format::Lines, ParseMode::Lenient, keys)?;
            Dataset::from_traces(name, set, None)
        }
    };
    dataset.trace_set.validate()?;
    Ok(dataset)
}
