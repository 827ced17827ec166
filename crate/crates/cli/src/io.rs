//! File plumbing shared by the commands. Paths are checked up front so a
//! long run never dies on a typo at the end.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use casad::frame::{
    extract_byte_series, read_annotations, read_log, Annotation, ByteSeries, CanId, FrameLog, ReadOptions,
};

use crate::error::{CliError, CliResult, Context};

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing --{flag} (flag or config file)")))
}

pub fn input_file(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::usage(format!("input file {} does not exist", path.display())))
    }
}

pub fn output_file(path: &Path) -> CliResult<&Path> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(path),
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .context(format!("creating {}", path.display()))
}

/// Annotation file that sits next to a log: `run.log` → `run.annotations.csv`.
pub fn sidecar(log: &Path) -> PathBuf {
    log.with_extension("annotations.csv")
}

/// Parses hex identifiers with or without `0x`; no identifiers means the whole bus.
pub fn parse_ids(ids: &[String]) -> CliResult<Option<BTreeSet<CanId>>> {
    if ids.is_empty() {
        return Ok(None);
    }
    let mut set = BTreeSet::new();
    for text in ids {
        let digits = text.trim();
        let digits = digits
            .strip_prefix("0x")
            .or_else(|| digits.strip_prefix("0X"))
            .unwrap_or(digits);
        let raw = u32::from_str_radix(digits, 16)
            .map_err(|_| CliError::usage(format!("--ids: `{text}` is not a hex identifier")))?;
        set.insert(CanId::from_raw(raw).map_err(|e| CliError::usage(format!("--ids: {e}")))?);
    }
    Ok(Some(set))
}

pub struct LoadedLog {
    pub log: FrameLog,
    pub series: ByteSeries,
}

pub fn load_log(path: &Path, skip_bad_lines: bool, ids: Option<&BTreeSet<CanId>>) -> CliResult<LoadedLog> {
    let file = File::open(path).context(format!("opening {}", path.display()))?;
    let options = ReadOptions { skip_bad_lines };
    let outcome = read_log(BufReader::new(file), &path.display().to_string(), options)
        .context(format!("reading {}", path.display()))?;
    for (line, err) in &outcome.skipped {
        log::warn!("{}:{line}: skipped: {err}", path.display());
    }
    if !outcome.skipped.is_empty() {
        println!("skipped {} malformed lines", outcome.skipped.len());
    }
    let series = extract_byte_series(&outcome.log, ids).context(format!("extracting bytes from {}", path.display()))?;
    Ok(LoadedLog {
        log: outcome.log,
        series,
    })
}

pub fn load_annotations(path: &Path) -> CliResult<Vec<Annotation>> {
    let file = File::open(path).context(format!("opening {}", path.display()))?;
    read_annotations(BufReader::new(file)).context(format!("reading {}", path.display()))
}

/// Seconds from the start of the log to the frame carrying byte `index`.
pub fn byte_time(series: &ByteSeries, index: usize) -> f64 {
    series
        .timestamp_us(index)
        .map_or(f64::NAN, casad::frame::micros_to_secs)
}
