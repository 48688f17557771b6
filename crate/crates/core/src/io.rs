//! Dataset files and plot-data export.
//!
//! Datasets use the UCR archive layout: one series per line, label first,
//! values after, separated by commas, tabs or (older archive releases) runs
//! of spaces. Labels are kept as the exact token found in the file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::series::{LabeledSeries, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delimiter {
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains('\t') {
            Delimiter::Tab
        } else if line.contains(',') {
            Delimiter::Comma
        } else {
            Delimiter::Whitespace
        }
    }

    fn separator(self) -> &'static str {
        match self {
            Delimiter::Comma => ",",
            Delimiter::Tab => "\t",
            Delimiter::Whitespace => " ",
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "tab" | "\\t" | "\t" => Ok(Delimiter::Tab),
            "whitespace" | "space" | " " => Ok(Delimiter::Whitespace),
            other => Err(format!("unknown delimiter '{other}' (comma, tab, whitespace)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub records: Vec<LabeledSeries>,
    pub path: PathBuf,
    pub delimiter: Delimiter,
}

impl DatasetFile {
    pub fn rows(&self) -> usize {
        self.records.len()
    }

    /// `(shortest, longest)` series length.
    pub fn length_range(&self) -> (usize, usize) {
        let lens = self.records.iter().map(|r| r.series.len());
        (lens.clone().min().unwrap_or(0), lens.max().unwrap_or(0))
    }

    pub fn require_equal_length(&self) -> Result<usize> {
        match self.length_range() {
            (a, b) if a == b => Ok(a),
            (a, b) => Err(contract(format!(
                "{}: series lengths vary from {a} to {b}",
                self.path.display()
            ))),
        }
    }

    /// Z-normalize every series. Only ever applied at load time.
    pub fn z_normalize(&mut self) {
        for r in &mut self.records {
            r.series = r.series.z_normalized();
        }
    }

    /// Name derived from the file stem, with a UCR `_TRAIN`/`_TEST` suffix removed.
    pub fn name(&self) -> String {
        dataset_name(&self.path)
    }
}

pub fn dataset_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_TEST"))
        .unwrap_or(&stem)
        .to_string()
}

pub fn parse_ucr(path: impl AsRef<Path>, delimiter: Option<Delimiter>) -> Result<DatasetFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_ucr_str(&text, path, delimiter)
}

pub fn parse_ucr_str(text: &str, path: &Path, delimiter: Option<Delimiter>) -> Result<DatasetFile> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&str> = text.lines().collect();
    let last_content = lines.iter().rposition(|l| !l.trim().is_empty());
    let Some(last_content) = last_content else {
        return Err(err(1, "file contains no rows".into()));
    };
    let delimiter = delimiter.unwrap_or_else(|| Delimiter::detect(lines.iter().find(|l| !l.trim().is_empty()).unwrap()));

    let mut records = Vec::new();
    for (i, raw) in lines[..=last_content].iter().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            return Err(err(lineno, "empty row".into()));
        }
        let fields: Vec<&str> = match delimiter {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            d => {
                let sep = d.separator();
                if !line.contains(sep) {
                    return Err(err(lineno, format!("inconsistent delimiter, expected {d:?}")));
                }
                line.split(sep).map(str::trim).collect()
            }
        };
        let (label, values) = fields.split_first().unwrap();
        if label.is_empty() {
            return Err(err(lineno, "missing label".into()));
        }
        if values.is_empty() {
            return Err(err(lineno, "row has no values".into()));
        }
        let values = values
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(lineno, format!("column {}: '{f}' is not a finite number", col + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        let series = TimeSeries::new(values).map_err(|e| err(lineno, e.to_string()))?;
        records.push(LabeledSeries::new(*label, series));
    }
    Ok(DatasetFile {
        records,
        path: path.to_path_buf(),
        delimiter,
    })
}

/// Render records in the same layout [`parse_ucr`] reads. Values use the
/// shortest representation that parses back to the identical double.
pub fn format_dataset(records: &[LabeledSeries], delimiter: Delimiter) -> String {
    let sep = delimiter.separator();
    let mut out = String::new();
    for r in records {
        out.push_str(&r.label);
        for v in r.series.values() {
            let _ = write!(out, "{sep}{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(records: &[LabeledSeries], path: impl AsRef<Path>, delimiter: Delimiter) -> Result<()> {
    write_atomic(path.as_ref(), format_dataset(records, delimiter).as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Original,
    Tweaked,
}

/// `<stem>.<original|tweaked>.<method>.txt`
pub fn plot_file_name(stem: &str, kind: PlotKind, method: &str) -> String {
    let kind = match kind {
        PlotKind::Original => "original",
        PlotKind::Tweaked => "tweaked",
    };
    format!("{stem}.{kind}.{method}.txt")
}

/// Two tab-separated columns: time index and value.
pub fn format_plot_series(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{v:?}");
    }
    out
}

/// Write `bytes` to a temporary file next to `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
