//! Patient-level CSV data: `subject,subgroup,treatment,response`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{CellGrid, SampleLayout, Treatment, TrialDesign, TrialSummary};
use crate::error::{Error, Result};

pub const DATASET_HEADER: [&str; 4] = ["subject", "subgroup", "treatment", "response"];

/// One patient. `subgroup` is numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub subject: String,
    pub subgroup: usize,
    pub treatment: String,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedData {
    pub summary: TrialSummary,
    pub rows: usize,
    pub duplicate_subjects: usize,
}

fn bad(row: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        row,
        message: message.into(),
    }
}

/// Per-cell count, mean and sum of squares (Welford).
fn accumulate(design: &TrialDesign, cells: &[(usize, Treatment, f64)]) -> Result<TrialSummary> {
    let (s, t) = (design.n_subgroups(), design.n_treatments());
    let mut n = CellGrid::filled(s, t, 0.0);
    let mut mean = CellGrid::filled(s, t, 0.0);
    let mut ss = CellGrid::filled(s, t, 0.0);
    for &(i, tr, y) in cells {
        let k = n.at(i, tr) + 1.0;
        let m = mean.at(i, tr);
        let delta = y - m;
        let m_new = m + delta / k;
        n.set(i, tr, k);
        mean.set(i, tr, m_new);
        ss.set(i, tr, ss.at(i, tr) + delta * (y - m_new));
    }
    TrialSummary::new(SampleLayout::new(n)?, mean, ss, None)
}

/// Sufficient statistics of in-memory rows, validated like file input.
pub fn summarize_rows(rows: &[DatasetRow], design: &TrialDesign) -> Result<TrialSummary> {
    let mut cells = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        cells.push(resolve(design, k + 1, r.subgroup, &r.treatment, r.response)?);
    }
    if cells.is_empty() {
        return Err(Error::InsufficientData("no rows".into()));
    }
    accumulate(design, &cells)
}

fn resolve(design: &TrialDesign, row: usize, subgroup: usize, label: &str, y: f64) -> Result<(usize, Treatment, f64)> {
    if subgroup == 0 || subgroup > design.n_subgroups() {
        return Err(bad(row, format!("subgroup {subgroup} outside 1..={}", design.n_subgroups())));
    }
    let t = design
        .treatment_by_label(label)
        .ok_or_else(|| bad(row, format!("unknown treatment {label:?}")))?;
    if !design.administers(subgroup - 1, t) {
        return Err(bad(row, format!("treatment {label} is not given in subgroup {subgroup}")));
    }
    if !y.is_finite() {
        return Err(bad(row, "response is not finite"));
    }
    Ok((subgroup - 1, t, y))
}

/// Read a dataset. Row numbers in errors are file line numbers, the header
/// being line 1. Duplicate subject ids are logged and kept.
pub fn ingest_reader<R: Read>(reader: R, design: &TrialDesign) -> Result<IngestedData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(bad(1, "empty file"));
    }
    if header.iter().ne(DATASET_HEADER) {
        return Err(bad(1, format!("header must be exactly {}", DATASET_HEADER.join(","))));
    }
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            bad(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let subject = &rec[0];
        let subgroup: usize = rec[1]
            .parse()
            .map_err(|_| bad(line, format!("subgroup {:?} is not a positive integer", &rec[1])))?;
        let y: f64 = rec[3]
            .parse()
            .map_err(|_| bad(line, format!("response {:?} is not a number", &rec[3])))?;
        cells.push(resolve(design, line, subgroup, &rec[2], y)?);
        if !seen.insert(subject.to_string()) {
            duplicates += 1;
            log::warn!("line {line}: duplicate subject id {subject:?}, row kept");
        }
    }
    if cells.is_empty() {
        return Err(bad(2, "no data rows"));
    }
    let summary = accumulate(design, &cells)?;
    Ok(IngestedData {
        summary,
        rows: cells.len(),
        duplicate_subjects: duplicates,
    })
}

pub fn ingest_dataset(path: &Path, design: &TrialDesign) -> Result<IngestedData> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, design)
}

/// Write rows under the dataset header. Responses use the shortest
/// round-trip representation, so reading back is exact.
pub fn write_dataset<W: Write>(writer: W, rows: &[DatasetRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DATASET_HEADER)?;
    for r in rows {
        w.write_record([
            r.subject.as_str(),
            &r.subgroup.to_string(),
            r.treatment.as_str(),
            &r.response.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
