//! Dataset file format and summary statistics.
//!
//! Files are UTF-8 comma-separated with a fixed header. Every
//! `(day, keyword, ad-group)` triple occupies three consecutive rows, one
//! per matching type in exact/phrase/broad order, with exactly one row
//! carrying observed values and the other two holding `-` in every index
//! column. Parsing and serialization round-trip canonical files
//! byte-identically; numbers are written in Rust's shortest form that
//! parses back to the same value.

pub mod synth;

use std::fmt::Write as _;

use crate::campaign::{Day, MatchType, PerformanceRecord};

pub const HEADER: &str = "day,keyword_id,ad_group_id,matching_type,impression,ctr,vpc,cpc";
const MISSING: &str = "-";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error("line {line}: {reason}")]
    Validation { line: usize, reason: String },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses dataset text into performance records, preserving file order.
/// Hyphen rows contribute no record; value cells are validated against the
/// record invariants (non-negative indices, CTR within [0, 1]).
pub fn parse_dataset(text: &str) -> Result<Vec<PerformanceRecord>, DatasetError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == HEADER => {}
        Some((_, header)) => {
            return Err(DatasetError::Parse {
                line: 1,
                column: 1,
                reason: format!("expected header '{HEADER}', found '{header}'"),
            })
        }
        None => return Err(DatasetError::EmptyDataset),
    }

    let mut records = Vec::new();
    let mut group: Vec<(usize, RowData)> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let row = parse_row(raw, line_no)?;
        group.push((line_no, row));
        if group.len() == 3 {
            records.push(finish_group(&group)?);
            group.clear();
        }
    }
    if !group.is_empty() {
        let (line, _) = group[0];
        return Err(DatasetError::Parse {
            line,
            column: 1,
            reason: "incomplete matching-type group (expected 3 rows)".to_string(),
        });
    }
    Ok(records)
}

pub fn parse_dataset_file(path: &std::path::Path) -> Result<Vec<PerformanceRecord>, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

struct RowData {
    day: Day,
    keyword_id: String,
    adgroup_id: String,
    match_type: MatchType,
    values: Option<(u64, f64, f64, f64)>,
}

fn parse_row(raw: &str, line: usize) -> Result<RowData, DatasetError> {
    let cells: Vec<&str> = raw.split(',').collect();
    if cells.len() != 8 {
        return Err(DatasetError::Parse {
            line,
            column: 1,
            reason: format!("expected 8 columns, found {}", cells.len()),
        });
    }
    let fail = |column: usize, reason: String| DatasetError::Parse { line, column, reason };

    let day: Day = cells[0]
        .parse()
        .map_err(|e: String| fail(1, e))?;
    let keyword_id = cells[1].to_string();
    let adgroup_id = cells[2].to_string();
    let match_type = MatchType::from_label(cells[3])
        .ok_or_else(|| fail(4, format!("unknown matching type '{}'", cells[3])))?;

    let value_cells = &cells[4..8];
    let missing_count = value_cells.iter().filter(|c| **c == MISSING).count();
    let values = match missing_count {
        4 => None,
        0 => {
            let impression: u64 = value_cells[0]
                .parse()
                .map_err(|_| fail(5, format!("invalid impression '{}'", value_cells[0])))?;
            let ctr: f64 = value_cells[1]
                .parse()
                .map_err(|_| fail(6, format!("invalid ctr '{}'", value_cells[1])))?;
            let vpc: f64 = value_cells[2]
                .parse()
                .map_err(|_| fail(7, format!("invalid vpc '{}'", value_cells[2])))?;
            let cpc: f64 = value_cells[3]
                .parse()
                .map_err(|_| fail(8, format!("invalid cpc '{}'", value_cells[3])))?;
            Some((impression, ctr, vpc, cpc))
        }
        _ => {
            return Err(fail(
                5,
                "index cells must be all observed or all '-'".to_string(),
            ))
        }
    };

    Ok(RowData { day, keyword_id, adgroup_id, match_type, values })
}

fn finish_group(group: &[(usize, RowData)]) -> Result<PerformanceRecord, DatasetError> {
    let (first_line, first) = &group[0];
    for (line, row) in group {
        if row.day != first.day
            || row.keyword_id != first.keyword_id
            || row.adgroup_id != first.adgroup_id
        {
            return Err(DatasetError::Validation {
                line: *line,
                reason: "matching-type group mixes different (day, keyword, ad-group) triples"
                    .to_string(),
            });
        }
    }
    for (i, m) in MatchType::ALL.iter().enumerate() {
        if group[i].1.match_type != *m {
            return Err(DatasetError::Validation {
                line: group[i].0,
                reason: format!(
                    "matching types must appear in exact/phrase/broad order, found '{}'",
                    group[i].1.match_type.label()
                ),
            });
        }
    }
    let observed: Vec<&(usize, RowData)> =
        group.iter().filter(|(_, r)| r.values.is_some()).collect();
    if observed.len() != 1 {
        return Err(DatasetError::Validation {
            line: *first_line,
            reason: format!(
                "each (day, keyword, ad-group) group must have exactly one observed matching type, found {}",
                observed.len()
            ),
        });
    }
    let (line, row) = observed[0];
    let (impressions, ctr, vpc, cpc) = row.values.unwrap();
    let record = PerformanceRecord {
        day: row.day,
        keyword_id: row.keyword_id.clone(),
        adgroup_id: row.adgroup_id.clone(),
        match_type: row.match_type,
        impressions,
        ctr,
        vpc,
        cpc,
    };
    record.validate().map_err(|e| DatasetError::Validation {
        line: *line,
        reason: e.to_string(),
    })?;
    Ok(record)
}

/// Writes records back to the canonical three-rows-per-group format, in
/// record order.
pub fn serialize_dataset(records: &[PerformanceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() * 3 + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        for m in MatchType::ALL {
            let _ = write!(out, "{},{},{},{}", r.day, r.keyword_id, r.adgroup_id, m.label());
            if m == r.match_type {
                let _ = writeln!(out, ",{},{},{},{}", r.impressions, r.ctr, r.vpc, r.cpc);
            } else {
                let _ = writeln!(out, ",-,-,-,-");
            }
        }
    }
    out
}

/// Per-matching-type proportions and index moments, with VPC/CPC pooled
/// across types (they do not vary systematically by matching type).
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SummaryTable {
    pub n_records: usize,
    pub rows: Vec<SummaryRow>,
    pub vpc_mean: f64,
    pub vpc_sd: f64,
    pub cpc_mean: f64,
    pub cpc_sd: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SummaryRow {
    pub match_type: MatchType,
    pub proportion_pct: f64,
    pub impression_mean: f64,
    pub impression_sd: f64,
    pub ctr_mean: f64,
    pub ctr_sd: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(records: &[PerformanceRecord]) -> Result<SummaryTable, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let total = records.len() as f64;
    let mut rows = Vec::with_capacity(3);
    for m in MatchType::ALL {
        let of_type: Vec<&PerformanceRecord> =
            records.iter().filter(|r| r.match_type == m).collect();
        let impressions: Vec<f64> = of_type.iter().map(|r| r.impressions as f64).collect();
        let ctrs: Vec<f64> = of_type.iter().map(|r| r.ctr).collect();
        let (impression_mean, impression_sd) = mean_sd(&impressions);
        let (ctr_mean, ctr_sd) = mean_sd(&ctrs);
        rows.push(SummaryRow {
            match_type: m,
            proportion_pct: 100.0 * of_type.len() as f64 / total,
            impression_mean,
            impression_sd,
            ctr_mean,
            ctr_sd,
        });
    }
    let (vpc_mean, vpc_sd) = mean_sd(&records.iter().map(|r| r.vpc).collect::<Vec<_>>());
    let (cpc_mean, cpc_sd) = mean_sd(&records.iter().map(|r| r.cpc).collect::<Vec<_>>());
    Ok(SummaryTable {
        n_records: records.len(),
        rows,
        vpc_mean,
        vpc_sd,
        cpc_mean,
        cpc_sd,
    })
}

/// Summary table as CSV, one row per matching type with the pooled
/// VPC/CPC statistics on the first row only.
pub fn summary_to_csv(table: &SummaryTable) -> String {
    let mut out = String::new();
    out.push_str(
        "matching_type,proportion_pct,impression_mean,impression_sd,ctr_mean,ctr_sd,vpc_mean,vpc_sd,cpc_mean,cpc_sd\n",
    );
    for (i, row) in table.rows.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            row.match_type.label(),
            row.proportion_pct,
            row.impression_mean,
            row.impression_sd,
            row.ctr_mean,
            row.ctr_sd
        );
        if i == 0 {
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                table.vpc_mean, table.vpc_sd, table.cpc_mean, table.cpc_sd
            );
        } else {
            out.push_str(",,,,\n");
        }
    }
    out
}
