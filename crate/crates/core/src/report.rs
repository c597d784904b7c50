//! Result stream records: line-delimited JSON (full fidelity) and a TSV
//! projection of the same fields for spreadsheet use.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::ResultCluster;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One reported cluster. `text`, `unit_start` and `unit_end` describe the
/// cluster extent (the union of member spans); `log_rank` and the member
/// list carry the per-window detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// 1-based position in the ranked output.
    pub rank_position: usize,
    pub log_rank: f64,
    pub doc_id: String,
    pub text: String,
    pub tokens: Vec<String>,
    /// First source unit of the extent (0-based, inclusive).
    pub unit_start: u32,
    /// Last source unit of the extent (0-based, inclusive).
    pub unit_end: u32,
    pub members: Vec<MemberRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub log_rank: f64,
    pub text: String,
    /// Letter span `[start, end)` within the document's sequence.
    pub start: usize,
    pub end: usize,
    pub unit_start: u32,
    pub unit_end: u32,
    pub tokens: Vec<String>,
}

/// Project the top `top_n` clusters into serializable records.
pub fn cluster_records(clusters: &[ResultCluster], top_n: usize) -> Vec<ClusterRecord> {
    clusters
        .iter()
        .take(top_n)
        .enumerate()
        .map(|(i, c)| ClusterRecord {
            rank_position: i + 1,
            log_rank: c.log_rank(),
            doc_id: c.doc_id.clone(),
            text: c.text.clone(),
            tokens: c.tokens.clone(),
            unit_start: c.unit_extent.0,
            unit_end: c.unit_extent.1,
            members: c
                .members
                .iter()
                .map(|m| MemberRecord {
                    log_rank: m.segmentation.log_rank,
                    text: m.text.clone(),
                    start: m.start,
                    end: m.end,
                    unit_start: m.unit_start,
                    unit_end: m.unit_end,
                    tokens: m.segmentation.tokens.clone(),
                })
                .collect(),
        })
        .collect()
}

pub fn write_jsonl(mut w: impl Write, records: &[ClusterRecord]) -> Result<(), ReportError> {
    for record in records {
        serde_json::to_writer(&mut w, record).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// TSV projection: one row per cluster, tokens joined with `|`, members
/// summarized as `start-end` letter spans joined with `;`.
pub fn write_tsv(mut w: impl Write, records: &[ClusterRecord]) -> Result<(), ReportError> {
    writeln!(
        w,
        "rank_position\tlog_rank\tdoc_id\ttext\ttokens\tunit_start\tunit_end\tmembers"
    )?;
    for r in records {
        let members: Vec<String> = r
            .members
            .iter()
            .map(|m| format!("{}-{}", m.start, m.end))
            .collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.rank_position,
            r.log_rank,
            r.doc_id,
            r.text,
            r.tokens.join("|"),
            r.unit_start,
            r.unit_end,
            members.join(";")
        )?;
    }
    Ok(())
}

/// Read back a JSONL result stream, with line numbers on parse failures.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<ClusterRecord>, ReportError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ClusterRecord =
            serde_json::from_str(&line).map_err(|e| ReportError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}
