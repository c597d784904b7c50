//! Scoring ranked results against ground-truth labels.
//!
//! Labeled acrostics arrive as TSV rows; rows sharing a `group_id` form one
//! truth group (the same acrostic split across pages, reproduced on several
//! pages, or two acrostics within a few lines of each other). A cluster
//! matches a group when it lands on the same document and its unit extent
//! intersects a labeled unit span. Groups found only by a tool
//! (`TOOL_FOUND`) can count toward precision but never toward recall.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::report::ClusterRecord;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("labels file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("labels line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("label set contains no groups")]
    EmptyLabels,
    #[error("label set contains no recall-eligible (non TOOL_FOUND) groups")]
    NoLabeledGroups,
    #[error("n_max {n_max} exceeds the {clusters} available clusters")]
    NMaxTooLarge { n_max: usize, clusters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscoveryMethod {
    /// A text reference marks these lines as an acrostic.
    KeywordLabeled,
    /// The initial letters carry special formatting.
    FormatLabeled,
    /// Found by a detection tool; excluded from recall denominators.
    ToolFound,
}

impl DiscoveryMethod {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "KEYWORD_LABELED" => Some(Self::KeywordLabeled),
            "FORMAT_LABELED" => Some(Self::FormatLabeled),
            "TOOL_FOUND" => Some(Self::ToolFound),
            _ => None,
        }
    }
}

/// One labeled location of a ground-truth acrostic.
#[derive(Debug, Clone)]
pub struct TruthLocator {
    pub doc_id: String,
    /// Inclusive unit span.
    pub unit_start: u32,
    pub unit_end: u32,
    pub text: String,
    pub method: DiscoveryMethod,
}

/// A ground-truth group: every row that shares one `group_id`.
#[derive(Debug, Clone)]
pub struct GroundTruthGroup {
    pub group_id: String,
    pub language: String,
    pub locators: Vec<TruthLocator>,
}

impl GroundTruthGroup {
    /// A group counts toward recall only if some row was labeled by a human
    /// (keyword or formatting), not merely found by a tool.
    pub fn recall_eligible(&self) -> bool {
        self.locators
            .iter()
            .any(|l| l.method != DiscoveryMethod::ToolFound)
    }
}

const LABEL_HEADER: [&str; 7] = [
    "group_id",
    "language",
    "doc_id",
    "unit_start",
    "unit_end",
    "text",
    "method",
];

/// Load a label TSV (header required). Rows sharing `group_id` merge into
/// one group, ordered by first appearance.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<GroundTruthGroup>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labels(BufReader::new(file))
}

pub fn parse_labels(reader: impl BufRead) -> Result<Vec<GroundTruthGroup>, EvalError> {
    let mut groups: Vec<GroundTruthGroup> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(EvalError::EmptyLabels)?;
    let header = header.map_err(|source| EvalError::Io {
        path: "<line 1>".to_string(),
        source,
    })?;
    let fields: Vec<&str> = header.trim_end().split('\t').collect();
    if fields != LABEL_HEADER {
        return Err(EvalError::Parse {
            line: 1,
            message: format!("expected header {:?}", LABEL_HEADER.join("\t")),
        });
    }

    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|source| EvalError::Io {
            path: format!("<line {lineno}>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(EvalError::Parse {
                line: lineno,
                message: format!("expected 7 tab-separated fields, got {}", fields.len()),
            });
        }
        let parse_u32 = |s: &str, name: &str| {
            s.trim().parse::<u32>().map_err(|_| EvalError::Parse {
                line: lineno,
                message: format!("invalid {name} {s:?}"),
            })
        };
        let unit_start = parse_u32(fields[3], "unit_start")?;
        let unit_end = parse_u32(fields[4], "unit_end")?;
        if unit_end < unit_start {
            return Err(EvalError::Parse {
                line: lineno,
                message: format!("unit_end {unit_end} precedes unit_start {unit_start}"),
            });
        }
        let method = DiscoveryMethod::parse(fields[6]).ok_or_else(|| EvalError::Parse {
            line: lineno,
            message: format!("unknown method {:?}", fields[6]),
        })?;
        let locator = TruthLocator {
            doc_id: fields[2].to_string(),
            unit_start,
            unit_end,
            text: fields[5].to_string(),
            method,
        };
        let group_id = fields[0].to_string();
        match index.get(&group_id) {
            Some(&i) => groups[i].locators.push(locator),
            None => {
                index.insert(group_id.clone(), groups.len());
                groups.push(GroundTruthGroup {
                    group_id,
                    language: fields[1].to_string(),
                    locators: vec![locator],
                });
            }
        }
    }
    if groups.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    Ok(groups)
}

/// Per-cluster match outcome, in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchOutcome {
    /// Matched at least one recall-eligible group (indices given).
    Labeled(Vec<usize>),
    /// Matched only TOOL_FOUND groups.
    ToolFound(Vec<usize>),
    Unmatched,
}

#[derive(Debug, Clone)]
pub struct MatchTable {
    pub outcomes: Vec<MatchOutcome>,
    /// Number of recall-eligible truth groups.
    pub labeled_groups: usize,
}

fn intersects(a: (u32, u32), b: (u32, u32)) -> bool {
    a.0.max(b.0) <= a.1.min(b.1)
}

/// Match ranked clusters against truth groups: same document and
/// intersecting (inclusive) unit spans. A group can be matched by many
/// clusters; it still counts once for recall.
pub fn match_clusters(clusters: &[ClusterRecord], truth: &[GroundTruthGroup]) -> MatchTable {
    let labeled_groups = truth.iter().filter(|g| g.recall_eligible()).count();
    let outcomes = clusters
        .iter()
        .map(|c| {
            let mut labeled = Vec::new();
            let mut tool_found = Vec::new();
            for (gi, group) in truth.iter().enumerate() {
                let hit = group.locators.iter().any(|l| {
                    l.doc_id == c.doc_id
                        && intersects((l.unit_start, l.unit_end), (c.unit_start, c.unit_end))
                });
                if hit {
                    if group.recall_eligible() {
                        labeled.push(gi);
                    } else {
                        tool_found.push(gi);
                    }
                }
            }
            if !labeled.is_empty() {
                MatchOutcome::Labeled(labeled)
            } else if !tool_found.is_empty() {
                MatchOutcome::ToolFound(tool_found)
            } else {
                MatchOutcome::Unmatched
            }
        })
        .collect();
    MatchTable {
        outcomes,
        labeled_groups,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision/recall/F1 at every cutoff `1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub points: Vec<MetricPoint>,
}

impl MetricCurve {
    /// The best F1 on the curve and the smallest N achieving it.
    pub fn best_f1(&self) -> Option<(usize, f64)> {
        self.points
            .iter()
            .fold(None, |best: Option<(usize, f64)>, p| match best {
                Some((_, f)) if f >= p.f1 => best,
                _ => Some((p.n, p.f1)),
            })
    }

    /// CSV with header `N,precision,recall,f1`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "N,precision,recall,f1")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.n, p.precision, p.recall, p.f1)?;
        }
        Ok(())
    }

    pub fn point(&self, n: usize) -> Option<&MetricPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

/// Compute the metric curve from a match table.
///
/// Precision at N counts matched clusters among the first N; with
/// `include_tool_found` a cluster matching only TOOL_FOUND groups is a true
/// positive, otherwise it counts against precision. Recall at N counts
/// distinct recall-eligible groups matched within the first N.
pub fn curves(
    table: &MatchTable,
    n_max: usize,
    include_tool_found: bool,
) -> Result<MetricCurve, EvalError> {
    if table.labeled_groups == 0 {
        return Err(EvalError::NoLabeledGroups);
    }
    if n_max > table.outcomes.len() {
        return Err(EvalError::NMaxTooLarge {
            n_max,
            clusters: table.outcomes.len(),
        });
    }
    let mut matched_groups = std::collections::HashSet::new();
    let mut true_positives = 0usize;
    let mut points = Vec::with_capacity(n_max);
    for (i, outcome) in table.outcomes.iter().take(n_max).enumerate() {
        match outcome {
            MatchOutcome::Labeled(groups) => {
                true_positives += 1;
                matched_groups.extend(groups.iter().copied());
            }
            MatchOutcome::ToolFound(_) => {
                if include_tool_found {
                    true_positives += 1;
                }
            }
            MatchOutcome::Unmatched => {}
        }
        let n = i + 1;
        let precision = true_positives as f64 / n as f64;
        let recall = matched_groups.len() as f64 / table.labeled_groups as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        points.push(MetricPoint {
            n,
            precision,
            recall,
            f1,
        });
    }
    Ok(MetricCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::ClusterRecord;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn cluster(doc: &str, unit_start: u32, unit_end: u32) -> ClusterRecord {
        ClusterRecord {
            rank_position: 0,
            log_rank: 1.0,
            doc_id: doc.to_string(),
            text: String::new(),
            tokens: Vec::new(),
            unit_start,
            unit_end,
            members: Vec::new(),
        }
    }

    const HEADER: &str = "group_id\tlanguage\tdoc_id\tunit_start\tunit_end\ttext\tmethod\n";

    #[test]
    fn rows_sharing_group_id_merge() {
        let tsv = format!(
            "{HEADER}g1\ten\tpage-one\t0\t9\thiddenword\tKEYWORD_LABELED\n\
             g1\ten\tpage-two\t0\t9\thiddenword\tKEYWORD_LABELED\n\
             g2\ten\tpage-three\t4\t12\tother\tFORMAT_LABELED\n"
        );
        let groups = parse_labels(Cursor::new(tsv)).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].locators.len(), 2);
        assert!(groups[0].recall_eligible());
    }

    #[test]
    fn nearby_acrostics_share_a_group_when_labeled_so() {
        let tsv = format!(
            "{HEADER}g1\ten\tpage\t0\t4\tfirst\tKEYWORD_LABELED\n\
             g1\ten\tpage\t12\t18\tsecond\tKEYWORD_LABELED\n"
        );
        let groups = parse_labels(Cursor::new(tsv)).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].locators.len(), 2);
    }

    #[test]
    fn empty_labels_error() {
        assert!(matches!(
            parse_labels(Cursor::new(HEADER.to_string())),
            Err(EvalError::EmptyLabels)
        ));
        assert!(matches!(
            parse_labels(Cursor::new("")),
            Err(EvalError::EmptyLabels)
        ));
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let tsv = format!("{HEADER}g1\ten\tpage\tzero\t4\tx\tKEYWORD_LABELED\n");
        assert!(matches!(
            parse_labels(Cursor::new(tsv)),
            Err(EvalError::Parse { line: 2, .. })
        ));
        let tsv = format!("{HEADER}g1\ten\tpage\t0\t4\tx\tSOMETHING\n");
        assert!(matches!(
            parse_labels(Cursor::new(tsv)),
            Err(EvalError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_labels(Cursor::new("bad header\n")),
            Err(EvalError::Parse { line: 1, .. })
        ));
    }

    fn two_group_truth() -> Vec<GroundTruthGroup> {
        let tsv = format!(
            "{HEADER}g1\ten\tdocA\t0\t9\tone\tKEYWORD_LABELED\n\
             g2\ten\tdocB\t5\t14\ttwo\tFORMAT_LABELED\n"
        );
        parse_labels(Cursor::new(tsv)).unwrap()
    }

    #[test]
    fn single_unit_overlap_matches() {
        let truth = two_group_truth();
        // Extent touches only unit 9 of docA's 0..=9 span.
        let table = match_clusters(&[cluster("docA", 9, 20)], &truth);
        assert_eq!(table.outcomes[0], MatchOutcome::Labeled(vec![0]));
        // Abutting-but-not-overlapping does not match.
        let table = match_clusters(&[cluster("docA", 10, 20)], &truth);
        assert_eq!(table.outcomes[0], MatchOutcome::Unmatched);
        // Same span, wrong document.
        let table = match_clusters(&[cluster("docC", 0, 9)], &truth);
        assert_eq!(table.outcomes[0], MatchOutcome::Unmatched);
    }

    #[test]
    fn hand_worked_three_cluster_two_group_table() {
        let truth = two_group_truth();
        let clusters = vec![
            cluster("docA", 0, 5),   // hit g1
            cluster("docA", 50, 60), // miss
            cluster("docB", 10, 12), // hit g2
        ];
        let table = match_clusters(&clusters, &truth);
        let curve = curves(&table, 3, false).unwrap();
        let p3 = curve.point(3).unwrap();
        assert!((p3.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((p3.recall - 1.0).abs() < 1e-12);
        assert!((p3.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn duplicate_matches_count_once_for_recall_twice_for_precision() {
        let truth = two_group_truth();
        let clusters = vec![
            cluster("docA", 0, 3), // hit g1
            cluster("docA", 4, 9), // hit g1 again
            cluster("docB", 5, 9), // hit g2
        ];
        let table = match_clusters(&clusters, &truth);
        let curve = curves(&table, 3, false).unwrap();
        let p2 = curve.point(2).unwrap();
        assert!((p2.precision - 1.0).abs() < 1e-12);
        assert!((p2.recall - 0.5).abs() < 1e-12);
        let p3 = curve.point(3).unwrap();
        assert!((p3.precision - 1.0).abs() < 1e-12);
        assert!((p3.recall - 1.0).abs() < 1e-12);
        assert!((p3.f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tool_found_groups_toggle_precision_only() {
        let tsv = format!(
            "{HEADER}g1\ten\tdocA\t0\t9\tone\tKEYWORD_LABELED\n\
             g2\ten\tdocB\t0\t9\tnew\tTOOL_FOUND\n"
        );
        let truth = parse_labels(Cursor::new(tsv)).unwrap();
        let clusters = vec![cluster("docB", 0, 5), cluster("docA", 0, 5)];
        let table = match_clusters(&clusters, &truth);
        assert_eq!(table.labeled_groups, 1);

        let with = curves(&table, 2, true).unwrap();
        assert!((with.point(2).unwrap().precision - 1.0).abs() < 1e-12);
        let without = curves(&table, 2, false).unwrap();
        assert!((without.point(2).unwrap().precision - 0.5).abs() < 1e-12);
        // Recall identical in both regimes.
        assert!((with.point(2).unwrap().recall - 1.0).abs() < 1e-12);
        assert!((without.point(2).unwrap().recall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn only_tool_found_labels_cannot_be_evaluated_for_recall() {
        let tsv = format!("{HEADER}g1\ten\tdocA\t0\t9\tx\tTOOL_FOUND\n");
        let truth = parse_labels(Cursor::new(tsv)).unwrap();
        let table = match_clusters(&[cluster("docA", 0, 9)], &truth);
        assert!(matches!(
            curves(&table, 1, true),
            Err(EvalError::NoLabeledGroups)
        ));
    }

    #[test]
    fn n_max_bounded_by_cluster_count() {
        let truth = two_group_truth();
        let table = match_clusters(&[cluster("docA", 0, 5)], &truth);
        assert!(matches!(
            curves(&table, 2, false),
            Err(EvalError::NMaxTooLarge { .. })
        ));
    }

    #[test]
    fn csv_output_shape() {
        let truth = two_group_truth();
        let table = match_clusters(&[cluster("docA", 0, 5)], &truth);
        let curve = curves(&table, 1, false).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("N,precision,recall,f1"));
        assert_eq!(text.lines().count(), 2);
    }

    proptest! {
        /// Recall never decreases in N; F1 satisfies its identity at every N.
        #[test]
        fn metric_identities(
            outcomes in proptest::collection::vec(0u8..3, 1..80),
            groups in 1usize..10,
            include in proptest::bool::ANY,
        ) {
            let truth_outcomes: Vec<MatchOutcome> = outcomes
                .iter()
                .enumerate()
                .map(|(i, &o)| match o {
                    0 => MatchOutcome::Unmatched,
                    1 => MatchOutcome::Labeled(vec![i % groups]),
                    _ => MatchOutcome::ToolFound(vec![i % groups]),
                })
                .collect();
            let table = MatchTable { outcomes: truth_outcomes, labeled_groups: groups };
            let curve = curves(&table, outcomes.len(), include).unwrap();
            let mut prev_recall = 0.0;
            for p in &curve.points {
                prop_assert!(p.recall + 1e-12 >= prev_recall);
                prev_recall = p.recall;
                prop_assert!((0.0..=1.0).contains(&p.precision));
                prop_assert!((0.0..=1.0).contains(&p.recall));
                let expect_f1 = if p.precision + p.recall > 0.0 {
                    2.0 * p.precision * p.recall / (p.precision + p.recall)
                } else {
                    0.0
                };
                prop_assert!((p.f1 - expect_f1).abs() < 1e-12);
            }
        }
    }
}
