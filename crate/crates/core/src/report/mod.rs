//! Report emitters: per-snapshot JSON, monthly aggregates, descriptive
//! statistics and CSV tables.

mod summary;

pub use summary::{
    analyze_project, DependencyPattern, OriginRow, OriginSection, OriginTableRow, PatternSection,
    ProjectAnalysis, RatioByKind, StatsSection, Summary, TrendRow, TrendSection, UpdateRow,
    UpdateSection,
};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Datelike, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DepKind, ProjectHistory, Snapshot, SnapshotKind, UsageStatus};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no values to summarize")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEntry {
    pub coordinate: String,
    pub ga: String,
    pub depth: DepKind,
    pub scope: String,
    pub status: UsageStatus,
}

/// Per-commit status report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub commit: String,
    pub timestamp: String,
    pub kind: SnapshotKind,
    pub dependencies: Vec<DependencyEntry>,
}

impl SnapshotReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn snapshot_report(snapshot: &Snapshot) -> SnapshotReport {
    let mut dependencies: Vec<DependencyEntry> = snapshot
        .tree
        .nodes()
        .filter_map(|n| {
            snapshot.statuses.get(&n.coordinate).map(|&status| DependencyEntry {
                coordinate: n.coordinate.to_string(),
                ga: n.coordinate.ga().to_string(),
                depth: n.kind(),
                scope: n.scope.to_string(),
                status,
            })
        })
        .collect();
    dependencies.sort_by(|a, b| a.coordinate.cmp(&b.coordinate));
    SnapshotReport {
        commit: snapshot.commit_id.clone(),
        timestamp: format_timestamp(&snapshot.timestamp),
        kind: snapshot.kind,
        dependencies,
    }
}

pub(crate) fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of(ts: &DateTime<Utc>) -> Self {
        Self {
            year: ts.year(),
            month: ts.month(),
        }
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Months from `self` to `later`, counting both ends.
    pub fn span_inclusive(self, later: YearMonth) -> i64 {
        (later.year as i64 * 12 + later.month as i64) - (self.year as i64 * 12 + self.month as i64) + 1
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonthlyRow<T> {
    pub month: YearMonth,
    pub average: T,
}

/// Average bloated count per calendar month across projects.
///
/// Each project contributes the count of its latest snapshot at or before
/// the end of the month; projects with no snapshot yet are left out.
pub fn monthly_aggregate<T: Scalar>(histories: &[ProjectHistory], kind: DepKind) -> Vec<MonthlyRow<T>> {
    // per project: (month, count) of the last snapshot in each month, ascending
    let per_project: Vec<Vec<(YearMonth, usize)>> = histories
        .iter()
        .map(|h| {
            let mut last: BTreeMap<YearMonth, usize> = BTreeMap::new();
            for s in h.snapshots() {
                last.insert(YearMonth::of(&s.timestamp), s.bloated_count(kind));
            }
            last.into_iter().collect()
        })
        .collect();
    let (Some(first), Some(end)) = (
        per_project.iter().filter_map(|p| p.first()).map(|p| p.0).min(),
        per_project.iter().filter_map(|p| p.last()).map(|p| p.0).max(),
    ) else {
        return Vec::new();
    };

    let mut rows = Vec::new();
    let mut month = first;
    while month <= end {
        let (sum, active) = per_project
            .iter()
            .filter_map(|p| p.iter().take_while(|(m, _)| *m <= month).last())
            .fold((0usize, 0usize), |(s, n), &(_, c)| (s + c, n + 1));
        if active > 0 {
            rows.push(MonthlyRow {
                month,
                average: T::from_count(sum) / T::from_count(active),
            });
        }
        month = month.next();
    }
    rows
}

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats<T> {
    pub min: T,
    pub q1: T,
    pub median: T,
    pub mean: T,
    pub q3: T,
    pub max: T,
}

fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    // rank h = (n - 1) p, interpolated between the neighbouring order statistics
    let h = T::from_count(sorted.len() - 1) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0);
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i])
}

pub fn descriptive_stats<T: Scalar>(values: &[T]) -> Result<DescriptiveStats<T>, ReportError> {
    if values.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let q = |p: f64| quantile_sorted(&sorted, T::from_f64_lossy(p));
    let sum = sorted.iter().fold(T::zero(), |acc, &v| acc + v);
    Ok(DescriptiveStats {
        min: sorted[0],
        q1: q(0.25),
        median: q(0.5),
        mean: sum / T::from_count(sorted.len()),
        q3: q(0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// A homogeneous table written as CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), ReportError> {
    fs::write(path, table.to_csv_string()).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn monthly_table<T: Scalar>(rows: &[MonthlyRow<T>]) -> Table {
    let mut t = Table::new(&["month", "average"]);
    for r in rows {
        t.push(vec![r.month.to_string(), r.average.to_string()]);
    }
    t
}

pub(crate) fn analyzed_count(snapshot: &Snapshot, kind: DepKind) -> usize {
    snapshot.statuses_of_kind(kind).count()
}
