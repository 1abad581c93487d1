use std::collections::BTreeMap;

use serde::Serialize;

use super::{analyzed_count, descriptive_stats, monthly_aggregate, monthly_table, MonthlyRow, Table, YearMonth};
use crate::model::{DepKind, ProjectHistory, UsageStatus, GA};
use crate::timeline::{
    bloat_series, classify_origins, classify_pattern, classify_trend, compress, detect_updates,
    ls_slope, remain_bloated_ratio, status_series, transitive_fallout, ActorKind, OriginLabel,
    OriginTable, Pattern, PatternCounts, TimelineError, Trend, UpdateStats,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub project: String,
    pub kind: DepKind,
    pub trend: Trend,
    pub slope: f64,
    pub series: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyPattern {
    pub project: String,
    pub dependency: GA,
    pub kind: DepKind,
    pub statuses: String,
    pub compressed: String,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateRow {
    pub project: String,
    pub commit: String,
    pub dependency: GA,
    pub from_version: String,
    pub to_version: String,
    pub actor: ActorKind,
    pub target_status: UsageStatus,
    pub transitive_fallout: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OriginRow {
    pub project: String,
    pub commit: String,
    pub snapshot: usize,
    pub dependency: GA,
    pub kind: DepKind,
    pub labels: Vec<OriginLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectMetrics {
    pub months: usize,
    pub analyzed_commits: usize,
    pub direct_initial: usize,
    pub transitive_initial: usize,
    pub direct_final: usize,
    pub transitive_final: usize,
}

/// Every per-project result the summary is assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectAnalysis {
    pub project: String,
    pub trends: Vec<TrendRow>,
    pub patterns: Vec<DependencyPattern>,
    pub updates: Vec<UpdateRow>,
    pub update_stats: UpdateStats,
    pub origins: Vec<OriginRow>,
    pub origin_table: OriginTable,
    pub metrics: ProjectMetrics,
}

fn letters(statuses: &[UsageStatus]) -> String {
    statuses.iter().map(|s| s.letter()).collect()
}

pub fn analyze_project(history: &ProjectHistory) -> Result<ProjectAnalysis, TimelineError> {
    let project = history.project.clone();
    let snaps = history.snapshots();

    let mut trends = Vec::new();
    for kind in DepKind::ALL {
        let series = bloat_series(history, kind);
        let counts = series.counts();
        let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        trends.push(TrendRow {
            project: project.clone(),
            kind,
            trend: classify_trend(&series)?,
            slope: ls_slope(&values)?,
            series: counts,
        });
    }

    let mut patterns = Vec::new();
    for (ga, kinds) in history.analyzed_dependencies() {
        for kind in kinds {
            let statuses = status_series(history, &ga, kind)?.statuses();
            patterns.push(DependencyPattern {
                project: project.clone(),
                dependency: ga.clone(),
                kind,
                statuses: letters(&statuses),
                compressed: letters(&compress(&statuses)),
                pattern: classify_pattern(&statuses)?,
            });
        }
    }

    let events = detect_updates(history);
    let update_stats = crate::timeline::attribute_updates(&events);
    let updates = events
        .iter()
        .map(|e| UpdateRow {
            project: project.clone(),
            commit: snaps[e.snapshot].commit_id.clone(),
            dependency: e.dependency.clone(),
            from_version: e.from_version.clone(),
            to_version: e.to_version.clone(),
            actor: e.actor,
            target_status: e.target_status,
            transitive_fallout: transitive_fallout(history, e),
        })
        .collect();

    let mut origin_table = OriginTable::default();
    let origins = classify_origins(history)?
        .into_iter()
        .map(|(a, origin)| {
            origin_table.record(a.kind, &origin);
            OriginRow {
                project: project.clone(),
                commit: snaps[a.snapshot].commit_id.clone(),
                snapshot: a.snapshot,
                dependency: a.dependency,
                kind: a.kind,
                labels: origin.labels().into_iter().collect(),
            }
        })
        .collect();

    let (first, last) = (&snaps[0], &snaps[snaps.len() - 1]);
    let months = YearMonth::of(&first.timestamp).span_inclusive(YearMonth::of(&last.timestamp));
    let metrics = ProjectMetrics {
        months: months.max(1) as usize,
        analyzed_commits: snaps.len(),
        direct_initial: analyzed_count(first, DepKind::Direct),
        transitive_initial: analyzed_count(first, DepKind::Transitive),
        direct_final: analyzed_count(last, DepKind::Direct),
        transitive_final: analyzed_count(last, DepKind::Transitive),
    };

    Ok(ProjectAnalysis {
        project,
        trends,
        patterns,
        updates,
        update_stats,
        origins,
        origin_table,
        metrics,
    })
}

fn percent(part: usize, whole: usize) -> String {
    if whole == 0 {
        return String::new();
    }
    format!("{:.2}", 100.0 * part as f64 / whole as f64)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrendCounts {
    pub inc: usize,
    pub dec: usize,
    pub stable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSection {
    pub projects: Vec<TrendRow>,
    pub counts: BTreeMap<DepKind, TrendCounts>,
    pub monthly: BTreeMap<DepKind, Vec<MonthlyRow<f64>>>,
}

impl TrendSection {
    pub fn build(histories: &[ProjectHistory], analyses: &[ProjectAnalysis]) -> Self {
        let projects: Vec<TrendRow> = analyses.iter().flat_map(|a| a.trends.clone()).collect();
        let mut counts: BTreeMap<DepKind, TrendCounts> =
            DepKind::ALL.iter().map(|&k| (k, TrendCounts::default())).collect();
        for row in &projects {
            let c = counts.get_mut(&row.kind).unwrap();
            match row.trend {
                Trend::Inc => c.inc += 1,
                Trend::Dec => c.dec += 1,
                Trend::Stable => c.stable += 1,
            }
        }
        let monthly = DepKind::ALL
            .iter()
            .map(|&k| (k, monthly_aggregate(histories, k)))
            .collect();
        Self {
            projects,
            counts,
            monthly,
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut trends = Table::new(&["project", "kind", "trend", "slope"]);
        for r in &self.projects {
            trends.push(vec![
                r.project.clone(),
                r.kind.to_string(),
                r.trend.to_string(),
                r.slope.to_string(),
            ]);
        }
        let mut out = vec![("trends.csv".to_string(), trends)];
        for (kind, rows) in &self.monthly {
            out.push((format!("monthly_{kind}.csv"), monthly_table(rows)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RatioByKind {
    pub direct: Option<f64>,
    pub transitive: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSection {
    pub dependencies: Vec<DependencyPattern>,
    pub distribution: BTreeMap<DepKind, BTreeMap<Pattern, usize>>,
    pub remain_bloated_ratio: RatioByKind,
}

impl PatternSection {
    pub fn build(analyses: &[ProjectAnalysis]) -> Self {
        let dependencies: Vec<DependencyPattern> =
            analyses.iter().flat_map(|a| a.patterns.clone()).collect();
        let counts_for = |kind: DepKind| -> PatternCounts {
            dependencies
                .iter()
                .filter(|d| d.kind == kind)
                .map(|d| d.pattern)
                .collect()
        };
        let mut distribution = BTreeMap::new();
        let mut ratio = RatioByKind::default();
        for kind in DepKind::ALL {
            let counts = counts_for(kind);
            distribution.insert(
                kind,
                Pattern::ALL.iter().map(|&p| (p, counts.get(p))).collect(),
            );
            let r = remain_bloated_ratio::<f64>(&counts).ok();
            match kind {
                DepKind::Direct => ratio.direct = r,
                DepKind::Transitive => ratio.transitive = r,
            }
        }
        Self {
            dependencies,
            distribution,
            remain_bloated_ratio: ratio,
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut deps = Table::new(&["project", "dependency", "kind", "statuses", "pattern"]);
        for d in &self.dependencies {
            deps.push(vec![
                d.project.clone(),
                d.dependency.to_string(),
                d.kind.to_string(),
                d.statuses.clone(),
                d.pattern.to_string(),
            ]);
        }
        let mut out = vec![("patterns.csv".to_string(), deps)];
        for (kind, dist) in &self.distribution {
            let total: usize = dist.values().sum();
            let mut t = Table::new(&["pattern", "count", "percent"]);
            for (p, c) in dist {
                t.push(vec![p.to_string(), c.to_string(), percent(*c, total)]);
            }
            out.push((format!("patterns_{kind}.csv"), t));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateSection {
    pub events: Vec<UpdateRow>,
    pub stats: UpdateStats,
    pub human_bloated_ratio: Option<f64>,
    pub bot_bloated_ratio: Option<f64>,
    pub transitive_fallout: usize,
}

impl UpdateSection {
    pub fn build(analyses: &[ProjectAnalysis]) -> Self {
        let mut stats = UpdateStats::default();
        for a in analyses {
            stats.merge(&a.update_stats);
        }
        let events: Vec<UpdateRow> = analyses.iter().flat_map(|a| a.updates.clone()).collect();
        Self {
            transitive_fallout: events.iter().map(|e| e.transitive_fallout).sum(),
            events,
            human_bloated_ratio: stats.bloated_ratio(ActorKind::Human),
            bot_bloated_ratio: stats.bloated_ratio(ActorKind::Bot),
            stats,
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut counts = Table::new(&["actor", "status", "count"]);
        for actor in [ActorKind::Human, ActorKind::Bot] {
            for status in [UsageStatus::Used, UsageStatus::Bloated] {
                counts.push(vec![
                    actor.to_string(),
                    status.to_string(),
                    self.stats.count(actor, status).to_string(),
                ]);
            }
        }
        let mut events = Table::new(&[
            "project",
            "commit",
            "dependency",
            "from_version",
            "to_version",
            "actor",
            "target_status",
            "transitive_fallout",
        ]);
        for e in &self.events {
            events.push(vec![
                e.project.clone(),
                e.commit.clone(),
                e.dependency.to_string(),
                e.from_version.clone(),
                e.to_version.clone(),
                e.actor.to_string(),
                e.target_status.to_string(),
                e.transitive_fallout.to_string(),
            ]);
        }
        let mut ratios = Table::new(&["actor", "bloated_ratio"]);
        ratios.push(vec!["human".into(), opt(self.human_bloated_ratio)]);
        ratios.push(vec!["bot".into(), opt(self.bot_bloated_ratio)]);
        vec![
            ("updates.csv".into(), counts),
            ("update_events.csv".into(), events),
            ("update_ratios.csv".into(), ratios),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginTableRow {
    pub label: OriginLabel,
    pub direct: usize,
    pub direct_percent: Option<f64>,
    pub transitive: usize,
    pub transitive_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginSection {
    pub appearances: Vec<OriginRow>,
    pub table: Vec<OriginTableRow>,
}

impl OriginSection {
    pub fn build(analyses: &[ProjectAnalysis]) -> Self {
        let mut merged = OriginTable::default();
        for a in analyses {
            merged.merge(&a.origin_table);
        }
        let pct = |kind: DepKind, label: OriginLabel| {
            let total = merged.label_total(kind);
            (total > 0).then(|| 100.0 * merged.count(kind, label) as f64 / total as f64)
        };
        let table = OriginLabel::ALL
            .iter()
            .map(|&label| OriginTableRow {
                label,
                direct: merged.count(DepKind::Direct, label),
                direct_percent: pct(DepKind::Direct, label),
                transitive: merged.count(DepKind::Transitive, label),
                transitive_percent: pct(DepKind::Transitive, label),
            })
            .collect();
        Self {
            appearances: analyses.iter().flat_map(|a| a.origins.clone()).collect(),
            table,
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let fmt_pct = |p: Option<f64>| p.map(|v| format!("{v:.2}")).unwrap_or_default();
        let mut t = Table::new(&["label", "direct", "direct_percent", "transitive", "transitive_percent"]);
        for r in &self.table {
            t.push(vec![
                r.label.to_string(),
                r.direct.to_string(),
                fmt_pct(r.direct_percent),
                r.transitive.to_string(),
                fmt_pct(r.transitive_percent),
            ]);
        }
        let mut rows = Table::new(&["project", "commit", "dependency", "kind", "origin"]);
        for a in &self.appearances {
            let labels: Vec<&str> = a.labels.iter().map(|l| l.as_str()).collect();
            rows.push(vec![
                a.project.clone(),
                a.commit.clone(),
                a.dependency.to_string(),
                a.kind.to_string(),
                labels.join("+"),
            ]);
        }
        vec![("origins.csv".into(), t), ("origin_events.csv".into(), rows)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub metric: &'static str,
    #[serde(flatten)]
    pub stats: super::DescriptiveStats<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSection {
    pub projects: usize,
    pub rows: Vec<StatsRow>,
}

impl StatsSection {
    pub fn build(analyses: &[ProjectAnalysis]) -> Self {
        type Metric = (&'static str, fn(&ProjectMetrics) -> usize);
        let metrics: [Metric; 6] = [
            ("months", |m| m.months),
            ("analyzed_commits", |m| m.analyzed_commits),
            ("direct_initial", |m| m.direct_initial),
            ("transitive_initial", |m| m.transitive_initial),
            ("direct_final", |m| m.direct_final),
            ("transitive_final", |m| m.transitive_final),
        ];
        let rows = metrics
            .iter()
            .filter_map(|(name, get)| {
                let values: Vec<f64> = analyses.iter().map(|a| get(&a.metrics) as f64).collect();
                descriptive_stats(&values).ok().map(|stats| StatsRow { metric: name, stats })
            })
            .collect();
        Self {
            projects: analyses.len(),
            rows,
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["metric", "min", "q1", "median", "mean", "q3", "max"]);
        for r in &self.rows {
            let s = &r.stats;
            t.push(
                std::iter::once(r.metric.to_string())
                    .chain([s.min, s.q1, s.median, s.mean, s.q3, s.max].iter().map(|v| v.to_string()))
                    .collect(),
            );
        }
        vec![("stats.csv".into(), t)]
    }
}

/// Combined output of every analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub projects: Vec<String>,
    pub trend: TrendSection,
    pub patterns: PatternSection,
    pub updates: UpdateSection,
    pub origins: OriginSection,
    pub stats: StatsSection,
}

impl Summary {
    pub fn build(histories: &[ProjectHistory], analyses: &[ProjectAnalysis]) -> Self {
        Self {
            projects: analyses.iter().map(|a| a.project.clone()).collect(),
            trend: TrendSection::build(histories, analyses),
            patterns: PatternSection::build(analyses),
            updates: UpdateSection::build(analyses),
            origins: OriginSection::build(analyses),
            stats: StatsSection::build(analyses),
        }
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut out = self.trend.tables();
        out.extend(self.patterns.tables());
        out.extend(self.updates.tables());
        out.extend(self.origins.tables());
        out.extend(self.stats.tables());
        out
    }
}
