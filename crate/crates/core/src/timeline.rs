//! Longitudinal analyses over a [`ProjectHistory`]: bloat trends, usage-status
//! patterns, version updates and the origin of newly bloated dependencies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DepKind, ProjectHistory, Snapshot, UsageStatus, GA};
use crate::scalar::Scalar;
use crate::usage::{using_classes, UsageError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("at least 2 points are required, got {0}")]
    InsufficientPoints(usize),
    #[error("dependency {0} is never present with the requested kind")]
    NeverPresent(GA),
    #[error("status series is empty")]
    EmptySeries,
    #[error("no dependency was bloated at any point")]
    NoBloatedDependencies,
    #[error("{dependency} does not become bloated at snapshot {snapshot}")]
    NotABloatAppearance { dependency: GA, snapshot: usize },
    #[error(transparent)]
    Usage(#[from] UsageError),
}

/// Number of bloated dependencies of one kind at each snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BloatSeries {
    pub project: String,
    pub kind: DepKind,
    /// `(snapshot index, bloated count)`, one point per snapshot.
    pub points: Vec<(usize, usize)>,
}

impl BloatSeries {
    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(|&(_, c)| c).collect()
    }
}

pub fn bloat_series(history: &ProjectHistory, kind: DepKind) -> BloatSeries {
    BloatSeries {
        project: history.project.clone(),
        kind,
        points: history
            .snapshots()
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.bloated_count(kind)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Inc,
    Dec,
    Stable,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Inc => "inc",
            Trend::Dec => "dec",
            Trend::Stable => "stable",
        })
    }
}

/// Least-squares slope of `values` against the indices `0..n`.
pub fn ls_slope<T: Scalar>(values: &[T]) -> Result<T, TimelineError> {
    let n = values.len();
    if n < 2 {
        return Err(TimelineError::InsufficientPoints(n));
    }
    let two = T::from_count(2);
    let mean_x = T::from_count(n - 1) / two;
    // Σ(x - x̄) = 0, so the centred cross term needs no ȳ.
    let (num, den) = values
        .iter()
        .enumerate()
        .fold((T::zero(), T::zero()), |(num, den), (i, &y)| {
            let dx = T::from_count(i) - mean_x;
            (num + dx * y, den + dx * dx)
        });
    Ok(num / den)
}

fn trend_from_sign(constant: bool, sign: std::cmp::Ordering) -> Trend {
    use std::cmp::Ordering::*;
    match (constant, sign) {
        (true, _) | (false, Equal) => Trend::Stable,
        (false, Greater) => Trend::Inc,
        (false, Less) => Trend::Dec,
    }
}

/// Trend of a bloat series. Stable when every point is equal, otherwise the
/// sign of the regression slope; a non-constant series with zero slope is Stable.
///
/// The sign is computed in exact integer arithmetic.
pub fn classify_trend(series: &BloatSeries) -> Result<Trend, TimelineError> {
    let counts = series.counts();
    let n = counts.len();
    if n < 2 {
        return Err(TimelineError::InsufficientPoints(n));
    }
    let constant = counts.windows(2).all(|w| w[0] == w[1]);
    // sign(slope) = sign(Σ (2i - (n-1)) * y_i)
    let weighted: i128 = counts
        .iter()
        .enumerate()
        .map(|(i, &y)| (2 * i as i128 - (n as i128 - 1)) * y as i128)
        .sum();
    Ok(trend_from_sign(constant, weighted.cmp(&0)))
}

/// Same rule as [`classify_trend`] over arbitrary real values.
pub fn classify_values<T: Scalar>(values: &[T]) -> Result<Trend, TimelineError> {
    let slope = ls_slope(values)?;
    let constant = values.windows(2).all(|w| w[0] == w[1]);
    let sign = slope.partial_cmp(&T::zero()).unwrap_or(std::cmp::Ordering::Equal);
    Ok(trend_from_sign(constant, sign))
}

/// History of one dependency's usage status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatusSeries {
    pub dependency: GA,
    pub kind: DepKind,
    /// `(snapshot index, status)` for the snapshots where the dependency is present.
    pub entries: Vec<(usize, UsageStatus)>,
}

impl StatusSeries {
    pub fn statuses(&self) -> Vec<UsageStatus> {
        self.entries.iter().map(|&(_, s)| s).collect()
    }
}

pub fn status_series(
    history: &ProjectHistory,
    dependency: &GA,
    kind: DepKind,
) -> Result<StatusSeries, TimelineError> {
    let entries: Vec<_> = history
        .snapshots()
        .iter()
        .enumerate()
        .filter_map(|(i, snap)| {
            let node = snap.tree.get(dependency)?;
            if node.kind() != kind {
                return None;
            }
            snap.statuses.get(&node.coordinate).map(|&s| (i, s))
        })
        .collect();
    if entries.is_empty() {
        return Err(TimelineError::NeverPresent(dependency.clone()));
    }
    Ok(StatusSeries {
        dependency: dependency.clone(),
        kind,
        entries,
    })
}

/// Collapses runs of equal statuses.
pub fn compress(statuses: &[UsageStatus]) -> Vec<UsageStatus> {
    let mut out = statuses.to_vec();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    U,
    B,
    UB,
    BU,
    #[serde(rename = "fluctuating")]
    Fluctuating,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::U,
        Pattern::B,
        Pattern::UB,
        Pattern::BU,
        Pattern::Fluctuating,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::U => "U",
            Pattern::B => "B",
            Pattern::UB => "UB",
            Pattern::BU => "BU",
            Pattern::Fluctuating => "fluctuating",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pattern of a status sequence. Runs are collapsed first, so uncompressed
/// input is accepted too.
pub fn classify_pattern(tokens: &[UsageStatus]) -> Result<Pattern, TimelineError> {
    use UsageStatus::{Bloated as B, Used as U};
    Ok(match compress(tokens).as_slice() {
        [] => return Err(TimelineError::EmptySeries),
        [U] => Pattern::U,
        [B] => Pattern::B,
        [U, B] => Pattern::UB,
        [B, U] => Pattern::BU,
        _ => Pattern::Fluctuating,
    })
}

/// Multiset of patterns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PatternCounts([usize; 5]);

impl PatternCounts {
    fn slot(p: Pattern) -> usize {
        Pattern::ALL.iter().position(|&q| q == p).unwrap()
    }

    pub fn add(&mut self, p: Pattern) {
        self.0[Self::slot(p)] += 1;
    }

    pub fn get(&self, p: Pattern) -> usize {
        self.0[Self::slot(p)]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn merge(&mut self, other: &PatternCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

impl FromIterator<Pattern> for PatternCounts {
    fn from_iter<I: IntoIterator<Item = Pattern>>(iter: I) -> Self {
        let mut c = Self::default();
        iter.into_iter().for_each(|p| c.add(p));
        c
    }
}

/// Share of ever-bloated dependencies that end bloated: (B + UB) / (B + UB + BU + fluctuating).
pub fn remain_bloated_ratio<T: Scalar>(patterns: &PatternCounts) -> Result<T, TimelineError> {
    let stay = patterns.get(Pattern::B) + patterns.get(Pattern::UB);
    let denom = stay + patterns.get(Pattern::BU) + patterns.get(Pattern::Fluctuating);
    if denom == 0 {
        return Err(TimelineError::NoBloatedDependencies);
    }
    Ok(T::from_count(stay) / T::from_count(denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Human,
    Bot,
}

impl fmt::Display for ActorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActorKind::Human => "human",
            ActorKind::Bot => "bot",
        })
    }
}

/// Version change of a direct dependency between two consecutive snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateEvent {
    pub dependency: GA,
    pub from_version: String,
    pub to_version: String,
    /// Index of the post-update snapshot.
    pub snapshot: usize,
    pub actor: ActorKind,
    pub target_status: UsageStatus,
}

pub fn detect_updates(history: &ProjectHistory) -> Vec<UpdateEvent> {
    let snaps = history.snapshots();
    let mut events = Vec::new();
    for (i, pair) in snaps.windows(2).enumerate() {
        let (before, after) = (&pair[0], &pair[1]);
        for node in after.tree.direct() {
            let Some(prev) = before.tree.get(node.coordinate.ga()) else {
                continue;
            };
            if prev.depth != 1 || prev.coordinate.version() == node.coordinate.version() {
                continue;
            }
            let Some(&target_status) = after.statuses.get(&node.coordinate) else {
                continue;
            };
            events.push(UpdateEvent {
                dependency: node.coordinate.ga().clone(),
                from_version: prev.coordinate.version().to_string(),
                to_version: node.coordinate.version().to_string(),
                snapshot: i + 1,
                actor: if after.actor.is_bot() {
                    ActorKind::Bot
                } else {
                    ActorKind::Human
                },
                target_status,
            });
        }
    }
    events
}

/// Update counts by actor and by status of the updated dependency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UpdateStats {
    pub human_used: usize,
    pub human_bloated: usize,
    pub bot_used: usize,
    pub bot_bloated: usize,
}

impl UpdateStats {
    pub fn count(&self, actor: ActorKind, status: UsageStatus) -> usize {
        match (actor, status) {
            (ActorKind::Human, UsageStatus::Used) => self.human_used,
            (ActorKind::Human, UsageStatus::Bloated) => self.human_bloated,
            (ActorKind::Bot, UsageStatus::Used) => self.bot_used,
            (ActorKind::Bot, UsageStatus::Bloated) => self.bot_bloated,
        }
    }

    fn slot(&mut self, actor: ActorKind, status: UsageStatus) -> &mut usize {
        match (actor, status) {
            (ActorKind::Human, UsageStatus::Used) => &mut self.human_used,
            (ActorKind::Human, UsageStatus::Bloated) => &mut self.human_bloated,
            (ActorKind::Bot, UsageStatus::Used) => &mut self.bot_used,
            (ActorKind::Bot, UsageStatus::Bloated) => &mut self.bot_bloated,
        }
    }

    pub fn total(&self) -> usize {
        self.human_used + self.human_bloated + self.bot_used + self.bot_bloated
    }

    /// bloated / (bloated + used) for `actor`; `None` when that actor made no update.
    pub fn bloated_ratio<T: Scalar>(&self, actor: ActorKind) -> Option<T> {
        let bloated = self.count(actor, UsageStatus::Bloated);
        let all = bloated + self.count(actor, UsageStatus::Used);
        (all > 0).then(|| T::from_count(bloated) / T::from_count(all))
    }

    pub fn merge(&mut self, other: &UpdateStats) {
        self.human_used += other.human_used;
        self.human_bloated += other.human_bloated;
        self.bot_used += other.bot_used;
        self.bot_bloated += other.bot_bloated;
    }
}

pub fn attribute_updates<'a>(events: impl IntoIterator<Item = &'a UpdateEvent>) -> UpdateStats {
    let mut stats = UpdateStats::default();
    for e in events {
        *stats.slot(e.actor, e.target_status) += 1;
    }
    stats
}

/// New bloated transitive dependencies pulled in through the updated dependency.
pub fn transitive_fallout(history: &ProjectHistory, event: &UpdateEvent) -> usize {
    let snaps = history.snapshots();
    if event.snapshot == 0 || event.snapshot >= snaps.len() {
        return 0;
    }
    let (before, after) = (&snaps[event.snapshot - 1], &snaps[event.snapshot]);
    after
        .statuses_of_kind(DepKind::Transitive)
        .filter(|(node, status)| {
            *status == UsageStatus::Bloated
                && !before.tree.contains(node.coordinate.ga())
                && after
                    .tree
                    .ancestors(node.coordinate.ga())
                    .iter()
                    .any(|a| a.coordinate.ga() == &event.dependency)
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OriginLabel {
    ND,
    RC,
    UC,
    NV,
}

impl OriginLabel {
    pub const ALL: [OriginLabel; 4] = [OriginLabel::ND, OriginLabel::RC, OriginLabel::UC, OriginLabel::NV];

    pub fn as_str(self) -> &'static str {
        match self {
            OriginLabel::ND => "ND",
            OriginLabel::RC => "RC",
            OriginLabel::UC => "UC",
            OriginLabel::NV => "NV",
        }
    }
}

impl fmt::Display for OriginLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happened in the code when a dependency turned bloated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OriginCause {
    /// Not present at the previous snapshot.
    NewDependency,
    /// Every class that used it is gone.
    RemovedCode,
    /// Some class that used it is still there.
    UpdatedCode,
}

/// Label set of a bloat appearance. ND never carries NV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin {
    cause: OriginCause,
    new_version: bool,
}

impl Origin {
    pub fn new_dependency() -> Self {
        Self {
            cause: OriginCause::NewDependency,
            new_version: false,
        }
    }

    /// `None` when asked for ND together with NV.
    pub fn new(cause: OriginCause, new_version: bool) -> Option<Self> {
        (cause != OriginCause::NewDependency || !new_version).then_some(Self { cause, new_version })
    }

    pub fn cause(&self) -> OriginCause {
        self.cause
    }

    pub fn new_version(&self) -> bool {
        self.new_version
    }

    pub fn labels(&self) -> BTreeSet<OriginLabel> {
        let mut out = BTreeSet::from([match self.cause {
            OriginCause::NewDependency => OriginLabel::ND,
            OriginCause::RemovedCode => OriginLabel::RC,
            OriginCause::UpdatedCode => OriginLabel::UC,
        }]);
        if self.new_version {
            out.insert(OriginLabel::NV);
        }
        out
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<_> = self.labels().into_iter().map(OriginLabel::as_str).collect();
        f.write_str(&labels.join("+"))
    }
}

fn version_changed(before: &Snapshot, after: &Snapshot, ga: &GA) -> bool {
    let Some(now) = after.tree.get(ga) else {
        return false;
    };
    let differs = |g: &GA, v: &str| before.tree.get(g).is_some_and(|p| p.coordinate.version() != v);
    differs(ga, now.coordinate.version())
        || after
            .tree
            .ancestors(ga)
            .iter()
            .any(|a| differs(a.coordinate.ga(), a.coordinate.version()))
}

/// Classifies why `dependency` is bloated at snapshot `index` but was not bloated
/// (or not present) at the previous snapshot.
pub fn classify_origin(
    history: &ProjectHistory,
    dependency: &GA,
    index: usize,
) -> Result<Origin, TimelineError> {
    let not_appearance = || TimelineError::NotABloatAppearance {
        dependency: dependency.clone(),
        snapshot: index,
    };
    let snaps = history.snapshots();
    let current = snaps.get(index).ok_or_else(not_appearance)?;
    if current.status_of(dependency) != Some(UsageStatus::Bloated) {
        return Err(not_appearance());
    }
    let Some(previous) = index.checked_sub(1).map(|i| &snaps[i]) else {
        return Ok(Origin::new_dependency());
    };
    if !previous.tree.contains(dependency) {
        return Ok(Origin::new_dependency());
    }
    if previous.status_of(dependency) == Some(UsageStatus::Bloated) {
        return Err(not_appearance());
    }
    let classes = using_classes(&previous.tree, &previous.facts, dependency)?;
    let still_present = classes
        .iter()
        .any(|c| current.facts.project_classes().contains(c));
    let cause = if still_present {
        OriginCause::UpdatedCode
    } else {
        OriginCause::RemovedCode
    };
    let new_version = version_changed(previous, current, dependency);
    Ok(Origin { cause, new_version })
}

/// A point where a dependency becomes bloated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BloatAppearance {
    pub dependency: GA,
    pub snapshot: usize,
    pub kind: DepKind,
}

pub fn bloat_appearances(history: &ProjectHistory) -> Vec<BloatAppearance> {
    let snaps = history.snapshots();
    let mut out = Vec::new();
    for (i, snap) in snaps.iter().enumerate() {
        for node in snap.tree.nodes() {
            let ga = node.coordinate.ga();
            if snap.statuses.get(&node.coordinate) != Some(&UsageStatus::Bloated) {
                continue;
            }
            let was_bloated = i > 0 && snaps[i - 1].status_of(ga) == Some(UsageStatus::Bloated);
            if !was_bloated {
                out.push(BloatAppearance {
                    dependency: ga.clone(),
                    snapshot: i,
                    kind: node.kind(),
                });
            }
        }
    }
    out
}

/// Origin label counts by dependency kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OriginTable {
    counts: BTreeMap<(DepKind, OriginLabel), usize>,
    appearances: BTreeMap<DepKind, usize>,
}

impl OriginTable {
    pub fn record(&mut self, kind: DepKind, origin: &Origin) {
        *self.appearances.entry(kind).or_default() += 1;
        for label in origin.labels() {
            *self.counts.entry((kind, label)).or_default() += 1;
        }
    }

    pub fn count(&self, kind: DepKind, label: OriginLabel) -> usize {
        self.counts.get(&(kind, label)).copied().unwrap_or(0)
    }

    pub fn appearances(&self, kind: DepKind) -> usize {
        self.appearances.get(&kind).copied().unwrap_or(0)
    }

    /// Sum of label occurrences for `kind`; exceeds the appearance count when labels co-occur.
    pub fn label_total(&self, kind: DepKind) -> usize {
        OriginLabel::ALL.iter().map(|&l| self.count(kind, l)).sum()
    }

    pub fn merge(&mut self, other: &OriginTable) {
        for (k, v) in &other.counts {
            *self.counts.entry(*k).or_default() += v;
        }
        for (k, v) in &other.appearances {
            *self.appearances.entry(*k).or_default() += v;
        }
    }
}

/// Origin of every bloat appearance of a history.
pub fn classify_origins(
    history: &ProjectHistory,
) -> Result<Vec<(BloatAppearance, Origin)>, TimelineError> {
    bloat_appearances(history)
        .into_iter()
        .map(|a| {
            let origin = classify_origin(history, &a.dependency, a.snapshot)?;
            Ok((a, origin))
        })
        .collect()
}
