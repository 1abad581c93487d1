//! Core domain types: coordinates, scopes, resolved trees, snapshots and histories.
//!
//! Everything here is immutable once built. A dependency is identified across
//! versions by its [`GA`] key; a [`Coordinate`] additionally pins the version.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::usage::UsageFacts;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed coordinate `{0}`: expected group:artifact:version")]
    MalformedCoordinate(String),
    #[error("malformed dependency key `{0}`: expected group:artifact")]
    MalformedGa(String),
}

fn valid_part(s: &str) -> bool {
    !s.is_empty() && !s.contains(':')
}

/// Version-insensitive dependency key (`group:artifact`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GA {
    group: String,
    artifact: String,
}

impl GA {
    pub fn new(group: impl Into<String>, artifact: impl Into<String>) -> Result<Self, ModelError> {
        let (group, artifact) = (group.into(), artifact.into());
        if !valid_part(&group) || !valid_part(&artifact) {
            return Err(ModelError::MalformedGa(format!("{group}:{artifact}")));
        }
        Ok(Self { group, artifact })
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn artifact(&self) -> &str {
        &self.artifact
    }

    pub fn with_version(&self, version: impl Into<String>) -> Result<Coordinate, ModelError> {
        Coordinate::new(self.group.clone(), self.artifact.clone(), version)
    }
}

impl fmt::Display for GA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.artifact)
    }
}

impl FromStr for GA {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split(':').collect::<Vec<_>>().as_slice() {
            [g, a] if !g.is_empty() && !a.is_empty() => GA::new(*g, *a),
            _ => Err(ModelError::MalformedGa(s.to_string())),
        }
    }
}

/// A resolved artifact: `group:artifact:version`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coordinate {
    ga: GA,
    version: String,
}

impl Coordinate {
    pub fn new(
        group: impl Into<String>,
        artifact: impl Into<String>,
        version: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let (group, artifact, version) = (group.into(), artifact.into(), version.into());
        if !valid_part(&group) || !valid_part(&artifact) || !valid_part(&version) {
            return Err(ModelError::MalformedCoordinate(format!(
                "{group}:{artifact}:{version}"
            )));
        }
        Ok(Self {
            ga: GA { group, artifact },
            version,
        })
    }

    pub fn group(&self) -> &str {
        &self.ga.group
    }

    pub fn artifact(&self) -> &str {
        &self.ga.artifact
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn ga(&self) -> &GA {
        &self.ga
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ga, self.version)
    }
}

impl FromStr for Coordinate {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_coordinate(s)
    }
}

/// Splits `group:artifact:version` into a [`Coordinate`].
pub fn parse_coordinate(text: &str) -> Result<Coordinate, ModelError> {
    match text.split(':').collect::<Vec<_>>().as_slice() {
        [g, a, v] if !g.is_empty() && !a.is_empty() && !v.is_empty() => Coordinate::new(*g, *a, *v),
        _ => Err(ModelError::MalformedCoordinate(text.to_string())),
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(GA);
string_serde!(Coordinate);
string_serde!(Scope);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Scope {
    #[default]
    Compile,
    Test,
    Runtime,
    Provided,
    Other(String),
}

impl Scope {
    /// Only compile and test dependencies receive a usage status.
    pub fn is_analyzed(&self) -> bool {
        matches!(self, Scope::Compile | Scope::Test)
    }

    pub fn as_str(&self) -> &str {
        match self {
            Scope::Compile => "compile",
            Scope::Test => "test",
            Scope::Runtime => "runtime",
            Scope::Provided => "provided",
            Scope::Other(label) => label,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "compile" => Scope::Compile,
            "test" => Scope::Test,
            "runtime" => Scope::Runtime,
            "provided" => Scope::Provided,
            other => Scope::Other(other.to_string()),
        })
    }
}

/// Whether a dependency is declared by the project or pulled in by another dependency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    Direct,
    Transitive,
}

impl DepKind {
    pub const ALL: [DepKind; 2] = [DepKind::Direct, DepKind::Transitive];

    pub fn as_str(self) -> &'static str {
        match self {
            DepKind::Direct => "direct",
            DepKind::Transitive => "transitive",
        }
    }
}

impl fmt::Display for DepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One dependency declaration: a pinned coordinate and its scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDeclaration", into = "RawDeclaration")]
pub struct Declaration {
    pub coordinate: Coordinate,
    pub scope: Scope,
}

impl Declaration {
    pub fn new(coordinate: Coordinate, scope: Scope) -> Self {
        Self { coordinate, scope }
    }

    pub fn ga(&self) -> &GA {
        self.coordinate.ga()
    }

    pub fn version(&self) -> &str {
        self.coordinate.version()
    }
}

#[derive(Serialize, Deserialize)]
struct RawDeclaration {
    ga: GA,
    version: String,
    #[serde(default)]
    scope: Scope,
}

impl TryFrom<RawDeclaration> for Declaration {
    type Error = ModelError;

    fn try_from(raw: RawDeclaration) -> Result<Self, Self::Error> {
        Ok(Self {
            coordinate: raw.ga.with_version(raw.version)?,
            scope: raw.scope,
        })
    }
}

impl From<Declaration> for RawDeclaration {
    fn from(d: Declaration) -> Self {
        Self {
            ga: d.coordinate.ga().clone(),
            version: d.coordinate.version().to_string(),
            scope: d.scope,
        }
    }
}

/// A node of a resolved tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedNode {
    pub coordinate: Coordinate,
    pub scope: Scope,
    /// Distance from the root; direct dependencies sit at depth 1.
    pub depth: usize,
    /// GA of the node through which this one was resolved; `None` for direct dependencies.
    pub parent: Option<GA>,
}

impl ResolvedNode {
    pub fn kind(&self) -> DepKind {
        if self.depth <= 1 {
            DepKind::Direct
        } else {
            DepKind::Transitive
        }
    }
}

/// Mediated dependency tree: at most one version per GA, each node reached
/// through exactly one resolution parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    root: Coordinate,
    nodes: BTreeMap<GA, ResolvedNode>,
    /// Resolution order (breadth first).
    order: Vec<GA>,
}

impl DependencyTree {
    pub(crate) fn from_resolution(root: Coordinate, resolved: Vec<ResolvedNode>) -> Self {
        let order = resolved.iter().map(|n| n.coordinate.ga().clone()).collect();
        let nodes = resolved
            .into_iter()
            .map(|n| (n.coordinate.ga().clone(), n))
            .collect();
        Self { root, nodes, order }
    }

    pub fn root(&self) -> &Coordinate {
        &self.root
    }

    pub fn get(&self, ga: &GA) -> Option<&ResolvedNode> {
        self.nodes.get(ga)
    }

    pub fn contains(&self, ga: &GA) -> bool {
        self.nodes.contains_key(ga)
    }

    /// Non-root nodes in breadth-first resolution order.
    pub fn nodes(&self) -> impl Iterator<Item = &ResolvedNode> {
        self.order.iter().map(move |ga| &self.nodes[ga])
    }

    /// Number of nodes including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn direct(&self) -> impl Iterator<Item = &ResolvedNode> {
        self.nodes().filter(|n| n.kind() == DepKind::Direct)
    }

    pub fn transitive(&self) -> impl Iterator<Item = &ResolvedNode> {
        self.nodes().filter(|n| n.kind() == DepKind::Transitive)
    }

    /// Parent→child edges; `None` stands for the root.
    pub fn edges(&self) -> impl Iterator<Item = (Option<&GA>, &GA)> {
        self.nodes().map(|n| (n.parent.as_ref(), n.coordinate.ga()))
    }

    /// Resolution ancestors of `ga`, nearest first, excluding the root and `ga` itself.
    pub fn ancestors(&self, ga: &GA) -> Vec<&ResolvedNode> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(ga).and_then(|n| n.parent.as_ref());
        while let Some(p) = cur {
            let node = &self.nodes[p];
            out.push(node);
            cur = node.parent.as_ref();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsageStatus {
    Used,
    Bloated,
}

impl UsageStatus {
    pub fn letter(self) -> char {
        match self {
            UsageStatus::Used => 'U',
            UsageStatus::Bloated => 'B',
        }
    }
}

impl fmt::Display for UsageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UsageStatus::Used => "used",
            UsageStatus::Bloated => "bloated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Actor {
    Human(String),
    Bot(String),
}

impl Actor {
    pub fn name(&self) -> &str {
        match self {
            Actor::Human(n) | Actor::Bot(n) => n,
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Actor::Bot(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Release,
    BotUpdate,
    #[default]
    Other,
}

/// One analyzed commit.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub commit_id: String,
    pub timestamp: DateTime<Utc>,
    pub actor: Actor,
    pub kind: SnapshotKind,
    pub project_version: String,
    pub manifest: Vec<Declaration>,
    pub tree: DependencyTree,
    pub facts: UsageFacts,
    pub statuses: BTreeMap<Coordinate, UsageStatus>,
}

impl Snapshot {
    /// Status of the dependency keyed by `ga`, if it is resolved with an analyzed scope.
    pub fn status_of(&self, ga: &GA) -> Option<UsageStatus> {
        let node = self.tree.get(ga)?;
        self.statuses.get(&node.coordinate).copied()
    }

    /// Statuses of the analyzed dependencies of one kind.
    pub fn statuses_of_kind(&self, kind: DepKind) -> impl Iterator<Item = (&ResolvedNode, UsageStatus)> {
        self.tree
            .nodes()
            .filter(move |n| n.kind() == kind)
            .filter_map(|n| self.statuses.get(&n.coordinate).map(|s| (n, *s)))
    }

    pub fn bloated_count(&self, kind: DepKind) -> usize {
        self.statuses_of_kind(kind)
            .filter(|(_, s)| *s == UsageStatus::Bloated)
            .count()
    }
}

/// Time-ordered snapshots of one project.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectHistory {
    pub project: String,
    snapshots: Vec<Snapshot>,
}

impl ProjectHistory {
    /// Orders snapshots by `(timestamp, commit_id)`.
    pub fn new(project: impl Into<String>, mut snapshots: Vec<Snapshot>) -> Self {
        snapshots.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.commit_id.cmp(&b.commit_id))
        });
        Self {
            project: project.into(),
            snapshots,
        }
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub(crate) fn snapshots_mut(&mut self) -> &mut [Snapshot] {
        &mut self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Drops statuses of dependencies whose scope is not in `scopes`.
    pub fn restrict_scopes(&mut self, scopes: &[Scope]) {
        for snap in &mut self.snapshots {
            let tree = &snap.tree;
            snap.statuses.retain(|coord, _| {
                tree.get(coord.ga())
                    .is_some_and(|n| scopes.contains(&n.scope))
            });
        }
    }

    /// Every GA that is analyzed in some snapshot, with the kinds it appears as.
    pub fn analyzed_dependencies(&self) -> BTreeMap<GA, Vec<DepKind>> {
        let mut out: BTreeMap<GA, Vec<DepKind>> = BTreeMap::new();
        for snap in &self.snapshots {
            for node in snap.tree.nodes() {
                if snap.statuses.contains_key(&node.coordinate) {
                    let kinds = out.entry(node.coordinate.ga().clone()).or_default();
                    if !kinds.contains(&node.kind()) {
                        kinds.push(node.kind());
                    }
                }
            }
        }
        for kinds in out.values_mut() {
            kinds.sort();
        }
        out
    }
}
