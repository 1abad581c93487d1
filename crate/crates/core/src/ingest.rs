//! Loading of project-history and registry files, and snapshot marking
//! (release commits, bot commits).
//!
//! A history file is the boundary of the tool: each snapshot carries the
//! manifest and the usage facts extracted from one commit. Trees and statuses
//! are recomputed at load time against a registry file.

use std::fs;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Actor, Coordinate, Declaration, ProjectHistory, Scope, Snapshot, SnapshotKind, GA,
};
use crate::resolver::{resolve_tree, Registry, ResolveError};
use crate::usage::{compute_statuses, UsageError, UsageFacts};

pub const DEFAULT_BOT_PATTERNS: &[&str] = &["dependabot"];
pub const DEFAULT_PRERELEASE_MARKERS: &[&str] = &["SNAPSHOT", "beta"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{location}: {source}")]
    Io {
        location: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: schema error: {message}")]
    Schema { location: String, message: String },
    #[error("{location}: {source}")]
    Resolve {
        location: String,
        #[source]
        source: ResolveError,
    },
    #[error("{location}: {source}")]
    Usage {
        location: String,
        #[source]
        source: UsageError,
    },
}

impl IngestError {
    fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    fn json(origin: &str, err: serde_json::Error) -> Self {
        Self::schema(format!("{origin}:{}:{}", err.line(), err.column()), err.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryRecord {
    coordinate: Coordinate,
    #[serde(default)]
    dependencies: Vec<Declaration>,
}

#[derive(Serialize, Deserialize)]
struct HistoryFile {
    project: String,
    snapshots: Vec<SnapshotRecord>,
}

/// One snapshot as stored in a history file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub commit: String,
    /// RFC 3339 / ISO-8601 instant.
    pub timestamp: String,
    pub author: String,
    pub project_version: String,
    #[serde(default)]
    pub manifest: Vec<Declaration>,
    #[serde(default)]
    pub facts: UsageFacts,
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        location: path.display().to_string(),
        source,
    })
}

pub fn parse_registry_str(text: &str, origin: &str) -> Result<Registry, IngestError> {
    let records: Vec<RegistryRecord> =
        serde_json::from_str(text).map_err(|e| IngestError::json(origin, e))?;
    let mut registry = Registry::new();
    for (i, rec) in records.into_iter().enumerate() {
        if registry.contains(&rec.coordinate) {
            return Err(IngestError::schema(
                format!("{origin}: [{i}]"),
                format!("duplicate registry entry {}", rec.coordinate),
            ));
        }
        registry.insert(rec.coordinate, rec.dependencies);
    }
    Ok(registry)
}

pub fn load_registry(path: &Path) -> Result<Registry, IngestError> {
    parse_registry_str(&read(path)?, &path.display().to_string())
}

/// Serializes a registry in the registry file format.
pub fn registry_to_json(registry: &Registry) -> String {
    let records: Vec<RegistryRecord> = registry
        .iter()
        .map(|(c, deps)| RegistryRecord {
            coordinate: c.clone(),
            dependencies: deps.to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("registry serializes")
}

fn root_coordinate(project: &str, version: &str) -> Result<Coordinate, crate::model::ModelError> {
    match project.parse::<GA>() {
        Ok(ga) => ga.with_version(version),
        Err(_) => Coordinate::new("project", project, version),
    }
}

fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let ts = DateTime::parse_from_rfc3339(text).ok()?.with_timezone(&Utc);
    ts.with_nanosecond(0)
}

/// Parses a history file and analyzes every snapshot against `registry`.
///
/// Snapshots come back ordered by `(timestamp, commit)`, with actor `Human`
/// and kind `Other`; see [`detect_releases`] and [`detect_bots`].
pub fn parse_history_str(
    text: &str,
    origin: &str,
    registry: &Registry,
) -> Result<ProjectHistory, IngestError> {
    let file: HistoryFile = serde_json::from_str(text).map_err(|e| IngestError::json(origin, e))?;
    if file.snapshots.len() < 2 {
        return Err(IngestError::schema(
            format!("{origin}: snapshots"),
            format!(
                "at least two snapshots are required, found {}",
                file.snapshots.len()
            ),
        ));
    }
    let mut snapshots = Vec::with_capacity(file.snapshots.len());
    for (i, rec) in file.snapshots.into_iter().enumerate() {
        let location = format!("{origin}: snapshots[{i}] (commit {})", rec.commit);
        snapshots.push(analyze_snapshot(&file.project, rec, registry, &location)?);
    }
    Ok(ProjectHistory::new(file.project, snapshots))
}

/// Resolves the tree of one snapshot and computes its statuses.
pub fn analyze_snapshot(
    project: &str,
    rec: SnapshotRecord,
    registry: &Registry,
    location: &str,
) -> Result<Snapshot, IngestError> {
    let timestamp = parse_timestamp(&rec.timestamp).ok_or_else(|| {
        IngestError::schema(location, format!("invalid timestamp `{}`", rec.timestamp))
    })?;
    let root = root_coordinate(project, &rec.project_version)
        .map_err(|e| IngestError::schema(location, e.to_string()))?;
    for decl in &rec.manifest {
        if let Scope::Other(label) = &decl.scope {
            log::warn!("{location}: {} has unknown scope `{label}`, not analyzed", decl.ga());
        }
    }
    let tree = resolve_tree(&root, &rec.manifest, registry).map_err(|source| {
        IngestError::Resolve {
            location: location.to_string(),
            source,
        }
    })?;
    let statuses = compute_statuses(&tree, &rec.facts).map_err(|source| IngestError::Usage {
        location: location.to_string(),
        source,
    })?;
    Ok(Snapshot {
        actor: Actor::Human(rec.author),
        kind: SnapshotKind::Other,
        commit_id: rec.commit,
        timestamp,
        project_version: rec.project_version,
        manifest: rec.manifest,
        tree,
        facts: rec.facts,
        statuses,
    })
}

pub fn parse_history(path: &Path, registry: &Registry) -> Result<ProjectHistory, IngestError> {
    parse_history_str(&read(path)?, &path.display().to_string(), registry)
}

/// Serializes a history back into the history file format.
pub fn history_to_json(history: &ProjectHistory) -> String {
    let file = HistoryFile {
        project: history.project.clone(),
        snapshots: history
            .snapshots()
            .iter()
            .map(|s| SnapshotRecord {
                commit: s.commit_id.clone(),
                timestamp: s.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
                author: s.actor.name().to_string(),
                project_version: s.project_version.clone(),
                manifest: s.manifest.clone(),
                facts: s.facts.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("history serializes")
}

fn contains_ignore_case(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// Marks release snapshots: the project version changed from the previous
/// snapshot (or it is the first) and contains none of `prerelease_markers`.
/// Bot-update snapshots keep their kind.
pub fn detect_releases<S: AsRef<str>>(history: &mut ProjectHistory, prerelease_markers: &[S]) {
    let versions: Vec<String> = history
        .snapshots()
        .iter()
        .map(|s| s.project_version.clone())
        .collect();
    for (i, snap) in history.snapshots_mut().iter_mut().enumerate() {
        if snap.kind == SnapshotKind::BotUpdate {
            continue;
        }
        let changed = i == 0 || versions[i - 1] != versions[i];
        let prerelease = prerelease_markers
            .iter()
            .any(|m| contains_ignore_case(&versions[i], m.as_ref()));
        snap.kind = if changed && !prerelease {
            SnapshotKind::Release
        } else {
            SnapshotKind::Other
        };
    }
}

/// Marks snapshots whose author name contains one of `patterns` as bot updates.
pub fn detect_bots<S: AsRef<str>>(history: &mut ProjectHistory, patterns: &[S]) {
    for snap in history.snapshots_mut() {
        let name = snap.actor.name().to_string();
        if patterns.iter().any(|p| contains_ignore_case(&name, p.as_ref())) {
            snap.actor = Actor::Bot(name);
            snap.kind = SnapshotKind::BotUpdate;
        } else {
            snap.actor = Actor::Human(name);
            if snap.kind == SnapshotKind::BotUpdate {
                snap.kind = SnapshotKind::Other;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub bot_patterns: Vec<String>,
    pub prerelease_markers: Vec<String>,
    pub scopes: Vec<Scope>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            bot_patterns: DEFAULT_BOT_PATTERNS.iter().map(|s| s.to_string()).collect(),
            prerelease_markers: DEFAULT_PRERELEASE_MARKERS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            scopes: vec![Scope::Compile, Scope::Test],
        }
    }
}

/// Parses a history file, marks releases and bot commits and restricts
/// statuses to the requested scopes.
pub fn load_project(
    path: &Path,
    registry: &Registry,
    options: &IngestOptions,
) -> Result<ProjectHistory, IngestError> {
    let mut history = parse_history(path, registry)?;
    detect_releases(&mut history, &options.prerelease_markers);
    detect_bots(&mut history, &options.bot_patterns);
    history.restrict_scopes(&options.scopes);
    Ok(history)
}
