//! Bloated-dependency detection and longitudinal bloat analysis.
//!
//! A dependency declared by a project (directly or transitively) is *bloated*
//! when none of its members is reachable from the project's own code through
//! the member-level call graph. Given a time-ordered history of analyzed
//! commits, the crate derives bloat trends, usage-status transition patterns,
//! version updates applied to bloated dependencies and the maintenance
//! activity that made each dependency bloated.
//!
//! Pipeline: [`ingest`] parses history and registry files, [`resolver`]
//! rebuilds each commit's dependency tree, [`usage`] computes statuses,
//! [`timeline`] runs the longitudinal analyses and [`report`] renders them.

pub mod cli;
pub mod ingest;
pub mod model;
pub mod report;
pub mod resolver;
pub mod scalar;
pub mod timeline;
pub mod usage;

pub use model::{
    parse_coordinate, Actor, Coordinate, Declaration, DepKind, DependencyTree, ProjectHistory,
    ResolvedNode, Scope, Snapshot, SnapshotKind, UsageStatus, GA,
};
pub use resolver::{resolve_tree, Registry};
pub use scalar::Scalar;
pub use timeline::{Origin, OriginLabel, Pattern, Trend, UpdateEvent, UpdateStats};
pub use usage::{compute_statuses, reachable_members, using_classes, MemberGraph, Owner, UsageFacts};

pub type Stats = report::DescriptiveStats<f64>;
pub type Stats32 = report::DescriptiveStats<f32>;
pub type MonthlyAverage = report::MonthlyRow<f64>;
pub type MonthlyAverage32 = report::MonthlyRow<f32>;
