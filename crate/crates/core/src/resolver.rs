//! Dependency-tree resolution with nearest-declaration mediation.

use std::collections::{BTreeMap, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{Coordinate, Declaration, DependencyTree, ResolvedNode, Scope, GA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("artifact {0} is not present in the registry")]
    MissingArtifact(Coordinate),
    #[error("dependency {0} is declared more than once in the manifest")]
    DuplicateDeclaration(GA),
}

/// Declared dependencies of every known artifact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entries: BTreeMap<Coordinate, Vec<Declaration>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, coordinate: Coordinate, dependencies: Vec<Declaration>) {
        self.entries.insert(coordinate, dependencies);
    }

    pub fn contains(&self, coordinate: &Coordinate) -> bool {
        self.entries.contains_key(coordinate)
    }

    pub fn lookup(&self, coordinate: &Coordinate) -> Result<&[Declaration], ResolveError> {
        self.entries
            .get(coordinate)
            .map(Vec::as_slice)
            .ok_or_else(|| ResolveError::MissingArtifact(coordinate.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Coordinate, &[Declaration])> {
        self.entries.iter().map(|(c, d)| (c, d.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(Coordinate, Vec<Declaration>)> for Registry {
    fn from_iter<I: IntoIterator<Item = (Coordinate, Vec<Declaration>)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

// A compile parent passes the declared scope through; any other parent scope
// dominates its children.
fn propagate(parent: &Scope, declared: &Scope) -> Scope {
    match parent {
        Scope::Compile => declared.clone(),
        other => other.clone(),
    }
}

/// Resolves the dependency tree of `root` from its `manifest`.
///
/// Breadth-first expansion; the first version of a GA reached (shallowest,
/// then earliest in declaration order) wins and every other version of that
/// GA is dropped together with its subtree. Test-scoped declarations of
/// non-root artifacts are not followed.
pub fn resolve_tree(
    root: &Coordinate,
    manifest: &[Declaration],
    registry: &Registry,
) -> Result<DependencyTree, ResolveError> {
    let mut declared = HashSet::new();
    for decl in manifest {
        if !declared.insert(decl.ga()) {
            return Err(ResolveError::DuplicateDeclaration(decl.ga().clone()));
        }
    }

    let mut seen: HashSet<GA> = HashSet::from([root.ga().clone()]);
    let mut resolved: Vec<ResolvedNode> = Vec::new();
    let mut queue = VecDeque::new();

    for decl in manifest {
        if !seen.insert(decl.ga().clone()) {
            continue;
        }
        let node = ResolvedNode {
            coordinate: decl.coordinate.clone(),
            scope: decl.scope.clone(),
            depth: 1,
            parent: None,
        };
        queue.push_back(resolved.len());
        resolved.push(node);
    }

    while let Some(idx) = queue.pop_front() {
        let (coordinate, scope, depth) = {
            let n = &resolved[idx];
            (n.coordinate.clone(), n.scope.clone(), n.depth)
        };
        for decl in registry.lookup(&coordinate)? {
            if decl.scope == Scope::Test || !seen.insert(decl.ga().clone()) {
                continue;
            }
            queue.push_back(resolved.len());
            resolved.push(ResolvedNode {
                coordinate: decl.coordinate.clone(),
                scope: propagate(&scope, &decl.scope),
                depth: depth + 1,
                parent: Some(coordinate.ga().clone()),
            });
        }
    }

    Ok(DependencyTree::from_resolution(root.clone(), resolved))
}
