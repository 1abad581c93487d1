//! Used/bloated classification by reachability over the member-level call graph.
//!
//! A dependency is used when at least one of its members can be reached from a
//! member of the project's own classes. Paths may cross other dependencies.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Coordinate, DependencyTree, UsageStatus, GA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UsageError {
    #[error("call edge references undeclared member `{0}`")]
    UnknownMember(String),
    #[error("member `{0}` is declared more than once")]
    DuplicateMember(String),
    #[error("member `{member}` is owned by undeclared project class `{class}`")]
    UnknownClass { member: String, class: String },
    #[error("usage facts reference artifact {0} which is not in the dependency tree")]
    UnknownOwner(GA),
    #[error("dependency {0} is not in the dependency tree")]
    UnknownDependency(GA),
}

/// Who declares a member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Owner {
    #[serde(rename = "class")]
    ProjectClass(String),
    #[serde(rename = "ga")]
    Artifact(GA),
}

/// Member ownership and call edges extracted from one commit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFacts", into = "RawFacts")]
pub struct UsageFacts {
    classes: BTreeSet<String>,
    members: BTreeMap<String, Owner>,
    calls: BTreeSet<(String, String)>,
}

impl UsageFacts {
    pub fn new(
        classes: impl IntoIterator<Item = String>,
        members: impl IntoIterator<Item = (String, Owner)>,
        calls: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, UsageError> {
        let classes: BTreeSet<String> = classes.into_iter().collect();
        let mut by_id = BTreeMap::new();
        for (id, owner) in members {
            if let Owner::ProjectClass(class) = &owner {
                if !classes.contains(class) {
                    return Err(UsageError::UnknownClass {
                        member: id,
                        class: class.clone(),
                    });
                }
            }
            if by_id.contains_key(&id) {
                return Err(UsageError::DuplicateMember(id));
            }
            by_id.insert(id, owner);
        }
        let calls: BTreeSet<(String, String)> = calls.into_iter().collect();
        for (caller, callee) in &calls {
            for id in [caller, callee] {
                if !by_id.contains_key(id) {
                    return Err(UsageError::UnknownMember(id.clone()));
                }
            }
        }
        Ok(Self {
            classes,
            members: by_id,
            calls,
        })
    }

    pub fn project_classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn members(&self) -> &BTreeMap<String, Owner> {
        &self.members
    }

    pub fn calls(&self) -> &BTreeSet<(String, String)> {
        &self.calls
    }

    /// Artifacts owning at least one member.
    pub fn owner_artifacts(&self) -> BTreeSet<&GA> {
        self.members
            .values()
            .filter_map(|o| match o {
                Owner::Artifact(ga) => Some(ga),
                Owner::ProjectClass(_) => None,
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RawMember {
    id: String,
    owner: Owner,
}

#[derive(Serialize, Deserialize, Default)]
struct RawFacts {
    #[serde(default)]
    classes: Vec<String>,
    #[serde(default)]
    members: Vec<RawMember>,
    #[serde(default)]
    calls: Vec<(String, String)>,
}

impl TryFrom<RawFacts> for UsageFacts {
    type Error = UsageError;

    fn try_from(raw: RawFacts) -> Result<Self, Self::Error> {
        UsageFacts::new(
            raw.classes,
            raw.members.into_iter().map(|m| (m.id, m.owner)),
            raw.calls,
        )
    }
}

impl From<UsageFacts> for RawFacts {
    fn from(f: UsageFacts) -> Self {
        RawFacts {
            classes: f.classes.into_iter().collect(),
            members: f
                .members
                .into_iter()
                .map(|(id, owner)| RawMember { id, owner })
                .collect(),
            calls: f.calls.into_iter().collect(),
        }
    }
}

/// Indexed call graph; the roots are the members of project classes.
#[derive(Debug, Clone)]
pub struct MemberGraph {
    ids: Vec<String>,
    owners: Vec<Owner>,
    forward: Vec<Vec<usize>>,
    backward: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl MemberGraph {
    pub fn new(facts: &UsageFacts) -> Self {
        let ids: Vec<String> = facts.members.keys().cloned().collect();
        let owners: Vec<Owner> = facts.members.values().cloned().collect();
        let index: HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut forward = vec![Vec::new(); ids.len()];
        let mut backward = vec![Vec::new(); ids.len()];
        for (caller, callee) in &facts.calls {
            let (a, b) = (index[caller.as_str()], index[callee.as_str()]);
            forward[a].push(b);
            backward[b].push(a);
        }
        let roots = owners
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o, Owner::ProjectClass(_)))
            .map(|(i, _)| i)
            .collect();
        Self {
            ids,
            owners,
            forward,
            backward,
            roots,
        }
    }

    pub fn root_ids(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(|&i| self.ids[i].as_str())
    }

    fn closure(adj: &[Vec<usize>], start: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::new();
        for s in start {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    fn reachable_mask(&self) -> Vec<bool> {
        Self::closure(&self.forward, self.roots.iter().copied())
    }
}

/// Forward closure of the root set, roots included.
pub fn reachable_members(graph: &MemberGraph) -> BTreeSet<String> {
    graph
        .reachable_mask()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| *r)
        .map(|(i, _)| graph.ids[i].clone())
        .collect()
}

fn check_owners(tree: &DependencyTree, facts: &UsageFacts) -> Result<(), UsageError> {
    match facts.owner_artifacts().into_iter().find(|ga| !tree.contains(ga)) {
        Some(ga) => Err(UsageError::UnknownOwner(ga.clone())),
        None => Ok(()),
    }
}

/// Status of every compile/test dependency of `tree`.
pub fn compute_statuses(
    tree: &DependencyTree,
    facts: &UsageFacts,
) -> Result<BTreeMap<Coordinate, UsageStatus>, UsageError> {
    check_owners(tree, facts)?;
    let graph = MemberGraph::new(facts);
    let reached = graph.reachable_mask();
    let used: BTreeSet<&GA> = graph
        .owners
        .iter()
        .zip(reached)
        .filter_map(|(owner, r)| match owner {
            Owner::Artifact(ga) if r => Some(ga),
            _ => None,
        })
        .collect();
    Ok(tree
        .nodes()
        .filter(|n| n.scope.is_analyzed())
        .map(|n| {
            let status = if used.contains(n.coordinate.ga()) {
                UsageStatus::Used
            } else {
                UsageStatus::Bloated
            };
            (n.coordinate.clone(), status)
        })
        .collect())
}

/// Project classes with a call path into some member of `dependency`.
pub fn using_classes(
    tree: &DependencyTree,
    facts: &UsageFacts,
    dependency: &GA,
) -> Result<BTreeSet<String>, UsageError> {
    if !tree.contains(dependency) {
        return Err(UsageError::UnknownDependency(dependency.clone()));
    }
    check_owners(tree, facts)?;
    let graph = MemberGraph::new(facts);
    let targets = graph
        .owners
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o, Owner::Artifact(ga) if ga == dependency))
        .map(|(i, _)| i);
    // Members that can reach the dependency, found by walking call edges backwards.
    let reaching = MemberGraph::closure(&graph.backward, targets);
    Ok(graph
        .roots
        .iter()
        .filter(|&&r| reaching[r])
        .filter_map(|&r| match &graph.owners[r] {
            Owner::ProjectClass(c) => Some(c.clone()),
            Owner::Artifact(_) => None,
        })
        .collect())
}
