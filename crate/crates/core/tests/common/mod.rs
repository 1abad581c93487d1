//! Builders, random instance generators and brute-force oracles shared by the
//! integration and acceptance tests. The oracles deliberately avoid the
//! library's algorithms: they enumerate paths explicitly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use bloat_lens::ingest::{analyze_snapshot, SnapshotRecord};
use bloat_lens::{
    Coordinate, Declaration, DependencyTree, Owner, ProjectHistory, Registry, Scope, UsageFacts,
    UsageStatus, GA,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn ga(s: &str) -> GA {
    s.parse().unwrap()
}

pub fn coord(s: &str) -> Coordinate {
    s.parse().unwrap()
}

pub fn decl(ga_text: &str, version: &str) -> Declaration {
    Declaration::new(ga(ga_text).with_version(version).unwrap(), Scope::Compile)
}

pub fn scoped(ga_text: &str, version: &str, scope: Scope) -> Declaration {
    Declaration::new(ga(ga_text).with_version(version).unwrap(), scope)
}

/// Facts from `(member, owner)` pairs where owner is `class:Name` or a GA.
pub fn facts(classes: &[&str], members: &[(&str, &str)], calls: &[(&str, &str)]) -> UsageFacts {
    UsageFacts::new(
        classes.iter().map(|c| c.to_string()),
        members.iter().map(|(id, owner)| {
            let owner = match owner.strip_prefix("class:") {
                Some(c) => Owner::ProjectClass(c.to_string()),
                None => Owner::Artifact(ga(owner)),
            };
            (id.to_string(), owner)
        }),
        calls.iter().map(|(a, b)| (a.to_string(), b.to_string())),
    )
    .unwrap()
}

pub struct SnapSpec {
    pub commit: String,
    pub author: String,
    pub version: String,
    pub manifest: Vec<Declaration>,
    pub facts: UsageFacts,
}

pub fn snap(commit: &str, author: &str, manifest: Vec<Declaration>, facts: UsageFacts) -> SnapSpec {
    SnapSpec {
        commit: commit.into(),
        author: author.into(),
        version: "1.0".into(),
        manifest,
        facts,
    }
}

/// Builds a history with one snapshot per day starting 2020-01-01.
pub fn history(project: &str, registry: &Registry, specs: Vec<SnapSpec>) -> ProjectHistory {
    let snaps = specs
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let day = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64);
            let rec = SnapshotRecord {
                commit: s.commit,
                timestamp: format!("{day}T00:00:00Z"),
                author: s.author,
                project_version: s.version,
                manifest: s.manifest,
                facts: s.facts,
            };
            analyze_snapshot(project, rec, registry, "test").unwrap()
        })
        .collect();
    ProjectHistory::new(project, snaps)
}

pub fn registry(entries: Vec<(&str, Vec<Declaration>)>) -> Registry {
    entries.into_iter().map(|(c, d)| (coord(c), d)).collect()
}

// ---------------------------------------------------------------------------
// Resolver: random registries and the path-enumeration oracle.

pub struct ResolverCase {
    pub root: Coordinate,
    pub manifest: Vec<Declaration>,
    pub registry: Registry,
}

/// Random registry over at most `max_artifacts` GAs (two versions each).
pub fn random_resolver_case(rng: &mut StdRng, max_artifacts: usize) -> ResolverCase {
    let n = rng.gen_range(1..=max_artifacts);
    let gas: Vec<String> = (0..n).map(|i| format!("r:a{i}")).collect();
    let versions = ["1", "2"];
    let mut registry = Registry::new();
    for g in &gas {
        for v in versions {
            let k = rng.gen_range(0..=3);
            let mut deps: Vec<Declaration> = Vec::new();
            for other in gas.choose_multiple(rng, k) {
                let scope = if rng.gen_bool(0.15) { Scope::Test } else if rng.gen_bool(0.1) { Scope::Runtime } else { Scope::Compile };
                // occasionally point back at the root GA to exercise cycle cutting
                let target = if rng.gen_bool(0.05) { "r:root" } else { other.as_str() };
                if deps.iter().any(|d| d.ga().to_string() == target) {
                    continue;
                }
                deps.push(scoped(target, versions.choose(rng).unwrap(), scope));
            }
            registry.insert(coord(&format!("{g}:{v}")), deps);
        }
    }
    registry.insert(coord("r:root:1"), Vec::new());
    registry.insert(coord("r:root:2"), Vec::new());
    let k = rng.gen_range(0..=n.min(4));
    let manifest = gas
        .choose_multiple(rng, k)
        .map(|g| {
            let scope = if rng.gen_bool(0.2) { Scope::Test } else { Scope::Compile };
            scoped(g, versions.choose(rng).unwrap(), scope)
        })
        .collect();
    ResolverCase {
        root: coord("r:root:1"),
        manifest,
        registry,
    }
}

/// Resolved node as computed by the oracle: coordinate, depth, parent GA, scope.
pub type OracleNode = (Coordinate, usize, Option<GA>, Scope);

/// Enumerates every simple root-to-node path over declarations (no repeated
/// GA, test scope only at the root), sorts all paths by (length, index
/// sequence), and accepts a path when its prefix is the accepted path of its
/// own last GA and its final GA has no accepted path yet.
pub fn oracle_resolve(case: &ResolverCase) -> BTreeMap<GA, OracleNode> {
    struct Path {
        idx: Vec<usize>,
        nodes: Vec<Declaration>,
    }
    let root_ga = case.root.ga().clone();
    let mut paths: Vec<Path> = Vec::new();
    fn extend(
        case: &ResolverCase,
        root_ga: &GA,
        idx: &mut Vec<usize>,
        nodes: &mut Vec<Declaration>,
        out: &mut Vec<Path>,
    ) {
        let children: Vec<Declaration> = match nodes.last() {
            None => case.manifest.clone(),
            Some(last) => match case.registry.lookup(&last.coordinate) {
                Ok(d) => d.iter().filter(|d| d.scope != Scope::Test).cloned().collect(),
                Err(_) => Vec::new(),
            },
        };
        for (i, child) in children.into_iter().enumerate() {
            if child.ga() == root_ga || nodes.iter().any(|n| n.ga() == child.ga()) {
                continue;
            }
            idx.push(i);
            nodes.push(child);
            out.push(Path {
                idx: idx.clone(),
                nodes: nodes.clone(),
            });
            extend(case, root_ga, idx, nodes, out);
            idx.pop();
            nodes.pop();
        }
    }
    extend(case, &root_ga, &mut Vec::new(), &mut Vec::new(), &mut paths);
    paths.sort_by(|a, b| a.idx.len().cmp(&b.idx.len()).then_with(|| a.idx.cmp(&b.idx)));

    let mut accepted: HashMap<GA, Vec<usize>> = HashMap::new();
    let mut out = BTreeMap::new();
    for p in &paths {
        let last = p.nodes.last().unwrap();
        if accepted.contains_key(last.ga()) {
            continue;
        }
        // every proper prefix must be the accepted path of its own final GA;
        // an index sequence determines the declarations along it
        let valid = (1..p.nodes.len())
            .all(|k| accepted.get(p.nodes[k - 1].ga()).map(Vec::as_slice) == Some(&p.idx[..k]));
        if !valid {
            continue;
        }
        let mut scope = p.nodes[0].scope.clone();
        for n in &p.nodes[1..] {
            if scope == Scope::Compile {
                scope = n.scope.clone();
            }
        }
        let parent = (p.nodes.len() > 1).then(|| p.nodes[p.nodes.len() - 2].ga().clone());
        accepted.insert(last.ga().clone(), p.idx.clone());
        out.insert(
            last.ga().clone(),
            (last.coordinate.clone(), p.nodes.len(), parent, scope),
        );
    }
    out
}

pub fn tree_as_oracle(tree: &DependencyTree) -> BTreeMap<GA, OracleNode> {
    tree.nodes()
        .map(|n| {
            (
                n.coordinate.ga().clone(),
                (n.coordinate.clone(), n.depth, n.parent.clone(), n.scope.clone()),
            )
        })
        .collect()
}

/// Kahn's algorithm over the tree edges; true when every node gets ordered.
pub fn topologically_sortable(tree: &DependencyTree) -> bool {
    let root = tree.root().ga().clone();
    let mut indegree: BTreeMap<GA, usize> = tree.nodes().map(|n| (n.coordinate.ga().clone(), 0)).collect();
    indegree.insert(root.clone(), 0);
    let mut adj: BTreeMap<GA, Vec<GA>> = BTreeMap::new();
    for (parent, child) in tree.edges() {
        let p = parent.cloned().unwrap_or_else(|| root.clone());
        adj.entry(p).or_default().push(child.clone());
        *indegree.get_mut(child).unwrap() += 1;
    }
    let mut ready: Vec<GA> = indegree.iter().filter(|(_, &d)| d == 0).map(|(g, _)| g.clone()).collect();
    let mut seen = 0;
    while let Some(g) = ready.pop() {
        seen += 1;
        for c in adj.get(&g).cloned().unwrap_or_default() {
            let d = indegree.get_mut(&c).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(c);
            }
        }
    }
    seen == indegree.len()
}

// ---------------------------------------------------------------------------
// Usage: random member graphs and the path-enumeration oracle.

pub struct UsageCase {
    pub tree: DependencyTree,
    pub facts: UsageFacts,
}

/// Six dependencies (some transitive), at most 12 members, random call edges.
pub fn random_usage_case(rng: &mut StdRng) -> UsageCase {
    let deps = 1 + rng.gen_range(0..6);
    let names: Vec<String> = (0..deps).map(|i| format!("u:d{i}")).collect();
    let mut reg = Registry::new();
    let mut manifest = Vec::new();
    for (i, name) in names.iter().enumerate() {
        // the first dependency is always direct; others hang under an earlier one half the time
        let children: Vec<Declaration> = names[i + 1..]
            .iter()
            .filter(|_| rng.gen_bool(0.3))
            .map(|n| decl(n, "1"))
            .collect();
        reg.insert(coord(&format!("{name}:1")), children);
        if i == 0 || rng.gen_bool(0.5) {
            let scope = if rng.gen_bool(0.2) { Scope::Test } else { Scope::Compile };
            manifest.push(scoped(name, "1", scope));
        }
    }
    let tree = bloat_lens::resolve_tree(&coord("u:p:1"), &manifest, &reg).unwrap();
    let present: Vec<GA> = tree.nodes().map(|n| n.coordinate.ga().clone()).collect();
    let classes: Vec<String> = (0..rng.gen_range(0..=3)).map(|i| format!("C{i}")).collect();
    let n_members = rng.gen_range(0..=12);
    let mut members = Vec::new();
    for m in 0..n_members {
        let owner = if !classes.is_empty() && rng.gen_bool(0.35) {
            Owner::ProjectClass(classes.choose(rng).unwrap().clone())
        } else {
            Owner::Artifact(present.choose(rng).unwrap().clone())
        };
        members.push((format!("m{m}"), owner));
    }
    let mut calls = Vec::new();
    for a in 0..n_members {
        for b in 0..n_members {
            if rng.gen_bool(0.15) {
                calls.push((format!("m{a}"), format!("m{b}")));
            }
        }
    }
    let facts = UsageFacts::new(classes, members, calls).unwrap();
    UsageCase { tree, facts }
}

/// All endpoints of simple paths starting at `start` (start included).
fn path_endpoints(adj: &BTreeMap<&str, Vec<&str>>, start: &str) -> BTreeSet<String> {
    fn walk<'a>(
        adj: &BTreeMap<&'a str, Vec<&'a str>>,
        path: &mut Vec<&'a str>,
        out: &mut BTreeSet<String>,
    ) {
        let here = *path.last().unwrap();
        out.insert(here.to_string());
        for &next in adj.get(here).map(Vec::as_slice).unwrap_or(&[]) {
            if !path.contains(&next) {
                path.push(next);
                walk(adj, path, out);
                path.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    let start: &str = adj.keys().find(|k| **k == start).copied().unwrap_or(start);
    walk(adj, &mut vec![start], &mut out);
    out
}

fn adjacency(facts: &UsageFacts) -> BTreeMap<&str, Vec<&str>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = facts.members().keys().map(|k| (k.as_str(), Vec::new())).collect();
    for (a, b) in facts.calls() {
        adj.get_mut(a.as_str()).unwrap().push(b.as_str());
    }
    adj
}

/// Members reachable from the members of `classes` (all project classes when `None`).
pub fn oracle_reached(facts: &UsageFacts, classes: Option<&BTreeSet<String>>) -> BTreeSet<String> {
    let adj = adjacency(facts);
    let mut reached = BTreeSet::new();
    for (id, owner) in facts.members() {
        if let Owner::ProjectClass(c) = owner {
            if classes.is_none_or(|set| set.contains(c)) {
                reached.extend(path_endpoints(&adj, id));
            }
        }
    }
    reached
}

fn owned_by<'a>(facts: &'a UsageFacts, dep: &'a GA) -> impl Iterator<Item = &'a String> + 'a {
    facts
        .members()
        .iter()
        .filter(move |(_, o)| matches!(o, Owner::Artifact(g) if g == dep))
        .map(|(id, _)| id)
}

pub fn oracle_statuses(case: &UsageCase) -> BTreeMap<Coordinate, UsageStatus> {
    let reached = oracle_reached(&case.facts, None);
    case.tree
        .nodes()
        .filter(|n| n.scope.is_analyzed())
        .map(|n| {
            let used = owned_by(&case.facts, n.coordinate.ga()).any(|m| reached.contains(m));
            let status = if used { UsageStatus::Used } else { UsageStatus::Bloated };
            (n.coordinate.clone(), status)
        })
        .collect()
}

pub fn oracle_using_classes(case: &UsageCase, dep: &GA) -> BTreeSet<String> {
    case.facts
        .project_classes()
        .iter()
        .filter(|c| {
            let only = BTreeSet::from([(*c).clone()]);
            let reached = oracle_reached(&case.facts, Some(&only));
            owned_by(&case.facts, dep).any(|m| reached.contains(m))
        })
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Random project histories for the longitudinal oracles.

pub fn history_registry() -> Registry {
    let mut reg = Registry::new();
    for d in 0..4 {
        for v in 1..=3 {
            // version v of direct dependency d pulls in a version-dependent set of transitives
            let children = (0..4)
                .filter(|t| (d + v + t) % 3 != 0)
                .map(|t| decl(&format!("h:t{t}"), &format!("{}", 1 + (v + t) % 2)))
                .collect();
            reg.insert(coord(&format!("h:d{d}:{v}")), children);
        }
    }
    for t in 0..4 {
        for v in 1..=2 {
            reg.insert(coord(&format!("h:t{t}:{v}")), Vec::new());
        }
    }
    reg
}

pub fn random_history(rng: &mut StdRng, registry: &Registry) -> ProjectHistory {
    let n = rng.gen_range(2..=7);
    let all_classes = ["A", "B", "C"];
    let mut specs = Vec::new();
    for i in 0..n {
        let mut manifest = Vec::new();
        for d in 0..4 {
            if rng.gen_bool(0.7) {
                manifest.push(decl(&format!("h:d{d}"), &rng.gen_range(1..=3).to_string()));
            }
        }
        manifest.shuffle(rng);
        let tree = bloat_lens::resolve_tree(&coord("h:p:1.0"), &manifest, registry).unwrap();
        let classes: Vec<&str> = all_classes.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        let mut members: Vec<(String, String)> =
            classes.iter().map(|c| (format!("{c}.m"), format!("class:{c}"))).collect();
        let deps: Vec<String> = tree.nodes().map(|n| n.coordinate.ga().to_string()).collect();
        for d in &deps {
            members.push((format!("{d}#m"), d.clone()));
        }
        let mut calls = Vec::new();
        for (a, _) in &members {
            for (b, _) in &members {
                if a != b && rng.gen_bool(0.2) {
                    calls.push((a.clone(), b.clone()));
                }
            }
        }
        let member_refs: Vec<(&str, &str)> = members.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let call_refs: Vec<(&str, &str)> = calls.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let f = facts(&classes, &member_refs, &call_refs);
        let author = if rng.gen_bool(0.3) { "dependabot[bot]" } else { "dev" };
        let mut s = snap(&format!("c{i}"), author, manifest, f);
        s.version = format!("1.{}", rng.gen_range(0..3));
        specs.push(s);
    }
    let mut h = history("h:p", registry, specs);
    bloat_lens::ingest::detect_bots(&mut h, &["dependabot"]);
    h
}
