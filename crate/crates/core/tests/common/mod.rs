//! Brute-force oracles and random instance builders shared by the property
//! and acceptance targets.
#![allow(dead_code)]

use cgbench::compare::{self, MergedGraph};
use cgbench::extractor::{extract_call_graph, ExtractionMode};
use cgbench::generator::{self, Category, GeneratorParams};
use cgbench::metrics;
use cgbench::model::{CallGraph, Caller, EdgeKey, GraphBuilder, NodeKey, NodeRef, RawEdge};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub const TOOLS: [&str; 3] = ["alpha", "beta", "gamma"];

/// A pool of node keys: toplevel plus `n` functions spread over two files.
pub fn key_pool(n: usize) -> Vec<NodeKey> {
    let mut keys = vec![NodeKey::toplevel()];
    for i in 0..n {
        let file = if i % 2 == 0 { "a.js" } else { "lib/b.js" };
        keys.push(NodeKey::new(file, 1 + i as u32 * 3, 1 + (i as u32 % 4)));
    }
    keys
}

/// Builds a graph over `pool` from index pairs; `salt` varies the labels so
/// merges see disagreeing names for the same key.
pub fn graph_from_pairs(pool: &[NodeKey], pairs: &[(usize, usize)], salt: usize) -> CallGraph {
    let mut b = GraphBuilder::new();
    for &(s, t) in pairs {
        let s = b.add_node(pool[s].clone(), &format!("f{s}_{salt}"));
        let t = b.add_node(pool[t].clone(), &format!("f{t}_{salt}"));
        b.add_edge(s, t);
    }
    b.finish()
}

pub fn random_pairs(rng: &mut impl Rng, pool: usize, max_edges: usize) -> Vec<(usize, usize)> {
    let n = rng.gen_range(0..=max_edges);
    // Targets never include toplevel (index 0).
    (0..n).map(|_| (rng.gen_range(0..pool), rng.gen_range(1..pool))).collect()
}

/// Three random tool graphs over a shared pool, at most `max_edges` raw pairs each.
pub fn random_instance(seed: u64, max_edges: usize) -> Vec<CallGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = key_pool(rng.gen_range(1..8));
    (0..3)
        .map(|salt| graph_from_pairs(&pool, &random_pairs(&mut rng, pool.len(), max_edges), salt))
        .collect()
}

/// Key-level fingerprint of a merged graph: edge keys with tool sets and
/// validity, node keys with tool sets.
pub type Fingerprint = (
    BTreeMap<EdgeKey, (BTreeSet<String>, Option<bool>)>,
    BTreeMap<NodeKey, BTreeSet<String>>,
);

pub fn fingerprint(m: &MergedGraph) -> Fingerprint {
    let edges = m
        .edges()
        .map(|e| (m.edge_key(e), (e.tools.clone(), e.valid)))
        .collect();
    let nodes = m.nodes().iter().map(|n| (n.key(), n.tools.clone())).collect();
    (edges, nodes)
}

/// Checks merge invariants on one instance against a direct recount.
pub fn check_merge_instance(graphs: &[CallGraph]) -> Result<(), String> {
    let named: Vec<(&str, &CallGraph)> = TOOLS.iter().copied().zip(graphs.iter()).collect();
    let m = compare::merge(&named).map_err(|e| e.to_string())?;

    // Brute force: every edge key with the tools that report it.
    let mut expected: BTreeMap<EdgeKey, BTreeSet<String>> = BTreeMap::new();
    for (tool, g) in &named {
        for k in g.edge_keys() {
            expected.entry(k).or_default().insert(tool.to_string());
        }
    }
    let got: BTreeMap<EdgeKey, BTreeSet<String>> = m.edges().map(|e| (m.edge_key(e), e.tools.clone())).collect();
    if got != expected {
        return Err("merged edge attribution differs from recount".into());
    }

    // Order insensitivity over all permutations.
    let reference = fingerprint(&m);
    for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let shuffled: Vec<(&str, &CallGraph)> = perm.iter().map(|&i| named[i]).collect();
        let other = compare::merge(&shuffled).map_err(|e| e.to_string())?;
        if fingerprint(&other) != reference {
            return Err(format!("merge order {perm:?} changes the result"));
        }
    }

    // Incremental merging.
    let mut inc = compare::merge(&named[..2]).map_err(|e| e.to_string())?;
    inc.absorb(named[2].0, named[2].1).map_err(|e| e.to_string())?;
    if fingerprint(&inc) != reference {
        return Err("incremental merge differs".into());
    }

    // Per-tool projection.
    for (tool, g) in &named {
        let projected = m.project(tool);
        if projected.edge_keys() != g.edge_keys() {
            return Err(format!("projection of {tool} differs from its input"));
        }
    }

    // Venn regions partition the edges.
    let venn = compare::venn_regions(&m).map_err(|e| e.to_string())?;
    if venn.total_edges() != m.edge_count() {
        return Err("venn regions do not sum to the edge count".into());
    }
    for r in &venn.regions {
        let tools: BTreeSet<String> = r.tools.iter().cloned().collect();
        let count = expected.values().filter(|t| **t == tools).count();
        if count != r.edges {
            return Err(format!("region {:?} has {} edges, recount {}", r.tools, r.edges, count));
        }
    }

    // Serialization roundtrip of the merged document.
    let back = compare::deserialize_merged(&compare::serialize_merged(&m)).map_err(|e| e.to_string())?;
    if fingerprint(&back) != reference {
        return Err("merged roundtrip differs".into());
    }
    Ok(())
}

/// Marks every edge of `m` true or false at random.
pub fn validate_randomly(m: &MergedGraph, seed: u64) -> MergedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<(EdgeKey, bool)> = m.edges().map(|e| (m.edge_key(e), rng.gen_bool(0.6))).collect();
    compare::set_validity(m, &labels).unwrap()
}

/// Checks combination statistics against a recount and recall monotonicity
/// under growth of the combination.
pub fn check_combination_stats(m: &MergedGraph) -> Result<(), String> {
    let rows = metrics::combination_stats(m).map_err(|e| e.to_string())?;
    let tools: Vec<String> = m.tools().iter().cloned().collect();
    if rows.len() != (1usize << tools.len()) - 1 {
        return Err(format!("{} rows for {} tools", rows.len(), tools.len()));
    }
    let tp_star = m.edges().filter(|e| e.valid == Some(true)).count() as u64;
    let mut by_set: BTreeMap<BTreeSet<String>, &metrics::CombinationStats> = BTreeMap::new();
    for row in &rows {
        let set: BTreeSet<String> = row.combination.iter().cloned().collect();
        let found: Vec<_> = m.edges().filter(|e| !e.tools.is_disjoint(&set)).collect();
        let all = found.len() as u64;
        let tp = found.iter().filter(|e| e.valid == Some(true)).count() as u64;
        if (row.tp, row.all, row.tp_star) != (tp, all, tp_star) {
            return Err(format!(
                "{}: got {}/{}/{}, recount {}/{}/{}",
                row.name(),
                row.tp,
                row.all,
                row.tp_star,
                tp,
                all,
                tp_star
            ));
        }
        for v in [row.precision(), row.recall(), row.f_measure()] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{}: ratio {v} out of range", row.name()));
            }
        }
        by_set.insert(set, row);
    }
    for (s, a) in &by_set {
        for (t, b) in &by_set {
            if s.is_subset(t) && (a.tp > b.tp || a.all > b.all || a.recall() > b.recall()) {
                return Err(format!("{} exceeds its superset {}", a.name(), b.name()));
            }
        }
    }
    if let Some(full) = by_set.get(&tools.iter().cloned().collect::<BTreeSet<_>>()) {
        if tp_star > 0 && full.recall() != 1.0 {
            return Err("full universe recall is not 1".into());
        }
    }
    Ok(())
}

/// Random raw edge lists with duplicates and repeated keys.
pub fn random_raw(seed: u64, max_edges: usize) -> Vec<RawEdge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = key_pool(rng.gen_range(1..10));
    let n = rng.gen_range(0..=max_edges);
    let mut raw: Vec<RawEdge> = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..pool.len());
            let t = rng.gen_range(1..pool.len());
            let caller = if s == 0 {
                Caller::Global
            } else {
                Caller::Function(NodeRef::new(pool[s].clone(), format!("f{s}")))
            };
            RawEdge {
                caller,
                callee: NodeRef::new(pool[t].clone(), format!("f{t}")),
            }
        })
        .collect();
    if !raw.is_empty() {
        let dup = raw.choose(&mut rng).unwrap().clone();
        raw.push(dup);
    }
    raw
}

/// Random small COMPLEX parameters for a seed.
pub fn random_complex_params(seed: u64) -> GeneratorParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let functions = rng.gen_range(10..40);
    let max = (functions - 1) * (functions - 1);
    let edges = rng.gen_range(1..=max.min(3 * functions));
    let mut p = GeneratorParams::new(Category::Complex, functions, edges, seed);
    p.statements = (2, 4);
    p.files = rng.gen_range(1..3);
    p
}

/// Pessimistic edges are a subset of optimistic edges, and both cover the
/// parts of the manifest they are responsible for.
pub fn check_mode_monotonicity(params: &GeneratorParams) -> Result<(), String> {
    let program = generator::generate("prop", params).map_err(|e| e.to_string())?;
    let pess = extract_call_graph(&program.files, ExtractionMode::PessimisticOneshot).map_err(|e| e.to_string())?;
    let opt = extract_call_graph(&program.files, ExtractionMode::Optimistic).map_err(|e| e.to_string())?;
    let (p, o) = (pess.edge_keys(), opt.edge_keys());
    if !p.is_subset(&o) {
        return Err(format!("seed {}: {} pessimistic edges missing from optimistic", params.seed, p.difference(&o).count()));
    }
    let direct = program.manifest.direct_edges();
    if !direct.is_subset(&p) {
        return Err(format!("seed {}: pessimistic misses direct manifest edges", params.seed));
    }
    if !program.manifest.graph.edge_keys().is_subset(&o) {
        return Err(format!("seed {}: optimistic misses manifest edges", params.seed));
    }
    Ok(())
}
