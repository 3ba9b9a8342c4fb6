//! Co-occurrence graphs over one window of baskets.
//!
//! Pairs of items are scored by the PMI ratio `p(a,b) / (p(a) p(b))`, the top
//! fraction `rho` of all distinct pairs become edges, and the connected
//! components of the resulting graph are the clusters. Edges whose removal
//! disconnects their component (bridges) are flagged so explanation views can
//! draw them differently.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::dataset::{Basket, ItemCatalog};
use crate::error::{Error, Result};

/// PMI ratio for an unordered item pair, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

impl EdgeScore {
    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }
}

/// Scores every pair of items that occur at least once in `bs`.
///
/// Output is ordered by `(a, b)`. Pairs that never co-occur score 0.
pub fn cooccurrence_scores(bs: &[&Basket], catalog: &ItemCatalog) -> Result<Vec<EdgeScore>> {
    if bs.is_empty() {
        return Err(Error::validation("cannot score an empty basket set"));
    }
    let n = catalog.len();
    let mut single = vec![0u64; n];
    let mut joint: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for basket in bs {
        let items = basket.items();
        for (k, &a) in items.iter().enumerate() {
            single[a] += 1;
            for &b in &items[k + 1..] {
                *joint.entry((a, b)).or_default() += 1;
            }
        }
    }
    let total = bs.len() as f64;
    let occurring: Vec<usize> = (0..n).filter(|&i| single[i] > 0).collect();
    let mut scores = Vec::with_capacity(occurring.len() * occurring.len().saturating_sub(1) / 2);
    for (k, &a) in occurring.iter().enumerate() {
        let pa = single[a] as f64 / total;
        for &b in &occurring[k + 1..] {
            let pb = single[b] as f64 / total;
            let pab = joint.get(&(a, b)).copied().unwrap_or(0) as f64 / total;
            scores.push(EdgeScore {
                a,
                b,
                score: pab / (pa * pb),
            });
        }
    }
    Ok(scores)
}

/// Number of edges kept for `n` items at density `rho`, before capping by the
/// number of positive-score pairs.
pub fn edge_budget(rho: f64, n: usize) -> usize {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    (rho * pairs).round() as usize
}

/// Keeps the `min(round(rho·n(n−1)/2), #positive)` highest-scoring pairs.
///
/// Ties are broken by `(a, b)` ascending. The result is sorted by `(a, b)`.
pub fn select_edges(scores: &[EdgeScore], rho: f64, n: usize) -> Result<Vec<EdgeScore>> {
    check_rho(rho)?;
    let mut ranked: Vec<EdgeScore> = scores.iter().filter(|e| e.score > 0.0).copied().collect();
    ranked.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then_with(|| x.pair().cmp(&y.pair()))
    });
    ranked.truncate(edge_budget(rho, n));
    ranked.sort_by_key(EdgeScore::pair);
    Ok(ranked)
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::parameter(format!(
            "rho must lie in (0, 1], got {rho}"
        )))
    }
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns false if `x` and `y` were already joined.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx;
        self.size[rx] += self.size[ry];
        true
    }
}

/// Connected-component clusters with canonical ids: clusters are ordered by
/// their smallest member, and members within a cluster are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: Vec<Vec<usize>>,
    membership: BTreeMap<usize, usize>,
}

impl ClusterPartition {
    /// Canonicalises arbitrary disjoint clusters.
    pub fn from_clusters(mut clusters: Vec<Vec<usize>>) -> Result<Self> {
        for cluster in &mut clusters {
            cluster.sort_unstable();
            cluster.dedup();
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_by_key(|c| c[0]);
        let mut membership = BTreeMap::new();
        for (id, cluster) in clusters.iter().enumerate() {
            for &item in cluster {
                if membership.insert(item, id).is_some() {
                    return Err(Error::validation(format!(
                        "item {item} appears in more than one cluster"
                    )));
                }
            }
        }
        Ok(Self {
            clusters,
            membership,
        })
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, item: usize) -> Option<usize> {
        self.membership.get(&item).copied()
    }

    /// All partitioned items, ascending.
    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.membership.keys().copied()
    }

    pub fn item_count(&self) -> usize {
        self.membership.len()
    }
}

/// Sorted node list plus edges rewritten to indices into it.
type LocalGraph = (Vec<usize>, Vec<(usize, usize)>);

/// Maps item ordinals to dense local indices, rejecting edges whose endpoints
/// are outside `items`.
fn localize(items: &[usize], edges: &[(usize, usize)]) -> Result<LocalGraph> {
    let mut nodes = items.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let local = |x: usize| {
        nodes
            .binary_search(&x)
            .map_err(|_| Error::validation(format!("edge endpoint {x} is not in the item set")))
    };
    let local_edges = edges
        .iter()
        .map(|&(a, b)| {
            if a == b {
                return Err(Error::validation(format!("self-loop on item {a}")));
            }
            Ok((local(a)?, local(b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((nodes, local_edges))
}

/// Partitions `items` into the connected components of `edges`. Items without
/// an incident edge become singleton clusters.
pub fn connected_components(items: &[usize], edges: &[(usize, usize)]) -> Result<ClusterPartition> {
    let (nodes, local_edges) = localize(items, edges)?;
    let mut uf = UnionFind::new(nodes.len());
    for &(a, b) in &local_edges {
        uf.union(a, b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &item) in nodes.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(item);
    }
    ClusterPartition::from_clusters(groups.into_values().collect())
}

/// Flags each edge (in input order) that is a bridge: removing it increases
/// the number of connected components. Runs in `O(n + |edges|)`.
pub fn classify_bridges(items: &[usize], edges: &[(usize, usize)]) -> Result<Vec<bool>> {
    let (nodes, local_edges) = localize(items, edges)?;
    let n = nodes.len();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(a, b)) in local_edges.iter().enumerate() {
        adjacency[a].push((b, id));
        adjacency[b].push((a, id));
    }

    const UNVISITED: usize = usize::MAX;
    let mut order = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; local_edges.len()];
    let mut counter = 0;
    // (node, edge id used to enter it, next adjacency position)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();

    for root in 0..n {
        if order[root] != UNVISITED {
            continue;
        }
        order[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(frame) = stack.last_mut() {
            let (node, parent_edge, pos) = *frame;
            if pos < adjacency[node].len() {
                frame.2 += 1;
                let (next, edge) = adjacency[node][pos];
                if edge == parent_edge {
                    continue;
                }
                if order[next] == UNVISITED {
                    order[next] = counter;
                    low[next] = counter;
                    counter += 1;
                    stack.push((next, edge, 0));
                } else {
                    low[node] = low[node].min(order[next]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[node]);
                    if low[node] > order[parent] {
                        is_bridge[parent_edge] = true;
                    }
                }
            }
        }
    }
    Ok(is_bridge)
}

/// A window's co-occurrence graph: occurring items, selected edges and their
/// bridge flags (parallel to `edges`).
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceGraph {
    pub items: Vec<usize>,
    pub edges: Vec<EdgeScore>,
    pub bridges: Vec<bool>,
    pub rho: f64,
}

impl CooccurrenceGraph {
    /// Builds the graph for a window of baskets at density `rho`.
    pub fn build(bs: &[&Basket], catalog: &ItemCatalog, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let scores = cooccurrence_scores(bs, catalog)?;
        let mut present = vec![false; catalog.len()];
        for basket in bs {
            for &item in basket.items() {
                present[item] = true;
            }
        }
        let items: Vec<usize> = (0..catalog.len()).filter(|&i| present[i]).collect();
        let edges = select_edges(&scores, rho, items.len())?;
        let pairs = edge_pairs(&edges);
        let bridges = classify_bridges(&items, &pairs)?;
        Ok(Self {
            items,
            edges,
            bridges,
            rho,
        })
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        edge_pairs(&self.edges)
    }

    pub fn partition(&self) -> ClusterPartition {
        connected_components(&self.items, &self.edge_pairs())
            .expect("graph edges only join graph items")
    }
}

fn edge_pairs(edges: &[EdgeScore]) -> Vec<(usize, usize)> {
    edges.iter().map(EdgeScore::pair).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

#[derive(Serialize)]
struct JsonEdge<'a> {
    a: &'a str,
    b: &'a str,
    score: f64,
    bridge: bool,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    nodes: Vec<&'a str>,
    edges: Vec<JsonEdge<'a>>,
    clusters: Vec<Vec<&'a str>>,
}

fn dot_quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for ch in name.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Renders the graph as Graphviz DOT or JSON.
///
/// Each cluster becomes a `subgraph cluster_<id>`; bridges are dashed and all
/// other edges solid. Output depends only on the inputs.
pub fn export_graph(
    graph: &CooccurrenceGraph,
    partition: &ClusterPartition,
    catalog: &ItemCatalog,
    format: GraphFormat,
) -> Result<String> {
    check_consistent(graph, partition)?;
    match format {
        GraphFormat::Dot => Ok(render_dot(graph, partition, catalog)),
        GraphFormat::Json => {
            let doc = JsonGraph {
                nodes: graph.items.iter().map(|&i| catalog.name(i)).collect(),
                edges: graph
                    .edges
                    .iter()
                    .zip(&graph.bridges)
                    .map(|(e, &bridge)| JsonEdge {
                        a: catalog.name(e.a),
                        b: catalog.name(e.b),
                        score: e.score,
                        bridge,
                    })
                    .collect(),
                clusters: partition
                    .clusters()
                    .iter()
                    .map(|c| c.iter().map(|&i| catalog.name(i)).collect())
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::validation(format!("cannot serialise graph: {e}")))?;
            text.push('\n');
            Ok(text)
        }
    }
}

fn check_consistent(graph: &CooccurrenceGraph, partition: &ClusterPartition) -> Result<()> {
    if graph.bridges.len() != graph.edges.len() {
        return Err(Error::validation("bridge flags do not match the edge list"));
    }
    if !partition.items().eq(graph.items.iter().copied()) {
        return Err(Error::validation("partition items differ from graph items"));
    }
    for edge in &graph.edges {
        if partition.cluster_of(edge.a) != partition.cluster_of(edge.b) {
            return Err(Error::validation(format!(
                "edge ({}, {}) joins two different clusters",
                edge.a, edge.b
            )));
        }
    }
    Ok(())
}

fn render_dot(
    graph: &CooccurrenceGraph,
    partition: &ClusterPartition,
    catalog: &ItemCatalog,
) -> String {
    let mut out = String::from("graph G {\n");
    for (id, cluster) in partition.clusters().iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{id} {{");
        for &item in cluster {
            let _ = writeln!(out, "    {};", dot_quote(catalog.name(item)));
        }
        out.push_str("  }\n");
    }
    for (edge, &bridge) in graph.edges.iter().zip(&graph.bridges) {
        let style = if bridge { "dashed" } else { "solid" };
        let _ = writeln!(
            out,
            "  {} -- {} [style={style}, weight={:.4}];",
            dot_quote(catalog.name(edge.a)),
            dot_quote(catalog.name(edge.b)),
            edge.score
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baskets(sets: &[&[usize]]) -> Vec<Basket> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| Basket::new(i.to_string(), 1, s.to_vec()))
            .collect()
    }

    fn score_of(scores: &[EdgeScore], a: usize, b: usize) -> f64 {
        scores.iter().find(|e| e.pair() == (a, b)).unwrap().score
    }

    #[test]
    fn pmi_hand_counts() {
        let catalog = ItemCatalog::new(["a", "b", "c"]);
        let owned = baskets(&[&[0, 1], &[0, 1], &[0], &[1]]);
        let bs: Vec<&Basket> = owned.iter().collect();
        let scores = cooccurrence_scores(&bs, &catalog).unwrap();
        assert_eq!(scores.len(), 1, "c never occurs");
        assert!((score_of(&scores, 0, 1) - 8.0 / 9.0).abs() < 1e-12);

        let owned = baskets(&[&[0, 1], &[2]]);
        let bs: Vec<&Basket> = owned.iter().collect();
        let scores = cooccurrence_scores(&bs, &catalog).unwrap();
        assert_eq!(score_of(&scores, 0, 1), 2.0);
        assert_eq!(score_of(&scores, 0, 2), 0.0);
    }

    #[test]
    fn pmi_independent_items_score_one() {
        // p(a) = p(b) = 1/2, p(ab) = 1/4
        let catalog = ItemCatalog::new(["a", "b", "c"]);
        let owned = baskets(&[&[0, 1], &[0, 2], &[1, 2], &[2]]);
        let bs: Vec<&Basket> = owned.iter().collect();
        let scores = cooccurrence_scores(&bs, &catalog).unwrap();
        assert_eq!(score_of(&scores, 0, 1), 1.0);
    }

    #[test]
    fn pmi_empty_set_is_error() {
        let catalog = ItemCatalog::new(["a"]);
        assert!(matches!(
            cooccurrence_scores(&[], &catalog),
            Err(Error::Validation(_))
        ));
    }

    fn positive_scores(n: usize) -> Vec<EdgeScore> {
        let mut out = Vec::new();
        let mut s = 1.0;
        for a in 0..n {
            for b in a + 1..n {
                out.push(EdgeScore { a, b, score: s });
                s += 0.5;
            }
        }
        out
    }

    #[test]
    fn edge_count_at_default_density() {
        let edges = select_edges(&positive_scores(20), 0.06, 20).unwrap();
        assert_eq!(edges.len(), 11);
    }

    #[test]
    fn full_density_selects_all_pairs() {
        let edges = select_edges(&positive_scores(3), 1.0, 3).unwrap();
        assert_eq!(edges.len(), 3);
    }

    #[test]
    fn cutoff_ties_prefer_catalog_order() {
        let scores = [
            EdgeScore {
                a: 1,
                b: 2,
                score: 2.0,
            },
            EdgeScore {
                a: 0,
                b: 2,
                score: 2.0,
            },
            EdgeScore {
                a: 0,
                b: 1,
                score: 1.0,
            },
        ];
        // 3 items, rho 1/3 -> one edge
        let edges = select_edges(&scores, 1.0 / 3.0, 3).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].pair(), (0, 2));
    }

    #[test]
    fn zero_scores_never_selected() {
        let scores = [
            EdgeScore {
                a: 0,
                b: 1,
                score: 0.0,
            },
            EdgeScore {
                a: 0,
                b: 2,
                score: 3.0,
            },
        ];
        let edges = select_edges(&scores, 1.0, 3).unwrap();
        assert_eq!(edges.len(), 1);
    }

    #[test]
    fn rho_out_of_range() {
        for rho in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                select_edges(&[], rho, 3),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn components_hand_trace() {
        let p = connected_components(&[0, 1, 2, 3], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p.clusters(), [vec![0, 1, 2], vec![3]]);
        let p = connected_components(&[3, 1, 2], &[]).unwrap();
        assert_eq!(p.clusters(), [vec![1], vec![2], vec![3]]);
        assert!(matches!(
            connected_components(&[0, 1], &[(0, 5)]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bridges_small_graphs() {
        assert_eq!(
            classify_bridges(&[0, 1, 2], &[(0, 1), (1, 2)]).unwrap(),
            [true, true]
        );
        assert_eq!(
            classify_bridges(&[0, 1, 2], &[(0, 1), (1, 2), (0, 2)]).unwrap(),
            [false, false, false]
        );
        assert_eq!(
            classify_bridges(&[0, 1, 2, 3], &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap(),
            [false, false, false, true]
        );
        assert!(classify_bridges(&[0, 1], &[(0, 2)]).is_err());
    }

    fn path_graph() -> (CooccurrenceGraph, ItemCatalog) {
        let catalog = ItemCatalog::new(["a", "b"]);
        let graph = CooccurrenceGraph {
            items: vec![0, 1],
            edges: vec![EdgeScore {
                a: 0,
                b: 1,
                score: 2.0,
            }],
            bridges: vec![true],
            rho: 1.0,
        };
        (graph, catalog)
    }

    #[test]
    fn dot_for_single_edge() {
        let (graph, catalog) = path_graph();
        let dot = export_graph(&graph, &graph.partition(), &catalog, GraphFormat::Dot).unwrap();
        assert_eq!(
            dot,
            "graph G {\n  subgraph cluster_0 {\n    \"a\";\n    \"b\";\n  }\n  \"a\" -- \"b\" [style=dashed, weight=2.0000];\n}\n"
        );
    }

    #[test]
    fn dot_without_edges() {
        let catalog = ItemCatalog::new(["a", "b", "c"]);
        let graph = CooccurrenceGraph {
            items: vec![0, 1, 2],
            edges: vec![],
            bridges: vec![],
            rho: 0.06,
        };
        let dot = export_graph(&graph, &graph.partition(), &catalog, GraphFormat::Dot).unwrap();
        assert_eq!(dot.matches("subgraph cluster_").count(), 3);
        assert!(!dot.contains("--"));
    }

    #[test]
    fn json_export_shape() {
        let (graph, catalog) = path_graph();
        let json = export_graph(&graph, &graph.partition(), &catalog, GraphFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["nodes"], serde_json::json!(["a", "b"]));
        assert_eq!(
            value["edges"],
            serde_json::json!([{"a": "a", "b": "b", "score": 2.0, "bridge": true}])
        );
        assert_eq!(value["clusters"], serde_json::json!([["a", "b"]]));
        let nodes_at = json.find("\"nodes\"").unwrap();
        let edges_at = json.find("\"edges\"").unwrap();
        assert!(nodes_at < edges_at);
    }

    #[test]
    fn export_rejects_mismatched_partition() {
        let (graph, catalog) = path_graph();
        let split = ClusterPartition::from_clusters(vec![vec![0], vec![1]]).unwrap();
        assert!(export_graph(&graph, &split, &catalog, GraphFormat::Dot).is_err());
        let partial = ClusterPartition::from_clusters(vec![vec![0]]).unwrap();
        assert!(export_graph(&graph, &partial, &catalog, GraphFormat::Dot).is_err());
    }

    #[test]
    fn dot_escapes_quotes() {
        assert_eq!(dot_quote(r#"6" sub"#), r#""6\" sub""#);
    }
}
