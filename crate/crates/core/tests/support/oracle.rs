//! Brute-force reference implementations used to cross-check the library.
//! Nothing here calls into the code paths it is compared against.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use gbe_core::dataset::Basket;
use rand_core::Rng;
use rand_pcg::Pcg64;

pub struct TestRng(Pcg64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(Pcg64::new(
            u128::from(seed) + 1,
            0x5851_f42d_4c95_7f2d_1405_7b7e_f767_814f,
        ))
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        (self.0.next_u64() as f64) < p * 2f64.powi(64)
    }
}

/// `count` non-empty random baskets over `n_items` items.
pub fn random_baskets(rng: &mut TestRng, n_items: usize, count: usize) -> Vec<Basket> {
    let density = 0.15 + 0.5 * rng.below(100) as f64 / 100.0;
    (0..count)
        .map(|k| {
            let mut items: Vec<usize> = (0..n_items).filter(|_| rng.chance(density)).collect();
            if items.is_empty() {
                items.push(rng.below(n_items));
            }
            Basket::new(format!("b{k}"), 1, items)
        })
        .collect()
}

/// Random simple graph on `n` nodes labelled `0..n`.
pub fn random_graph(rng: &mut TestRng, n: usize) -> Vec<(usize, usize)> {
    let p = rng.below(100) as f64 / 100.0;
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.chance(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// `p(a,b)/(p(a)p(b))` for every pair of occurring items, counted directly
/// from basket membership.
pub fn pmi(baskets: &[Basket], n_items: usize) -> BTreeMap<(usize, usize), f64> {
    let total = baskets.len() as f64;
    let freq =
        |pred: &dyn Fn(&Basket) -> bool| baskets.iter().filter(|b| pred(b)).count() as f64 / total;
    let mut out = BTreeMap::new();
    for a in 0..n_items {
        for b in a + 1..n_items {
            let pa = freq(&|bk| bk.items().contains(&a));
            let pb = freq(&|bk| bk.items().contains(&b));
            if pa == 0.0 || pb == 0.0 {
                continue;
            }
            let pab = freq(&|bk| bk.items().contains(&a) && bk.items().contains(&b));
            out.insert((a, b), pab / (pa * pb));
        }
    }
    out
}

/// Transitive closure of the undirected edge relation.
fn reachability(nodes: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let n = nodes.len();
    let pos = |x: usize| nodes.iter().position(|&y| y == x).unwrap();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        let (i, j) = (pos(a), pos(b));
        reach[i][j] = true;
        reach[j][i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

/// Components as sorted member lists, ordered by smallest member.
pub fn components(nodes: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let reach = reachability(nodes, edges);
    let mut seen = BTreeSet::new();
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &x in &sorted {
        if seen.contains(&x) {
            continue;
        }
        let i = nodes.iter().position(|&y| y == x).unwrap();
        let members: Vec<usize> = sorted
            .iter()
            .copied()
            .filter(|&y| reach[i][nodes.iter().position(|&z| z == y).unwrap()])
            .collect();
        seen.extend(members.iter().copied());
        out.push(members);
    }
    out
}

/// An edge is a bridge iff deleting it raises the component count.
pub fn bridges(nodes: &[usize], edges: &[(usize, usize)]) -> Vec<bool> {
    let base = components(nodes, edges).len();
    (0..edges.len())
        .map(|k| {
            let rest: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &e)| e)
                .collect();
            components(nodes, &rest).len() > base
        })
        .collect()
}

/// Nearest cluster by explicit binary-vector cosine over `universe` items,
/// ties (within 1e-12) to the lower cluster index.
pub fn nearest(basket: &Basket, clusters: &[Vec<usize>], universe: &[usize]) -> Option<usize> {
    let u: Vec<f64> = universe
        .iter()
        .map(|i| if basket.items().contains(i) { 1.0 } else { 0.0 })
        .collect();
    let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_u == 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (id, cluster) in clusters.iter().enumerate() {
        let v: Vec<f64> = universe
            .iter()
            .map(|i| if cluster.contains(i) { 1.0 } else { 0.0 })
            .collect();
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let cos = dot / (norm_u * v.iter().map(|x| x * x).sum::<f64>().sqrt());
        match best {
            Some((_, b)) if cos <= b + 1e-12 => {}
            _ => best = Some((id, cos)),
        }
    }
    best.filter(|&(_, c)| c > 0.0).map(|(id, _)| id)
}

/// Top-R by repeated selection of the most frequent remaining item.
pub fn top_r(baskets: &[Basket], n_items: usize, r: usize) -> Vec<usize> {
    let count = |i: usize| baskets.iter().filter(|b| b.items().contains(&i)).count();
    let mut remaining: Vec<usize> = (0..n_items).filter(|&i| count(i) > 0).collect();
    let mut out = Vec::new();
    while out.len() < r && !remaining.is_empty() {
        let mut best = 0;
        for k in 1..remaining.len() {
            if count(remaining[k]) > count(remaining[best]) {
                best = k;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

/// Shannon entropy in bits straight from the definition.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}
