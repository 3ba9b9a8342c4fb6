mod support;

use gbe_core::dataset::{item_proportions, Basket, ItemCatalog};
use gbe_core::gbe::{cluster_frequencies, nearest_cluster};
use gbe_core::graph::{
    classify_bridges, connected_components, cooccurrence_scores, ClusterPartition,
};
use gbe_core::rankchange::top_ranked;
use support::oracle::{self, TestRng};

fn catalog(n: usize) -> ItemCatalog {
    ItemCatalog::new((0..n).map(|i| format!("i{i}")))
}

#[test]
fn pmi_matches_direct_counts() {
    let mut rng = TestRng::new(1);
    for _ in 0..200 {
        let n = 2 + rng.below(7);
        let count = 1 + rng.below(50);
        let owned = oracle::random_baskets(&mut rng, n, count);
        let bs: Vec<&Basket> = owned.iter().collect();
        let scores = cooccurrence_scores(&bs, &catalog(n)).unwrap();
        let expected = oracle::pmi(&owned, n);
        assert_eq!(scores.len(), expected.len());
        for e in scores {
            let want = expected[&(e.a, e.b)];
            assert!((e.score - want).abs() <= 1e-12, "{e:?} vs {want}");
        }
    }
}

#[test]
fn components_match_reachability() {
    let mut rng = TestRng::new(2);
    for _ in 0..200 {
        let n = 1 + rng.below(8);
        let nodes: Vec<usize> = (0..n).collect();
        let edges = oracle::random_graph(&mut rng, n);
        let got = connected_components(&nodes, &edges).unwrap();
        assert_eq!(
            got.clusters(),
            oracle::components(&nodes, &edges).as_slice()
        );
        assert_eq!(got.item_count(), n);
    }
}

#[test]
fn bridges_match_removal_recount() {
    let mut rng = TestRng::new(3);
    for _ in 0..200 {
        let n = 1 + rng.below(8);
        let nodes: Vec<usize> = (0..n).collect();
        let edges = oracle::random_graph(&mut rng, n);
        let got = classify_bridges(&nodes, &edges).unwrap();
        assert_eq!(got, oracle::bridges(&nodes, &edges), "{edges:?}");
    }
}

#[test]
fn removing_a_bridge_adds_exactly_one_component() {
    let mut rng = TestRng::new(4);
    for _ in 0..200 {
        let n = 2 + rng.below(7);
        let nodes: Vec<usize> = (0..n).collect();
        let edges = oracle::random_graph(&mut rng, n);
        let base = connected_components(&nodes, &edges).unwrap().len();
        for (k, bridge) in classify_bridges(&nodes, &edges)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            let mut rest = edges.clone();
            rest.remove(k);
            let after = connected_components(&nodes, &rest).unwrap().len();
            assert_eq!(after, base + usize::from(bridge));
        }
    }
}

#[test]
fn assignments_match_cosine_scan() {
    let mut rng = TestRng::new(5);
    for _ in 0..200 {
        let n = 2 + rng.below(7);
        let count = 1 + rng.below(50);
        let owned = oracle::random_baskets(&mut rng, n, count);
        let nodes: Vec<usize> = (0..n).collect();
        let edges = oracle::random_graph(&mut rng, n);
        let clusters = oracle::components(&nodes, &edges);
        let partition = ClusterPartition::from_clusters(clusters.clone()).unwrap();
        let mut counts = vec![0u64; clusters.len()];
        for b in &owned {
            let want = oracle::nearest(b, &clusters, &nodes);
            assert_eq!(nearest_cluster(b, &partition), want, "{b:?} {clusters:?}");
            counts[want.unwrap()] += 1;
        }
        let bs: Vec<&Basket> = owned.iter().collect();
        assert_eq!(cluster_frequencies(&bs, &partition).counts, counts);
    }
}

#[test]
fn top_r_matches_selection_sort() {
    let mut rng = TestRng::new(6);
    for _ in 0..200 {
        let n = 1 + rng.below(8);
        let count = 1 + rng.below(50);
        let owned = oracle::random_baskets(&mut rng, n, count);
        let bs: Vec<&Basket> = owned.iter().collect();
        let r = 1 + rng.below(10);
        assert_eq!(top_ranked(&bs, r, &catalog(n)), oracle::top_r(&owned, n, r));
    }
}

#[test]
fn proportions_match_recount() {
    let mut rng = TestRng::new(7);
    let owned = oracle::random_baskets(&mut rng, 8, 50);
    let bs: Vec<&Basket> = owned.iter().collect();
    let props = item_proportions(&bs, &catalog(8)).unwrap();
    for item in 0..8 {
        let count = owned.iter().filter(|b| b.items().contains(&item)).count();
        assert_eq!(props.get(item), count as f64 / 50.0);
    }
}
