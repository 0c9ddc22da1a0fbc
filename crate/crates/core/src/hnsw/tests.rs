use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::filter::Filter;
use crate::oracle::{exact_filtered_knn, exact_knn_compiled};
use crate::predicate::IdBitmap;
use crate::testutil::{random_dataset, random_vector};

fn small_params() -> HnswParams {
    HnswParams {
        m: 8,
        ef_construction: 64,
        ..HnswParams::default()
    }
}

fn assert_structure(index: &HnswIndex) {
    let n = index.len() as u32;
    for layer in 0..index.num_layers() {
        let cap = index.params().cap(layer);
        let nodes = index.layer_nodes(layer);
        for &v in &nodes {
            assert!(index.level(v) >= layer, "node {v} above its level");
            let nb = index.neighbors(v, layer);
            assert!(nb.len() <= cap);
            let mut sorted = nb.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), nb.len(), "duplicate neighbor");
            for &t in nb {
                assert!(t < n && t != v);
                assert!(index.level(t) >= layer, "edge to a node absent from layer");
            }
        }
        if layer + 1 < index.num_layers() {
            let upper = index.layer_nodes(layer + 1);
            assert!(upper.iter().all(|v| nodes.binary_search(v).is_ok()));
        }
    }
}

#[test]
fn single_node_has_no_edges() {
    let ds = random_dataset(1, 4, 1);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    assert_eq!(index.len(), 1);
    assert_eq!(index.entry_point(), 0);
    assert_eq!(index.num_layers(), index.level(0) + 1);
    assert!(index.neighbors(0, 0).is_empty());
    let r = index.search(ds.vector(0), 1, 1).unwrap();
    assert_eq!(r.ids(), vec![0]);
}

#[test]
fn build_is_deterministic() {
    let ds = random_dataset(300, 8, 2);
    let a = HnswIndex::build(&ds, small_params()).unwrap();
    let b = HnswIndex::build(&ds, small_params()).unwrap();
    assert_eq!(a.levels, b.levels);
    assert_eq!(a.layers, b.layers);
    assert_eq!(a.entry, b.entry);
}

#[test]
fn structural_invariants_hold() {
    let ds = random_dataset(500, 8, 3);
    assert_structure(&HnswIndex::build(&ds, small_params()).unwrap());
    let dense = HnswParams {
        m: 4,
        ef_construction: 32,
        gamma: 3,
        m_beta: Some(10),
        seed: 9,
    };
    let index = HnswIndex::build(&ds, dense).unwrap();
    assert_structure(&index);
    assert!((0..500).all(|v| index.neighbors(v, 0).len() <= 10));
}

#[test]
fn dense_setting_is_accepted() {
    let p = HnswParams {
        m: 16,
        ef_construction: 100,
        gamma: 10,
        m_beta: Some(24),
        seed: 1,
    };
    p.validate().unwrap();
    assert_eq!(p.cap(1), 160);
    assert_eq!(p.cap(0), 24);
    let ds = random_dataset(400, 8, 4);
    let index = HnswIndex::build(&ds, p).unwrap();
    assert_structure(&index);
}

#[test]
fn invalid_params_rejected() {
    let bad = [
        HnswParams {
            m: 1,
            ..HnswParams::default()
        },
        HnswParams {
            ef_construction: 4,
            ..HnswParams::default()
        },
        HnswParams {
            gamma: 0,
            ..HnswParams::default()
        },
        HnswParams {
            m_beta: Some(0),
            ..HnswParams::default()
        },
    ];
    for p in bad {
        assert!(p.validate().is_err(), "{p:?}");
    }
}

#[test]
fn exhaustive_width_matches_oracle() {
    let ds = random_dataset(1000, 8, 5);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let q = random_vector(&mut rng, 8);
        let got = index.search(&q, 10, ds.len()).unwrap();
        assert_eq!(got, exact_knn_compiled(&ds, &q, 10, None));
    }
}

#[test]
fn own_vector_ranks_first() {
    let ds = random_dataset(200, 8, 7);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    for id in [0u32, 57, 199] {
        let r = index.search(ds.vector(id), 3, 200).unwrap();
        assert_eq!(r.entries[0].id, id);
        assert_eq!(r.entries[0].distance, 0.0);
    }
}

#[test]
fn two_items_ef_one() {
    let ds = random_dataset(2, 4, 8);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let q = ds.vector(1);
    assert_eq!(index.search(q, 1, 1).unwrap().ids(), vec![1]);
}

#[test]
fn width_below_k_is_an_error() {
    let ds = random_dataset(20, 4, 9);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    assert!(matches!(
        index.search(ds.vector(0), 10, 5),
        Err(Error::WidthBelowK { width: 5, k: 10 })
    ));
}

#[test]
fn vacuous_filter_matches_unfiltered() {
    let ds = random_dataset(400, 8, 10);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let q = random_vector(&mut rng, 8);
        let plain = index.search(&q, 10, 20).unwrap();
        assert_eq!(index.search_visit_all(&q, 10, 20, &MatchAll).unwrap(), plain);
        assert_eq!(index.search_induced(&q, 10, 20, &MatchAll).unwrap(), plain);
    }
}

#[test]
fn single_match_is_found() {
    let ds = random_dataset(1000, 8, 12);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let only = |id: u32| id == 777;
    let q = vec![0.0; 8];
    assert_eq!(index.search_visit_all(&q, 10, 1000, &only).unwrap().ids(), vec![777]);
    assert_eq!(index.search_induced(&q, 10, 1000, &only).unwrap().ids(), vec![777]);
}

#[test]
fn empty_filter_skips_distance_kernel() {
    let ds = random_dataset(300, 8, 13);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let none = IdBitmap::new(ds.len());
    DISTANCE_EVALS.with(|c| c.set(0));
    let r = index.search_induced(ds.vector(0), 10, 50, &none).unwrap();
    assert!(r.is_empty());
    assert_eq!(DISTANCE_EVALS.with(|c| c.get()), 0);
    let r = index.search_visit_all(ds.vector(0), 10, 50, &|_: u32| false).unwrap();
    assert!(r.is_empty());
}

#[test]
fn filtered_search_at_full_width_matches_oracle() {
    let ds = random_dataset(1000, 8, 14);
    let index = HnswIndex::build(&ds, small_params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for cat in ["a", "b"] {
        let q = Query::new(random_vector(&mut rng, 8), 10, Some(Filter::em("cat", cat))).unwrap();
        let truth = exact_filtered_knn(&ds, &q).unwrap();
        assert_eq!(search_induced(&index, &ds, &q, 1000).unwrap(), truth);
        assert_eq!(search_visit_all(&index, &ds, &q, 1000).unwrap(), truth);
    }
}

#[test]
fn subset_maps_back_to_item_ids() {
    let ds = random_dataset(100, 4, 16);
    let members: Vec<u32> = (0..100).filter(|i| i % 3 == 0).collect();
    let index = HnswIndex::build_subset(&ds, members.clone(), small_params()).unwrap();
    let r = index.search(ds.vector(0), 40, 100).unwrap();
    assert_eq!(r.len(), members.len().min(40));
    assert!(r.ids().iter().all(|id| id % 3 == 0));
    let truth = crate::oracle::exact_knn_over(&ds, ds.vector(0), 40, &members);
    assert_eq!(r, truth);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn filtered_results_satisfy_predicate(seed in 0u64..1000, modulus in 2u32..9, ef in 10usize..80) {
        let ds = random_dataset(250, 6, seed);
        let index = HnswIndex::build(&ds, HnswParams { seed, ..small_params() }).unwrap();
        let pred = move |id: u32| id.is_multiple_of(modulus);
        let q = ds.vector((seed % 250) as u32).to_vec();
        for r in [
            index.search_visit_all(&q, 10, ef, &pred).unwrap(),
            index.search_induced(&q, 10, ef, &pred).unwrap(),
        ] {
            prop_assert!(r.is_strictly_sorted());
            prop_assert!(r.len() <= 10);
            prop_assert!(r.ids().iter().all(|&id| pred(id)));
        }
    }
}
