#![allow(dead_code)]

use fanns_core::{AttributeKind, AttributeSchema, AttributeValue, ColumnDef, Dataset, Filter, Item, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATS: [&str; 5] = ["a", "b", "c", "d", "e"];
pub const TAGS: [&str; 8] = ["t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"];

pub fn dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let col = |name: &str, kind| ColumnDef {
        name: name.into(),
        kind,
    };
    let schema = AttributeSchema::new(vec![
        col("cat", AttributeKind::Unordered),
        col("year", AttributeKind::Ordered),
        col("tags", AttributeKind::Set),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..n as u32)
        .map(|id| Item {
            id,
            vector: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            attributes: vec![
                AttributeValue::Unordered(CATS[rng.random_range(0..CATS.len())].into()),
                AttributeValue::Ordered(rng.random_range(0..1000i64).into()),
                AttributeValue::set(TAGS.iter().copied().filter(|_| rng.random_bool(0.3))),
            ],
        })
        .collect();
    Dataset::from_items(schema, d, items).unwrap()
}

pub fn queries(n: usize, d: usize, seed: u64, filter: impl Fn(&mut ChaCha8Rng) -> Option<Filter>) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = filter(&mut rng);
            Query::new(v, 10, f).unwrap()
        })
        .collect()
}

pub fn em(rng: &mut ChaCha8Rng) -> Option<Filter> {
    Some(Filter::em("cat", CATS[rng.random_range(0..CATS.len())]))
}

pub fn range(rng: &mut ChaCha8Rng) -> Option<Filter> {
    let lo = rng.random_range(0..1000i64);
    let hi = rng.random_range(lo..1000);
    Some(Filter::range("year", lo, hi))
}

pub fn emis(rng: &mut ChaCha8Rng) -> Option<Filter> {
    Some(Filter::emis("tags", TAGS[rng.random_range(0..TAGS.len())]))
}
