//! Small random datasets for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filter::Filter;
use crate::model::{AttributeKind, AttributeSchema, AttributeValue, ColumnDef, Dataset, Item};

pub const CATS: [&str; 4] = ["a", "b", "c", "d"];
pub const TAGS: [&str; 6] = ["t0", "t1", "t2", "t3", "t4", "t5"];

pub fn schema() -> AttributeSchema {
    let col = |name: &str, kind| ColumnDef {
        name: name.into(),
        kind,
    };
    AttributeSchema::new(vec![
        col("cat", AttributeKind::Unordered),
        col("year", AttributeKind::Ordered),
        col("tags", AttributeKind::Set),
    ])
    .unwrap()
}

/// `n` items with uniform vectors in `[-1, 1]^d`, a categorical column
/// (`cat`), an integer column (`year`, 0..100) and a set column (`tags`).
pub fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..n as u32)
        .map(|id| {
            let vector = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cat = CATS[rng.random_range(0..CATS.len())];
            let year = rng.random_range(0..100i64);
            let tags: Vec<&str> = TAGS.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
            Item {
                id,
                vector,
                attributes: vec![
                    AttributeValue::Unordered(cat.into()),
                    AttributeValue::Ordered(year.into()),
                    AttributeValue::set(tags),
                ],
            }
        })
        .collect();
    Dataset::from_items(schema(), d, items).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f32> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A random single-leaf or composite filter over the test schema.
pub fn random_filter(rng: &mut ChaCha8Rng) -> Filter {
    match rng.random_range(0..4) {
        0 => Filter::em("cat", CATS[rng.random_range(0..CATS.len())]),
        1 => {
            let lo = rng.random_range(0..100i64);
            let hi = rng.random_range(lo..100);
            Filter::range("year", lo, hi)
        }
        2 => Filter::emis("tags", TAGS[rng.random_range(0..TAGS.len())]),
        _ => Filter::And(vec![
            Filter::em("cat", CATS[rng.random_range(0..CATS.len())]),
            Filter::Or(vec![
                Filter::emis("tags", TAGS[rng.random_range(0..TAGS.len())]),
                Filter::not(Filter::at_most("year", rng.random_range(0..100i64))),
            ]),
        ]),
    }
}
