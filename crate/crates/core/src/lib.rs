//! Filtered approximate nearest neighbor search.
//!
//! The crate holds the data model ([`Dataset`], [`Filter`], [`Query`]), an
//! exact brute-force oracle, and a family of indexes that answer filtered
//! k-NN queries: HNSW with filtered traversals, pre/post-filter strategies,
//! range indexes over an ordered column, a label graph for set columns, and
//! IVF/PQ-based indexes.

pub mod distance;
pub mod error;
pub mod filter;
pub mod hnsw;
pub mod io;
pub mod label;
pub mod model;
pub mod oracle;
pub mod predicate;
pub mod quant;
pub mod range;
pub mod snapshot;
pub mod strategies;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use filter::{eval_filter, selectivity, CompiledFilter, Filter, FilterValue, Query};
pub use hnsw::{HnswIndex, HnswParams};
pub use model::{
    validate_dataset, AttributeKind, AttributeSchema, AttributeValue, ColumnDef, Dataset, EmbeddingVector, Item,
    ItemRef, OrderedValue, VectorMatrix, Violation,
};
pub use oracle::{batch_ground_truth, exact_filtered_knn, KnnResult, Neighbor};
pub use predicate::{FilterPredicate, IdBitmap, MatchAll, Predicate};
