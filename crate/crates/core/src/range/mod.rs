//! Range-filter indexes over one ordered column.

mod segment_graph;
mod segment_tree;

pub(crate) use segment_graph::SegmentLayer;
pub use segment_graph::{build_segment_graph, segment_graph_query_leq, EdgeValidity, SegmentGraphIndex};
pub use segment_tree::{build_segment_tree, minimal_cover, segment_tree_query, SegmentTreeIndex, TreeNode};

use crate::error::{Error, Result};
use crate::filter::{CompiledFilter, Filter};
use crate::model::{AttributeKind, Dataset, OrderedValue};

/// Items of an ordered column sorted by `(value, id)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SortedColumn {
    pub name: String,
    pub col: usize,
    pub values: Vec<OrderedValue>,
    pub order: Vec<u32>,
}

impl SortedColumn {
    pub fn new(dataset: &Dataset, column: &str) -> Result<Self> {
        let col = dataset.schema().index_of(column)?;
        let kind = dataset.schema().kind(col);
        if kind != AttributeKind::Ordered {
            return Err(Error::KindMismatch {
                column: column.to_string(),
                expected: "ordered",
                actual: kind,
            });
        }
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut pairs: Vec<(OrderedValue, u32)> = dataset
            .items()
            .map(|it| (it.attributes[col].as_ordered().expect("ordered"), it.id))
            .collect();
        pairs.sort();
        let (values, order) = pairs.into_iter().unzip();
        Ok(Self {
            name: column.to_string(),
            col,
            values,
            order,
        })
    }

    /// Half-open rank range of items with value in `[low, high]`.
    pub fn ranks(&self, low: OrderedValue, high: OrderedValue) -> (usize, usize) {
        crate::strategies::rank_bounds(&self.values, low, high)
    }

    /// Extracts `(low, high)` from a filter that is a single range leaf (or
    /// an exact match) on this column.
    pub fn bounds_of(&self, dataset: &Dataset, filter: &Filter) -> Result<(OrderedValue, OrderedValue)> {
        match filter.compile(dataset.schema())? {
            CompiledFilter::Range { col, low, high } if col == self.col => Ok((low, high)),
            _ => Err(Error::UnsupportedFilter(format!(
                "expected a single range leaf on column `{}`",
                self.name
            ))),
        }
    }
}
