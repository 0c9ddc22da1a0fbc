//! Filter expressions and queries.
//!
//! JSON form (externally tagged):
//!
//! ```text
//! {"em":   {"column": "venue", "value": "VLDB"}}
//! {"r":    {"column": "year", "low": 2000, "high": 2010}}   // bounds inclusive, either may be omitted
//! {"emis": {"column": "authors", "value": "Liu"}}
//! {"and": [f, ...]}  {"or": [f, ...]}  {"not": f}
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttributeKind, AttributeSchema, AttributeValue, Dataset, EmbeddingVector, ItemRef, OrderedValue};

/// Right-hand side of an exact-match leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterValue {
    Token(String),
    Ordered(OrderedValue),
}

impl From<&str> for FilterValue {
    fn from(s: &str) -> Self {
        FilterValue::Token(s.to_string())
    }
}

impl From<i64> for FilterValue {
    fn from(v: i64) -> Self {
        FilterValue::Ordered(OrderedValue::Int(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMatch {
    pub column: String,
    pub value: FilterValue,
}

/// Inclusive range `[low, high]`. Missing bounds serialize as absent and
/// decode to the [`OrderedValue::MIN`]/[`OrderedValue::MAX`] sentinels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RangeRepr", into = "RangeRepr")]
pub struct Range {
    pub column: String,
    pub low: OrderedValue,
    pub high: OrderedValue,
}

impl Range {
    pub fn is_half_bounded(&self) -> bool {
        self.low == OrderedValue::MIN
    }
}

#[derive(Serialize, Deserialize)]
struct RangeRepr {
    column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    low: Option<OrderedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    high: Option<OrderedValue>,
}

impl From<RangeRepr> for Range {
    fn from(r: RangeRepr) -> Self {
        Range {
            column: r.column,
            low: r.low.unwrap_or(OrderedValue::MIN),
            high: r.high.unwrap_or(OrderedValue::MAX),
        }
    }
}

impl From<Range> for RangeRepr {
    fn from(r: Range) -> Self {
        RangeRepr {
            column: r.column,
            low: (r.low != OrderedValue::MIN).then_some(r.low),
            high: (r.high != OrderedValue::MAX).then_some(r.high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMatchInSet {
    pub column: String,
    pub value: String,
}

/// Filter expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    Em(ExactMatch),
    #[serde(rename = "r")]
    Range(Range),
    Emis(ExactMatchInSet),
    And(Vec<Filter>),
    Or(Vec<Filter>),
    Not(Box<Filter>),
}

impl Filter {
    pub fn em(column: &str, value: impl Into<FilterValue>) -> Self {
        Filter::Em(ExactMatch {
            column: column.to_string(),
            value: value.into(),
        })
    }

    pub fn range(column: &str, low: impl Into<OrderedValue>, high: impl Into<OrderedValue>) -> Self {
        Filter::Range(Range {
            column: column.to_string(),
            low: low.into(),
            high: high.into(),
        })
    }

    /// Range with no lower limit.
    pub fn at_most(column: &str, high: impl Into<OrderedValue>) -> Self {
        Filter::Range(Range {
            column: column.to_string(),
            low: OrderedValue::MIN,
            high: high.into(),
        })
    }

    pub fn emis(column: &str, value: &str) -> Self {
        Filter::Emis(ExactMatchInSet {
            column: column.to_string(),
            value: value.to_string(),
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Filter) -> Self {
        Filter::Not(Box::new(f))
    }

    /// Number of distinct columns referenced (o_j).
    pub fn arity(&self) -> usize {
        let mut cols = BTreeSet::new();
        self.collect_columns(&mut cols);
        cols.len()
    }

    fn collect_columns<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Filter::Em(l) => {
                out.insert(&l.column);
            }
            Filter::Range(l) => {
                out.insert(&l.column);
            }
            Filter::Emis(l) => {
                out.insert(&l.column);
            }
            Filter::And(c) | Filter::Or(c) => c.iter().for_each(|f| f.collect_columns(out)),
            Filter::Not(f) => f.collect_columns(out),
        }
    }

    /// Resolves column names and checks leaf/column kind compatibility.
    pub fn compile(&self, schema: &AttributeSchema) -> Result<CompiledFilter> {
        Ok(match self {
            Filter::Em(l) => {
                let col = schema.index_of(&l.column)?;
                match (schema.kind(col), &l.value) {
                    (AttributeKind::Unordered, FilterValue::Token(t)) => {
                        CompiledFilter::Token { col, token: t.clone() }
                    }
                    (AttributeKind::Ordered, FilterValue::Ordered(v)) => {
                        CompiledFilter::Range { col, low: *v, high: *v }
                    }
                    (AttributeKind::Set, _) => {
                        return Err(kind_mismatch(&l.column, "unordered or ordered", AttributeKind::Set))
                    }
                    (kind, _) => {
                        return Err(Error::UnsupportedFilter(format!(
                            "em value type does not match {kind} column `{}`",
                            l.column
                        )))
                    }
                }
            }
            Filter::Range(l) => {
                let col = schema.index_of(&l.column)?;
                if schema.kind(col) != AttributeKind::Ordered {
                    return Err(kind_mismatch(&l.column, "ordered", schema.kind(col)));
                }
                if l.low.is_nan() || l.high.is_nan() || l.low > l.high {
                    return Err(Error::InvalidRange {
                        column: l.column.clone(),
                    });
                }
                CompiledFilter::Range {
                    col,
                    low: l.low,
                    high: l.high,
                }
            }
            Filter::Emis(l) => {
                let col = schema.index_of(&l.column)?;
                if schema.kind(col) != AttributeKind::Set {
                    return Err(kind_mismatch(&l.column, "set", schema.kind(col)));
                }
                CompiledFilter::SetContains {
                    col,
                    token: l.value.clone(),
                }
            }
            Filter::And(c) => CompiledFilter::And(c.iter().map(|f| f.compile(schema)).collect::<Result<_>>()?),
            Filter::Or(c) => CompiledFilter::Or(c.iter().map(|f| f.compile(schema)).collect::<Result<_>>()?),
            Filter::Not(f) => CompiledFilter::Not(Box::new(f.compile(schema)?)),
        })
    }
}

fn kind_mismatch(column: &str, expected: &'static str, actual: AttributeKind) -> Error {
    Error::KindMismatch {
        column: column.to_string(),
        expected,
        actual,
    }
}

/// A filter with resolved column indices, ready for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledFilter {
    Token {
        col: usize,
        token: String,
    },
    Range {
        col: usize,
        low: OrderedValue,
        high: OrderedValue,
    },
    SetContains {
        col: usize,
        token: String,
    },
    And(Vec<CompiledFilter>),
    Or(Vec<CompiledFilter>),
    Not(Box<CompiledFilter>),
}

impl CompiledFilter {
    pub fn matches(&self, attrs: &[AttributeValue]) -> bool {
        match self {
            CompiledFilter::Token { col, token } => {
                matches!(&attrs[*col], AttributeValue::Unordered(t) if t == token)
            }
            CompiledFilter::Range { col, low, high } => match &attrs[*col] {
                AttributeValue::Ordered(v) => low <= v && v <= high,
                _ => false,
            },
            CompiledFilter::SetContains { col, token } => attrs[*col].set_contains(token),
            CompiledFilter::And(c) => c.iter().all(|f| f.matches(attrs)),
            CompiledFilter::Or(c) => c.iter().any(|f| f.matches(attrs)),
            CompiledFilter::Not(f) => !f.matches(attrs),
        }
    }
}

/// Evaluates `filter` against one item.
pub fn eval_filter(schema: &AttributeSchema, filter: &Filter, item: ItemRef<'_>) -> Result<bool> {
    if item.attributes.len() != schema.len() {
        return Err(Error::InvalidParameter(format!(
            "item {} has {} attributes, schema has {}",
            item.id,
            item.attributes.len(),
            schema.len()
        )));
    }
    Ok(filter.compile(schema)?.matches(item.attributes))
}

/// Fraction of dataset items matching `filter`.
pub fn selectivity(filter: &Filter, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let compiled = filter.compile(dataset.schema())?;
    let hits = dataset.items().filter(|it| compiled.matches(it.attributes)).count();
    Ok(hits as f64 / dataset.len() as f64)
}

/// A filtered k-NN query `(q_j, k_j, f_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub vector: EmbeddingVector,
    pub k: usize,
    pub filter: Option<Filter>,
}

impl Query {
    pub fn new(vector: Vec<f32>, k: usize, filter: Option<Filter>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Self {
            vector: EmbeddingVector::new(vector)?,
            k,
            filter,
        })
    }

    /// Checks dimension and filter well-typedness; returns the compiled filter.
    pub fn validate(&self, dataset: &Dataset) -> Result<Option<CompiledFilter>> {
        if self.vector.len() != dataset.dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.dim(),
                actual: self.vector.len(),
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        self.filter.as_ref().map(|f| f.compile(dataset.schema())).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ColumnDef, Item};

    fn dataset() -> Dataset {
        let schema = AttributeSchema::new(vec![
            ColumnDef {
                name: "venue".into(),
                kind: AttributeKind::Unordered,
            },
            ColumnDef {
                name: "year".into(),
                kind: AttributeKind::Ordered,
            },
            ColumnDef {
                name: "authors".into(),
                kind: AttributeKind::Set,
            },
        ])
        .unwrap();
        let rows = [
            ("VLDB", 2010, vec!["Chen"]),
            ("SIGMOD", 1999, vec!["Liu", "Chen"]),
            ("VLDB", 2005, vec!["Liu"]),
            ("ICDE", 2020, vec![]),
        ];
        let items = rows
            .iter()
            .enumerate()
            .map(|(i, (venue, year, authors))| Item {
                id: i as u32,
                vector: vec![i as f32, 0.0],
                attributes: vec![
                    AttributeValue::Unordered(venue.to_string()),
                    AttributeValue::Ordered(OrderedValue::Int(*year)),
                    AttributeValue::set(authors.iter().copied()),
                ],
            })
            .collect();
        Dataset::from_items(schema, 2, items).unwrap()
    }

    #[test]
    fn leaf_semantics() {
        let ds = dataset();
        let s = ds.schema();
        assert!(eval_filter(s, &Filter::em("venue", "VLDB"), ds.item(0)).unwrap());
        assert!(eval_filter(s, &Filter::range("year", 2000, 2010), ds.item(0)).unwrap());
        assert!(!eval_filter(s, &Filter::range("year", 2000, 2009), ds.item(0)).unwrap());
        assert!(eval_filter(s, &Filter::emis("authors", "Liu"), ds.item(1)).unwrap());
        assert!(eval_filter(s, &Filter::em("year", 1999), ds.item(1)).unwrap());
    }

    #[test]
    fn boolean_semantics() {
        let ds = dataset();
        let f = Filter::And(vec![Filter::em("venue", "VLDB"), Filter::emis("authors", "Liu")]);
        assert!(!eval_filter(ds.schema(), &f, ds.item(0)).unwrap());
        assert!(eval_filter(ds.schema(), &f, ds.item(2)).unwrap());
        let g = Filter::Or(vec![
            Filter::em("venue", "ICDE"),
            Filter::not(Filter::range("year", 0, 2000)),
        ]);
        let hits: Vec<bool> = (0..4)
            .map(|i| eval_filter(ds.schema(), &g, ds.item(i)).unwrap())
            .collect();
        assert_eq!(hits, vec![true, false, true, true]);
    }

    #[test]
    fn kind_errors() {
        let ds = dataset();
        let s = ds.schema();
        assert!(matches!(
            Filter::range("venue", 0, 1).compile(s),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            Filter::emis("venue", "x").compile(s),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            Filter::em("authors", "x").compile(s),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            Filter::em("nope", "x").compile(s),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            Filter::range("year", 5, 1).compile(s),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn selectivity_counts() {
        let ds = dataset();
        assert_eq!(selectivity(&Filter::range("year", 0, 3000), &ds).unwrap(), 1.0);
        assert_eq!(selectivity(&Filter::em("venue", "PODS"), &ds).unwrap(), 0.0);
        assert_eq!(selectivity(&Filter::em("venue", "VLDB"), &ds).unwrap(), 0.5);
    }

    #[test]
    fn arity_counts_distinct_columns() {
        assert_eq!(Filter::em("venue", "x").arity(), 1);
        let f = Filter::And(vec![
            Filter::em("venue", "x"),
            Filter::Or(vec![Filter::em("venue", "y"), Filter::range("year", 1, 2)]),
        ]);
        assert_eq!(f.arity(), 2);
    }

    #[test]
    fn json_grammar() {
        let f: Filter = serde_json::from_str(
            r#"{"and":[{"em":{"column":"venue","value":"VLDB"}},{"r":{"column":"year","high":2010}},{"not":{"emis":{"column":"authors","value":"Liu"}}}]}"#,
        )
        .unwrap();
        let Filter::And(children) = &f else { panic!() };
        assert_eq!(children[1], Filter::at_most("year", 2010));
        let back: Filter = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
