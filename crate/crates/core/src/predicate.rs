//! Item predicates consulted during traversal.

use crate::filter::CompiledFilter;
use crate::model::Dataset;

/// Decides whether an item id passes a filter.
pub trait Predicate {
    fn matches(&self, id: u32) -> bool;

    /// `true` when the predicate is known to match no item, allowing
    /// searches to return before touching any vector.
    fn known_empty(&self) -> bool {
        false
    }
}

/// Matches every item.
#[derive(Debug, Clone, Copy, Default)]
pub struct MatchAll;

impl Predicate for MatchAll {
    #[inline]
    fn matches(&self, _id: u32) -> bool {
        true
    }
}

impl<F: Fn(u32) -> bool> Predicate for F {
    #[inline]
    fn matches(&self, id: u32) -> bool {
        self(id)
    }
}

/// Evaluates a compiled filter lazily, per visited item.
pub struct FilterPredicate<'a> {
    dataset: &'a Dataset,
    filter: &'a CompiledFilter,
}

impl<'a> FilterPredicate<'a> {
    pub fn new(dataset: &'a Dataset, filter: &'a CompiledFilter) -> Self {
        Self { dataset, filter }
    }
}

impl Predicate for FilterPredicate<'_> {
    #[inline]
    fn matches(&self, id: u32) -> bool {
        self.filter.matches(self.dataset.attributes(id))
    }
}

/// Fixed-size membership bitmap over item ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBitmap {
    words: Vec<u64>,
    len: usize,
    count: usize,
}

impl IdBitmap {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
            count: 0,
        }
    }

    /// Builds a bitmap from ids; ids `>= len` are ignored.
    pub fn from_ids(len: usize, ids: &[u32]) -> Self {
        let mut b = Self::new(len);
        for &id in ids {
            b.insert(id);
        }
        b
    }

    pub fn from_filter(dataset: &Dataset, filter: &CompiledFilter) -> Self {
        let mut b = Self::new(dataset.len());
        for id in 0..dataset.len() as u32 {
            if filter.matches(dataset.attributes(id)) {
                b.insert(id);
            }
        }
        b
    }

    pub fn insert(&mut self, id: u32) {
        let i = id as usize;
        if i >= self.len {
            return;
        }
        let (w, bit) = (i / 64, 1u64 << (i % 64));
        if self.words[w] & bit == 0 {
            self.words[w] |= bit;
            self.count += 1;
        }
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        let i = id as usize;
        i < self.len && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Number of set ids.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Size of the id universe.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros();
                bits &= bits - 1;
                Some((w * 64) as u32 + tz)
            })
        })
    }
}

impl Predicate for IdBitmap {
    #[inline]
    fn matches(&self, id: u32) -> bool {
        self.contains(id)
    }

    fn known_empty(&self) -> bool {
        self.count == 0
    }
}
