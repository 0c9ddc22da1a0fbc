//! Clustering and quantization indexes: k-means, IVF, product
//! quantization, selectivity-switched PQ scans, and cluster-local
//! attribute frequency trees.

pub mod caps;
pub mod ivf;
pub mod kmeans;
pub mod pq;
pub mod rii;

pub use caps::{build_caps, caps_query, AftLevel, AttributeFrequencyTree, CapsIndex, CapsParams};
pub use ivf::{build_ivf, ivf_query, IvfIndex};
pub use kmeans::{kmeans_train, KMeansModel, DEFAULT_ITERATIONS};
pub use pq::{adc_distance, pq_decode, pq_encode, pq_train, AdcTable, PqCodebook, PqSpec};
pub use rii::{rii_branch, rii_query, Matching, Rerank, RiiBranch, RiiParams};
