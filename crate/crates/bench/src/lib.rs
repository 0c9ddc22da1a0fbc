//! Benchmark harness for `fanns-core`: synthetic data and queries, method
//! registry, recall/QPS sweeps, greedy parameter tuning, and reporting.

pub mod config;
pub mod gen;
pub mod methods;
pub mod metrics;
pub mod queries;
pub mod report;
pub mod sweep;
pub mod tune;
