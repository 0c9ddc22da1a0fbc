//! TOML run configuration.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::sweep::DEFAULT_RUNS;
use crate::tune::{TuneSpec, DEFAULT_ITERATIONS, DEFAULT_TUNE_QUERIES};

/// ```toml
/// method = "hnsw-induced"
/// widths = [10, 20, 50, 100]
/// runs = 5
///
/// [params]
/// m = 16
///
/// [tune]
/// params = ["m", "ef_construction"]
/// value_lists = [[8, 16, 32], [50, 100, 200]]
/// default_indices = [1, 1]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub method: String,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub widths: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Seed for sampling tuning queries.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub params: Vec<String>,
    pub value_lists: Vec<Vec<Value>>,
    pub default_indices: Vec<usize>,
    #[serde(default = "default_tune_queries")]
    pub queries: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_seed() -> u64 {
    1
}

fn default_tune_queries() -> usize {
    DEFAULT_TUNE_QUERIES
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

impl TuneConfig {
    pub fn spec(&self) -> TuneSpec {
        TuneSpec {
            params: self.params.clone(),
            value_lists: self.value_lists.clone(),
            default_indices: self.default_indices.clone(),
        }
    }
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: BenchConfig = toml::from_str(text)?;
        if let Some(t) = &c.tune {
            t.spec().validate()?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn parses_full_config() {
        let c = BenchConfig::parse(
            r#"
method = "hnsw-induced"
widths = [10, 20]
[params]
m = 16
[tune]
params = ["ef_construction"]
value_lists = [[50, 100]]
default_indices = [0]
queries = 20
"#,
        )
        .unwrap();
        assert_eq!(c.params, json!({"m": 16}));
        assert_eq!(c.runs, 5);
        let t = c.tune.unwrap();
        assert_eq!(t.queries, 20);
        assert_eq!(t.iterations, 2);
        assert_eq!(t.value_lists[0][1], json!(100));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(BenchConfig::parse("method = \"ivf\"\nbogus = 1").is_err());
        assert!(BenchConfig::parse("widths = [1]").is_err());
        let bad = "method = \"ivf\"\n[tune]\nparams=[\"c\"]\nvalue_lists=[[1]]\ndefault_indices=[3]";
        assert!(BenchConfig::parse(bad).is_err());
    }
}
