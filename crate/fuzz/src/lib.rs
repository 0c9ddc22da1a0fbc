//! Shared fixture for the fuzz targets: a 64-item dataset checked in under
//! `fixture/`, against which snapshot decoders are run.

use std::sync::OnceLock;

use fanns_core::io::{decode_fvecs, parse_schema, read_attributes};
use fanns_core::Dataset;

static SCHEMA: &str = include_str!("../fixture/schema.json");
static ATTRIBUTES: &str = include_str!("../fixture/attributes.jsonl");
static VECTORS: &[u8] = include_bytes!("../fixture/vectors.fvecs");

pub fn fixture() -> &'static Dataset {
    static DATASET: OnceLock<Dataset> = OnceLock::new();
    DATASET.get_or_init(|| {
        let schema = parse_schema(SCHEMA).expect("fixture schema");
        let vectors = decode_fvecs(VECTORS).expect("fixture vectors");
        let attrs = read_attributes(&schema, ATTRIBUTES.as_bytes()).expect("fixture attributes");
        Dataset::from_parts(schema, vectors, attrs).expect("fixture dataset")
    })
}
