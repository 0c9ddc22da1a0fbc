mod common;

use fanns_core::io::{
    decode_ground_truth, load_dataset, parse_query_line, read_query_records, save_dataset, write_ground_truth,
    write_query_records, QueryRecord,
};
use fanns_core::{batch_ground_truth, Filter};

#[test]
fn dataset_directory_round_trips() {
    let ds = common::dataset(200, 7, 1);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(dir.path(), &ds).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.vectors().as_flat(), ds.vectors().as_flat());
    assert_eq!(back.to_items(), ds.to_items());
}

#[test]
fn missing_or_corrupt_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_dataset(dir.path()).is_err());
    let ds = common::dataset(10, 3, 2);
    save_dataset(dir.path(), &ds).unwrap();
    let attrs = dir.path().join(fanns_core::io::ATTRIBUTES_FILE);
    let text = std::fs::read_to_string(&attrs).unwrap();
    std::fs::write(&attrs, text.lines().take(9).collect::<Vec<_>>().join("\n")).unwrap();
    assert!(load_dataset(dir.path()).is_err());
}

#[test]
fn ground_truth_round_trips() {
    let ds = common::dataset(300, 5, 3);
    let qs = common::queries(20, 5, 4, common::emis);
    let gt = batch_ground_truth(&ds, &qs, 10).unwrap();
    let mut buf = Vec::new();
    write_ground_truth(&mut buf, &gt).unwrap();
    let back = decode_ground_truth(&buf).unwrap();
    assert_eq!(back.len(), gt.len());
    for (a, b) in back.iter().zip(&gt) {
        assert_eq!(a.ids(), b.ids());
    }
    assert!(decode_ground_truth(&buf[..buf.len() - 1]).is_err());
}

#[test]
fn query_records_round_trip() {
    let ds = common::dataset(50, 4, 5);
    let records = vec![
        QueryRecord {
            vector_id: Some(3),
            vector: None,
            k: 5,
            filter: Some(Filter::And(vec![
                Filter::em("cat", "a"),
                Filter::not(Filter::emis("tags", "t1")),
            ])),
        },
        QueryRecord {
            vector_id: None,
            vector: Some(vec![0.5, 0.0, -0.5, 1.0]),
            k: 10,
            filter: Some(Filter::range("year", 10i64, 500i64)),
        },
    ];
    let mut buf = Vec::new();
    write_query_records(&mut buf, &records).unwrap();
    let back = read_query_records(buf.as_slice()).unwrap();
    assert_eq!(back, records);
    let q = back[0].resolve(&ds).unwrap();
    assert_eq!(q.vector.as_slice(), ds.vector(3));
    assert!(parse_query_line(r#"{"vector_id": 1, "vector": [1.0], "k": 1}"#).is_err());
    assert!(parse_query_line(r#"{"k": 1}"#).is_err());
    assert!(parse_query_line(r#"{"vector_id": 1, "k": 1, "extra": 0}"#).is_err());
}
