use std::path::Path;
use std::process::{Command, Output};

fn fanns(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanns"))
        .env("FANNS_DATA_DIR", data)
        .current_dir(data.parent().unwrap())
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn gen_queries_gt_bench_tune() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(fanns(&data, &["gen", "--n", "800", "--d", "8", "--seed", "2"]));
    assert!(data.join("vectors.fvecs").exists());
    ok(fanns(
        &data,
        &[
            "queries", "--family", "em", "--p", "30", "--band", "0.02,0.5", "--out", "q.jsonl",
        ],
    ));
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("q.jsonl"))
            .unwrap()
            .lines()
            .count(),
        30
    );
    ok(fanns(&data, &["gt", "--queries", "q.jsonl", "--out", "gt.bin"]));
    std::fs::write(
        tmp.path().join("p.json"),
        r#"{"m": 8, "ef_construction": 40, "gamma": 4}"#,
    )
    .unwrap();
    ok(fanns(
        &data,
        &[
            "bench",
            "--queries",
            "q.jsonl",
            "--gt",
            "gt.bin",
            "--index",
            "hnsw-induced",
            "--params",
            "p.json",
            "--widths",
            "10,50,100",
            "--runs",
            "5",
            "--out",
            "results.csv",
            "--plot-out",
            "plot.csv",
        ],
    ));
    let mut rdr = csv::Reader::from_path(tmp.path().join("results.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, fanns_bench::report::COLUMNS);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 5 + 3 * 2);
    assert!(rows.iter().all(|r| &r[0] == "hnsw-induced" && &r[1] == "em"));
    assert_eq!(rows.iter().filter(|r| &r[4] == "mean").count(), 3);
    let plot = std::fs::read_to_string(tmp.path().join("plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 4);

    std::fs::write(
        tmp.path().join("cfg.toml"),
        r#"
method = "ivf"
widths = [1, 4, 16]
[params]
iters = 5
[tune]
params = ["c"]
value_lists = [[4, 8, 16]]
default_indices = [1]
queries = 10
"#,
    )
    .unwrap();
    let out = ok(fanns(&data, &["tune", "--queries", "q.jsonl", "--config", "cfg.toml"]));
    let best: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(best["method"], "ivf");
    assert!(best["params"]["c"].is_u64());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = fanns(&data, &["queries", "--family", "em", "--out", "q.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    ok(fanns(&data, &["gen", "--n", "100", "--d", "4"]));
    ok(fanns(
        &data,
        &["queries", "--family", "r", "--p", "5", "--out", "q.jsonl"],
    ));
    let out = fanns(
        &data,
        &[
            "bench",
            "--queries",
            "q.jsonl",
            "--index",
            "bogus",
            "--widths",
            "10",
            "--out",
            "r.csv",
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method"));
    let out = fanns(
        &data,
        &[
            "bench",
            "--queries",
            "q.jsonl",
            "--index",
            "pre-filter",
            "--widths",
            "5",
            "--out",
            "r.csv",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("below k"));
    let out = fanns(&data, &["queries", "--family", "zz", "--out", "q.jsonl"]);
    assert!(!out.status.success());
}
