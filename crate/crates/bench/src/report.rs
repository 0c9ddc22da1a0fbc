//! Result CSV: one row per (width, run) plus `mean` and `std` rows per width.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::sweep::Sweep;

pub const COLUMNS: [&str; 10] = [
    "method",
    "filter_family",
    "params_json",
    "width",
    "run",
    "recall",
    "qps",
    "build_seconds",
    "peak_rss_bytes",
    "index_bytes",
];

/// Build-side measurements shared by every row of one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildInfo {
    pub method: String,
    pub filter_family: String,
    pub params_json: String,
    pub build_seconds: f64,
    pub peak_rss_bytes: u64,
    pub index_bytes: usize,
}

#[derive(Serialize)]
struct Row<'a> {
    method: &'a str,
    filter_family: &'a str,
    params_json: &'a str,
    width: usize,
    run: String,
    recall: f64,
    qps: f64,
    build_seconds: f64,
    peak_rss_bytes: u64,
    index_bytes: usize,
}

pub fn write_results<W: Write>(out: W, info: &BuildInfo, sweep: &Sweep) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let row = |width, run: String, recall, qps| Row {
        method: &info.method,
        filter_family: &info.filter_family,
        params_json: &info.params_json,
        width,
        run,
        recall,
        qps,
        build_seconds: info.build_seconds,
        peak_rss_bytes: info.peak_rss_bytes,
        index_bytes: info.index_bytes,
    };
    for r in &sweep.runs {
        w.serialize(row(r.width, r.run.to_string(), r.recall, r.qps))?;
    }
    for p in &sweep.points {
        w.serialize(row(p.width, "mean".into(), p.recall_mean, p.qps_mean))?;
        w.serialize(row(p.width, "std".into(), p.recall_std, p.qps_std))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PlotRow<'a> {
    method: &'a str,
    filter_family: &'a str,
    width: usize,
    recall_mean: f64,
    recall_std: f64,
    qps_mean: f64,
    qps_std: f64,
}

/// One row per width, ready for a recall-vs-QPS plot.
pub fn write_plot_data<W: Write>(out: W, info: &BuildInfo, sweep: &Sweep) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &sweep.points {
        w.serialize(PlotRow {
            method: &info.method,
            filter_family: &info.filter_family,
            width: p.width,
            recall_mean: p.recall_mean,
            recall_std: p.recall_std,
            qps_mean: p.qps_mean,
            qps_std: p.qps_std,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Peak resident set size of this process (`VmHWM`), or 0 when unavailable.
pub fn peak_rss_bytes() -> u64 {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find_map(|l| l.strip_prefix("VmHWM:"))
                .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
        })
        .map_or(0, |kb| kb * 1024)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SweepPoint;
    use crate::sweep::RunRecord;

    #[test]
    fn header_and_rows() {
        let info = BuildInfo {
            method: "ivf".into(),
            filter_family: "em".into(),
            params_json: r#"{"c":8}"#.into(),
            build_seconds: 0.5,
            peak_rss_bytes: 1,
            index_bytes: 2,
        };
        let sweep = Sweep {
            points: vec![SweepPoint {
                width: 4,
                recall_mean: 0.5,
                recall_std: 0.0,
                qps_mean: 10.0,
                qps_std: 1.0,
                runs: 2,
            }],
            runs: vec![
                RunRecord {
                    width: 4,
                    run: 0,
                    recall: 0.5,
                    qps: 9.0,
                },
                RunRecord {
                    width: 4,
                    run: 1,
                    recall: 0.5,
                    qps: 11.0,
                },
            ],
        };
        let mut buf = Vec::new();
        write_results(&mut buf, &info, &sweep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[3].contains(",mean,"));
        assert!(lines[1].contains("\"{\"\"c\"\":8}\""));
    }

    #[test]
    fn rss_is_read() {
        if std::path::Path::new("/proc/self/status").exists() {
            assert!(peak_rss_bytes() > 0);
        }
    }
}
