use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fanns_bench::config::BenchConfig;
use fanns_bench::gen::{gen_dataset, parse_column_specs, standard_columns, DatasetSpec};
use fanns_bench::methods::{build_method, METHODS};
use fanns_bench::queries::{gen_queries, Family, QuerySet, QuerySpec};
use fanns_bench::report::{peak_rss_bytes, write_plot_data, write_results, BuildInfo};
use fanns_bench::sweep::run_sweep;
use fanns_bench::tune::{get_reward, greedy_parameter_search};
use fanns_core::io::{
    load_dataset, read_ground_truth, read_query_records, save_dataset, write_ground_truth, write_query_records,
};
use fanns_core::{batch_ground_truth, Dataset, KnnResult};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "fanns", version, about = "Filtered ANN benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArg {
    /// Dataset directory.
    #[arg(long, env = "FANNS_DATA_DIR")]
    data: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON list of column specs; defaults to category/year/tags.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        components: Option<usize>,
        #[arg(long)]
        spread: Option<f64>,
        /// Output directory.
        #[arg(long, env = "FANNS_DATA_DIR")]
        out: PathBuf,
    },
    /// Generate a query file.
    Queries {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Selectivity band `low,high`.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0])]
        band: Vec<f64>,
        #[arg(long)]
        column: Option<String>,
        /// Range filters with only an upper bound.
        #[arg(long)]
        half_bounded: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute exact ground truth for a query file.
    Gt {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        queries: PathBuf,
        /// Defaults to the largest `k` in the query file.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an index and sweep recall/QPS over search widths.
    Bench {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        queries: PathBuf,
        /// Ground truth file; computed exactly when omitted.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Method name; overrides the config.
        #[arg(long)]
        index: Option<String>,
        /// JSON parameter file; overrides the config.
        #[arg(long)]
        params: Option<PathBuf>,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        widths: Vec<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write one row per width for plotting.
        #[arg(long)]
        plot_out: Option<PathBuf>,
    },
    /// Greedy parameter search; writes the best parameters as JSON.
    Tune {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available methods.
    Methods,
}

fn load_query_set(dataset: &Dataset, path: &Path) -> Result<QuerySet> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let records = read_query_records(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    QuerySet::from_records(dataset, records)
}

fn ground_truth(dataset: &Dataset, qs: &QuerySet, path: Option<&Path>) -> Result<Vec<KnnResult>> {
    match path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let gt = read_ground_truth(BufReader::new(file))?;
            if gt.len() != qs.len() {
                bail!("{} has {} rows for {} queries", p.display(), gt.len(), qs.len());
            }
            Ok(gt)
        }
        None => {
            let k = qs.queries.iter().map(|q| q.k).max().unwrap_or(0);
            Ok(batch_ground_truth(dataset, &qs.queries, k)?)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            n,
            d,
            seed,
            schema,
            components,
            spread,
            out,
        } => {
            let columns = match schema {
                Some(p) => parse_column_specs(
                    &std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => standard_columns(),
            };
            let mut spec = DatasetSpec::new(n, d, seed, columns);
            if let Some(c) = components {
                spec.components = c;
            }
            if let Some(s) = spread {
                spec.spread = s;
            }
            let ds = gen_dataset(&spec)?;
            save_dataset(&out, &ds)?;
            eprintln!("wrote {n} items to {}", out.display());
        }
        Command::Queries {
            data,
            family,
            p,
            k,
            seed,
            band,
            column,
            half_bounded,
            out,
        } => {
            if band.len() != 2 {
                bail!("--band takes exactly two values, `low,high`");
            }
            let ds = load_dataset(&data.data)?;
            let spec = QuerySpec {
                family,
                p,
                k,
                seed,
                band: [band[0], band[1]],
                column,
                half_bounded,
                ..Default::default()
            };
            let qs = gen_queries(&ds, &spec)?;
            let mut w = create(&out)?;
            write_query_records(&mut w, &qs.records)?;
            w.flush()?;
            eprintln!("wrote {p} {family} queries to {}", out.display());
        }
        Command::Gt { data, queries, k, out } => {
            let ds = load_dataset(&data.data)?;
            let qs = load_query_set(&ds, &queries)?;
            let k = k.unwrap_or_else(|| qs.queries.iter().map(|q| q.k).max().unwrap_or(0));
            let gt = batch_ground_truth(&ds, &qs.queries, k)?;
            let mut w = create(&out)?;
            write_ground_truth(&mut w, &gt)?;
            w.flush()?;
        }
        Command::Bench {
            data,
            queries,
            gt,
            index,
            params,
            config,
            widths,
            runs,
            out,
            plot_out,
        } => {
            let cfg = config.as_deref().map(BenchConfig::load).transpose()?;
            let method = index
                .or_else(|| cfg.as_ref().map(|c| c.method.clone()))
                .context("no method: pass --index or --config")?;
            let params: Value = match params {
                Some(p) => serde_json::from_str(
                    &std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )
                .with_context(|| format!("parsing {}", p.display()))?,
                None => cfg
                    .as_ref()
                    .map_or(Value::Object(Default::default()), |c| c.params.clone()),
            };
            let widths = if widths.is_empty() {
                cfg.as_ref().map(|c| c.widths.clone()).unwrap_or_default()
            } else {
                widths
            };
            if widths.is_empty() {
                bail!("no widths: pass --widths or set them in the config");
            }
            let runs = runs
                .or(cfg.as_ref().map(|c| c.runs))
                .unwrap_or(fanns_bench::sweep::DEFAULT_RUNS);
            let ds = load_dataset(&data.data)?;
            let qs = load_query_set(&ds, &queries)?;
            let truth = ground_truth(&ds, &qs, gt.as_deref())?;
            let start = Instant::now();
            let idx = build_method(&method, &ds, &params)?;
            let build_seconds = start.elapsed().as_secs_f64();
            let sweep = run_sweep(idx.as_ref(), &qs.queries, &truth, &widths, runs)?;
            let info = BuildInfo {
                method,
                filter_family: qs.family.to_string(),
                params_json: serde_json::to_string(&params)?,
                build_seconds,
                peak_rss_bytes: peak_rss_bytes(),
                index_bytes: idx.index_bytes(),
            };
            let mut w = create(&out)?;
            write_results(&mut w, &info, &sweep)?;
            w.flush()?;
            if let Some(p) = plot_out {
                let mut w = create(&p)?;
                write_plot_data(&mut w, &info, &sweep)?;
                w.flush()?;
            }
            for p in &sweep.points {
                eprintln!(
                    "width {:>6}  recall {:.4} ± {:.4}  qps {:.1} ± {:.1}",
                    p.width, p.recall_mean, p.recall_std, p.qps_mean, p.qps_std
                );
            }
        }
        Command::Tune {
            data,
            queries,
            config,
            out,
        } => {
            let cfg = BenchConfig::load(&config)?;
            let tune = cfg.tune.clone().context("config has no [tune] section")?;
            let spec = tune.spec();
            spec.validate()?;
            if cfg.widths.is_empty() {
                bail!("config sets no widths");
            }
            let ds = load_dataset(&data.data)?;
            let qs = load_query_set(&ds, &queries)?.sample(tune.queries, cfg.seed);
            let truth = ground_truth(&ds, &qs, None)?;
            let outcome = greedy_parameter_search(&spec, |ix| {
                let Ok(params) = spec.assign(&cfg.params, ix) else {
                    return fanns_bench::tune::Reward::FAILED;
                };
                let r = get_reward(
                    &mut || build_method(&cfg.method, &ds, &params),
                    &qs.queries,
                    &truth,
                    &cfg.widths,
                    tune.iterations,
                );
                eprintln!("{params}  reached={} value={:.4}", r.reached, r.value);
                r
            })?;
            let best = spec.assign(&cfg.params, &outcome.indices)?;
            let text = serde_json::to_string_pretty(&serde_json::json!({
                "method": cfg.method,
                "params": best,
                "reward": outcome.best,
                "evaluations": outcome.evaluations.len(),
            }))?;
            match out {
                Some(p) => std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{text}"),
            }
        }
        Command::Methods => {
            for m in METHODS {
                println!("{m}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
