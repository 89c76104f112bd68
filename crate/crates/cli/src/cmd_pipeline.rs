//! `pipeline synth|reason|occurrence`: generate an interview-record
//! corpus, fit both incident-reason arms, and forecast daily counts with
//! both arms, writing CSV tables and the forecast plot.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Subcommand};
use proxyforest_core::forest::ForestConfig;
use proxyforest_core::metrics::{ConfusionMatrix, RegressionReport};
use proxyforest_core::pipeline::panel::{build_daily_panel, run_occurrence, OccurrenceConfig};
use proxyforest_core::pipeline::synth::SynthSpec;
use proxyforest_core::pipeline::{
    generate, load_records, predict_race_from_proxies, preprocess, run_reason, save_records,
    InterviewRecord, PipelineOptions, Preprocessed, ReasonConfig,
};
use proxyforest_core::plot::{forecast_plot, ForecastSeries};
use proxyforest_core::rng::derive_seed_u64;

use crate::{CliError, CliResult, Context, SeedArg};

#[derive(Subcommand, Debug)]
pub enum PipelineCmd {
    /// Generate a synthetic interview-record CSV
    Synth(SynthArgs),
    /// Fit and compare both incident-reason arms
    Reason(ReasonArgs),
    /// Forecast daily interview counts with both arms
    Occurrence(OccurrenceArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Records to generate
    #[arg(long)]
    n: Option<usize>,

    /// Proxy-to-race dependence in [0, 1]
    #[arg(long)]
    link_strength: Option<f64>,

    /// Years covered, starting at --start
    #[arg(long)]
    years: Option<u32>,

    /// First day of the covered period (YYYY-MM-DD)
    #[arg(long)]
    start: Option<String>,

    /// Output file name (written inside the output directory)
    #[arg(long)]
    out: Option<String>,

    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Records CSV, as produced by `pipeline synth`
    #[arg(long)]
    input: Option<PathBuf>,

    /// Incident-reason clusters
    #[arg(long)]
    reason_k: Option<usize>,

    /// Clothing clusters
    #[arg(long)]
    clothing_k: Option<usize>,
}

impl CorpusArgs {
    fn load(&self, ctx: &Context, section: &[&str]) -> CliResult<(Vec<InterviewRecord>, Preprocessed)> {
        let input = match &self.input {
            Some(p) => p.clone(),
            None => ctx
                .overlay
                .path_opt(section, "input")?
                .ok_or_else(|| CliError::usage("--input is required"))?,
        };
        let records = load_records(&input)?;
        let opts = PipelineOptions {
            reason_k: self
                .reason_k
                .or(ctx.overlay.usize_opt(section, "reason_k")?)
                .unwrap_or(6),
            clothing_k: self
                .clothing_k
                .or(ctx.overlay.usize_opt(section, "clothing_k")?)
                .unwrap_or(10),
        };
        let pre = preprocess(&records, &opts)?;
        Ok((records, pre))
    }
}

#[derive(Args, Debug)]
pub struct ReasonArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Fraction of records in the training split
    #[arg(long)]
    train_fraction: Option<f64>,

    /// Trees per forest
    #[arg(long)]
    trees: Option<usize>,

    /// Minimum node size
    #[arg(long)]
    min_node: Option<usize>,

    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
pub struct OccurrenceArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// First forecast day (YYYY-MM-DD); earlier days train
    #[arg(long)]
    cutoff: Option<String>,

    /// Trees per count forest
    #[arg(long)]
    trees: Option<usize>,

    /// Minimum node size for the count forests
    #[arg(long)]
    min_node: Option<usize>,

    /// Central interval level in (0, 1)
    #[arg(long)]
    pi_level: Option<f64>,

    #[command(flatten)]
    seed: SeedArg,
}

fn parse_date(s: &str, what: &str) -> CliResult<NaiveDate> {
    s.parse().map_err(|_| CliError::usage(format!("{what} {s:?} is not a YYYY-MM-DD date")))
}

fn run_synth(args: &SynthArgs, ctx: &Context) -> CliResult<()> {
    const SECTION: &[&str] = &["pipeline", "synth"];
    let mut spec = SynthSpec::new(args.seed.resolve(ctx, SECTION)?);
    if let Some(n) = args.n.or(ctx.overlay.usize_opt(SECTION, "n")?) {
        spec.n = n;
    }
    if let Some(l) = args.link_strength.or(ctx.overlay.f64_opt(SECTION, "link_strength")?) {
        spec.link_strength = l;
    }
    if let Some(y) = args.years.or(ctx.overlay.u64_opt(SECTION, "years")?.map(|v| v as u32)) {
        spec.years = y;
    }
    let start = match &args.start {
        Some(s) => Some(s.clone()),
        None => ctx.overlay.string_opt(SECTION, "start")?,
    };
    if let Some(s) = start {
        spec.start = parse_date(&s, "--start")?;
    }
    let name = match &args.out {
        Some(o) => o.clone(),
        None => ctx
            .overlay
            .string_opt(SECTION, "out")?
            .unwrap_or_else(|| "records.csv".to_string()),
    };

    let records = generate(&spec)?;
    let path = ctx.out_path(&name);
    save_records(&records, &path)?;
    println!(
        "wrote {} records covering {}..={} to {}",
        records.len(),
        spec.start,
        spec.end(),
        path.display()
    );
    Ok(())
}

fn write_confusion(path: &std::path::Path, arms: &[(&str, &ConfusionMatrix)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["arm", "actual", "predicted", "count", "percent"])?;
    for (arm, mat) in arms {
        for (a, actual) in mat.levels.iter().enumerate() {
            for (p, predicted) in mat.levels.iter().enumerate() {
                w.write_record([
                    *arm,
                    actual,
                    predicted,
                    &mat.counts[p][a].to_string(),
                    &mat.percent[p][a].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn run_reason_cmd(args: &ReasonArgs, ctx: &Context) -> CliResult<()> {
    const SECTION: &[&str] = &["pipeline", "reason"];
    let seed = args.seed.resolve(ctx, SECTION)?;
    let (_, pre) = args.corpus.load(ctx, SECTION)?;

    let mut cfg = ReasonConfig::new(seed);
    if let Some(f) = args.train_fraction.or(ctx.overlay.f64_opt(SECTION, "train_fraction")?) {
        cfg.train_fraction = f;
    }
    if let Some(t) = args.trees.or(ctx.overlay.usize_opt(SECTION, "trees")?) {
        cfg.n_trees = t;
    }
    if let Some(m) = args.min_node.or(ctx.overlay.usize_opt(SECTION, "min_node")?) {
        cfg.min_node_size = m;
    }

    let outcome = run_reason(&pre.data, &cfg)?;

    let mut table = String::from("arm,accuracy,n_test\n");
    table.push_str(&format!("with_proxy,{},{}\n", outcome.hier_accuracy, outcome.n_test));
    table.push_str(&format!("without_proxy,{},{}\n", outcome.naive_accuracy, outcome.n_test));
    std::fs::write(ctx.out_path("reason_accuracy.csv"), table)?;
    write_confusion(
        &ctx.out_path("reason_confusion.csv"),
        &[("with_proxy", &outcome.hier_confusion), ("without_proxy", &outcome.naive_confusion)],
    )?;

    println!(
        "reason accuracy: with_proxy {:.4}, without_proxy {:.4} ({} train / {} test rows)",
        outcome.hier_accuracy, outcome.naive_accuracy, outcome.n_train, outcome.n_test
    );
    println!("raw race split nodes in the two-layer model: {}", outcome.hier.splits_on("race"));
    Ok(())
}

fn metrics_rows(arms: &[(&str, &RegressionReport)]) -> String {
    let mut out = String::from("arm,bias,sd_paper,sd_conventional,mse,pi_coverage\n");
    for (arm, rep) in arms {
        out.push_str(&format!(
            "{arm},{},{},{},{},{}\n",
            rep.bias,
            rep.sd,
            rep.sd_conventional,
            rep.mse,
            rep.pi_coverage.map(|c| c.to_string()).unwrap_or_default()
        ));
    }
    out
}

fn run_occurrence_cmd(args: &OccurrenceArgs, ctx: &Context) -> CliResult<()> {
    const SECTION: &[&str] = &["pipeline", "occurrence"];
    let seed = args.seed.resolve(ctx, SECTION)?;
    let (records, pre) = args.corpus.load(ctx, SECTION)?;

    let cutoff_text = match &args.cutoff {
        Some(c) => c.clone(),
        None => ctx
            .overlay
            .string_opt(SECTION, "cutoff")?
            .unwrap_or_else(|| "2014-01-01".to_string()),
    };
    let cutoff = parse_date(&cutoff_text, "--cutoff")?;

    let mut cfg = OccurrenceConfig::new(seed, cutoff);
    if let Some(t) = args.trees.or(ctx.overlay.usize_opt(SECTION, "trees")?) {
        cfg.n_trees = t;
    }
    if let Some(m) = args.min_node.or(ctx.overlay.usize_opt(SECTION, "min_node")?) {
        cfg.min_node_size = m;
    }
    if let Some(p) = args.pi_level.or(ctx.overlay.f64_opt(SECTION, "pi_level")?) {
        cfg.pi_level = p;
    }

    let race_cfg = ForestConfig::classification(derive_seed_u64(seed, &["occurrence", "race"]))
        .with_trees(cfg.n_trees)
        .with_min_node_size(25.max(cfg.min_node_size));
    let proxies: Vec<String> = cfg_proxies();
    let race_pred = predict_race_from_proxies(&pre.data, &proxies, cutoff, &race_cfg)?;
    let panel = build_daily_panel(&records, &pre.reason_cluster_ids, pre.reason_clusters.k, &race_pred)?;
    let outcome = run_occurrence(&panel, &cfg)?;

    std::fs::write(
        ctx.out_path("occurrence_metrics.csv"),
        metrics_rows(&[
            ("with_proxy", &outcome.hier.report),
            ("without_proxy", &outcome.naive.report),
        ]),
    )?;

    let mut forecast = String::from(
        "date,truth,with_proxy_pred,with_proxy_lo,with_proxy_hi,without_proxy_pred,without_proxy_lo,without_proxy_hi\n",
    );
    for (i, date) in outcome.dates.iter().enumerate() {
        forecast.push_str(&format!(
            "{date},{},{},{},{},{},{},{}\n",
            outcome.truth[i],
            outcome.hier.predictions[i],
            outcome.hier.intervals[i].lower,
            outcome.hier.intervals[i].upper,
            outcome.naive.predictions[i],
            outcome.naive.intervals[i].lower,
            outcome.naive.intervals[i].upper,
        ));
    }
    std::fs::write(ctx.out_path("forecast.csv"), forecast)?;

    let hier_lo: Vec<f64> = outcome.hier.intervals.iter().map(|i| i.lower).collect();
    let hier_hi: Vec<f64> = outcome.hier.intervals.iter().map(|i| i.upper).collect();
    let svg = forecast_plot(
        &outcome.dates,
        &outcome.truth,
        &[
            ForecastSeries {
                name: "two-layer forest",
                values: &outcome.hier.predictions,
                color: "#1b9e77",
                band: Some((&hier_lo, &hier_hi)),
            },
            ForecastSeries {
                name: "direct forest",
                values: &outcome.naive.predictions,
                color: "#d95f02",
                band: None,
            },
        ],
        "daily interview counts, forecast period",
    );
    std::fs::write(ctx.out_path("forecast.svg"), svg)?;

    for (arm, fc) in [("with_proxy", &outcome.hier), ("without_proxy", &outcome.naive)] {
        println!(
            "{arm}: mse {:.3}, {:.0}% interval coverage {}",
            fc.report.mse,
            cfg.pi_level * 100.0,
            fc.report
                .pi_coverage
                .map(|c| format!("{c:.4}"))
                .unwrap_or_else(|| "n/a".to_string())
        );
    }
    println!("{} training days, {} forecast days", outcome.n_train, outcome.dates.len());
    Ok(())
}

fn cfg_proxies() -> Vec<String> {
    proxyforest_core::pipeline::DEFAULT_RACE_PROXIES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn run(cmd: &PipelineCmd, ctx: &Context) -> CliResult<()> {
    match cmd {
        PipelineCmd::Synth(args) => run_synth(args, ctx),
        PipelineCmd::Reason(args) => run_reason_cmd(args, ctx),
        PipelineCmd::Occurrence(args) => run_occurrence_cmd(args, ctx),
    }
}
