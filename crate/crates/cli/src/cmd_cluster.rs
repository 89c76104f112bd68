//! `cluster`: consolidate a column of free-text labels. Reads a
//! single-column CSV (header row skipped), writes the label→cluster
//! assignment, the within-cost curve, and a dendrogram.

use clap::Args;
use proxyforest_core::cluster::{
    distance_matrix, within_cost, ClusterModel, ClusterOptions, DistanceMode, Linkage,
};
use proxyforest_core::plot::dendrogram;
use std::path::PathBuf;

use crate::{CliError, CliResult, Context};

const SECTION: &[&str] = &["cluster"];

#[derive(Args, Debug)]
pub struct ClusterArgs {
    /// One-column CSV of labels (first row is a header)
    #[arg(long)]
    input: Option<PathBuf>,

    /// soundex-jw (phonetic) or raw-jw (lowercased text)
    #[arg(long)]
    mode: Option<String>,

    /// average, complete, or single
    #[arg(long)]
    linkage: Option<String>,

    /// Winkler prefix scale in [0, 0.25]
    #[arg(long)]
    prefix_scale: Option<f64>,

    /// Force this many clusters instead of the elbow rule
    #[arg(long)]
    k: Option<usize>,

    /// Largest k the elbow rule considers
    #[arg(long)]
    k_max: Option<usize>,
}

fn read_labels(path: &PathBuf) -> CliResult<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| {
        CliError::Runtime(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 1 {
            return Err(CliError::Runtime(format!(
                "{}: expected one column, row has {}",
                path.display(),
                record.len()
            )));
        }
        labels.push(record[0].to_string());
    }
    if labels.is_empty() {
        return Err(CliError::Runtime(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

pub fn run(args: &ClusterArgs, ctx: &Context) -> CliResult<()> {
    let input = match &args.input {
        Some(p) => p.clone(),
        None => ctx
            .overlay
            .path_opt(SECTION, "input")?
            .ok_or_else(|| CliError::usage("--input is required"))?,
    };
    let k = match args.k {
        Some(k) => Some(k),
        None => ctx.overlay.usize_opt(SECTION, "k")?,
    };
    if k == Some(0) {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let mode = match &args.mode {
        Some(m) => Some(m.clone()),
        None => ctx.overlay.string_opt(SECTION, "mode")?,
    };
    let linkage = match &args.linkage {
        Some(l) => Some(l.clone()),
        None => ctx.overlay.string_opt(SECTION, "linkage")?,
    };
    let options = ClusterOptions {
        mode: match mode {
            Some(m) => DistanceMode::parse(&m).map_err(|e| CliError::usage(e.to_string()))?,
            None => DistanceMode::SoundexJw,
        },
        linkage: match linkage {
            Some(l) => Linkage::parse(&l).map_err(|e| CliError::usage(e.to_string()))?,
            None => Linkage::Average,
        },
        prefix_scale: args
            .prefix_scale
            .or(ctx.overlay.f64_opt(SECTION, "prefix_scale")?)
            .unwrap_or(0.1),
        k,
        k_max: args.k_max.or(ctx.overlay.usize_opt(SECTION, "k_max")?).unwrap_or(10),
    };

    let labels = read_labels(&input)?;
    let model = ClusterModel::fit(&labels, &options)?;

    let mut assignments = csv::Writer::from_path(ctx.out_path("assignments.csv"))?;
    assignments.write_record(["label", "cluster"])?;
    for (label, cluster) in model.labels.iter().zip(&model.assignment) {
        assignments.write_record([label.as_str(), &cluster.to_string()])?;
    }
    assignments.flush()?;

    // curve over every usable k, whether or not the elbow picked this run's k
    let d = distance_matrix(&model.labels, model.mode, model.prefix_scale)?;
    let n = model.labels.len();
    let mut curve = String::from("k,within_cost\n");
    for kk in 1..=options.k_max.min(n) {
        let w = within_cost(&d, n, &model.merges, kk)?;
        curve.push_str(&format!("{kk},{w}\n"));
    }
    std::fs::write(ctx.out_path("elbow.csv"), curve)?;

    if n >= 2 {
        let svg = dendrogram(&model.labels, &model.merges, "label dendrogram");
        std::fs::write(ctx.out_path("dendrogram.svg"), svg)?;
    } else {
        eprintln!("warning: single label, skipping dendrogram");
    }

    let origin = if k.is_some() { "forced" } else { "elbow" };
    println!("k = {} ({origin})", model.k);
    for c in 1..=model.k {
        let size = model.assignment.iter().filter(|&&a| a == c).count();
        println!("cluster {c}: medoid {:?}, {size} label(s)", model.medoid_label(c));
    }
    Ok(())
}
