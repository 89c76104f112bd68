//! `simulate`: the paired-arm comparison on generated data. One table CSV
//! per scenario plus, for the regression scenarios, a per-arm prediction
//! plot and the recovered-latent plot.

use clap::Args;
use proxyforest_core::plot::{protected_plot, scenario_plot, PlotArm};
use proxyforest_core::simulate::{
    run_study, table_csv, Scenario, ScenarioSpec, StudyForestConfig, StudyResult,
};

use crate::{CliError, CliResult, Context, SeedArg};

const SECTION: &[&str] = &["simulate"];

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// linear, nonlinear, classification, or all
    #[arg(long)]
    scenario: Option<String>,

    /// Observations per draw
    #[arg(long)]
    n: Option<usize>,

    /// Replicates
    #[arg(long)]
    b: Option<usize>,

    /// Generating noise standard deviation
    #[arg(long)]
    noise_sd: Option<f64>,

    /// Trees per forest
    #[arg(long)]
    trees: Option<usize>,

    /// Minimum node size, regression forests
    #[arg(long)]
    min_node_reg: Option<usize>,

    /// Minimum node size, classification forests
    #[arg(long)]
    min_node_cls: Option<usize>,

    /// Features tried per split (default ⌊√p⌋)
    #[arg(long)]
    mtry: Option<usize>,

    #[command(flatten)]
    seed: SeedArg,
}

fn scenarios(requested: &str) -> CliResult<Vec<Scenario>> {
    if requested == "all" {
        return Ok(vec![Scenario::Linear, Scenario::Nonlinear, Scenario::Classification]);
    }
    Ok(vec![Scenario::parse(requested).map_err(|e| CliError::usage(e.to_string()))?])
}

fn write_artifacts(result: &StudyResult, ctx: &Context) -> CliResult<()> {
    let name = result.spec.scenario.name();
    std::fs::write(ctx.out_path(&format!("{name}_table.csv")), table_csv(result))?;

    if let Some(reg) = &result.regression {
        if reg.plot.is_empty() {
            eprintln!("warning: {name}: no plot points, skipping prediction plots");
        } else {
            for (arm, file) in [
                (PlotArm::WithProxy, format!("{name}_with_proxy.svg")),
                (PlotArm::WithoutProxy, format!("{name}_without_proxy.svg")),
            ] {
                let svg = scenario_plot(&reg.plot, arm, &format!("{name}: {}", arm.label()));
                std::fs::write(ctx.out_path(&file), svg)?;
            }
        }
        write_protected(name, &reg.protected_plot, ctx)?;
        println!(
            "{name}: mse with_proxy {:.4} without_proxy {:.4}, bias {:.4} / {:.4}",
            reg.hier.mse, reg.naive.mse, reg.hier.bias, reg.naive.bias
        );
    }
    if let Some(cls) = &result.classification {
        write_protected(name, &cls.protected_plot, ctx)?;
        println!(
            "{name}: accuracy with_proxy {:.4} without_proxy {:.4}",
            cls.hier_accuracy, cls.naive_accuracy
        );
    }
    Ok(())
}

fn write_protected(name: &str, pairs: &[(f64, f64)], ctx: &Context) -> CliResult<()> {
    if pairs.is_empty() {
        eprintln!("warning: {name}: no recovered-latent pairs, skipping plot");
        return Ok(());
    }
    let svg = protected_plot(pairs, &format!("{name}: recovered latent variable"));
    std::fs::write(ctx.out_path(&format!("{name}_protected.svg")), svg)?;
    Ok(())
}

pub fn run(args: &SimulateArgs, ctx: &Context) -> CliResult<()> {
    let seed = args.seed.resolve(ctx, SECTION)?;
    let requested = match &args.scenario {
        Some(s) => s.clone(),
        None => ctx
            .overlay
            .string_opt(SECTION, "scenario")?
            .unwrap_or_else(|| "all".to_string()),
    };

    let fc = StudyForestConfig {
        n_trees: args.trees.or(ctx.overlay.usize_opt(SECTION, "trees")?).unwrap_or(500),
        min_node_size_regression: args
            .min_node_reg
            .or(ctx.overlay.usize_opt(SECTION, "min_node_reg")?)
            .unwrap_or(5),
        min_node_size_classification: args
            .min_node_cls
            .or(ctx.overlay.usize_opt(SECTION, "min_node_cls")?)
            .unwrap_or(1),
        mtry: match args.mtry {
            Some(m) => Some(m),
            None => ctx.overlay.usize_opt(SECTION, "mtry")?,
        },
    };

    for scenario in scenarios(&requested)? {
        let spec = ScenarioSpec {
            scenario,
            n: args.n.or(ctx.overlay.usize_opt(SECTION, "n")?).unwrap_or(500),
            b: args.b.or(ctx.overlay.usize_opt(SECTION, "b")?).unwrap_or(100),
            noise_sd: args
                .noise_sd
                .or(ctx.overlay.f64_opt(SECTION, "noise_sd")?)
                .unwrap_or(1.0),
            seed,
        };
        let result = run_study(&spec, &fc)?;
        write_artifacts(&result, ctx)?;
    }
    Ok(())
}
