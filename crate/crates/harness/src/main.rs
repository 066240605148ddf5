//! Command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use otca_harness::ablate::{ablation_grid, compare_variants};
use otca_harness::config::{ExperimentConfig, Variant};
use otca_harness::curves::{collect_runs, emit_reward_curves};
use otca_harness::error::{HarnessError, Result};
use otca_harness::metrics::append_json_line;
use otca_harness::runner::{
    ensure_pretrained, load_model_for_eval, proxy_eval, proxy_report_to_json, run_experiment,
};

#[derive(Parser)]
#[command(name = "otca", about = "Credit-assigned GRPO training on a toy flow-matching policy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for checkpoints, logs, and tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain the flow model and save its checkpoint.
    Pretrain {
        #[command(flatten)]
        common: Common,
    },
    /// Run one training experiment (pretraining first if needed).
    Train {
        #[command(flatten)]
        common: Common,
        /// Credit-assignment variant: baseline, tcd, moca, or full.
        #[arg(long)]
        variant: Option<String>,
        /// Override the number of training iterations.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Run the full variant × seed ablation and write the summary table.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Proxy validation: alignment gains versus reward gains on sampled
    /// trajectories (uses the trained policy checkpoint when present).
    ProxyEval {
        #[command(flatten)]
        common: Common,
        /// Select which trained policy to evaluate.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Export reward curves from the metrics logs in the output directory.
    Curves {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn apply_variant(config: ExperimentConfig, variant: &Option<String>) -> Result<ExperimentConfig> {
    match variant {
        Some(name) => Ok(config.with_variant(Variant::parse(name)?)),
        None => Ok(config),
    }
}

fn cmd_pretrain(common: &Common) -> Result<()> {
    let config = load_config(common)?;
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join("flow.ckpt");
    if path.exists() {
        std::fs::remove_file(&path)?;
    }
    ensure_pretrained(&config, &common.out)?;
    Ok(())
}

fn cmd_train(
    common: &Common,
    variant: &Option<String>,
    iterations: &Option<usize>,
) -> Result<()> {
    let mut config = apply_variant(load_config(common)?, variant)?;
    if let Some(iters) = iterations {
        config.iterations = *iters;
    }
    let artifacts = run_experiment(&config, &common.out, None)?;
    let record = &artifacts.final_record;
    println!(
        "run {} finished: aggregate reward {:.4}, surrogate {:.6}, lambda {:.4} ({:.1}s)",
        config.run_label(),
        record.reward_aggregate,
        record.surrogate,
        record.lambda_mean,
        record.wall_time_s,
    );
    println!("metrics: {}", artifacts.metrics_path.display());
    println!("policy:  {}", artifacts.policy_path.display());
    Ok(())
}

fn cmd_ablate(common: &Common) -> Result<()> {
    let config = load_config(common)?;
    let grid = ablation_grid(&config);
    let table = compare_variants(&grid, &common.out)?;
    let text = table.render_text();
    print!("{text}");
    std::fs::write(common.out.join("ablation.txt"), &text)?;
    let json = serde_json::to_string_pretty(&table)
        .map_err(|e| HarnessError::Numeric(format!("serializing table: {e}")))?;
    std::fs::write(common.out.join("ablation.json"), json)?;
    println!("table written to {}", common.out.join("ablation.txt").display());
    Ok(())
}

fn cmd_proxy_eval(common: &Common, variant: &Option<String>) -> Result<()> {
    let config = apply_variant(load_config(common)?, variant)?;
    let (net, schedule, model_path) = load_model_for_eval(&config, &common.out)?;
    let report = proxy_eval(&config, &net, &schedule)?;
    println!(
        "proxy validation of {} over {} trajectories ({} degenerate):",
        model_path.display(),
        report.n_trajectories,
        report.n_degenerate
    );
    println!(
        "  pearson   {:.4} ± {:.4}\n  spearman  {:.4} ± {:.4}\n  agreement {:.4} ± {:.4}",
        report.pearson_mean,
        report.pearson_std,
        report.spearman_mean,
        report.spearman_std,
        report.agreement_mean,
        report.agreement_std,
    );
    println!(
        "  recall@3  {:.4}\n  recall@5  {:.4}\n  argmax distance {:.3}",
        report.recall_at_3, report.recall_at_5, report.argmax_distance_mean
    );
    let mut value = proxy_report_to_json(&report);
    value["model"] = serde_json::Value::String(model_path.display().to_string());
    let log = common.out.join("proxy_reports.jsonl");
    append_json_line(&log, &value)?;
    println!("report appended to {}", log.display());
    Ok(())
}

fn cmd_curves(common: &Common) -> Result<()> {
    let config = load_config(common)?;
    let runs = collect_runs(&common.out)?;
    let csv = emit_reward_curves(&runs, &config.reward_names())?;
    let path = common.out.join("curves.csv");
    std::fs::write(&path, csv)?;
    println!("curves written to {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Pretrain { common } => cmd_pretrain(common),
        Command::Train {
            common,
            variant,
            iterations,
        } => cmd_train(common, variant, iterations),
        Command::Ablate { common } => cmd_ablate(common),
        Command::ProxyEval { common, variant } => cmd_proxy_eval(common, variant),
        Command::Curves { common } => cmd_curves(common),
    }
}

fn main() -> ExitCode {
    // Flag parse errors are configuration errors: exit code 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
