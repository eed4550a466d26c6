//! Command line entry point. Subcommands run increasing slices of the
//! pipeline: `train` < `explain`/`perturb` < `audit`. Exit codes map
//! the library error kinds: 1 config, 2 data, 3 numeric.

mod config;
mod outputs;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fiaudit::consistency::ConsistencyReport;
use fiaudit::explainers::ImportanceRanking;
use fiaudit::perturbation::PerturbationCurve;
use fiaudit::{Error, Result};

use config::RunConfig;
use outputs::OutputWriter;
use pipeline::{ModelExplanations, ModelPerturbations};

#[derive(Parser)]
#[command(name = "fiaudit", about = "Feature importance audit for binary classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Comma-separated model subset, overriding the config
    /// (logistic, random_forest, gradient_boosting, mlp).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the enabled models and report holdout accuracy.
    Train(CommonArgs),
    /// Train, then run the static explainers.
    Explain(CommonArgs),
    /// Train, then run the what-if perturbation sweeps.
    Perturb(CommonArgs),
    /// Full pipeline: train, explain, perturb, consistency report.
    Audit(CommonArgs),
    /// Generate the configured synthetic dataset as a CSV.
    GenSynth(CommonArgs),
    /// Render report.md from an existing consistency_report.json.
    Report(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => run(args, Stage::Train),
        Command::Explain(args) => run(args, Stage::Explain),
        Command::Perturb(args) => run(args, Stage::Perturb),
        Command::Audit(args) => run(args, Stage::Audit),
        Command::GenSynth(args) => gen_synth(args),
        Command::Report(args) => render_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                Error::Data(_) => 2,
                Error::Numeric(_) => 3,
            })
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Train,
    Explain,
    Perturb,
    Audit,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(models) = &args.models {
        config.models.enabled = models.clone();
        config.validate()?;
    }
    Ok(config)
}

fn run(args: &CommonArgs, stage: Stage) -> Result<()> {
    let config = load_config(args)?;
    let hash = config.hash();
    let writer = OutputWriter::new(&args.out, &hash, config.master_seed)?;
    let progress = |msg: &str| {
        if !args.quiet {
            eprintln!("[{hash}] {msg}");
        }
    };

    progress("loading data");
    let data = pipeline::prepare_data(&config)?;
    writer.write_json("run_config.json", &config)?;
    if let Some(report) = &data.drop_report {
        writer.write_json("drop_report.json", report)?;
    }

    let kinds = config.models.enabled_kinds()?;
    progress("training models");
    let suite = pipeline::train_models(&config, &data, &kinds)?;
    writer.write_json("models.json", &suite)?;
    writer.write_accuracy_csv("accuracy.csv", &suite.accuracy)?;
    if stage == Stage::Train {
        return Ok(());
    }

    let explanations = if stage != Stage::Perturb {
        progress("running static explainers");
        let explanations = pipeline::explain_models(&config, &data, &suite)?;
        write_explanations(&writer, &explanations, &progress)?;
        Some(explanations)
    } else {
        None
    };
    if stage == Stage::Explain {
        return Ok(());
    }

    progress("running perturbation sweeps");
    let perturbations = pipeline::perturb_models(&config, &data, &suite)?;
    write_perturbations(&writer, &perturbations)?;
    if stage == Stage::Perturb {
        return Ok(());
    }

    progress("building consistency report");
    let explanations = explanations.expect("audit runs explainers");
    let report = pipeline::build_report(&config, &data, &explanations, &perturbations)?;
    writer.write_json("consistency_report.json", &report)?;
    writer.write_text("report.md", &outputs::consistency_markdown(&report))?;
    progress("done");
    Ok(())
}

fn write_explanations(
    writer: &OutputWriter,
    explanations: &[ModelExplanations],
    progress: &dyn Fn(&str),
) -> Result<()> {
    let mut rankings: Vec<ImportanceRanking> = Vec::new();
    let mut attribution_groups = Vec::new();
    for e in explanations {
        rankings.extend(e.rankings.iter().cloned());
        rankings.push(e.gam_good.clone());
        rankings.push(e.gam_bad.clone());
        attribution_groups.push((e.model.as_str(), e.shap_attributions.as_slice()));
        attribution_groups.push((e.model.as_str(), e.lime_attributions.as_slice()));
        for technique in &e.skipped {
            progress(&format!("{}: skipped {technique} (not applicable)", e.model));
        }
    }
    writer.write_json("rankings.json", &rankings)?;
    writer.write_rankings_csv("rankings.csv", &rankings)?;
    writer.write_json(
        "attributions.json",
        &explanations
            .iter()
            .map(|e| (&e.model, &e.shap_attributions, &e.lime_attributions))
            .collect::<Vec<_>>(),
    )?;
    writer.write_attributions_csv("attributions.csv", &attribution_groups)?;
    writer.write_json(
        "gam.json",
        &explanations
            .iter()
            .map(|e| (&e.model, &e.gam))
            .collect::<Vec<_>>(),
    )?;
    Ok(())
}

fn write_perturbations(writer: &OutputWriter, perturbations: &[ModelPerturbations]) -> Result<()> {
    let curve_groups: Vec<(&str, &[PerturbationCurve])> = perturbations
        .iter()
        .map(|p| (p.model.as_str(), p.curves.as_slice()))
        .collect();
    writer.write_json("curves.json", perturbations)?;
    writer.write_curves_csv("curves.csv", &curve_groups)?;
    writer.write_json(
        "sensitivities.json",
        &perturbations
            .iter()
            .map(|p| (&p.model, &p.sensitivities))
            .collect::<Vec<_>>(),
    )?;
    Ok(())
}

fn gen_synth(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", args.out.display())))?;
    let path = args.out.join("synthetic.csv");
    pipeline::write_synthetic_csv(&config, &path)?;
    if !args.quiet {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn render_report(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    let envelope: outputs::Envelope<ConsistencyReport> =
        outputs::read_json(&args.out.join("consistency_report.json"))?;
    let writer = OutputWriter::new(&args.out, &envelope.config_hash, envelope.master_seed)?;
    let markdown = outputs::consistency_markdown(&envelope.payload);
    writer.write_text("report.md", &markdown)?;
    if !args.quiet {
        println!("{markdown}");
    }
    let _ = config;
    Ok(())
}
