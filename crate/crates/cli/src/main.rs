use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomsite_core::gateway::{ModelConfig, RetryPolicy, ThinkingBudget};
use atomsite_core::metrics::MatchOptions;
use atomsite_core::pipeline::{
    self, BackendChoice, EvaluateOptions, RunSettings, SubsampleConfig, TransitionOptions,
};
use atomsite_core::prompt::PromptVariant;
use atomsite_core::reaction::Split;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "atomsite",
    version,
    about = "Two-stage LLM retrosynthesis harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute structural labels for an atom-mapped dataset.
    Label {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Collect the reaction-name ontology of one split.
    Ontology {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cap the evaluation set per reaction name.
    Subsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = 5)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "OtherReaction")]
        unclassified_label: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Ask the position model for disconnection sites.
    RunPosition {
        /// Labeled evaluation set.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        /// Run directory.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Ask the transition model for reactants at the ground-truth site.
    RunTransition {
        #[arg(long)]
        input: PathBuf,
        /// Training records to draw same-name examples from.
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        examples_k: usize,
        #[arg(long, default_value = "full")]
        prompt_variant: PromptVariant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Leave the reaction name (and examples) out of the prompt.
        #[arg(long)]
        omit_reaction_name: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score a run directory against ground truth.
    Evaluate {
        /// Run directory.
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the run directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Defaults to the evaluation set recorded in the run config.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        ignore_stereo: bool,
        #[arg(long, default_value = "OtherReaction")]
        unclassified_label: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Live,
    Replay,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    endpoint: String,
    /// Environment variable holding the API key; empty sends no auth header.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 32768)]
    max_output_tokens: u32,
    /// Token count or a provider level such as "high".
    #[arg(long)]
    thinking_budget: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_p: Option<f64>,
    #[arg(long)]
    sampling_seed: Option<u64>,
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long, default_value_t = 5)]
    max_attempts: u32,
    #[arg(long, value_enum, default_value = "live")]
    backend: Backend,
    /// Response cache for live runs; fixture directory for replay.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Directory of `<template>.txt` overrides.
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
}

impl ModelArgs {
    fn settings(&self) -> Result<RunSettings, String> {
        let mut model =
            ModelConfig::new(self.model.clone(), &self.endpoint).map_err(|e| e.to_string())?;
        model.api_key_env = self.api_key_env.clone();
        model.max_output_tokens = self.max_output_tokens;
        model.thinking_budget = self
            .thinking_budget
            .as_deref()
            .map(|t| match t.parse::<u32>() {
                Ok(n) => ThinkingBudget::Tokens(n),
                Err(_) => ThinkingBudget::Level(t.to_string()),
            });
        model.sampling.temperature = self.temperature;
        model.sampling.top_p = self.top_p;
        model.sampling.seed = self.sampling_seed;
        model.timeout_secs = self.timeout_secs;
        if self.max_attempts == 0 {
            return Err("--max-attempts must be at least 1".into());
        }
        Ok(RunSettings {
            model,
            backend: match self.backend {
                Backend::Live => BackendChoice::Live,
                Backend::Replay => BackendChoice::Replay,
            },
            cache_dir: self.cache_dir.clone(),
            parallelism: self.parallelism,
            retry: RetryPolicy {
                max_attempts: self.max_attempts,
                ..RetryPolicy::default()
            },
            prompts_dir: self.prompts_dir.clone(),
        })
    }
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn require_file(path: &Path) -> Result<(), String> {
    if path.is_file() {
        Ok(())
    } else {
        Err(format!("{} does not exist", path.display()))
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: pipeline::PipelineError| e.to_string();
    match cli.command {
        Command::Label { input, output } => {
            let s = pipeline::label_file(&input, &output).map_err(err)?;
            eprintln!(
                "{} records labeled ({} connectivity, {} bond order, {} empty), {} rejected",
                s.records, s.connectivity, s.bond_order, s.empty, s.rejects
            );
        }
        Command::Ontology {
            input,
            split,
            output,
        } => {
            let o = pipeline::ontology_file(&input, split, &output).map_err(err)?;
            eprintln!("{} reaction names from the {split} split", o.len());
        }
        Command::Subsample {
            input,
            split,
            cap,
            seed,
            unclassified_label,
            output,
        } => {
            let cfg = SubsampleConfig {
                split,
                cap,
                seed,
                unclassified_label,
            };
            let n = pipeline::subsample_file(&input, &cfg, &output).map_err(err)?;
            eprintln!("{n} records kept");
        }
        Command::RunPosition {
            input,
            ontology,
            output,
            model,
        } => {
            require_file(&input)?;
            require_file(&ontology)?;
            let settings = model.settings()?;
            ensure_dir(&output)?;
            let outcomes =
                pipeline::run_position(&input, &ontology, &settings, &output).map_err(err)?;
            let parsed = outcomes
                .iter()
                .filter(|o| o.parse.as_ref().is_some_and(|p| !p.is_failed()))
                .count();
            eprintln!(
                "{} examples, {parsed} with parsed candidates",
                outcomes.len()
            );
        }
        Command::RunTransition {
            input,
            train,
            output,
            examples_k,
            prompt_variant,
            seed,
            omit_reaction_name,
            model,
        } => {
            require_file(&input)?;
            require_file(&train)?;
            let settings = model.settings()?;
            ensure_dir(&output)?;
            let opts = TransitionOptions {
                examples_k,
                variant: prompt_variant,
                seed,
                omit_reaction_name,
            };
            let outcomes =
                pipeline::run_transition(&input, &train, &settings, &opts, &output).map_err(err)?;
            let parsed = outcomes
                .iter()
                .filter(|o| o.parse.as_ref().is_some_and(|p| !p.is_failed()))
                .count();
            let zero = outcomes.iter().filter(|o| o.zero_shot).count();
            eprintln!(
                "{} examples, {parsed} with parsed predictions, {zero} without examples",
                outcomes.len()
            );
        }
        Command::Evaluate {
            input,
            output,
            ground_truth,
            ignore_stereo,
            unclassified_label,
        } => {
            let out = output.unwrap_or_else(|| input.clone());
            ensure_dir(&out)?;
            let opts = EvaluateOptions {
                ground_truth,
                unclassified_label,
                matching: MatchOptions { ignore_stereo },
            };
            let report = pipeline::evaluate_run(&input, &opts, &out).map_err(err)?;
            print!("{}", report.summary_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
