//! The stages behind the command line, each reading and writing files.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::gateway::{
    run_batch, Cache, Completion, ConfigError, Gateway, GatewayError, HttpBackend, ModelConfig,
    ReplayBackend, RetryPolicy,
};
use crate::io::{read_jsonl, write_atomic, write_json_atomic, write_jsonl_atomic, JsonlError};
use crate::metrics::{
    aggregate_position, aggregate_transition, confusion_candidate, position_rows_csv,
    score_position, score_transition, transition_rows_csv, EvaluationReport, MatchOptions,
    PositionRow, TransitionRow,
};
use crate::output::{
    parse_position_output, parse_transition_output, DisconnectionCandidate, ParseOutcome,
    TransitionPrediction,
};
use crate::prompt::{
    product_text, render_position_prompt, render_transition_prompt, PromptError, PromptSet,
    PromptVariant, RenderedPrompt, TemplateName,
};
use crate::reaction::{
    build_ontology, extract_structural_label, ingest_dataset, read_rows, record_from_row,
    sample_examples, subsample_eval_set, DatasetFormat, DatasetRow, ExampleLibrary, LabelKind,
    Ontology, ReactionRecord, Reject, Split, StructuralLabel,
};

pub const POSITION_OUTCOMES: &str = "position_outcomes.jsonl";
pub const TRANSITION_OUTCOMES: &str = "transition_outcomes.jsonl";
pub const POSITION_MANIFEST: &str = "position_manifest.jsonl";
pub const TRANSITION_MANIFEST: &str = "transition_manifest.jsonl";
pub const POSITION_CONFIG: &str = "config_position.json";
pub const TRANSITION_CONFIG: &str = "config_transition.json";
pub const RUN_ONTOLOGY: &str = "ontology.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Jsonl {
        path: String,
        #[source]
        source: JsonlError,
    },
    #[error("cannot write {0}: {1}")]
    Write(String, #[source] std::io::Error),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
        .map_err(|e| PipelineError::Write(path.display().to_string(), e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_json_atomic(path, value).map_err(|e| PipelineError::Write(path.display().to_string(), e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_jsonl_atomic(path, rows).map_err(|e| PipelineError::Write(path.display().to_string(), e))
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path).map_err(|source| PipelineError::Jsonl {
        path: path.display().to_string(),
        source,
    })
}

/// A record and its ground-truth reaction center.
#[derive(Debug, Clone)]
pub struct LabeledRecord {
    pub record: ReactionRecord,
    pub label: StructuralLabel,
}

impl LabeledRecord {
    pub fn to_row(&self) -> DatasetRow {
        DatasetRow::labeled(&self.record, &self.label)
    }
}

/// `out.jsonl` -> `out.rejects.jsonl`.
pub fn rejects_path(output: &Path) -> PathBuf {
    output.with_extension("rejects.jsonl")
}

/// Reads a dataset, using stored labels where a row has them and computing
/// the rest.
pub fn load_labeled(path: &Path) -> Result<(Vec<LabeledRecord>, Vec<Reject>)> {
    let (rows, mut rejects) = read_rows(path, DatasetFormat::from_path(path))?;
    let mut out = Vec::with_capacity(rows.len());
    for (row_no, row) in rows {
        match record_from_row(&row) {
            Ok(record) => {
                let label = match (&row.structural_label, row.label_kind) {
                    (Some(atoms), Some(kind)) => StructuralLabel {
                        atoms: atoms.iter().copied().collect(),
                        kind,
                    },
                    _ => extract_structural_label(&record),
                };
                out.push(LabeledRecord { record, label });
            }
            Err(message) => rejects.push(Reject {
                row: row_no,
                record_id: Some(row.id.clone()),
                message,
            }),
        }
    }
    rejects.sort_by_key(|r| r.row);
    Ok((out, rejects))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelSummary {
    pub records: usize,
    pub connectivity: usize,
    pub bond_order: usize,
    pub empty: usize,
    pub rejects: usize,
}

/// Labeled JSONL at `output`, rejects next to it.
pub fn label_file(input: &Path, output: &Path) -> Result<LabelSummary> {
    let ingested = ingest_dataset(input, DatasetFormat::from_path(input))?;
    let mut summary = LabelSummary {
        records: ingested.records.len(),
        rejects: ingested.rejects.len(),
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(ingested.records.len());
    for record in &ingested.records {
        let label = extract_structural_label(record);
        match label.kind {
            LabelKind::Connectivity => summary.connectivity += 1,
            LabelKind::BondOrder => summary.bond_order += 1,
            LabelKind::Empty => summary.empty += 1,
        }
        rows.push(DatasetRow::labeled(record, &label));
    }
    write_jsonl(output, &rows)?;
    write_jsonl(&rejects_path(output), &ingested.rejects)?;
    Ok(summary)
}

pub fn ontology_file(input: &Path, split: Split, output: &Path) -> Result<Ontology> {
    let ingested = ingest_dataset(input, DatasetFormat::from_path(input))?;
    let ontology = build_ontology(&ingested.records, split)?;
    write_json(output, &ontology)?;
    Ok(ontology)
}

pub fn read_ontology(path: &Path) -> Result<Ontology> {
    let text =
        fs::read_to_string(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| {
        PipelineError::Data(DataError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    pub split: Split,
    pub cap: usize,
    pub seed: u64,
    pub unclassified_label: String,
}

/// Records of `split` with a non-empty label, capped per reaction name.
pub fn subsample_records(records: &[LabeledRecord], cfg: &SubsampleConfig) -> Vec<LabeledRecord> {
    let pool: Vec<&LabeledRecord> = records
        .iter()
        .filter(|r| r.record.split == cfg.split && !r.label.is_empty())
        .collect();
    let plain: Vec<ReactionRecord> = pool.iter().map(|r| r.record.clone()).collect();
    let by_id: HashMap<&str, &LabeledRecord> = pool
        .iter()
        .map(|r| (r.record.record_id.as_str(), *r))
        .collect();
    subsample_eval_set(&plain, cfg.cap, &cfg.unclassified_label, cfg.seed)
        .iter()
        .map(|r| by_id[r.record_id.as_str()].clone())
        .collect()
}

pub fn subsample_file(input: &Path, cfg: &SubsampleConfig, output: &Path) -> Result<usize> {
    if cfg.cap == 0 {
        return Err(PipelineError::Invalid("--cap must be at least 1".into()));
    }
    let (records, _) = load_labeled(input)?;
    let chosen = subsample_records(&records, cfg);
    let rows: Vec<DatasetRow> = chosen.iter().map(LabeledRecord::to_row).collect();
    write_jsonl(output, &rows)?;
    Ok(rows.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Live,
    Replay,
}

/// Shared settings of both run stages.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub model: ModelConfig,
    pub backend: BackendChoice,
    /// Cache for live runs, fixture directory for replay.
    pub cache_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub prompts_dir: Option<PathBuf>,
}

impl RunSettings {
    pub fn gateway(&self) -> Result<Gateway> {
        self.model.validate()?;
        if self.parallelism == 0 {
            return Err(ConfigError::Parallelism.into());
        }
        match self.backend {
            BackendChoice::Live => {
                let backend =
                    HttpBackend::new().map_err(|e| PipelineError::Invalid(e.to_string()))?;
                let cache = match &self.cache_dir {
                    Some(dir) => Some(
                        Cache::new(dir)
                            .map_err(|e| PipelineError::Write(dir.display().to_string(), e))?,
                    ),
                    None => None,
                };
                Ok(Gateway::new(Box::new(backend), cache, self.retry))
            }
            BackendChoice::Replay => {
                let dir = self.cache_dir.as_ref().ok_or_else(|| {
                    PipelineError::Invalid("replay backend needs --cache-dir".into())
                })?;
                if !dir.is_dir() {
                    return Err(PipelineError::Invalid(format!(
                        "replay directory {} does not exist",
                        dir.display()
                    )));
                }
                Ok(Gateway::new(
                    Box::new(ReplayBackend::new(dir)),
                    None,
                    self.retry,
                ))
            }
        }
    }

    /// Fails early for live runs whose key variable is unset.
    pub fn check_credentials(&self) -> Result<()> {
        if self.backend == BackendChoice::Live
            && !self.model.api_key_env.is_empty()
            && std::env::var_os(&self.model.api_key_env).is_none()
        {
            return Err(PipelineError::Invalid(format!(
                "authentication: environment variable {} is not set",
                self.model.api_key_env
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateInfo {
    pub name: TemplateName,
    pub digest: String,
    pub pinned: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub stage: String,
    pub eval_set: String,
    pub examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ontology: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_set: Option<String>,
    pub model: ModelConfig,
    pub backend: BackendChoice,
    pub cache_dir: Option<String>,
    pub parallelism: usize,
    pub max_attempts: u32,
    pub prompts_dir: Option<String>,
    pub templates: Vec<TemplateInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionOptions>,
    pub version: String,
}

fn snapshot(
    stage: &str,
    eval_set: &Path,
    examples: usize,
    settings: &RunSettings,
    prompts: &PromptSet,
    used: &[TemplateName],
) -> RunSnapshot {
    RunSnapshot {
        stage: stage.to_string(),
        eval_set: eval_set.display().to_string(),
        examples,
        ontology: None,
        train_set: None,
        model: settings.model.clone(),
        backend: settings.backend,
        cache_dir: settings.cache_dir.as_ref().map(|p| p.display().to_string()),
        parallelism: settings.parallelism,
        max_attempts: settings.retry.max_attempts,
        prompts_dir: settings
            .prompts_dir
            .as_ref()
            .map(|p| p.display().to_string()),
        templates: used
            .iter()
            .map(|&n| {
                let t = prompts.get(n);
                TemplateInfo {
                    name: n,
                    digest: t.digest.clone(),
                    pinned: t.is_pinned(),
                }
            })
            .collect(),
        transition: None,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// One position-model example as stored in the run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionOutcome {
    pub id: String,
    pub product: Option<String>,
    pub request_digest: Option<String>,
    pub completion: Option<Completion>,
    pub render_error: Option<String>,
    pub gateway_error: Option<GatewayError>,
    pub parse: Option<ParseOutcome<DisconnectionCandidate>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionOptions {
    pub examples_k: usize,
    pub variant: PromptVariant,
    pub seed: u64,
    pub omit_reaction_name: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub id: String,
    pub reaction_name: Option<String>,
    pub library: ExampleLibrary,
    /// No same-name training examples were available.
    pub zero_shot: bool,
    pub request_digest: Option<String>,
    pub completion: Option<Completion>,
    pub render_error: Option<String>,
    pub gateway_error: Option<GatewayError>,
    pub parse: Option<ParseOutcome<TransitionPrediction>>,
}

pub fn position_prompts(
    records: &[LabeledRecord],
    ontology: &Ontology,
    prompts: &PromptSet,
) -> Vec<std::result::Result<RenderedPrompt, PromptError>> {
    records
        .iter()
        .map(|r| render_position_prompt(prompts, &r.record.product, ontology))
        .collect()
}

/// Libraries and prompts for the transition stage, one per record.
pub fn transition_prompts(
    records: &[LabeledRecord],
    train: &[ReactionRecord],
    opts: &TransitionOptions,
    prompts: &PromptSet,
) -> Vec<(
    ExampleLibrary,
    std::result::Result<RenderedPrompt, PromptError>,
)> {
    records
        .iter()
        .map(|r| {
            let name = r.record.reaction_name.as_str();
            let library = if opts.omit_reaction_name {
                ExampleLibrary::empty("", opts.seed)
            } else {
                sample_examples(train, name, &r.record.record_id, opts.examples_k, opts.seed)
            };
            let shown_name = (!opts.omit_reaction_name && !name.trim().is_empty()).then_some(name);
            let prompt = render_transition_prompt(
                prompts,
                &r.record.product,
                &r.label.atoms,
                shown_name,
                &library,
                opts.variant,
            );
            (library, prompt)
        })
        .collect()
}

/// Sends the renderable prompts and returns call results aligned with `prompts`.
fn execute(
    gateway: &Gateway,
    settings: &RunSettings,
    prompts: &[Option<&RenderedPrompt>],
    manifest_path: &Path,
) -> Result<Vec<Option<std::result::Result<Completion, GatewayError>>>> {
    let batch: Vec<RenderedPrompt> = prompts.iter().flatten().map(|p| (*p).clone()).collect();
    let result = run_batch(gateway, &batch, &settings.model, settings.parallelism)?;
    write_jsonl(manifest_path, &result.manifest)?;
    let mut calls = result.completions.into_iter();
    Ok(prompts
        .iter()
        .map(|p| p.map(|_| calls.next().expect("one result per prompt")))
        .collect())
}

fn load_eval(path: &Path) -> Result<Vec<LabeledRecord>> {
    let (records, _) = load_labeled(path)?;
    if records.is_empty() {
        return Err(PipelineError::Invalid(format!(
            "evaluation set {} has no usable records",
            path.display()
        )));
    }
    Ok(records)
}

pub fn run_position(
    eval_set: &Path,
    ontology_path: &Path,
    settings: &RunSettings,
    out_dir: &Path,
) -> Result<Vec<PositionOutcome>> {
    settings.check_credentials()?;
    let gateway = settings.gateway()?;
    run_position_with(&gateway, eval_set, ontology_path, settings, out_dir)
}

/// Render, complete, parse and store every example of the evaluation set.
pub fn run_position_with(
    gateway: &Gateway,
    eval_set: &Path,
    ontology_path: &Path,
    settings: &RunSettings,
    out_dir: &Path,
) -> Result<Vec<PositionOutcome>> {
    let records = load_eval(eval_set)?;
    let ontology = read_ontology(ontology_path)?;
    let prompts = PromptSet::load(settings.prompts_dir.as_deref())?;
    let rendered = position_prompts(&records, &ontology, &prompts);

    let mut snap = snapshot(
        "position",
        eval_set,
        records.len(),
        settings,
        &prompts,
        &[TemplateName::Position],
    );
    snap.ontology = Some(ontology_path.display().to_string());
    write_json(&out_dir.join(POSITION_CONFIG), &snap)?;
    write_json(&out_dir.join(RUN_ONTOLOGY), &ontology)?;

    let refs: Vec<Option<&RenderedPrompt>> = rendered.iter().map(|r| r.as_ref().ok()).collect();
    let calls = execute(gateway, settings, &refs, &out_dir.join(POSITION_MANIFEST))?;

    let outcomes: Vec<PositionOutcome> = records
        .iter()
        .zip(rendered.iter().zip(calls))
        .map(|(r, (prompt, call))| {
            let mut o = PositionOutcome {
                id: r.record.record_id.clone(),
                product: product_text(&r.record.product).ok(),
                request_digest: None,
                completion: None,
                render_error: None,
                gateway_error: None,
                parse: None,
            };
            if let Err(e) = prompt {
                o.render_error = Some(e.to_string());
            }
            match call {
                Some(Ok(c)) => {
                    o.request_digest = Some(c.request_digest.clone());
                    o.parse = Some(parse_position_output(&c.text, &r.record.product, &ontology));
                    o.completion = Some(c);
                }
                Some(Err(e)) => o.gateway_error = Some(e),
                None => {}
            }
            o
        })
        .collect();
    write_jsonl(&out_dir.join(POSITION_OUTCOMES), &outcomes)?;
    Ok(outcomes)
}

pub fn run_transition(
    eval_set: &Path,
    train_set: &Path,
    settings: &RunSettings,
    opts: &TransitionOptions,
    out_dir: &Path,
) -> Result<Vec<TransitionOutcome>> {
    settings.check_credentials()?;
    let gateway = settings.gateway()?;
    run_transition_with(&gateway, eval_set, train_set, settings, opts, out_dir)
}

pub fn run_transition_with(
    gateway: &Gateway,
    eval_set: &Path,
    train_set: &Path,
    settings: &RunSettings,
    opts: &TransitionOptions,
    out_dir: &Path,
) -> Result<Vec<TransitionOutcome>> {
    let records = load_eval(eval_set)?;
    let train = ingest_dataset(train_set, DatasetFormat::from_path(train_set))?.records;
    let prompts = PromptSet::load(settings.prompts_dir.as_deref())?;
    let rendered = transition_prompts(&records, &train, opts, &prompts);

    let mut snap = snapshot(
        "transition",
        eval_set,
        records.len(),
        settings,
        &prompts,
        &[opts.variant.template()],
    );
    snap.train_set = Some(train_set.display().to_string());
    snap.transition = Some(opts.clone());
    write_json(&out_dir.join(TRANSITION_CONFIG), &snap)?;

    let refs: Vec<Option<&RenderedPrompt>> =
        rendered.iter().map(|(_, r)| r.as_ref().ok()).collect();
    let calls = execute(gateway, settings, &refs, &out_dir.join(TRANSITION_MANIFEST))?;

    let outcomes: Vec<TransitionOutcome> = records
        .iter()
        .zip(rendered.into_iter().zip(calls))
        .map(|(r, ((library, prompt), call))| {
            let name = (!opts.omit_reaction_name && !r.record.reaction_name.trim().is_empty())
                .then(|| r.record.reaction_name.clone());
            let mut o = TransitionOutcome {
                id: r.record.record_id.clone(),
                reaction_name: name,
                zero_shot: library.is_empty(),
                library,
                request_digest: None,
                completion: None,
                render_error: prompt.err().map(|e| e.to_string()),
                gateway_error: None,
                parse: None,
            };
            match call {
                Some(Ok(c)) => {
                    o.request_digest = Some(c.request_digest.clone());
                    o.parse = Some(parse_transition_output(&c.text, &r.record.product));
                    o.completion = Some(c);
                }
                Some(Err(e)) => o.gateway_error = Some(e),
                None => {}
            }
            o
        })
        .collect();
    write_jsonl(&out_dir.join(TRANSITION_OUTCOMES), &outcomes)?;
    Ok(outcomes)
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub ground_truth: Option<PathBuf>,
    pub unclassified_label: String,
    pub matching: MatchOptions,
}

fn failure_label(
    render: &Option<String>,
    gateway: &Option<GatewayError>,
    parse_failure: Option<&str>,
) -> Option<String> {
    if render.is_some() {
        Some("render".to_string())
    } else if let Some(e) = gateway {
        Some(format!("gateway:{}", e.kind.as_str()))
    } else {
        parse_failure.map(str::to_string)
    }
}

fn ground_truth_path(run_dir: &Path, explicit: &Option<PathBuf>, config: &str) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.clone());
    }
    let path = run_dir.join(config);
    let text =
        fs::read_to_string(&path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
    let snap: RunSnapshot = serde_json::from_str(&text).map_err(|e| DataError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(PathBuf::from(snap.eval_set))
}

fn ground_truth(path: &Path) -> Result<HashMap<String, LabeledRecord>> {
    let (records, _) = load_labeled(path)?;
    Ok(records
        .into_iter()
        .map(|r| (r.record.record_id.clone(), r))
        .collect())
}

fn lookup<'a>(gt: &'a HashMap<String, LabeledRecord>, id: &str) -> Result<&'a LabeledRecord> {
    gt.get(id)
        .ok_or_else(|| PipelineError::Invalid(format!("no ground truth for example '{id}'")))
}

pub fn position_rows(run_dir: &Path, opts: &EvaluateOptions) -> Result<Vec<PositionRow>> {
    let outcomes: Vec<PositionOutcome> = read_lines(&run_dir.join(POSITION_OUTCOMES))?;
    let ontology = read_ontology(&run_dir.join(RUN_ONTOLOGY))?;
    let gt = ground_truth(&ground_truth_path(
        run_dir,
        &opts.ground_truth,
        POSITION_CONFIG,
    )?)?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let truth = lookup(&gt, &o.id)?;
        let parse = o
            .completion
            .as_ref()
            .map(|c| parse_position_output(&c.text, &truth.record.product, &ontology));
        let cands: &[DisconnectionCandidate] =
            parse.as_ref().map(|p| p.ok.as_slice()).unwrap_or(&[]);
        let score = score_position(cands, &truth.label.atoms, &truth.record.reaction_name);
        let pick = confusion_candidate(cands, &truth.label.atoms, &truth.record.reaction_name);
        let parse_failure = parse
            .as_ref()
            .and_then(|p| p.failure_class)
            .map(|f| f.as_str());
        rows.push(PositionRow {
            id: o.id.clone(),
            score,
            failure: failure_label(&o.render_error, &o.gateway_error, parse_failure),
            gt_name: truth.record.reaction_name.clone(),
            gt_class: truth.record.reaction_class.clone(),
            pred_name: pick.map(|c| c.reaction_name.clone()),
            pred_class: pick.map(|c| {
                ontology
                    .class_of(&c.reaction_name)
                    .unwrap_or(&c.reaction_class)
                    .to_string()
            }),
            pred_in_ontology: pick.map(|c| c.in_ontology),
        });
    }
    Ok(rows)
}

pub fn transition_rows(run_dir: &Path, opts: &EvaluateOptions) -> Result<Vec<TransitionRow>> {
    let outcomes: Vec<TransitionOutcome> = read_lines(&run_dir.join(TRANSITION_OUTCOMES))?;
    let gt = ground_truth(&ground_truth_path(
        run_dir,
        &opts.ground_truth,
        TRANSITION_CONFIG,
    )?)?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let truth = lookup(&gt, &o.id)?;
        let parse = o
            .completion
            .as_ref()
            .map(|c| parse_transition_output(&c.text, &truth.record.product));
        let preds: &[TransitionPrediction] = parse.as_ref().map(|p| p.ok.as_slice()).unwrap_or(&[]);
        let parse_failure = parse
            .as_ref()
            .and_then(|p| p.failure_class)
            .map(|f| f.as_str());
        rows.push(TransitionRow {
            id: o.id.clone(),
            score: score_transition(preds, &truth.record.reactants, opts.matching),
            failure: failure_label(&o.render_error, &o.gateway_error, parse_failure),
            reaction_name: o.reaction_name.clone(),
            library_size: o.library.examples.len(),
        });
    }
    Ok(rows)
}

/// Scores whatever stages the run directory holds and writes the report files
/// into `out_dir`.
pub fn evaluate_run(
    run_dir: &Path,
    opts: &EvaluateOptions,
    out_dir: &Path,
) -> Result<EvaluationReport> {
    let has_position = run_dir.join(POSITION_OUTCOMES).is_file();
    let has_transition = run_dir.join(TRANSITION_OUTCOMES).is_file();
    if !has_position && !has_transition {
        return Err(PipelineError::Invalid(format!(
            "{} holds no run outcomes",
            run_dir.display()
        )));
    }
    let mut report = EvaluationReport::default();
    if has_position {
        let rows = position_rows(run_dir, opts)?;
        if rows.is_empty() {
            return Err(PipelineError::Invalid(
                "position run has no examples".into(),
            ));
        }
        let agg = aggregate_position(&rows, &opts.unclassified_label);
        write_text(
            &out_dir.join("position_rows.csv"),
            &position_rows_csv(&rows),
        )?;
        write_text(
            &out_dir.join("confusion_class.csv"),
            &agg.confusion_class.to_csv(),
        )?;
        write_text(
            &out_dir.join("confusion_name.csv"),
            &agg.confusion_name.to_csv(),
        )?;
        report.position = Some(agg);
    }
    if has_transition {
        let rows = transition_rows(run_dir, opts)?;
        if rows.is_empty() {
            return Err(PipelineError::Invalid(
                "transition run has no examples".into(),
            ));
        }
        write_text(
            &out_dir.join("transition_rows.csv"),
            &transition_rows_csv(&rows),
        )?;
        write_jsonl(&out_dir.join("transition_rows.jsonl"), &rows)?;
        report.transition = Some(aggregate_transition(&rows));
    }
    write_json(&out_dir.join("report.json"), &report)?;
    write_text(&out_dir.join("summary.txt"), &report.summary_text())?;
    Ok(report)
}
