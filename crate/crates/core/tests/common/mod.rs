#![allow(dead_code)]

pub mod gen;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use atomsite_core::gateway::{
    request_digest, Backend, BackendError, BackendReply, CacheEntry, ChatRequest, Completion,
    ModelConfig, RetryPolicy,
};
use atomsite_core::pipeline::{
    self, load_labeled, position_prompts, read_ontology, transition_prompts, BackendChoice,
    EvaluateOptions, RunSettings, SubsampleConfig, TransitionOptions,
};
use atomsite_core::prompt::{PromptSet, PromptVariant, RenderedPrompt};
use atomsite_core::reaction::{ingest_dataset, DatasetFormat, Split};
use serde::Deserialize;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn golden(rel: &str) -> PathBuf {
    fixture("golden").join(rel)
}

pub fn golden_model() -> ModelConfig {
    let mut m =
        ModelConfig::new("golden-model", "https://models.invalid/v1/chat/completions").unwrap();
    m.api_key_env = String::new();
    m
}

pub fn replay_settings(dir: &Path) -> RunSettings {
    RunSettings {
        model: golden_model(),
        backend: BackendChoice::Replay,
        cache_dir: Some(dir.to_path_buf()),
        parallelism: 4,
        retry: RetryPolicy::immediate(2),
        prompts_dir: None,
    }
}

pub fn golden_transition_options() -> TransitionOptions {
    TransitionOptions {
        examples_k: 5,
        variant: PromptVariant::Full,
        seed: 0,
        omit_reaction_name: false,
    }
}

pub fn golden_subsample() -> SubsampleConfig {
    SubsampleConfig {
        split: Split::Test,
        cap: 5,
        seed: 0,
        unclassified_label: "OtherReaction".into(),
    }
}

/// Paths produced by the data-preparation stages.
pub struct Prepared {
    pub labeled: PathBuf,
    pub ontology: PathBuf,
    pub eval: PathBuf,
}

pub fn prepare(dataset: &Path, work: &Path) -> Prepared {
    let p = Prepared {
        labeled: work.join("labeled.jsonl"),
        ontology: work.join("ontology.json"),
        eval: work.join("eval.jsonl"),
    };
    pipeline::label_file(dataset, &p.labeled).unwrap();
    pipeline::ontology_file(&p.labeled, Split::Train, &p.ontology).unwrap();
    pipeline::subsample_file(&p.labeled, &golden_subsample(), &p.eval).unwrap();
    p
}

#[derive(Deserialize)]
pub struct Canned {
    pub position: BTreeMap<String, String>,
    pub transition: BTreeMap<String, String>,
}

pub fn canned() -> Canned {
    serde_json::from_str(&fs::read_to_string(golden("canned.json")).unwrap()).unwrap()
}

fn entry(prompt: &RenderedPrompt, model: &ModelConfig, text: &str) -> CacheEntry {
    let digest = request_digest(prompt, model);
    CacheEntry {
        digest: digest.clone(),
        model_id: model.model_id.clone(),
        template_name: prompt.template_name,
        template_digest: prompt.template_digest.clone(),
        completion: Completion {
            request_digest: digest,
            text: text.to_string(),
            finish_reason: "stop".into(),
            latency_ms: 1000,
            token_usage: None,
        },
    }
}

/// Replay directory holding the canned completions for the prepared golden inputs.
pub fn write_replay_dir(prepared: &Prepared, out: &Path) {
    fs::create_dir_all(out).unwrap();
    let canned = canned();
    let model = golden_model();
    let prompts = PromptSet::builtin();
    let (records, _) = load_labeled(&prepared.eval).unwrap();
    let ontology = read_ontology(&prepared.ontology).unwrap();
    let train = ingest_dataset(&prepared.labeled, DatasetFormat::Jsonl)
        .unwrap()
        .records;
    let pos = position_prompts(&records, &ontology, &prompts);
    let tr = transition_prompts(&records, &train, &golden_transition_options(), &prompts);
    for ((r, p), (_, t)) in records.iter().zip(pos).zip(tr) {
        let id = &r.record.record_id;
        for (prompt, text) in [
            (p.unwrap(), &canned.position[id]),
            (t.unwrap(), &canned.transition[id]),
        ] {
            let e = entry(&prompt, &model, text);
            let path = out.join(format!("{}.json", e.digest));
            fs::write(&path, serde_json::to_string_pretty(&e).unwrap() + "\n").unwrap();
        }
    }
}

pub fn evaluate_options() -> EvaluateOptions {
    EvaluateOptions {
        ground_truth: None,
        unclassified_label: "OtherReaction".into(),
        matching: Default::default(),
    }
}

/// label, ontology, subsample, both runs and evaluate against `replay`.
pub fn golden_run(work: &Path, replay: &Path) -> PathBuf {
    let prepared = prepare(&golden("dataset.jsonl"), work);
    let run = work.join("run");
    fs::create_dir_all(&run).unwrap();
    let settings = replay_settings(replay);
    pipeline::run_position(&prepared.eval, &prepared.ontology, &settings, &run).unwrap();
    pipeline::run_transition(
        &prepared.eval,
        &prepared.labeled,
        &settings,
        &golden_transition_options(),
        &run,
    )
    .unwrap();
    pipeline::evaluate_run(&run, &evaluate_options(), &run).unwrap();
    run
}

pub const REPORT_FILES: [&str; 6] = [
    "report.json",
    "summary.txt",
    "position_rows.csv",
    "transition_rows.csv",
    "confusion_class.csv",
    "confusion_name.csv",
];

/// Sorted `(file name, contents)` of a directory.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

pub fn blessing() -> bool {
    std::env::var_os("ATOMSITE_BLESS").is_some()
}

/// What the instrumented backend does for one prompt.
#[derive(Debug, Clone)]
pub enum Script {
    Reply(String),
    /// Fails transiently this many times, then replies.
    Flaky(usize, String),
    Fail(BackendError),
}

/// Scripted backend that records peak concurrency and every call.
pub struct Instrumented {
    scripts: Vec<(String, Script)>,
    default: Script,
    delay: Duration,
    in_flight: AtomicUsize,
    pub peak: AtomicUsize,
    pub calls: Mutex<Vec<String>>,
    failures: Mutex<BTreeMap<String, usize>>,
}

impl Instrumented {
    pub fn new(delay: Duration) -> Instrumented {
        Instrumented {
            scripts: Vec::new(),
            default: Script::Reply("{}".into()),
            delay,
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            calls: Mutex::new(Vec::new()),
            failures: Mutex::new(BTreeMap::new()),
        }
    }

    /// Prompts containing `needle` follow `script`.
    pub fn on(mut self, needle: &str, script: Script) -> Instrumented {
        self.scripts.push((needle.to_string(), script));
        self
    }

    /// Default replies echo a digest prefix so every request gets distinct text.
    pub fn echo(mut self) -> Instrumented {
        self.default = Script::Reply(String::new());
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }
}

impl Backend for Instrumented {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.calls.lock().unwrap().push(request.digest.clone());
        thread::sleep(self.delay);
        let script = self
            .scripts
            .iter()
            .find(|(needle, _)| request.prompt.contains(needle.as_str()))
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| self.default.clone());
        let result = match script {
            Script::Reply(text) if text.is_empty() => {
                Ok(format!("reply for {}", &request.digest[..12]))
            }
            Script::Reply(text) => Ok(text),
            Script::Flaky(n, text) => {
                let mut failures = self.failures.lock().unwrap();
                let seen = failures.entry(request.digest.clone()).or_default();
                if *seen < n {
                    *seen += 1;
                    Err(BackendError::Transient("503 service unavailable".into()))
                } else {
                    Ok(text)
                }
            }
            Script::Fail(e) => Err(e),
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result.map(|text| BackendReply {
            text,
            finish_reason: "stop".into(),
            token_usage: None,
            latency_ms: Some(5),
        })
    }
}
