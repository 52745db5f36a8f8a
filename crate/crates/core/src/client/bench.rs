use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sha256_hex, ChatProvider, ChatRequest, ClientError, ModelEndpoint, PromptMode, ProviderError};
use crate::eval::{Payload, PredictionRecord};
use crate::qa::{QuestionInstance, Task};
use crate::seed_path;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub mode: PromptMode,
    pub seed: u64,
    /// Directory the questions' image paths are relative to.
    pub images_root: PathBuf,
    pub max_concurrency: usize,
    pub max_retries: u32,
    /// First retry delay; doubles per attempt, plus up to 25% seeded jitter.
    pub backoff_base: Duration,
    /// JSON Lines log of every exchange; also the resume source.
    pub transcript: Option<PathBuf>,
    /// Reuse completed transcript entries whose prompt digest still matches.
    pub resume: bool,
}

impl BenchOptions {
    pub fn new(mode: PromptMode, seed: u64, images_root: impl Into<PathBuf>) -> BenchOptions {
        BenchOptions {
            mode,
            seed,
            images_root: images_root.into(),
            max_concurrency: 4,
            max_retries: 4,
            backoff_base: Duration::from_secs(1),
            transcript: None,
            resume: false,
        }
    }

    pub fn from_endpoint(e: &ModelEndpoint, mode: PromptMode, seed: u64, images_root: impl Into<PathBuf>) -> BenchOptions {
        BenchOptions { max_concurrency: e.max_concurrency, max_retries: e.max_retries, ..BenchOptions::new(mode, seed, images_root) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub qid: String,
    pub prompt_digest: String,
    /// `None` when every attempt failed.
    pub raw_response: Option<String>,
    pub latency_ms: u64,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    /// One record per question, in qid order.
    pub predictions: Vec<PredictionRecord>,
    /// Same order as `predictions`.
    pub transcript: Vec<TranscriptEntry>,
    /// Questions answered from a previous transcript.
    pub resumed: usize,
}

#[derive(Debug, Clone)]
pub struct Prompt {
    pub system: String,
    pub text: String,
    pub images: Vec<Vec<u8>>,
}

impl Prompt {
    pub fn digest(&self, model: &str) -> String {
        let mut parts: Vec<&[u8]> = vec![model.as_bytes(), self.system.as_bytes(), self.text.as_bytes()];
        parts.extend(self.images.iter().map(Vec::as_slice));
        sha256_hex(&parts)
    }
}

fn instruction(task: Task, mode: PromptMode) -> String {
    let contract = match task {
        Task::Mcq => "End with one line of the form `ANSWER: <letter>` using the option letter.",
        Task::Counting => "End with one line of the form `ANSWER: <integer>`.",
        Task::Detection => {
            "End with one line of the form `BOXES: <view_id> <x1> <y1> <x2> <y2>; ...` giving one pixel box \
             (top-left, bottom-right) per image in which the object is visible, or `BOXES: none`."
        }
    };
    let style = match mode {
        PromptMode::Thinking => "Think through the problem before answering.",
        PromptMode::Direct => "Do not explain or show any reasoning. Output only the final line.",
    };
    format!(
        "You are shown several images of the same static scene taken from different viewpoints. \
         Objects keep their identity across images. {style} {contract}"
    )
}

/// Question prompt with every cited image attached in citation order.
pub fn build_prompt(q: &QuestionInstance, mode: PromptMode, images_root: &Path) -> Result<Prompt, ClientError> {
    let mut images = Vec::with_capacity(q.images.len());
    for rel in &q.images {
        let p = images_root.join(rel);
        images.push(std::fs::read(&p).map_err(|e| ClientError::Io { path: p.display().to_string(), message: e.to_string() })?);
    }
    let [w, h] = q.image_size;
    let mut text = String::new();
    for (i, v) in q.view_ids.iter().enumerate() {
        text.push_str(&format!("Image {} is view `{v}` ({w}×{h} pixels).\n", i + 1));
    }
    text.push('\n');
    text.push_str(&q.text);
    text.push('\n');
    if let Some(opts) = &q.options {
        for (i, o) in opts.iter().enumerate() {
            text.push_str(&format!("{}. {o}\n", (b'A' + i as u8) as char));
        }
    }
    Ok(Prompt { system: instruction(q.task, mode), text, images })
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>, ClientError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| ClientError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| ClientError::Io { path: path.display().to_string(), message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(e) => out.push(e),
            // a run killed mid-write leaves a torn last line
            Err(e) => log::warn!("{}:{}: skipping unreadable transcript line: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn backoff(opts: &BenchOptions, qid: &str, attempt: u32) -> Duration {
    let base = opts.backoff_base.mul_f64(2f64.powi(attempt as i32 - 1));
    let j: f64 = crate::seed::rng(opts.seed, seed_path!["backoff", qid, attempt]).gen_range(0.0..0.25);
    base.mul_f64(1.0 + j)
}

enum Outcome {
    Done(TranscriptEntry),
    AuthFailed,
}

fn ask(provider: &dyn ChatProvider, req: &ChatRequest, digest: String, opts: &BenchOptions) -> Outcome {
    let start = Instant::now();
    let mut attempts = 0;
    let mut last_err = None;
    while attempts <= opts.max_retries {
        attempts += 1;
        match provider.complete(req) {
            Ok(text) => {
                return Outcome::Done(TranscriptEntry {
                    qid: req.tag.clone(),
                    prompt_digest: digest,
                    raw_response: Some(text),
                    latency_ms: start.elapsed().as_millis() as u64,
                    attempts,
                    error: None,
                })
            }
            Err(ProviderError::Auth { .. }) => return Outcome::AuthFailed,
            Err(e @ ProviderError::Transient { .. }) => {
                log::debug!("{}: attempt {attempts} failed: {e}", req.tag);
                last_err = Some(e.to_string());
                if attempts <= opts.max_retries {
                    std::thread::sleep(backoff(opts, &req.tag, attempts));
                }
            }
            Err(e) => {
                last_err = Some(e.to_string());
                break;
            }
        }
    }
    log::warn!("{}: no prediction after {attempts} attempts", req.tag);
    Outcome::Done(TranscriptEntry {
        qid: req.tag.clone(),
        prompt_digest: digest,
        raw_response: None,
        latency_ms: start.elapsed().as_millis() as u64,
        attempts,
        error: last_err,
    })
}

fn append(file: &mut Option<std::io::BufWriter<std::fs::File>>, e: &TranscriptEntry) {
    if let Some(f) = file {
        if writeln!(f, "{}", crate::canonical::to_string(e)).and_then(|_| f.flush()).is_err() {
            log::warn!("transcript write failed for {}", e.qid);
        }
    }
}

/// Asks the provider every question with at most `max_concurrency` requests
/// in flight. Output order is qid order no matter how requests complete.
pub fn run_benchmark(
    dataset: &[QuestionInstance],
    provider: &dyn ChatProvider,
    model_name: &str,
    opts: &BenchOptions,
) -> Result<BenchOutput, ClientError> {
    if opts.max_concurrency == 0 {
        return Err(ClientError::Config("max_concurrency must be ≥ 1".into()));
    }
    let mut order: Vec<&QuestionInstance> = dataset.iter().collect();
    order.sort_by(|a, b| a.qid.cmp(&b.qid));

    let mut prompts = Vec::with_capacity(order.len());
    for q in &order {
        let p = build_prompt(q, opts.mode, &opts.images_root)?;
        let d = p.digest(model_name);
        prompts.push((p, d));
    }

    let previous: HashMap<String, TranscriptEntry> = match (&opts.transcript, opts.resume) {
        (Some(p), true) if p.exists() => read_transcript(p)?
            .into_iter()
            .filter(|e| e.raw_response.is_some())
            .map(|e| (e.qid.clone(), e))
            .collect(),
        _ => HashMap::new(),
    };
    let mut slots: Vec<Option<TranscriptEntry>> = order
        .iter()
        .zip(&prompts)
        .map(|(q, (_, d))| previous.get(&q.qid).filter(|e| &e.prompt_digest == d).cloned())
        .collect();
    let resumed = slots.iter().filter(|s| s.is_some()).count();

    let mut file = match &opts.transcript {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| ClientError::Io { path: p.display().to_string(), message: e.to_string() })?;
            Some(std::io::BufWriter::new(f))
        }
        None => None,
    };
    for e in slots.iter().flatten() {
        append(&mut file, e);
    }

    let pending: Vec<usize> = (0..order.len()).filter(|&i| slots[i].is_none()).collect();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Outcome)>();
    std::thread::scope(|s| {
        for _ in 0..opts.max_concurrency.min(pending.len()) {
            let tx = tx.clone();
            let (next, abort, pending, order, prompts) = (&next, &abort, &pending, &order, &prompts);
            s.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(k) else { break };
                let (p, d) = &prompts[i];
                let req = ChatRequest {
                    tag: order[i].qid.clone(),
                    system: p.system.clone(),
                    text: p.text.clone(),
                    images: p.images.clone(),
                    seed: opts.seed,
                };
                let out = ask(provider, &req, d.clone(), opts);
                if matches!(out, Outcome::AuthFailed) {
                    abort.store(true, Ordering::SeqCst);
                }
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // single owner of the transcript file and the result slots
        for (i, out) in rx {
            if let Outcome::Done(e) = out {
                append(&mut file, &e);
                slots[i] = Some(e);
            }
        }
    });
    if abort.load(Ordering::SeqCst) {
        return Err(ClientError::Auth { endpoint: provider.name().to_string() });
    }

    let transcript: Vec<TranscriptEntry> = slots.into_iter().map(|s| s.expect("every question answered")).collect();
    if let (Some(p), Some(mut f)) = (&opts.transcript, file.take()) {
        let _ = f.flush();
        drop(f);
        // rewrite in qid order now that the run is complete
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| ClientError::Io { path: p.display().to_string(), message: e.to_string() })?,
        );
        for e in &transcript {
            writeln!(w, "{}", crate::canonical::to_string(e))
                .map_err(|e| ClientError::Io { path: p.display().to_string(), message: e.to_string() })?;
        }
        w.flush().map_err(|e| ClientError::Io { path: p.display().to_string(), message: e.to_string() })?;
    }
    let predictions = transcript
        .iter()
        .map(|e| PredictionRecord { qid: e.qid.clone(), answer: e.raw_response.clone().map(Payload::Text) })
        .collect();
    Ok(BenchOutput { predictions, transcript, resumed })
}
