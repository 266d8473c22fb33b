//! Completion providers with record/replay.

use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Which pipeline step issued a call. Tags key replay lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Interface,
    InterfaceRepair,
    /// First application round, routed to the stronger (vision) provider.
    ApplicationsPrimary,
    Applications,
    Implementations,
    ImplementationsRetry,
    Sampler,
    SamplerFeedback,
    SamplerRetry,
    Edit,
    EditRepair,
}

impl Stage {
    pub fn tag(self) -> &'static str {
        match self {
            Stage::Interface => "interface",
            Stage::InterfaceRepair => "interface_repair",
            Stage::ApplicationsPrimary => "applications_primary",
            Stage::Applications => "applications",
            Stage::Implementations => "implementations",
            Stage::ImplementationsRetry => "implementations_retry",
            Stage::Sampler => "sampler",
            Stage::SamplerFeedback => "sampler_feedback",
            Stage::SamplerRetry => "sampler_retry",
            Stage::Edit => "edit",
            Stage::EditRepair => "edit_repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub stage: Stage,
    pub prompt: String,
    /// Images for vision-capable providers; ignored by the others and not
    /// part of the replay key.
    pub images: Vec<PathBuf>,
}

impl Request {
    pub fn text(stage: Stage, prompt: String) -> Self {
        Request {
            stage,
            prompt,
            images: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no recorded response for stage `{stage}` prompt {hash}")]
    MissingFixture { stage: String, hash: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("transcript: {0}")]
    Transcript(String),
}

pub trait Provider: Send + Sync {
    fn complete(&self, req: &Request) -> Result<String, ProviderError>;

    fn vision(&self) -> bool {
        false
    }

    /// True when calls leave the process (affects HTTP status mapping).
    fn is_live(&self) -> bool {
        false
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        (**self).complete(req)
    }
    fn vision(&self) -> bool {
        (**self).vision()
    }
    fn is_live(&self) -> bool {
        (**self).is_live()
    }
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        (**self).complete(req)
    }
    fn vision(&self) -> bool {
        (**self).vision()
    }
    fn is_live(&self) -> bool {
        (**self).is_live()
    }
}

/// Whitespace runs collapse to one space; leading/trailing whitespace is dropped.
pub fn canonical_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(canonical_prompt(prompt).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub stage: Stage,
    pub prompt_hash: String,
    pub prompt: String,
    pub response: String,
    /// Unix milliseconds.
    pub timestamp: u64,
}

/// Append-only call log, optionally mirrored to a JSON-lines file.
#[derive(Debug, Default)]
pub struct Transcript {
    inner: Mutex<TranscriptInner>,
}

#[derive(Debug, Default)]
struct TranscriptInner {
    records: Vec<TranscriptRecord>,
    sink: Option<File>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Log to `path`, truncating any previous content.
    pub fn to_file(path: &Path) -> Result<Self, ProviderError> {
        let file = File::create(path)
            .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))?;
        Ok(Transcript {
            inner: Mutex::new(TranscriptInner {
                records: Vec::new(),
                sink: Some(file),
            }),
        })
    }

    /// Continue an existing log at `path`.
    pub fn append_to(path: &Path) -> Result<Self, ProviderError> {
        let records = if path.exists() {
            read_transcript(path)?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))?;
        Ok(Transcript {
            inner: Mutex::new(TranscriptInner {
                records,
                sink: Some(file),
            }),
        })
    }

    pub fn push(&self, rec: TranscriptRecord) -> Result<(), ProviderError> {
        let mut g = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = g.sink.as_mut() {
            let line = serde_json::to_string(&rec)
                .map_err(|e| ProviderError::Transcript(e.to_string()))?;
            writeln!(f, "{line}")
                .and_then(|_| f.flush())
                .map_err(|e| ProviderError::Transcript(e.to_string()))?;
        }
        g.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .records
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .records
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, ProviderError> {
    let file = File::open(path)
        .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ProviderError::Transcript(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| ProviderError::Transcript(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_transcript(path: &Path, records: &[TranscriptRecord]) -> Result<(), ProviderError> {
    let mut text = String::new();
    for r in records {
        text.push_str(
            &serde_json::to_string(r).map_err(|e| ProviderError::Transcript(e.to_string()))?,
        );
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Answers from recorded transcripts. Repeated identical calls are served in
/// recording order; asking more often than recorded is an error.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    table: Mutex<HashMap<(Stage, String), VecDeque<String>>>,
    vision: bool,
}

impl ReplayProvider {
    pub fn from_records(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut table: HashMap<(Stage, String), VecDeque<String>> = HashMap::new();
        for r in records {
            table
                .entry((r.stage, r.prompt_hash))
                .or_default()
                .push_back(r.response);
        }
        ReplayProvider {
            table: Mutex::new(table),
            vision: false,
        }
    }

    /// Load every `*.jsonl` file under `dir` (or the single file `dir`), in
    /// file-name order.
    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let mut files = Vec::new();
        if path.is_dir() {
            let entries = std::fs::read_dir(path)
                .map_err(|e| ProviderError::Transcript(format!("{}: {e}", path.display())))?;
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "jsonl") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut records = Vec::new();
        for f in files {
            records.extend(read_transcript(&f)?);
        }
        Ok(Self::from_records(records))
    }

    /// Claim vision capability so replays follow the same code path as the
    /// recording run.
    pub fn with_vision(mut self, vision: bool) -> Self {
        self.vision = vision;
        self
    }

    pub fn remaining(&self) -> usize {
        self.table
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .map(|q| q.len())
            .sum()
    }
}

impl Provider for ReplayProvider {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        let hash = prompt_hash(&req.prompt);
        let mut table = self.table.lock().unwrap_or_else(|e| e.into_inner());
        table
            .get_mut(&(req.stage, hash.clone()))
            .and_then(|q| q.pop_front())
            .ok_or_else(|| ProviderError::MissingFixture {
                stage: req.stage.tag().to_string(),
                hash,
            })
    }

    fn vision(&self) -> bool {
        self.vision
    }
}

/// Logs every call of an inner provider before handing the response back.
pub struct RecordingProvider<P> {
    inner: P,
    transcript: std::sync::Arc<Transcript>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, transcript: std::sync::Arc<Transcript>) -> Self {
        RecordingProvider { inner, transcript }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        let response = self.inner.complete(req)?;
        self.transcript.push(TranscriptRecord {
            stage: req.stage,
            prompt_hash: prompt_hash(&req.prompt),
            prompt: req.prompt.clone(),
            response: response.clone(),
            timestamp: now_ms(),
        })?;
        Ok(response)
    }

    fn vision(&self) -> bool {
        self.inner.vision()
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

/// Chat-completion endpoint configured from `SHAPEKIT_<NAME>_URL`,
/// `SHAPEKIT_<NAME>_API_KEY`, `SHAPEKIT_<NAME>_MODEL` and optionally
/// `SHAPEKIT_<NAME>_VISION=1`.
#[derive(Debug, Clone)]
pub struct LiveProvider {
    pub name: String,
    pub url: String,
    pub model: String,
    api_key: Option<String>,
    vision: bool,
    timeout: Duration,
}

impl LiveProvider {
    pub fn from_env(name: &str) -> Result<Self, ProviderError> {
        let prefix = format!("SHAPEKIT_{}", name.to_ascii_uppercase().replace('-', "_"));
        let var = |suffix: &str| {
            std::env::var(format!("{prefix}_{suffix}"))
                .ok()
                .filter(|v| !v.is_empty())
        };
        let url =
            var("URL").ok_or_else(|| ProviderError::Config(format!("{prefix}_URL is not set")))?;
        let model = var("MODEL")
            .ok_or_else(|| ProviderError::Config(format!("{prefix}_MODEL is not set")))?;
        Ok(LiveProvider {
            name: name.to_string(),
            url,
            model,
            api_key: var("API_KEY"),
            vision: var("VISION").is_some_and(|v| v == "1" || v.eq_ignore_ascii_case("true")),
            timeout: Duration::from_secs(300),
        })
    }

    fn body(&self, req: &Request) -> Result<serde_json::Value, ProviderError> {
        let content = if self.vision && !req.images.is_empty() {
            let mut parts = vec![serde_json::json!({"type": "text", "text": req.prompt})];
            for img in &req.images {
                let bytes = std::fs::read(img)
                    .map_err(|e| ProviderError::Config(format!("{}: {e}", img.display())))?;
                let mime = match img.extension().and_then(|x| x.to_str()) {
                    Some("jpg") | Some("jpeg") => "image/jpeg",
                    _ => "image/png",
                };
                let data = base64::engine::general_purpose::STANDARD.encode(bytes);
                parts.push(serde_json::json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:{mime};base64,{data}")}
                }));
            }
            serde_json::Value::Array(parts)
        } else {
            serde_json::Value::String(req.prompt.clone())
        };
        Ok(serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
        }))
    }
}

impl Provider for LiveProvider {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut call = agent
            .post(&self.url)
            .header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {k}"));
        }
        let body = self.body(req)?;
        let mut resp = call
            .send_json(&body)
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Http { status, body: text });
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))
    }

    fn vision(&self) -> bool {
        self.vision
    }

    fn is_live(&self) -> bool {
        true
    }
}

/// Provider selection: `replay:<dir-or-file>` or `live:<endpoint-name>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Replay(PathBuf),
    Live(String),
}

impl std::str::FromStr for ProviderSpec {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("replay", p)) if !p.is_empty() => Ok(ProviderSpec::Replay(PathBuf::from(p))),
            Some(("live", n)) if !n.is_empty() => Ok(ProviderSpec::Live(n.to_string())),
            _ => Err(ProviderError::Config(format!(
                "provider must be `replay:<path>` or `live:<name>`, got `{s}`"
            ))),
        }
    }
}

impl ProviderSpec {
    /// Build the provider. Live providers are always wrapped in a recorder;
    /// `record_to` names the transcript file (required for live mode).
    pub fn build(&self, record_to: Option<&Path>) -> Result<Box<dyn Provider>, ProviderError> {
        match self {
            ProviderSpec::Replay(p) => Ok(Box::new(ReplayProvider::from_path(p)?)),
            ProviderSpec::Live(name) => {
                let path = record_to.ok_or_else(|| {
                    ProviderError::Config("live providers need a transcript path".into())
                })?;
                let t = std::sync::Arc::new(Transcript::append_to(path)?);
                Ok(Box::new(RecordingProvider::new(
                    LiveProvider::from_env(name)?,
                    t,
                )))
            }
        }
    }
}
