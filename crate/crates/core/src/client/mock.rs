use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ClientError, ProviderError};
use crate::qa::{AnswerValue, QuestionInstance, Task};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    /// Reply with the ground truth in the requested answer format.
    #[default]
    Echo,
    /// Reply with malformed or evasive text.
    Garbage,
    /// Only the `replies` table; unknown tags are a permanent failure.
    Scripted,
}

/// Injected failure: the `attempt`-th request (1-based) for `tag` fails with
/// `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockFault {
    pub tag: String,
    #[serde(default = "one")]
    pub attempt: u32,
    pub status: u16,
}

fn one() -> u32 {
    1
}

/// On-disk description of a mock endpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    #[serde(default)]
    pub mode: MockMode,
    /// Fixed replies by request tag; checked before the mode. Stage tags
    /// are `osd:stage1`, `osd:stage2`, and `osd:stage3:<asset_id>` with
    /// `osd:stage3` as the fallback for every asset.
    #[serde(default)]
    pub replies: BTreeMap<String, String>,
    #[serde(default)]
    pub faults: Vec<MockFault>,
    /// Artificial per-tag delay, for exercising out-of-order completion.
    #[serde(default)]
    pub latency_ms: BTreeMap<String, u64>,
}

impl MockFixture {
    pub fn load(path: impl AsRef<Path>) -> Result<MockFixture, ClientError> {
        let path = path.as_ref();
        let io = |m: String| ClientError::Io { path: path.display().to_string(), message: m };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))
    }
}

const GARBAGE: [&str; 9] = [
    "",
    "I am not sure.",
    "ANSWER: Q",
    "ANSWER: -1",
    "BOXES: nowhere",
    "BOXES: image 1 300 300 100 100",
    "The answer is probably the second one.",
    "ANSWER: 3.5 chairs",
    "{\"answer\": null}",
];

pub struct MockProvider {
    name: String,
    fixture: MockFixture,
    echo: HashMap<String, String>,
    attempts: Mutex<HashMap<String, u32>>,
}

fn letter(i: u64) -> char {
    (b'A' + i as u8) as char
}

/// Ground truth rendered in the answer contract the prompts ask for.
pub(crate) fn echo_reply(q: &QuestionInstance) -> String {
    match (&q.answer, q.task) {
        (AnswerValue::Int(i), Task::Mcq) => format!("ANSWER: {}", letter(*i)),
        (AnswerValue::Int(n), _) => format!("ANSWER: {n}"),
        (AnswerValue::Boxes(b), _) => {
            let parts: Vec<String> = b
                .iter()
                .map(|g| format!("{} {} {} {} {}", g.view_id, g.bbox.x_min, g.bbox.y_min, g.bbox.x_max, g.bbox.y_max))
                .collect();
            format!("BOXES: {}", parts.join("; "))
        }
    }
}

impl MockProvider {
    pub fn new(fixture: MockFixture) -> MockProvider {
        MockProvider { name: "mock".into(), fixture, echo: HashMap::new(), attempts: Mutex::new(HashMap::new()) }
    }

    /// Echo mode needs the dataset to know the answers.
    pub fn with_dataset(mut self, dataset: &[QuestionInstance]) -> MockProvider {
        self.echo = dataset.iter().map(|q| (q.qid.clone(), echo_reply(q))).collect();
        self
    }

    pub fn echo(dataset: &[QuestionInstance]) -> MockProvider {
        MockProvider::new(MockFixture::default()).with_dataset(dataset)
    }

    pub fn garbage() -> MockProvider {
        MockProvider::new(MockFixture { mode: MockMode::Garbage, ..MockFixture::default() })
    }

    /// Total requests seen, across all tags and attempts.
    pub fn requests(&self) -> u32 {
        self.attempts.lock().unwrap().values().sum()
    }

    fn scripted(&self, tag: &str) -> Option<&String> {
        self.fixture.replies.get(tag).or_else(|| {
            // osd:stage3:<asset> falls back to osd:stage3
            tag.rsplit_once(':').filter(|(p, _)| p.starts_with("osd:stage3")).and_then(|(p, _)| self.fixture.replies.get(p))
        })
    }
}

impl ChatProvider for MockProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let attempt = {
            let mut a = self.attempts.lock().unwrap();
            let n = a.entry(req.tag.clone()).or_insert(0);
            *n += 1;
            *n
        };
        if let Some(ms) = self.fixture.latency_ms.get(&req.tag) {
            std::thread::sleep(Duration::from_millis(*ms));
        }
        if let Some(f) = self.fixture.faults.iter().find(|f| f.tag == req.tag && f.attempt == attempt) {
            return Err(ProviderError::from_status(f.status, format!("injected {}", f.status)));
        }
        if let Some(r) = self.scripted(&req.tag) {
            return Ok(r.clone());
        }
        match self.fixture.mode {
            MockMode::Echo => self.echo.get(&req.tag).cloned().ok_or_else(|| ProviderError::Permanent {
                status: Some(404),
                message: format!("no echo answer for `{}`", req.tag),
            }),
            MockMode::Garbage => {
                let i = crate::seed::fnv1a(req.tag.as_bytes()) as usize % GARBAGE.len();
                Ok(GARBAGE[i].to_string())
            }
            MockMode::Scripted => {
                Err(ProviderError::Permanent { status: Some(404), message: format!("no scripted reply for `{}`", req.tag) })
            }
        }
    }
}
