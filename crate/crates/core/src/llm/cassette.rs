//! JSON-lines record/replay of client calls.
//!
//! Each line holds the query fingerprint fields and the recorded response.
//! Replay serves entries per fingerprint in recorded order; once a
//! temperature-0 queue runs dry its last entry is served again, since such
//! calls are deterministic live.

use super::{ClientError, LlmClient, LlmQuery, LlmResponse, TokenLogprob};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

const TAIL: usize = 160;

/// sha256 over prompt, temperature, max_tokens and the single-token flag.
pub fn fingerprint(query: &LlmQuery) -> String {
    let mut h = Sha256::new();
    h.update(query.prompt.as_bytes());
    h.update([0]);
    h.update(format!("{:.3}", query.temperature).as_bytes());
    h.update([0]);
    h.update(query.max_tokens.to_string().as_bytes());
    h.update([0]);
    h.update([query.want_top_alternatives as u8]);
    hex::encode(h.finalize())
}

fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

fn tail(prompt: &str) -> String {
    let start = prompt.char_indices().rev().nth(TAIL - 1).map(|(i, _)| i).unwrap_or(0);
    prompt[start..].to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub prompt_sha256: String,
    pub prompt_tail: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub want_top_alternatives: bool,
    pub text: String,
    pub tokens: Vec<TokenLogprob>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<TokenLogprob>,
}

impl CassetteEntry {
    pub fn new(query: &LlmQuery, response: &LlmResponse) -> CassetteEntry {
        CassetteEntry {
            fingerprint: fingerprint(query),
            prompt_sha256: prompt_digest(&query.prompt),
            prompt_tail: tail(&query.prompt),
            temperature: query.temperature,
            max_tokens: query.max_tokens,
            want_top_alternatives: query.want_top_alternatives,
            text: response.text.clone(),
            tokens: response.tokens.clone(),
            alternatives: response.alternatives.clone(),
        }
    }

    pub fn response(&self) -> LlmResponse {
        LlmResponse::new(
            self.text.clone(),
            self.tokens.clone(),
            self.temperature,
            self.alternatives.clone(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn from_jsonl(text: &str) -> Result<Cassette, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(line).map_err(|e| format!("cassette line {}: {e}", i + 1))?);
        }
        Ok(Cassette { entries })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Cassette, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Cassette::from_jsonl(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CassetteMode {
    Record,
    Replay,
    Passthrough,
}

pub struct CassetteClient {
    mode: CassetteMode,
    inner: Option<Box<dyn LlmClient + Send>>,
    cassette: Cassette,
    index: HashMap<String, Vec<usize>>,
    cursor: HashMap<String, usize>,
}

impl CassetteClient {
    pub fn replay(cassette: Cassette) -> CassetteClient {
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in cassette.entries.iter().enumerate() {
            index.entry(e.fingerprint.clone()).or_default().push(i);
        }
        CassetteClient {
            mode: CassetteMode::Replay,
            inner: None,
            cassette,
            index,
            cursor: HashMap::new(),
        }
    }

    pub fn record(inner: Box<dyn LlmClient + Send>) -> CassetteClient {
        CassetteClient {
            mode: CassetteMode::Record,
            inner: Some(inner),
            cassette: Cassette::default(),
            index: HashMap::new(),
            cursor: HashMap::new(),
        }
    }

    pub fn passthrough(inner: Box<dyn LlmClient + Send>) -> CassetteClient {
        CassetteClient {
            mode: CassetteMode::Passthrough,
            ..CassetteClient::record(inner)
        }
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    /// Entries recorded so far (record mode) or loaded (replay mode).
    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }

    pub fn into_cassette(self) -> Cassette {
        self.cassette
    }

    fn mismatch(&self, query: &LlmQuery, fp: &str) -> ClientError {
        let digest = prompt_digest(&query.prompt);
        let same_prompt: Vec<String> = self
            .cassette
            .entries
            .iter()
            .filter(|e| e.prompt_sha256 == digest)
            .map(|e| {
                format!(
                    "temperature={:.3} max_tokens={} top={}",
                    e.temperature, e.max_tokens, e.want_top_alternatives
                )
            })
            .collect();
        let detail = if self.index.contains_key(fp) {
            format!("all {} recorded responses already served", self.index[fp].len())
        } else if same_prompt.is_empty() {
            "no recorded query has this prompt".to_string()
        } else {
            format!("same prompt recorded with [{}]", same_prompt.join("; "))
        };
        ClientError::Mismatch(format!(
            "fingerprint {fp} (temperature={:.3} max_tokens={} top={}): {detail}; prompt tail {:?}",
            query.temperature,
            query.max_tokens,
            query.want_top_alternatives,
            tail(&query.prompt)
        ))
    }
}

impl LlmClient for CassetteClient {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        match self.mode {
            CassetteMode::Replay => {
                let fp = fingerprint(query);
                let Some(slots) = self.index.get(&fp) else {
                    return Err(self.mismatch(query, &fp));
                };
                let pos = self.cursor.entry(fp.clone()).or_insert(0);
                let idx = if *pos < slots.len() {
                    *pos += 1;
                    slots[*pos - 1]
                } else if query.temperature == 0.0 {
                    *slots.last().expect("index lists are non-empty")
                } else {
                    return Err(self.mismatch(query, &fp));
                };
                Ok(self.cassette.entries[idx].response())
            }
            CassetteMode::Record | CassetteMode::Passthrough => {
                let inner = self.inner.as_mut().expect("record and passthrough wrap a client");
                let response = inner.send(query)?;
                if self.mode == CassetteMode::Record {
                    self.cassette.entries.push(CassetteEntry::new(query, &response));
                }
                Ok(response)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counter(u32);

    impl LlmClient for Counter {
        fn send(&mut self, q: &LlmQuery) -> Result<LlmResponse, ClientError> {
            self.0 += 1;
            let text = format!("r{}", self.0);
            Ok(LlmResponse::new(
                text.clone(),
                vec![TokenLogprob::new(text, -0.5)],
                q.temperature,
                vec![],
            ))
        }
    }

    #[test]
    fn record_then_replay_in_order() {
        let mut rec = CassetteClient::record(Box::new(Counter(0)));
        let q0 = LlmQuery::completion("prompt", 0.0);
        let q9 = LlmQuery::completion("prompt", 0.9);
        let recorded: Vec<String> = [&q0, &q9, &q9].iter().map(|q| rec.send(q).unwrap().text).collect();
        let cassette = Cassette::from_jsonl(&rec.into_cassette().to_jsonl()).unwrap();

        let mut replay = CassetteClient::replay(cassette);
        assert_eq!(replay.send(&q0).unwrap().text, recorded[0]);
        assert_eq!(replay.send(&q9).unwrap().text, recorded[1]);
        assert_eq!(replay.send(&q9).unwrap().text, recorded[2]);
        // temperature 0 is deterministic: reuse
        assert_eq!(replay.send(&q0).unwrap().text, recorded[0]);
        // stochastic queue exhausted
        let err = replay.send(&q9).unwrap_err();
        assert!(
            matches!(err, ClientError::Mismatch(ref m) if m.contains("already served")),
            "{err}"
        );
    }

    #[test]
    fn unknown_query_reports_diff() {
        let mut rec = CassetteClient::record(Box::new(Counter(0)));
        rec.send(&LlmQuery::completion("prompt", 0.0)).unwrap();
        let mut replay = CassetteClient::replay(rec.into_cassette());
        let err = replay
            .send(&LlmQuery::completion("prompt", 1.0))
            .unwrap_err()
            .to_string();
        assert!(err.contains("same prompt recorded with [temperature=0.000"), "{err}");
        let err = replay
            .send(&LlmQuery::completion("other", 0.0))
            .unwrap_err()
            .to_string();
        assert!(err.contains("no recorded query"), "{err}");
    }

    #[test]
    fn fingerprint_separates_fields() {
        let a = LlmQuery::completion("p", 0.0);
        let mut b = a.clone();
        b.max_tokens = 1;
        let mut c = a.clone();
        c.want_top_alternatives = true;
        let mut d = a.clone();
        d.temperature = 0.9;
        let fps = [fingerprint(&a), fingerprint(&b), fingerprint(&c), fingerprint(&d)];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(fps[i], fps[j]);
            }
        }
    }

    #[test]
    fn replayed_mean_is_recomputed_from_tokens() {
        let entry = CassetteEntry {
            fingerprint: String::new(),
            prompt_sha256: String::new(),
            prompt_tail: String::new(),
            temperature: 0.0,
            max_tokens: 64,
            want_top_alternatives: false,
            text: "a b".into(),
            tokens: vec![TokenLogprob::new("a", -0.2), TokenLogprob::new(" b", -0.4)],
            alternatives: vec![],
        };
        assert!((entry.response().mean_logprob + 0.3).abs() < 1e-12);
    }
}
