//! OpenAI-style `/v1/completions` client.

use super::{ClientError, LlmClient, LlmQuery, LlmResponse, TokenLogprob};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::Path;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: "https://api.openai.com/v1/completions".into(),
            model: "text-davinci-002".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 30.0,
        }
    }
}

impl LiveConfig {
    pub fn from_toml(text: &str) -> Result<LiveConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<LiveConfig, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        LiveConfig::from_toml(&text)
    }
}

pub struct LiveClient {
    config: LiveConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Result<LiveClient, ClientError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(LiveClient { config, api_key, http })
    }

    pub fn request_body(&self, query: &LlmQuery) -> Value {
        json!({
            "model": self.config.model,
            "prompt": query.prompt,
            "temperature": query.temperature,
            "max_tokens": query.max_tokens,
            "top_p": 1,
            "n": 1,
            "logprobs": if query.want_top_alternatives { 5 } else { 1 },
        })
    }
}

/// Extracts text, token logprobs and first-token alternatives from a
/// completions response body.
pub(crate) fn parse_completion(body: &Value, temperature: f64) -> Result<LlmResponse, ClientError> {
    let bad = |what: &str| ClientError::Protocol(format!("completion response lacks {what}"));
    let choice = body.pointer("/choices/0").ok_or_else(|| bad("choices[0]"))?;
    let text = choice.get("text").and_then(Value::as_str).ok_or_else(|| bad("text"))?;
    let logprobs = choice.get("logprobs").ok_or_else(|| bad("logprobs"))?;
    let names = logprobs
        .get("tokens")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("logprobs.tokens"))?;
    let values = logprobs
        .get("token_logprobs")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("logprobs.token_logprobs"))?;
    if names.len() != values.len() {
        return Err(ClientError::Protocol(
            "token and logprob arrays differ in length".into(),
        ));
    }
    let mut tokens = Vec::with_capacity(names.len());
    for (n, v) in names.iter().zip(values) {
        tokens.push(TokenLogprob::new(
            n.as_str().ok_or_else(|| bad("token string"))?,
            v.as_f64().ok_or_else(|| bad("numeric logprob"))?,
        ));
    }
    let mut alternatives: Vec<TokenLogprob> = logprobs
        .pointer("/top_logprobs/0")
        .and_then(Value::as_object)
        .map(|m| {
            m.iter()
                .filter_map(|(k, v)| v.as_f64().map(|lp| TokenLogprob::new(k.clone(), lp)))
                .collect()
        })
        .unwrap_or_default();
    alternatives.sort_by(|a, b| b.logprob.total_cmp(&a.logprob).then_with(|| a.token.cmp(&b.token)));
    Ok(LlmResponse::new(text, tokens, temperature, alternatives))
}

impl LlmClient for LiveClient {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        let mut req = self.http.post(&self.config.endpoint).json(&self.request_body(query));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout
            } else {
                ClientError::Protocol(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after_secs = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok());
            return Err(ClientError::RateLimited { retry_after_secs });
        }
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout
            } else {
                ClientError::Protocol(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Err(ClientError::Protocol(format!("HTTP {status}: {text}")));
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| ClientError::Protocol(e.to_string()))?;
        parse_completion(&body, query.temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves one canned HTTP response and hands back the request body.
    fn serve_once(status: &'static str, headers: &'static str, body: String) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            tx.send(String::from_utf8(buf).unwrap()).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\n{headers}connection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        });
        (format!("http://{addr}/v1/completions"), rx)
    }

    fn client(endpoint: String) -> LiveClient {
        LiveClient::new(LiveConfig {
            endpoint,
            api_key_env: "ITL_TEST_UNSET_KEY".into(),
            timeout_secs: 5.0,
            ..LiveConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn parses_tokens_and_alternatives() {
        let body = json!({"choices":[{"text":" Open","logprobs":{
            "tokens":[" Open"],"token_logprobs":[-0.6],
            "top_logprobs":[{" Open":-0.6," Pick":-1.58," Go":-2.73}]}}]});
        let (url, rx) = serve_once("200 OK", "", body.to_string());
        let r = client(url).send(&LlmQuery::top_words("prompt")).unwrap();
        assert_eq!(r.text, " Open");
        assert_eq!(
            r.alternatives.iter().map(|a| a.token.as_str()).collect::<Vec<_>>(),
            [" Open", " Pick", " Go"]
        );
        let sent: Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(sent["top_p"], 1);
        assert_eq!(sent["logprobs"], 5);
        assert_eq!(sent["max_tokens"], 1);
        assert_eq!(sent["temperature"], 0.0);
    }

    #[test]
    fn maps_rate_limit() {
        let (url, _rx) = serve_once("429 Too Many Requests", "retry-after: 7\r\n", "{}".into());
        assert_eq!(
            client(url).send(&LlmQuery::completion("p", 0.9)).unwrap_err(),
            ClientError::RateLimited {
                retry_after_secs: Some(7.0)
            }
        );
    }

    #[test]
    fn maps_malformed_body() {
        let (url, _rx) = serve_once("200 OK", "", r#"{"choices":[]}"#.into());
        assert!(matches!(
            client(url).send(&LlmQuery::completion("p", 0.0)).unwrap_err(),
            ClientError::Protocol(_)
        ));
    }

    #[test]
    fn maps_timeout() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let hold = std::thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            std::thread::sleep(Duration::from_millis(800));
            drop(s);
        });
        let mut c = LiveClient::new(LiveConfig {
            endpoint: url,
            timeout_secs: 0.2,
            api_key_env: "ITL_TEST_UNSET_KEY".into(),
            ..LiveConfig::default()
        })
        .unwrap();
        assert_eq!(
            c.send(&LlmQuery::completion("p", 0.0)).unwrap_err(),
            ClientError::Timeout
        );
        hold.join().unwrap();
    }

    #[test]
    fn config_from_toml() {
        let c = LiveConfig::from_toml("endpoint = \"http://localhost:9/v1/completions\"\ntimeout_secs = 3\n").unwrap();
        assert_eq!(c.timeout_secs, 3.0);
        assert_eq!(c.model, "text-davinci-002");
        assert!(LiveConfig::from_toml("bogus = 1").is_err());
    }
}
