use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Where and how to reach a model speaking the `{sample_id, prompt}` →
/// `{sample_id, text}` JSON contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub url: String,
    pub timeout: Duration,
    /// Extra attempts after a timeout, transport failure or 5xx status.
    pub retries: u32,
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout: Duration::from_secs(120),
            retries: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RemoteError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned status {0}")]
    Status(u16),
    #[error("bad response body: {0}")]
    Body(String),
}

impl RemoteError {
    fn retryable(&self) -> bool {
        match self {
            RemoteError::Timeout | RemoteError::Transport(_) => true,
            RemoteError::Status(code) => *code >= 500,
            RemoteError::Body(_) => false,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    sample_id: &'a str,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct Reply {
    sample_id: String,
    text: String,
}

fn is_timeout(err: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur: Option<&(dyn std::error::Error + 'static)> = Some(err);
    while let Some(e) = cur {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        cur = e.source();
    }
    false
}

fn attempt(agent: &ureq::Agent, endpoint: &Endpoint, sample_id: &str, prompt: &str) -> Result<String, RemoteError> {
    let response = agent
        .post(&endpoint.url)
        .send_json(Request { sample_id, prompt })
        .map_err(|e| match e {
            ureq::Error::Status(code, _) => RemoteError::Status(code),
            ureq::Error::Transport(t) => {
                if is_timeout(&t) {
                    RemoteError::Timeout
                } else {
                    RemoteError::Transport(t.to_string())
                }
            }
        })?;
    if response.status() != 200 {
        return Err(RemoteError::Status(response.status()));
    }
    let reply: Reply = response.into_json().map_err(|e| {
        if is_timeout(&e) {
            RemoteError::Timeout
        } else {
            RemoteError::Body(e.to_string())
        }
    })?;
    if reply.sample_id != sample_id {
        return Err(RemoteError::Body(format!(
            "reply for {:?}, expected {sample_id:?}",
            reply.sample_id
        )));
    }
    Ok(reply.text)
}

fn agent(endpoint: &Endpoint) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(endpoint.timeout).build()
}

/// Send one prompt and return the model's raw text unmodified.
pub fn query_remote_model(endpoint: &Endpoint, sample_id: &str, prompt: &str) -> Result<String, RemoteError> {
    query_with(&agent(endpoint), endpoint, sample_id, prompt)
}

fn query_with(agent: &ureq::Agent, endpoint: &Endpoint, sample_id: &str, prompt: &str) -> Result<String, RemoteError> {
    let mut tries = 0;
    loop {
        match attempt(agent, endpoint, sample_id, prompt) {
            Err(e) if e.retryable() && tries < endpoint.retries => {
                log::warn!("{sample_id}: {e}; retrying");
                tries += 1;
            }
            other => return other,
        }
    }
}

/// Query every `(sample_id, prompt)` pair with at most `max_in_flight`
/// concurrent requests. Results come back in input order.
pub fn query_batch(
    endpoint: &Endpoint,
    requests: &[(String, String)],
    max_in_flight: usize,
) -> Vec<Result<String, RemoteError>> {
    let agent = agent(endpoint);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, RemoteError>>>> =
        Mutex::new(vec![None; requests.len()]);
    let workers = max_in_flight.max(1).min(requests.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((id, prompt)) = requests.get(i) else { break };
                let r = query_with(&agent, endpoint, id, prompt);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|r| r.expect("every index was visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serve `n` connections, replying with the given status and an echo body.
    fn serve(n: usize, status: u16) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for stream in listener.incoming().take(n) {
                let mut stream = stream.unwrap();
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
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let reply = serde_json::json!({"sample_id": req["sample_id"], "text": format!("echo {}", req["prompt"].as_str().unwrap())}).to_string();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                )
                .unwrap();
            }
        });
        format!("http://{addr}/")
    }

    #[test]
    fn round_trip() {
        let url = serve(1, 200);
        assert_eq!(query_remote_model(&Endpoint::new(url), "s1", "hi").unwrap(), "echo hi");
    }

    #[test]
    fn server_error_is_retried_then_reported() {
        let url = serve(2, 503);
        let err = query_remote_model(&Endpoint::new(url), "s1", "hi").unwrap_err();
        assert_eq!(err, RemoteError::Status(503));
    }

    #[test]
    fn unreachable_is_transport_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let ep = Endpoint { retries: 0, ..Endpoint::new(url) };
        assert!(matches!(query_remote_model(&ep, "s", "p"), Err(RemoteError::Transport(_))));
    }

    #[test]
    fn batch_preserves_order() {
        let url = serve(5, 200);
        let reqs: Vec<(String, String)> = (0..5).map(|i| (format!("s{i}"), format!("p{i}"))).collect();
        let out = query_batch(&Endpoint::new(url), &reqs, 2);
        for (i, r) in out.iter().enumerate() {
            assert_eq!(r.as_ref().unwrap(), &format!("echo p{i}"));
        }
    }
}
