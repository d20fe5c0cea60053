#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use cfplan_core::scenario::{write_scenario, Scenario};

pub fn cfplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfplan"))
        .current_dir(dir)
        .args(["--set", "scenario_dir=scenarios", "--set", "output_dir=out"])
        .args(args)
        .output()
        .expect("spawn cfplan")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn write_scenes(dir: &Path, scenes: &[Scenario]) {
    let d = dir.join("scenarios");
    std::fs::create_dir_all(&d).unwrap();
    for s in scenes {
        std::fs::write(d.join(format!("{}.json", s.scene_id)), write_scenario(s)).unwrap();
    }
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// A model endpoint answering from a canned `sample_id -> text` table.
/// Requests for ids in `stall` are held open for `stall_for` before any
/// reply, so a client with a shorter timeout sees a timeout.
pub struct MockEndpoint {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl MockEndpoint {
    pub fn start(canned: BTreeMap<String, String>, stall: BTreeSet<String>, stall_for: Duration) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let canned = Arc::new(canned);
        let stall = Arc::new(stall);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (canned, stall, counter) = (canned.clone(), stall.clone(), counter.clone());
                std::thread::spawn(move || {
                    counter.fetch_add(1, Ordering::SeqCst);
                    let _ = handle(stream, &canned, &stall, stall_for);
                });
            }
        });
        Self { url, hits }
    }
}

fn handle(
    mut stream: TcpStream,
    canned: &BTreeMap<String, String>,
    stall: &BTreeSet<String>,
    stall_for: Duration,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut len = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body)?;
    let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let id = req["sample_id"].as_str().unwrap_or_default().to_string();
    if stall.contains(&id) {
        std::thread::sleep(stall_for);
    }
    let (status, reply) = match canned.get(&id) {
        Some(text) => (200, serde_json::json!({ "sample_id": id, "text": text }).to_string()),
        None => (404, "{}".to_string()),
    };
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    )
}
