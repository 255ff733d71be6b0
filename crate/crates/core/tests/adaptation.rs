use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use gat_core::adaptation::{
    adapt_pool, build_agnews_prompt, build_nlv_prompt, build_qa_prompt, fallback_statement, ChatClient, McqaSample,
    NlvScorer, Reformatter, RemoteReformatter, Strategy,
};
use gat_core::data_io::{load_pool, NlvProvider, PromptCache};
use gat_core::{Error, ProbVector};
use serde_json::{json, Value};

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn fixture_samples() -> Vec<McqaSample> {
    let path = format!("{}/tests/golden/mcqa_pool.jsonl", env!("CARGO_MANIFEST_DIR"));
    load_pool(path).unwrap().iter().map(|r| McqaSample::from_record(r).unwrap()).collect()
}

#[test]
fn prompts_match_golden_files() {
    assert_eq!(build_nlv_prompt("C", "S"), golden("nlv_prompt.txt"));
    let opts: Vec<String> = ["yes", "no", "maybe"].iter().map(|s| s.to_string()).collect();
    assert_eq!(
        build_qa_prompt("Aspirin is an analgesic and antipyretic.", "Does aspirin reduce fever?", &opts),
        golden("qa_prompt.txt")
    );
    assert_eq!(build_agnews_prompt("Stocks rally as inflation cools"), golden("agnews_prompt.txt"));
}

fn seeded_provider(dir: &std::path::Path, skip: Option<&str>) -> NlvProvider {
    let p = NlvProvider::cache_only(PromptCache::open(dir).unwrap(), "main");
    for s in fixture_samples() {
        if Some(s.id.as_str()) == skip {
            continue;
        }
        let st = fallback_statement(&s.question, &s.options[1]);
        p.seed_entry(&s.context, &st, vec![0.8, 0.2]).unwrap();
    }
    p
}

#[test]
fn runner_up_pool_with_cached_scores() {
    let dir = tempfile::tempdir().unwrap();
    let provider = seeded_provider(dir.path(), None);
    let samples = fixture_samples();
    let out = adapt_pool(&samples, Strategy::RunnerUp, &provider, None, None);
    assert!(out.excluded.is_empty());
    assert_eq!(out.records.len(), 3);
    for r in &out.records {
        assert_eq!(r.options, vec!["true", "false"]);
        assert_eq!(r.main_probs, vec![0.8, 0.2]);
    }
    let labels: Vec<bool> = out.statements.iter().map(|s| s.nlv_gold).collect();
    assert_eq!(labels, vec![false, true, true]);
    assert_eq!(out.records[0].gold_index, 1);
    assert_eq!(out.records[1].gold_index, 0);
    assert_eq!(out.records[0].question, "The answer to the question \"Does aspirin reduce fever?\" is: no");
    assert_eq!(out.records[2].metadata["qa_correct"], "false");

    let again = adapt_pool(&samples, Strategy::RunnerUp, &provider, None, None);
    assert_eq!(again.records, out.records);
}

#[test]
fn unscorable_samples_are_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let provider = seeded_provider(dir.path(), Some("q2"));
    let out = adapt_pool(&fixture_samples(), Strategy::RunnerUp, &provider, None, None);
    assert_eq!(out.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["q1", "q3"]);
    assert_eq!(out.excluded.len(), 1);
    assert_eq!(out.excluded[0].id, "q2");
    assert!(out.excluded[0].reason.contains("cache miss"));
}

struct Fixed(Vec<f64>);
impl NlvScorer for Fixed {
    fn nlv_dist(&self, _: &str, _: &str) -> gat_core::Result<ProbVector> {
        ProbVector::normalize(&self.0)
    }
}

struct Echo;
impl Reformatter for Echo {
    fn reformat(&self, q: &str, o: &str) -> gat_core::Result<String> {
        Ok(format!("{q}|{o}"))
    }
}

#[test]
fn strategies_and_surrogate() {
    let rec = serde_json::from_value(json!({
        "id": "x", "question": "Q?", "options": ["a", "b"], "gold_index": 0, "main_probs": [0.9, 0.1]
    }))
    .unwrap();
    let s = vec![McqaSample::from_record(&rec).unwrap()];
    let most = adapt_pool(&s, Strategy::MostConf, &Fixed(vec![3.0, 1.0]), Some(&Fixed(vec![0.4, 0.6])), Some(&Echo));
    assert!(most.statements[0].nlv_gold);
    assert_eq!(most.statements[0].statement, "Q?|a");
    assert_eq!(most.records[0].main_probs, vec![0.75, 0.25]);
    assert_eq!(most.records[0].surrogate_probs, Some(vec![0.4, 0.6]));
    let runner = adapt_pool(&s, Strategy::RunnerUp, &Fixed(vec![0.5, 0.5]), None, None);
    assert!(!runner.statements[0].nlv_gold);
}

// ---------------------------------------------------------------------------
// Local stand-in for a chat-completion endpoint.
// ---------------------------------------------------------------------------

struct Stub {
    url: String,
    requests: Arc<Mutex<Vec<(String, Value)>>>,
}

/// Serves `responses` in order (the last one repeats), one per connection.
fn stub(responses: Vec<(u16, Value)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    std::thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push((headers, serde_json::from_slice(&body).unwrap_or(Value::Null)));
            let (status, payload) = &responses[i.min(responses.len() - 1)];
            let text = payload.to_string();
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    Stub { url, requests }
}

fn letter_response(a: f64, b: f64) -> Value {
    json!({"choices": [{
        "message": {"role": "assistant", "content": "A"},
        "logprobs": {"content": [{"token": "A", "logprob": a.ln(), "top_logprobs": [
            {"token": "A", "logprob": a.ln()},
            {"token": "B", "logprob": b.ln()}
        ]}]}
    }]})
}

fn client(url: &str) -> ChatClient {
    ChatClient::new(url, Some("secret".into()), "main-model")
        .unwrap()
        .with_retries(3, Duration::from_millis(1))
}

#[test]
fn remote_scores_are_cached_once() {
    let server = stub(vec![(200, letter_response(0.7, 0.3))]);
    let dir = tempfile::tempdir().unwrap();
    let provider = NlvProvider::remote(PromptCache::open(dir.path()).unwrap(), client(&server.url));
    let d = provider.nlv_dist("ctx", "stmt").unwrap();
    assert!((d.probs()[0] - 0.7).abs() < 1e-12 && (d.probs()[1] - 0.3).abs() < 1e-12);
    let again = provider.nlv_dist("ctx", "stmt").unwrap();
    assert_eq!(again, d);

    let reqs = server.requests.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    let (headers, body) = &reqs[0];
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer secret"));
    assert_eq!(body["model"], "main-model");
    assert_eq!(body["messages"][0]["content"], build_nlv_prompt("ctx", "stmt"));
    assert_eq!(body["logprobs"], true);
    drop(reqs);

    // A cache-only provider over the same directory now hits.
    let offline = NlvProvider::cache_only(PromptCache::open(dir.path()).unwrap(), "main-model");
    assert_eq!(offline.nlv_dist("ctx", "stmt").unwrap(), d);
}

#[test]
fn server_errors_are_retried() {
    let server = stub(vec![(500, json!({})), (503, json!({})), (200, letter_response(0.2, 0.8))]);
    let (masses, _) = client(&server.url)
        .label_masses("p", &gat_core::adaptation::NLV_LABELS)
        .unwrap();
    assert!((masses[1] - 0.8).abs() < 1e-12);
    assert_eq!(server.requests.lock().unwrap().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = stub(vec![(500, json!({}))]);
    let err = client(&server.url).label_masses("p", &gat_core::adaptation::NLV_LABELS).unwrap_err();
    assert!(matches!(err, Error::RemoteFailure { attempts: 3, .. }), "{err}");
    assert_eq!(server.requests.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = stub(vec![(401, json!({"error": "nope"}))]);
    assert!(client(&server.url).label_masses("p", &gat_core::adaptation::NLV_LABELS).is_err());
    assert_eq!(server.requests.lock().unwrap().len(), 1);
}

#[test]
fn remote_reformatter() {
    let server = stub(vec![(200, json!({"choices": [{"message": {"content": " Aspirin reduces fever. "}}]}))]);
    let r = RemoteReformatter::new(client(&server.url), "Merge into one declarative sentence.");
    assert_eq!(r.reformat("Does aspirin reduce fever?", "yes").unwrap(), "Aspirin reduces fever.");
    let reqs = server.requests.lock().unwrap();
    assert_eq!(reqs[0].1["messages"][0]["content"], "Merge into one declarative sentence.");
}
