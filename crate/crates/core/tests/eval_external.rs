use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use interleaf_core::eval::{match_predictions, score, ExternalMatcher, MatchMethod, MatcherConfig, RawPrediction};
use interleaf_core::pipeline::{build_instance, PipelineConfig};
use interleaf_core::qa::{AnswerKey, Instance, TemplateCatalog};
use interleaf_core::taskgen::Category;

/// One-request-per-connection HTTP stub. The reply depends on the
/// `raw_output` field: "slow" stalls, "garbage" returns non-JSON, "abstain"
/// returns key "none", anything else returns key "D".
fn serve(requests: Arc<Mutex<Vec<(Option<String>, serde_json::Value)>>>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let requests = requests.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                let mut auth = None;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = Some(line["authorization:".len()..].trim().to_string());
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let raw = json["raw_output"].as_str().unwrap_or_default().to_string();
                requests.lock().unwrap().push((auth, json));
                let reply = match raw.as_str() {
                    r if r.contains("slow") => {
                        thread::sleep(Duration::from_millis(1500));
                        r#"{"key":"A"}"#
                    }
                    r if r.contains("garbage") => "<html>oops</html>",
                    r if r.contains("abstain") => r#"{"key":"none"}"#,
                    _ => r#"{"key":"D"}"#,
                };
                let mut out = stream;
                let _ = write!(
                    out,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    format!("http://{addr}/match")
}

fn gold(n: usize) -> Vec<Instance> {
    let cfg = PipelineConfig::default();
    let catalog = TemplateCatalog::builtin();
    (0..n)
        .map(|i| build_instance(&cfg, &catalog, i, Category::ALL[i % 3]).unwrap().0)
        .collect()
}

fn raw(inst: &Instance, output: &str) -> RawPrediction {
    RawPrediction {
        question_id: inst.id.clone(),
        output: output.to_string(),
    }
}

#[test]
fn external_verdicts_and_fallbacks() {
    let requests = Arc::new(Mutex::new(Vec::new()));
    let mut config = MatcherConfig::new(serve(requests.clone()));
    config.api_key = Some("secret".into());
    config.timeout = Duration::from_millis(300);
    config.max_in_flight = 2;
    let matcher = ExternalMatcher::new(config);
    let gold = gold(4);
    let raws = vec![
        raw(&gold[0], "looks like the fourth one"),
        raw(&gold[1], "abstain. The answer is B"),
        raw(&gold[2], "slow. The answer is C"),
        raw(&gold[3], "garbage. Answer: A"),
    ];
    let preds = match_predictions(&gold, &raws, Some(&matcher)).unwrap();
    let got: Vec<_> = preds.iter().map(|p| (p.extracted, p.method)).collect();
    assert_eq!(
        got,
        vec![
            (Some(AnswerKey::D), MatchMethod::External),
            (None, MatchMethod::Unmatched),
            (Some(AnswerKey::C), MatchMethod::Rule),
            (Some(AnswerKey::A), MatchMethod::Rule),
        ]
    );
    let seen = requests.lock().unwrap();
    assert_eq!(seen.len(), 4);
    for (auth, body) in seen.iter() {
        assert_eq!(auth.as_deref(), Some("Bearer secret"));
        assert!(body["question"].is_string());
        assert!(body["options"]["A"].is_string() && body["options"]["D"].is_string());
    }
}

#[test]
fn unreachable_service_falls_back_to_rules() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut config = MatcherConfig::new(format!("http://127.0.0.1:{port}/match"));
    config.timeout = Duration::from_millis(300);
    let matcher = ExternalMatcher::new(config);
    let gold = gold(1);
    let preds = match_predictions(&gold, &[raw(&gold[0], "(B)")], Some(&matcher)).unwrap();
    assert_eq!(preds[0].extracted, Some(AnswerKey::B));
    assert_eq!(preds[0].method, MatchMethod::Rule);
}

#[test]
fn scoring_examples() {
    let gold = gold(4);
    let key = |i: usize| gold[i].answer.letter().to_string();
    let wrong = |i: usize| AnswerKey::from_index((gold[i].answer.index() + 1) % 4).unwrap().letter().to_string();

    let three_of_four: Vec<_> = vec![raw(&gold[0], &key(0)), raw(&gold[1], &key(1)), raw(&gold[2], &key(2)), raw(&gold[3], &wrong(3))];
    let preds = match_predictions(&gold, &three_of_four, None).unwrap();
    let report = score(&preds, &gold).unwrap();
    assert_eq!(report.overall.accuracy, 0.75);
    assert_eq!(report.unmatched, 0);

    let mumbles: Vec<_> = gold.iter().map(|g| raw(g, "hmm")).collect();
    let report = score(&match_predictions(&gold, &mumbles, None).unwrap(), &gold).unwrap();
    assert_eq!(report.overall.accuracy, 0.0);
    assert_eq!(report.unmatched, 4);

    // Items 0 and 3 are spatial, items 1 and 2 are not.
    let mixed: Vec<_> = vec![raw(&gold[0], &key(0)), raw(&gold[3], &key(3)), raw(&gold[1], &wrong(1)), raw(&gold[2], &wrong(2))];
    let report = score(&match_predictions(&gold, &mixed, None).unwrap(), &gold).unwrap();
    assert_eq!(report.per_category[&Category::Spatial].accuracy, 1.0);
    assert_eq!(report.overall.accuracy, 0.5);

    let partial = score(&match_predictions(&gold, &mixed[..2], None).unwrap(), &gold).unwrap();
    assert_eq!(partial.unmatched, 2);
    assert_eq!(partial.overall.total, 4);
}
