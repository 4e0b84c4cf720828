mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use lmea::backend::{ChatBackend, HttpTransport, ScriptedTransport};
use lmea::prompt::render_response;
use lmea::seed::rng_from_seed;
use lmea::{
    evolve, gen_rue, generate, init_population, parse_response, validate_tour, BackendError,
    BuiltinBackend, BuiltinConfig, EvolveConfig, MutationKind, OffspringBackend, OffspringRequest,
    PromptMode, RemoteConfig, Tour,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[test]
fn builtin_offspring_are_always_valid() {
    let inst = gen_rue(12, 3).unwrap();
    let pop = init_population(&inst, 16, 1);
    let mut fill = rng_from_seed(0);
    let mut draws = 0;
    for (k, mutation) in [MutationKind::Swap, MutationKind::TwoOpt]
        .into_iter()
        .enumerate()
    {
        for mode in [PromptMode::Lmea, PromptMode::Opro] {
            let mut backend = BuiltinBackend::new(BuiltinConfig {
                mutation,
                seed: k as u64,
                ..Default::default()
            });
            for step in 0..157 {
                let req = OffspringRequest {
                    instance: &inst,
                    population: &pop,
                    count: 16,
                    temperature: 0.5 + (step % 4) as f64 * 0.5,
                    mode,
                };
                let report = generate(&mut backend, &req, &mut fill).unwrap();
                assert_eq!(report.offspring.len(), 16);
                assert_eq!(report.fallback_filled, 0);
                assert_eq!(report.invalid_count, 0);
                for t in &report.offspring {
                    assert!(validate_tour(12, t.as_slice()).is_ok());
                }
                draws += report.offspring.len();
            }
        }
    }
    assert!(draws >= 10_000);
}

fn mutate_text(rng: &mut ChaCha8Rng, base: &str) -> String {
    const PIECES: [&str; 12] = [
        "<res>",
        "</res>",
        "<selection>",
        "</selection>",
        ",",
        " ",
        "[",
        "]",
        "-1",
        "99999999999999999999",
        "\n",
        "é",
    ];
    let mut chars: Vec<String> = base.chars().map(String::from).collect();
    for _ in 0..rng.random_range(1..6) {
        let pos = rng.random_range(0..=chars.len());
        match rng.random_range(0..3) {
            0 if pos < chars.len() => {
                chars.remove(pos);
            }
            1 => chars.insert(pos, PIECES[rng.random_range(0..PIECES.len())].to_string()),
            _ => chars.insert(pos, rng.random_range(0..15).to_string()),
        }
    }
    chars.concat()
}

#[test]
fn parser_fuzz_never_yields_invalid_tours() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let valid: Vec<Tour> = (0..3)
        .map(|s| {
            let mut order: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
            Tour::new(n, order).unwrap()
        })
        .collect();
    let base = format!(
        "<selection>[0,1],[2,3]</selection>\n{}",
        render_response(&valid)
    );
    let mut accepted = 0usize;
    for k in 0..100_000 {
        let text = if k % 4 == 0 {
            let len = rng.random_range(0..80);
            (0..len)
                .map(|_| char::from(rng.random_range(0x20u8..0x7f)))
                .collect::<String>()
        } else {
            mutate_text(&mut rng, &base)
        };
        let parsed = parse_response(&text, n);
        for t in &parsed.offspring {
            assert!(validate_tour(n, t.as_slice()).is_ok(), "{text:?}");
        }
        accepted += parsed.offspring.len();
    }
    assert!(accepted > 0);
}

#[test]
fn unterminated_block_is_rejected() {
    let parsed = parse_response("<res>0,1,2,3</res>\n<res>3,2,1,0", 4);
    assert_eq!(parsed.offspring.len(), 1);
    assert_eq!(parsed.rejected.len(), 1);
}

#[test]
fn builtin_run_replays_through_scripted_backend() {
    let inst = gen_rue(10, 8).unwrap();
    let config = EvolveConfig {
        generations: 30,
        seed: 5,
        ..Default::default()
    };
    let mut builtin = BuiltinBackend::new(BuiltinConfig {
        seed: 5,
        ..Default::default()
    });
    let live = evolve(&inst, &config, &mut builtin, None).unwrap();
    assert_eq!(live.transcript.len(), 30);
    common::assert_elitist(&live, 16);

    let mut replay = ChatBackend::new(
        "scripted",
        ScriptedTransport::from_exchanges(&live.transcript),
        0,
    );
    let again = evolve(&inst, &config, &mut replay, None).unwrap();
    assert_eq!(again.records, live.records);
    assert_eq!(again.best, live.best);
    assert_eq!(replay.transport().remaining(), 0);
    for (a, b) in again.transcript.iter().zip(&live.transcript) {
        assert_eq!(a.response, b.response);
        assert_eq!(a.temperature.to_bits(), b.temperature.to_bits());
    }
}

/// Minimal chat-completions endpoint answering every request with the next
/// canned content string. Received bodies are sent back over the channel.
fn serve(contents: Vec<String>) -> (String, mpsc::Receiver<Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for content in contents {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0u8; length];
            reader.read_exact(&mut body).unwrap();
            tx.send(serde_json::from_slice(&body).unwrap()).unwrap();
            let reply =
                json!({"choices": [{"message": {"role": "assistant", "content": content}}]})
                    .to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.len(),
                reply
            )
            .unwrap();
        }
    });
    (format!("http://{addr}/v1/chat/completions"), rx)
}

fn local_config(endpoint: String) -> RemoteConfig {
    RemoteConfig {
        endpoint,
        auth_env: None,
        timeout_secs: 5,
        backoff_ms: 1,
        ..Default::default()
    }
}

#[test]
fn remote_backend_round_trip() {
    let inst = gen_rue(6, 1).unwrap();
    let pop = init_population(&inst, 4, 2);
    let tours: Vec<Tour> = pop.members().iter().map(|m| m.tour.clone()).collect();
    let (endpoint, bodies) = serve(vec![render_response(&tours)]);
    let mut backend = ChatBackend::new(
        "remote",
        HttpTransport::new(local_config(endpoint)).unwrap(),
        3,
    );
    let temperature = 1.1 + 0.1;
    let req = OffspringRequest {
        instance: &inst,
        population: &pop,
        count: 4,
        temperature,
        mode: PromptMode::Lmea,
    };
    let report = generate(&mut backend, &req, &mut rng_from_seed(0)).unwrap();
    assert_eq!(report.offspring, tours);
    assert_eq!(report.retries_used, 0);
    assert_eq!(report.fallback_filled, 0);
    let body = bodies.recv().unwrap();
    assert_eq!(
        body["temperature"].as_f64().unwrap().to_bits(),
        temperature.to_bits()
    );
    assert_eq!(body["model"], "gpt-3.5-turbo-0613");
    assert!(body["messages"][0]["content"]
        .as_str()
        .unwrap()
        .contains("<res>"));
}

#[test]
fn prose_only_answers_exhaust_retries_then_fill() {
    let inst = gen_rue(6, 1).unwrap();
    let pop = init_population(&inst, 4, 2);
    let prose = "I think a good route would visit the points in a circle.".to_string();
    let (endpoint, bodies) = serve(vec![prose; 4]);
    let mut backend = ChatBackend::new(
        "remote",
        HttpTransport::new(local_config(endpoint)).unwrap(),
        3,
    );
    let req = OffspringRequest {
        instance: &inst,
        population: &pop,
        count: 4,
        temperature: 1.0,
        mode: PromptMode::Lmea,
    };
    let report = generate(&mut backend, &req, &mut rng_from_seed(0)).unwrap();
    assert_eq!(report.retries_used, 3);
    assert_eq!(report.fallback_filled, 4);
    assert_eq!(report.offspring.len(), 4);
    assert_eq!(bodies.iter().take(4).count(), 4);
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let config = local_config(format!("http://127.0.0.1:{port}/v1/chat/completions"));
    let mut backend = ChatBackend::new("remote", HttpTransport::new(config).unwrap(), 3);
    let inst = gen_rue(5, 0).unwrap();
    let pop = init_population(&inst, 2, 0);
    let req = OffspringRequest {
        instance: &inst,
        population: &pop,
        count: 2,
        temperature: 1.0,
        mode: PromptMode::Lmea,
    };
    match backend.propose(&req) {
        Err(BackendError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("expected transport error, got {other:?}"),
    }
}
