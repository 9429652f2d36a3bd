use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::Ordering;
use std::thread;
use std::time::Duration;

use archivesafe_core::dbke;
use archivesafe_core::kdf::KdfSuite;
use archivesafe_core::solver::SolverConfig;
use archivesafe_core::wrap::{self, Difficulty, SaltView};
use archivesafe_core::{Checksum, Seed};
use archivesafe_service::api::{ErrorBody, Health, SolveRequest, SolveResponse};
use archivesafe_service::tap::WireTap;
use archivesafe_service::{solve_remote, spawn, ClientError, RemoteOptions, ServiceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn server(cap: u32) -> archivesafe_service::ServerHandle {
    spawn(ServiceConfig {
        bind: "127.0.0.1:0".parse().unwrap(),
        cap,
        workers: 2,
        max_concurrent: 4,
        deadline: Duration::from_secs(30),
    })
    .unwrap()
}

/// Posts a raw JSON body and returns status and body text.
fn post(endpoint: &str, body: &str) -> (u16, String) {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = agent
        .post(&format!("{endpoint}/v1/solve"))
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    (
        resp.status().as_u16(),
        resp.body_mut().read_to_string().unwrap(),
    )
}

fn error_code(body: &str) -> String {
    serde_json::from_str::<ErrorBody>(body).unwrap().error.code
}

#[test]
fn health_reports_cap_and_workers() {
    let s = server(20);
    let mut resp = ureq::get(&format!("{}/v1/health", s.endpoint()))
        .call()
        .unwrap();
    let h: Health = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(
        h,
        Health {
            status: "ok".into(),
            cap: 20,
            workers: 2
        }
    );
}

#[test]
fn zero_difficulty_returns_the_partial_seed() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::ZERO, true, &mut rng);
    let req = SolveRequest::from_public(&w.public_view(), 64);
    assert_eq!(req.partial_bits, 128);
    let (status, body) = post(&s.endpoint(), &serde_json::to_string(&req).unwrap());
    assert_eq!(status, 200, "{body}");
    let resp: SolveResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.seed, req.partial_seed);
    assert_eq!(resp.candidates_tried, 1);
}

#[test]
fn salted_round_trip_decrypts() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let m = b"outsourced but still private";
    let ct = dbke::dbke_encrypt(
        KdfSuite::Fast,
        Difficulty::new(10).unwrap(),
        m,
        true,
        &mut rng,
    )
    .unwrap();
    let remote = solve_remote(&s.endpoint(), &ct.wrapped, &RemoteOptions::default()).unwrap();
    assert_eq!(dbke::decrypt_with_key(&ct, &remote.key).unwrap(), m);

    let local = wrap::unwrap(&ct.wrapped, SaltView::Holder, &SolverConfig::default()).unwrap();
    assert_eq!(local.key, remote.key);
    assert_eq!(local.report.seed, remote.seed);
}

#[test]
fn wire_carries_no_salt() {
    let s = server(20);
    let tap = WireTap::start(s.addr()).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..25 {
        let d = rng.random_range(0..=10);
        let (k, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(d).unwrap(), true, &mut rng);
        tap.clear();
        let remote = solve_remote(&tap.endpoint(), &w, &RemoteOptions::default()).unwrap();
        assert_eq!(remote.key, k);

        let sent = tap.sent();
        assert!(!sent.is_empty());
        let salt = w.salt.unwrap();
        let hex_salt = salt.to_hex();
        assert!(!sent.windows(16).any(|x| x == salt.as_bytes()));
        assert!(!sent
            .windows(32)
            .any(|x| x.eq_ignore_ascii_case(hex_salt.as_bytes())));
        assert!(!String::from_utf8_lossy(&sent).contains("salt"));
    }
}

#[test]
fn unsalted_outsourcing_needs_override() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (k, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(6).unwrap(), false, &mut rng);
    let err = solve_remote(&s.endpoint(), &w, &RemoteOptions::default()).unwrap_err();
    assert!(matches!(err, ClientError::SaltRequired));
    assert_eq!(s.stats().requests.load(Ordering::SeqCst), 0);

    let opts = RemoteOptions {
        allow_unsalted: true,
        ..Default::default()
    };
    assert_eq!(solve_remote(&s.endpoint(), &w, &opts).unwrap().key, k);
}

#[test]
fn strict_schema() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(4).unwrap(), true, &mut rng);
    let good = serde_json::to_value(SolveRequest::from_public(&w.public_view(), 64)).unwrap();

    let mut with_salt = good.clone();
    with_salt["salt"] = w.salt.unwrap().to_hex().into();
    let mut upper = good.clone();
    upper["h"] = good["h"].as_str().unwrap().to_uppercase().into();
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("max_difficulty");
    let mut ragged = good.clone();
    ragged["partial_bits"] = 120.into();

    for body in [
        with_salt.to_string(),
        upper.to_string(),
        missing.to_string(),
        ragged.to_string(),
        "not json".into(),
        "[]".into(),
    ] {
        let (status, text) = post(&s.endpoint(), &body);
        assert_eq!(status, 400, "{body} -> {text}");
        assert_eq!(error_code(&text), "MalformedRequest");
    }
    assert_eq!(s.stats().solver_invocations.load(Ordering::SeqCst), 0);
    assert_eq!(post(&s.endpoint(), &good.to_string()).0, 200);
}

#[test]
fn cap_is_enforced_before_the_solver() {
    let s = server(12);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(13).unwrap(), true, &mut rng);
    let req = SolveRequest::from_public(&w.public_view(), 64);
    let (status, body) = post(&s.endpoint(), &serde_json::to_string(&req).unwrap());
    assert_eq!(status, 403);
    assert_eq!(error_code(&body), "DifficultyTooHigh");

    // A client-declared limit below the server cap also applies.
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(9).unwrap(), true, &mut rng);
    let req = SolveRequest::from_public(&w.public_view(), 8);
    assert_eq!(
        post(&s.endpoint(), &serde_json::to_string(&req).unwrap()).0,
        403
    );

    let err = solve_remote(
        &s.endpoint(),
        &w,
        &RemoteOptions {
            max_difficulty: 8,
            ..Default::default()
        },
    )
    .unwrap_err();
    assert!(
        matches!(err, ClientError::Server { status: 403, .. }),
        "{err}"
    );
    assert_eq!(s.stats().solver_invocations.load(Ordering::SeqCst), 0);
    assert_eq!(s.stats().rejected.load(Ordering::SeqCst), 3);
}

#[test]
fn wrong_checksum_is_no_solution() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let (_, mut w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(8).unwrap(), true, &mut rng);
    w.checksum = Checksum::random(&mut rng);
    let err = solve_remote(&s.endpoint(), &w, &RemoteOptions::default()).unwrap_err();
    match err {
        ClientError::Server { status, code, .. } => {
            assert_eq!((status, code.as_str()), (422, "NoSolution"))
        }
        other => panic!("{other}"),
    }
}

#[test]
fn deadline_gives_timeout() {
    let s = spawn(ServiceConfig {
        bind: "127.0.0.1:0".parse().unwrap(),
        cap: 40,
        workers: 1,
        max_concurrent: 1,
        deadline: Duration::from_millis(100),
    })
    .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (_, mut w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(36).unwrap(), true, &mut rng);
    w.checksum = Checksum::random(&mut rng);
    let err = solve_remote(&s.endpoint(), &w, &RemoteOptions::default()).unwrap_err();
    assert!(
        matches!(err, ClientError::Server { status: 504, .. }),
        "{err}"
    );

    // The cancelled search released its slot.
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(2).unwrap(), true, &mut rng);
    assert!(solve_remote(&s.endpoint(), &w, &RemoteOptions::default()).is_ok());
}

#[test]
fn identical_requests_give_identical_seeds() {
    let s = server(20);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(12).unwrap(), true, &mut rng);
    let endpoint = s.endpoint();
    let seeds: Vec<Seed> = thread::scope(|scope| {
        let handles: Vec<_> = (0..6)
            .map(|_| {
                scope.spawn(|| {
                    solve_remote(&endpoint, &w, &RemoteOptions::default())
                        .unwrap()
                        .seed
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(seeds.windows(2).all(|p| p[0] == p[1]));
}

#[test]
fn tampered_seed_is_rejected() {
    // A fake server that answers every request with a fixed wrong seed.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for mut conn in listener.incoming().flatten() {
            let mut buf = [0u8; 4096];
            let _ = conn.read(&mut buf);
            let body = r#"{"seed":"000102030405060708090a0b0c0d0e0f","candidates_tried":1,"elapsed_ms":0}"#;
            let _ = write!(
                conn,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let (_, w) = wrap::wrap(KdfSuite::Fast, Difficulty::new(8).unwrap(), true, &mut rng);
    let err = solve_remote(&format!("http://{addr}"), &w, &RemoteOptions::default()).unwrap_err();
    assert!(
        matches!(err, ClientError::ServerReturnedInvalidSeed),
        "{err}"
    );
}

#[test]
fn cap_above_maximum_refused() {
    let cfg = ServiceConfig {
        bind: "127.0.0.1:0".parse().unwrap(),
        cap: 65,
        ..Default::default()
    };
    assert!(spawn(cfg).is_err());
}
