use std::time::Duration;

use archivesafe_core::solver::SolveReport;
use archivesafe_core::wrap::{self, Difficulty, WrappedKey};
use archivesafe_core::{kdf, Seed, SymmetricKey};

use crate::api::{decode_lower_hex, ErrorBody, SolveRequest, SolveResponse};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("refusing to outsource an unsalted wrap: the server would learn the key")]
    SaltRequired,
    #[error("transport: {0}")]
    Transport(String),
    #[error("server error {status} {code}: {message}")]
    Server {
        status: u16,
        code: String,
        message: String,
    },
    #[error("unreadable server response: {0}")]
    InvalidResponse(String),
    #[error("server returned a seed that does not match the checksum")]
    ServerReturnedInvalidSeed,
}

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    /// Sent as `max_difficulty`.
    pub max_difficulty: u32,
    pub timeout: Option<Duration>,
    pub allow_unsalted: bool,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            max_difficulty: Difficulty::DEFAULT_MAX,
            timeout: None,
            allow_unsalted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteSolve {
    pub key: SymmetricKey,
    pub seed: Seed,
    pub candidates_tried: u128,
    pub elapsed_ms: u64,
}

impl RemoteSolve {
    pub fn report(&self) -> SolveReport {
        SolveReport {
            seed: self.seed,
            candidates_tried: self.candidates_tried,
            elapsed: Duration::from_millis(self.elapsed_ms),
            workers_used: 0,
        }
    }
}

/// Asks the service at `endpoint` (e.g. `http://127.0.0.1:8787`) for the seed
/// and derives the key locally. Only the public view is sent.
pub fn solve_remote(
    endpoint: &str,
    w: &WrappedKey,
    opts: &RemoteOptions,
) -> Result<RemoteSolve, ClientError> {
    if !w.is_salted() && !opts.allow_unsalted {
        return Err(ClientError::SaltRequired);
    }
    let public = w.public_view();
    let req = SolveRequest::from_public(&public, opts.max_difficulty);

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(opts.timeout)
        .build()
        .into();
    let url = format!("{}/v1/solve", endpoint.trim_end_matches('/'));
    let mut resp = agent
        .post(&url)
        .send_json(&req)
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ClientError::Transport(e.to_string()))?;

    if status != 200 {
        return Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => ClientError::Server {
                status,
                code: b.error.code,
                message: b.error.message,
            },
            Err(_) => ClientError::Server {
                status,
                code: String::new(),
                message: text,
            },
        });
    }

    let body: SolveResponse =
        serde_json::from_str(&text).map_err(|e| ClientError::InvalidResponse(e.to_string()))?;
    let seed: [u8; 16] = decode_lower_hex("seed", &body.seed)
        .map_err(ClientError::InvalidResponse)?
        .try_into()
        .map_err(|_| ClientError::InvalidResponse("seed must be 16 bytes".into()))?;
    let seed = Seed::from_bytes(seed);
    if kdf::h1(w.suite, seed.as_bytes()) != *w.checksum.as_bytes() {
        return Err(ClientError::ServerReturnedInvalidSeed);
    }
    Ok(RemoteSolve {
        key: wrap::derive_key(w.suite, &seed, w.salt.as_ref()),
        seed,
        candidates_tried: body.candidates_tried,
        elapsed_ms: body.elapsed_ms,
    })
}
