//! Wire types for `POST /v1/solve` and `GET /v1/health`.
//!
//! All hex is lowercase with no `0x` prefix. Unknown request fields are
//! rejected, so a stray `salt` never reaches the solver.

use archivesafe_core::wrap::{PartialSeed, PublicWrap};
use archivesafe_core::{Checksum, KdfSuite, LAMBDA_BITS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub suite: u8,
    pub h: String,
    pub partial_seed: String,
    pub partial_bits: u32,
    pub max_difficulty: u32,
}

impl SolveRequest {
    pub fn from_public(public: &PublicWrap, max_difficulty: u32) -> Self {
        Self {
            suite: public.suite.id(),
            h: public.checksum.to_hex(),
            partial_seed: hex::encode(public.partial.to_bytes()),
            partial_bits: public.partial.bits(),
            max_difficulty,
        }
    }

    /// Decodes the request into the puzzle it describes.
    pub fn to_public(&self) -> Result<PublicWrap, String> {
        let suite = KdfSuite::try_from(self.suite).map_err(|e| e.to_string())?;
        let h: [u8; 16] = decode_lower_hex("h", &self.h)?
            .try_into()
            .map_err(|_| "h must be 32 hex characters".to_string())?;
        if self.partial_bits > LAMBDA_BITS {
            return Err(format!(
                "partial_bits {} exceeds {LAMBDA_BITS}",
                self.partial_bits
            ));
        }
        let bytes = decode_lower_hex("partial_seed", &self.partial_seed)?;
        let partial =
            PartialSeed::from_bytes(self.partial_bits, &bytes).map_err(|e| e.to_string())?;
        Ok(PublicWrap {
            suite,
            checksum: Checksum::from_bytes(h),
            partial,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub seed: String,
    pub candidates_tried: u128,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub cap: u32,
    pub workers: usize,
}

pub fn decode_lower_hex(field: &str, s: &str) -> Result<Vec<u8>, String> {
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(format!("{field} must be lowercase hex"));
    }
    hex::decode(s).map_err(|e| format!("{field}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use archivesafe_core::wrap::{wrap_from_parts, Difficulty};
    use archivesafe_core::Seed;

    fn sample() -> PublicWrap {
        let seed = Seed::from_u128(0x0123_4567_89ab_cdef_0011_2233_4455_6677);
        wrap_from_parts(KdfSuite::Fast, Difficulty::new(12).unwrap(), seed, None)
            .1
            .public_view()
    }

    #[test]
    fn request_roundtrip() {
        let p = sample();
        let req = SolveRequest::from_public(&p, 20);
        assert_eq!(req.partial_bits, 116);
        assert_eq!(req.partial_seed.len(), 30);
        assert_eq!(req.to_public().unwrap(), p);
    }

    #[test]
    fn exact_field_set() {
        let json = serde_json::to_value(SolveRequest::from_public(&sample(), 20)).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "h",
                "max_difficulty",
                "partial_bits",
                "partial_seed",
                "suite"
            ]
        );
    }

    #[test]
    fn rejects_bad_fields() {
        let good = SolveRequest::from_public(&sample(), 20);
        let cases = [
            SolveRequest {
                suite: 9,
                ..good.clone()
            },
            SolveRequest {
                h: good.h.to_uppercase(),
                ..good.clone()
            },
            SolveRequest {
                h: good.h[..30].into(),
                ..good.clone()
            },
            SolveRequest {
                partial_bits: 129,
                ..good.clone()
            },
            SolveRequest {
                partial_bits: 100,
                ..good.clone()
            },
            SolveRequest {
                partial_seed: "zz".into(),
                ..good.clone()
            },
        ];
        for c in cases {
            assert!(c.to_public().is_err(), "{c:?}");
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let mut json = serde_json::to_value(SolveRequest::from_public(&sample(), 20)).unwrap();
        json["salt"] = "00".into();
        assert!(serde_json::from_value::<SolveRequest>(json).is_err());
    }
}
