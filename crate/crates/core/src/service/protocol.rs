//! Wire format: one JSON object per line, one session per connection.
//!
//! ```text
//! agent    -> verifier  {"kind":"challenge_request","session_nonce":"..","payload":{"device_id":".."}}
//! verifier -> agent     {"kind":"challenge","session_nonce":N,"payload":{"qtuple":[..],"helper":{..},"nonce":N}}
//! agent    -> verifier  {"kind":"response","session_nonce":N,"payload":{"mac_hex":".."}}
//! verifier -> agent     {"kind":"verdict","session_nonce":N,"payload":{"accept":true,"reason":"ok"}}
//! ```
//!
//! The MAC is HMAC-SHA256 over the session nonce, keyed by the verification
//! key derived from the reconstructed PUF key. Keys never cross the wire.

use std::io::{BufRead, Read, Write};

use hmac::{Hmac, Mac};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::challenge::QTuple;
use crate::error::{Error, Result};
use crate::fuzzy::HelperData;

pub const NONCE_BYTES: usize = 16;
/// Frames longer than this are rejected as malformed.
pub const MAX_FRAME_BYTES: u64 = 1 << 20;

const MAC_TAG: &[u8] = b"qpuf/v1/auth";

pub type Nonce = [u8; NONCE_BYTES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ChallengeRequest,
    Challenge,
    Response,
    Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthMessage {
    pub kind: MessageKind,
    pub session_nonce: String,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeRequestBody {
    pub device_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeBody {
    pub qtuple: QTuple,
    pub helper: HelperData,
    pub nonce: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResponseBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac_hex: Option<String>,
    /// Set instead of `mac_hex` when the agent could not reconstruct a key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub reason: String,
}

/// Reason codes carried in verdicts.
pub mod reason {
    pub const OK: &str = "ok";
    pub const MAC_MISMATCH: &str = "mac_mismatch";
    pub const STALE_NONCE: &str = "stale_nonce";
    pub const NONCE_MISMATCH: &str = "nonce_mismatch";
    pub const DECODE_FAILURE: &str = "decode_failure";
    pub const MALFORMED_FRAME: &str = "malformed_frame";
    pub const UNEXPECTED_FRAME: &str = "unexpected_frame";
    pub const TIMEOUT: &str = "timeout";
    pub const UNKNOWN_DEVICE: &str = "unknown_device";
}

impl Verdict {
    pub fn accept() -> Self {
        Verdict {
            accept: true,
            reason: reason::OK.into(),
        }
    }

    pub fn deny(reason: &str) -> Self {
        Verdict {
            accept: false,
            reason: reason.into(),
        }
    }
}

impl AuthMessage {
    pub fn new<T: Serialize>(kind: MessageKind, nonce: &str, body: &T) -> Self {
        AuthMessage {
            kind,
            session_nonce: nonce.to_string(),
            payload: serde_json::to_value(body).expect("payload serializes"),
        }
    }

    pub fn body<T: DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    pub fn expect(&self, kind: MessageKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Protocol(format!(
                "expected {kind:?}, got {:?}",
                self.kind
            )))
        }
    }
}

pub fn write_frame<W: Write>(mut w: W, msg: &AuthMessage) -> Result<()> {
    let mut line = serde_json::to_vec(msg)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()?;
    Ok(())
}

/// Next frame, or `None` at a clean end of stream.
pub fn read_frame<R: BufRead>(r: &mut R) -> Result<Option<AuthMessage>> {
    let mut line = String::new();
    let n = r.by_ref().take(MAX_FRAME_BYTES).read_line(&mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if !line.ends_with('\n') && n as u64 == MAX_FRAME_BYTES {
        return Err(Error::Protocol("frame too long".into()));
    }
    Ok(Some(serde_json::from_str(line.trim_end())?))
}

pub fn fresh_nonce() -> Nonce {
    rand::random()
}

pub fn parse_nonce(text: &str) -> Option<Nonce> {
    hex::decode(text).ok()?.try_into().ok()
}

type HmacSha256 = Hmac<Sha256>;

fn mac_for(verify_key: &[u8; 32], nonce: &Nonce) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(verify_key).expect("HMAC takes any key length");
    mac.update(MAC_TAG);
    mac.update(nonce);
    mac
}

pub fn compute_mac(verify_key: &[u8; 32], nonce: &Nonce) -> [u8; 32] {
    mac_for(verify_key, nonce).finalize().into_bytes().into()
}

/// Constant-time MAC check.
pub fn check_mac(verify_key: &[u8; 32], nonce: &Nonce, tag: &[u8]) -> bool {
    mac_for(verify_key, nonce).verify_slice(tag).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip_line_by_line() {
        let a = AuthMessage::new(
            MessageKind::ChallengeRequest,
            "00",
            &ChallengeRequestBody {
                device_id: "d".into(),
            },
        );
        let b = AuthMessage::new(MessageKind::Verdict, "00", &Verdict::deny(reason::TIMEOUT));
        let mut buf = Vec::new();
        write_frame(&mut buf, &a).unwrap();
        write_frame(&mut buf, &b).unwrap();
        assert_eq!(buf.iter().filter(|&&c| c == b'\n').count(), 2);
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap(), Some(a));
        let got = read_frame(&mut r).unwrap().unwrap();
        assert_eq!(got.body::<Verdict>().unwrap(), Verdict::deny("timeout"));
        assert_eq!(read_frame(&mut r).unwrap(), None);
        assert!(String::from_utf8(buf)
            .unwrap()
            .contains(r#""kind":"challenge_request""#));
    }

    #[test]
    fn garbage_is_an_error() {
        let mut r = &b"{not json\n"[..];
        assert!(read_frame(&mut r).is_err());
    }

    #[test]
    fn mac_binds_key_and_nonce() {
        let key = [7u8; 32];
        let nonce = fresh_nonce();
        let tag = compute_mac(&key, &nonce);
        assert!(check_mac(&key, &nonce, &tag));
        assert!(!check_mac(&[8u8; 32], &nonce, &tag));
        assert!(!check_mac(&key, &fresh_nonce(), &tag));
        assert_eq!(parse_nonce(&hex::encode(nonce)), Some(nonce));
        assert_eq!(parse_nonce("abcd"), None);
    }
}
