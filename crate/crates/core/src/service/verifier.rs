use std::collections::HashMap;
use std::io::{BufReader, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use rand::seq::SliceRandom;

use super::protocol::{
    check_mac, fresh_nonce, parse_nonce, read_frame, reason, write_frame, AuthMessage,
    ChallengeBody, ChallengeRequestBody, MessageKind, Nonce, ResponseBody, Verdict,
};
use super::{Direction, Transcript};
use crate::challenge::CrpRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct VerifierConfig {
    pub read_timeout: Duration,
    /// Outstanding challenges older than this are discarded.
    pub nonce_ttl: Duration,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            read_timeout: Duration::from_secs(10),
            nonce_ttl: Duration::from_secs(60),
        }
    }
}

struct Pending {
    record: usize,
    issued: Instant,
}

/// Issues challenges from a CRP store and checks the MACs that come back.
/// Each nonce is accepted at most once.
pub struct Verifier {
    records: Vec<CrpRecord>,
    mac_keys: Vec<[u8; 32]>,
    pending: Mutex<HashMap<Nonce, Pending>>,
    config: VerifierConfig,
}

impl Verifier {
    /// Every record must carry a verification key or, in raw-key mode, the key.
    pub fn new(records: Vec<CrpRecord>, config: VerifierConfig) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("verifier needs at least one CRP record"));
        }
        let mac_keys = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.verify_key
                    .or_else(|| r.raw_key.as_ref().map(|k| k.verification_key()))
                    .ok_or_else(|| {
                        Error::InvalidParam(format!("record {i} has no verification key"))
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Verifier {
            records,
            mac_keys,
            pending: Mutex::new(HashMap::new()),
            config,
        })
    }

    pub fn records(&self) -> &[CrpRecord] {
        &self.records
    }

    fn issue(&self, device_id: &str) -> Option<(Nonce, usize)> {
        let candidates: Vec<usize> = (0..self.records.len())
            .filter(|&i| {
                self.records[i]
                    .device_id
                    .as_deref()
                    .is_none_or(|d| d == device_id)
            })
            .collect();
        let &record = candidates.choose(&mut rand::thread_rng())?;
        let nonce = fresh_nonce();
        let mut pending = self.pending.lock().expect("nonce registry poisoned");
        let ttl = self.config.nonce_ttl;
        pending.retain(|_, p| p.issued.elapsed() < ttl);
        pending.insert(
            nonce,
            Pending {
                record,
                issued: Instant::now(),
            },
        );
        Some((nonce, record))
    }

    /// Removes and returns the challenge issued under `nonce`, if live.
    fn redeem(&self, nonce: &Nonce) -> Option<usize> {
        let mut pending = self.pending.lock().expect("nonce registry poisoned");
        pending
            .remove(nonce)
            .filter(|p| p.issued.elapsed() < self.config.nonce_ttl)
            .map(|p| p.record)
    }

    fn judge(&self, expected: Option<&Nonce>, msg: &AuthMessage) -> Verdict {
        let Some(nonce) = parse_nonce(&msg.session_nonce) else {
            return Verdict::deny(reason::MALFORMED_FRAME);
        };
        let Some(record) = self.redeem(&nonce) else {
            return Verdict::deny(reason::STALE_NONCE);
        };
        if expected != Some(&nonce) {
            return Verdict::deny(reason::NONCE_MISMATCH);
        }
        let Ok(body) = msg.body::<ResponseBody>() else {
            return Verdict::deny(reason::MALFORMED_FRAME);
        };
        match (body.mac_hex, body.error) {
            (Some(mac_hex), _) => match hex::decode(mac_hex) {
                Ok(tag) if check_mac(&self.mac_keys[record], &nonce, &tag) => Verdict::accept(),
                Ok(_) => Verdict::deny(reason::MAC_MISMATCH),
                Err(_) => Verdict::deny(reason::MALFORMED_FRAME),
            },
            (None, Some(_)) => Verdict::deny(reason::DECODE_FAILURE),
            (None, None) => Verdict::deny(reason::MALFORMED_FRAME),
        }
    }

    /// Runs one session on `stream` and returns its transcript.
    pub fn handle(&self, stream: TcpStream) -> Result<Transcript> {
        stream.set_read_timeout(Some(self.config.read_timeout))?;
        let peer = stream.peer_addr().ok();
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = stream;
        let mut transcript = Transcript::default();

        let mut session: Option<Nonce> = None;
        let verdict = loop {
            let msg = match read_frame(&mut reader) {
                Ok(Some(msg)) => msg,
                Ok(None) => break None,
                Err(Error::Io(e))
                    if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) =>
                {
                    break Some(Verdict::deny(reason::TIMEOUT));
                }
                Err(Error::Io(e)) => return Err(Error::Io(e)),
                Err(_) => break Some(Verdict::deny(reason::MALFORMED_FRAME)),
            };
            transcript.push(Direction::Received, msg.clone());
            match (msg.kind, session) {
                (MessageKind::ChallengeRequest, None) => {
                    let Ok(req) = msg.body::<ChallengeRequestBody>() else {
                        break Some(Verdict::deny(reason::MALFORMED_FRAME));
                    };
                    let Some((nonce, record)) = self.issue(&req.device_id) else {
                        break Some(Verdict::deny(reason::UNKNOWN_DEVICE));
                    };
                    let r = &self.records[record];
                    let nonce_hex = hex::encode(nonce);
                    let challenge = AuthMessage::new(
                        MessageKind::Challenge,
                        &nonce_hex,
                        &ChallengeBody {
                            qtuple: r.qtuple.clone(),
                            helper: r.helper.clone(),
                            nonce: nonce_hex.clone(),
                        },
                    );
                    write_frame(&mut writer, &challenge)?;
                    transcript.push(Direction::Sent, challenge);
                    session = Some(nonce);
                }
                (MessageKind::Response, _) => break Some(self.judge(session.as_ref(), &msg)),
                _ => break Some(Verdict::deny(reason::UNEXPECTED_FRAME)),
            }
        };

        if let Some(verdict) = verdict {
            let nonce_hex = session.map(hex::encode).unwrap_or_default();
            let frame = AuthMessage::new(MessageKind::Verdict, &nonce_hex, &verdict);
            if let Err(e) = write_frame(&mut writer, &frame) {
                warn!("could not deliver verdict to {peer:?}: {e}");
            }
            transcript.push(Direction::Sent, frame);
            info!(
                "session with {peer:?}: accept={} reason={}",
                verdict.accept, verdict.reason
            );
            transcript.verdict = Some(verdict);
        }
        for (dir, frame) in &transcript.frames {
            info!(
                "{peer:?} {dir:?} {}",
                serde_json::to_string(frame).unwrap_or_default()
            );
        }
        Ok(transcript)
    }

    /// Accepts connections, one thread per session. Stops after
    /// `max_sessions` connections when given.
    pub fn serve(
        self: Arc<Self>,
        listener: TcpListener,
        max_sessions: Option<usize>,
    ) -> Result<()> {
        let mut handles = Vec::new();
        for (i, stream) in listener.incoming().enumerate() {
            let stream = stream?;
            let me = Arc::clone(&self);
            handles.push(thread::spawn(move || {
                if let Err(e) = me.handle(stream) {
                    warn!("session failed: {e}");
                }
            }));
            if max_sessions.is_some_and(|m| i + 1 >= m) {
                break;
            }
        }
        for h in handles {
            let _ = h.join();
        }
        Ok(())
    }
}

/// Binds `addr` and serves `records` until the process exits.
pub fn serve_verifier(records: Vec<CrpRecord>, addr: impl ToSocketAddrs) -> Result<()> {
    let verifier = Arc::new(Verifier::new(records, VerifierConfig::default())?);
    let listener = TcpListener::bind(addr)?;
    info!("verifier listening on {}", listener.local_addr()?);
    verifier.serve(listener, None)
}

/// Starts a verifier on an ephemeral local port in a background thread.
pub fn spawn_verifier(
    records: Vec<CrpRecord>,
    config: VerifierConfig,
) -> Result<(SocketAddr, Arc<Verifier>)> {
    let verifier = Arc::new(Verifier::new(records, config)?);
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let v = Arc::clone(&verifier);
    thread::spawn(move || v.serve(listener, None));
    Ok((addr, verifier))
}
