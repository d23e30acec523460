//! Enrollment-backed device authentication over TCP.
//!
//! A [`Verifier`] holds CRP records and challenges agents; an agent
//! reconstructs the PUF key from its device's current snapshot and proves
//! possession with a MAC over a single-use nonce.

mod agent;
pub mod protocol;
mod verifier;

pub use agent::{respond, run_agent, AgentOutcome};
pub use protocol::{AuthMessage, MessageKind, Verdict};
pub use verifier::{serve_verifier, spawn_verifier, Verifier, VerifierConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

/// Frames of one session in order, plus the verdict if one was reached.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    pub frames: Vec<(Direction, AuthMessage)>,
    pub verdict: Option<Verdict>,
}

impl Transcript {
    pub fn push(&mut self, dir: Direction, msg: AuthMessage) {
        self.frames.push((dir, msg));
    }

    pub fn find(&self, kind: MessageKind) -> Option<&AuthMessage> {
        self.frames.iter().map(|(_, m)| m).find(|m| m.kind == kind)
    }
}
