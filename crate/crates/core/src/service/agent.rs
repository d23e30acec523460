use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::protocol::{
    compute_mac, fresh_nonce, parse_nonce, read_frame, write_frame, AuthMessage, ChallengeBody,
    ChallengeRequestBody, MessageKind, ResponseBody, Verdict,
};
use super::{Direction, Transcript};
use crate::calibration::DeviceSnapshot;
use crate::challenge::reconstruct_from_helper;
use crate::error::{Error, Result};

const AGENT_TIMEOUT: Duration = Duration::from_secs(30);

/// Answers a challenge from the device's current snapshot. A failed
/// reconstruction becomes an error response rather than a local error.
pub fn respond(snapshot: &DeviceSnapshot, challenge: &ChallengeBody) -> Result<ResponseBody> {
    let nonce = parse_nonce(&challenge.nonce)
        .ok_or_else(|| Error::Protocol("challenge nonce is not 16 bytes of hex".into()))?;
    match reconstruct_from_helper(snapshot, &challenge.qtuple, &challenge.helper) {
        Ok(key) => Ok(ResponseBody {
            mac_hex: Some(hex::encode(compute_mac(&key.verification_key(), &nonce))),
            error: None,
        }),
        Err(Error::DecodeFailure { .. }) => Ok(ResponseBody {
            mac_hex: None,
            error: Some("decode_failure".into()),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct AgentOutcome {
    pub verdict: Verdict,
    pub transcript: Transcript,
}

/// Requests a challenge for `device_id`, answers it from `snapshot` and
/// returns the verifier's verdict.
pub fn run_agent(
    snapshot: &DeviceSnapshot,
    verifier: impl ToSocketAddrs,
    device_id: &str,
) -> Result<AgentOutcome> {
    let stream = TcpStream::connect(verifier)?;
    stream.set_read_timeout(Some(AGENT_TIMEOUT))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut transcript = Transcript::default();

    let request = AuthMessage::new(
        MessageKind::ChallengeRequest,
        &hex::encode(fresh_nonce()),
        &ChallengeRequestBody {
            device_id: device_id.to_string(),
        },
    );
    write_frame(&mut writer, &request)?;
    transcript.push(Direction::Sent, request);

    let mut next = |transcript: &mut Transcript| -> Result<AuthMessage> {
        let msg = read_frame(&mut reader)?
            .ok_or_else(|| Error::Protocol("verifier closed the connection".into()))?;
        transcript.push(Direction::Received, msg.clone());
        Ok(msg)
    };

    let msg = next(&mut transcript)?;
    if msg.kind == MessageKind::Challenge {
        let challenge: ChallengeBody = msg.body()?;
        if challenge.nonce != msg.session_nonce {
            return Err(Error::Protocol(
                "challenge nonce differs from session nonce".into(),
            ));
        }
        let response = AuthMessage::new(
            MessageKind::Response,
            &challenge.nonce,
            &respond(snapshot, &challenge)?,
        );
        write_frame(&mut writer, &response)?;
        transcript.push(Direction::Sent, response);
        let msg = next(&mut transcript)?;
        return finish(msg, transcript);
    }
    finish(msg, transcript)
}

fn finish(msg: AuthMessage, mut transcript: Transcript) -> Result<AgentOutcome> {
    msg.expect(MessageKind::Verdict)?;
    let verdict: Verdict = msg.body()?;
    log::info!(
        "verdict: accept={} reason={}",
        verdict.accept,
        verdict.reason
    );
    transcript.verdict = Some(verdict.clone());
    Ok(AgentOutcome {
        verdict,
        transcript,
    })
}
