//! Code-offset fuzzy extractor.
//!
//! `gen` draws a random message per code block, XORs the encoded blocks onto
//! the zero-padded fingerprint to form the public sketch, and derives the
//! key with HKDF-SHA256 over the messages under a random 128-bit salt.
//! `rep` XORs a fresh fingerprint onto the sketch, decodes each block back
//! to its message and re-derives the key.
//!
//! The sketch leaks up to `n - k` bits per block about the fingerprint, so a
//! `key_len`-bit key does not carry `key_len` bits of entropy. Helpers are
//! not reusable: publishing several sketches of the same fingerprint leaks
//! more.

use std::sync::Arc;

use hkdf::Hkdf;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::code::{BinaryCode, CodeRegistry, CodeSpec};
use crate::bits::BitString;
use crate::calibration::PropertyKind;
use crate::error::{Error, Result};
use crate::fingerprint::{EncodingParams, Fingerprint};

pub const HELPER_VERSION: u32 = 1;
pub const SALT_BYTES: usize = 16;
pub const MAX_KEY_BITS: usize = 255 * 32 * 8;

const KEY_INFO: &[u8] = b"qpuf/v1/key";
const VERIFY_INFO: &[u8] = b"qpuf/v1/verify";
const COMMIT_TAG: &[u8] = b"qpuf/v1/commit";

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExtractedKey(BitString);

impl ExtractedKey {
    pub fn from_bits(bits: BitString) -> Self {
        ExtractedKey(bits)
    }

    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        Ok(ExtractedKey(BitString::from_hex(text, Some(len))?))
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    /// SHA-256 commitment stored in place of the key.
    pub fn commitment(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(COMMIT_TAG);
        h.update((self.len() as u64).to_be_bytes());
        h.update(self.0.to_bytes());
        h.finalize().into()
    }

    /// Secret a verifier can hold to check MACs without keeping the key.
    pub fn verification_key(&self) -> [u8; 32] {
        let hk = Hkdf::<Sha256>::new(None, &self.0.to_bytes());
        let mut out = [0u8; 32];
        hk.expand(VERIFY_INFO, &mut out)
            .expect("32 bytes is a valid HKDF length");
        out
    }
}

impl std::fmt::Debug for ExtractedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExtractedKey({} bits)", self.len())
    }
}

/// Public output of `gen`; everything `rep` needs besides the fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HelperWire", into = "HelperWire")]
pub struct HelperData {
    pub version: u32,
    pub code: CodeSpec,
    pub salt: [u8; SALT_BYTES],
    pub sketch: BitString,
    pub key_len: usize,
    pub encoding: EncodingParams,
    pub property: PropertyKind,
    pub fingerprint_bits: usize,
}

#[derive(Serialize, Deserialize)]
struct HelperWire {
    version: u32,
    code: CodeSpec,
    salt_hex: String,
    sketch_hex: String,
    key_len: usize,
    encoding: EncodingParams,
    property: PropertyKind,
    fingerprint_bits: usize,
}

impl From<HelperData> for HelperWire {
    fn from(h: HelperData) -> Self {
        HelperWire {
            version: h.version,
            code: h.code,
            salt_hex: hex::encode(h.salt),
            sketch_hex: h.sketch.to_hex(),
            key_len: h.key_len,
            encoding: h.encoding,
            property: h.property,
            fingerprint_bits: h.fingerprint_bits,
        }
    }
}

impl TryFrom<HelperWire> for HelperData {
    type Error = Error;

    fn try_from(w: HelperWire) -> Result<Self> {
        if w.version != HELPER_VERSION {
            return Err(Error::InvalidParam(format!(
                "unsupported helper version {}",
                w.version
            )));
        }
        w.code.check_consistent()?;
        w.encoding.validate()?;
        let salt: [u8; SALT_BYTES] = hex::decode(&w.salt_hex)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| Error::InvalidParam("salt must be 16 bytes of hex".into()))?;
        let padded = padded_len(w.fingerprint_bits, w.code.n);
        let sketch = BitString::from_hex(&w.sketch_hex, Some(padded))?;
        check_key_len(w.key_len)?;
        Ok(HelperData {
            version: w.version,
            code: w.code,
            salt,
            sketch,
            key_len: w.key_len,
            encoding: w.encoding,
            property: w.property,
            fingerprint_bits: w.fingerprint_bits,
        })
    }
}

impl HelperData {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("helper serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn blocks(&self) -> usize {
        self.sketch.len() / self.code.n
    }
}

fn padded_len(len: usize, n: usize) -> usize {
    len.div_ceil(n) * n
}

fn check_key_len(key_len: usize) -> Result<()> {
    if key_len == 0 || key_len > MAX_KEY_BITS {
        return Err(Error::InvalidParam(format!(
            "key length must be in 1..={MAX_KEY_BITS} bits, got {key_len}"
        )));
    }
    Ok(())
}

fn derive_key(messages: &BitString, salt: &[u8], key_len: usize) -> ExtractedKey {
    let hk = Hkdf::<Sha256>::new(Some(salt), &messages.to_bytes());
    let mut info = KEY_INFO.to_vec();
    info.extend_from_slice(&(key_len as u64).to_be_bytes());
    let mut okm = vec![0u8; key_len.div_ceil(8)];
    hk.expand(&info, &mut okm).expect("key length checked");
    ExtractedKey(BitString::from_bytes(&okm, key_len).expect("okm long enough"))
}

/// Key generation with an explicit registry.
pub fn gen_with(
    registry: &CodeRegistry,
    fp: &Fingerprint,
    tolerance: usize,
    key_len: usize,
    seed: u64,
) -> Result<(ExtractedKey, HelperData)> {
    check_key_len(key_len)?;
    let code = registry.select(tolerance, fp.len())?;
    let spec = code.spec().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut salt = [0u8; SALT_BYTES];
    rng.fill_bytes(&mut salt);

    let padded = fp.bits().padded(padded_len(fp.len(), spec.n));
    let mut sketch = BitString::default();
    let mut messages = BitString::default();
    for b in 0..padded.len() / spec.n {
        let message: BitString = (0..spec.k).map(|_| rng.gen()).collect();
        let block = padded.slice(b * spec.n, (b + 1) * spec.n);
        sketch.extend_from(&(&block ^ &code.encode(&message)));
        messages.extend_from(&message);
    }
    let key = derive_key(&messages, &salt, key_len);
    let helper = HelperData {
        version: HELPER_VERSION,
        code: spec,
        salt,
        sketch,
        key_len,
        encoding: fp.params().clone(),
        property: fp.property(),
        fingerprint_bits: fp.len(),
    };
    Ok((key, helper))
}

/// Key generation from the default code registry.
pub fn gen(
    fp: &Fingerprint,
    tolerance: usize,
    key_len: usize,
    seed: u64,
) -> Result<(ExtractedKey, HelperData)> {
    gen_with(CodeRegistry::global(), fp, tolerance, key_len, seed)
}

/// Reproduces the key from a fresh fingerprint and the public helper.
pub fn rep(fp_noisy: &Fingerprint, helper: &HelperData) -> Result<ExtractedKey> {
    if fp_noisy.len() != helper.fingerprint_bits {
        return Err(Error::LengthMismatch {
            expected: helper.fingerprint_bits,
            actual: fp_noisy.len(),
        });
    }
    if fp_noisy.params() != &helper.encoding || fp_noisy.property() != helper.property {
        return Err(Error::InvalidParam(
            "fingerprint encoding differs from the enrolled one".into(),
        ));
    }
    let code: Arc<dyn BinaryCode> = helper.code.build()?;
    let n = helper.code.n;
    let padded = fp_noisy.bits().padded(helper.sketch.len());
    let mut messages = BitString::default();
    let mut failed = Vec::new();
    for b in 0..helper.blocks() {
        let range = b * n..(b + 1) * n;
        let word =
            &padded.slice(range.start, range.end) ^ &helper.sketch.slice(range.start, range.end);
        match code.decode(&word) {
            Some(message) => {
                // pad bits are zero in every honest reading
                let restored =
                    &code.encode(&message) ^ &helper.sketch.slice(range.start, range.end);
                let pad_start = (helper.fingerprint_bits.max(range.start) - range.start).min(n);
                if restored.as_slice()[pad_start..].iter().any(|&bit| bit) {
                    failed.push(b);
                }
                messages.extend_from(&message);
            }
            None => failed.push(b),
        }
    }
    if !failed.is_empty() {
        return Err(Error::DecodeFailure { blocks: failed });
    }
    Ok(derive_key(&messages, &helper.salt, helper.key_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;
    use rand_chacha::ChaCha8Rng;

    fn random_fp(rng: &mut impl Rng, qubits: usize) -> Fingerprint {
        let params = EncodingParams::new(5e9, 1e3, 6).unwrap();
        let bits: BitString = (0..qubits * 24).map(|_| rng.gen()).collect();
        Fingerprint::from_bits(bits, params, qubits).unwrap()
    }

    #[test]
    fn five_qubits_at_tolerance_8_give_240_bit_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let fp = random_fp(&mut rng, 5);
        let (key, helper) = gen(&fp, 8, 240, 1).unwrap();
        assert_eq!(key.len(), 240);
        assert_eq!(helper.code, CodeSpec::bch(127, 71, 9));
        assert_eq!(helper.sketch.len(), 127);
        assert_eq!(rep(&fp, &helper).unwrap(), key);
    }

    #[test]
    fn key_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fp = random_fp(&mut rng, 5);
        for len in [1, 7, 128, 240, 256] {
            assert_eq!(gen(&fp, 8, len, 3).unwrap().0.len(), len);
        }
        assert!(matches!(gen(&fp, 8, 0, 3), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn zero_tolerance_uses_identity_and_needs_exact_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let fp = random_fp(&mut rng, 5);
        let (key, helper) = gen(&fp, 0, 240, 4).unwrap();
        assert_eq!(helper.code, CodeSpec::identity());
        assert_eq!(rep(&fp, &helper).unwrap(), key);
        let noisy = fp.with_flips(&[17]);
        assert_ne!(rep(&noisy, &helper).unwrap(), key);
    }

    #[test]
    fn no_code_for_excessive_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let fp = random_fp(&mut rng, 5);
        assert!(matches!(
            gen(&fp, 50, 240, 0),
            Err(Error::NoCode { tolerance: 50 })
        ));
    }

    #[test]
    fn seeds_give_distinct_helpers_and_keys() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let fp = random_fp(&mut rng, 5);
        let runs: Vec<_> = (0..100).map(|s| gen(&fp, 8, 240, s).unwrap()).collect();
        for i in 0..runs.len() {
            for j in i + 1..runs.len() {
                assert_ne!(runs[i].0, runs[j].0);
                assert_ne!(runs[i].1.salt, runs[j].1.salt);
                assert_ne!(runs[i].1.sketch, runs[j].1.sketch);
            }
        }
        assert_eq!(gen(&fp, 8, 240, 5).unwrap(), runs[5]);
    }

    #[test]
    fn multi_block_fingerprints() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let fp = random_fp(&mut rng, 7);
        let (key, helper) = gen(&fp, 8, 240, 9).unwrap();
        assert_eq!(helper.blocks(), 2);
        // 8 errors in each block
        let mut flips: Vec<usize> = sample(&mut rng, 127, 8).into_iter().collect();
        flips.extend(sample(&mut rng, 168 - 127, 8).into_iter().map(|p| p + 127));
        assert_eq!(rep(&fp.with_flips(&flips), &helper).unwrap(), key);
    }

    #[test]
    fn rep_rejects_wrong_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let (_, helper) = gen(&random_fp(&mut rng, 5), 8, 240, 0).unwrap();
        assert!(matches!(
            rep(&random_fp(&mut rng, 4), &helper),
            Err(Error::LengthMismatch {
                expected: 120,
                actual: 96
            })
        ));
    }

    #[test]
    fn helper_json_is_byte_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (_, helper) = gen(&random_fp(&mut rng, 5), 8, 240, 0).unwrap();
        let text = helper.to_json();
        assert!(text.starts_with(
            r#"{"version":1,"code":{"name":"bch","n":127,"k":71,"t":9},"salt_hex":""#
        ));
        let back = HelperData::from_json(&text).unwrap();
        assert_eq!(back, helper);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn tampered_helper_rejected_on_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let (_, helper) = gen(&random_fp(&mut rng, 5), 8, 240, 0).unwrap();
        let text = helper.to_json();
        let bad_salt = text.replace(&hex::encode(helper.salt), "00");
        assert!(HelperData::from_json(&bad_salt).is_err());
        let bad_version = text.replace("\"version\":1", "\"version\":7");
        assert!(HelperData::from_json(&bad_version).is_err());
    }

    #[test]
    fn commitment_and_verification_key_differ_per_key() {
        let a = ExtractedKey::from_hex("00ff", 16).unwrap();
        let b = ExtractedKey::from_hex("00fe", 16).unwrap();
        assert_ne!(a.commitment(), b.commitment());
        assert_ne!(a.verification_key(), b.verification_key());
        assert_ne!(a.commitment(), a.verification_key());
    }
}
