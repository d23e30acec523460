//! Pluggable block codes and the registry the extractor picks them from.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bch::Bch;
use crate::bits::BitString;
use crate::error::{Error, Result};

const SELF_TEST_ROUNDS: usize = 100;
const SELF_TEST_SEED: u64 = 0x5e1f_7e57;

/// Parameters of a binary block code. `name` selects the code family:
/// `"bch"`, `"repetition"` or `"identity"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub t: usize,
}

impl CodeSpec {
    pub fn new(name: impl Into<String>, n: usize, k: usize, t: usize) -> Self {
        CodeSpec {
            name: name.into(),
            n,
            k,
            t,
        }
    }

    pub fn bch(n: usize, k: usize, t: usize) -> Self {
        Self::new("bch", n, k, t)
    }

    pub fn repetition(n: usize) -> Self {
        Self::new("repetition", n, 1, n.saturating_sub(1) / 2)
    }

    /// One-bit blocks with no redundancy: reproduction needs an exact match.
    pub fn identity() -> Self {
        Self::new("identity", 1, 1, 0)
    }

    /// Registry handle, e.g. `bch(127,71,9)`.
    pub fn handle(&self) -> String {
        format!("{}({},{},{})", self.name, self.n, self.k, self.t)
    }

    fn reject(&self, reason: impl Into<String>) -> Error {
        Error::CodeRejected {
            name: self.handle(),
            reason: reason.into(),
        }
    }

    /// Sanity bounds every family must satisfy.
    pub fn check_consistent(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(self.reject("need 0 < k <= n"));
        }
        if self.name == "identity" {
            return if self.n == self.k && self.t == 0 {
                Ok(())
            } else {
                Err(self.reject("identity code needs n = k and t = 0"))
            };
        }
        if self.t == 0 {
            return Err(self.reject("t must be at least 1"));
        }
        if 2 * self.t + 1 > self.n {
            return Err(self.reject("t exceeds (n-1)/2"));
        }
        if self.n - self.k < 2 * self.t {
            // distance 2t+1 cannot exceed n-k+1
            return Err(self.reject("t exceeds the Singleton bound (n-k)/2"));
        }
        Ok(())
    }

    /// Instantiates the family implementation. Does not self-test.
    pub fn build(&self) -> Result<Arc<dyn BinaryCode>> {
        self.check_consistent()?;
        let code: Arc<dyn BinaryCode> = match self.name.as_str() {
            "bch" => {
                let inner = Bch::new(self.n, self.t).map_err(|e| self.reject(e.to_string()))?;
                if inner.k() != self.k {
                    return Err(self.reject(format!(
                        "BCH({}, t={}) has k = {}, not {}",
                        self.n,
                        self.t,
                        inner.k(),
                        self.k
                    )));
                }
                Arc::new(BchCode {
                    spec: self.clone(),
                    inner,
                })
            }
            "repetition" => {
                if self.k != 1 {
                    return Err(self.reject("repetition codes carry one message bit"));
                }
                Arc::new(Repetition { spec: self.clone() })
            }
            "identity" => Arc::new(Identity { spec: self.clone() }),
            other => return Err(self.reject(format!("unknown code family {other:?}"))),
        };
        Ok(code)
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.handle())
    }
}

pub trait BinaryCode: Send + Sync + fmt::Debug {
    fn spec(&self) -> &CodeSpec;

    /// `message` has `k` bits; the result has `n`.
    fn encode(&self, message: &BitString) -> BitString;

    /// Message bits of the codeword nearest `word`, or `None` if the
    /// decoder detects more than `t` errors.
    fn decode(&self, word: &BitString) -> Option<BitString>;
}

#[derive(Debug)]
struct BchCode {
    spec: CodeSpec,
    inner: Bch,
}

impl BinaryCode for BchCode {
    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn encode(&self, message: &BitString) -> BitString {
        self.inner.encode(message)
    }

    fn decode(&self, word: &BitString) -> Option<BitString> {
        self.inner.decode(word)
    }
}

#[derive(Debug)]
struct Repetition {
    spec: CodeSpec,
}

impl BinaryCode for Repetition {
    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn encode(&self, message: &BitString) -> BitString {
        assert_eq!(message.len(), 1);
        vec![message.as_slice()[0]; self.spec.n].into()
    }

    fn decode(&self, word: &BitString) -> Option<BitString> {
        let ones = word.count_ones();
        let zeros = word.len() - ones;
        if ones.min(zeros) > self.spec.t {
            return None;
        }
        Some(vec![ones > zeros].into())
    }
}

#[derive(Debug)]
struct Identity {
    spec: CodeSpec,
}

impl BinaryCode for Identity {
    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn encode(&self, message: &BitString) -> BitString {
        message.clone()
    }

    fn decode(&self, word: &BitString) -> Option<BitString> {
        Some(word.clone())
    }
}

/// Round trip of `SELF_TEST_ROUNDS` random messages through encode, up to
/// `t` random flips and decode.
pub fn self_test(code: &dyn BinaryCode) -> Result<()> {
    let spec = code.spec().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(SELF_TEST_SEED);
    for round in 0..SELF_TEST_ROUNDS {
        let message: BitString = (0..spec.k).map(|_| rng.gen()).collect();
        let mut word = code.encode(&message);
        if word.len() != spec.n {
            return Err(spec.reject(format!("encoder produced {} bits", word.len())));
        }
        let weight = if round < 2 {
            round * spec.t
        } else {
            rng.gen_range(0..=spec.t)
        };
        for p in sample(&mut rng, spec.n, weight.min(spec.n)).into_iter() {
            word.flip(p);
        }
        if code.decode(&word).as_ref() != Some(&message) {
            return Err(spec.reject(format!(
                "self-test round {round} failed to correct {weight} errors"
            )));
        }
    }
    Ok(())
}

/// Codes available to key generation, selected by correction capability.
#[derive(Debug, Default, Clone)]
pub struct CodeRegistry {
    codes: Vec<Arc<dyn BinaryCode>>,
}

impl CodeRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Identity, repetition(15) and BCH(127, 71, 9).
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        for spec in [
            CodeSpec::identity(),
            CodeSpec::repetition(15),
            CodeSpec::bch(127, 71, 9),
        ] {
            reg.register(spec).expect("built-in code passes self-test");
        }
        reg
    }

    /// Process-wide default registry, built on first use.
    pub fn global() -> &'static CodeRegistry {
        static GLOBAL: OnceLock<CodeRegistry> = OnceLock::new();
        GLOBAL.get_or_init(CodeRegistry::with_defaults)
    }

    pub fn register(&mut self, spec: CodeSpec) -> Result<String> {
        let code = spec.build()?;
        self.register_code(code)
    }

    /// Registers a custom implementation after checking its parameters and
    /// running the round-trip self-test.
    pub fn register_code(&mut self, code: Arc<dyn BinaryCode>) -> Result<String> {
        code.spec().check_consistent()?;
        self_test(code.as_ref())?;
        let handle = code.spec().handle();
        self.codes.retain(|c| c.spec().handle() != handle);
        self.codes.push(code);
        Ok(handle)
    }

    pub fn get(&self, handle: &str) -> Option<Arc<dyn BinaryCode>> {
        self.codes
            .iter()
            .find(|c| c.spec().handle() == handle)
            .cloned()
    }

    pub fn specs(&self) -> impl Iterator<Item = &CodeSpec> {
        self.codes.iter().map(|c| c.spec())
    }

    /// Among codes correcting at least `tolerance` errors per block, the one
    /// carrying the most message bits for a `len`-bit input; ties go to the
    /// shorter padded length, then the smaller `t`.
    pub fn select(&self, tolerance: usize, len: usize) -> Result<Arc<dyn BinaryCode>> {
        self.codes
            .iter()
            .filter(|c| c.spec().t >= tolerance)
            .max_by_key(|c| {
                let s = c.spec();
                let blocks = len.div_ceil(s.n);
                (
                    blocks * s.k,
                    std::cmp::Reverse(blocks * s.n),
                    std::cmp::Reverse(s.t),
                )
            })
            .cloned()
            .ok_or(Error::NoCode { tolerance })
    }
}
