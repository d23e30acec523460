//! Fuzzy extraction over fingerprints: block codes, the code registry and
//! the code-offset Gen/Rep pair.

mod bch;
mod code;
mod extractor;
mod gf;

pub use bch::Bch;
pub use code::{self_test, BinaryCode, CodeRegistry, CodeSpec};
pub use extractor::{
    gen, gen_with, rep, ExtractedKey, HelperData, HELPER_VERSION, MAX_KEY_BITS, SALT_BYTES,
};
pub use gf::GaloisField;
