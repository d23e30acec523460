//! Fingerprint to key and back, with and without bit errors.

use qpuf::fingerprint::{build_fingerprint, fmt_value_base16, EncodingParams};
use qpuf::fuzzy::{gen, rep, CodeRegistry, HelperData};

fn main() -> qpuf::Result<()> {
    let params = EncodingParams::frequency_default();
    let freqs = [4.961e9, 5.058e9, 5.003e9, 5.121e9, 4.879e9];
    for f in freqs {
        println!(
            "{:.3} GHz -> {}",
            f / 1e9,
            fmt_value_base16(f - params.mean_ideal_hz, &params)?
        );
    }
    let fp = build_fingerprint(&freqs, &params)?;
    println!("fingerprint ({} bits) {}", fp.len(), fp.to_hex());

    println!("\nregistered codes:");
    for spec in CodeRegistry::global().specs() {
        println!("  {}", spec.handle());
    }

    let (key, helper) = gen(&fp, 8, 240, 2024)?;
    println!(
        "\nselected {} over {} block(s)",
        helper.code.handle(),
        helper.blocks()
    );
    println!("key    {}", key.to_hex());
    let json = helper.to_json();
    println!("helper {} bytes of JSON", json.len());
    let helper = HelperData::from_json(&json)?;

    for flips in [0usize, 4, 8, 9, 12, 27] {
        let positions: Vec<usize> = (0..flips).map(|i| (i * 37) % fp.len()).collect();
        let result = match rep(&fp.with_flips(&positions), &helper) {
            Ok(k) if k == key => "same key".to_string(),
            Ok(_) => "different key".to_string(),
            Err(e) => e.to_string(),
        };
        println!("{flips:2} flipped bits: {result}");
    }
    Ok(())
}
