//! Text serialization helpers shared by every CSV writer.

/// Significant digits kept by every CSV writer in the crate.
pub const CSV_SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to [`CSV_SIGNIFICANT_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", CSV_SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest decimal text of `x` rounded to 12 significant digits.
///
/// `format_sig(x).parse() == quantize(x)`, and quantizing is idempotent, so a
/// value that went through a CSV file once survives further round trips
/// bit-for-bit.
pub fn format_sig(x: f64) -> String {
    let q = quantize(x);
    if q == 0.0 {
        // normalizes -0
        return "0".to_string();
    }
    format!("{q}")
}
