//! Stable float formatting for emitted files.
//!
//! Every CSV/JSON surface prints floats through [`sig12`] so identical inputs
//! and seeds produce byte-identical outputs.

/// Formats with 12 significant digits in scientific notation; zero and
/// non-finite values get fixed spellings that `f64::from_str` parses back.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.11e}")
}
