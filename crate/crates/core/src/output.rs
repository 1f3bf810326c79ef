//! Fixed-width number formatting shared by every CSV writer.

/// Probabilities and shares: six decimal places.
pub fn fmt_prob(x: f64) -> String {
    format!("{x:.6}")
}

/// Rates and densities: scientific notation, six significant digits.
pub fn fmt_rate(x: f64) -> String {
    format!("{x:.5e}")
}

/// Shortest round-trip rendering, for axis values echoed from the input.
pub fn fmt_axis(x: f64) -> String {
    format!("{x}")
}
