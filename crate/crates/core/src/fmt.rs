//! Float formatting for tabular exports.

/// Significant digits written for every float in CSV output.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with [`SIG_DIGITS`] significant digits, in plain notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return format!("{:.*}", SIG_DIGITS - 1, 0.0);
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", SIG_DIGITS - 1, x)
    }
}
