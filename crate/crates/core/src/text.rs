//! Number formatting for the text and CSV outputs.

/// Formats `x` with exactly `digits` significant digits, in plain decimal
/// notation for moderate magnitudes and scientific notation otherwise.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Let the scientific formatter do the rounding, then read back the exponent
    // so values like 9.9999…95 land in the right decade.
    let sci = format!("{:.*e}", digits - 1, x);
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..15).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}
