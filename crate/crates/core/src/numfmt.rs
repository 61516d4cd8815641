//! Fixed-precision decimal output shared by every writer in the crate.

/// Significant digits used for all numeric output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to `digits` significant decimal digits.
///
/// The result is the double nearest to the rounded decimal, so rounding is
/// idempotent and printing it with `{}` yields the short decimal form.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, shortest form.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x, SIGNIFICANT_DIGITS);
    if r == 0.0 {
        // normalise -0
        return "0".to_string();
    }
    format!("{r}")
}

/// Rounds every number inside a JSON document to [`SIGNIFICANT_DIGITS`].
pub fn round_json(value: &mut serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    let r = round_sig(x, SIGNIFICANT_DIGITS);
                    let r = if r == 0.0 { 0.0 } else { r };
                    if let Some(num) = serde_json::Number::from_f64(r) {
                        *n = num;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
