//! Shared numeric helpers.

/// Kahan-Babuska compensated summation. Used for long inner sums where plain
/// accumulation would eat into certified tolerances.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Formats a float with nine significant digits for report files; exact zero
/// prints as "0.0" so byte-level comparisons of reports stay stable.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:.8e}")
    }
}
