//! Number formatting shared by the CSV emitters.

/// 17 significant digits in scientific notation; parses back to the same `f64`.
/// Negative zero is written as `0`.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
