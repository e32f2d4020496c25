//! Text conventions shared by every exported table.

/// A real with 17 significant digits, `.` as decimal separator.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `4·√(p(1−p)/count)`: the four-sigma Monte Carlo band around a frequency.
pub fn sigma_band(p: f64, count: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    4.0 * (p * (1.0 - p) / count.max(1) as f64).sqrt()
}
