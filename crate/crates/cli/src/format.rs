/// Rounds to 12 significant digits and prints the shortest decimal that
/// round-trips that value (`-0.5`, `1.0`, `-1.83697019872e-16`).
pub fn significant12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

/// Rounds to 12 decimal places; negative zero prints as `0.0`.
pub fn fixed12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded = (v * 1e12).round() / 1e12;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

pub fn join_values(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| significant12(v))
        .collect::<Vec<_>>()
        .join(" ")
}
