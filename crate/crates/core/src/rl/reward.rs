/// Lower clamp applied before taking logs.
pub const MIN_PROB: f64 = 1e-9;

/// Mean log recall over all items; never positive.
pub fn reward(recall: &[f64]) -> f64 {
    if recall.is_empty() {
        return 0.0;
    }
    let sum: f64 = recall.iter().map(|p| p.clamp(MIN_PROB, 1.0).ln()).sum();
    sum / recall.len() as f64
}
