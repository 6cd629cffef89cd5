//! Small order-statistics helpers used across the crate.

/// Median of a slice. Returns `f64::NAN` for an empty slice.
/// For an even number of elements, the average of the two middle
/// order statistics is returned.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median absolute deviation about the median, scaled by 1.4826 so the
/// estimate is consistent for the standard deviation under normality.
pub fn mad(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let center = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    1.4826 * median(&deviations)
}

/// Ceiling of a fractional count, guarded against floating-point noise.
///
/// Products such as `0.9 * 200.0` evaluate to `180.00000000000003`, which a
/// naive ceiling would round up to 181. Subtracting a tolerance far below
/// any meaningful fraction of a count restores the intended value while
/// leaving genuinely fractional inputs (e.g. `179.5`) untouched.
pub(crate) fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}
