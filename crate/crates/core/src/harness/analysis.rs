//! Post-processing of sweep means.

/// Linear interpolation of the power at which `curve` first reaches `level`.
/// `curve` holds `(power_dbm, sinr_db)` pairs sorted by power.
pub fn power_for_level(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if curve.first()?.1 >= level {
        return Some(curve[0].0);
    }
    curve.windows(2).find_map(|w| {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        (s0 < level && s1 >= level).then(|| p0 + (level - s0) * (p1 - p0) / (s1 - s0))
    })
}

/// Value of `curve` at `power`, interpolated linearly.
pub fn level_at(curve: &[(f64, f64)], power: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        (p0 <= power && power <= p1).then(|| {
            if p1 == p0 {
                s0
            } else {
                s0 + (power - p0) * (s1 - s0) / (p1 - p0)
            }
        })
    })
}

/// Horizontal gap in dB between two SINR-versus-power curves: the power the
/// baseline needs at `reference_dbm`, minus the power the improved curve
/// needs for the same SINR. `None` when the improved curve never reaches
/// that level on the grid.
pub fn power_gap_db(baseline: &[(f64, f64)], improved: &[(f64, f64)], reference_dbm: f64) -> Option<f64> {
    let level = level_at(baseline, reference_dbm)?;
    Some(reference_dbm - power_for_level(improved, level)?)
}
