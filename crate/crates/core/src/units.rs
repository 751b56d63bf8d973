//! Power and ratio unit conversions. Everything inside the library is linear
//! watts; these helpers exist for the CLI and report boundaries.

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Linear ratio to decibels.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        let w = dbm_to_watts(15.0);
        assert!((w - 0.031_622_776_6).abs() < 1e-11);
        assert!((watts_to_dbm(w) - 15.0).abs() < 1e-9);
        assert!((dbm_to_watts(-94.0) - 3.981_071_705_534_97e-13).abs() < 1e-24);
    }

    #[test]
    fn db_round_trip() {
        for x in [1e-6, 0.5, 1.0, 123.4, 1e7] {
            assert!((from_db(to_db(x)) / x - 1.0).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn dbm_round_trip_is_exact(dbm in -150.0..60.0f64) {
            proptest::prop_assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-9);
        }
    }
}
