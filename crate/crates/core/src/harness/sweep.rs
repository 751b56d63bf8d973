//! Parameter sweeps over a grid of scenarios, schemes and seeds.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::csv_out::{FailureRow, MeanRow, SweepRow};
use super::experiment::ExperimentConfig;
use super::scheme::{run_scheme, SchemeId};
use crate::error::{Error, Result};
use crate::units::to_db;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "RA_OPT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Transmit power budget in dBm.
    TransmitPower,
    /// Angular spread of the user arc in radians.
    ArcSpread,
    /// Antenna count, with three groups of four users.
    Antennas,
    /// Element directivity exponent.
    Directivity,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TransmitPower => "transmit_power_dbm",
            SweepAxis::ArcSpread => "arc_spread_rad",
            SweepAxis::Antennas => "num_antennas",
            SweepAxis::Directivity => "directivity",
        }
    }

    /// The scenario at one grid value.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::TransmitPower => cfg.transmit_power_dbm = value,
            SweepAxis::ArcSpread => cfg.arc_spread_rad = value,
            SweepAxis::Antennas => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "antenna count must be a positive integer, got {value}"
                    )));
                }
                cfg.num_antennas = value as usize;
                cfg.group_sizes = vec![4, 4, 4];
            }
            SweepAxis::Directivity => cfg.directivity = value,
        }
        cfg.geometry()?;
        Ok(cfg)
    }
}

/// A full sweep: base scenario, axis grid, schemes and seeds.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    /// Transmit power 0 to 20 dBm in 5 dB steps.
    pub fn power(base: ExperimentConfig, seeds: Vec<u64>) -> Self {
        let schemes = SchemeId::standard(base.random_realizations);
        Self {
            base,
            axis: SweepAxis::TransmitPower,
            values: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            schemes,
            seeds,
        }
    }

    /// Arc spread from pi/6 to pi, with the optimized scheme also run at
    /// rotation limits pi/6 and pi/12.
    pub fn angle(base: ExperimentConfig, seeds: Vec<u64>) -> Self {
        let mut schemes = SchemeId::standard(base.random_realizations);
        schemes.insert(
            1,
            SchemeId::RaOptimized {
                max_zenith: Some(PI / 6.0),
            },
        );
        schemes.insert(
            2,
            SchemeId::RaOptimized {
                max_zenith: Some(PI / 12.0),
            },
        );
        Self {
            base,
            axis: SweepAxis::ArcSpread,
            values: (1..=6).map(|k| k as f64 * PI / 6.0).collect(),
            schemes,
            seeds,
        }
    }

    /// 4 to 20 antennas serving three groups of four.
    pub fn antennas(base: ExperimentConfig, seeds: Vec<u64>) -> Self {
        let schemes = SchemeId::standard(base.random_realizations);
        Self {
            base,
            axis: SweepAxis::Antennas,
            values: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            schemes,
            seeds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }

    pub fn num_runs(&self) -> usize {
        self.values.len() * self.schemes.len() * self.seeds.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// Sorted by axis value, scheme label, then seed.
    pub rows: Vec<SweepRow>,
    pub failures: Vec<FailureRow>,
}

impl SweepResult {
    /// Linear mean over seeds for every (axis value, scheme) pair, in row order.
    pub fn means(&self) -> Vec<MeanRow> {
        let mut groups: Vec<(f64, String, Vec<&SweepRow>)> = Vec::new();
        for row in &self.rows {
            match groups.last_mut() {
                Some((v, s, members)) if *v == row.axis_value && *s == row.scheme => {
                    members.push(row)
                }
                _ => groups.push((row.axis_value, row.scheme.clone(), vec![row])),
            }
        }
        groups
            .into_iter()
            .map(|(axis_value, scheme, members)| {
                let n = members.len() as f64;
                let mean = members.iter().map(|r| r.min_sinr_linear).sum::<f64>() / n;
                MeanRow {
                    axis_value,
                    scheme,
                    seeds: members.len(),
                    mean_min_sinr_linear: mean,
                    mean_min_sinr_db: to_db(mean),
                    mean_iterations: members.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                }
            })
            .collect()
    }

    /// `(axis value, mean min-SINR in dB)` curves keyed by scheme label.
    pub fn mean_db_by_scheme(&self) -> BTreeMap<String, Vec<(f64, f64)>> {
        let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for m in self.means() {
            out.entry(m.scheme).or_default().push((m.axis_value, m.mean_min_sinr_db));
        }
        out
    }
}

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.axis_value
        .total_cmp(&b.axis_value)
        .then_with(|| a.scheme.cmp(&b.scheme))
        .then_with(|| a.seed.cmp(&b.seed))
}

/// Worker count from `RA_OPT_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every grid point, scheme and seed. Individual failures are
/// collected, not propagated; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut jobs = Vec::with_capacity(spec.num_runs());
    for &value in &spec.values {
        let cfg = spec.axis.apply(&spec.base, value)?;
        let system = cfg.system()?;
        let geometry = cfg.geometry()?;
        for &scheme in &spec.schemes {
            for &seed in &spec.seeds {
                jobs.push((value, scheme, seed, system.clone(), geometry.clone()));
            }
        }
    }

    let work = || {
        jobs.par_iter()
            .map(|(value, scheme, seed, system, geometry)| {
                let outcome = run_scheme(*scheme, system, geometry, *seed);
                log::info!("{} = {value}, {scheme}, seed {seed}: {:?}", spec.axis.name(), outcome.as_ref().map(|o| o.min_sinr_db()));
                (*value, scheme.label(), *seed, outcome)
            })
            .collect::<Vec<_>>()
    };
    let outcomes = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut result = SweepResult::default();
    for (axis_value, scheme, seed, outcome) in outcomes {
        match outcome {
            Ok(o) => result.rows.push(SweepRow {
                axis_value,
                scheme,
                seed,
                min_sinr_linear: o.min_sinr,
                min_sinr_db: o.min_sinr_db(),
                iterations: o.iterations,
                wall_ms: o.wall_time.as_secs_f64() * 1e3,
            }),
            Err(e) => result.failures.push(FailureRow {
                axis_value,
                scheme,
                seed,
                error: e.to_string(),
            }),
        }
    }
    result.rows.sort_by(row_order);
    result.failures.sort_by(|a, b| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then_with(|| a.scheme.cmp(&b.scheme))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        let mut base = ExperimentConfig::default();
        base.random_realizations = 2;
        let mut spec = SweepSpec::power(base, vec![2, 0]);
        spec.values = vec![10.0, 0.0];
        spec
    }

    #[test]
    fn row_count_and_order() {
        let spec = small_spec();
        let result = run_sweep(&spec).unwrap();
        assert!(result.failures.is_empty());
        assert_eq!(result.rows.len(), 2 * 4 * 2);
        assert!(result.rows.windows(2).all(|w| row_order(&w[0], &w[1]) == Ordering::Less));
        assert_eq!(result.rows[0].axis_value, 0.0);
        assert_eq!(result.rows[0].seed, 0);
        let means = result.means();
        assert_eq!(means.len(), 2 * 4);
        assert!(means.iter().all(|m| m.seeds == 2));
    }

    #[test]
    fn default_grids() {
        let base = ExperimentConfig::default();
        assert_eq!(SweepSpec::power(base.clone(), vec![0]).num_runs(), 5 * 4);
        let angle = SweepSpec::angle(base.clone(), vec![0, 1]);
        assert_eq!(angle.num_runs(), 6 * 6 * 2);
        assert!((angle.values[5] - PI).abs() < 1e-15);
        let labels: Vec<_> = angle.schemes.iter().map(|s| s.label()).collect();
        assert!(labels.contains(&"ra_optimized_tmax30".to_string()));
        assert!(labels.contains(&"ra_optimized_tmax15".to_string()));
        let antennas = SweepSpec::antennas(base.clone(), vec![0]);
        antennas.validate().unwrap();
        let cfg = SweepAxis::Antennas.apply(&base, 12.0).unwrap();
        assert_eq!(cfg.group_sizes, vec![4, 4, 4]);
        assert!(SweepAxis::Antennas.apply(&base, 2.5).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = small_spec();
        spec.seeds.clear();
        assert!(run_sweep(&spec).is_err());
        let mut spec = small_spec();
        spec.values.clear();
        assert!(spec.validate().is_err());
        let mut spec = small_spec();
        spec.axis = SweepAxis::ArcSpread;
        spec.values = vec![4.0];
        assert!(spec.validate().is_err());
    }
}
