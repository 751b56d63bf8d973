use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ra_multicast::ao;
use ra_multicast::conic::build_beamforming_program;
use ra_multicast::geometry::channel_matrix;
use ra_multicast::harness::{self, run_scheme, run_sweep, ExperimentConfig, SchemeId, SweepSpec};
use ra_multicast::oracle;

#[derive(Debug, Parser)]
#[command(name = "ra-opt", version, about = "Max-min SINR multicast beamforming with rotatable antennas")]
struct Cli {
    /// Scenario file (JSON). Built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Print only the essential result lines.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize one scenario and print the report.
    Solve {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ra_optimized", value_parser = parse_scheme)]
        scheme: SchemeId,
        /// Write the first beamforming conic program to this file.
        #[arg(long, value_name = "PATH")]
        dump_program: Option<PathBuf>,
    },
    /// Min-SINR versus transmit power, 0 to 20 dBm.
    SweepPower(SweepArgs),
    /// Min-SINR versus user arc spread, with rotation-limit variants.
    SweepAngle(SweepArgs),
    /// Min-SINR versus antenna count, three groups of four users.
    SweepAntennas(SweepArgs),
    /// Run the finite-difference, curvature and brute-force checks.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the exhaustive boresight search.
        #[arg(long)]
        skip_grid: bool,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Output CSV. Seed means go to `<stem>.mean.csv`.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Seed count (`20`), range (`0..20`) or list (`1,4,9`).
    #[arg(long, default_value = "1", value_parser = parse_seeds)]
    seeds: Seeds,
    /// First seed when `--seeds` is a count.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to these schemes (repeatable).
    #[arg(long, value_parser = parse_scheme)]
    scheme: Vec<SchemeId>,
    /// Replace the default grid with these comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    fn resolve(&self, first: u64) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (first..first + n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("invalid seed list '{s}'");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b <= a {
            return Err(bad());
        }
        return Ok(Seeds::List((a..b).collect()));
    }
    if s.contains(',') {
        let v = s
            .split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        return Ok(Seeds::List(v));
    }
    match s.trim().parse::<u64>() {
        Ok(0) | Err(_) => Err(bad()),
        Ok(n) => Ok(Seeds::Count(n)),
    }
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.parse().map_err(|e: ra_multicast::Error| e.to_string())
}

/// Bad input: exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_config(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| UsageError(e.to_string()).into()),
        None => Ok(ExperimentConfig::default()),
    }
}

fn solve(cfg: &ExperimentConfig, seed: u64, scheme: SchemeId, dump: Option<&Path>, quiet: bool) -> anyhow::Result<()> {
    let system = cfg.system()?;
    let geometry = cfg.geometry()?;
    if let Some(path) = dump {
        let (_, f, z) = ao::initialize(&system, &geometry, seed)?;
        let h = channel_matrix(&geometry, &f, &system)?;
        let program = build_beamforming_program(&h, &z, &geometry, &system)?;
        std::fs::write(path, program.program.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    match scheme {
        SchemeId::RaOptimized { max_zenith } => {
            let mut system = system;
            if let Some(limit) = max_zenith {
                system.max_zenith_rad = limit;
            }
            let report = ao::run_ao(&system, &geometry, seed)?;
            println!("min-SINR {:.4} dB ({:.6e})", report.min_sinr_db(), report.min_sinr);
            println!("iterations {} ({})", report.iterations, report.termination.as_str());
            if !quiet {
                for (i, v) in report.history_db().iter().enumerate() {
                    println!("  iter {i:>3}  {v:.6} dB");
                }
                println!(
                    "  before normalization {:.6} dB, after {:.6} dB",
                    10.0 * report.pre_normalization_min_sinr.log10(),
                    10.0 * report.normalized_min_sinr.log10()
                );
                for (n, c) in report.pointing.columns().iter().enumerate() {
                    let zenith = c.x.clamp(-1.0, 1.0).acos().to_degrees();
                    let azimuth = c.z.atan2(c.y).to_degrees();
                    println!("  antenna {n}: zenith {zenith:.2} deg, azimuth {azimuth:.2} deg");
                }
                println!("  curvature doublings {}", report.doublings);
                println!("  wall time {:.1} ms", report.wall_time.as_secs_f64() * 1e3);
            }
        }
        other => {
            let outcome = run_scheme(other, &system, &geometry, seed)?;
            println!("min-SINR {:.4} dB ({:.6e})", outcome.min_sinr_db(), outcome.min_sinr);
            println!("iterations {}", outcome.iterations);
            if !quiet {
                println!("  scheme {other}");
                println!("  wall time {:.1} ms", outcome.wall_time.as_secs_f64() * 1e3);
            }
        }
    }
    Ok(())
}

fn sweep(mut spec: SweepSpec, args: &SweepArgs, quiet: bool) -> anyhow::Result<bool> {
    if !args.scheme.is_empty() {
        spec.schemes = args.scheme.clone();
    }
    if !args.values.is_empty() {
        spec.values = args.values.clone();
    }
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    if !quiet {
        eprintln!(
            "{} runs: {} values x {} schemes x {} seeds",
            spec.num_runs(),
            spec.values.len(),
            spec.schemes.len(),
            spec.seeds.len()
        );
    }
    let result = run_sweep(&spec)?;
    let written = harness::write_tables(&args.out, &result.rows, &result.means(), &result.failures)?;
    if !quiet {
        for m in result.means() {
            println!(
                "{:>12} {:<22} {:>9.4} dB",
                harness::format_float(m.axis_value),
                m.scheme,
                m.mean_min_sinr_db
            );
        }
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    for f in &result.failures {
        eprintln!("failed: {} {} seed {}: {}", harness::format_float(f.axis_value), f.scheme, f.seed, f.error);
    }
    Ok(result.failures.is_empty())
}

fn validate(seed: u64, skip_grid: bool) -> anyhow::Result<bool> {
    let mut ok = true;
    println!("derivative checks");
    let fd = oracle::finite_difference_suite(seed, 100);
    print!("{fd}");
    ok &= fd.passed();
    println!("curvature bounds");
    let lip = oracle::lipschitz_sampling_suite(seed, 100);
    print!("{lip}");
    ok &= lip.passed();
    if !skip_grid {
        println!("exhaustive boresight search");
        for instance in oracle::TinyInstance::reference_set() {
            let result = oracle::grid_search_joint(&instance, seed, 0.02)?;
            println!("{result}");
            ok &= result.passed;
        }
    }
    println!("{}", if ok { "all checks passed" } else { "some checks failed" });
    Ok(ok)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Solve {
            seed,
            scheme,
            dump_program,
        } => solve(&cfg, seed, scheme, dump_program.as_deref(), cli.quiet).map(|_| true),
        Command::SweepPower(args) => {
            let seeds = args.seeds.resolve(args.seed);
            sweep(SweepSpec::power(cfg, seeds), &args, cli.quiet)
        }
        Command::SweepAngle(args) => {
            let seeds = args.seeds.resolve(args.seed);
            sweep(SweepSpec::angle(cfg, seeds), &args, cli.quiet)
        }
        Command::SweepAntennas(args) => {
            let seeds = args.seeds.resolve(args.seed);
            sweep(SweepSpec::antennas(cfg, seeds), &args, cli.quiet)
        }
        Command::Validate { seed, skip_grid } => {
            if cli.config.is_some() {
                bail!(UsageError("validate uses built-in instances and takes no --config".into()));
            }
            validate(seed, skip_grid)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("3").unwrap().resolve(10), vec![10, 11, 12]);
        assert_eq!(parse_seeds("2..5").unwrap().resolve(0), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7, 1").unwrap().resolve(0), vec![7, 1]);
        for bad in ["0", "5..5", "a", "1,,2", "-1"] {
            assert!(parse_seeds(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_as_clap_expects() {
        Cli::command().debug_assert();
    }
}
