//! `popdyn oracle ...`: small tables from the reference computations.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use popdyn::oracle::{
    detection_fade_reference, epidemic_time_reference, fade_bound, fmv_distribution, max_geometric_stats, quantile,
};
use popdyn::sim::rng_from_seed;

use crate::Failure;

#[derive(Args)]
pub struct Common {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the raw per-trial values here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum OracleCommand {
    /// First missing value of n geometric draws.
    FmvDist(Common),
    /// Maximum of n geometric draws against its high-probability range.
    MaxGeom(Common),
    /// Completion time of a one-source max epidemic.
    Epidemic(Common),
    /// Time for a saturated signal to decay to zero everywhere.
    Fade {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        q: u32,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
}

fn write_values(path: Option<&Path>, column: &str, values: &[f64]) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let runtime = |e: csv::Error| Failure::Runtime(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(["trial", column]).map_err(runtime)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()]).map_err(runtime)?;
    }
    w.flush()?;
    Ok(())
}

fn print_quantiles(sorted: &[f64]) {
    for level in [0.1, 0.5, 0.9] {
        println!("q{:<11} {}", (level * 100.0) as u32, quantile(sorted, level).unwrap_or(f64::NAN));
    }
    println!("{:<12} {}", "max", sorted.last().copied().unwrap_or(f64::NAN));
}

pub fn cmd_oracle(which: OracleCommand) -> Result<(), Failure> {
    match which {
        OracleCommand::FmvDist(c) => {
            let mut rng = rng_from_seed(c.seed);
            let dist = fmv_distribution(c.n, c.trials, &mut rng)?;
            let values: Vec<f64> = dist.observations.iter().map(|&v| f64::from(v)).collect();
            println!("{:<12} {}", "n", c.n);
            println!("{:<12} {}", "trials", c.trials);
            print_quantiles(&values);
            write_values(c.csv.as_deref(), "fmv", &values)
        }
        OracleCommand::MaxGeom(c) => {
            let mut rng = rng_from_seed(c.seed);
            let stats = max_geometric_stats(c.n, c.trials, &mut rng)?;
            let mut values: Vec<f64> = stats.maxima.iter().map(|&v| f64::from(v)).collect();
            println!("{:<12} {}", "n", c.n);
            println!("{:<12} {}", "trials", c.trials);
            println!("{:<12} [{:.3}, {:.3}]", "range", stats.low, stats.high);
            println!("{:<12} {}", "in_range", stats.in_range_fraction);
            write_values(c.csv.as_deref(), "max", &values)?;
            values.sort_by(f64::total_cmp);
            print_quantiles(&values);
            Ok(())
        }
        OracleCommand::Epidemic(c) => {
            let mut rng = rng_from_seed(c.seed);
            let stats = epidemic_time_reference(c.n, c.trials, &mut rng)?;
            println!("{:<12} {}", "n", c.n);
            println!("{:<12} {}", "trials", c.trials);
            println!("{:<12} {:.3}", "bound", stats.bound);
            println!("{:<12} {}", "within", stats.fraction_within_bound());
            print_quantiles(&stats.times);
            write_values(c.csv.as_deref(), "time", &stats.times)
        }
        OracleCommand::Fade { common: c, q, alpha } => {
            if c.trials == 0 {
                return Err(Failure::Invalid("invalid parameter trials: must be at least 1".into()));
            }
            let mut rng = rng_from_seed(c.seed);
            let mut times = Vec::with_capacity(c.trials);
            for _ in 0..c.trials {
                times.push(detection_fade_reference(c.n, q, alpha, &mut rng)?.time);
            }
            let bound = fade_bound(c.n, q, alpha);
            write_values(c.csv.as_deref(), "time", &times)?;
            times.sort_by(f64::total_cmp);
            println!("{:<12} {}", "n", c.n);
            println!("{:<12} {}", "trials", c.trials);
            println!("{:<12} {:.3}", "bound", bound);
            println!(
                "{:<12} {}",
                "within",
                times.iter().filter(|&&t| t <= bound).count() as f64 / times.len() as f64
            );
            print_quantiles(&times);
            Ok(())
        }
    }
}
