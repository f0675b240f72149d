//! Seed sweeps: independent runs in parallel, then one summary table.

use std::collections::HashSet;
use std::env;
use std::fs;
use std::path::Path;

use popdyn::oracle::quantile;
use rayon::prelude::*;

use crate::record::{self, Format, RunRecord};
use crate::{load_scenario, Failure};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const THREADS_VAR: &str = "POPDYN_THREADS";

const FOOTER_QUANTILES: [(&str, f64); 3] = [("q10", 0.1), ("q50", 0.5), ("q90", 0.9)];

fn threads() -> Result<usize, Failure> {
    match env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::Invalid(format!("{THREADS_VAR}={v:?} is not a positive integer"))),
        },
    }
}

pub fn check_seeds(seeds: &[u64]) -> Result<(), Failure> {
    if seeds.is_empty() {
        return Err(Failure::Invalid("--seeds: at least one seed is required".into()));
    }
    let mut seen = HashSet::new();
    for s in seeds {
        if !seen.insert(s) {
            return Err(Failure::Invalid(format!("--seeds: seed {s} given twice")));
        }
    }
    Ok(())
}

pub fn cmd_sweep(scenario_path: &Path, seeds: &[u64], out: &Path) -> Result<(), Failure> {
    check_seeds(seeds)?;
    let (scenario, digest) = load_scenario(scenario_path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads()?)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::create_dir_all(out)?;

    let results: Vec<(u64, Result<RunRecord, String>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let run = || -> popdyn::Result<RunRecord> {
                    let scenario = scenario.with_seed(seed);
                    let snaps = scenario.run()?;
                    let dir = out.join(format!("seed-{seed}"));
                    fs::create_dir_all(&dir)?;
                    record::write_run(&dir, &scenario, &digest, &snaps, false, Format::Csv)
                };
                (seed, run().map_err(|e| e.to_string()))
            })
            .collect()
    });

    write_summary(&out.join(SUMMARY_CSV), scenario.events.len() + 1, &results)?;
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(seed, r)| r.as_ref().err().map(|e| format!("seed {seed}: {e}")))
        .collect();
    println!("{} of {} seeds completed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(failed.join("; ")))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per seed, in the order given, then a footer of quantile rows over
/// the successful runs and a `count` row.
fn write_summary(path: &Path, periods: usize, results: &[(u64, Result<RunRecord, String>)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut header = vec!["seed".to_string(), "status".to_string()];
    for k in 0..periods {
        header.push(format!("p{k}_convergence"));
        header.push(format!("p{k}_holding"));
        header.push(format!("p{k}_censored"));
    }
    let io = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(&header).map_err(io)?;

    let mut convergence: Vec<Vec<f64>> = vec![Vec::new(); periods];
    let mut holding: Vec<Vec<f64>> = vec![Vec::new(); periods];
    let mut censored = vec![0usize; periods];
    for (seed, result) in results {
        let mut row = vec![seed.to_string()];
        match result {
            Ok(rec) => {
                row.push("ok".into());
                for (k, p) in rec.periods.iter().enumerate() {
                    if let Some(c) = p.convergence_time {
                        convergence[k].push(c);
                    }
                    if let Some(h) = p.holding {
                        holding[k].push(h.duration);
                        censored[k] += usize::from(h.censored);
                    }
                    row.push(fmt_opt(p.convergence_time));
                    row.push(fmt_opt(p.holding.map(|h| h.duration)));
                    row.push(p.holding.map(|h| h.censored.to_string()).unwrap_or_default());
                }
            }
            Err(e) => {
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(String::new(), 3 * periods));
            }
        }
        w.write_record(&row).map_err(io)?;
    }

    for v in convergence.iter_mut().chain(holding.iter_mut()) {
        v.sort_by(f64::total_cmp);
    }
    for (name, level) in FOOTER_QUANTILES {
        let mut row = vec![name.to_string(), String::new()];
        for k in 0..periods {
            row.push(fmt_opt(quantile(&convergence[k], level)));
            row.push(fmt_opt(quantile(&holding[k], level)));
            row.push(String::new());
        }
        w.write_record(&row).map_err(io)?;
    }
    let mut row = vec!["count".to_string(), String::new()];
    for k in 0..periods {
        row.push(convergence[k].len().to_string());
        row.push(holding[k].len().to_string());
        row.push(censored[k].to_string());
    }
    w.write_record(&row).map_err(io)?;
    w.flush()?;
    Ok(())
}
