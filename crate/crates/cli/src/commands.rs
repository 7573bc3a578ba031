//! Subcommand implementations. Each returns the process exit code.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};

use mountain_pass::classifier::Verdict;
use mountain_pass::field::CorpusMember;
use mountain_pass::solve::solve;
use mountain_pass::sweep::{self, cluster_limits, SweepMethod};

use crate::config::{Cli, Command, CorpusCommand, CorpusRunArgs, SolveArgs, SweepArgs};
use crate::report;
use crate::suite::{self, CriterionResult, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Runs `f` on a pool of `workers` threads; 0 keeps the global pool.
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

/// Sequential build: the worker count is accepted and ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

pub fn run(cli: Cli) -> Result<i32> {
    let workers = cli.workers;
    match cli.command {
        Command::Solve(args) => with_workers(workers, || cmd_solve(&args))?,
        Command::Sweep(args) => with_workers(workers, || cmd_sweep(&args))?,
        Command::Corpus(CorpusCommand::List) => cmd_corpus_list(),
        Command::Corpus(CorpusCommand::Run(args)) => cmd_corpus(&args, workers),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let config = args.config()?;
    for w in config.problem.field.warnings() {
        eprintln!("warning: {w:?}");
    }
    let (run, class) = solve(config.problem, &config.settings, &config.tolerances)?;
    let files = report::write_solve(&args.out_dir, args, &run, &class)?;
    println!("c_best  {:.9}", class.c_best);
    println!("verdict {:?}", class.verdict);
    if let Some(w) = &class.critical_witness {
        println!("witness {:?} f {:.9} residual {:.3e}", w.x, w.f, w.residual);
    }
    if let Some(t) = &class.tangency_trace {
        println!("tangency trace: {} entries", t.len());
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(match class.verdict {
        Verdict::Critical | Verdict::TangencyAtInfinity => EXIT_OK,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let field = args.field.build(None)?;
    if !field.is_smooth() {
        bail!("sweeps need a smooth field; `{}` has kinks", field.name());
    }
    let dim = field.dim();
    let method = if args.exhaustive {
        if dim != 3 {
            bail!("--exhaustive is only available in dimension 3, got {dim}");
        }
        SweepMethod::SphereGrid { rings: 12 }
    } else if dim == 2 {
        SweepMethod::Circle {
            resolution: if args.quick { 720 } else { args.resolution },
        }
    } else {
        SweepMethod::Sphere {
            starts: args.starts.unwrap_or(sweep::STARTS_PER_DIM * dim),
            seed: args.seed,
        }
    };
    let trace = sweep::sweep(&field, &args.radii.0, method)?;
    let report = cluster_limits(&trace)?;
    let files = report::write_sweep(&args.out_dir, field.name(), dim, format!("{method:?}"), &trace, &report)?;
    if report.clusters.is_empty() {
        println!("no finite clusters");
    }
    for c in &report.clusters {
        println!("cluster {:.9} branches {} rate {:.3e}", c.value, c.branch_count, c.rate);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(EXIT_OK)
}

pub fn cmd_corpus_list() -> Result<i32> {
    for m in CorpusMember::ALL {
        let info = m.info();
        println!("{:<15} {:<22} {}", info.name, info.formula, info.known);
    }
    Ok(EXIT_OK)
}

/// The worker count used for the repeat that checks determinism.
fn other_workers(workers: usize) -> usize {
    if workers == 1 {
        4
    } else {
        1
    }
}

/// Runs the suite, repeats it on a different worker count, and writes
/// `scoreboard.csv` and `scoreboard.md`.
pub fn cmd_corpus(args: &CorpusRunArgs, workers: usize) -> Result<i32> {
    let opts = SuiteOptions {
        seed: args.seed,
        quick: args.quick,
    };
    let outcome = with_workers(workers, || suite::run_suite(&opts))??;
    let csv = outcome.scoreboard_csv();

    let t = Instant::now();
    let repeat_workers = other_workers(workers);
    let repeat = with_workers(repeat_workers, || suite::run_suite(&opts))??;
    let c9 = determinism_result(&csv, &[repeat.scoreboard_csv()], t.elapsed().as_secs_f64(), repeat_workers);

    let mut md = outcome.scoreboard_markdown();
    md.push_str(&format!("| 9 | {} | {} | {:.2} | {} |\n", c9.name, if c9.ok() { "pass" } else { "FAIL" }, c9.seconds, c9.detail));
    let dir: &Path = &args.out_dir;
    let files = [
        report::write_text(dir, "scoreboard.csv", &csv)?,
        report::write_text(dir, "scoreboard.md", &md)?,
    ];
    for c in outcome.criteria.iter().chain(std::iter::once(&c9)) {
        println!("{}", c.line());
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(if outcome.all_passed() && c9.ok() { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

/// Criterion 9: every repeat scoreboard equals the first byte for byte.
pub fn determinism_result(first: &str, repeats: &[String], seconds: f64, workers: usize) -> CriterionResult {
    let mismatches = repeats.iter().filter(|r| r.as_str() != first).count();
    CriterionResult {
        id: 9,
        name: "determinism",
        passed: mismatches == 0,
        detail: format!(
            "{} repeat(s) including {workers} worker(s); {mismatches} scoreboard mismatch(es), {} bytes",
            repeats.len(),
            first.len()
        ),
        seconds,
        budget_seconds: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeat_uses_a_different_pool() {
        assert_eq!(other_workers(1), 4);
        assert_eq!(other_workers(4), 1);
        assert_eq!(other_workers(0), 1);
    }

    #[test]
    fn determinism_counts_mismatches() {
        let r = determinism_result("a", &["a".into(), "b".into()], 0.0, 1);
        assert!(!r.passed);
        assert!(determinism_result("a", &["a".into()], 0.0, 1).passed);
    }
}
