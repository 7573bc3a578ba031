//! Command-line arguments and their conversion into solver inputs.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mountain_pass::classifier::Tolerances;
use mountain_pass::clarke::HullParams;
use mountain_pass::minimax::{Barrier, MountainPassProblem};
use mountain_pass::solve::SolveSettings;
use mountain_pass::ScalarField;

#[derive(Debug, Parser)]
#[command(name = "mpass", version, about = "Mountain-pass minimax values, critical/tangency verdicts and tangency sweeps")]
pub struct Cli {
    /// Worker threads; 0 uses the default pool.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deform paths over an epsilon schedule and classify the pass value.
    Solve(SolveArgs),
    /// Trace tangency points on spheres of growing radius.
    Sweep(SweepArgs),
    /// Built-in benchmark corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Run the acceptance suite and write a scoreboard.
    Run(CorpusRunArgs),
    /// Print corpus members and their known classifications.
    List,
}

/// Comma-separated numbers, e.g. `-1,0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Coords(pub Vec<f64>);

impl FromStr for Coords {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let out: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match out {
            Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(Coords(v)),
            Ok(_) => Err(format!("`{s}` is not a list of finite numbers")),
            Err(e) => Err(format!("`{s}`: {e}")),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    /// Built-in function (see `corpus list`).
    #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
    pub corpus: Option<String>,
    /// Expression in x1..xn, e.g. "x1 + x1^2*x2".
    #[arg(long, requires = "dim")]
    pub expr: Option<String>,
    /// Dimension. Required with --expr; corpus members infer it from the
    /// endpoints (solve) or default to 2 (sweep).
    #[arg(long)]
    pub dim: Option<usize>,
}

impl FieldArgs {
    pub fn build(&self, inferred_dim: Option<usize>) -> Result<ScalarField> {
        match (&self.corpus, &self.expr) {
            (Some(name), _) => {
                let dim = self.dim.or(inferred_dim).unwrap_or(2);
                Ok(ScalarField::corpus(name, dim)?)
            }
            (None, Some(text)) => {
                let dim = self.dim.context("--expr needs --dim")?;
                Ok(ScalarField::from_expr(text, dim)?)
            }
            (None, None) => bail!("one of --corpus or --expr is required"),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Start point inside the barrier.
    #[arg(long, allow_hyphen_values = true)]
    pub x_star: Coords,
    /// End point outside the barrier.
    #[arg(long, allow_hyphen_values = true)]
    pub y_star: Coords,
    /// Center of a ball barrier.
    #[arg(long, allow_hyphen_values = true, requires = "barrier_radius")]
    pub barrier_center: Option<Coords>,
    #[arg(long)]
    pub barrier_radius: Option<f64>,
    /// Normal of a half-space barrier {<n, x> < offset}; alternative to a ball.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "barrier_center")]
    pub barrier_normal: Option<Coords>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub barrier_offset: f64,
    /// Interior waypoint of the initial path; repeat for several.
    #[arg(long, allow_hyphen_values = true)]
    pub via: Vec<Coords>,
    /// First epsilon of the schedule eps0 2^-j.
    #[arg(long, default_value_t = 0.5)]
    pub eps0: f64,
    #[arg(long, default_value_t = 8)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.05)]
    pub hull_radius: f64,
    /// Gradient samples per hull; default max(2 dim, 16).
    #[arg(long)]
    pub hull_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest radius searched for R(eps); default 1e3 max(1, |x*|, |y*|).
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Ratio of the geometric radius grid.
    #[arg(long, default_value_t = 1.01)]
    pub r_ratio: f64,
    /// Iterations per uncapped round.
    #[arg(long, default_value_t = 400)]
    pub budget: usize,
    /// Iterations per capped round inside the radius search.
    #[arg(long, default_value_t = 25)]
    pub capped_budget: usize,
    /// Capped rounds per radius search.
    #[arg(long, default_value_t = 8)]
    pub max_capped_runs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub tol_tan: f64,
    /// tol_crit = crit_base (1 + largest generator norm at the witness).
    #[arg(long, default_value_t = 1e-3)]
    pub crit_base: f64,
    /// tol_val = val_factor times the final epsilon.
    #[arg(long, default_value_t = 2.0)]
    pub val_factor: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Four rounds of 100 iterations.
    #[arg(long)]
    pub quick: bool,
}

/// Validated inputs of `solve`.
pub struct RunConfig {
    pub problem: MountainPassProblem,
    pub settings: SolveSettings,
    pub tolerances: Tolerances,
}

impl SolveArgs {
    pub fn barrier(&self) -> Result<Barrier> {
        match (&self.barrier_center, self.barrier_radius, &self.barrier_normal) {
            (Some(center), Some(radius), None) => Ok(Barrier::Ball {
                center: center.0.clone(),
                radius,
            }),
            (None, _, Some(normal)) => Ok(Barrier::HalfSpace {
                normal: normal.0.clone(),
                offset: self.barrier_offset,
            }),
            _ => bail!("give either --barrier-center with --barrier-radius, or --barrier-normal"),
        }
    }

    pub fn config(&self) -> Result<RunConfig> {
        let dim = self.x_star.0.len();
        let field = self.field.build(Some(dim))?;
        if field.dim() != dim || self.y_star.0.len() != dim {
            bail!(
                "dimension mismatch: field has {}, x* has {}, y* has {}",
                field.dim(),
                dim,
                self.y_star.0.len()
            );
        }
        let problem = MountainPassProblem::new(field, self.x_star.0.clone(), self.y_star.0.clone(), self.barrier()?, self.seed)?;
        let mut settings = SolveSettings::new(dim, self.seed);
        settings.eps0 = self.eps0;
        settings.rounds = self.rounds;
        settings.round.hull = HullParams::new(
            self.hull_radius,
            self.hull_count.unwrap_or_else(|| HullParams::default_count(dim)),
            self.seed,
        );
        settings.round.budget = self.budget;
        settings.capped_budget = self.capped_budget;
        settings.max_capped_runs = self.max_capped_runs;
        settings.r_max = self.r_max;
        settings.r_ratio = self.r_ratio;
        settings.via = self.via.iter().map(|c| c.0.clone()).collect();
        if self.quick {
            settings.rounds = settings.rounds.min(4);
            settings.round.budget = settings.round.budget.min(100);
        }
        let mut tolerances = Tolerances::new(settings.round.hull);
        tolerances.tol_tan = self.tol_tan;
        tolerances.crit_base = self.crit_base;
        tolerances.val_factor = self.val_factor;
        Ok(RunConfig {
            problem,
            settings,
            tolerances,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Sphere radii, strictly increasing, at least four.
    #[arg(long, default_value = "10,20,40,80")]
    pub radii: Coords,
    /// Circle samples for planar sweeps.
    #[arg(long, default_value_t = 1440)]
    pub resolution: usize,
    /// Multistart points for sphere sweeps; default 50 dim.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Latitude-longitude grid of starts instead of random ones (dimension 3 only).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Resolution 720.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusRunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coarsest sweep resolution only.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_parse() {
        assert_eq!("-1,0".parse::<Coords>().unwrap(), Coords(vec![-1.0, 0.0]));
        assert_eq!(" 2.5 , -3e-1".parse::<Coords>().unwrap(), Coords(vec![2.5, -0.3]));
        assert!("1,,2".parse::<Coords>().is_err());
        assert!("1,inf".parse::<Coords>().is_err());
    }

    #[test]
    fn solve_flags_build_a_config() {
        let cli = Cli::try_parse_from([
            "mpass", "solve", "--corpus", "double_well", "--x-star", "-1,0", "--y-star", "1,0",
            "--barrier-center", "-1,0", "--barrier-radius", "0.5", "--rounds", "3", "--quick",
        ])
        .unwrap();
        let Command::Solve(args) = cli.command else { panic!("not solve") };
        let cfg = args.config().unwrap();
        assert_eq!(cfg.settings.rounds, 3);
        assert_eq!(cfg.settings.round.budget, 100);
        assert_eq!(cfg.settings.round.hull.count, 16);
        assert_eq!(cfg.tolerances.tol_tan, 0.05);
    }

    #[test]
    fn barrier_needs_one_shape() {
        let cli = Cli::try_parse_from(["mpass", "solve", "--corpus", "linear", "--x-star", "0", "--y-star", "1"]).unwrap();
        let Command::Solve(args) = cli.command else { panic!("not solve") };
        assert!(args.barrier().is_err());
        assert!(Cli::try_parse_from([
            "mpass", "solve", "--corpus", "linear", "--x-star", "0", "--y-star", "1",
            "--barrier-center", "0", "--barrier-radius", "1", "--barrier-normal", "1",
        ])
        .is_err());
    }
}
