//! A full solve: one deformation round per epsilon, an escape-radius
//! estimate after each, then classification.

use serde::Serialize;

use crate::classifier::{classify, Classification, Tolerances};
use crate::clarke::HullParams;
use crate::error::{Error, Result};
use crate::minimax::{
    estimate_r, geometric_grid, geometric_schedule, minimax_round, MinimaxRun, MountainPassProblem, PLPath,
    RadiusEstimate, REstimate, RoundRecord, RoundSettings,
};
use crate::rng;

/// Budgets and schedules of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSettings {
    pub eps0: f64,
    pub rounds: usize,
    /// Settings of the uncapped rounds; the hull seed is re-derived per round.
    pub round: RoundSettings,
    /// Iteration budget of each capped round inside the radius search.
    pub capped_budget: usize,
    /// Capped rounds allowed per radius search.
    pub max_capped_runs: usize,
    /// Defaults to `1e3 max(1, |x*|, |y*|)` when unset.
    pub r_max: Option<f64>,
    /// Ratio of the geometric radius grid.
    pub r_ratio: f64,
    /// Interior waypoints of the initial polyline.
    pub via: Vec<Vec<f64>>,
}

impl SolveSettings {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            eps0: 0.5,
            rounds: 8,
            round: RoundSettings::new(HullParams::new(0.05, HullParams::default_count(dim), seed)),
            capped_budget: 25,
            max_capped_runs: 8,
            r_max: None,
            r_ratio: 1.01,
            via: Vec::new(),
        }
    }
}

/// Initial path: the polyline `x*, via..., y*` re-spaced to `n` vertices.
pub fn initial_path(problem: &MountainPassProblem, via: &[Vec<f64>], n: usize) -> Result<PLPath> {
    let field = &problem.field;
    if via.iter().any(|v| v.len() != problem.dim()) {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: via.iter().map(Vec::len).find(|&l| l != problem.dim()).unwrap_or(0),
        });
    }
    if via.is_empty() {
        return PLPath::straight(field, &problem.x_star, &problem.y_star, n);
    }
    let mut vertices = vec![problem.x_star.clone()];
    vertices.extend(via.iter().cloned());
    vertices.push(problem.y_star.clone());
    PLPath::new(field, vertices)?.respaced(field, n)
}

/// Runs every round of the schedule.
///
/// Round `j` deforms the best path so far at level `eps_j`, then estimates
/// `R(eps_j)` with `c_best` as reference on a geometric grid that starts at
/// the previous estimate. Once a round reports no feasible radius, later
/// rounds inherit that answer.
pub fn run_schedule(problem: MountainPassProblem, settings: &SolveSettings) -> Result<MinimaxRun> {
    if !(settings.eps0 > 0.0) || settings.rounds == 0 {
        return Err(Error::InvalidArgument("eps0 must be positive and rounds at least 1".into()));
    }
    if !(settings.r_ratio > 1.0) {
        return Err(Error::InvalidArgument("r_ratio must exceed 1".into()));
    }
    let r_max = settings.r_max.unwrap_or_else(|| problem.default_r_max());
    let floor = problem.endpoint_norm();
    if !(r_max >= floor) {
        return Err(Error::InvalidArgument(format!("r_max {r_max} is below the endpoint norm {floor}")));
    }
    let schedule = geometric_schedule(settings.eps0, settings.rounds);
    let mut best = initial_path(&problem, &settings.via, settings.round.vertices)?;
    let mut best_value = best.path_value(&problem.field, settings.round.refine)?;
    let mut run = MinimaxRun::new(problem, schedule.clone(), r_max);
    let mut r_prev = REstimate::Finite(floor);
    let base_seed = settings.round.hull.seed;

    for (j, &eps) in schedule.iter().enumerate() {
        let mut round = settings.round.clone();
        round.hull = round.hull.with_seed(rng::derive_seed(base_seed, j as u64));
        let outcome = minimax_round(&run.problem, &best, eps, &round)?;
        if outcome.c_upper <= best_value {
            best = outcome.path.clone();
            best_value = outcome.c_upper;
        }
        run.c_best = run.c_best.min(outcome.c_upper);

        let r_estimate = match r_prev {
            REstimate::InfiniteAtBudget => RadiusEstimate {
                value: REstimate::InfiniteAtBudget,
                witness: None,
                attempts: Vec::new(),
            },
            REstimate::Finite(start) => {
                let grid = geometric_grid(start, r_max, settings.r_ratio);
                let mut capped = round.clone();
                capped.budget = settings.capped_budget;
                capped.hull = capped.hull.with_seed(rng::derive_seed(base_seed, 0x10_0000 + j as u64));
                estimate_r(&run.problem, eps, run.c_best, &grid, &best, &capped, settings.max_capped_runs)?
            }
        };
        r_prev = r_estimate.value;
        run.rounds.push(RoundRecord {
            epsilon: eps,
            radius_used: outcome.path.max_norm(),
            outcome,
            r_estimate,
        });
    }
    Ok(run)
}

/// [`run_schedule`] followed by [`classify`].
pub fn solve(problem: MountainPassProblem, settings: &SolveSettings, tol: &Tolerances) -> Result<(MinimaxRun, Classification)> {
    let run = run_schedule(problem, settings)?;
    let class = classify(&run, tol)?;
    Ok((run, class))
}
