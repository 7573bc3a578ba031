//! Paths, the deformation loop, the escape radius and radial retraction.

mod oracle;
mod path;
mod problem;
mod radius;
mod retract;
mod round;

pub use oracle::{bottleneck_on_grid, grid_bottleneck_oracle, MAX_RESOLUTION};
pub use path::{PLPath, DEFAULT_REFINE, DEFAULT_VERTICES};
pub use problem::{Barrier, MountainPassProblem, GEOMETRY_SAMPLES_PER_DIM};
pub use radius::{estimate_r, geometric_grid, RadiusAttempt, RadiusEstimate, REstimate};
pub use retract::{level_distance, radial_retract, RetractOutcome, RetractSettings};
pub use round::{minimax_round, NearCritical, RoundOutcome, RoundSettings, RoundStop};

use serde::Serialize;

/// Everything recorded for one epsilon of the schedule.
#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub epsilon: f64,
    pub outcome: RoundOutcome,
    /// Largest vertex norm of the round's final path.
    pub radius_used: f64,
    pub r_estimate: RadiusEstimate,
}

/// The evolving record of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct MinimaxRun {
    #[serde(skip)]
    pub problem: MountainPassProblem,
    pub epsilon_schedule: Vec<f64>,
    pub rounds: Vec<RoundRecord>,
    /// Smallest path value seen in any round.
    pub c_best: f64,
    pub r_max: f64,
}

impl MinimaxRun {
    pub fn new(problem: MountainPassProblem, epsilon_schedule: Vec<f64>, r_max: f64) -> Self {
        Self {
            problem,
            epsilon_schedule,
            rounds: Vec::new(),
            c_best: f64::INFINITY,
            r_max,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.rounds.len() == self.epsilon_schedule.len()
    }

    pub fn r_estimates(&self) -> Vec<REstimate> {
        self.rounds.iter().map(|r| r.r_estimate.value).collect()
    }

    /// Final path of the latest round.
    pub fn last_path(&self) -> Option<&PLPath> {
        self.rounds.last().map(|r| &r.outcome.path)
    }
}

/// `eps0 2^-j` for `j = 0..rounds`.
pub fn geometric_schedule(eps0: f64, rounds: usize) -> Vec<f64> {
    (0..rounds).map(|j| eps0 * 0.5f64.powi(j as i32)).collect()
}
