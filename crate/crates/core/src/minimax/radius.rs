use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

use super::path::PLPath;
use super::problem::MountainPassProblem;
use super::round::{minimax_round, RoundSettings};

/// Smallest feasible radius found on a grid, or none up to the grid's end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum REstimate {
    Finite(f64),
    InfiniteAtBudget,
}

impl REstimate {
    pub fn finite(self) -> Option<f64> {
        match self {
            REstimate::Finite(r) => Some(r),
            REstimate::InfiniteAtBudget => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == REstimate::InfiniteAtBudget
    }
}

impl Serialize for REstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            REstimate::Finite(r) => s.serialize_f64(*r),
            REstimate::InfiniteAtBudget => s.serialize_str("infinite-at-budget"),
        }
    }
}

/// One radius tried by [`estimate_r`].
#[derive(Debug, Clone, Serialize)]
pub struct RadiusAttempt {
    pub r: f64,
    pub path_value: f64,
    pub iterations: usize,
    pub success: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    pub value: REstimate,
    /// Capped path certifying `value` when finite.
    pub witness: Option<PLPath>,
    pub attempts: Vec<RadiusAttempt>,
}

/// `start, start q, start q^2, ...` up to and including `end`.
pub fn geometric_grid(start: f64, end: f64, ratio: f64) -> Vec<f64> {
    assert!(start > 0.0 && ratio > 1.0);
    let mut out = vec![start];
    let mut r = start;
    while r * ratio < end {
        r *= ratio;
        out.push(r);
    }
    if *out.last().unwrap() < end {
        out.push(end);
    }
    out
}

/// Smallest `r` in `r_grid` for which a path in the closed `r`-ball reaches
/// value below `c_ref + epsilon`.
///
/// Each radius first tries the straight segment, the projected `warm` path
/// and the previous radius's result. If none qualifies it runs a capped
/// deformation round aimed at `c_ref + epsilon`, at most `max_capped` times
/// in total; later radii are checked with the candidates alone. Radii below
/// the endpoint norm are skipped.
pub fn estimate_r(
    problem: &MountainPassProblem,
    epsilon: f64,
    c_ref: f64,
    r_grid: &[f64],
    warm: &PLPath,
    settings: &RoundSettings,
    max_capped: usize,
) -> Result<RadiusEstimate> {
    if r_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("r_grid must be strictly increasing".into()));
    }
    let field = &problem.field;
    let target = c_ref + epsilon;
    let floor = problem.endpoint_norm();
    let straight = PLPath::straight(field, &problem.x_star, &problem.y_star, settings.vertices)?;
    let mut previous: Option<PLPath> = None;
    let mut attempts = Vec::new();
    let mut capped_runs = 0;

    for &r in r_grid.iter().filter(|&&r| r >= floor) {
        let mut candidates = vec![straight.clone(), warm.projected(field, r)?];
        if let Some(p) = &previous {
            candidates.push(p.projected(field, r)?);
        }
        let mut best: Option<(PLPath, f64)> = None;
        for c in candidates {
            let v = c.path_value(field, settings.refine)?;
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((c, v));
            }
        }
        let (seed, v) = best.expect("at least one candidate");
        if v < target && seed.membership(field, r, epsilon, c_ref)? {
            attempts.push(RadiusAttempt {
                r,
                path_value: v,
                iterations: 0,
                success: true,
            });
            return Ok(RadiusEstimate {
                value: REstimate::Finite(r),
                witness: Some(seed),
                attempts,
            });
        }
        if capped_runs >= max_capped {
            attempts.push(RadiusAttempt {
                r,
                path_value: v,
                iterations: 0,
                success: false,
            });
            continue;
        }
        capped_runs += 1;
        let mut capped = settings.clone();
        capped.radius_cap = Some(r);
        capped.target = Some(target);
        let out = minimax_round(problem, &seed, epsilon, &capped)?;
        let success = out.path.membership(field, r, epsilon, c_ref)?;
        attempts.push(RadiusAttempt {
            r,
            path_value: out.c_upper,
            iterations: out.iterations,
            success,
        });
        if success {
            return Ok(RadiusEstimate {
                value: REstimate::Finite(r),
                witness: Some(out.path),
                attempts,
            });
        }
        previous = Some(out.path);
    }
    Ok(RadiusEstimate {
        value: REstimate::InfiniteAtBudget,
        witness: None,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clarke::HullParams;
    use crate::field::ScalarField;
    use crate::minimax::Barrier;

    fn double_well() -> MountainPassProblem {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        let ball = Barrier::Ball {
            center: vec![-1.0, 0.0],
            radius: 0.5,
        };
        MountainPassProblem::new(f, vec![-1.0, 0.0], vec![1.0, 0.0], ball, 1).unwrap()
    }

    #[test]
    fn grid_is_geometric_and_closed() {
        let g = geometric_grid(1.0, 4.0, 1.5);
        assert_eq!(g.first(), Some(&1.0));
        assert_eq!(g.last(), Some(&4.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn straight_segment_bound() {
        let p = double_well();
        let settings = RoundSettings::new(HullParams::new(0.05, 16, 1));
        let warm = PLPath::straight(&p.field, &p.x_star, &p.y_star, settings.vertices).unwrap();
        let grid = geometric_grid(1.0, 4.0, 1.25);
        let est = estimate_r(&p, 0.1, 1.0, &grid, &warm, &settings, 8).unwrap();
        assert_eq!(est.value, REstimate::Finite(1.0));
        let est = estimate_r(&p, 1e3, 1.0, &grid, &warm, &settings, 8).unwrap();
        assert_eq!(est.value, REstimate::Finite(1.0));
    }

    #[test]
    fn unreachable_target_is_infinite() {
        let p = double_well();
        let mut settings = RoundSettings::new(HullParams::new(0.05, 16, 1));
        settings.budget = 20;
        let warm = PLPath::straight(&p.field, &p.x_star, &p.y_star, settings.vertices).unwrap();
        let est = estimate_r(&p, 0.1, 0.5, &[1.0, 2.0], &warm, &settings, 8).unwrap();
        assert!(est.value.is_infinite());
        assert_eq!(est.attempts.len(), 2);
        assert_eq!(serde_json::to_string(&est.value).unwrap(), "\"infinite-at-budget\"");
    }
}
