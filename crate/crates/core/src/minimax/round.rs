use serde::Serialize;

use crate::clarke::{self, HullParams};
use crate::deformation::{self, DescentParams};
use crate::error::Result;
use crate::linalg;
use crate::par;

use super::path::{PLPath, DEFAULT_REFINE, DEFAULT_VERTICES};
use super::problem::MountainPassProblem;

/// Knobs of a single deformation round.
#[derive(Debug, Clone, Serialize)]
pub struct RoundSettings {
    pub hull: HullParams,
    /// Iteration budget.
    pub budget: usize,
    pub vertices: usize,
    pub refine: usize,
    /// High vertices with sampled min-norm below `2 b_floor` are treated as
    /// near-critical and left in place.
    pub b_floor: f64,
    /// Project vertices to this ball after every flow step.
    pub radius_cap: Option<f64>,
    /// Stop as soon as the path value drops below this.
    pub target: Option<f64>,
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Consecutive flow calls per iteration, each of duration at most `h_max`.
    pub flows_per_iteration: usize,
}

impl RoundSettings {
    pub fn new(hull: HullParams) -> Self {
        Self {
            hull,
            budget: 400,
            vertices: DEFAULT_VERTICES,
            refine: DEFAULT_REFINE,
            b_floor: 1e-3,
            radius_cap: None,
            target: None,
            stall_window: 10,
            stall_tol: 1e-6,
            flows_per_iteration: 1,
        }
    }
}

/// A high vertex at which the pseudo-gradient could not be built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearCritical {
    pub x: Vec<f64>,
    pub f: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundStop {
    Budget,
    Stalled,
    /// Every high vertex was near-critical.
    Critical,
    Target,
}

/// Result of [`minimax_round`].
#[derive(Debug, Clone, Serialize)]
pub struct RoundOutcome {
    pub path: PLPath,
    pub c_upper: f64,
    /// Path value after every iteration, starting with the seed path.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub rejected: usize,
    pub stop: RoundStop,
    pub events: Vec<NearCritical>,
    /// High vertices `f >= c_upper - epsilon` of the final path.
    pub high_set: Vec<Vec<f64>>,
    pub min_h_max: f64,
}

fn high_indices(path: &PLPath, threshold: f64) -> Vec<usize> {
    let n = path.len();
    (1..n - 1).filter(|&i| path.values()[i] >= threshold).collect()
}

fn record_event(events: &mut Vec<NearCritical>, e: NearCritical, merge_radius: f64) {
    if let Some(old) = events.iter_mut().find(|o| linalg::dist(&o.x, &e.x) <= merge_radius) {
        if e.residual <= old.residual {
            *old = e;
        }
    } else {
        events.push(e);
    }
}

/// Deforms `seed` downhill at level `epsilon` until the budget runs out, the
/// value stalls, or every high vertex is near-critical.
///
/// Each iteration takes the vertices with `f >= c_upper - epsilon` as the
/// high set. It builds the cutoff field on the non-critical ones and flows
/// every vertex in its support for `h_max`. Then it re-spaces the path by arc
/// length. Steps that raise the path value are rejected and the duration is
/// halved.
pub fn minimax_round(
    problem: &MountainPassProblem,
    seed: &PLPath,
    epsilon: f64,
    settings: &RoundSettings,
) -> Result<RoundOutcome> {
    let field = &problem.field;
    let mut path = match settings.radius_cap {
        Some(r) => seed.projected(field, r)?,
        None => seed.clone(),
    };
    if path.len() != settings.vertices {
        path = path.respaced(field, settings.vertices)?;
    }
    let mut c_upper = path.path_value(field, settings.refine)?;
    let mut history = vec![c_upper];
    let mut events = Vec::new();
    let mut rejected = 0;
    let mut scale: f64 = 1.0;
    let mut min_h_max = f64::INFINITY;
    let mut stop = RoundStop::Budget;
    let mut iterations = 0;

    let mut params = DescentParams::new(settings.hull, problem.x_star.clone(), problem.y_star.clone());
    let (_, r2) = params.radii();
    let merge = 0.1 * settings.hull.radius;

    while iterations < settings.budget {
        if settings.target.is_some_and(|t| c_upper < t) {
            stop = RoundStop::Target;
            break;
        }
        iterations += 1;
        let high = high_indices(&path, c_upper - epsilon);
        let residuals = par::map_indexed(&high, |_, &i| clarke::critical_residual(field, &path.vertices()[i], &settings.hull))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let mut centers = Vec::new();
        let mut b = f64::INFINITY;
        for (&i, &res) in high.iter().zip(&residuals) {
            let x = &path.vertices()[i];
            if res < 2.0 * settings.b_floor {
                record_event(
                    &mut events,
                    NearCritical {
                        x: x.clone(),
                        f: path.values()[i],
                        residual: res,
                    },
                    merge,
                );
                continue;
            }
            // Vertices this close to an endpoint sit at endpoint level and
            // cannot be part of the pass.
            if linalg::dist(x, &problem.x_star) <= r2 || linalg::dist(x, &problem.y_star) <= r2 {
                continue;
            }
            centers.push(x.clone());
            b = b.min(res / 2.0);
        }
        if centers.is_empty() {
            stop = RoundStop::Critical;
            history.push(c_upper);
            break;
        }

        params.hull = settings.hull;
        let df = deformation::build_descent_field(field, &centers, b, &params)?;
        let h_max = df.h_max();
        min_h_max = min_h_max.min(h_max);
        let duration = scale * h_max;

        let n = path.len();
        let moved = par::map_indexed(path.vertices(), |i, v| -> Result<(Vec<f64>, usize)> {
            if i == 0 || i == n - 1 || df.phi(v) == 0.0 {
                return Ok((v.clone(), 0));
            }
            let mut x = v.clone();
            let mut near = 0;
            for _ in 0..settings.flows_per_iteration {
                let r = deformation::flow(&df, field, &x, duration)?;
                near += r.near_critical;
                x = r.end;
            }
            if let Some(cap) = settings.radius_cap {
                x = linalg::project_to_ball(&x, cap);
            }
            Ok((x, near))
        });
        let mut vertices = Vec::with_capacity(n);
        for m in moved {
            vertices.push(m?.0);
        }
        let flowed = path.with_vertices(field, vertices)?;
        let respaced = flowed.respaced(field, settings.vertices)?;

        let v_respaced = respaced.path_value(field, settings.refine)?;
        let candidate = if v_respaced <= c_upper {
            Some((respaced, v_respaced))
        } else {
            let v_flowed = flowed.path_value(field, settings.refine)?;
            (v_flowed <= c_upper).then_some((flowed, v_flowed))
        };
        match candidate {
            Some((p, v)) => {
                path = p;
                c_upper = v;
                scale = (2.0 * scale).min(1.0);
            }
            None => {
                rejected += 1;
                scale *= 0.5;
            }
        }
        history.push(c_upper);

        let w = settings.stall_window;
        if history.len() > w {
            let old = history[history.len() - 1 - w];
            if old - c_upper <= settings.stall_tol * old.abs().max(1.0) {
                stop = RoundStop::Stalled;
                break;
            }
        }
    }

    let high_set = high_indices(&path, c_upper - epsilon)
        .into_iter()
        .map(|i| path.vertices()[i].clone())
        .collect();
    Ok(RoundOutcome {
        path,
        c_upper,
        history,
        iterations,
        rejected,
        stop,
        events,
        high_set,
        min_h_max: if min_h_max.is_finite() { min_h_max } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::minimax::Barrier;

    fn problem(name: &str) -> MountainPassProblem {
        let f = ScalarField::corpus(name, 2).unwrap();
        MountainPassProblem::new(
            f,
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            Barrier::Ball {
                center: vec![-1.0, 0.0],
                radius: 0.5,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn wells_stop_at_the_saddle() {
        for name in ["double_well", "nonsmooth_well"] {
            let p = problem(name);
            let seed = PLPath::straight(&p.field, &p.x_star, &p.y_star, DEFAULT_VERTICES).unwrap();
            let out = minimax_round(&p, &seed, 0.1, &RoundSettings::new(HullParams::new(0.05, 16, 3))).unwrap();
            assert!((out.c_upper - 1.0).abs() < 1e-3, "{name}: {}", out.c_upper);
            assert!(out.events.iter().any(|e| linalg::norm(&e.x) < 1e-2), "{name}: {:?}", out.events);
            assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn bent_path_descends_to_the_saddle() {
        let p = problem("double_well");
        let seed = PLPath::new(&p.field, vec![vec![-1.0, 0.0], vec![0.0, 0.6], vec![1.0, 0.0]]).unwrap();
        let out = minimax_round(&p, &seed, 0.1, &RoundSettings::new(HullParams::new(0.05, 16, 3))).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.c_upper < out.history[0]);
    }
}
