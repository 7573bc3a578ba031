use serde::Serialize;

use crate::error::Result;
use crate::field::ScalarField;
use crate::linalg;
use crate::rng;

use super::path::PLPath;

/// Parameters of the level-set distance estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RetractSettings {
    pub eps_prime: f64,
    /// Samples along the inward ray before bisection.
    pub ray_samples: usize,
    /// Size of the local random cloud.
    pub cloud: usize,
    pub seed: u64,
}

impl RetractSettings {
    /// `eps_prime = epsilon / 10`.
    pub fn for_epsilon(epsilon: f64, seed: u64) -> Self {
        Self {
            eps_prime: epsilon / 10.0,
            ray_samples: 64,
            cloud: 512,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RetractOutcome {
    pub path: PLPath,
    pub moved: usize,
    /// Output vertices with norm at least `R` and `f <= c_ref`.
    pub failures: usize,
}

/// Point where `f` crosses `level` on the segment `[a, b]`, given
/// `f(a) < level <= f(b)`.
fn bisect_crossing(field: &ScalarField, a: &[f64], b: &[f64], level: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if field.eval(&linalg::lerp(a, b, mid))? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi * linalg::dist(a, b))
}

/// Upper estimate of the distance from `x` (with `f(x) < level`) to the
/// level set `{f = level}`, searched within `reach`.
///
/// Scans the inward radial ray, then a random cloud in the ball of the
/// current best radius. Every hit is bisected back to the crossing.
/// Returns `None` when no point at or above `level` is found.
pub fn level_distance(
    field: &ScalarField,
    x: &[f64],
    level: f64,
    reach: f64,
    settings: &RetractSettings,
) -> Result<Option<f64>> {
    let n = linalg::norm(x);
    let mut best: Option<f64> = None;
    if n > 0.0 && reach > 0.0 {
        let inward = linalg::scale(x, -1.0 / n);
        for k in 1..=settings.ray_samples {
            let s = reach * k as f64 / settings.ray_samples as f64;
            let p = linalg::axpy(x, s, &inward);
            if field.eval(&p)? >= level {
                best = Some(bisect_crossing(field, x, &p, level)?);
                break;
            }
        }
    }
    let radius = best.unwrap_or(reach);
    if radius <= 0.0 {
        return Ok(best);
    }
    let mut r = rng::stream(settings.seed, 0x4E_7AC7);
    let mut hits = Vec::new();
    for _ in 0..settings.cloud {
        let p = linalg::add(x, &rng::in_ball(&mut r, x.len(), radius));
        if field.eval(&p)? >= level {
            hits.push((linalg::dist(x, &p), p));
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (d, p) in hits {
        if best.is_some_and(|b| d >= b) {
            break;
        }
        let c = bisect_crossing(field, x, &p, level)?;
        best = Some(best.map_or(c, |b: f64| b.min(c)));
    }
    Ok(best)
}

/// Pulls high-norm, low-value vertices radially inward.
///
/// A vertex `beta` with `|beta| > R - eps'` and `f(beta) < c_ref + epsilon/2`
/// moves to norm `max(R - eps', |beta| - d)`, where `d` estimates its
/// distance to `{f = c_ref + epsilon/2}`. Other vertices and both endpoints
/// stay put.
pub fn radial_retract(
    path: &PLPath,
    field: &ScalarField,
    big_r: f64,
    epsilon: f64,
    c_ref: f64,
    settings: &RetractSettings,
) -> Result<RetractOutcome> {
    let level = c_ref + epsilon / 2.0;
    let inner = big_r - settings.eps_prime;
    let n = path.len();
    let mut vertices = Vec::with_capacity(n);
    let mut moved = 0;
    for (i, (v, &fv)) in path.vertices().iter().zip(path.values()).enumerate() {
        let norm = linalg::norm(v);
        if i == 0 || i == n - 1 || norm <= inner || fv >= level {
            vertices.push(v.clone());
            continue;
        }
        let reach = norm - inner;
        let d = level_distance(field, v, level, reach, settings)?;
        let g = match d {
            Some(d) => inner.max(norm - d),
            None => inner,
        };
        vertices.push(linalg::scale(v, g / norm));
        moved += 1;
    }
    let out = path.with_vertices(field, vertices)?;
    let failures = out
        .vertices()
        .iter()
        .zip(out.values())
        .filter(|(v, &f)| linalg::norm(v) >= big_r && f <= c_ref)
        .count();
    Ok(RetractOutcome {
        path: out,
        moved,
        failures,
    })
}
