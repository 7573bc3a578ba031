use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::rng;

/// Boundary samples per dimension used by the geometry check.
pub const GEOMETRY_SAMPLES_PER_DIM: usize = 1000;

/// The open set separating the endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Barrier {
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Open half-space `<normal, x> < offset`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

impl Barrier {
    pub fn dim(&self) -> usize {
        match self {
            Barrier::Ball { center, .. } => center.len(),
            Barrier::HalfSpace { normal, .. } => normal.len(),
        }
    }

    /// Signed gap: negative inside, zero on the boundary.
    pub fn level(&self, x: &[f64]) -> f64 {
        match self {
            Barrier::Ball { center, radius } => linalg::dist(x, center) - radius,
            Barrier::HalfSpace { normal, offset } => (linalg::dot(normal, x) - offset) / linalg::norm(normal),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Barrier::Ball { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Geometry("barrier radius must be positive".into()))
            }
            Barrier::HalfSpace { normal, offset } if !(linalg::norm(normal) > 0.0) || !offset.is_finite() => {
                Err(Error::Geometry("barrier normal must be non-zero".into()))
            }
            _ => Ok(()),
        }
    }

    /// `count` points on the boundary. Half-space boundaries are sampled in
    /// a disk of radius `extent` around the foot of the origin.
    fn boundary_samples(&self, count: usize, extent: f64, seed: u64) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut r = rng::stream(seed, 0xBA_441E);
        match self {
            Barrier::Ball { center, radius } => (0..count)
                .map(|_| linalg::axpy(center, *radius, &rng::unit_vector(&mut r, dim)))
                .collect(),
            Barrier::HalfSpace { normal, offset } => {
                let nn = linalg::norm(normal);
                let unit = linalg::scale(normal, 1.0 / nn);
                let foot = linalg::scale(&unit, offset / nn);
                (0..count)
                    .map(|_| {
                        let p = rng::in_ball(&mut r, dim, extent);
                        let along = linalg::dot(&p, &unit);
                        linalg::add(&foot, &linalg::axpy(&p, -along, &unit))
                    })
                    .collect()
            }
        }
    }
}

/// Endpoints separated by a barrier on whose boundary `f` is higher than at
/// both endpoints.
#[derive(Debug, Clone)]
pub struct MountainPassProblem {
    pub field: ScalarField,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub barrier: Barrier,
    /// Smallest sampled value of `f` on the barrier boundary.
    pub boundary_min: f64,
    pub boundary_argmin: Vec<f64>,
}

impl MountainPassProblem {
    /// Validates the geometry with [`GEOMETRY_SAMPLES_PER_DIM`] boundary
    /// samples per dimension.
    pub fn new(field: ScalarField, x_star: Vec<f64>, y_star: Vec<f64>, barrier: Barrier, seed: u64) -> Result<Self> {
        let dim = field.dim();
        for (name, len) in [("x_star", x_star.len()), ("y_star", y_star.len()), ("barrier", barrier.dim())] {
            if len != dim {
                return Err(Error::Geometry(format!("{name} has dimension {len}, field has {dim}")));
            }
        }
        barrier.validate()?;
        if !(barrier.level(&x_star) < 0.0) {
            return Err(Error::Geometry("x* must lie inside the barrier".into()));
        }
        if !(barrier.level(&y_star) > 0.0) {
            return Err(Error::Geometry("y* must lie outside the closed barrier".into()));
        }
        let fx = field.eval(&x_star)?;
        let fy = field.eval(&y_star)?;
        let extent = 10.0 * 1f64.max(linalg::norm(&x_star)).max(linalg::norm(&y_star));
        let samples = barrier.boundary_samples(GEOMETRY_SAMPLES_PER_DIM * dim, extent, seed);
        let mut boundary_min = f64::INFINITY;
        let mut boundary_argmin = samples[0].clone();
        for s in samples {
            let v = field.eval(&s)?;
            if v < boundary_min {
                boundary_min = v;
                boundary_argmin = s;
            }
        }
        if !(fx.max(fy) < boundary_min) {
            return Err(Error::Geometry(format!(
                "need f(x*), f(y*) < inf of f over the barrier boundary; \
                 f(x*) = {fx}, f(y*) = {fy}, sampled boundary minimum {boundary_min} at {boundary_argmin:?}"
            )));
        }
        Ok(Self {
            field,
            x_star,
            y_star,
            barrier,
            boundary_min,
            boundary_argmin,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn endpoint_norm(&self) -> f64 {
        linalg::norm(&self.x_star).max(linalg::norm(&self.y_star))
    }

    /// `10^3 max(1, |x*|, |y*|)`.
    pub fn default_r_max(&self) -> f64 {
        1e3 * self.endpoint_norm().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> Barrier {
        Barrier::Ball {
            center: vec![-1.0, 0.0],
            radius: 0.5,
        }
    }

    #[test]
    fn double_well_geometry_holds() {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        let p = MountainPassProblem::new(f, vec![-1.0, 0.0], vec![1.0, 0.0], ball(), 1).unwrap();
        assert!(p.boundary_min > 0.0);
        assert_eq!(p.default_r_max(), 1e3);
    }

    #[test]
    fn y_star_inside_barrier_is_rejected() {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        let err = MountainPassProblem::new(f, vec![-1.0, 0.0], vec![-1.2, 0.0], ball(), 1).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn low_boundary_is_rejected() {
        let f = ScalarField::corpus("double_well", 2).unwrap();
        // f(y*) = 9 exceeds the barrier sphere values.
        let err = MountainPassProblem::new(f, vec![-1.0, 0.0], vec![1.0, 3.0], ball(), 1).unwrap_err();
        assert!(err.to_string().contains("f(x*), f(y*) < inf"), "{err}");
    }

    #[test]
    fn half_space_barrier_for_broughton() {
        let f = ScalarField::corpus("broughton", 2).unwrap();
        let h = Barrier::HalfSpace {
            normal: vec![1.0, 0.0],
            offset: 0.0,
        };
        let p = MountainPassProblem::new(f, vec![-1.0, 0.0], vec![1.0, -2.0], h, 1).unwrap();
        assert_eq!(p.boundary_min, 0.0);
        assert!(p.boundary_argmin[0].abs() < 1e-15);
    }
}
