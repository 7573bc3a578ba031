//! Sampled Clarke subdifferentials.
//!
//! The Clarke set at `x` is the convex hull of limiting gradients. Here it is
//! approximated by the convex hull of gradients sampled uniformly in a small
//! ball around `x` (a Goldstein-style hull). Everything downstream
//! (generalized directional derivative, minimum-norm element, pseudo-gradient)
//! is computed on that finite generator set.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{self, dot, norm, norm_sq};
use crate::rng;

/// Stopping tolerance of the minimum-norm-point iteration.
pub const MIN_NORM_TOL: f64 = 1e-10;
/// Iteration cap of the minimum-norm-point iteration.
pub const MIN_NORM_MAX_ITER: usize = 200;
/// Scale of the pseudo-gradient: `v = PSEUDO_GRADIENT_SCALE * m / |m|`.
pub const PSEUDO_GRADIENT_SCALE: f64 = 0.75;

/// How many times a sample that lands on the nonsmooth locus is redrawn.
const LOCUS_REDRAWS: usize = 8;

/// Sampling parameters of a gradient hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullParams {
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl HullParams {
    pub fn new(radius: f64, count: usize, seed: u64) -> Self {
        Self {
            radius,
            count,
            seed,
        }
    }

    /// Default sample count `max(2 dim, 16)`.
    pub fn default_count(dim: usize) -> usize {
        (2 * dim).max(16)
    }

    pub fn with_radius(self, radius: f64) -> Self {
        Self { radius, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Finite generator set approximating the Clarke subdifferential at `center`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientHull {
    pub center: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
    pub radius: f64,
    #[serde(skip)]
    min_norm_cache: OnceLock<Vec<f64>>,
}

impl GradientHull {
    /// A hull from explicit generators. Panics on an empty generator list.
    pub fn from_generators(center: Vec<f64>, generators: Vec<Vec<f64>>, radius: f64) -> Self {
        assert!(!generators.is_empty(), "a gradient hull needs at least one generator");
        Self {
            center,
            generators,
            radius,
            min_norm_cache: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Largest pairwise distance between generators.
    pub fn diameter(&self) -> f64 {
        let g = &self.generators;
        let mut d: f64 = 0.0;
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                d = d.max(linalg::dist(&g[i], &g[j]));
            }
        }
        d
    }

    pub fn max_generator_norm(&self) -> f64 {
        self.generators.iter().map(|g| norm(g)).fold(0.0, f64::max)
    }

    /// Minimum-norm element of the convex hull of the generators (cached).
    pub fn min_norm(&self) -> &[f64] {
        self.min_norm_cache
            .get_or_init(|| min_norm_point(&self.generators).point)
    }
}

type OffsetKey = (u64, usize, usize, u64);

thread_local! {
    static OFFSETS: RefCell<HashMap<OffsetKey, Rc<Vec<Vec<f64>>>>> = RefCell::new(HashMap::new());
}

/// The sample offsets of a hull: `count` primary offsets followed by
/// `LOCUS_REDRAWS` replacements for each. A pure function of the
/// parameters, cached per thread.
fn hull_offsets(dim: usize, params: &HullParams) -> Rc<Vec<Vec<f64>>> {
    let key = (params.seed, dim, params.count, params.radius.to_bits());
    OFFSETS.with(|cache| {
        let mut cache = cache.borrow_mut();
        if cache.len() > 256 {
            cache.clear();
        }
        cache
            .entry(key)
            .or_insert_with(|| {
                let mut r = rng::stream(params.seed, 0xC1A2_4E);
                let total = params.count * (1 + LOCUS_REDRAWS);
                Rc::new((0..total).map(|_| rng::in_ball(&mut r, dim, params.radius)).collect())
            })
            .clone()
    })
}

/// Samples `params.count` gradients uniformly in the ball of radius
/// `params.radius` around `x`.
///
/// The sample offsets depend only on the seed, so hulls at nearby centers are
/// translates of the same pattern; that keeps the derived direction field a
/// deterministic, locally Lipschitz function of the center. Samples landing
/// on the nonsmooth locus are redrawn.
pub fn sample_hull(field: &ScalarField, x: &[f64], params: &HullParams) -> Result<GradientHull> {
    if !(params.radius > 0.0) {
        return Err(Error::InvalidArgument("hull radius must be positive".into()));
    }
    if params.count == 0 {
        return Err(Error::InvalidArgument("hull sample count must be positive".into()));
    }
    if x.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: x.len(),
        });
    }
    let offsets = hull_offsets(x.len(), params);
    let count = params.count;
    let mut generators = Vec::with_capacity(count);
    let mut p = vec![0.0; x.len()];
    for j in 0..count {
        let mut k = 0;
        loop {
            let o = if k == 0 { &offsets[j] } else { &offsets[count + j * LOCUS_REDRAWS + k - 1] };
            for ((pi, xi), oi) in p.iter_mut().zip(x).zip(o) {
                *pi = xi + oi;
            }
            k += 1;
            if k > LOCUS_REDRAWS || !field.nonsmooth_hint(&p) {
                break;
            }
        }
        generators.push(field.branch_gradient(&p)?);
    }
    Ok(GradientHull::from_generators(x.to_vec(), generators, params.radius))
}

/// `max_w <w, v>` over the generators: the sampled generalized directional
/// derivative `f°(x; v)`.
pub fn directional_upper(hull: &GradientHull, v: &[f64]) -> f64 {
    hull.generators
        .iter()
        .map(|w| dot(w, v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Result of the minimum-norm-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Barycentric weights over the generators (zero off the active set).
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
///
/// Keeps an affinely independent active set; each major cycle adds the
/// generator most violating `<p, x> >= |x|^2`, each minor cycle projects onto
/// the affine hull of the active set and steps back into the simplex when the
/// affine minimizer leaves it.
pub fn min_norm_point(points: &[Vec<f64>]) -> MinNormPoint {
    assert!(!points.is_empty(), "min_norm_point needs at least one point");
    let n = points.len();
    let scale = 1.0 + points.iter().map(|p| norm_sq(p)).fold(0.0, f64::max);

    let start = (0..n)
        .min_by(|&i, &j| norm_sq(&points[i]).total_cmp(&norm_sq(&points[j])))
        .unwrap();
    let mut active = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;
    let mut converged = false;

    let combine = |active: &[usize], w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; points[0].len()];
        for (&i, &wi) in active.iter().zip(w) {
            for (o, p) in out.iter_mut().zip(&points[i]) {
                *o += wi * p;
            }
        }
        out
    };

    'major: while iterations < MIN_NORM_MAX_ITER {
        iterations += 1;
        let xx = norm_sq(&x);
        let (j, best) = (0..n)
            .map(|k| (k, dot(&x, &points[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - best <= MIN_NORM_TOL * scale {
            converged = true;
            break;
        }
        if active.contains(&j) {
            // No progress possible in floating point.
            converged = true;
            break;
        }
        active.push(j);
        w.push(0.0);

        loop {
            iterations += 1;
            let Some(alpha) = affine_minimizer(points, &active) else {
                // Numerically dependent active set: drop the newcomer.
                active.pop();
                w.pop();
                converged = true;
                break 'major;
            };
            if alpha.iter().all(|&a| a > 0.0) {
                w = alpha;
                x = combine(&active, &w);
                break;
            }
            let mut theta: f64 = 1.0;
            for (a, wi) in alpha.iter().zip(&w) {
                if *a <= 0.0 {
                    let denom = wi - a;
                    if denom > 0.0 {
                        theta = theta.min(wi / denom);
                    }
                }
            }
            for (wi, a) in w.iter_mut().zip(&alpha) {
                *wi = theta * a + (1.0 - theta) * *wi;
            }
            // Drop at least the blocking index.
            let blocking = w
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .unwrap();
            let mut keep_active = Vec::with_capacity(active.len());
            let mut keep_w = Vec::with_capacity(w.len());
            for (k, (&i, &wi)) in active.iter().zip(&w).enumerate() {
                if k != blocking && wi > 1e-15 {
                    keep_active.push(i);
                    keep_w.push(wi);
                }
            }
            let total: f64 = keep_w.iter().sum();
            keep_w.iter_mut().for_each(|v| *v /= total);
            active = keep_active;
            w = keep_w;
            x = combine(&active, &w);
            if active.len() == 1 || iterations >= MIN_NORM_MAX_ITER {
                break;
            }
        }
    }

    let mut weights = vec![0.0; n];
    for (&i, &wi) in active.iter().zip(&w) {
        weights[i] = wi;
    }
    MinNormPoint {
        point: x,
        weights,
        iterations,
        converged,
    }
}

/// Weights `alpha` (summing to one) of the minimum-norm point of the affine
/// hull of `points[active]`.
fn affine_minimizer(points: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    // Bordered Gram system [[0, 1^T], [1, G]] [mu; alpha] = [1; 0].
    let m = k + 1;
    let mut a = vec![0.0; m * m];
    for j in 1..m {
        a[j] = 1.0;
        a[j * m] = 1.0;
    }
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            a[(r + 1) * m + (c + 1)] = dot(&points[i], &points[j]);
        }
    }
    let mut b = vec![0.0; m];
    b[0] = 1.0;
    let scale = active
        .iter()
        .map(|&i| norm_sq(&points[i]))
        .fold(1.0, f64::max);
    let sol = linalg::solve_dense(a, b, 1e-13 * scale)?;
    let alpha = sol[1..].to_vec();
    if alpha.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(alpha)
}

/// Outcome of the pseudo-gradient construction.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoGradient {
    /// `v` with `|v| < 1` and `<w, v> > b` for every generator `w`.
    Direction(Vec<f64>),
    /// The minimum-norm element is shorter than `2b`: a near-critical point.
    Fails { min_norm: f64 },
}

impl PseudoGradient {
    pub fn direction(&self) -> Option<&[f64]> {
        match self {
            PseudoGradient::Direction(v) => Some(v),
            PseudoGradient::Fails { .. } => None,
        }
    }
}

/// Pseudo-gradient `v = (3/4) m / |m|` from the minimum-norm element `m`.
///
/// When `|m| >= 2b`, the optimality of `m` gives `<w, m> >= |m|^2` for every
/// generator, hence `<w, v> >= (3/4)|m| >= (3/2) b > b`. The inequality is
/// re-checked on the generators; a failure (unconverged iteration) is
/// reported as `Fails`.
pub fn pseudo_gradient(hull: &GradientHull, b: f64) -> PseudoGradient {
    let m = hull.min_norm();
    let mn = norm(m);
    if !(mn >= 2.0 * b) || mn == 0.0 {
        return PseudoGradient::Fails { min_norm: mn };
    }
    let v = linalg::scale(m, PSEUDO_GRADIENT_SCALE / mn);
    let worst = hull
        .generators
        .iter()
        .map(|w| dot(w, &v))
        .fold(f64::INFINITY, f64::min);
    if worst > b && norm(&v) < 1.0 {
        PseudoGradient::Direction(v)
    } else {
        PseudoGradient::Fails { min_norm: mn }
    }
}

/// `|min_norm_point(sample_hull(...))|`: the sampled distance from zero to
/// the Clarke set. Small values certify numerical critical points.
pub fn critical_residual(field: &ScalarField, x: &[f64], params: &HullParams) -> Result<f64> {
    let hull = sample_hull(field, x, params)?;
    Ok(norm(hull.min_norm()))
}

/// Outcome of the `h0` calibration for the uniform difference-quotient bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H0Calibration {
    pub h0: f64,
    pub halvings: usize,
    /// Violations on the probe set at the returned `h0` (zero on success).
    pub violations: usize,
    pub probes: usize,
}

impl H0Calibration {
    pub fn succeeded(&self) -> bool {
        self.violations == 0
    }
}

/// Starting value of the `h0` search.
pub const H0_START: f64 = 0.1;
const H0_MAX_HALVINGS: usize = 40;

/// Finds `h0` such that for probes `y` within `h0` of the compact set
/// `centers`, `h in (0, h0]` and `v` in the closed unit ball,
/// `(f(y + h v) - f(y)) / h < f°(x; v) + epsilon`, where `x` is the center
/// nearest to `y` and `f°` is evaluated on `hulls[x]`. Starts at
/// [`H0_START`] and halves until the probe set shows no violation.
pub fn calibrate_h0(
    field: &ScalarField,
    centers: &[Vec<f64>],
    hulls: &[GradientHull],
    epsilon: f64,
    probes: usize,
    seed: u64,
) -> Result<H0Calibration> {
    if centers.is_empty() {
        return Ok(H0Calibration {
            h0: H0_START,
            halvings: 0,
            violations: 0,
            probes: 0,
        });
    }
    assert_eq!(centers.len(), hulls.len());
    let dim = field.dim();
    let mut h0 = H0_START;
    let mut violations = 0;
    for halvings in 0..=H0_MAX_HALVINGS {
        let mut r = rng::stream(seed, 0x40 + halvings as u64);
        violations = 0;
        for _ in 0..probes {
            let i = rand::Rng::random_range(&mut r, 0..centers.len());
            let y = linalg::add(&centers[i], &rng::in_ball(&mut r, dim, h0));
            let h = h0 * (1.0 - rand::Rng::random::<f64>(&mut r));
            let v = rng::in_ball(&mut r, dim, 1.0);
            let nearest = nearest_index(centers, &y);
            let q = (field.eval(&linalg::axpy(&y, h, &v))? - field.eval(&y)?) / h;
            if !(q < directional_upper(&hulls[nearest], &v) + epsilon) {
                violations += 1;
            }
        }
        if violations == 0 {
            return Ok(H0Calibration {
                h0,
                halvings,
                violations,
                probes,
            });
        }
        if halvings < H0_MAX_HALVINGS {
            h0 *= 0.5;
        }
    }
    Ok(H0Calibration {
        h0,
        halvings: H0_MAX_HALVINGS,
        violations,
        probes,
    })
}

pub(crate) fn nearest_index(centers: &[Vec<f64>], y: &[f64]) -> usize {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, linalg::dist(c, y)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hull_of(gens: Vec<Vec<f64>>) -> GradientHull {
        let dim = gens[0].len();
        GradientHull::from_generators(vec![0.0; dim], gens, 1.0)
    }

    fn field(name: &str) -> ScalarField {
        ScalarField::corpus(name, 2).unwrap()
    }

    #[test]
    fn smooth_point_hull_degenerates() {
        let h = sample_hull(&field("double_well"), &[1.0, 1.0], &HullParams::new(1e-6, 16, 1)).unwrap();
        for g in &h.generators {
            assert!(linalg::dist(g, &[0.0, 2.0]) < 1e-4, "{g:?}");
        }
    }

    #[test]
    fn nonsmooth_well_hull_has_two_branches() {
        let h = sample_hull(&field("nonsmooth_well"), &[1.0, 0.0], &HullParams::new(1e-3, 32, 2)).unwrap();
        let (mut left, mut right) = (0, 0);
        for g in &h.generators {
            if linalg::dist(g, &[-2.0, 0.0]) < 1e-2 {
                left += 1;
            } else if linalg::dist(g, &[2.0, 0.0]) < 1e-2 {
                right += 1;
            } else {
                panic!("generator {g:?} off both branches");
            }
        }
        assert!(left > 0 && right > 0);
    }

    #[test]
    fn abs_hull_extreme_points() {
        let h = sample_hull(&field("abs_x1"), &[0.0, 0.0], &HullParams::new(1e-3, 32, 3)).unwrap();
        assert!(h.generators.iter().all(|g| g[0].abs() == 1.0 && g[1].abs() < 1e-12));
        assert!(h.generators.iter().any(|g| g[0] == 1.0));
        assert!(h.generators.iter().any(|g| g[0] == -1.0));
    }

    #[test]
    fn directional_upper_examples() {
        let smooth = sample_hull(&field("double_well"), &[1.0, 1.0], &HullParams::new(1e-6, 16, 1)).unwrap();
        assert!((directional_upper(&smooth, &[0.0, 1.0]) - 2.0).abs() < 1e-3);
        let abs = sample_hull(&field("abs_x1"), &[0.0, 0.0], &HullParams::new(1e-3, 32, 3)).unwrap();
        assert!((directional_upper(&abs, &[1.0, 0.0]) - 1.0).abs() < 1e-2);
        assert!((directional_upper(&abs, &[-1.0, 0.0]) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn min_norm_examples() {
        assert_eq!(min_norm_point(&[vec![2.0, 0.0]]).point, vec![2.0, 0.0]);
        let m = min_norm_point(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).point;
        assert!(norm(&m) < 1e-12);
        let m = min_norm_point(&[vec![1.0, 1.0], vec![1.0, -1.0]]).point;
        assert!(linalg::dist(&m, &[1.0, 0.0]) < 1e-12, "{m:?}");
    }

    #[test]
    fn min_norm_against_brute_force_segment() {
        // Oracle: minimize |t a + (1 - t) b| over 10^6 grid values of t.
        let a = [1.0, 1.0];
        let b = [1.0, -1.0];
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=1_000_000 {
            let t = k as f64 / 1e6;
            let p = [t * a[0] + (1.0 - t) * b[0], t * a[1] + (1.0 - t) * b[1]];
            let n = norm(&p);
            if n < best.0 {
                best = (n, t);
            }
        }
        assert!((best.0 - 1.0).abs() < 1e-12 && (best.1 - 0.5).abs() < 1e-6);
        let m = min_norm_point(&[a.to_vec(), b.to_vec()]).point;
        assert!((norm(&m) - best.0).abs() < 1e-9);
    }

    #[test]
    fn min_norm_triangle_containing_origin_and_face() {
        let m = min_norm_point(&[vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).point;
        assert!(norm(&m) < 1e-12);
        // Closest point on the face x = 2 of a triangle.
        let m = min_norm_point(&[vec![2.0, -1.0], vec![2.0, 3.0], vec![5.0, 0.0]]).point;
        assert!(linalg::dist(&m, &[2.0, 0.0]) < 1e-12, "{m:?}");
    }

    #[test]
    fn pseudo_gradient_examples() {
        let v = pseudo_gradient(&hull_of(vec![vec![4.0, 0.0]]), 1.0);
        assert_eq!(v, PseudoGradient::Direction(vec![0.75, 0.0]));
        assert_eq!(dot(&[4.0, 0.0], v.direction().unwrap()), 3.0);

        let v = pseudo_gradient(&hull_of(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]), 0.1);
        assert!(matches!(v, PseudoGradient::Fails { .. }));

        let v = pseudo_gradient(&hull_of(vec![vec![1.0, 1.0], vec![1.0, -1.0]]), 0.4);
        let d = v.direction().unwrap();
        assert!(linalg::dist(d, &[0.75, 0.0]) < 1e-12);
        assert!(dot(&[1.0, 1.0], d) > 0.4 && dot(&[1.0, -1.0], d) > 0.4);
    }

    #[test]
    fn critical_residual_examples() {
        let p = HullParams::new(1e-6, 16, 5);
        assert!(critical_residual(&field("double_well"), &[0.0, 0.0], &p).unwrap() <= 1e-4);
        assert!(critical_residual(&field("nonsmooth_well"), &[0.0, 0.0], &p).unwrap() <= 1e-4);
        let r = critical_residual(&field("broughton"), &[1.0, 1.0], &p).unwrap();
        assert!((r - 10f64.sqrt()).abs() < 1e-3, "{r}");
    }

    #[test]
    fn hulls_are_deterministic() {
        let p = HullParams::new(1e-2, 16, 9);
        let f = field("nonsmooth_well");
        let a = sample_hull(&f, &[0.99, 0.1], &p).unwrap();
        let b = sample_hull(&f, &[0.99, 0.1], &p).unwrap();
        assert_eq!(a.generators, b.generators);
    }

    #[test]
    fn calibration_shrinks_until_clean() {
        let f = field("double_well");
        let centers = vec![vec![0.0, 0.3]];
        let hulls = vec![sample_hull(&f, &centers[0], &HullParams::new(0.05, 16, 4)).unwrap()];
        let cal = calibrate_h0(&f, &centers, &hulls, 0.25, 100, 8).unwrap();
        assert!(cal.succeeded());
        assert!(cal.h0 <= H0_START);
    }
}
