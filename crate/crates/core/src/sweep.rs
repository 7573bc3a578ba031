//! Tangency sweeps: points of spheres where the gradient is radial, traced
//! over growing radii, and the limits of `f` along those branches.
//!
//! In the plane the tangency condition on the circle of radius `R` is the
//! zero set of `g(theta) = x1 df/dx2 - x2 df/dx1`, isolated by sign changes
//! and bisection. In higher dimensions it is found by multistart descent of
//! the tangential gradient on the sphere.

use std::f64::consts::TAU;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{self, dot, norm};
use crate::par;
use crate::rng;

/// Residual bound for planar roots.
pub const TOL_SWEEP_CIRCLE: f64 = 1e-8;
/// Residual bound for sphere multistart minimizers.
pub const TOL_SWEEP_SPHERE: f64 = 1e-4;
/// Values closer than this are one cluster.
pub const TOL_CLUSTER: f64 = 0.05;
/// Branches with `|f|` above this at the largest radius diverge.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Angular bisection tolerance.
pub const THETA_TOL: f64 = 1e-12;
/// Multistart points per dimension for [`sweep_sphere`].
pub const STARTS_PER_DIM: usize = 50;
/// Angular deduplication distance for sphere minimizers.
pub const DEDUP_ANGLE: f64 = 2e-2;

/// A tangency point on one sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Polar angle in `[0, 2 pi)`; planar sweeps only.
    pub theta: Option<f64>,
    pub x: Vec<f64>,
    pub f: f64,
    /// Tangential gradient norm relative to the largest gradient norm seen
    /// on the sphere.
    pub residual: f64,
}

/// Tangency points on one circle or sphere.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusSweep {
    pub r: f64,
    pub points: Vec<SweepPoint>,
    /// Planar arcs `[lo, hi]` on which `g` vanishes at every sample.
    pub plateaus: Vec<(f64, f64)>,
    /// Set by sphere sweeps when nearly every start is already tangent.
    pub plateau: bool,
}

fn circle_point(r: f64, theta: f64, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = r * theta.cos();
    x[1] = r * theta.sin();
    x
}

fn g_at(field: &ScalarField, r: f64, theta: f64) -> Result<(f64, f64)> {
    let x = circle_point(r, theta, 2);
    let grad = field.branch_gradient(&x)?;
    Ok((x[0] * grad[1] - x[1] * grad[0], norm(&grad)))
}

/// Zeros of `g` on the circle of radius `r`.
///
/// Samples where `g` is exactly zero are roots. Every strict sign change
/// between neighbouring samples is bisected to [`THETA_TOL`]. Runs of three
/// or more vanishing samples are reported as plateaus instead.
pub fn sweep_circle(field: &ScalarField, r: f64, resolution: usize) -> Result<RadiusSweep> {
    if field.dim() != 2 {
        return Err(Error::InvalidArgument(format!("sweep_circle needs dimension 2, got {}", field.dim())));
    }
    if !(r > 0.0) || resolution < 3 {
        return Err(Error::InvalidArgument("sweep_circle needs r > 0 and resolution >= 3".into()));
    }
    let thetas: Vec<f64> = (0..resolution).map(|k| TAU * k as f64 / resolution as f64).collect();
    let samples = par::map_indexed(&thetas, |_, &t| g_at(field, r, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let g_scale = samples.iter().map(|s| s.1).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let g: Vec<f64> = samples.iter().map(|s| s.0).collect();

    let mut plateaus = Vec::new();
    let mut in_plateau = vec![false; resolution];
    let zero = |v: f64| v == 0.0;
    if g.iter().all(|&v| zero(v)) {
        plateaus.push((0.0, TAU));
        in_plateau.iter_mut().for_each(|p| *p = true);
    } else {
        let start = g.iter().position(|&v| !zero(v)).unwrap();
        let mut k = 0;
        while k < resolution {
            let i = (start + k) % resolution;
            if zero(g[i]) {
                let mut len = 0;
                while len < resolution && zero(g[(i + len) % resolution]) {
                    len += 1;
                }
                if len >= 3 {
                    for j in 0..len {
                        in_plateau[(i + j) % resolution] = true;
                    }
                    plateaus.push((thetas[i], thetas[(i + len - 1) % resolution]));
                }
                k += len;
            } else {
                k += 1;
            }
        }
    }

    let mut roots = Vec::new();
    for i in 0..resolution {
        if in_plateau[i] {
            continue;
        }
        let j = (i + 1) % resolution;
        if zero(g[i]) {
            roots.push(thetas[i]);
        } else if !zero(g[j]) && (g[i] < 0.0) != (g[j] < 0.0) {
            let hi = if j == 0 { TAU } else { thetas[j] };
            roots.push(bisect_theta(field, r, thetas[i], hi, g[i])? % TAU);
        }
    }
    let points = roots
        .into_iter()
        .map(|t| -> Result<SweepPoint> {
            let x = circle_point(r, t, 2);
            let (gv, _) = g_at(field, r, t)?;
            Ok(SweepPoint {
                theta: Some(t),
                f: field.eval(&x)?,
                x,
                residual: gv.abs() / (r * g_scale),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadiusSweep {
        r,
        points,
        plateaus,
        plateau: false,
    })
}

fn bisect_theta(field: &ScalarField, r: f64, mut lo: f64, mut hi: f64, g_lo: f64) -> Result<f64> {
    let neg_lo = g_lo < 0.0;
    while hi - lo > THETA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (gm, _) = g_at(field, r, mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tangential part of `v` relative to the radial direction of `x`.
fn tangential(x: &[f64], v: &[f64]) -> Vec<f64> {
    let xx = dot(x, x);
    linalg::axpy(v, -dot(v, x) / xx, x)
}

/// `|P grad f| / scale` where `P` removes the radial component.
fn sphere_residual(field: &ScalarField, x: &[f64], scale: f64) -> Result<f64> {
    let grad = field.branch_gradient(x)?;
    Ok(norm(&tangential(x, &grad)) / scale)
}

/// Orthonormal basis of the tangent space of the sphere at `x`.
fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let u = linalg::scale(x, 1.0 / norm(x));
    let mut basis: Vec<Vec<f64>> = vec![u];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for b in &basis {
            e = linalg::axpy(&e, -dot(&e, b), b);
        }
        let en = norm(&e);
        if en > 1e-6 {
            basis.push(linalg::scale(&e, 1.0 / en));
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Levenberg-Marquardt on `P grad f = 0` over the sphere of radius `r`,
/// in local tangent coordinates with a forward-difference Jacobian.
/// Returns the final point and its residual `|P grad f| / scale`.
fn descend_on_sphere(field: &ScalarField, x0: &[f64], r: f64, scale: f64, iters: usize) -> Result<(Vec<f64>, f64)> {
    let residual_vec = |x: &[f64]| -> Result<Vec<f64>> { Ok(tangential(x, &field.branch_gradient(x)?)) };
    let mut x = linalg::scale(x0, r / norm(x0));
    let mut fx = residual_vec(&x)?;
    let mut cost = norm(&fx);
    let mut mu = 1e-3;
    for _ in 0..iters {
        if cost / scale <= 1e-14 {
            break;
        }
        let basis = tangent_basis(&x);
        let m = basis.len();
        let h = 1e-7 * r;
        let mut jac = Vec::with_capacity(m);
        for b in &basis {
            let y = linalg::axpy(&x, h, b);
            let y = linalg::scale(&y, r / norm(&y));
            let fy = residual_vec(&y)?;
            jac.push(linalg::scale(&linalg::sub(&fy, &fx), 1.0 / h));
        }
        let mut jtj = vec![0.0; m * m];
        let mut jtf = vec![0.0; m];
        for i in 0..m {
            jtf[i] = -dot(&jac[i], &fx);
            for k in 0..m {
                jtj[i * m + k] = dot(&jac[i], &jac[k]);
            }
        }
        let diag = (0..m).map(|i| jtj[i * m + i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut accepted = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[i * m + i] += mu * diag;
            }
            let Some(dy) = linalg::solve_dense(a, jtf.clone(), 0.0) else {
                mu *= 10.0;
                continue;
            };
            let mut step = x.clone();
            for (b, d) in basis.iter().zip(&dy) {
                step = linalg::axpy(&step, *d, b);
            }
            let cand = linalg::scale(&step, r / norm(&step));
            let fc = residual_vec(&cand)?;
            let cc = norm(&fc);
            if cc < cost {
                x = cand;
                fx = fc;
                cost = cc;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, cost / scale))
}

/// Multistart search for tangency points on the sphere of radius `r`
/// (dimension at least 3). Returns the distinct minimizers with residual at
/// most [`TOL_SWEEP_SPHERE`]; the count is a lower bound.
pub fn sweep_sphere(field: &ScalarField, r: f64, starts: usize, seed: u64) -> Result<RadiusSweep> {
    let dim = field.dim();
    if dim < 3 {
        return Err(Error::InvalidArgument(format!("sweep_sphere needs dimension >= 3, got {dim}")));
    }
    let mut rg = rng::stream(seed, 0x5_9E4E);
    let dirs: Vec<Vec<f64>> = (0..starts).map(|_| rng::unit_vector(&mut rg, dim)).collect();
    sweep_sphere_from(field, r, &dirs)
}

/// Unit directions on a latitude-longitude grid of the 2-sphere: `n` rings
/// of `2n` points plus both poles.
pub fn lat_long_directions(n: usize) -> Vec<Vec<f64>> {
    let n = n.max(1);
    let mut out = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
    for i in 1..=n {
        let lat = std::f64::consts::PI * i as f64 / (n + 1) as f64;
        for j in 0..2 * n {
            let lon = std::f64::consts::PI * j as f64 / n as f64;
            out.push(vec![lat.sin() * lon.cos(), lat.sin() * lon.sin(), lat.cos()]);
        }
    }
    out
}

/// [`sweep_sphere`] with explicit start directions.
pub fn sweep_sphere_from(field: &ScalarField, r: f64, directions: &[Vec<f64>]) -> Result<RadiusSweep> {
    let dim = field.dim();
    if dim < 3 {
        return Err(Error::InvalidArgument(format!("sweep_sphere needs dimension >= 3, got {dim}")));
    }
    if directions.is_empty() || directions.iter().any(|d| d.len() != dim || norm(d) == 0.0) {
        return Err(Error::InvalidArgument("start directions must be nonzero and match the dimension".into()));
    }
    let starts = directions.len();
    let x0: Vec<Vec<f64>> = directions.iter().map(|d| linalg::scale(d, r / norm(d))).collect();
    let scale = x0
        .iter()
        .map(|x| field.branch_gradient(x).map(|g| norm(&g)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let initial = x0
        .iter()
        .map(|x| sphere_residual(field, x, scale))
        .collect::<Result<Vec<_>>>()?;
    let plateau = initial.iter().filter(|&&v| v <= TOL_SWEEP_SPHERE).count() * 10 >= starts * 9;

    let found = par::map_indexed(&x0, |_, x| descend_on_sphere(field, x, r, scale, 500));
    let mut points: Vec<SweepPoint> = Vec::new();
    for item in found {
        let (x, rho) = item?;
        if rho > TOL_SWEEP_SPHERE {
            continue;
        }
        let u = linalg::scale(&x, 1.0 / r);
        let dup = points.iter().position(|p| {
            let c = (dot(&u, &p.x) / r).clamp(-1.0, 1.0);
            c.acos() <= DEDUP_ANGLE
        });
        let point = SweepPoint {
            theta: None,
            f: field.eval(&x)?,
            x,
            residual: rho,
        };
        match dup {
            Some(i) if points[i].residual > rho => points[i] = point,
            Some(_) => {}
            None => points.push(point),
        }
    }
    Ok(RadiusSweep {
        r,
        points,
        plateaus: Vec::new(),
        plateau,
    })
}

/// Moves `x` along its sphere to a nearby tangency point, searching within
/// angular distance `window`. Returns `None` when nothing is found.
pub fn refine_tangency(field: &ScalarField, x: &[f64], window: f64) -> Result<Option<Vec<f64>>> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::InvalidArgument("cannot refine at the origin".into()));
    }
    if field.dim() == 2 {
        let t0 = x[1].atan2(x[0]);
        let n = 64;
        let mut best: Option<f64> = None;
        let mut prev = (t0 - window, g_at(field, r, t0 - window)?.0);
        for k in 1..=n {
            let t = t0 - window + 2.0 * window * k as f64 / n as f64;
            let gt = g_at(field, r, t)?.0;
            let root = if gt == 0.0 {
                Some(t)
            } else if prev.1 != 0.0 && (prev.1 < 0.0) != (gt < 0.0) {
                Some(bisect_theta(field, r, prev.0, t, prev.1)?)
            } else {
                None
            };
            if let Some(root) = root {
                if best.is_none_or(|b| (root - t0).abs() < (b - t0).abs()) {
                    best = Some(root);
                }
            }
            prev = (t, gt);
        }
        return Ok(best.map(|t| circle_point(r, t, 2)));
    }
    let g = field.branch_gradient(x)?;
    let scale = norm(&g).max(f64::MIN_POSITIVE);
    let (y, rho) = descend_on_sphere(field, x, r, scale, 500)?;
    let angle = (dot(x, &y) / (r * r)).clamp(-1.0, 1.0).acos();
    Ok((rho <= TOL_SWEEP_SPHERE && angle <= window).then_some(y))
}

/// Sweep over several radii.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTrace {
    pub radii: Vec<f64>,
    pub sweeps: Vec<RadiusSweep>,
}

/// How the sweep looks for tangency points.
#[derive(Debug, Clone, Copy)]
pub enum SweepMethod {
    /// Planar sign-change isolation with this many samples.
    Circle { resolution: usize },
    /// Sphere multistart with this many starts.
    Sphere { starts: usize, seed: u64 },
    /// Starts on [`lat_long_directions`] with `rings` rings (dimension 3).
    SphereGrid { rings: usize },
}

impl SweepMethod {
    pub fn default_for(dim: usize, seed: u64) -> Self {
        if dim == 2 {
            SweepMethod::Circle { resolution: 1440 }
        } else {
            SweepMethod::Sphere {
                starts: STARTS_PER_DIM * dim,
                seed,
            }
        }
    }
}

/// Runs one sweep per radius. Radii must be strictly increasing.
pub fn sweep(field: &ScalarField, radii: &[f64], method: SweepMethod) -> Result<SweepTrace> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument("sweep radii must be positive and strictly increasing".into()));
    }
    let sweeps = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| match method {
            SweepMethod::Circle { resolution } => sweep_circle(field, r, resolution),
            SweepMethod::Sphere { starts, seed } => sweep_sphere(field, r, starts, rng::derive_seed(seed, k as u64)),
            SweepMethod::SphereGrid { rings } => {
                if field.dim() != 3 {
                    return Err(Error::InvalidArgument(format!(
                        "latitude-longitude starts need dimension 3, got {}",
                        field.dim()
                    )));
                }
                sweep_sphere_from(field, r, &lat_long_directions(rings))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTrace {
        radii: radii.to_vec(),
        sweeps,
    })
}

/// `10, 20, 40, ...` up to `r_max`.
pub fn doubling_radii(r0: f64, r_max: f64) -> Vec<f64> {
    let mut out = vec![r0];
    while *out.last().unwrap() * 2.0 <= r_max * (1.0 + 1e-12) {
        out.push(out.last().unwrap() * 2.0);
    }
    out
}

/// A branch followed across radii: one point index per radius, starting at
/// radius index `first`.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub first: usize,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchFit {
    pub branch: usize,
    pub divergent: bool,
    /// `a` in the fit `f(R) = a + b / R` through the last two radii.
    pub limit: f64,
    pub slope: f64,
    pub last_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub branch_count: usize,
    /// Largest `|f(R_max) - value|` over the members.
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub clusters: Vec<Cluster>,
    pub branches: Vec<Branch>,
    pub fits: Vec<BranchFit>,
    /// `(radius index, point index)` pairs whose matching was ambiguous.
    pub ambiguities: Vec<(usize, usize)>,
}

fn direction(p: &SweepPoint) -> Vec<f64> {
    linalg::scale(&p.x, 1.0 / norm(&p.x))
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Tracks branches by nearest angle across radii, fits `a + b / R` tails and
/// clusters the finite limits within [`TOL_CLUSTER`].
///
/// A point at the next radius continues a branch when the two are mutual
/// nearest neighbours. A point claimed by two branches is recorded as an
/// ambiguity and starts nothing. A branch counts as divergent when
/// `|f(R_max)| > DIVERGENCE_THRESHOLD`, when its successive differences do
/// not contract, or when the fit misses `f(R_max)` by more than the cluster
/// tolerance. Only branches spanning every radius are fitted.
pub fn cluster_limits(trace: &SweepTrace) -> Result<ClusterReport> {
    let nr = trace.sweeps.len();
    if nr < 4 {
        return Err(Error::InvalidArgument(format!("cluster_limits needs at least 4 radii, got {nr}")));
    }
    let mut branches: Vec<Branch> = (0..trace.sweeps[0].points.len())
        .map(|i| Branch { first: 0, points: vec![i] })
        .collect();
    let mut alive: Vec<usize> = (0..branches.len()).collect();
    let mut ambiguities = Vec::new();

    for k in 1..nr {
        let prev = &trace.sweeps[k - 1].points;
        let next = &trace.sweeps[k].points;
        let dirs_next: Vec<Vec<f64>> = next.iter().map(direction).collect();
        let mut claims: Vec<Vec<usize>> = vec![Vec::new(); next.len()];
        for &b in &alive {
            let last = *branches[b].points.last().unwrap();
            let d = direction(&prev[last]);
            if let Some((j, _)) = dirs_next
                .iter()
                .enumerate()
                .map(|(j, u)| (j, angle_between(&d, u)))
                .min_by(|a, c| a.1.total_cmp(&c.1))
            {
                claims[j].push(b);
            }
        }
        let mut next_alive = Vec::new();
        for (j, owners) in claims.iter().enumerate() {
            match owners.as_slice() {
                [] => {
                    branches.push(Branch {
                        first: k,
                        points: vec![j],
                    });
                    next_alive.push(branches.len() - 1);
                }
                [b] => {
                    // Mutual nearest: no other point at radius k is closer to
                    // this branch's previous direction than `j` (true by
                    // construction), and `j` is closest to this branch among
                    // its claimants.
                    branches[*b].points.push(j);
                    next_alive.push(*b);
                }
                _ => ambiguities.push((k, j)),
            }
        }
        alive = next_alive;
    }

    let radii = &trace.radii;
    let mut fits = Vec::new();
    for (bi, b) in branches.iter().enumerate() {
        if b.first != 0 || b.points.len() != nr {
            continue;
        }
        let f: Vec<f64> = b
            .points
            .iter()
            .enumerate()
            .map(|(k, &p)| trace.sweeps[k].points[p].f)
            .collect();
        let (r1, r2) = (radii[nr - 2], radii[nr - 1]);
        let (f1, f2) = (f[nr - 2], f[nr - 1]);
        let slope = (f1 - f2) / (1.0 / r1 - 1.0 / r2);
        let limit = f2 - slope / r2;
        let d_last = (f[nr - 1] - f[nr - 2]).abs();
        let d_prev = (f[nr - 2] - f[nr - 3]).abs();
        let divergent = f2.abs() > DIVERGENCE_THRESHOLD
            || d_last > 0.75 * d_prev + 1e-9
            || (f2 - limit).abs() > TOL_CLUSTER
            || !limit.is_finite();
        fits.push(BranchFit {
            branch: bi,
            divergent,
            limit,
            slope,
            last_value: f2,
        });
    }

    let mut finite: Vec<&BranchFit> = fits.iter().filter(|f| !f.divergent).collect();
    finite.sort_by(|a, b| a.limit.total_cmp(&b.limit));
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut group: Vec<&BranchFit> = Vec::new();
    let flush = |group: &mut Vec<&BranchFit>, clusters: &mut Vec<Cluster>| {
        if group.is_empty() {
            return;
        }
        let value = group.iter().map(|f| f.limit).sum::<f64>() / group.len() as f64;
        let rate = group.iter().map(|f| (f.last_value - value).abs()).fold(0.0, f64::max);
        clusters.push(Cluster {
            value,
            branch_count: group.len(),
            rate,
        });
        group.clear();
    };
    for f in finite {
        if group.last().is_some_and(|g| f.limit - g.limit > TOL_CLUSTER) {
            flush(&mut group, &mut clusters);
        }
        group.push(f);
    }
    flush(&mut group, &mut clusters);

    Ok(ClusterReport {
        clusters,
        branches,
        fits,
        ambiguities,
    })
}

/// CSV with columns `R, theta, x1..xn, f, residual, branch`. Points outside
/// every full branch get branch `-1`.
pub fn write_sweep_csv<W: Write>(mut w: W, trace: &SweepTrace, report: &ClusterReport) -> std::io::Result<()> {
    let dim = trace
        .sweeps
        .iter()
        .flat_map(|s| s.points.first())
        .map(|p| p.x.len())
        .next()
        .unwrap_or(0);
    let mut header = vec!["R".to_string(), "theta".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend(["f".into(), "residual".into(), "branch".into()]);
    writeln!(w, "{}", header.join(","))?;
    for (k, s) in trace.sweeps.iter().enumerate() {
        for (j, p) in s.points.iter().enumerate() {
            let branch = report
                .branches
                .iter()
                .position(|b| k >= b.first && b.points.get(k - b.first) == Some(&j))
                .map_or(-1, |b| b as i64);
            let mut row = vec![format!("{:.17e}", s.r), p.theta.map_or(String::new(), |t| format!("{t:.17e}"))];
            row.extend(p.x.iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{:.17e}", p.f));
            row.push(format!("{:.17e}", p.residual));
            row.push(branch.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
    }
    Ok(())
}
