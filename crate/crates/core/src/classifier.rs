//! Verdicts on a finished run: a critical point at the pass, a tangency
//! value at infinity, or neither.

use serde::{Serialize, Serializer};

use crate::clarke::{self, HullParams};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::minimax::{radial_retract, MinimaxRun, PLPath, REstimate, RetractSettings, RoundStop};
use crate::rng;
use crate::sweep;

/// Relative orthogonal component of `v` with respect to `x`, or the
/// zero-vector sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TangencyResidual {
    Value(f64),
    /// `|v| <= 1e-14`: the point is near-critical rather than tangent.
    ZeroVector,
}

impl TangencyResidual {
    pub fn value(self) -> Option<f64> {
        match self {
            TangencyResidual::Value(v) => Some(v),
            TangencyResidual::ZeroVector => None,
        }
    }
}

impl Serialize for TangencyResidual {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TangencyResidual::Value(v) => s.serialize_f64(*v),
            TangencyResidual::ZeroVector => s.serialize_str("zero-vector"),
        }
    }
}

/// `|v - (<v,x>/<x,x>) x| / |v|`, in `[0, 1]`.
pub fn tangency_residual(x: &[f64], v: &[f64]) -> Result<TangencyResidual> {
    let xx = linalg::dot(x, x);
    if xx == 0.0 {
        return Err(Error::InvalidArgument("tangency residual is undefined at x = 0".into()));
    }
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: v.len(),
        });
    }
    let vn = linalg::norm(v);
    if vn <= 1e-14 {
        return Ok(TangencyResidual::ZeroVector);
    }
    let perp = linalg::axpy(v, -linalg::dot(v, x) / xx, x);
    Ok(TangencyResidual::Value((linalg::norm(&perp) / vn).min(1.0)))
}

/// `|x|` times the sampled distance from zero to the Clarke set at `x`.
pub fn ps_residual(field: &ScalarField, x: &[f64], params: &HullParams) -> Result<f64> {
    Ok(linalg::norm(x) * clarke::critical_residual(field, x, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Critical,
    TangencyAtInfinity,
    Inconclusive,
}

/// Thresholds used by [`classify`].
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    /// `tol_crit = crit_base (1 + G)` with `G` the largest generator norm of
    /// the witness hull.
    pub crit_base: f64,
    pub tol_tan: f64,
    /// `tol_val = val_factor * epsilon` of the final round.
    pub val_factor: f64,
    /// Hull used for residuals at candidate critical points.
    pub hull: HullParams,
    /// Hull radius for tangency witnesses, relative to `|x_k|`.
    pub tangency_radius: f64,
    /// Single-linkage radius, in units of the hull radius.
    pub cluster_factor: f64,
    /// Rounds inspected by either branch.
    pub tail: usize,
}

impl Tolerances {
    pub fn new(hull: HullParams) -> Self {
        Self {
            crit_base: 1e-3,
            tol_tan: 0.05,
            val_factor: 2.0,
            hull,
            tangency_radius: 1e-9,
            cluster_factor: 10.0,
            tail: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalWitness {
    pub x: Vec<f64>,
    pub f: f64,
    pub residual: f64,
    pub tol_crit: f64,
    /// Residual with half the hull radius and a fresh seed.
    pub recheck_residual: f64,
    pub cluster_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TangencyEntry {
    pub round: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub f: f64,
    pub norm: f64,
    pub residual: TangencyResidual,
    /// Whether the point was moved along its sphere onto a tangency point.
    pub refined: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub rounds: usize,
    pub iterations: usize,
    pub rejected_steps: usize,
    pub near_critical_events: usize,
    pub r_estimates: Vec<Option<f64>>,
    pub escaping: bool,
    pub bounded: bool,
    pub r_escape: Option<f64>,
    pub clusters: usize,
    pub retract_failures: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub c_best: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_witness: Option<CriticalWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangency_trace: Option<Vec<TangencyEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ps_residual_trace: Option<Vec<f64>>,
    pub tol_val: f64,
    pub tolerances: Tolerances,
    pub diagnostics: Diagnostics,
}

/// Whether the radius estimates point to escaping paths: some round found
/// no feasible radius, or the last `tail` estimates strictly increase.
/// Returns the index of the first round of the escaping tail.
fn escaping_tail(r: &[REstimate], tail: usize) -> Option<usize> {
    if let Some(first) = r.iter().position(|e| e.is_infinite()) {
        return Some(first.min(r.len().saturating_sub(tail)));
    }
    if r.len() < tail || tail < 2 {
        return None;
    }
    let last: Vec<f64> = r[r.len() - tail..].iter().map(|e| e.finite().unwrap()).collect();
    last.windows(2).all(|w| w[1] > w[0]).then(|| r.len() - tail)
}

/// Single-linkage clusters of `points` at `radius`, as index lists.
fn single_linkage(points: &[Vec<f64>], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if linalg::dist(&points[i], &points[j]) <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => g.1.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

/// Compass search on the residual at a finer hull, starting from `x`. The
/// sampled residual vanishes on a whole neighbourhood of a critical point
/// at the classification radius, so the finer hull is what separates it.
fn sharpen_witness(field: &ScalarField, x: &[f64], fine: &HullParams) -> Result<(Vec<f64>, f64)> {
    let mut best = x.to_vec();
    let mut best_r = clarke::critical_residual(field, &best, fine)?;
    let mut step = 4.0 * fine.radius;
    let dim = x.len();
    while step >= fine.radius / 8.0 {
        let mut improved = false;
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut y = best.clone();
                y[i] += sign * step;
                let r = clarke::critical_residual(field, &y, fine)?;
                if r < best_r {
                    best = y;
                    best_r = r;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, best_r))
}

fn classify_bounded(run: &MinimaxRun, tol: &Tolerances, tol_val: f64, diag: &mut Diagnostics) -> Result<Option<CriticalWitness>> {
    let field = &run.problem.field;
    let start = run.rounds.len().saturating_sub(2);
    let mut points = Vec::new();
    for rec in &run.rounds[start..] {
        points.extend(rec.outcome.events.iter().map(|e| e.x.clone()));
        if matches!(rec.outcome.stop, RoundStop::Stalled | RoundStop::Critical) {
            points.extend(rec.outcome.high_set.iter().cloned());
        }
    }
    if points.is_empty() {
        diag.notes.push("no near-critical events or stalled high vertices to harvest".into());
        return Ok(None);
    }
    let clusters = single_linkage(&points, tol.cluster_factor * tol.hull.radius);
    diag.clusters = clusters.len();
    let fine = tol.hull.with_radius(tol.hull.radius / 8.0);

    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for members in &clusters {
        let mut pick: Option<(Vec<f64>, f64)> = None;
        for &i in members {
            let r = clarke::critical_residual(field, &points[i], &fine)?;
            if pick.as_ref().is_none_or(|p| r < p.1) {
                pick = Some((points[i].clone(), r));
            }
        }
        let (x, _) = pick.expect("clusters are non-empty");
        let (x, r) = sharpen_witness(field, &x, &fine)?;
        if best.as_ref().is_none_or(|b| r < b.1) {
            best = Some((x, r, members.len()));
        }
    }
    let (x, _, size) = best.expect("at least one cluster");
    let hull = clarke::sample_hull(field, &x, &tol.hull)?;
    let residual = linalg::norm(hull.min_norm());
    let tol_crit = tol.crit_base * (1.0 + hull.max_generator_norm());
    let recheck = tol.hull.with_radius(tol.hull.radius / 2.0).with_seed(rng::derive_seed(tol.hull.seed, 0xC4EC));
    let recheck_residual = clarke::critical_residual(field, &x, &recheck)?;
    let f = field.eval(&x)?;
    let witness = CriticalWitness {
        x,
        f,
        residual,
        tol_crit,
        recheck_residual,
        cluster_size: size,
    };
    let ok = residual <= tol_crit && recheck_residual <= tol_crit && (f - run.c_best).abs() <= tol_val;
    if !ok {
        diag.notes.push(format!(
            "best cluster fails: residual {residual:.3e}, recheck {recheck_residual:.3e}, tol_crit {tol_crit:.3e}, |f - c_best| {:.3e}, tol_val {tol_val:.3e}",
            (f - run.c_best).abs()
        ));
    }
    Ok(Some(witness).filter(|_| ok).or_else(|| {
        diag.notes.push("critical witness rejected".into());
        None
    }))
}

/// Harvest point of one round. Takes the highest vertex on the outer
/// sphere of the retracted path and moves it along the sphere onto a nearby
/// tangency point. The result must have `f` in `[c_best, c_best + epsilon]`;
/// the unmoved vertex is used when only it qualifies.
fn harvest(field: &ScalarField, path: &PLPath, c_best: f64, epsilon: f64) -> Result<Option<(Vec<f64>, bool)>> {
    let outer = path.max_norm();
    let tol = 1e-9 * outer.max(1.0);
    let in_band = |f: f64| f >= c_best && f <= c_best + epsilon;
    let n = path.len();
    let pick = path
        .vertices()
        .iter()
        .zip(path.values())
        .enumerate()
        .filter(|(i, (v, _))| *i != 0 && *i != n - 1 && linalg::norm(v) >= outer - tol)
        .max_by(|a, b| a.1 .1.total_cmp(b.1 .1));
    let Some((_, (x, &fx))) = pick else {
        return Ok(None);
    };
    let spacing = path.length() / (n - 1) as f64;
    let window = (4.0 * spacing / outer).min(0.5);
    if let Some(y) = sweep::refine_tangency(field, x, window)? {
        if in_band(field.eval(&y)?) {
            return Ok(Some((y, true)));
        }
    }
    Ok(in_band(fx).then(|| (x.clone(), false)))
}

fn classify_escaping(
    run: &MinimaxRun,
    tol: &Tolerances,
    tail_start: usize,
    diag: &mut Diagnostics,
) -> Result<(Vec<TangencyEntry>, Vec<f64>)> {
    let field = &run.problem.field;
    let mut trace = Vec::new();
    let mut ps = Vec::new();
    for (k, rec) in run.rounds.iter().enumerate().skip(tail_start) {
        let (path, big_r) = match (&rec.r_estimate.value, &rec.r_estimate.witness) {
            (REstimate::Finite(r), Some(w)) => (w, *r),
            _ => (&rec.outcome.path, rec.outcome.path.max_norm()),
        };
        let settings = RetractSettings::for_epsilon(rec.epsilon, rng::derive_seed(tol.hull.seed, 0x2E7 + k as u64));
        let retracted = radial_retract(path, field, big_r, rec.epsilon, run.c_best, &settings)?;
        diag.retract_failures += retracted.failures;
        let Some((x, refined)) = harvest(field, &retracted.path, run.c_best, rec.epsilon)? else {
            diag.notes.push(format!("round {k}: no outer vertex with f in [c_best, c_best + epsilon]"));
            continue;
        };
        let norm = linalg::norm(&x);
        let params = tol.hull.with_radius(tol.tangency_radius * norm.max(1.0));
        let hull = clarke::sample_hull(field, &x, &params)?;
        let v = hull.min_norm().to_vec();
        let residual = tangency_residual(&x, &v)?;
        ps.push(norm * linalg::norm(&v));
        trace.push(TangencyEntry {
            round: k,
            f: field.eval(&x)?,
            norm,
            x,
            v,
            residual,
            refined,
        });
    }
    Ok((trace, ps))
}

/// Applies the dichotomy to a finished run.
///
/// Escaping evidence takes precedence: if any round found no feasible
/// radius, or the last `tail` radius estimates strictly increase, the run is
/// checked for a tangency trace. Otherwise a final radius below `r_max / 2`
/// sends it to the critical-point check. Anything else is inconclusive.
pub fn classify(run: &MinimaxRun, tol: &Tolerances) -> Result<Classification> {
    if !run.is_complete() || run.rounds.is_empty() {
        return Err(Error::InvalidArgument("classify needs a run that completed its schedule".into()));
    }
    let r = run.r_estimates();
    let final_eps = *run.epsilon_schedule.last().unwrap();
    let tol_val = tol.val_factor * final_eps;
    let mut diag = Diagnostics {
        rounds: run.rounds.len(),
        iterations: run.rounds.iter().map(|x| x.outcome.iterations).sum(),
        rejected_steps: run.rounds.iter().map(|x| x.outcome.rejected).sum(),
        near_critical_events: run.rounds.iter().map(|x| x.outcome.events.len()).sum(),
        r_estimates: r.iter().map(|e| e.finite()).collect(),
        ..Default::default()
    };
    let mut out = Classification {
        verdict: Verdict::Inconclusive,
        c_best: run.c_best,
        critical_witness: None,
        tangency_trace: None,
        ps_residual_trace: None,
        tol_val,
        tolerances: tol.clone(),
        diagnostics: Diagnostics::default(),
    };

    if let Some(start) = escaping_tail(&r, tol.tail) {
        diag.escaping = true;
        let r_escape = r[start].finite().or_else(|| r[..start].iter().rev().find_map(|e| e.finite()));
        diag.r_escape = r_escape;
        let (trace, ps) = classify_escaping(run, tol, start, &mut diag)?;
        let floor = r_escape.unwrap_or(0.0) * (1.0 - 1e-12);
        let n = trace.len();
        // Entry k may sit up to its own round's epsilon above c_best, so the
        // value slack grows with the distance from the final round.
        let last_round = run.rounds.len() - 1;
        let tangent = n >= tol.tail
            && trace[n - tol.tail..]
                .iter()
                .all(|e| e.residual.value().is_some_and(|v| v <= tol.tol_tan))
            && trace.windows(2).all(|w| w[1].norm > w[0].norm)
            && trace.iter().all(|e| e.norm >= floor)
            && trace
                .iter()
                .all(|e| (e.f - run.c_best).abs() <= tol_val * (1.0 + (last_round - e.round) as f64));
        if tangent {
            out.verdict = Verdict::TangencyAtInfinity;
        } else {
            diag.notes.push("escaping radii without a valid tangency trace".into());
        }
        out.tangency_trace = Some(trace);
        out.ps_residual_trace = Some(ps);
    } else if r.last().and_then(|e| e.finite()).is_some_and(|v| v < run.r_max / 2.0) {
        diag.bounded = true;
        if let Some(w) = classify_bounded(run, tol, tol_val, &mut diag)? {
            out.verdict = Verdict::Critical;
            out.critical_witness = Some(w);
        }
    } else {
        diag.notes.push("radius estimates neither bounded nor escaping".into());
    }
    out.diagnostics = diag;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(x: &[f64], v: &[f64]) -> f64 {
        tangency_residual(x, v).unwrap().value().unwrap()
    }

    #[test]
    fn residual_examples() {
        assert_eq!(val(&[1.0, 0.0], &[2.0, 0.0]), 0.0);
        assert_eq!(val(&[1.0, 0.0], &[0.0, 3.0]), 1.0);
        assert!(val(&[3.0, 4.0], &[-3.0, -4.0]) < 1e-15);
        assert_eq!(tangency_residual(&[1.0, 0.0], &[0.0, 1e-15]).unwrap(), TangencyResidual::ZeroVector);
        assert!(tangency_residual(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ps_residual_examples() {
        let p = HullParams::new(1e-3, 16, 1);
        let f = ScalarField::corpus("linear", 2).unwrap();
        assert!((ps_residual(&f, &[7.0, 0.0], &p).unwrap() - 7.0).abs() < 1e-9);
        let f = ScalarField::corpus("double_well", 2).unwrap();
        assert_eq!(ps_residual(&f, &[0.0, 0.0], &p).unwrap(), 0.0);
    }

    #[test]
    fn escaping_rule() {
        use REstimate::*;
        assert_eq!(escaping_tail(&[Finite(1.0), Finite(1.0), Finite(1.0)], 3), None);
        assert_eq!(escaping_tail(&[Finite(1.0), Finite(2.0), Finite(3.0), Finite(4.0)], 3), Some(1));
        assert_eq!(escaping_tail(&[Finite(1.0), Finite(2.0), Finite(2.0)], 3), None);
        assert_eq!(escaping_tail(&[Finite(1.0), InfiniteAtBudget], 3), Some(0));
    }

    #[test]
    fn linkage_groups() {
        let pts = vec![vec![0.0], vec![0.4], vec![0.8], vec![3.0]];
        let mut g = single_linkage(&pts, 0.5);
        g.sort();
        assert_eq!(g, vec![vec![0, 1, 2], vec![3]]);
    }
}
